"""Network aggregation vs brute force, partner ranking and force layout."""

import math
from decimal import Decimal
from itertools import combinations

import numpy as np
import pytest

from rimap import collaboration_graph as cg
from rimap.entity_resolution import Organisation
from rimap.model import OrgType, Participation, Role


def org(org_id, home=True, country="ES", name=None):
    return Organisation(
        org_id=org_id, display_name=name or org_id.upper(),
        aliases=frozenset({org_id}), org_type=OrgType.OTHER, country=country,
        province="Barcelona" if home else "", is_home_region=home,
    )


def part(pid, org_id, amount="100"):
    return (
        Participation(project_id=pid, raw_org_name=org_id, country="ES",
                      province="", org_type_raw="", role=Role.PARTNER,
                      contribution=Decimal(amount)),
        org_id,
    )


def test_investment_sums_over_filtered_projects():
    orgs = {"a": org("a")}
    parts = [part("p1", "a", "100000"), part("p2", "a", "200000"),
             part("p3", "a", "50000")]
    graph = cg.build_graph(["p1", "p2"], parts, orgs)
    assert graph.nodes[0].investment == Decimal("300000")
    assert graph.nodes[0].project_count == 2


def test_edge_weight_counts_shared_projects():
    orgs = {"a": org("a"), "b": org("b")}
    parts = []
    for pid in ("p1", "p2", "p3"):
        parts += [part(pid, "a"), part(pid, "b")]
    parts += [part("p4", "a")]
    graph = cg.build_graph(["p1", "p2", "p3", "p4"], parts, orgs)
    assert len(graph.edges) == 1
    edge = graph.edges[0]
    assert (edge.org_a, edge.org_b, edge.weight) == ("a", "b", 3)

    # excluding the shared projects removes the edge
    graph2 = cg.build_graph(["p4"], parts, orgs)
    assert graph2.edges == []


def test_canonical_edge_ordering_and_no_self_loops():
    orgs = {"z": org("z"), "a": org("a")}
    parts = [part("p1", "z"), part("p1", "a"), part("p1", "z")]
    graph = cg.build_graph(["p1"], parts, orgs)
    assert len(graph.edges) == 1
    assert graph.edges[0].org_a < graph.edges[0].org_b


def test_foreign_orgs_excluded_from_nodes():
    orgs = {"a": org("a"), "x": org("x", home=False, country="DE")}
    parts = [part("p1", "a"), part("p1", "x")]
    graph = cg.build_graph(["p1"], parts, orgs)
    assert [n.org_id for n in graph.nodes] == ["a"]
    assert graph.edges == []


def brute_force(project_ids, parts, orgs):
    sel = set(project_ids)
    inv, cnt, edges = {}, {}, {}
    for pid in sel:
        home = sorted({oid for p, oid in parts
                       if p.project_id == pid and orgs[oid].is_home_region})
        for a, b in combinations(home, 2):
            edges[(a, b)] = edges.get((a, b), 0) + 1
    for p, oid in parts:
        if p.project_id in sel and orgs[oid].is_home_region:
            inv[oid] = inv.get(oid, Decimal(0)) + p.contribution
            cnt.setdefault(oid, set()).add(p.project_id)
    return inv, {k: len(v) for k, v in cnt.items()}, edges


def test_brute_force_equivalence_on_fixture(snapshot):
    ids = [p.project_id for p in snapshot.corpus.projects][:200]
    graph = cg.build_graph(ids, snapshot.participation_orgs, snapshot.organisations)
    inv, cnt, edges = brute_force(ids, snapshot.participation_orgs,
                                  snapshot.organisations)
    assert {n.org_id: n.investment for n in graph.nodes} == inv
    assert {n.org_id: n.project_count for n in graph.nodes} == cnt
    assert {(e.org_a, e.org_b): e.weight for e in graph.edges} == edges


def test_investment_conservation(snapshot):
    ids = [p.project_id for p in snapshot.corpus.projects]
    graph = cg.build_graph(ids, snapshot.participation_orgs, snapshot.organisations)
    total_home = sum(
        (p.contribution for p, oid in snapshot.participation_orgs
         if snapshot.organisations[oid].is_home_region),
        Decimal(0),
    )
    assert sum((n.investment for n in graph.nodes), Decimal(0)) == total_home


def test_monotonicity_under_filter_growth(snapshot):
    ids = [p.project_id for p in snapshot.corpus.projects]
    small = cg.build_graph(ids[:100], snapshot.participation_orgs,
                           snapshot.organisations)
    large = cg.build_graph(ids[:101], snapshot.participation_orgs,
                           snapshot.organisations)
    small_inv = {n.org_id: n.investment for n in small.nodes}
    large_inv = {n.org_id: n.investment for n in large.nodes}
    for org_id, inv in small_inv.items():
        assert large_inv[org_id] >= inv
    small_edges = {(e.org_a, e.org_b): e.weight for e in small.edges}
    large_edges = {(e.org_a, e.org_b): e.weight for e in large.edges}
    for pair, weight in small_edges.items():
        assert large_edges[pair] >= weight


def test_external_partner_ranking():
    orgs = {
        "home1": org("home1"), "home2": org("home2"),
        "ext1": org("ext1", home=False, country="DE", name="Zeta"),
        "ext2": org("ext2", home=False, country="FR", name="Alpha"),
        "ext3": org("ext3", home=False, country="IT", name="Beta"),
    }
    parts = []
    for pid in ("p1", "p2", "p3", "p4", "p5"):
        parts.append(part(pid, "ext1"))
    parts += [part("p1", "home1"), part("p2", "home2")]
    for pid in ("p1", "p2", "p3"):
        parts.append(part(pid, "ext2"))
    for pid in ("p4", "p5", "p6"):
        parts.append(part(pid, "ext3"))
    ids = [f"p{i}" for i in range(1, 7)]
    ranked = cg.rank_external_partners(ids, parts, orgs)
    assert [(r.org_id, r.shared_project_count) for r in ranked] == [
        ("ext1", 5), ("ext2", 3), ("ext3", 3),
    ]
    # counterparts: home orgs co-participating
    assert ranked[0].linked_home_orgs == frozenset({"home1", "home2"})
    # tie at 3 broken alphabetically by display name: Alpha before Beta
    assert [r.display_name for r in ranked[1:]] == ["Alpha", "Beta"]


def test_no_foreign_participants_gives_empty_list():
    orgs = {"a": org("a")}
    parts = [part("p1", "a")]
    assert cg.rank_external_partners(["p1"], parts, orgs) == []


def two_node_graph():
    return cg.CollaborationGraph(
        nodes=[cg.GraphNode("a", "A", "OTHER", Decimal(1), 1),
               cg.GraphNode("b", "B", "OTHER", Decimal(1), 1)],
        edges=[cg.GraphEdge("a", "b", 1)],
    )


def test_two_node_layout_distance_band():
    graph = two_node_graph()
    k = math.sqrt(1 / 2)
    for seed in range(10):
        pos = cg.layout_force(graph, 300, seed)
        d = math.dist(pos["a"], pos["b"])
        assert 0.5 * k <= d <= 2 * k


def test_zero_iterations_returns_initial_positions():
    graph = two_node_graph()
    rng = np.random.Generator(np.random.PCG64(17))
    expected = rng.random((2, 2))
    pos = cg.layout_force(graph, 0, 17)
    assert np.allclose([pos["a"], pos["b"]], expected)


def test_three_components_do_not_overlap():
    nodes, edges = [], []
    for names in [("a", "b", "c"), ("d", "e", "f"), ("g", "h", "i")]:
        for n in names:
            nodes.append(cg.GraphNode(n, n, "OTHER", Decimal(1), 1))
        for x, y in combinations(names, 2):
            edges.append(cg.GraphEdge(x, y, 1))
    graph = cg.CollaborationGraph(nodes=nodes, edges=edges)
    pos = cg.layout_force(graph, 300, 5)
    boxes = []
    for names in [("a", "b", "c"), ("d", "e", "f"), ("g", "h", "i")]:
        pts = np.array([pos[n] for n in names])
        boxes.append((pts[:, 0].min(), pts[:, 0].max(),
                      pts[:, 1].min(), pts[:, 1].max()))
    for b1, b2 in combinations(boxes, 2):
        disjoint = (b1[1] < b2[0] or b2[1] < b1[0]
                    or b1[3] < b2[2] or b2[3] < b1[2])
        assert disjoint


def test_layout_deterministic_per_seed():
    graph = two_node_graph()
    assert cg.layout_force(graph, 50, 3) == cg.layout_force(graph, 50, 3)
    assert cg.layout_force(graph, 50, 3) != cg.layout_force(graph, 50, 4)
