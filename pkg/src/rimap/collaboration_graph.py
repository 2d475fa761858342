"""Collaboration networks over a filtered project set.

Nodes are home-region organisations sized by their own invested
contributions; edges count shared projects between home-region pairs.
Foreign participants surface through a separate partner ranking.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from decimal import Decimal
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .entity_resolution import Organisation
from .model import Participation


@dataclass(frozen=True)
class GraphNode:
    org_id: str
    display_name: str
    org_type: str
    investment: Decimal
    project_count: int


@dataclass(frozen=True)
class GraphEdge:
    org_a: str
    org_b: str
    weight: int


@dataclass
class CollaborationGraph:
    nodes: list[GraphNode]
    edges: list[GraphEdge]
    generated_from: object | None = None

    def node_ids(self) -> list[str]:
        return [n.org_id for n in self.nodes]


@dataclass(frozen=True)
class ExternalPartner:
    org_id: str
    display_name: str
    country: str
    shared_project_count: int
    linked_home_orgs: frozenset[str]


def build_graph(
    project_ids: Iterable[str],
    participations: Sequence[tuple[Participation, str]],
    organisations: Mapping[str, Organisation],
    generated_from: object | None = None,
) -> CollaborationGraph:
    """Aggregate home-region nodes and shared-project edges for a filter."""
    selected = set(project_ids)
    investment: dict[str, Decimal] = {}
    projects_of: dict[str, set[str]] = {}
    home_orgs_by_project: dict[str, set[str]] = {}

    for part, org_id in participations:
        if part.project_id not in selected:
            continue
        org = organisations[org_id]
        if not org.is_home_region:
            continue
        investment[org_id] = investment.get(org_id, Decimal("0")) + part.contribution
        projects_of.setdefault(org_id, set()).add(part.project_id)
        home_orgs_by_project.setdefault(part.project_id, set()).add(org_id)

    nodes = [
        GraphNode(
            org_id=org_id,
            display_name=organisations[org_id].display_name,
            org_type=organisations[org_id].org_type.value,
            investment=investment[org_id],
            project_count=len(projects_of[org_id]),
        )
        for org_id in sorted(investment)
    ]

    weights: dict[tuple[str, str], int] = {}
    for orgs in home_orgs_by_project.values():
        for a, b in combinations(sorted(orgs), 2):
            weights[(a, b)] = weights.get((a, b), 0) + 1
    edges = [
        GraphEdge(org_a=a, org_b=b, weight=w)
        for (a, b), w in sorted(weights.items())
    ]
    return CollaborationGraph(nodes=nodes, edges=edges, generated_from=generated_from)


def rank_external_partners(
    project_ids: Iterable[str],
    participations: Sequence[tuple[Participation, str]],
    organisations: Mapping[str, Organisation],
    top_n: int | None = None,
) -> list[ExternalPartner]:
    """Foreign organisations ranked by filtered-project presence.

    Ties break alphabetically on display name. linked_home_orgs are the
    home-region counterparts co-participating in those projects.
    """
    selected = set(project_ids)
    foreign_projects: dict[str, set[str]] = {}
    home_by_project: dict[str, set[str]] = {}
    for part, org_id in participations:
        if part.project_id not in selected:
            continue
        if organisations[org_id].is_home_region:
            home_by_project.setdefault(part.project_id, set()).add(org_id)
        else:
            foreign_projects.setdefault(org_id, set()).add(part.project_id)

    partners = []
    for org_id, pids in foreign_projects.items():
        org = organisations[org_id]
        linked: set[str] = set()
        for pid in pids:
            linked |= home_by_project.get(pid, set())
        partners.append(ExternalPartner(
            org_id=org_id,
            display_name=org.display_name,
            country=org.country,
            shared_project_count=len(pids),
            linked_home_orgs=frozenset(linked),
        ))
    partners.sort(key=lambda p: (-p.shared_project_count, p.display_name, p.org_id))
    return partners if top_n is None else partners[:top_n]


def layout_force(
    graph: CollaborationGraph, iterations: int, seed: int
) -> dict[str, tuple[float, float]]:
    """Seeded Fruchterman-Reingold in the unit square.

    Repulsion k^2/d between all pairs, attraction d^2/k per edge scaled by
    ln(1+weight), displacement capped by a linearly cooling temperature.
    Zero iterations returns the seeded initial placement.
    """
    ids = graph.node_ids()
    n = len(ids)
    if n == 0:
        return {}
    rng = np.random.Generator(np.random.PCG64(seed))
    pos = rng.random((n, 2))
    if n == 1:
        return {ids[0]: (float(pos[0, 0]), float(pos[0, 1]))}
    index = {org_id: i for i, org_id in enumerate(ids)}
    k = math.sqrt(1.0 / n)
    edge_idx = np.array(
        [[index[e.org_a], index[e.org_b]] for e in graph.edges], dtype=np.int64
    ).reshape(-1, 2)
    edge_scale = np.array([math.log1p(e.weight) for e in graph.edges])

    t0 = 0.1
    for it in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta ** 2).sum(axis=2))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-9)
        # repulsion: k^2 / d along the separating direction
        repulse = (k * k) / (dist ** 2)
        np.fill_diagonal(repulse, 0.0)
        disp = (delta * repulse[:, :, None]).sum(axis=1)
        # attraction along each edge: d^2/k scaled by ln(1+w)
        if len(edge_idx):
            a, b = edge_idx[:, 0], edge_idx[:, 1]
            evec = pos[a] - pos[b]
            edist = np.maximum(np.sqrt((evec ** 2).sum(axis=1)), 1e-9)
            force = (edist / k) * edge_scale  # magnitude d^2/k / d applied to unit vector
            pull = evec * force[:, None]
            np.subtract.at(disp, a, pull)
            np.add.at(disp, b, pull)
        lengths = np.maximum(np.sqrt((disp ** 2).sum(axis=1)), 1e-12)
        temp = t0 * (1.0 - it / max(1, iterations))
        step = np.minimum(lengths, temp)
        pos = pos + disp / lengths[:, None] * step[:, None]
    return {org_id: (float(pos[i, 0]), float(pos[i, 1])) for org_id, i in index.items()}


def write_graph_csv(graph: CollaborationGraph, nodes_path: str | Path,
                    edges_path: str | Path) -> None:
    with open(nodes_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["orgId", "name", "orgType", "investment", "projectCount"])
        for n in graph.nodes:
            writer.writerow([n.org_id, n.display_name, n.org_type,
                             str(n.investment), n.project_count])
    with open(edges_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["orgA", "orgB", "weight"])
        for e in graph.edges:
            writer.writerow([e.org_a, e.org_b, e.weight])


def write_external_csv(partners: Sequence[ExternalPartner], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["orgId", "name", "country", "sharedProjects", "homePartners"])
        for p in partners:
            writer.writerow([p.org_id, p.display_name, p.country,
                             p.shared_project_count,
                             ";".join(sorted(p.linked_home_orgs))])
