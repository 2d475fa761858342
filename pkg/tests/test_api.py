"""HTTP API contract: every payload equals the engine output serialized."""

import pytest
from fastapi.testclient import TestClient

from rimap import query_engine as qe
from rimap.api import create_app
from rimap.collaboration_graph import build_graph


@pytest.fixture(scope="module")
def index(snapshot):
    return qe.build_index(snapshot)


@pytest.fixture(scope="module")
def client(snapshot, index):
    return TestClient(create_app(snapshot, index, cors_origins=["*"]))


def test_meta(client, snapshot, index):
    payload = client.get("/api/meta").json()
    assert payload["nProjects"] == len(snapshot.corpus.projects)
    assert payload["facets"]["years"] == sorted(index.by_year)
    assert payload["facets"]["sdgs"] == sorted(index.by_sdg)
    assert len(payload["facets"]["topics"]) == len(snapshot.topic_labels)
    assert payload["manifest"]["configHash"]


def test_projects_equals_engine(client, snapshot, index):
    params = [("sdg", "6"), ("year", "2020"), ("limit", "500")]
    payload = client.get("/api/projects", params=params).json()
    expected = qe.query(index, qe.FilterSpec(sdgs=frozenset({6}),
                                             years=frozenset({2020})))
    assert [item["projectId"] for item in payload["items"]] == expected
    assert payload["total"] == len(expected)


def test_projects_paging(client, index):
    all_ids = qe.query(index, qe.FilterSpec())
    page = client.get("/api/projects", params={"offset": 10, "limit": 5}).json()
    assert [item["projectId"] for item in page["items"]] == all_ids[10:15]
    assert page["offset"] == 10 and page["limit"] == 5
    assert page["total"] == len(all_ids)
    # limit is clamped to 500
    big = client.get("/api/projects", params={"limit": 9999}).json()
    assert big["limit"] == 500


def test_project_detail(client, snapshot):
    pid = snapshot.corpus.projects[0].project_id
    detail = client.get(f"/api/projects/{pid}").json()
    p = snapshot.corpus.project(pid)
    assert detail["title"] == p.title
    assert detail["abstract"] == p.abstract
    assert detail["topicId"] == p.enrichment.topic_id
    n_parts = sum(1 for part, _ in snapshot.participation_orgs
                  if part.project_id == pid)
    assert len(detail["participants"]) == n_parts


def test_unknown_project_is_404(client):
    response = client.get("/api/projects/EU:does-not-exist")
    assert response.status_code == 404
    body = response.json()
    assert body["error"] == "not_found" and "detail" in body


@pytest.mark.parametrize("params", [
    {"year": "banana"},
    {"sdg": "18"},
    {"sdg": "0"},
    {"topic": "x"},
    {"type": "BANK"},
    {"frobnicate": "1"},
])
def test_malformed_params_are_400(client, params):
    response = client.get("/api/projects", params=params)
    assert response.status_code == 400
    body = response.json()
    assert body["error"] == "bad_request" and "detail" in body


def test_network_equals_graph_builder(client, snapshot, index):
    spec = qe.FilterSpec(priority_areas=frozenset({"health"}))
    payload = client.get("/api/network", params={"area": "health"}).json()
    graph = build_graph(qe.query(index, spec), snapshot.participation_orgs,
                        snapshot.organisations)
    assert [n["id"] for n in payload["nodes"]] == [n.org_id for n in graph.nodes]
    assert [(e["source"], e["target"], e["weight"]) for e in payload["edges"]] == \
        [(e.org_a, e.org_b, e.weight) for e in graph.edges]
    assert all(n["investment"] >= 0 for n in payload["nodes"])


def test_map_no_filter_everything_matched(client, snapshot):
    payload = client.get("/api/map").json()
    points = payload["points"]
    assert len(points) == len(snapshot.layout)
    assert all(point["matched"] for point in points)


def test_map_filter_dims_rest(client, snapshot, index):
    payload = client.get("/api/map", params={"sdg": "13"}).json()
    matched = {p["id"] for p in payload["points"] if p["matched"]}
    assert matched == set(qe.query(index, qe.FilterSpec(sdgs=frozenset({13}))))
    assert len(payload["points"]) == len(snapshot.layout)  # all points present


def test_stats_equals_engine(client, index):
    payload = client.get("/api/stats", params={"sdg": "6"}).json()
    summary = qe.stats(index, qe.FilterSpec(sdgs=frozenset({6})))
    assert payload["nProjects"] == summary.n_projects
    assert payload["nParticipants"] == summary.n_participants
    assert payload["totalInvestment"] == pytest.approx(float(summary.total_investment))
    assert payload["bySdg"] == {str(k): v for k, v in summary.by_sdg.items()}
    assert [r["orgId"] for r in payload["topParticipants"]] == \
        [r.org_id for r in summary.top_participants]
    assert [r["orgId"] for r in payload["externalPartners"]] == \
        [r.org_id for r in summary.top_external]


def test_export_endpoint_equals_engine(client, index):
    response = client.get("/api/export/projects.csv", params={"sdg": "6"})
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/csv")
    expected = qe.export_csv(index, qe.FilterSpec(sdgs=frozenset({6})), "projects")
    assert response.content == expected


def test_export_unknown_view_404(client):
    response = client.get("/api/export/bogus.csv")
    assert response.status_code == 404
    assert response.json()["error"] == "not_found"


def test_repeated_gets_identical(client):
    a = client.get("/api/stats", params={"year": "2020"}).content
    b = client.get("/api/stats", params={"year": "2020"}).content
    assert a == b
