"""Read-only JSON API over an immutable snapshot.

Every endpoint is a pure function of (snapshot, request): the server only
serializes and pages what the query engine, graph builder and map layout
already computed. Filters arrive as repeated query parameters, e.g.
``/api/projects?year=2019&year=2020&sdg=6&q=solar``.
"""

from __future__ import annotations

import logging
from decimal import Decimal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .collaboration_graph import build_graph
from .model import OrgType, Project
from .query_engine import (
    ExportView,
    FilterSpec,
    SearchIndex,
    StatsSummary,
    UnknownView,
    export_csv,
    query,
    stats,
)
from .snapshot import Snapshot

logger = logging.getLogger(__name__)

DEFAULT_PAGE = 50
MAX_PAGE = 500


class BadFilterParam(Exception):
    def __init__(self, param: str, value: str, reason: str):
        self.detail = f"parameter {param}={value!r}: {reason}"
        super().__init__(self.detail)


def _parse_int(param: str, value: str, lo: int | None = None, hi: int | None = None) -> int:
    try:
        number = int(value)
    except ValueError:
        raise BadFilterParam(param, value, "expected an integer")
    if lo is not None and number < lo or hi is not None and number > hi:
        raise BadFilterParam(param, value, f"out of range [{lo}, {hi}]")
    return number


def parse_filter_params(params: list[tuple[str, str]]) -> FilterSpec:
    """Decode repeated query params into a FilterSpec; unknown params 400."""
    keywords: list[str] = []
    participant = ""
    types: set[OrgType] = set()
    years: set[int] = set()
    provinces: set[str] = set()
    instruments: set[str] = set()
    programmes: set[str] = set()
    areas: set[str] = set()
    topics: set[int] = set()
    sdgs: set[int] = set()
    for key, value in params:
        if key in ("offset", "limit"):
            continue
        if key == "q":
            keywords.append(value)
        elif key == "participant":
            participant = value
        elif key == "type":
            try:
                types.add(OrgType(value.upper()))
            except ValueError:
                raise BadFilterParam(key, value, "unknown institution type")
        elif key == "year":
            years.add(_parse_int(key, value))
        elif key == "province":
            provinces.add(value)
        elif key == "instrument":
            instruments.add(value)
        elif key == "programme":
            programmes.add(value)
        elif key == "area":
            areas.add(value)
        elif key == "topic":
            topics.add(_parse_int(key, value, lo=0))
        elif key == "sdg":
            sdgs.add(_parse_int(key, value, lo=1, hi=17))
        else:
            raise BadFilterParam(key, value, "unknown filter parameter")
    return FilterSpec(
        keyword_terms=tuple(keywords),
        participant_name=participant,
        institution_types=frozenset(types),
        years=frozenset(years),
        provinces=frozenset(provinces),
        instruments=frozenset(instruments),
        programmes=frozenset(programmes),
        priority_areas=frozenset(areas),
        topics=frozenset(topics),
        sdgs=frozenset(sdgs),
    )


def _money(value: Decimal) -> float:
    return float(value)


def _project_row(p: Project) -> dict:
    return {
        "projectId": p.project_id,
        "source": p.source.value,
        "acronym": p.acronym,
        "title": p.title,
        "startYear": p.start_year,
        "endYear": p.end_year,
        "programme": p.programme,
        "instrument": p.instrument,
        "totalCost": _money(p.total_cost),
        "funderContribution": _money(p.funder_contribution),
        "priorityAreas": sorted(p.enrichment.priority_areas),
        "topicId": p.enrichment.topic_id,
        "sdgs": sorted(p.enrichment.sdg_tags),
    }


def _stats_payload(summary: StatsSummary) -> dict:
    return {
        "nProjects": summary.n_projects,
        "nParticipants": summary.n_participants,
        "totalInvestment": _money(summary.total_investment),
        "byYear": {str(k): v for k, v in summary.by_year.items()},
        "byArea": summary.by_area,
        "byTopic": {str(k): v for k, v in summary.by_topic.items()},
        "bySdg": {str(k): v for k, v in summary.by_sdg.items()},
        "byOrgType": summary.by_org_type,
        "topParticipants": [
            {
                "orgId": r.org_id,
                "name": r.display_name,
                "orgType": r.org_type,
                "investment": _money(r.investment),
                "projectCount": r.project_count,
            }
            for r in summary.top_participants
        ],
        "externalPartners": [
            {
                "orgId": p.org_id,
                "name": p.display_name,
                "country": p.country,
                "sharedProjects": p.shared_project_count,
                "homePartners": sorted(p.linked_home_orgs),
            }
            for p in summary.top_external
        ],
    }


def create_app(snapshot: Snapshot, index: SearchIndex,
               cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="rimap API", version="0.1.0", docs_url=None, redoc_url=None)

    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=cors_origins,
            allow_methods=["GET"], allow_headers=["*"],
        )

    @app.exception_handler(BadFilterParam)
    async def _bad_param(request: Request, exc: BadFilterParam):
        return JSONResponse(status_code=400,
                            content={"error": "bad_request", "detail": exc.detail})

    def spec_of(request: Request) -> FilterSpec:
        return parse_filter_params(request.query_params.multi_items())

    @app.get("/api/meta")
    async def meta():
        corpus = snapshot.corpus
        return {
            "nProjects": len(corpus.projects),
            "homeCountry": snapshot.home_country,
            "facets": {
                "years": sorted(index.by_year),
                "provinces": sorted(index.by_province),
                "instruments": sorted(index.by_instrument),
                "programmes": sorted(index.by_programme),
                "priorityAreas": list(snapshot.priority_labels),
                "topics": [
                    {"id": tid, "label": snapshot.topic_labels.get(tid, str(tid)),
                     "size": len(index.by_topic.get(tid, ()))}
                    for tid in sorted(snapshot.topic_labels)
                ],
                "sdgs": sorted(index.by_sdg),
                "orgTypes": [t.value for t in OrgType],
            },
            "facetCounts": {
                "year": {str(k): len(v) for k, v in sorted(index.by_year.items())},
                "province": {k: len(v) for k, v in sorted(index.by_province.items())},
                "instrument": {k: len(v) for k, v in sorted(index.by_instrument.items())},
                "programme": {k: len(v) for k, v in sorted(index.by_programme.items())},
                "area": {k: len(v) for k, v in sorted(index.by_area.items())},
                "topic": {str(k): len(v) for k, v in sorted(index.by_topic.items())},
                "sdg": {str(k): len(v) for k, v in sorted(index.by_sdg.items())},
                "orgType": {k.value: len(v) for k, v in sorted(index.by_org_type.items())},
            },
            "manifest": snapshot.manifest,
        }

    @app.get("/api/projects")
    async def projects(request: Request):
        spec = spec_of(request)
        params = dict(request.query_params)
        offset = _parse_int("offset", params.get("offset", "0"), lo=0)
        limit = _parse_int("limit", params.get("limit", str(DEFAULT_PAGE)), lo=1)
        limit = min(limit, MAX_PAGE)
        ids = query(index, spec)
        page = ids[offset:offset + limit]
        return {
            "total": len(ids),
            "offset": offset,
            "limit": limit,
            "items": [_project_row(snapshot.corpus.project(pid)) for pid in page],
        }

    @app.get("/api/projects/{project_id}")
    async def project_detail(project_id: str):
        if project_id not in snapshot.corpus:
            return JSONResponse(
                status_code=404,
                content={"error": "not_found",
                         "detail": f"unknown project id {project_id!r}"},
            )
        p = snapshot.corpus.project(project_id)
        participants = [
            {
                "orgId": org_id,
                "name": snapshot.organisations[org_id].display_name,
                "country": part.country,
                "province": part.province,
                "orgType": snapshot.organisations[org_id].org_type.value,
                "role": part.role.value,
                "contribution": _money(part.contribution),
                "isHomeRegion": snapshot.organisations[org_id].is_home_region,
            }
            for part, org_id in snapshot.participation_orgs
            if part.project_id == project_id
        ]
        row = _project_row(p)
        row.update({
            "abstract": p.abstract,
            "topicCode": p.call_topic_code,
            "metadataTags": sorted(p.metadata_tags),
            "topicLabel": snapshot.topic_labels.get(p.enrichment.topic_id or -1),
            "priorityConfidence": dict(sorted(p.enrichment.priority_areas.items())),
            "sdgPhrases": {str(k): list(v) for k, v in sorted(p.enrichment.sdg_tags.items())},
            "mapXY": list(p.enrichment.map_xy) if p.enrichment.map_xy else None,
            "participants": participants,
        })
        return row

    @app.get("/api/network")
    async def network(request: Request):
        spec = spec_of(request)
        ids = query(index, spec)
        graph = build_graph(ids, snapshot.participation_orgs,
                            snapshot.organisations, generated_from=spec)
        return {
            "nodes": [
                {
                    "id": n.org_id, "name": n.display_name, "orgType": n.org_type,
                    "investment": _money(n.investment), "projects": n.project_count,
                }
                for n in graph.nodes
            ],
            "edges": [
                {"source": e.org_a, "target": e.org_b, "weight": e.weight}
                for e in graph.edges
            ],
        }

    @app.get("/api/map")
    async def semantic_map_points(request: Request):
        spec = spec_of(request)
        matched = set(query(index, spec))
        points = []
        for pid, (x, y) in sorted(snapshot.layout.items()):
            p = snapshot.corpus.project(pid)
            points.append({
                "id": pid,
                "x": x,
                "y": y,
                "topic": p.enrichment.topic_id,
                "title": p.title,
                "matched": pid in matched,
            })
        return {"points": points}

    @app.get("/api/stats")
    async def stats_endpoint(request: Request):
        spec = spec_of(request)
        return _stats_payload(stats(index, spec))

    @app.get("/api/export/{view}.csv")
    async def export(view: str, request: Request):
        spec = spec_of(request)
        try:
            payload = export_csv(index, spec, view)
        except UnknownView:
            return JSONResponse(
                status_code=404,
                content={"error": "not_found", "detail": f"unknown export view {view!r}"},
            )
        return Response(
            content=payload,
            media_type="text/csv; charset=utf-8",
            headers={"Content-Disposition": f'attachment; filename="{view.lower()}.csv"'},
        )

    return app


def serve(snapshot: Snapshot, host: str, port: int,
          cors_origins: list[str] | None = None, ui_dir: str | None = None) -> None:
    """Blocking uvicorn server over the given snapshot."""
    import uvicorn

    index = SearchIndex(snapshot)
    app = create_app(snapshot, index, cors_origins=cors_origins)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="info")
