"""Faceted filtering, text search, statistics and CSV export over a snapshot.

Filter semantics: AND across facets, OR within a facet's selected values;
keyword terms combine by AND over the inverted text index. Results are
ordered by funder contribution (desc), then project id.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum
from typing import Iterable

from .collaboration_graph import (
    ExternalPartner,
    build_graph,
    rank_external_partners,
)
from .model import OrgType
from .snapshot import Snapshot
from .text_embedding import tokenize

TOP_PARTICIPANTS = 20
TOP_EXTERNAL = 20


class QueryError(Exception):
    pass


class UnknownView(QueryError):
    def __init__(self, view: str):
        super().__init__(f"unknown export view {view!r}")


class ExportView(str, Enum):
    PROJECTS = "PROJECTS"
    PARTICIPANTS = "PARTICIPANTS"
    NODES = "NODES"
    EDGES = "EDGES"
    EXTERNAL = "EXTERNAL"


@dataclass(frozen=True)
class FilterSpec:
    keyword_terms: tuple[str, ...] = ()
    participant_name: str = ""
    institution_types: frozenset[OrgType] = frozenset()
    years: frozenset[int] = frozenset()
    provinces: frozenset[str] = frozenset()
    instruments: frozenset[str] = frozenset()
    programmes: frozenset[str] = frozenset()
    priority_areas: frozenset[str] = frozenset()
    topics: frozenset[int] = frozenset()
    sdgs: frozenset[int] = frozenset()

    def is_empty(self) -> bool:
        return self == FilterSpec()

    def to_query_params(self) -> list[tuple[str, str]]:
        params: list[tuple[str, str]] = []
        params += [("q", t) for t in self.keyword_terms]
        if self.participant_name:
            params.append(("participant", self.participant_name))
        params += [("type", t.value) for t in sorted(self.institution_types)]
        params += [("year", str(y)) for y in sorted(self.years)]
        params += [("province", p) for p in sorted(self.provinces)]
        params += [("instrument", i) for i in sorted(self.instruments)]
        params += [("programme", p) for p in sorted(self.programmes)]
        params += [("area", a) for a in sorted(self.priority_areas)]
        params += [("topic", str(t)) for t in sorted(self.topics)]
        params += [("sdg", str(s)) for s in sorted(self.sdgs)]
        return params


class SearchIndex:
    """Immutable lookup structures over one snapshot."""

    def __init__(self, snapshot: Snapshot):
        self.snapshot = snapshot
        corpus = snapshot.corpus
        self.all_ids = [p.project_id for p in corpus.projects]
        # display order: funder contribution desc, then id asc
        self.ordered_ids = sorted(
            self.all_ids,
            key=lambda pid: (-corpus.project(pid).funder_contribution,
                             pid),
        )
        self._rank = {pid: i for i, pid in enumerate(self.ordered_ids)}

        self.postings: dict[str, set[str]] = {}
        for p in corpus.projects:
            for tok in set(tokenize(p.text())):
                self.postings.setdefault(tok, set()).add(p.project_id)

        self.by_year: dict[int, set[str]] = {}
        self.by_instrument: dict[str, set[str]] = {}
        self.by_programme: dict[str, set[str]] = {}
        self.by_area: dict[str, set[str]] = {}
        self.by_topic: dict[int, set[str]] = {}
        self.by_sdg: dict[int, set[str]] = {}
        for p in corpus.projects:
            self.by_year.setdefault(p.start_year, set()).add(p.project_id)
            if p.instrument:
                self.by_instrument.setdefault(p.instrument, set()).add(p.project_id)
            if p.programme:
                self.by_programme.setdefault(p.programme, set()).add(p.project_id)
            for area in p.enrichment.priority_areas:
                self.by_area.setdefault(area, set()).add(p.project_id)
            if p.enrichment.topic_id is not None:
                self.by_topic.setdefault(p.enrichment.topic_id, set()).add(p.project_id)
            for sdg in p.enrichment.sdg_tags:
                self.by_sdg.setdefault(sdg, set()).add(p.project_id)

        self.by_org_type: dict[OrgType, set[str]] = {}
        self.by_province: dict[str, set[str]] = {}
        self.orgs_of_project: dict[str, set[str]] = {}
        self.projects_of_org: dict[str, set[str]] = {}
        for part, org_id in snapshot.participation_orgs:
            org = snapshot.organisations[org_id]
            self.orgs_of_project.setdefault(part.project_id, set()).add(org_id)
            self.projects_of_org.setdefault(org_id, set()).add(part.project_id)
            self.by_org_type.setdefault(org.org_type, set()).add(part.project_id)
            if org.province:
                self.by_province.setdefault(org.province, set()).add(part.project_id)

        self._org_search_text = {
            org_id: [o.display_name.lower()] + sorted(a.lower() for a in o.aliases)
            for org_id, o in snapshot.organisations.items()
        }

    def order(self, ids: Iterable[str]) -> list[str]:
        return sorted(ids, key=self._rank.__getitem__)


def build_index(snapshot: Snapshot) -> SearchIndex:
    return SearchIndex(snapshot)


def _facet(ids: set[str], selected: frozenset, table: dict) -> set[str]:
    hit: set[str] = set()
    for value in selected:
        hit |= table.get(value, set())
    return ids & hit


def query(index: SearchIndex, spec: FilterSpec, keyword_mode: str = "and") -> list[str]:
    """Matching project ids in display order.

    Keyword terms combine by AND by default; pass keyword_mode="or" for
    any-term matching. Facets always OR within and AND across.
    """
    if keyword_mode not in ("and", "or"):
        raise QueryError(f"unknown keyword mode {keyword_mode!r}")
    ids = set(index.all_ids)
    if spec.years:
        ids = _facet(ids, spec.years, index.by_year)
    if spec.provinces:
        ids = _facet(ids, spec.provinces, index.by_province)
    if spec.instruments:
        ids = _facet(ids, spec.instruments, index.by_instrument)
    if spec.programmes:
        ids = _facet(ids, spec.programmes, index.by_programme)
    if spec.priority_areas:
        ids = _facet(ids, spec.priority_areas, index.by_area)
    if spec.topics:
        ids = _facet(ids, spec.topics, index.by_topic)
    if spec.sdgs:
        ids = _facet(ids, spec.sdgs, index.by_sdg)
    if spec.institution_types:
        ids = _facet(ids, spec.institution_types, index.by_org_type)
    if keyword_mode == "and":
        for term in spec.keyword_terms:
            for tok in tokenize(term):
                ids &= index.postings.get(tok, set())
    elif spec.keyword_terms:
        hit: set[str] = set()
        for term in spec.keyword_terms:
            for tok in tokenize(term):
                hit |= index.postings.get(tok, set())
        ids &= hit
    if spec.participant_name:
        needle = spec.participant_name.lower()
        orgs = {
            org_id for org_id, texts in index._org_search_text.items()
            if any(needle in t for t in texts)
        }
        hit: set[str] = set()
        for org_id in orgs:
            hit |= index.projects_of_org.get(org_id, set())
        ids &= hit
    return index.order(ids)


@dataclass(frozen=True)
class ParticipantRank:
    org_id: str
    display_name: str
    org_type: str
    investment: Decimal
    project_count: int


@dataclass
class StatsSummary:
    n_projects: int
    n_participants: int
    total_investment: Decimal
    by_year: dict[int, int] = field(default_factory=dict)
    by_area: dict[str, int] = field(default_factory=dict)
    by_topic: dict[int, int] = field(default_factory=dict)
    by_sdg: dict[int, int] = field(default_factory=dict)
    by_org_type: dict[str, int] = field(default_factory=dict)
    top_participants: list[ParticipantRank] = field(default_factory=list)
    top_external: list[ExternalPartner] = field(default_factory=list)


def stats(index: SearchIndex, spec: FilterSpec) -> StatsSummary:
    """All aggregates are computed over exactly query(index, spec)."""
    ids = query(index, spec)
    id_set = set(ids)
    snapshot = index.snapshot
    corpus = snapshot.corpus

    by_year: dict[int, int] = {}
    by_area: dict[str, int] = {}
    by_topic: dict[int, int] = {}
    by_sdg: dict[int, int] = {}
    total = Decimal("0")
    for pid in ids:
        p = corpus.project(pid)
        total += p.funder_contribution
        by_year[p.start_year] = by_year.get(p.start_year, 0) + 1
        for area in p.enrichment.priority_areas:
            by_area[area] = by_area.get(area, 0) + 1
        if p.enrichment.topic_id is not None:
            by_topic[p.enrichment.topic_id] = by_topic.get(p.enrichment.topic_id, 0) + 1
        for sdg in p.enrichment.sdg_tags:
            by_sdg[sdg] = by_sdg.get(sdg, 0) + 1

    orgs_seen: set[str] = set()
    by_org_type: dict[str, int] = {}
    org_invest: dict[str, Decimal] = {}
    org_projects: dict[str, set[str]] = {}
    type_projects: dict[str, set[str]] = {}
    for part, org_id in snapshot.participation_orgs:
        if part.project_id not in id_set:
            continue
        org = snapshot.organisations[org_id]
        orgs_seen.add(org_id)
        org_invest[org_id] = org_invest.get(org_id, Decimal("0")) + part.contribution
        org_projects.setdefault(org_id, set()).add(part.project_id)
        type_projects.setdefault(org.org_type.value, set()).add(part.project_id)
    by_org_type = {t: len(pids) for t, pids in type_projects.items()}

    ranking = sorted(
        (
            ParticipantRank(
                org_id=org_id,
                display_name=snapshot.organisations[org_id].display_name,
                org_type=snapshot.organisations[org_id].org_type.value,
                investment=org_invest[org_id],
                project_count=len(org_projects[org_id]),
            )
            for org_id in orgs_seen
        ),
        key=lambda r: (-r.investment, r.display_name, r.org_id),
    )
    external = rank_external_partners(
        id_set, snapshot.participation_orgs, snapshot.organisations, top_n=TOP_EXTERNAL
    )
    return StatsSummary(
        n_projects=len(ids),
        n_participants=len(orgs_seen),
        total_investment=total,
        by_year=dict(sorted(by_year.items())),
        by_area=dict(sorted(by_area.items())),
        by_topic=dict(sorted(by_topic.items())),
        by_sdg=dict(sorted(by_sdg.items())),
        by_org_type=dict(sorted(by_org_type.items())),
        top_participants=ranking[:TOP_PARTICIPANTS],
        top_external=external,
    )


PROJECT_EXPORT_COLUMNS = [
    "projectId", "source", "acronym", "title", "abstract", "programme",
    "instrument", "topicCode", "startYear", "endYear", "totalCost",
    "funderContribution", "metadataTags", "priorityAreas", "topicId",
    "sdgs", "mapX", "mapY",
]


def export_csv(index: SearchIndex, spec: FilterSpec, view: ExportView | str) -> bytes:
    """RFC 4180 CSV (UTF-8) of the filtered view."""
    if isinstance(view, str):
        try:
            view = ExportView(view.upper())
        except ValueError:
            raise UnknownView(view)
    ids = query(index, spec)
    id_set = set(ids)
    snapshot = index.snapshot
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")

    if view is ExportView.PROJECTS:
        writer.writerow(PROJECT_EXPORT_COLUMNS)
        for pid in ids:
            p = snapshot.corpus.project(pid)
            xy = snapshot.layout.get(pid)
            writer.writerow([
                p.project_id, p.source.value, p.acronym, p.title, p.abstract,
                p.programme, p.instrument, p.call_topic_code, p.start_year,
                p.end_year, str(p.total_cost), str(p.funder_contribution),
                ";".join(sorted(p.metadata_tags)),
                ";".join(sorted(p.enrichment.priority_areas)),
                "" if p.enrichment.topic_id is None else p.enrichment.topic_id,
                ";".join(str(s) for s in sorted(p.enrichment.sdg_tags)),
                "" if xy is None else repr(xy[0]),
                "" if xy is None else repr(xy[1]),
            ])
    elif view is ExportView.PARTICIPANTS:
        writer.writerow(["projectId", "orgId", "orgName", "country", "province",
                         "orgType", "role", "contribution"])
        by_project: dict[str, list[tuple]] = {}
        for part, org_id in snapshot.participation_orgs:
            by_project.setdefault(part.project_id, []).append((part, org_id))
        for pid in ids:
            for part, org_id in by_project.get(pid, []):
                org = snapshot.organisations[org_id]
                writer.writerow([
                    pid, org_id, org.display_name, part.country, part.province,
                    org.org_type.value, part.role.value, str(part.contribution),
                ])
    elif view in (ExportView.NODES, ExportView.EDGES):
        graph = build_graph(id_set, snapshot.participation_orgs,
                            snapshot.organisations, generated_from=spec)
        if view is ExportView.NODES:
            writer.writerow(["orgId", "name", "orgType", "investment", "projectCount"])
            for n in graph.nodes:
                writer.writerow([n.org_id, n.display_name, n.org_type,
                                 str(n.investment), n.project_count])
        else:
            writer.writerow(["orgA", "orgB", "weight"])
            for e in graph.edges:
                writer.writerow([e.org_a, e.org_b, e.weight])
    elif view is ExportView.EXTERNAL:
        writer.writerow(["orgId", "name", "country", "sharedProjects", "homePartners"])
        for partner in rank_external_partners(
            id_set, snapshot.participation_orgs, snapshot.organisations
        ):
            writer.writerow([
                partner.org_id, partner.display_name, partner.country,
                partner.shared_project_count,
                ";".join(sorted(partner.linked_home_orgs)),
            ])
    else:  # pragma: no cover - enum is exhaustive
        raise UnknownView(str(view))
    return buf.getvalue().encode("utf-8")
