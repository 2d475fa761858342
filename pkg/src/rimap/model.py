"""Canonical data model shared by the ingestion and enrichment stages."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum


class Source(str, Enum):
    EU_FP = "EU_FP"
    REGIONAL = "REGIONAL"


class Role(str, Enum):
    COORDINATOR = "COORDINATOR"
    PARTNER = "PARTNER"


class OrgType(str, Enum):
    UNIVERSITY = "UNIVERSITY"
    RESEARCH_CENTRE = "RESEARCH_CENTRE"
    COMPANY = "COMPANY"
    PUBLIC_ADMIN = "PUBLIC_ADMIN"
    NONPROFIT = "NONPROFIT"
    OTHER = "OTHER"


@dataclass
class EnrichmentTags:
    """Classifier, topic, SDG and map outputs attached to a project.

    ``priority_areas`` maps area label to classifier confidence in [0, 1].
    ``sdg_tags`` maps an SDG number (1..17) to the matched phrases.
    """

    priority_areas: dict[str, float] = field(default_factory=dict)
    topic_id: int | None = None
    sdg_tags: dict[int, tuple[str, ...]] = field(default_factory=dict)
    map_xy: tuple[float, float] | None = None


@dataclass
class Project:
    """One funded R&I project in the unified corpus."""

    project_id: str
    source: Source
    acronym: str
    title: str
    abstract: str
    programme: str
    instrument: str
    call_topic_code: str
    start_year: int
    end_year: int
    total_cost: Decimal
    funder_contribution: Decimal
    metadata_tags: frozenset[str] = frozenset()
    enrichment: EnrichmentTags = field(default_factory=EnrichmentTags)

    def text(self) -> str:
        """Title and abstract, the substrate for all text analytics."""
        return f"{self.title} {self.abstract}"


@dataclass
class Participation:
    """Link between a project and an organisation, with role and money."""

    project_id: str
    raw_org_name: str
    country: str
    province: str
    org_type_raw: str
    role: Role
    contribution: Decimal


@dataclass
class Corpus:
    """Unified project set; projects sorted by id, participations canonical."""

    projects: list[Project]
    participations: list[Participation]
    _by_id: dict[str, Project] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        self._by_id = {p.project_id: p for p in self.projects}

    def __len__(self) -> int:
        return len(self.projects)

    @property
    def project_ids(self) -> list[str]:
        return [p.project_id for p in self.projects]

    def project(self, project_id: str) -> Project:
        return self._by_id[project_id]

    def __contains__(self, project_id: str) -> bool:
        return project_id in self._by_id

    def participations_of(self, project_id: str) -> list[Participation]:
        return [p for p in self.participations if p.project_id == project_id]
