"""Parsers for the two source CSV schemas and the canonical corpus dump.

Two input shapes are supported: the EU framework-programme style (one
projects file plus one participants file) and the regional style (a single
file with one row per participation). Both are normalised into the shared
:class:`~rimap.model.Corpus`.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterator

from .model import Corpus, EnrichmentTags, Participation, Project, Role, Source

logger = logging.getLogger(__name__)

EU_PROJECT_COLUMNS = [
    "id", "acronym", "title", "objective", "programme", "instrument",
    "topicCode", "startDate", "endDate", "totalCost", "ecMaxContribution",
    "metadataTags",
]
EU_PARTICIPANT_COLUMNS = [
    "projectId", "name", "country", "role", "ecContribution", "activityType",
]
REGIONAL_COLUMNS = [
    "projectId", "acronym", "title", "abstract", "programme", "instrument",
    "startDate", "endDate", "totalCost", "grant", "orgName", "orgType",
    "province", "country", "role", "contribution",
]

_YEAR_RE = re.compile(r"^(\d{4})(?:-\d{2}-\d{2})?$")
_MONEY_RE = re.compile(r"^\d+(?:\.\d+)?$")
_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")

_ROLES = {
    "coordinator": Role.COORDINATOR,
    "partner": Role.PARTNER,
    "participant": Role.PARTNER,
}


class IngestError(Exception):
    pass


class MissingColumn(IngestError):
    def __init__(self, file: str, missing: list[str]):
        self.file = file
        self.missing = missing
        super().__init__(f"{file}: missing required column(s): {', '.join(missing)}")


@dataclass(frozen=True)
class RowIssue:
    """One rejected or soft-flagged input row; line is 1-based in the file."""

    file: str
    line: int
    code: str
    message: str


@dataclass
class IngestReport:
    rejects: list[RowIssue] = field(default_factory=list)
    warnings: list[RowIssue] = field(default_factory=list)
    rows_read: dict[str, int] = field(default_factory=dict)

    def reject(self, file: str, line: int, code: str, message: str) -> None:
        self.rejects.append(RowIssue(file, line, code, message))

    def warn(self, file: str, line: int, code: str, message: str) -> None:
        self.warnings.append(RowIssue(file, line, code, message))

    @property
    def n_rejected(self) -> int:
        return len(self.rejects)

    def to_dict(self) -> dict:
        return {
            "rowsRead": dict(sorted(self.rows_read.items())),
            "rejects": [vars(r) for r in self.rejects],
            "warnings": [vars(w) for w in self.warnings],
        }


class _RowError(Exception):
    """Internal: a hard per-row violation with a short reason."""


def _parse_year(text: str, what: str) -> int:
    m = _YEAR_RE.match(text.strip())
    if not m:
        raise _RowError(f"{what}: expected ISO date or year, got {text!r}")
    return int(m.group(1))


def _parse_money(text: str, what: str) -> Decimal | None:
    """Non-negative decimal with '.' separator; empty means absent."""
    text = text.strip()
    if not text:
        return None
    if text.startswith("-"):
        raise _RowError(f"{what}: negative amount {text!r}")
    if not _MONEY_RE.match(text):
        raise _RowError(f"{what}: malformed amount {text!r}")
    try:
        return Decimal(text)
    except InvalidOperation:  # pragma: no cover - regex already guards
        raise _RowError(f"{what}: malformed amount {text!r}")


def _parse_role(text: str) -> Role:
    role = _ROLES.get(text.strip().lower())
    if role is None:
        raise _RowError(f"role: unknown value {text!r}")
    return role


def _parse_country(text: str) -> str:
    code = text.strip().upper()
    if not _COUNTRY_RE.match(code):
        raise _RowError(f"country: expected ISO alpha-2 code, got {text!r}")
    return code


def _read_rows(path: Path, columns: list[str]) -> Iterator[tuple[int, dict[str, str]]]:
    """Yield (1-based start line, row dict). Validates the header.

    UTF-8 only; a BOM is tolerated and stripped. RFC 4180 quoting via the
    csv module, so a row may span physical lines.
    """
    with open(path, "r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(path.name, list(columns))
        header = [h.strip() for h in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise MissingColumn(path.name, missing)
        positions = {c: header.index(c) for c in columns}
        line = reader.line_num + 1
        for raw in reader:
            if raw and any(cell.strip() for cell in raw):
                row = {
                    c: (raw[i] if i < len(raw) else "")
                    for c, i in positions.items()
                }
                yield line, row
            line = reader.line_num + 1


def parse_eu_csv(
    projects_file: str | Path, participants_file: str | Path
) -> tuple[list[tuple[Project, list[Participation]]], IngestReport]:
    """Parse the EU-programme style pair of CSVs.

    Hard violations reject the row (recorded in the report with its line
    number); soft issues such as an empty abstract are warnings only.
    """
    projects_file = Path(projects_file)
    participants_file = Path(participants_file)
    report = IngestReport()

    projects: dict[str, Project] = {}
    order: list[str] = []
    n_rows = 0
    for line, row in _read_rows(projects_file, EU_PROJECT_COLUMNS):
        n_rows += 1
        try:
            project = _eu_project_from_row(row, report, projects_file.name, line)
        except _RowError as err:
            report.reject(projects_file.name, line, "MalformedRow", str(err))
            continue
        if project.project_id in projects:
            report.reject(
                projects_file.name, line, "DuplicateProjectId",
                f"duplicate project id {project.project_id!r}",
            )
            continue
        projects[project.project_id] = project
        order.append(project.project_id)
    report.rows_read[projects_file.name] = n_rows

    participations: dict[str, list[Participation]] = {pid: [] for pid in order}
    n_rows = 0
    for line, row in _read_rows(participants_file, EU_PARTICIPANT_COLUMNS):
        n_rows += 1
        pid = row["projectId"].strip()
        if pid not in projects:
            report.reject(
                participants_file.name, line, "UnknownProject",
                f"participant references unknown project id {pid!r}",
            )
            continue
        try:
            name = row["name"].strip()
            if not name:
                raise _RowError("name: empty organisation name")
            country = _parse_country(row["country"])
            role = _parse_role(row["role"])
            contribution = _parse_money(row["ecContribution"], "ecContribution")
        except _RowError as err:
            report.reject(participants_file.name, line, "MalformedRow", str(err))
            continue
        if contribution is None:
            contribution = Decimal("0")
            report.warn(participants_file.name, line, "MissingValue",
                        "empty ecContribution treated as 0")
        participations[pid].append(
            Participation(
                project_id=pid,
                raw_org_name=name,
                country=country,
                province="",
                org_type_raw=row["activityType"].strip(),
                role=role,
                contribution=contribution,
            )
        )
    report.rows_read[participants_file.name] = n_rows

    return [(projects[pid], participations[pid]) for pid in order], report


def _eu_project_from_row(
    row: dict[str, str], report: IngestReport, fname: str, line: int
) -> Project:
    pid = row["id"].strip()
    if not pid:
        raise _RowError("id: empty project id")
    title = row["title"].strip()
    if not title:
        raise _RowError("title: empty")
    start = _parse_year(row["startDate"], "startDate")
    end = _parse_year(row["endDate"], "endDate")
    if start > end:
        raise _RowError(f"startDate {start} after endDate {end}")
    total = _parse_money(row["totalCost"], "totalCost")
    funder = _parse_money(row["ecMaxContribution"], "ecMaxContribution")
    if total is not None and funder is not None and funder > total:
        raise _RowError(
            f"ecMaxContribution {funder} exceeds totalCost {total}"
        )
    for col, value in (("totalCost", total), ("ecMaxContribution", funder)):
        if value is None:
            report.warn(fname, line, "MissingValue", f"empty {col} treated as 0")
    abstract = row["objective"].strip()
    if not abstract:
        report.warn(fname, line, "EmptyAbstract", f"project {pid!r} has no abstract")
    tags = frozenset(t.strip() for t in row["metadataTags"].split(";") if t.strip())
    return Project(
        project_id=pid,
        source=Source.EU_FP,
        acronym=row["acronym"].strip(),
        title=title,
        abstract=abstract,
        programme=row["programme"].strip(),
        instrument=row["instrument"].strip(),
        call_topic_code=row["topicCode"].strip(),
        start_year=start,
        end_year=end,
        total_cost=total if total is not None else Decimal("0"),
        funder_contribution=funder if funder is not None else Decimal("0"),
        metadata_tags=tags,
    )


def parse_regional_csv(
    file: str | Path,
) -> tuple[list[tuple[Project, list[Participation]]], IngestReport]:
    """Parse the regional one-row-per-participation CSV.

    The first fully valid row of a project defines its project-level
    fields; later rows that disagree are accepted with a warning and the
    first values win.
    """
    file = Path(file)
    report = IngestReport()
    projects: dict[str, Project] = {}
    order: list[str] = []
    participations: dict[str, list[Participation]] = {}

    n_rows = 0
    for line, row in _read_rows(file, REGIONAL_COLUMNS):
        n_rows += 1
        pid = row["projectId"].strip()
        if not pid:
            report.reject(file.name, line, "MalformedRow", "projectId: empty")
            continue
        try:
            title = row["title"].strip()
            if not title:
                raise _RowError("title: empty")
            start = _parse_year(row["startDate"], "startDate")
            end = _parse_year(row["endDate"], "endDate")
            if start > end:
                raise _RowError(f"startDate {start} after endDate {end}")
            total = _parse_money(row["totalCost"], "totalCost")
            grant = _parse_money(row["grant"], "grant")
            if total is not None and grant is not None and grant > total:
                raise _RowError(f"grant {grant} exceeds totalCost {total}")
            org_name = row["orgName"].strip()
            if not org_name:
                raise _RowError("orgName: empty organisation name")
            contribution = _parse_money(row["contribution"], "contribution")
            participation = Participation(
                project_id=pid,
                raw_org_name=org_name,
                country=_parse_country(row["country"]),
                province=row["province"].strip(),
                org_type_raw=row["orgType"].strip(),
                role=_parse_role(row["role"]),
                contribution=contribution if contribution is not None else Decimal("0"),
            )
        except _RowError as err:
            report.reject(file.name, line, "MalformedRow", str(err))
            continue

        if contribution is None:
            report.warn(file.name, line, "MissingValue", "empty contribution treated as 0")
        if not row["orgType"].strip():
            report.warn(file.name, line, "MissingOrgType",
                        f"project {pid!r}: participant without orgType")

        if pid not in projects:
            abstract = row["abstract"].strip()
            if not abstract:
                report.warn(file.name, line, "EmptyAbstract",
                            f"project {pid!r} has no abstract")
            projects[pid] = Project(
                project_id=pid,
                source=Source.REGIONAL,
                acronym=row["acronym"].strip(),
                title=title,
                abstract=abstract,
                programme=row["programme"].strip(),
                instrument=row["instrument"].strip(),
                call_topic_code="",
                start_year=start,
                end_year=end,
                total_cost=total if total is not None else Decimal("0"),
                funder_contribution=grant if grant is not None else Decimal("0"),
                metadata_tags=frozenset(),
            )
            order.append(pid)
            participations[pid] = []
        else:
            existing = projects[pid]
            if (existing.title, existing.start_year, existing.end_year) != (title, start, end):
                report.warn(file.name, line, "InconsistentProjectFields",
                            f"project {pid!r}: row disagrees with first occurrence")
        participations[pid].append(participation)
    report.rows_read[file.name] = n_rows

    return [(projects[pid], participations[pid]) for pid in order], report


def unify(
    eu: list[tuple[Project, list[Participation]]],
    regional: list[tuple[Project, list[Participation]]],
) -> Corpus:
    """Merge both validated sources into one corpus with prefixed ids."""
    projects: list[Project] = []
    participations: list[Participation] = []
    for prefix, items in (("EU:", eu), ("REG:", regional)):
        for project, parts in items:
            pid = prefix + project.project_id
            projects.append(replace(project, project_id=pid))
            for part in parts:
                participations.append(replace(part, project_id=pid))
    projects.sort(key=lambda p: p.project_id)
    participations.sort(
        key=lambda p: (p.project_id, p.raw_org_name, p.role.value,
                       p.country, p.province, str(p.contribution))
    )
    return Corpus(projects=projects, participations=participations)


# --- canonical dump -------------------------------------------------------

def _project_to_dict(p: Project) -> dict:
    e = p.enrichment
    return {
        "projectId": p.project_id,
        "source": p.source.value,
        "acronym": p.acronym,
        "title": p.title,
        "abstract": p.abstract,
        "programme": p.programme,
        "instrument": p.instrument,
        "topicCode": p.call_topic_code,
        "startYear": p.start_year,
        "endYear": p.end_year,
        "totalCost": str(p.total_cost),
        "funderContribution": str(p.funder_contribution),
        "metadataTags": sorted(p.metadata_tags),
        "enrichment": {
            "priorityAreas": {k: e.priority_areas[k] for k in sorted(e.priority_areas)},
            "topicId": e.topic_id,
            "sdgTags": {str(k): list(e.sdg_tags[k]) for k in sorted(e.sdg_tags)},
            "mapXY": list(e.map_xy) if e.map_xy is not None else None,
        },
    }


def _project_from_dict(d: dict) -> Project:
    enr = d["enrichment"]
    return Project(
        project_id=d["projectId"],
        source=Source(d["source"]),
        acronym=d["acronym"],
        title=d["title"],
        abstract=d["abstract"],
        programme=d["programme"],
        instrument=d["instrument"],
        call_topic_code=d["topicCode"],
        start_year=d["startYear"],
        end_year=d["endYear"],
        total_cost=Decimal(d["totalCost"]),
        funder_contribution=Decimal(d["funderContribution"]),
        metadata_tags=frozenset(d["metadataTags"]),
        enrichment=EnrichmentTags(
            priority_areas=dict(enr["priorityAreas"]),
            topic_id=enr["topicId"],
            sdg_tags={int(k): tuple(v) for k, v in enr["sdgTags"].items()},
            map_xy=tuple(enr["mapXY"]) if enr["mapXY"] is not None else None,
        ),
    )


def dump_canonical(corpus: Corpus) -> str:
    """Deterministic JSON dump; identical corpora give identical bytes."""
    doc = {
        "projects": [_project_to_dict(p) for p in corpus.projects],
        "participations": [
            {
                "projectId": p.project_id,
                "rawOrgName": p.raw_org_name,
                "country": p.country,
                "province": p.province,
                "orgTypeRaw": p.org_type_raw,
                "role": p.role.value,
                "contribution": str(p.contribution),
            }
            for p in corpus.participations
        ],
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=1) + "\n"


def load_canonical(text: str) -> Corpus:
    doc = json.loads(text)
    projects = [_project_from_dict(d) for d in doc["projects"]]
    participations = [
        Participation(
            project_id=d["projectId"],
            raw_org_name=d["rawOrgName"],
            country=d["country"],
            province=d["province"],
            org_type_raw=d["orgTypeRaw"],
            role=Role(d["role"]),
            contribution=Decimal(d["contribution"]),
        )
        for d in doc["participations"]
    ]
    return Corpus(projects=projects, participations=participations)


def write_canonical(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dump_canonical(corpus), encoding="utf-8")


def read_canonical(path: str | Path) -> Corpus:
    return load_canonical(Path(path).read_text(encoding="utf-8"))
