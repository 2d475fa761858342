"""The immutable, fully enriched dataset a service instance reads from.

A snapshot bundles everything the query engine and API need: enriched
projects, participations with resolved org ids, organisations, the map
layout and topic labels. It serializes to a single JSON artifact so a
pipeline rerun can swap it atomically.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .entity_resolution import Organisation
from .ingest import _project_from_dict, _project_to_dict
from .model import Corpus, OrgType, Participation, Role


@dataclass
class Snapshot:
    corpus: Corpus
    organisations: dict[str, Organisation]
    participation_orgs: list[tuple[Participation, str]]
    layout: dict[str, tuple[float, float]] = field(default_factory=dict)
    topic_labels: dict[int, str] = field(default_factory=dict)
    priority_labels: tuple[str, ...] = ()
    home_country: str = ""
    manifest: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "projects": [_project_to_dict(p) for p in self.corpus.projects],
            "participations": [
                {
                    "projectId": p.project_id,
                    "rawOrgName": p.raw_org_name,
                    "country": p.country,
                    "province": p.province,
                    "orgTypeRaw": p.org_type_raw,
                    "role": p.role.value,
                    "contribution": str(p.contribution),
                    "orgId": org_id,
                }
                for p, org_id in self.participation_orgs
            ],
            "organisations": [
                {
                    "orgId": o.org_id,
                    "displayName": o.display_name,
                    "aliases": sorted(o.aliases),
                    "orgType": o.org_type.value,
                    "country": o.country,
                    "province": o.province,
                    "isHomeRegion": o.is_home_region,
                }
                for _, o in sorted(self.organisations.items())
            ],
            "layout": {
                pid: [x, y] for pid, (x, y) in sorted(self.layout.items())
            },
            "topicLabels": {str(k): v for k, v in sorted(self.topic_labels.items())},
            "priorityLabels": list(self.priority_labels),
            "homeCountry": self.home_country,
            "manifest": self.manifest,
        }
        return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Snapshot":
        doc = json.loads(text)
        projects = [_project_from_dict(d) for d in doc["projects"]]
        parts: list[tuple[Participation, str]] = []
        for d in doc["participations"]:
            parts.append((
                Participation(
                    project_id=d["projectId"],
                    raw_org_name=d["rawOrgName"],
                    country=d["country"],
                    province=d["province"],
                    org_type_raw=d["orgTypeRaw"],
                    role=Role(d["role"]),
                    contribution=Decimal(d["contribution"]),
                ),
                d["orgId"],
            ))
        orgs = {
            d["orgId"]: Organisation(
                org_id=d["orgId"],
                display_name=d["displayName"],
                aliases=frozenset(d["aliases"]),
                org_type=OrgType(d["orgType"]),
                country=d["country"],
                province=d["province"],
                is_home_region=d["isHomeRegion"],
            )
            for d in doc["organisations"]
        }
        corpus = Corpus(
            projects=projects,
            participations=[p for p, _ in parts],
        )
        return cls(
            corpus=corpus,
            organisations=orgs,
            participation_orgs=parts,
            layout={pid: (xy[0], xy[1]) for pid, xy in doc["layout"].items()},
            topic_labels={int(k): v for k, v in doc["topicLabels"].items()},
            priority_labels=tuple(doc["priorityLabels"]),
            home_country=doc["homeCountry"],
            manifest=doc["manifest"],
        )


def write_snapshot(snapshot: Snapshot, path: str | Path) -> None:
    # write-then-replace so a serving process never reads a torn file
    path = Path(path)
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(snapshot.to_json(), encoding="utf-8")
    os.replace(tmp, path)


def read_snapshot(path: str | Path) -> Snapshot:
    return Snapshot.from_json(Path(path).read_text(encoding="utf-8"))
