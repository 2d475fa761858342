"""Synthetic corpus generator: schema-valid input files at desk scale.

Real project data cannot be bundled, so tests and demos run on a
generated corpus: 500 projects over three broad themes and seven priority
areas, ~120 organisations with injected alias groups, and SDG keyword
plants. Generation is fully deterministic for a fixed seed, and the
injected ground truth (alias groups, gold area labels) is written
alongside the CSVs.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .entity_resolution import name_similarity, normalize_name

AREAS = {
    "health": [
        "clinical", "oncology", "diagnostic", "therapeutic", "biomarker",
        "immunology", "patient", "genomic", "epidemiology", "vaccine",
        "neurology", "pathogen",
    ],
    "agrifood": [
        "crop", "agriculture", "livestock", "soil", "harvest", "nutrition",
        "farming", "irrigation", "agronomy", "vineyard", "aquaculture",
        "orchard",
    ],
    "energy": [
        "solar", "photovoltaic", "wind", "turbine", "battery", "grid",
        "renewable", "hydrogen", "storage", "biofuel", "geothermal",
        "inverter",
    ],
    "mobility": [
        "vehicle", "transport", "railway", "logistics", "autonomous",
        "traffic", "freight", "charging", "navigation", "transit",
        "aviation", "micromobility",
    ],
    "digital": [
        "software", "algorithm", "cybersecurity", "cloud", "sensor",
        "robotics", "quantum", "analytics", "platform", "telecom",
        "semiconductor", "blockchain",
    ],
    "industry": [
        "manufacturing", "factory", "composite", "additive", "machining",
        "automation", "polymer", "coating", "assembly", "welding",
        "textile", "foundry",
    ],
    "society": [
        "heritage", "museum", "inclusion", "tourism", "governance",
        "citizen", "creative", "media", "language", "archive",
        "participation", "craftsmanship",
    ],
}

THEMES = {
    "life": ("health", "agrifood"),
    "green": ("energy", "mobility"),
    "tech": ("digital", "industry", "society"),
}

THEME_WORDS = {
    "life": ["biomedical", "wellbeing", "biological"],
    "green": ["sustainable", "emission", "decarbonised"],
    "tech": ["interoperable", "scalable", "computational"],
}

FILLER = [
    "novel", "approach", "framework", "pilot", "demonstration",
    "stakeholders", "methodology", "validation", "deployment",
    "consortium", "prototype", "assessment", "regional", "european",
]

# Verbatim phrases from the shipped SDG vocabulary, planted into abstracts.
SDG_PLANTS = [
    "climate change", "renewable energy", "clean water", "food security",
    "public health", "circular economy", "biodiversity", "gender equality",
    "smart city", "quality education", "marine pollution", "human rights",
    "energy efficiency", "waste reduction", "global partnership",
    "decent work", "social inclusion",
]

# All stems are pairwise distinct in their first four characters, so
# stem-first names land in distinct blocks and never get compared.
HOME_STEMS = [
    "Aurora", "Ponent", "Llevant", "Miralls", "Besalu", "Cadire",
    "Montseny", "Garraf", "Pedralta", "Tramuntana", "Xaloc", "Mestral",
    "Gregal", "Albera", "Cavall", "Delta", "Ebre", "Foix", "Gavarres",
    "Horta", "Indiba", "Jonquera", "Kilometre", "Litoral", "Noguera",
    "Obaga", "Pallars", "Quadern", "Ripoll", "Segre", "Turonet",
    "Urgell", "Valira", "Zenit", "Ardenya", "Boreal", "Cometa",
    "Dofi", "Esquirol", "Falgueres", "Collserola", "Empordanet",
    "Freixe", "Ginesta", "Heura", "Juneda", "Krill", "Lluerna",
    "Maduixa", "Narcis", "Orenetes", "Perdiu", "Quart", "Rovello",
    "Sargantana", "Tinell", "Ullastre", "Ventolera", "Xiprer",
    "Brancal", "Cingle", "Dunes", "Estol", "Fondal", "Gorg",
]

FOREIGN_STEMS = [
    "Kristall", "Nordwind", "Falke", "Brennero", "Loire", "Rhone",
    "Ticino", "Adige", "Vesta", "Polder", "Tulp", "Brugge", "Douro",
    "Minho", "Solna", "Uppsala", "Donau", "Alpenrose", "Meuse",
    "Schelde", "Arno", "Tevere", "Elbe", "Weser", "Saale", "Garonne",
    "Dordogne", "Anvers", "Leiden", "Wexford",
]

CITIES = {
    "Girona": "Girona",
    "Manresa": "Barcelona",
    "Reus": "Tarragona",
    "Olot": "Girona",
    "Tortosa": "Tarragona",
    "Lleida": "Lleida",
    "Figueres": "Girona",
    "Valls": "Tarragona",
    "Sabadell": "Barcelona",
    "Balaguer": "Lleida",
}

FOREIGN_COUNTRIES = ["DE", "FR", "IT", "NL", "BE", "PT", "SE", "AT"]

_SEPARATION_CEILING = 0.925  # cross-org pairs must stay below this
_MERGE_FLOOR = 0.935  # injected fuzzy alias pairs must clear this


@dataclass
class FixtureOrg:
    base_name: str
    country: str
    province: str
    regional_type: str  # orgType string in the regional schema
    eu_activity: str  # activityType code in the EU schema
    aliases: list[str] = field(default_factory=list)

    @property
    def names(self) -> list[str]:
        return [self.base_name] + self.aliases

    @property
    def is_home(self) -> bool:
        return self.country == "ES"


def _block_key(name: str, country: str) -> tuple[str, str] | None:
    norm = normalize_name(name)
    if not norm:
        return None
    return (country, norm.split(" ", 1)[0][:4])


class _OrgBuilder:
    """Greedy name picker that keeps blocks discriminable by construction.

    A candidate (base name or alias) is accepted only if every other org's
    name in the same (country, prefix) block scores below the separation
    ceiling, so the resolver cannot merge across ground-truth groups.
    """

    def __init__(self) -> None:
        self.orgs: list[FixtureOrg] = []
        self._blocks: dict[tuple[str, str], list[tuple[str, int]]] = {}

    def _collides(self, name: str, country: str, org_idx: int) -> bool:
        key = _block_key(name, country)
        if key is None:
            return True
        norm = normalize_name(name)
        for other_norm, oi in self._blocks.get(key, []):
            if oi == org_idx:
                continue
            if other_norm == norm or \
                    name_similarity(norm, other_norm) >= _SEPARATION_CEILING:
                return True
        return False

    def _register(self, name: str, country: str, org_idx: int) -> None:
        key = _block_key(name, country)
        assert key is not None
        self._blocks.setdefault(key, []).append((normalize_name(name), org_idx))

    def add_org(self, name: str, country: str, province: str,
                regional_type: str, eu_activity: str) -> FixtureOrg:
        idx = len(self.orgs)
        if self._collides(name, country, idx):
            raise AssertionError(f"fixture base name collides: {name!r}")
        org = FixtureOrg(name, country, province, regional_type, eu_activity)
        self.orgs.append(org)
        self._register(name, country, idx)
        return org

    def add_org_from_stems(self, pattern: str, stems: list[str], country: str,
                           province: str, regional_type: str,
                           eu_activity: str) -> FixtureOrg:
        for pos, stem in enumerate(stems):
            name = pattern.format(stem=stem)
            if not self._collides(name, country, len(self.orgs)):
                stems.pop(pos)
                return self.add_org(name, country, province, regional_type, eu_activity)
        raise AssertionError(f"no usable stem left for pattern {pattern!r}")

    def add_alias(self, org: FixtureOrg, *candidates: str) -> None:
        idx = self.orgs.index(org)
        base_norm = normalize_name(org.base_name)
        for alias in candidates:
            alias_norm = normalize_name(alias)
            if _block_key(alias, org.country) != _block_key(org.base_name, org.country):
                continue
            mergeable = alias_norm == base_norm or \
                name_similarity(alias_norm, base_norm) >= _MERGE_FLOOR
            if mergeable and not self._collides(alias, org.country, idx):
                org.aliases.append(alias)
                self._register(alias, org.country, idx)
                return


def _build_orgs() -> list[FixtureOrg]:
    b = _OrgBuilder()
    stems = list(HOME_STEMS)
    cities = list(CITIES)

    for i in range(12):
        city = cities[i % len(cities)]
        org = b.add_org_from_stems("Universitat {stem}", stems, "ES",
                                   CITIES[city], "Universitat", "HES")
        stem = org.base_name.split(" ", 1)[1]
        if i % 2 == 0:
            b.add_alias(org, f"Univ. {stem}", f"Universitat de {stem}")
        if i % 3 == 0:
            b.add_alias(org, org.base_name.upper())

    for i in range(18):
        city = cities[(i + 3) % len(cities)]
        org = b.add_org_from_stems("Institut {stem}", stems, "ES",
                                   CITIES[city], "Centre de Recerca", "REC")
        stem = org.base_name.split(" ", 1)[1]
        if i % 2 == 0:
            b.add_alias(org, f"Institut de {stem}")
        if i % 5 == 0:
            b.add_alias(org, f"INSTITUT {stem.upper()}")

    for i in range(22):
        city = cities[(i + 5) % len(cities)]
        org = b.add_org_from_stems("{stem} Enginyeria", stems, "ES",
                                   CITIES[city], "Empresa", "PRC")
        stem = org.base_name.split(" ", 1)[0]
        if i % 2 == 0:
            b.add_alias(org, f"{stem} Enginyeria, S.L.")
        if i % 4 == 0:
            b.add_alias(org, f"{stem} ENGINYERIA SL")

    for city, province in [("Vilafranca", "Barcelona"), ("Igualada", "Barcelona"),
                           ("Granollers", "Barcelona"), ("Torredembarra", "Tarragona"),
                           ("Mollerussa", "Lleida")]:
        b.add_org(f"Ajuntament de {city}", "ES", province,
                  "Administració pública", "PUB")

    for i in range(10):
        city = cities[(i + 7) % len(cities)]
        org = b.add_org_from_stems("Fundacio {stem}", stems, "ES",
                                   CITIES[city], "Fundació", "OTH")
        stem = org.base_name.split(" ", 1)[1]
        if i % 2 == 0:
            b.add_alias(org, f"Fundació Privada {stem}")

    for city, province in [("Martorell", "Barcelona"), ("Viladecans", "Barcelona"),
                           ("Palafrugell", "Girona"), ("Amposta", "Tarragona")]:
        b.add_org(f"Hospital de {city}", "ES", province, "Centre de Recerca", "REC")

    # foreign pool: 49 orgs, stems reused at most once per country/pattern
    patterns = [
        ("{stem} Institute of Technology", "REC"),
        ("{stem} University", "HES"),
        ("{stem} Systems GmbH", "PRC"),
        ("{stem} Research Campus", "REC"),
        ("{stem} Analytics", "PRC"),
    ]
    for i in range(49):
        stem = FOREIGN_STEMS[i % len(FOREIGN_STEMS)]
        pattern, activity = patterns[(i // len(FOREIGN_STEMS)) * 2 + i % 2
                                     if i >= len(FOREIGN_STEMS) else i % len(patterns)]
        country = FOREIGN_COUNTRIES[(i * 3 + i // len(FOREIGN_STEMS)) % len(FOREIGN_COUNTRIES)]
        org = b.add_org(pattern.format(stem=stem), country, "", "", activity)
        if i % 3 == 0:
            b.add_alias(org, org.base_name.upper())
        if i % 4 == 0 and org.base_name.endswith(" GmbH"):
            b.add_alias(org, org.base_name[: -len(" GmbH")])

    _dedupe_guard(b.orgs)
    _check_separation(b.orgs)
    return b.orgs


def _dedupe_guard(orgs: list[FixtureOrg]) -> None:
    seen: set[tuple[str, str]] = set()
    for org in orgs:
        for name in org.names:
            key = (name, org.country)
            if key in seen:
                raise AssertionError(f"fixture reuses name {key!r}")
            seen.add(key)


def _check_separation(orgs: list[FixtureOrg]) -> None:
    """Fixture self-check: injected groups merge, distinct orgs never do."""
    owner: dict[tuple[str, str], int] = {}
    for oi, org in enumerate(orgs):
        for name in org.names:
            owner[(name, org.country)] = oi
    by_block: dict[tuple[str, str], list[tuple[str, int]]] = {}
    for (name, country), oi in owner.items():
        key = _block_key(name, country)
        if key is not None:
            by_block.setdefault(key, []).append((name, oi))
    for key, members in sorted(by_block.items()):
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                (na, oa), (nb, ob) = members[i], members[j]
                if oa == ob:
                    continue
                score = name_similarity(normalize_name(na), normalize_name(nb))
                if score >= _SEPARATION_CEILING:
                    raise AssertionError(
                        f"fixture name pools too close: {na!r} vs {nb!r} = {score:.4f}"
                    )
    for org in orgs:
        base_norm = normalize_name(org.base_name)
        for alias in org.aliases:
            alias_norm = normalize_name(alias)
            if alias_norm == base_norm:
                continue
            score = name_similarity(alias_norm, base_norm)
            if score < _MERGE_FLOOR:
                raise AssertionError(
                    f"fixture alias too weak: {alias!r} vs {org.base_name!r} = {score:.4f}"
                )


def _abstract(rng: random.Random, theme: str, areas: list[str],
              plant: list[str]) -> str:
    words: list[str] = []
    for _ in range(45):
        roll = rng.random()
        if roll < 0.55:
            words.append(rng.choice(AREAS[rng.choice(areas)]))
        elif roll < 0.7:
            words.append(rng.choice(THEME_WORDS[theme]))
        else:
            words.append(rng.choice(FILLER))
    for phrase in plant:
        slot = rng.randrange(len(words) + 1)
        words.insert(slot, phrase)
    return " ".join(words).capitalize() + "."


def _title(rng: random.Random, areas: list[str]) -> str:
    pool = AREAS[areas[0]]
    picks = rng.sample(pool, 3)
    return f"{picks[0].capitalize()} {picks[1]} platform for {picks[2]}"


@dataclass
class FixturePaths:
    root: Path
    eu_projects: Path
    eu_participants: Path
    regional: Path
    weak_rules: Path
    gold_labels: Path
    gold_labels_b: Path
    vocabulary: Path
    org_overrides: Path
    alias_groups: Path
    config: Path


def generate_fixture(
    out_dir: str | Path,
    n_eu: int = 300,
    n_regional: int = 200,
    seed: int = 20240401,
) -> FixturePaths:
    """Write the full synthetic input set plus its ground-truth sidecars."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    orgs = _build_orgs()
    home = [o for o in orgs if o.is_home]
    foreign = [o for o in orgs if not o.is_home]
    areas = list(AREAS)
    theme_of = {a: t for t, As in THEMES.items() for a in As}

    def pick_areas() -> list[str]:
        primary = rng.choice(areas)
        if rng.random() < 0.2:
            theme = theme_of[primary]
            others = [a for a in THEMES[theme] if a != primary]
            if others:
                return [primary, rng.choice(others)]
        return [primary]

    def alias_for(org: FixtureOrg) -> str:
        return rng.choice(org.names)

    gold: dict[str, list[str]] = {}

    # EU side -------------------------------------------------------------
    eu_projects_path = out / "eu_projects.csv"
    eu_participants_path = out / "eu_participants.csv"
    with open(eu_projects_path, "w", encoding="utf-8", newline="") as pf, \
            open(eu_participants_path, "w", encoding="utf-8", newline="") as qf:
        pw = csv.writer(pf)
        qw = csv.writer(qf)
        pw.writerow(["id", "acronym", "title", "objective", "programme",
                     "instrument", "topicCode", "startDate", "endDate",
                     "totalCost", "ecMaxContribution", "metadataTags"])
        qw.writerow(["projectId", "name", "country", "role",
                     "ecContribution", "activityType"])
        for i in range(n_eu):
            pid = f"{100001 + i}"
            proj_areas = pick_areas()
            theme = theme_of[proj_areas[0]]
            gold[f"EU:{pid}"] = list(proj_areas)
            start = rng.randrange(2019, 2024)
            end = start + rng.randrange(2, 5)
            plants = (rng.sample(SDG_PLANTS, rng.randrange(1, 3))
                      if rng.random() < 0.45 else [])
            title = _title(rng, proj_areas)
            abstract = _abstract(rng, theme, proj_areas, plants)
            programme = f"FP-{proj_areas[0].upper()}-{start}"
            topic_code = f"{proj_areas[0].upper()}-{rng.randrange(1, 30):02d}"
            tags = [f"area:{a}" for a in proj_areas] + [f"panel:{theme}"]

            n_parts = rng.randrange(2, 6)
            chosen: list[FixtureOrg] = []
            while len(chosen) < n_parts:
                pool = home if rng.random() < 0.55 else foreign
                org = rng.choice(pool)
                if org not in chosen:
                    chosen.append(org)
            contributions = [rng.randrange(80, 600) * 1000 for _ in chosen]
            ec_max = sum(contributions)
            total = int(ec_max * (1.0 + rng.random() * 0.4))
            acronym = "".join(w[0] for w in title.split()[:4]).upper()
            pw.writerow([pid, acronym, title, abstract, programme,
                         rng.choice(["RIA", "IA", "CSA"]), topic_code,
                         f"{start}-01-01", f"{end}-12-31",
                         f"{total}.00", f"{ec_max}.00", ";".join(tags)])
            for j, (org, contrib) in enumerate(zip(chosen, contributions)):
                qw.writerow([pid, alias_for(org), org.country,
                             "coordinator" if j == 0 else "participant",
                             f"{contrib}.00", org.eu_activity])

    # regional side --------------------------------------------------------
    regional_path = out / "regional.csv"
    with open(regional_path, "w", encoding="utf-8", newline="") as rf:
        rw = csv.writer(rf)
        rw.writerow(["projectId", "acronym", "title", "abstract", "programme",
                     "instrument", "startDate", "endDate", "totalCost", "grant",
                     "orgName", "orgType", "province", "country", "role",
                     "contribution"])
        # guaranteed coverage: every home org shows up in regional data
        coverage = home * ((n_regional // len(home)) + 1)
        for i in range(n_regional):
            pid = f"OP{2019 + i % 5}-{i + 1:04d}"
            proj_areas = [rng.choice(areas)]
            theme = theme_of[proj_areas[0]]
            gold[f"REG:{pid}"] = list(proj_areas)
            start = rng.randrange(2019, 2024)
            end = start + rng.randrange(1, 4)
            plants = ([rng.choice(SDG_PLANTS)] if rng.random() < 0.4 else [])
            title = _title(rng, proj_areas)
            abstract = _abstract(rng, theme, proj_areas, plants)
            programme = f"REG-OP-{proj_areas[0].upper()}"
            n_parts = rng.randrange(1, 4)
            chosen = [coverage[i]]
            while len(chosen) < n_parts:
                org = rng.choice(home)
                if org not in chosen:
                    chosen.append(org)
            contributions = [rng.randrange(20, 200) * 1000 for _ in chosen]
            grant = sum(contributions)
            total = int(grant * (1.0 + rng.random() * 0.5))
            acronym = "".join(w[0] for w in title.split()[:3]).upper()
            start_date = str(start) if i % 7 == 0 else f"{start}-03-01"
            for j, (org, contrib) in enumerate(zip(chosen, contributions)):
                org_type = "" if (i % 23 == 0 and j == 1) else org.regional_type
                rw.writerow([pid, acronym, title, abstract, programme,
                             rng.choice(["GRANT", "LOAN", "VOUCHER"]),
                             start_date, f"{end}-12-31", f"{total}.00",
                             f"{grant}.00", alias_for(org), org_type,
                             org.province, org.country,
                             "coordinator" if j == 0 else "partner",
                             f"{contrib}.00"])

    # weak rules -----------------------------------------------------------
    weak_rules_path = out / "weak_rules.csv"
    with open(weak_rules_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["area", "field", "pattern", "polarity"])
        for area in areas:
            w.writerow([area, "PROGRAMME", f"FP-{area.upper()}-*", "POSITIVE"])
            w.writerow([area, "PROGRAMME", f"REG-OP-{area.upper()}", "POSITIVE"])
            w.writerow([area, "METADATA_TAG", f"area:{area}", "POSITIVE"])
        w.writerow(["society", "TOPIC_CODE", "SOCIETY-EXCLUDED-*", "NEGATIVE"])

    # gold labels (ground truth of the generator) and a second annotator
    gold_path = out / "gold_labels.csv"
    with open(gold_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["projectId", "area"])
        for pid in sorted(gold):
            for area in sorted(gold[pid]):
                w.writerow([pid, area])
    gold_b_path = out / "gold_labels_b.csv"
    with open(gold_b_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["projectId", "area"])
        for pid in sorted(gold):
            kept = [a for a in sorted(gold[pid]) if rng.random() < 0.96]
            if not kept:
                kept = sorted(gold[pid])[:1]
            if rng.random() < 0.03:
                kept.append(rng.choice(areas))
            for area in sorted(set(kept)):
                w.writerow([pid, area])

    # SDG vocabulary: copy the shipped sample next to the inputs
    vocab_path = out / "sdg_vocabulary.csv"
    vocab_path.write_text(
        resources.files("rimap.data").joinpath("sdg_vocabulary.csv").read_text("utf-8"),
        encoding="utf-8",
    )

    org_overrides_path = out / "org_overrides.csv"
    org_overrides_path.write_text("nameA,nameB,action\n", encoding="utf-8")

    alias_groups_path = out / "alias_groups.json"
    alias_groups_path.write_text(
        json.dumps(
            [
                {"country": o.country, "names": o.names, "province": o.province}
                for o in orgs
            ],
            sort_keys=True, ensure_ascii=False, indent=1,
        ) + "\n",
        encoding="utf-8",
    )

    config_path = out / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "run_dir": "run",
                "home_country": "ES",
                "inputs": {
                    "eu_projects": "eu_projects.csv",
                    "eu_participants": "eu_participants.csv",
                    "regional": "regional.csv",
                },
                "vocabulary": "sdg_vocabulary.csv",
                "weak_rules": "weak_rules.csv",
                "gold_labels": "gold_labels.csv",
                "gold_labels_b": "gold_labels_b.csv",
                "overrides": {"org_overrides": "org_overrides.csv"},
                "embedding": {"dim": 128, "seed": 42},
                "topics": {"k": 12, "seed": 7},
                "tsne": {"perplexity": 30.0, "iters": 1000, "seed": 11},
                "classifier": {"threshold": 0.5, "l2": 0.001},
                "graph_layout": {"iterations": 150, "seed": 3},
                "server": {"port": 8123, "cors_origins": ["*"]},
            },
            indent=2,
        ) + "\n",
        encoding="utf-8",
    )

    return FixturePaths(
        root=out,
        eu_projects=eu_projects_path,
        eu_participants=eu_participants_path,
        regional=regional_path,
        weak_rules=weak_rules_path,
        gold_labels=gold_path,
        gold_labels_b=gold_b_path,
        vocabulary=vocab_path,
        org_overrides=org_overrides_path,
        alias_groups=alias_groups_path,
        config=config_path,
    )


def make_documents(n: int, seed: int = 99) -> list[str]:
    """Standalone synthetic documents (title+abstract style) for scale tests."""
    rng = random.Random(seed)
    theme_of = {a: t for t, As in THEMES.items() for a in As}
    docs = []
    for _ in range(n):
        area = rng.choice(list(AREAS))
        plants = rng.sample(SDG_PLANTS, rng.randrange(0, 3))
        docs.append(
            _title(rng, [area]) + " " + _abstract(rng, theme_of[area], [area], plants)
        )
    return docs
