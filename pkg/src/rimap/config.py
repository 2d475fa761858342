"""Pipeline configuration: a single documented JSON file.

Schema (paths resolve relative to the config file):

    {
      "run_dir": "runs/demo",
      "home_country": "ES",
      "inputs": {
        "eu_projects": "eu_projects.csv",
        "eu_participants": "eu_participants.csv",
        "regional": "regional.csv"
      },
      "vocabulary": "sdg_vocabulary.csv",
      "weak_rules": "weak_rules.csv",
      "priority_labels": ["health", "..."],            // optional, 7 labels
      "gold_labels": "gold_labels.csv",                // optional
      "gold_labels_b": "gold_labels_b.csv",            // optional
      "overrides": {                                    // optional block
        "org_overrides": "org_overrides.csv",
        "topic_labels": "topic_labels.csv",
        "home_orgs": "home_orgs.txt"
      },
      "embedding": {"dim": 128, "seed": 42, "import_path": null},
      "topics": {"k": 12, "seed": 7, "n_init": 10, "max_iters": 100, "tol": 1e-6},
      "tsne": {"perplexity": 30.0, "iters": 1000, "seed": 11},
      "classifier": {"threshold": 0.5, "l2": 0.001},
      "graph_layout": {"iterations": 150, "seed": 3},
      "server": {"port": 8000, "cors_origins": ["*"]}
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .priority_classifier import DEFAULT_PRIORITY_AREAS
from .semantic_map import TsneConfig


class ConfigError(Exception):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass
class EmbeddingConfig:
    dim: int = 128
    seed: int = 42
    import_path: Path | None = None


@dataclass
class TopicsConfig:
    k: int = 12
    seed: int = 7
    n_init: int = 10
    max_iters: int = 100
    tol: float = 1e-6


@dataclass
class ClassifierConfig:
    threshold: float = 0.5
    l2: float = 1e-3


@dataclass
class GraphLayoutConfig:
    iterations: int = 150
    seed: int = 3


@dataclass
class ServerConfig:
    port: int = 8000
    host: str = "127.0.0.1"
    cors_origins: list[str] = field(default_factory=lambda: ["*"])


@dataclass
class PipelineConfig:
    run_dir: Path
    home_country: str
    eu_projects: Path
    eu_participants: Path
    regional: Path
    vocabulary: Path
    weak_rules: Path
    priority_labels: tuple[str, ...] = DEFAULT_PRIORITY_AREAS
    gold_labels: Path | None = None
    gold_labels_b: Path | None = None
    org_overrides: Path | None = None
    topic_label_overrides: Path | None = None
    home_orgs: Path | None = None
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    topics: TopicsConfig = field(default_factory=TopicsConfig)
    tsne: TsneConfig = field(default_factory=TsneConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    graph_layout: GraphLayoutConfig = field(default_factory=GraphLayoutConfig)
    server: ServerConfig = field(default_factory=ServerConfig)

    def input_files(self) -> dict[str, Path]:
        files = {
            "eu_projects": self.eu_projects,
            "eu_participants": self.eu_participants,
            "regional": self.regional,
            "vocabulary": self.vocabulary,
            "weak_rules": self.weak_rules,
        }
        for name, path in (
            ("gold_labels", self.gold_labels),
            ("gold_labels_b", self.gold_labels_b),
            ("org_overrides", self.org_overrides),
            ("topic_labels", self.topic_label_overrides),
            ("home_orgs", self.home_orgs),
            ("embedding.import_path", self.embedding.import_path),
        ):
            if path is not None:
                files[name] = path
        return files

    def canonical_dict(self) -> dict:
        """Config as a stable dict (absolute paths) for hashing/manifest."""
        return {
            "homeCountry": self.home_country,
            "priorityLabels": list(self.priority_labels),
            "inputs": {k: str(v) for k, v in sorted(self.input_files().items())},
            "embedding": {"dim": self.embedding.dim, "seed": self.embedding.seed,
                          "importPath": str(self.embedding.import_path)
                          if self.embedding.import_path else None},
            "topics": vars(self.topics).copy(),
            "tsne": vars(self.tsne).copy(),
            "classifier": vars(self.classifier).copy(),
            "graphLayout": vars(self.graph_layout).copy(),
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _require(doc: dict, key: str, problems: list[str], kind=str):
    value = doc.get(key)
    if value is None:
        problems.append(f"{key}: missing required field")
        return None
    if not isinstance(value, kind):
        problems.append(f"{key}: expected {kind.__name__}")
        return None
    return value


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate; raises ConfigError naming every offending field."""
    path = Path(path)
    problems: list[str] = []
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as err:
        raise ConfigError([f"config is not valid JSON: {err}"])
    base = path.parent

    def resolve(key: str, value: str | None) -> Path | None:
        if value is None:
            return None
        p = (base / value).resolve()
        if not p.exists():
            problems.append(f"{key}: file not found: {p}")
        return p

    run_dir_raw = _require(doc, "run_dir", problems)
    home_country = _require(doc, "home_country", problems) or ""
    inputs = doc.get("inputs") or {}
    eu_projects = resolve("inputs.eu_projects", inputs.get("eu_projects")) \
        if inputs.get("eu_projects") else problems.append("inputs.eu_projects: missing required field")
    eu_participants = resolve("inputs.eu_participants", inputs.get("eu_participants")) \
        if inputs.get("eu_participants") else problems.append("inputs.eu_participants: missing required field")
    regional = resolve("inputs.regional", inputs.get("regional")) \
        if inputs.get("regional") else problems.append("inputs.regional: missing required field")
    vocabulary = resolve("vocabulary", doc.get("vocabulary")) \
        if doc.get("vocabulary") else problems.append("vocabulary: missing required field")
    weak_rules = resolve("weak_rules", doc.get("weak_rules")) \
        if doc.get("weak_rules") else problems.append("weak_rules: missing required field")

    labels = tuple(doc.get("priority_labels") or DEFAULT_PRIORITY_AREAS)
    if len(labels) != 7:
        problems.append(f"priority_labels: expected 7 labels, got {len(labels)}")

    overrides = doc.get("overrides") or {}
    gold = resolve("gold_labels", doc.get("gold_labels"))
    gold_b = resolve("gold_labels_b", doc.get("gold_labels_b"))
    org_overrides = resolve("overrides.org_overrides", overrides.get("org_overrides"))
    topic_overrides = resolve("overrides.topic_labels", overrides.get("topic_labels"))
    home_orgs = resolve("overrides.home_orgs", overrides.get("home_orgs"))

    def section(name: str, cls, **renames):
        raw = doc.get(name) or {}
        kwargs = {}
        for key, value in raw.items():
            field_name = renames.get(key, key)
            if field_name not in cls.__dataclass_fields__:
                problems.append(f"{name}.{key}: unknown field")
                continue
            kwargs[field_name] = value
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as err:
            problems.append(f"{name}: {err}")
            return cls()

    embedding_raw = dict(doc.get("embedding") or {})
    import_path = embedding_raw.pop("import_path", None)
    embedding = EmbeddingConfig(
        **{k: v for k, v in embedding_raw.items() if k in ("dim", "seed")}
    )
    for k in embedding_raw:
        if k not in ("dim", "seed"):
            problems.append(f"embedding.{k}: unknown field")
    if import_path:
        embedding.import_path = resolve("embedding.import_path", import_path)

    topics = section("topics", TopicsConfig)
    tsne_cfg = section("tsne", TsneConfig)
    classifier = section("classifier", ClassifierConfig)
    graph_layout = section("graph_layout", GraphLayoutConfig)
    server = section("server", ServerConfig)

    if problems:
        raise ConfigError(problems)

    run_dir = (base / run_dir_raw).resolve()
    return PipelineConfig(
        run_dir=run_dir,
        home_country=home_country,
        eu_projects=eu_projects,  # type: ignore[arg-type]
        eu_participants=eu_participants,  # type: ignore[arg-type]
        regional=regional,  # type: ignore[arg-type]
        vocabulary=vocabulary,  # type: ignore[arg-type]
        weak_rules=weak_rules,  # type: ignore[arg-type]
        priority_labels=labels,
        gold_labels=gold,
        gold_labels_b=gold_b,
        org_overrides=org_overrides,
        topic_label_overrides=topic_overrides,
        home_orgs=home_orgs,
        embedding=embedding,
        topics=topics,
        tsne=tsne_cfg,
        classifier=classifier,
        graph_layout=graph_layout,
        server=server,
    )
