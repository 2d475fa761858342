"""Stage orchestration: run the pipeline and write deterministic artifacts.

Stages run in dependency order (ingest -> resolve -> embed -> classify /
topics / sdg -> map / graph / snapshot). Rerunning with the same config
and inputs reproduces every artifact byte for byte; only the stage
timings recorded in the manifest vary.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import (
    collaboration_graph,
    entity_resolution,
    ingest,
    priority_classifier,
    sdg_tagger,
    semantic_map,
    snapshot as snapshot_mod,
    text_embedding,
    topic_model,
)
from .config import PipelineConfig

logger = logging.getLogger(__name__)

ARTIFACTS = {
    "corpus": "corpus.json",
    "ingest_report": "ingest_report.json",
    "organisations": "organisations.json",
    "decisions": "resolution_decisions.csv",
    "vocabulary": "vocabulary.csv",
    "embeddings": "embeddings.csv",
    "priority_model": "priority_model.json",
    "priority_report": "priority_report.json",
    "topics": "topics.json",
    "sdg_tags": "sdg_tags.csv",
    "layout": "layout.csv",
    "nodes": "network_nodes.csv",
    "edges": "network_edges.csv",
    "external": "external_partners.csv",
    "snapshot": "snapshot.json",
    "manifest": "manifest.json",
}


@dataclass
class RunResult:
    config: PipelineConfig
    snapshot: snapshot_mod.Snapshot | None
    manifest: dict
    counts: dict[str, int] = field(default_factory=dict)


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def run_pipeline(config: PipelineConfig, until: str = "build") -> RunResult:
    """Execute stages in dependency order up to `until` (ingest|enrich|build).

    Artifacts land in the run directory; the manifest and snapshot are
    written only on a full build.
    """
    if until not in ("ingest", "enrich", "build"):
        raise ValueError(f"unknown stage bound {until!r}")
    run_dir = config.run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    counts: dict[str, int] = {}

    def timed(name: str):
        class _Timer:
            def __enter__(self_inner):
                self_inner.t0 = time.perf_counter()

            def __exit__(self_inner, *exc):
                timings[name] = round(time.perf_counter() - self_inner.t0, 3)

        return _Timer()

    # ingest
    with timed("ingest"):
        eu, report_eu = ingest.parse_eu_csv(config.eu_projects, config.eu_participants)
        regional, report_reg = ingest.parse_regional_csv(config.regional)
        corpus = ingest.unify(eu, regional)
        report = ingest.IngestReport(
            rejects=report_eu.rejects + report_reg.rejects,
            warnings=report_eu.warnings + report_reg.warnings,
            rows_read={**report_eu.rows_read, **report_reg.rows_read},
        )
    ingest.write_canonical(corpus, run_dir / ARTIFACTS["corpus"])
    (run_dir / ARTIFACTS["ingest_report"]).write_text(
        json.dumps(report.to_dict(), sort_keys=True, ensure_ascii=False, indent=1) + "\n",
        encoding="utf-8",
    )
    counts["projects"] = len(corpus.projects)
    counts["participations"] = len(corpus.participations)
    counts["rejects"] = report.n_rejected
    if until == "ingest":
        return RunResult(config=config, snapshot=None,
                         manifest={"stageTimings": timings}, counts=counts)

    # resolve
    with timed("resolve"):
        overrides = (entity_resolution.load_overrides(config.org_overrides)
                     if config.org_overrides else [])
        home_names: list[str] = []
        if config.home_orgs:
            home_names = [
                line.strip()
                for line in config.home_orgs.read_text(encoding="utf-8").splitlines()
                if line.strip() and not line.startswith("#")
            ]
        orgs, decisions, index = entity_resolution.resolve_with_index(
            entity_resolution.corpus_raw_orgs(corpus),
            overrides=overrides,
            home_country=config.home_country,
            home_overrides=home_names,
        )
        org_map = {o.org_id: o for o in orgs}
        participation_orgs = entity_resolution.attach_orgs(corpus, index)
    entity_resolution.write_organisations(orgs, run_dir / ARTIFACTS["organisations"])
    entity_resolution.write_decisions(decisions, run_dir / ARTIFACTS["decisions"])
    counts["organisations"] = len(orgs)

    # embed
    with timed("embed"):
        vocab, matrix = text_embedding.fit_tfidf(corpus)
        if config.embedding.import_path:
            embeddings = text_embedding.import_vectors(
                config.embedding.import_path, corpus.project_ids
            )
        else:
            embeddings = text_embedding.project_dense(
                matrix, dim=config.embedding.dim, seed=config.embedding.seed
            )
    text_embedding.write_vocabulary(vocab, run_dir / ARTIFACTS["vocabulary"])
    text_embedding.write_vectors(embeddings, run_dir / ARTIFACTS["embeddings"])
    counts["vocabulary_terms"] = len(vocab)

    # classify
    with timed("classify"):
        rules = priority_classifier.load_rules(config.weak_rules, config.priority_labels)
        weak = priority_classifier.weak_label(corpus, rules)
        model = priority_classifier.train(
            embeddings, weak, labels=config.priority_labels,
            l2=config.classifier.l2, threshold=config.classifier.threshold,
        )
        predictions = priority_classifier.predict(model, embeddings)
        priority_classifier.apply_predictions(corpus, predictions)
        eval_report = None
        if config.gold_labels:
            gold = priority_classifier.load_gold_labels(config.gold_labels)
            gold_b = (priority_classifier.load_gold_labels(config.gold_labels_b)
                      if config.gold_labels_b else None)
            eval_report = priority_classifier.evaluate(model, embeddings, gold, gold_b)
    (run_dir / ARTIFACTS["priority_model"]).write_text(model.to_json(), encoding="utf-8")
    if eval_report is not None:
        (run_dir / ARTIFACTS["priority_report"]).write_text(
            json.dumps(eval_report.to_dict(), sort_keys=True, indent=1) + "\n",
            encoding="utf-8",
        )
        counts["gold_eval_docs"] = eval_report.n_eval
    counts["weak_labelled"] = len(weak)

    # topics
    with timed("topics"):
        tm_config = topic_model.TopicModelConfig(
            k=config.topics.k, max_iters=config.topics.max_iters,
            tol=config.topics.tol, seed=config.topics.seed,
            n_init=config.topics.n_init,
        )
        result = topic_model.kmeans(embeddings, tm_config)
        topics = topic_model.name_topics(
            result.topics, matrix, vocab, overrides=config.topic_label_overrides
        )
        for project in corpus.projects:
            project.enrichment.topic_id = result.assignments[project.project_id]
    topic_model.write_topic_report(topics, run_dir / ARTIFACTS["topics"])
    counts["topics"] = len(topics)

    # sdg
    with timed("sdg"):
        vocabulary = sdg_tagger.load_vocabulary(config.vocabulary)
        tagger = sdg_tagger.SdgTagger(vocabulary)
        tag_rows = []
        for project in corpus.projects:
            matches = tagger.tag(project)
            sdg_tagger.apply_tags(project, matches)
            tag_rows.append((project.project_id, matches))
    sdg_tagger.write_tag_dump(tag_rows, run_dir / ARTIFACTS["sdg_tags"])
    counts["sdg_tagged"] = sum(1 for _, m in tag_rows if m)
    if until == "enrich":
        ingest.write_canonical(corpus, run_dir / ARTIFACTS["corpus"])
        return RunResult(config=config, snapshot=None,
                         manifest={"stageTimings": timings}, counts=counts)

    # map
    with timed("map"):
        layout = semantic_map.tsne(embeddings, config.tsne)
        for project in corpus.projects:
            project.enrichment.map_xy = layout.coords[project.project_id]
    semantic_map.write_layout(
        layout,
        {p.project_id: p.enrichment.topic_id for p in corpus.projects},
        run_dir / ARTIFACTS["layout"],
    )

    # graph (unfiltered)
    with timed("graph"):
        graph = collaboration_graph.build_graph(
            corpus.project_ids, participation_orgs, org_map
        )
        external = collaboration_graph.rank_external_partners(
            corpus.project_ids, participation_orgs, org_map
        )
    collaboration_graph.write_graph_csv(
        graph, run_dir / ARTIFACTS["nodes"], run_dir / ARTIFACTS["edges"]
    )
    collaboration_graph.write_external_csv(external, run_dir / ARTIFACTS["external"])
    counts["network_nodes"] = len(graph.nodes)
    counts["network_edges"] = len(graph.edges)

    # canonical dump now includes enrichment
    ingest.write_canonical(corpus, run_dir / ARTIFACTS["corpus"])

    # manifest + snapshot
    input_hashes = {
        name: _hash_file(path) for name, path in sorted(config.input_files().items())
    }
    manifest = {
        "configHash": config.config_hash(),
        "config": config.canonical_dict(),
        "inputHashes": input_hashes,
        "counts": dict(sorted(counts.items())),
        "versions": {
            "rimap": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "stageTimings": timings,
    }
    snap = snapshot_mod.Snapshot(
        corpus=corpus,
        organisations=org_map,
        participation_orgs=participation_orgs,
        layout=layout.coords,
        topic_labels={t.topic_id: t.label for t in topics},
        priority_labels=config.priority_labels,
        home_country=config.home_country,
        manifest=manifest_without_timings(manifest),
    )
    snapshot_mod.write_snapshot(snap, run_dir / ARTIFACTS["snapshot"])
    (run_dir / ARTIFACTS["manifest"]).write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    return RunResult(config=config, snapshot=snap, manifest=manifest, counts=counts)


def manifest_without_timings(manifest: dict) -> dict:
    return {k: v for k, v in manifest.items() if k != "stageTimings"}
