"""Emergent topics: seeded k-means over embeddings, named by cluster terms.

Clustering is k-means++ initialised Lloyd iteration, best of n_init
restarts by inertia, fully deterministic for a fixed seed. Cluster names
come from class-level TF-IDF with a manual override file on top.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .text_embedding import EmbeddingMatrix, TermDocMatrix, Vocabulary

TOP_TERMS = 10
AUTO_LABEL_TERMS = 3


class TopicError(Exception):
    pass


class KTooLarge(TopicError):
    def __init__(self, k: int, n: int):
        super().__init__(f"k={k} exceeds the number of projects ({n})")


class UnknownTopicId(TopicError):
    def __init__(self, topic_id: int):
        super().__init__(f"override references unknown topic id {topic_id}")


@dataclass
class TopicModelConfig:
    k: int
    max_iters: int = 100
    tol: float = 1e-6
    seed: int = 0
    n_init: int = 10

    def validate(self, n_projects: int) -> None:
        if self.k < 2:
            raise TopicError("k must be >= 2")
        if self.k > n_projects:
            raise KTooLarge(self.k, n_projects)


@dataclass
class Topic:
    topic_id: int
    centroid: np.ndarray
    member_ids: tuple[str, ...]
    top_terms: tuple[tuple[str, float], ...] = ()
    label: str = ""


@dataclass
class KMeansResult:
    topics: list[Topic]
    labels: np.ndarray  # cluster index per embeddings row (pre-renumbering)
    assignments: dict[str, int]  # project id -> topic_id
    inertia: float
    inertia_trace: list[float] = field(default_factory=list)


def _squared_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # explicit differences keep assignment ties deterministic
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
        centers[j] = X[idx]
        d2 = np.minimum(d2, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(
    X: np.ndarray, centers: np.ndarray, max_iters: int, tol: float
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    k = centers.shape[0]
    trace: list[float] = []
    labels = np.zeros(X.shape[0], dtype=np.int64)
    for _ in range(max_iters):
        D = _squared_distances(X, centers)
        labels = D.argmin(axis=1)
        point_cost = D[np.arange(X.shape[0]), labels]
        trace.append(float(point_cost.sum()))

        new_centers = centers.copy()
        used: set[int] = set()
        for c in range(k):
            members = labels == c
            if members.any():
                new_centers[c] = X[members].mean(axis=0)
        for c in range(k):
            if not (labels == c).any():
                # reseed an empty cluster at the worst-fit point
                order = np.argsort(-point_cost)
                far = next(int(i) for i in order if int(i) not in used)
                used.add(far)
                new_centers[c] = X[far]
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if shift < tol:
            break
    D = _squared_distances(X, centers)
    labels = D.argmin(axis=1)
    inertia = float(D[np.arange(X.shape[0]), labels].sum())
    return centers, labels, inertia, trace


def kmeans(embeddings: EmbeddingMatrix, config: TopicModelConfig) -> KMeansResult:
    """Best of n_init seeded k-means++ runs by inertia; deterministic."""
    X = embeddings.matrix
    config.validate(X.shape[0])
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_init)
    best: tuple[float, int] | None = None
    best_run = None
    for r, ss in enumerate(seeds):
        rng = np.random.Generator(np.random.PCG64(ss))
        centers0 = _kmeanspp_init(X, config.k, rng)
        centers, labels, inertia, trace = _lloyd(X, centers0, config.max_iters, config.tol)
        if best is None or inertia < best[0]:
            best = (inertia, r)
            best_run = (centers, labels, inertia, trace)
    assert best_run is not None
    centers, labels, inertia, trace = best_run

    # stable topic numbering: larger clusters first, ties by earliest member
    order = sorted(
        range(config.k),
        key=lambda c: (-int((labels == c).sum()),
                       min((pid for pid, l in zip(embeddings.ids, labels) if l == c),
                           default="~")),
    )
    renumber = {old: new for new, old in enumerate(order)}
    topics: list[Topic] = []
    for old in order:
        members = tuple(sorted(
            pid for pid, l in zip(embeddings.ids, labels) if l == old
        ))
        topics.append(Topic(
            topic_id=renumber[old],
            centroid=centers[old].copy(),
            member_ids=members,
        ))
    assignments = {
        pid: renumber[int(l)] for pid, l in zip(embeddings.ids, labels)
    }
    return KMeansResult(
        topics=topics, labels=labels, assignments=assignments,
        inertia=inertia, inertia_trace=trace,
    )


def silhouette(X: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette; singleton clusters and all-zero spreads score 0."""
    n = X.shape[0]
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise TopicError("silhouette needs at least 2 clusters")
    D = np.sqrt(np.maximum(_squared_distances(X, X), 0.0))
    scores = np.zeros(n)
    for i in range(n):
        own = labels == labels[i]
        n_own = int(own.sum())
        if n_own <= 1:
            scores[i] = 0.0
            continue
        a = D[i, own].sum() / (n_own - 1)
        b = math.inf
        for c in uniq:
            if c == labels[i]:
                continue
            other = labels == c
            b = min(b, float(D[i, other].mean()))
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


@dataclass(frozen=True)
class SweepRow:
    k: int
    inertia: float
    silhouette: float


def sweep_k(
    embeddings: EmbeddingMatrix,
    k_range: Sequence[int],
    seed: int = 0,
    n_init: int = 10,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> list[SweepRow]:
    """One clustering per k under the same seed policy; a human picks k."""
    rows = []
    for k in k_range:
        config = TopicModelConfig(k=k, max_iters=max_iters, tol=tol, seed=seed, n_init=n_init)
        result = kmeans(embeddings, config)
        labels = np.array([result.assignments[pid] for pid in embeddings.ids])
        rows.append(SweepRow(k=k, inertia=result.inertia,
                             silhouette=silhouette(embeddings.matrix, labels)))
    return rows


def name_topics(
    topics: Sequence[Topic],
    matrix: TermDocMatrix,
    vocabulary: Vocabulary,
    overrides: str | Path | None = None,
) -> list[Topic]:
    """Rank cluster terms by class TF-IDF; auto-label from the top three.

    Score(t, c) = count(t in c) * ln(k / clusters containing t); terms in
    every cluster score zero and are excluded. Overrides (CSV
    topicId,label) replace the auto label.
    """
    k = len(topics)
    row_of = {pid: i for i, pid in enumerate(matrix.ids)}
    cluster_counts: list[np.ndarray] = []
    for topic in topics:
        counts = np.zeros(matrix.n_terms)
        for pid in topic.member_ids:
            idx, cnt = matrix.row_counts(row_of[pid])
            counts[idx] += cnt
        cluster_counts.append(counts)
    presence = np.zeros(matrix.n_terms)
    for counts in cluster_counts:
        presence += counts > 0

    named: list[Topic] = []
    for topic, counts in zip(topics, cluster_counts):
        with np.errstate(divide="ignore"):
            idf = np.log(k / np.maximum(presence, 1.0))
        scores = counts * idf
        candidates = [
            (vocabulary.terms[j], float(scores[j]))
            for j in np.nonzero(scores > 0.0)[0]
        ]
        candidates.sort(key=lambda ts: (-ts[1], ts[0]))
        top = tuple(candidates[:TOP_TERMS])
        label = "/".join(t for t, _ in top[:AUTO_LABEL_TERMS])
        named.append(Topic(
            topic_id=topic.topic_id, centroid=topic.centroid,
            member_ids=topic.member_ids, top_terms=top, label=label,
        ))

    if overrides is not None:
        known = {t.topic_id for t in named}
        with open(overrides, "r", encoding="utf-8-sig", newline="") as fh:
            for row in csv.DictReader(fh):
                tid = int(row["topicId"])
                if tid not in known:
                    raise UnknownTopicId(tid)
                for t in named:
                    if t.topic_id == tid:
                        t.label = row["label"].strip()
    return named


def write_topic_report(topics: Sequence[Topic], path: str | Path) -> None:
    doc = [
        {
            "topicId": t.topic_id,
            "label": t.label,
            "size": len(t.member_ids),
            "topTerms": [{"term": term, "score": score} for term, score in t.top_terms],
            "members": list(t.member_ids),
        }
        for t in sorted(topics, key=lambda t: t.topic_id)
    ]
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=1) + "\n",
        encoding="utf-8",
    )
