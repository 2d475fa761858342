"""Deterministic document embeddings: TF-IDF under a seeded random projection.

The projection matrix is generated by a stateless counter-based PRNG
(SplitMix64 finalizer + Box-Muller) keyed on (seed, term index), so the
same vocabulary and seed reproduce the same matrix anywhere. Externally
computed vectors can be imported instead.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import Corpus

logger = logging.getLogger(__name__)

DEFAULT_DIM = 128
DEFAULT_SEED = 42


class EmbeddingError(Exception):
    pass


class EmptyCorpus(EmbeddingError):
    pass


class DimensionMismatch(EmbeddingError):
    def __init__(self, line: int, expected: int, got: int):
        self.line = line
        super().__init__(f"line {line}: expected {expected} vector components, got {got}")


class MissingProject(EmbeddingError):
    def __init__(self, missing: Sequence[str]):
        self.missing = list(missing)
        shown = ", ".join(self.missing[:5])
        more = "" if len(self.missing) <= 5 else f" (+{len(self.missing) - 5} more)"
        super().__init__(f"vectors file does not cover project(s): {shown}{more}")


class Provider(str, Enum):
    TFIDF_PROJECTION = "TFIDF_PROJECTION"
    IMPORTED = "IMPORTED"


_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@lru_cache(maxsize=1)
def _stopwords() -> frozenset[str]:
    text = resources.files("rimap.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop short tokens and stopwords."""
    stop = _stopwords()
    return [
        t for t in _TOKEN_RE.findall(text.lower())
        if len(t) >= 2 and t not in stop
    ]


@dataclass
class Vocabulary:
    terms: list[str]  # sorted lexicographically
    doc_freq: dict[str, int]
    n_docs: int

    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)


@dataclass
class TermDocMatrix:
    """CSR-style term-document matrix carrying both tf-idf weights and counts."""

    ids: list[str]
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    counts: np.ndarray
    n_terms: int

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.ids), self.n_terms)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.indptr[i], self.indptr[i + 1]
        return self.indices[s:e], self.weights[s:e]

    def row_counts(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.indptr[i], self.indptr[i + 1]
        return self.indices[s:e], self.counts[s:e]

    def matmul_dense(self, dense: np.ndarray) -> np.ndarray:
        out = np.zeros((len(self.ids), dense.shape[1]))
        for i in range(len(self.ids)):
            s, e = self.indptr[i], self.indptr[i + 1]
            if e > s:
                out[i] = self.weights[s:e] @ dense[self.indices[s:e]]
        return out


@dataclass
class EmbeddingMatrix:
    ids: list[str]
    matrix: np.ndarray
    provider: Provider
    zero_ids: tuple[str, ...] = ()
    _pos: dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._pos = {pid: i for i, pid in enumerate(self.ids)}

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def vector(self, project_id: str) -> np.ndarray:
        return self.matrix[self._pos[project_id]]

    def __contains__(self, project_id: str) -> bool:
        return project_id in self._pos


def fit_tfidf(corpus: Corpus) -> tuple[Vocabulary, TermDocMatrix]:
    """TF-IDF over title+abstract: tf * (ln((1+N)/(1+df)) + 1), rows L2-normalized.

    Terms appearing in fewer than two documents are pruned, except in a
    single-document corpus where pruning would empty the vocabulary.
    """
    ids = [p.project_id for p in corpus.projects]
    docs = [tokenize(p.text()) for p in corpus.projects]
    return _fit_documents(ids, docs)


def _fit_documents(ids: list[str], docs: list[list[str]]) -> tuple[Vocabulary, TermDocMatrix]:
    if not any(docs):
        raise EmptyCorpus("no document contains a single usable token")
    n_docs = len(docs)
    df: dict[str, int] = {}
    for tokens in docs:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    min_df = 2 if n_docs >= 2 else 1
    terms = sorted(t for t, f in df.items() if f >= min_df)
    vocab = Vocabulary(terms=terms, doc_freq={t: df[t] for t in terms}, n_docs=n_docs)
    pos = vocab.index()
    idf = {t: math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in terms}

    indptr = [0]
    indices: list[int] = []
    weights: list[float] = []
    counts: list[int] = []
    for tokens in docs:
        tf: dict[int, int] = {}
        for tok in tokens:
            j = pos.get(tok)
            if j is not None:
                tf[j] = tf.get(j, 0) + 1
        row = sorted(tf.items())
        vec = np.array([cnt * idf[terms[j]] for j, cnt in row])
        norm = math.sqrt(float(vec @ vec)) if len(vec) else 0.0
        if norm > 0:
            vec = vec / norm
        indices.extend(j for j, _ in row)
        weights.extend(vec.tolist())
        counts.extend(cnt for _, cnt in row)
        indptr.append(len(indices))

    matrix = TermDocMatrix(
        ids=list(ids),
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        weights=np.asarray(weights, dtype=np.float64),
        counts=np.asarray(counts, dtype=np.int64),
        n_terms=len(terms),
    )
    return vocab, matrix


# --- counter-based gaussian stream ----------------------------------------

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_KEY_SALT = _U64(0xD2B74407B1CE6E93)


def _mix64(x: np.ndarray) -> np.ndarray:
    z = x.astype(np.uint64)
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def _gaussian_rows(seed: int, term_indices: np.ndarray, dim: int) -> np.ndarray:
    """One N(0, 1/dim) row per term, reproducible from (seed, term index)."""
    keys = _mix64(_U64(seed & 0xFFFFFFFFFFFFFFFF) ^ (term_indices.astype(np.uint64) * _KEY_SALT))
    n_pairs = (dim + 1) // 2
    j = (np.arange(2 * n_pairs, dtype=np.uint64) + _U64(1)) * _GOLDEN
    raw = _mix64(keys[:, None] + j[None, :])
    unit = ((raw >> _U64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)
    u1, u2 = unit[:, :n_pairs], unit[:, n_pairs:]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)], axis=1)
    return z[:, :dim] / math.sqrt(dim)


def project_dense(matrix: TermDocMatrix, dim: int = DEFAULT_DIM,
                  seed: int = DEFAULT_SEED) -> EmbeddingMatrix:
    """Seeded Gaussian random projection of the TF-IDF rows, L2-normalized."""
    if dim < 2:
        raise ValueError("projection dim must be >= 2")
    proj = _gaussian_rows(seed, np.arange(matrix.n_terms), dim) if matrix.n_terms else \
        np.zeros((0, dim))
    dense = matrix.matmul_dense(proj)
    dense, zero_ids = _normalize_rows(dense, matrix.ids)
    if zero_ids:
        logger.warning("projection: %d project(s) with no tokens got zero vectors", len(zero_ids))
    return EmbeddingMatrix(ids=list(matrix.ids), matrix=dense,
                           provider=Provider.TFIDF_PROJECTION, zero_ids=zero_ids)


def _normalize_rows(dense: np.ndarray, ids: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    norms = np.linalg.norm(dense, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return dense / safe[:, None], tuple(pid for pid, z in zip(ids, zero) if z)


def import_vectors(file: str | Path, expected_ids: Sequence[str]) -> EmbeddingMatrix:
    """Load externally computed vectors (CSV: projectId,v0,v1,...).

    Every expected project id must be covered; vectors are L2-normalized
    on load.
    """
    file = Path(file)
    vectors: dict[str, np.ndarray] = {}
    with open(file, "r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header) - 1
        if header[0] != "projectId" or dim < 1:
            raise EmbeddingError(f"{file.name}: bad header for vectors file")
        line = reader.line_num + 1
        for row in reader:
            if len(row) - 1 != dim:
                raise DimensionMismatch(line, dim, len(row) - 1)
            pid = row[0]
            if pid in vectors:
                raise EmbeddingError(f"{file.name} line {line}: duplicate id {pid!r}")
            vectors[pid] = np.array([float(v) for v in row[1:]], dtype=np.float64)
            line = reader.line_num + 1
    missing = [pid for pid in expected_ids if pid not in vectors]
    if missing:
        raise MissingProject(missing)
    extra = set(vectors) - set(expected_ids)
    if extra:
        logger.warning("vectors file covers %d unknown project id(s); ignored", len(extra))
    dense = np.stack([vectors[pid] for pid in expected_ids])
    dense, zero_ids = _normalize_rows(dense, expected_ids)
    return EmbeddingMatrix(ids=list(expected_ids), matrix=dense,
                           provider=Provider.IMPORTED, zero_ids=zero_ids)


def write_vectors(embeddings: EmbeddingMatrix, path: str | Path) -> None:
    """Dump vectors in the import_vectors CSV format (full float precision)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["projectId"] + [f"v{i}" for i in range(embeddings.dim)])
        for i, pid in enumerate(embeddings.ids):
            writer.writerow([pid] + [repr(float(v)) for v in embeddings.matrix[i]])


def write_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "docFreq"])
        for term in vocab.terms:
            writer.writerow([term, vocab.doc_freq[term]])
