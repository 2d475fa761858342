"""2D semantic cartography of the corpus via exact-gradient t-SNE.

Pair affinities come from a per-point bandwidth search hitting a target
entropy; the layout is optimised by momentum gradient descent with early
exaggeration. Everything is seeded and deterministic, sized for corpora
of a few thousand projects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .text_embedding import EmbeddingMatrix

_P_FLOOR = 1e-12
ENTROPY_TOL = 1e-3
MAX_BANDWIDTH_STEPS = 50


class MapError(Exception):
    pass


class DegenerateDistances(MapError):
    def __init__(self, row: int):
        super().__init__(f"point {row} is at zero distance from every other point")


class NonFiniteGradient(MapError):
    pass


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    iters: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum_start: float = 0.5
    momentum_final: float = 0.8
    momentum_switch_iter: int = 250
    seed: int = 42

    def validate(self) -> None:
        if self.perplexity < 2:
            raise MapError("perplexity must be >= 2")
        if self.iters < 250:
            raise MapError("iters must be >= 250")


@dataclass
class MapLayout:
    coords: dict[str, tuple[float, float]]
    kl_trace: list[float] = field(default_factory=list)


def pairwise_sq_distances(X: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances from explicit differences (chunked).

    Computing differences directly keeps the matrix a function of pairwise
    offsets only, so translated inputs give (numerically) identical
    distances.
    """
    n, d = X.shape
    D = np.empty((n, n))
    chunk = max(1, (1 << 22) // max(1, n * d))
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        diff = X[s:e, None, :] - X[None, :, :]
        D[s:e] = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(D, 0.0)
    return D


def _row_entropy_bits(d_row: np.ndarray, beta: float) -> tuple[float, np.ndarray | None]:
    """Shannon entropy (bits) and conditional probabilities for one row.

    Returns (0, None) when every kernel value underflows; the caller then
    treats the bandwidth as too peaked and searches lower.
    """
    p = np.exp(-d_row * beta)
    total = p.sum()
    if total <= 0.0:
        return 0.0, None
    p = p / total
    nz = p > 0
    h_nats = -float((p[nz] * np.log(p[nz])).sum())
    return h_nats / math.log(2.0), p


def conditional_probabilities(
    D: np.ndarray, perplexity: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row bandwidth search so H(P_i) = log2(perplexity) +- tolerance.

    Returns the conditional matrix (rows sum to 1, zero diagonal) and the
    per-row precisions found. Bisection runs at most 50 steps; rows whose
    entropy cannot hit the target (e.g. equidistant neighbours) keep the
    best bandwidth found.
    """
    n = D.shape[0]
    if n < 3:
        raise MapError("need at least 3 points to calibrate")
    target = math.log2(perplexity)
    P = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        d_row = np.delete(D[i], i)
        if not (d_row > 0).any():
            raise DegenerateDistances(i)
        beta, beta_min, beta_max = 1.0, -math.inf, math.inf
        h, p = _row_entropy_bits(d_row, beta)
        while p is None:  # initial bandwidth already underflows
            beta /= 2.0
            h, p = _row_entropy_bits(d_row, beta)
        best = (abs(h - target), p, beta)
        for _ in range(MAX_BANDWIDTH_STEPS):
            if abs(h - target) <= ENTROPY_TOL:
                break
            if h > target:
                beta_min = beta
                beta = beta * 2.0 if beta_max == math.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -math.inf else (beta + beta_min) / 2.0
            h, p = _row_entropy_bits(d_row, beta)
            if p is None:
                h = 0.0  # treat underflow as maximally peaked, search lower
                continue
            if abs(h - target) < best[0]:
                best = (abs(h - target), p, beta)
        _, p, beta = best
        betas[i] = beta
        P[i, :i] = p[:i]
        P[i, i + 1:] = p[i:]
    return P, betas


def perplexity_calibration(D: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized joint probabilities: p_ij = (p_j|i + p_i|j) / (2N)."""
    P_cond, _ = conditional_probabilities(D, perplexity)
    n = D.shape[0]
    return (P_cond + P_cond.T) / (2.0 * n)


def _low_dim_q(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Student-t (1 dof) affinities: normalized Q and the unnormalized kernel."""
    d2 = pairwise_sq_distances(Y)
    num = 1.0 / (1.0 + d2)
    np.fill_diagonal(num, 0.0)
    Q = num / num.sum()
    return np.maximum(Q, _P_FLOOR), num


def kl_divergence(P: np.ndarray, Y: np.ndarray) -> float:
    Q, _ = _low_dim_q(Y)
    Pc = np.maximum(P, _P_FLOOR)
    mask = ~np.eye(P.shape[0], dtype=bool)
    return float((P[mask] * np.log(Pc[mask] / Q[mask])).sum())


def kl_gradient(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Exact gradient: dC/dy_i = 4 sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i-y_j|^2)."""
    Q, num = _low_dim_q(Y)
    PQ = (P - Q) * num
    grad = 4.0 * (PQ.sum(axis=1)[:, None] * Y - PQ @ Y)
    return grad


def effective_perplexity(perplexity: float, n: int) -> float:
    """Clamp to [2, (N-1)/3] so the entropy target stays reachable."""
    return max(2.0, min(perplexity, (n - 1) / 3.0))


def tsne(embeddings: EmbeddingMatrix, config: TsneConfig) -> MapLayout:
    """Seeded exact t-SNE layout of all project vectors, recentered at 0."""
    config.validate()
    X = embeddings.matrix
    n = X.shape[0]
    if n < 5:
        raise MapError("need at least 5 points for a map")
    D = pairwise_sq_distances(X)
    P = perplexity_calibration(D, effective_perplexity(config.perplexity, n))
    P = np.maximum(P, _P_FLOOR)

    rng = np.random.Generator(np.random.PCG64(config.seed))
    Y = rng.standard_normal((n, 2)) * 1e-4
    velocity = np.zeros_like(Y)
    # per-coordinate adaptive gains, as in the reference optimizer; plain
    # momentum reliably strands duplicated points in distant local minima
    gains = np.ones_like(Y)
    kl_trace: list[float] = []

    for t in range(1, config.iters + 1):
        exaggerate = t <= config.exaggeration_iters
        P_eff = P * config.early_exaggeration if exaggerate else P
        grad = kl_gradient(P_eff, Y)
        if not np.isfinite(grad).all():
            raise NonFiniteGradient(f"non-finite gradient at iteration {t}")
        momentum = (config.momentum_start if t <= config.momentum_switch_iter
                    else config.momentum_final)
        same_direction = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_direction, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - config.learning_rate * (gains * grad)
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        if t % 50 == 0:
            kl_trace.append(kl_divergence(P, Y))

    Y = Y - Y.mean(axis=0)
    coords = {
        pid: (float(Y[i, 0]), float(Y[i, 1])) for i, pid in enumerate(embeddings.ids)
    }
    return MapLayout(coords=coords, kl_trace=kl_trace)


def write_layout(
    layout: MapLayout, topic_of: dict[str, int | None], path
) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["projectId", "x", "y", "topicId"])
        for pid in sorted(layout.coords):
            x, y = layout.coords[pid]
            tid = topic_of.get(pid)
            writer.writerow([pid, repr(x), repr(y), "" if tid is None else tid])
