"""Priority-area classification: weak metadata rules plus one-vs-rest
logistic regression over document embeddings.

Training labels come from anchored glob rules over programme, call topic
code and metadata tags. Each configured area gets an independent binary
classifier trained by deterministic full-batch gradient descent.
"""

from __future__ import annotations

import fnmatch
import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .model import Corpus, Project
from .text_embedding import EmbeddingMatrix

DEFAULT_THRESHOLD = 0.5
DEFAULT_L2 = 1e-3
GRAD_TOL = 1e-5
MAX_ITERS = 2000
MIN_EXAMPLES_PER_CLASS = 10

DEFAULT_PRIORITY_AREAS = (
    "health", "agrifood", "energy", "mobility", "digital", "industry", "society",
)


class ClassifierError(Exception):
    pass


class InvalidPattern(ClassifierError):
    def __init__(self, pattern: str, reason: str):
        super().__init__(f"invalid rule pattern {pattern!r}: {reason}")


class InsufficientTrainingData(ClassifierError):
    def __init__(self, label: str, positives: int, negatives: int):
        self.label = label
        super().__init__(
            f"label {label!r}: needs >= {MIN_EXAMPLES_PER_CLASS} positive and negative "
            f"examples, got {positives}/{negatives}"
        )


class UnknownProjectId(ClassifierError):
    def __init__(self, project_id: str):
        super().__init__(f"gold labels reference unknown project id {project_id!r}")


class RuleField(str, Enum):
    PROGRAMME = "PROGRAMME"
    TOPIC_CODE = "TOPIC_CODE"
    METADATA_TAG = "METADATA_TAG"


class Polarity(str, Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"


@dataclass(frozen=True)
class WeakRule:
    area: str
    field: RuleField
    pattern: str  # anchored glob, or anchored regex with an "re:" prefix
    polarity: Polarity

    def compiled(self) -> re.Pattern:
        if self.pattern.startswith("re:"):
            body = self.pattern[3:]
            try:
                return re.compile(rf"(?:{body})\Z", re.IGNORECASE)
            except re.error as err:
                raise InvalidPattern(self.pattern, str(err))
        try:
            return re.compile(fnmatch.translate(self.pattern), re.IGNORECASE)
        except re.error as err:  # pragma: no cover - translate rarely fails
            raise InvalidPattern(self.pattern, str(err))


def load_rules(path: str | Path, labels: Sequence[str]) -> list[WeakRule]:
    import csv

    label_set = set(labels)
    rules: list[WeakRule] = []
    with open(path, "r", encoding="utf-8-sig", newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh), start=2):
            area = row["area"].strip()
            if area not in label_set:
                raise ClassifierError(f"rules line {i}: unknown area {area!r}")
            rule = WeakRule(
                area=area,
                field=RuleField(row["field"].strip().upper()),
                pattern=row["pattern"].strip(),
                polarity=Polarity(row["polarity"].strip().upper()),
            )
            rule.compiled()  # validate now
            rules.append(rule)
    return rules


def _field_values(project: Project, field: RuleField) -> list[str]:
    if field is RuleField.PROGRAMME:
        return [project.programme]
    if field is RuleField.TOPIC_CODE:
        return [project.call_topic_code]
    return sorted(project.metadata_tags)


def weak_label(corpus: Corpus, rules: Sequence[WeakRule]) -> dict[str, frozenset[str]]:
    """Label iff some positive rule fires and no negative rule does.

    Projects with no label are omitted (and thereby excluded from training).
    """
    if not rules:
        raise ClassifierError("no weak rules supplied")
    compiled = [(r, r.compiled()) for r in rules]
    out: dict[str, frozenset[str]] = {}
    for project in corpus.projects:
        positives: set[str] = set()
        negatives: set[str] = set()
        for rule, rx in compiled:
            if any(rx.match(v) for v in _field_values(project, rule.field)):
                (positives if rule.polarity is Polarity.POSITIVE else negatives).add(rule.area)
        labels = positives - negatives
        if labels:
            out[project.project_id] = frozenset(labels)
    return out


@dataclass
class PriorityModel:
    labels: tuple[str, ...]
    weights: np.ndarray  # (n_labels, dim)
    bias: np.ndarray  # (n_labels,)
    threshold: float = DEFAULT_THRESHOLD
    feature_dim: int = 0
    loss_traces: dict[str, list[float]] = field(default_factory=dict, compare=False)

    def to_json(self) -> str:
        doc = {
            "labels": list(self.labels),
            "threshold": self.threshold,
            "featureDim": self.feature_dim,
            "weights": [[repr(float(v)) for v in row] for row in self.weights],
            "bias": [repr(float(v)) for v in self.bias],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PriorityModel":
        doc = json.loads(text)
        return cls(
            labels=tuple(doc["labels"]),
            weights=np.array([[float(v) for v in row] for row in doc["weights"]]),
            bias=np.array([float(v) for v in doc["bias"]]),
            threshold=doc["threshold"],
            feature_dim=doc["featureDim"],
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss_and_grad(Xb: np.ndarray, y: np.ndarray, w: np.ndarray, l2: float):
    """Mean cross-entropy plus 0.5*l2*||w||^2 (bias unpenalized; bias is last)."""
    n = Xb.shape[0]
    z = Xb @ w
    # log(1 + exp(-s*z)) with s in {-1, +1}
    s = 2.0 * y - 1.0
    loss = float(np.mean(np.logaddexp(0.0, -s * z)))
    loss += 0.5 * l2 * float(w[:-1] @ w[:-1])
    grad = Xb.T @ (_sigmoid(z) - y) / n
    grad[:-1] += l2 * w[:-1]
    return loss, grad


def _fit_logistic(X: np.ndarray, y: np.ndarray, l2: float,
                  tol: float, max_iters: int) -> tuple[np.ndarray, list[float]]:
    """Full-batch gradient descent with backtracking line search, zero init."""
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    w = np.zeros(d + 1)
    loss, grad = _loss_and_grad(Xb, y, w, l2)
    trace = [loss]
    step = 1.0
    for _ in range(max_iters):
        gnorm2 = float(grad @ grad)
        if math.sqrt(gnorm2) < tol:
            break
        step = min(step * 2.0, 1e4)
        while True:
            cand = w - step * grad
            cand_loss, cand_grad = _loss_and_grad(Xb, y, cand, l2)
            if cand_loss <= loss - 1e-4 * step * gnorm2 or step < 1e-16:
                break
            step *= 0.5
        w, loss, grad = cand, cand_loss, cand_grad
        trace.append(loss)
    return w, trace


def train(
    embeddings: EmbeddingMatrix,
    weak_labels: Mapping[str, frozenset[str]],
    labels: Sequence[str] = DEFAULT_PRIORITY_AREAS,
    l2: float = DEFAULT_L2,
    threshold: float = DEFAULT_THRESHOLD,
    grad_tol: float = GRAD_TOL,
    max_iters: int = MAX_ITERS,
) -> PriorityModel:
    """One-vs-rest logistic regression per label over labelled projects.

    The training set is canonically ordered by project id, so scores do
    not depend on the order labels were supplied in.
    """
    train_ids = sorted(pid for pid in weak_labels if pid in embeddings)
    if not train_ids:
        raise ClassifierError("weak labelling produced no training documents")
    X = np.stack([embeddings.vector(pid) for pid in train_ids])
    weights = np.zeros((len(labels), X.shape[1]))
    bias = np.zeros(len(labels))
    traces: dict[str, list[float]] = {}
    for li, label in enumerate(labels):
        y = np.array([1.0 if label in weak_labels[pid] else 0.0 for pid in train_ids])
        n_pos = int(y.sum())
        n_neg = len(y) - n_pos
        if n_pos < MIN_EXAMPLES_PER_CLASS or n_neg < MIN_EXAMPLES_PER_CLASS:
            raise InsufficientTrainingData(label, n_pos, n_neg)
        w, trace = _fit_logistic(X, y, l2, grad_tol, max_iters)
        weights[li] = w[:-1]
        bias[li] = w[-1]
        traces[label] = trace
    return PriorityModel(
        labels=tuple(labels), weights=weights, bias=bias,
        threshold=threshold, feature_dim=X.shape[1], loss_traces=traces,
    )


def predict_scores(model: PriorityModel, embeddings: EmbeddingMatrix) -> np.ndarray:
    """Sigmoid score per (project, label), rows in embeddings order."""
    return _sigmoid(embeddings.matrix @ model.weights.T + model.bias)


def predict(model: PriorityModel, embeddings: EmbeddingMatrix) -> dict[str, dict[str, float]]:
    """Assigned labels with confidences: score >= threshold."""
    scores = predict_scores(model, embeddings)
    out: dict[str, dict[str, float]] = {}
    for i, pid in enumerate(embeddings.ids):
        assigned = {
            label: float(scores[i, li])
            for li, label in enumerate(model.labels)
            if scores[i, li] >= model.threshold
        }
        out[pid] = assigned
    return out


@dataclass
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


@dataclass
class EvaluationReport:
    per_label: dict[str, LabelMetrics]
    macro_f1: float
    n_eval: int
    annotator_agreement: float | None = None

    def to_dict(self) -> dict:
        return {
            "perLabel": {
                label: {
                    "precision": m.precision, "recall": m.recall, "f1": m.f1,
                    "tp": m.tp, "fp": m.fp, "fn": m.fn,
                }
                for label, m in sorted(self.per_label.items())
            },
            "macroF1": self.macro_f1,
            "nEval": self.n_eval,
            "annotatorAgreement": self.annotator_agreement,
        }


def _prf(tp: int, fp: int, fn: int) -> LabelMetrics:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return LabelMetrics(precision, recall, f1, tp, fp, fn)


def _cohen_kappa(a: Sequence[bool], b: Sequence[bool]) -> float:
    n = len(a)
    po = sum(x == y for x, y in zip(a, b)) / n
    pa1 = sum(a) / n
    pb1 = sum(b) / n
    pe = pa1 * pb1 + (1 - pa1) * (1 - pb1)
    if pe == 1.0:
        return 1.0 if po == 1.0 else 0.0
    return (po - pe) / (1 - pe)


def evaluate(
    model: PriorityModel,
    embeddings: EmbeddingMatrix,
    gold: Mapping[str, frozenset[str]],
    second_gold: Mapping[str, frozenset[str]] | None = None,
) -> EvaluationReport:
    """Per-label P/R/F1 against gold labels; macro-F1 over all model labels.

    With a second gold set, annotator agreement is the mean per-label
    Cohen's kappa over the ids both sets cover.
    """
    if not gold:
        raise ClassifierError("gold label set is empty")
    for pid in gold:
        if pid not in embeddings:
            raise UnknownProjectId(pid)
    eval_ids = sorted(gold)
    sub = EmbeddingMatrix(
        ids=eval_ids,
        matrix=np.stack([embeddings.vector(pid) for pid in eval_ids]),
        provider=embeddings.provider,
    )
    predictions = predict(model, sub)

    per_label: dict[str, LabelMetrics] = {}
    for label in model.labels:
        tp = fp = fn = 0
        for pid in eval_ids:
            predicted = label in predictions[pid]
            actual = label in gold[pid]
            tp += predicted and actual
            fp += predicted and not actual
            fn += actual and not predicted
        per_label[label] = _prf(tp, fp, fn)
    macro = sum(m.f1 for m in per_label.values()) / len(model.labels)

    agreement = None
    if second_gold is not None:
        shared = sorted(set(gold) & set(second_gold))
        if shared:
            kappas = [
                _cohen_kappa(
                    [label in gold[pid] for pid in shared],
                    [label in second_gold[pid] for pid in shared],
                )
                for label in model.labels
            ]
            agreement = sum(kappas) / len(kappas)
    return EvaluationReport(
        per_label=per_label, macro_f1=macro, n_eval=len(eval_ids),
        annotator_agreement=agreement,
    )


def load_gold_labels(path: str | Path) -> dict[str, frozenset[str]]:
    """CSV projectId,area with one row per assignment."""
    import csv
    from collections import defaultdict

    acc: dict[str, set[str]] = defaultdict(set)
    with open(path, "r", encoding="utf-8-sig", newline="") as fh:
        for row in csv.DictReader(fh):
            acc[row["projectId"].strip()].add(row["area"].strip())
    return {pid: frozenset(areas) for pid, areas in acc.items()}


def apply_predictions(corpus: Corpus, predictions: Mapping[str, Mapping[str, float]]) -> None:
    for project in corpus.projects:
        assigned = predictions.get(project.project_id, {})
        project.enrichment.priority_areas = {
            label: float(conf) for label, conf in sorted(assigned.items())
        }
