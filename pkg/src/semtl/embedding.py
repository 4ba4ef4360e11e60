"""Semantic embeddings: transferability, consistency and variability channels.

Transferability of an entailment ``g`` is the cross-validated accuracy gain on
the target task when the source instances of ``g`` are added to training.
Both sides of the comparison withhold the target instances of ``g`` so the
gain measures what the source says about ``g``, not what the target already
knows.  Features are one-hot entailment indicators and folds are grouped by
target LSO and stratified by its label.
"""

from __future__ import annotations

import csv
import hashlib
import io
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import (
    DomainError,
    EmptyTrainingError,
    InconsistentTargetError,
    Lso,
    SemanticLearningTask,
    target_union,
    task_variability,
)
from .entailment import Entailment
from .learners import LearnerError, TooFewInstancesError, stratified_folds, train_weighted
from .reasoner import IncrementalChecker


class ParameterError(ValueError):
    pass


def variability_weight(vO: float, vY: float, alpha: float = 0.5, beta: float = 0.5) -> float:
    if not (0 <= alpha <= 1 and 0 <= beta <= 1):
        raise ParameterError("alpha and beta must lie in [0, 1]")
    if alpha + beta <= 0:
        raise ParameterError("alpha + beta must be positive")
    return (alpha * vO + beta * vY) / (alpha + beta)


def is_inter_domain(v: float) -> bool:
    return v > 0.5


# ---------------------------------------------------------------------------
# labels and raw instances
# ---------------------------------------------------------------------------


def source_target(task_s, task_t, target: Entailment) -> Entailment:
    """The source target paired with ``target`` by position."""
    try:
        k = list(task_t.targets).index(target)
    except ValueError as exc:
        raise DomainError(f"{target} is not a target of the target domain") from exc
    if k >= len(task_s.targets):
        raise DomainError(f"source domain has no target at position {k}")
    return task_s.targets[k]


def feature_index(task_s, task_t) -> tuple:
    """Distinct entailments of the training LSOs, minus every target entailment."""
    labels = set(task_s.targets) | set(task_t.targets)
    out: set = set()
    for x in list(task_s.train_lsos()) + list(task_t.train_lsos()):
        out |= x.closure.items
    return tuple(sorted(out - labels, key=str))


@dataclass(frozen=True)
class RawInstance:
    lso_id: str
    entailment: Entailment
    label: int
    tag: str


def raw_instances(lsos: Iterable[Lso], index: Iterable[Entailment], label_of: Entailment, tag: str) -> list:
    keep = frozenset(index)
    out = []
    for x in lsos:
        y = int(label_of in x.closure)
        for g in x.closure:
            if g in keep:
                out.append(RawInstance(x.id, g, y, tag))
    return out


def _lso_labels(lsos, target) -> dict:
    return {x.id: int(target in x.closure) for x in lsos}


def _folds(lsos, target, k: int, seed: int) -> dict:
    labels = _lso_labels(lsos, target)
    ids = sorted(labels)
    if len(ids) < 2:
        raise TooFewInstancesError("need at least two target training LSOs for cross-validation")
    return stratified_folds(ids, [labels[i] for i in ids], min(k, len(ids)), seed)


# ---------------------------------------------------------------------------
# transferability
# ---------------------------------------------------------------------------


def transfer_gain(
    S,
    task_s: SemanticLearningTask,
    task_t: SemanticLearningTask,
    target: Entailment,
    learner: str = "presence",
    k: int = 5,
    seed: int = 0,
) -> float:
    """m(f_{T|S}) - m(f_T) with the target instances of ``S`` withheld on both sides."""
    gains = _gains([frozenset(S)], task_s, task_t, target, learner, k, seed)
    return gains[0]


def _gains(sets: Sequence[frozenset], task_s, task_t, target, learner, k, seed) -> list:
    t_lsos = task_t.train_lsos()
    if not t_lsos:
        raise EmptyTrainingError("target task has no training LSOs")
    index = feature_index(task_s, task_t)
    tgt = raw_instances(t_lsos, index, target, "target")
    if not tgt:
        raise EmptyTrainingError("target training LSOs yield no instances")
    src = raw_instances(task_s.train_lsos(), index, source_target(task_s, task_t, target), "source")
    fold_of = _folds(t_lsos, target, k, seed)
    if learner == "presence":
        return [_presence_gain(S, tgt, src, fold_of) for S in sets]
    return [_generic_gain(S, tgt, src, fold_of, learner, seed) for S in sets]


def _presence_gain(S: frozenset, tgt, src, fold_of) -> float:
    """Closed form of the gain for the intercept-free presence learner.

    Each indicator weight only sees its own entailment, so adding the source
    instances of ``g`` changes only the predictions on ``g``'s target
    instances: from the unseen score 0.5 (class 0) to the source majority.
    """
    nfolds = max(fold_of.values()) + 1
    size = [0] * nfolds
    for r in tgt:
        size[fold_of[r.lso_id]] += 1
    votes: dict = defaultdict(int)
    for r in src:
        if r.entailment in S:
            votes[r.entailment] += 1 if r.label else -1
    positive = {g for g, v in votes.items() if v > 0}
    diff = [0] * nfolds
    for r in tgt:
        if r.entailment in positive:
            diff[fold_of[r.lso_id]] += 1 if r.label else -1
    return float(np.mean([diff[f] / size[f] if size[f] else 0.0 for f in range(nfolds)]))


def _generic_gain(S: frozenset, tgt, src, fold_of, learner: str, seed: int) -> float:
    ents = sorted({r.entailment for r in tgt} | {r.entailment for r in src}, key=str)
    col = {g: i for i, g in enumerate(ents)}

    def matrix(rows):
        X = np.zeros((len(rows), len(ents)))
        for i, r in enumerate(rows):
            X[i, col[r.entailment]] = 1.0
        return X, np.array([r.label for r in rows], dtype=float)

    extra = [r for r in src if r.entailment in S]
    nfolds = max(fold_of.values()) + 1
    base_acc, aug_acc = [], []
    for f in range(nfolds):
        test = [r for r in tgt if fold_of[r.lso_id] == f]
        if not test:
            continue
        train = [r for r in tgt if fold_of[r.lso_id] != f and r.entailment not in S]
        Xt, yt = matrix(test)
        for rows, acc in ((train, base_acc), (train + extra, aug_acc)):
            if not rows:
                pred = np.zeros(len(yt))
            else:
                X, y = matrix(rows)
                model = train_weighted((X, y), np.full(len(y), 1.0 / len(y)), learner, seed)
                pred = (model.predict_many(Xt) > 0.5).astype(float)
            acc.append(float(np.mean(pred == yt)))
    return float(np.mean(aug_acc) - np.mean(base_acc))


def estimate_epsilon(g: Entailment, task_s, task_t, target, learner="presence", k=5, seed=0) -> float:
    """Largest epsilon for which ``{g}`` is transferable, 0 if none."""
    return max(0.0, transfer_gain({g}, task_s, task_t, target, learner, k, seed))


def estimate_epsilons(index, task_s, task_t, target, learner="presence", k=5, seed=0, sample=None) -> list:
    """Per-entailment epsilons; with ``sample`` only that many are measured.

    Unmeasured entailments get the mean of the measured ones sharing their
    predicate, or the overall measured mean when none does.
    """
    index = list(index)
    if sample is None or sample >= len(index):
        chosen = index
    else:
        if sample < 1:
            raise ParameterError("epsilon sample size must be positive")
        rng = random.Random(seed)
        chosen = sorted(rng.sample(index, sample), key=str)
    gains = _gains([frozenset({g}) for g in chosen], task_s, task_t, target, learner, k, seed)
    measured = {g: max(0.0, v) for g, v in zip(chosen, gains)}
    if len(measured) == len(index):
        return [measured[g] for g in index]
    by_pred: dict = defaultdict(list)
    for g, v in measured.items():
        by_pred[g.predicate].append(v)
    overall = float(np.mean(list(measured.values())))
    return [
        measured[g] if g in measured else float(np.mean(by_pred[g.predicate])) if by_pred[g.predicate] else overall
        for g in index
    ]


# ---------------------------------------------------------------------------
# consistency
# ---------------------------------------------------------------------------


def consistency_checker(target_lsos: Sequence[Lso]) -> IncrementalChecker:
    checker = IncrementalChecker(target_union(list(target_lsos)))
    if not checker.consistent:
        raise InconsistentTargetError("the union of the target LSOs is inconsistent")
    return checker


def consistency_bit(g: Entailment, target_lsos: Sequence[Lso]) -> int:
    return int(consistency_checker(target_lsos).consistent_with(g))


# ---------------------------------------------------------------------------
# the matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingMatrix:
    index: tuple
    t: tuple
    c: tuple
    v: float
    alpha: float
    beta: float
    target: Entailment
    source_members: frozenset = frozenset()
    target_members: frozenset = frozenset()

    def __post_init__(self):
        if not (len(self.index) == len(self.t) == len(self.c)):
            raise ValueError("embedding channels have different lengths")
        if any(x < 0 for x in self.t) or any(x not in (0, 1) for x in self.c):
            raise ValueError("t must be non-negative and c binary")
        if not 0 <= self.v <= 1:
            raise ValueError("v must lie in [0, 1]")

    @property
    def m(self) -> int:
        return len(self.index)

    def position(self) -> dict:
        return {g: i for i, g in enumerate(self.index)}

    def features(self, g: Entailment) -> tuple:
        i = self.position()[g]
        return (self.t[i], float(self.c[i]), self.v)

    def feature_rows(self) -> np.ndarray:
        """``m x 3`` array of ``(t, c, v)`` in index order."""
        return np.column_stack([np.asarray(self.t, float), np.asarray(self.c, float), np.full(self.m, self.v)]) if self.m else np.zeros((0, 3))

    def index_hash(self) -> str:
        h = hashlib.sha256()
        for g in self.index:
            h.update(str(g).encode() + b"\n")
        return h.hexdigest()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["entailment", "t", "c", "v", "source_member", "target_member"])
        for i in sorted(range(self.m), key=lambda i: str(self.index[i])):
            g = self.index[i]
            w.writerow([str(g), repr(self.t[i]), self.c[i], repr(self.v), int(g in self.source_members), int(g in self.target_members)])
        return buf.getvalue()


def embedding_from_csv(text: str, target: Entailment, alpha: float = 0.5, beta: float = 0.5) -> EmbeddingMatrix:
    """Inverse of ``EmbeddingMatrix.to_csv``."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and set(rows[0]) != {"entailment", "t", "c", "v", "source_member", "target_member"}:
        raise ValueError("not an embedding CSV")
    index = tuple(Entailment.parse(r["entailment"]) for r in rows)
    vs = {float(r["v"]) for r in rows}
    if len(vs) > 1:
        raise ValueError("embedding CSV carries more than one v value")
    return EmbeddingMatrix(
        index,
        tuple(float(r["t"]) for r in rows),
        tuple(int(r["c"]) for r in rows),
        vs.pop() if vs else 0.0,
        alpha,
        beta,
        target,
        frozenset(g for g, r in zip(index, rows) if r["source_member"] == "1"),
        frozenset(g for g, r in zip(index, rows) if r["target_member"] == "1"),
    )


def build_embedding_matrix(
    task_s: SemanticLearningTask,
    task_t: SemanticLearningTask,
    target: Entailment | None = None,
    alpha: float = 0.5,
    beta: float = 0.5,
    learner: str = "presence",
    k: int = 5,
    seed: int = 0,
    epsilon_sample: int | None = None,
    eq10: str = "symdiff",
) -> EmbeddingMatrix:
    target = task_t.targets[0] if target is None else target
    vO, vY = task_variability(task_s, task_t, eq10)
    v = variability_weight(vO, vY, alpha, beta)
    index = feature_index(task_s, task_t)
    t_lsos = task_t.train_lsos()
    if not t_lsos:
        raise EmptyTrainingError("target task has no training LSOs")
    checker = consistency_checker(t_lsos)
    c = tuple(int(checker.consistent_with(g)) for g in index)
    t = tuple(estimate_epsilons(index, task_s, task_t, target, learner, k, seed, epsilon_sample)) if index else ()
    src_members = frozenset().union(*(x.closure.items for x in task_s.train_lsos()))
    tgt_members = frozenset().union(*(x.closure.items for x in t_lsos))
    return EmbeddingMatrix(index, t, c, v, alpha, beta, target, src_members & set(index), tgt_members & set(index))


__all__ = [
    "EmbeddingMatrix",
    "LearnerError",
    "ParameterError",
    "build_embedding_matrix",
    "consistency_bit",
    "estimate_epsilon",
    "embedding_from_csv",
    "estimate_epsilons",
    "feature_index",
    "raw_instances",
    "source_target",
    "transfer_gain",
    "variability_weight",
]
