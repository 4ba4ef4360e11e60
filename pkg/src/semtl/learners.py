"""Weighted weak learners and the cross-validated accuracy metric.

Training first collapses identical ``(features, label)`` rows into one row
carrying the summed weight.  The weighted loss is unchanged by this, and the
boosting loop only ever sees a few distinct rows per entailment.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

log = logging.getLogger(__name__)

LOGISTIC_EPOCHS = 500
LOGISTIC_STEP = 0.1


class LearnerError(ValueError):
    pass


class TooFewInstancesError(LearnerError):
    pass


@dataclass(frozen=True)
class Instance:
    """One training example; ``provenance`` is ``(lso_id, entailment, tag)``."""

    features: tuple
    label: int
    provenance: tuple = ()
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(float(x) for x in self.features))
        if not all(math.isfinite(x) for x in self.features):
            raise LearnerError("instance features must be finite")
        if self.label not in (0, 1):
            raise LearnerError("instance label must be 0 or 1")
        if not self.weight > 0:
            raise LearnerError("instance weight must be positive")

    @property
    def tag(self) -> str:
        return self.provenance[2] if len(self.provenance) > 2 else "target"


@dataclass(frozen=True)
class Logistic:
    weights: tuple
    bias: float

    def predict(self, features) -> float:
        x = np.asarray(features, dtype=float)
        if x.shape != (len(self.weights),):
            raise LearnerError(f"expected {len(self.weights)} features, got shape {x.shape}")
        return _sigmoid(float(np.dot(self.weights, x)) + self.bias)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        z = X @ np.asarray(self.weights, dtype=float) + self.bias
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-z))

    def to_dict(self) -> dict:
        return {"kind": "logistic", "weights": list(self.weights), "bias": self.bias}


@dataclass(frozen=True)
class Stump:
    """Predicts 1 when ``x[feature] > threshold`` (polarity +1) or ``<=`` (polarity -1).

    ``threshold = -inf`` makes a constant model.
    """

    feature: int
    threshold: float
    polarity: int
    n_features: int = 3

    def predict(self, features) -> float:
        x = np.asarray(features, dtype=float)
        if x.shape != (self.n_features,):
            raise LearnerError(f"expected {self.n_features} features, got shape {x.shape}")
        above = x[self.feature] > self.threshold
        return float(above if self.polarity > 0 else not above)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        above = X[:, self.feature] > self.threshold
        return (above if self.polarity > 0 else ~above).astype(float)

    def to_dict(self) -> dict:
        return {
            "kind": "stump",
            "feature": self.feature,
            "threshold": self.threshold,
            "polarity": self.polarity,
            "n_features": self.n_features,
        }


Model = Logistic | Stump


def model_from_dict(d: dict) -> Model:
    if d["kind"] == "logistic":
        return Logistic(tuple(float(w) for w in d["weights"]), float(d["bias"]))
    if d["kind"] == "stump":
        return Stump(int(d["feature"]), float(d["threshold"]), int(d["polarity"]), int(d["n_features"]))
    raise LearnerError(f"unknown model kind {d['kind']!r}")


def dumps_model(m: Model) -> str:
    return json.dumps(m.to_dict(), sort_keys=True)


def predict(model: Model, features) -> float:
    return model.predict(features)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def _logistic_gd(X, y, p, epochs, step, intercept):
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    grad = np.zeros(d)
    for _ in range(epochs):
        for j in range(d):
            grad[j] = 0.0
        gb = 0.0
        for i in range(n):
            z = b
            for j in range(d):
                z += X[i, j] * w[j]
            if z >= 0:
                s = 1.0 / (1.0 + math.exp(-z))
            else:
                ez = math.exp(z)
                s = ez / (1.0 + ez)
            g = p[i] * (s - y[i])
            gb += g
            for j in range(d):
                grad[j] += g * X[i, j]
        for j in range(d):
            w[j] -= step * grad[j]
        if intercept:
            b -= step * gb
    return w, b


def aggregate(X: np.ndarray, y: np.ndarray, p: np.ndarray):
    """Merge identical (row, label) pairs, summing their weights; sorted order."""
    keyed = np.column_stack([X, y])
    uniq, inverse = np.unique(keyed, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    w = np.zeros(len(uniq))
    np.add.at(w, inverse, p)
    return uniq[:, :-1], uniq[:, -1], w


def train_logistic(X: np.ndarray, y: np.ndarray, p: np.ndarray) -> Logistic:
    Xa, ya, pa = aggregate(X, y, p)
    total = pa.sum()
    pa = pa / total
    mu = pa @ Xa
    sd = np.sqrt(pa @ (Xa - mu) ** 2)
    const = sd < 1e-12
    sd = np.where(const, 1.0, sd)
    Z = np.where(const, 0.0, (Xa - mu) / sd)
    w, b = _logistic_gd(np.ascontiguousarray(Z), ya.astype(float), pa, LOGISTIC_EPOCHS, LOGISTIC_STEP, True)
    w_raw = np.where(const, 0.0, w / sd)
    b_raw = b - float(np.sum(np.where(const, 0.0, w * mu / sd)))
    return Logistic(tuple(float(v) for v in w_raw), float(b_raw))


def train_presence(X: np.ndarray, y: np.ndarray, p: np.ndarray) -> Logistic:
    """Intercept-free logistic regression on raw indicator features.

    With one-hot rows each weight only sees its own entailment's instances, so
    the model reduces to a per-feature weighted majority and an all-zero row
    scores exactly 0.5.
    """
    Xa, ya, pa = aggregate(X, y, p)
    pa = pa / pa.sum()
    w, _ = _logistic_gd(np.ascontiguousarray(Xa), ya.astype(float), pa, LOGISTIC_EPOCHS, LOGISTIC_STEP, False)
    return Logistic(tuple(float(v) for v in w), 0.0)


def train_stump(X: np.ndarray, y: np.ndarray, p: np.ndarray) -> Stump:
    """Exact minimiser of weighted 0/1 error over (feature, threshold, polarity).

    Candidates are the constant models and midpoints between consecutive
    distinct values; ties keep the first candidate in that order.
    """
    n, d = X.shape
    pos = float(p[y == 1].sum())
    neg = float(p[y == 0].sum())
    # constant 1 errs on negatives, constant 0 on positives
    best = (neg, 0, -math.inf, 1) if neg <= pos else (pos, 0, -math.inf, -1)
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ps = p[order] * (y[order] == 1)
        ns = p[order] * (y[order] == 0)
        cpos = np.cumsum(ps)
        cneg = np.cumsum(ns)
        for i in range(n - 1):
            if xs[i] == xs[i + 1]:
                continue
            thr = 0.5 * (xs[i] + xs[i + 1])
            # polarity +: predict 1 above thr; errors = positives at/below + negatives above
            err_plus = cpos[i] + (neg - cneg[i])
            err_minus = cneg[i] + (pos - cpos[i])
            if err_plus < best[0] - 1e-15:
                best = (err_plus, j, thr, 1)
            if err_minus < best[0] - 1e-15:
                best = (err_minus, j, thr, -1)
    _, j, thr, pol = best
    return Stump(int(j), float(thr), int(pol), d)


def train_weighted(instances, distribution, kind: str = "logistic", seed: int = 0) -> Model:
    """Fit ``kind`` to instances under ``distribution``.

    ``kind`` is ``logistic``, ``stump`` or ``presence`` (see
    :func:`train_presence`).  ``instances`` is either a list of :class:`Instance` or a
    ``(X, y)`` pair.  Training is deterministic; ``seed`` is accepted for
    interface symmetry.
    """
    X, y = _as_arrays(instances)
    p = np.asarray(distribution, dtype=float)
    if len(y) == 0:
        raise LearnerError("cannot train on an empty instance set")
    if p.shape != (len(y),):
        raise LearnerError("distribution length does not match instances")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise LearnerError("distribution must be non-negative and sum to 1")
    if len(np.unique(y)) < 2:
        log.warning("single-class training data: returning a constant model")
    if kind == "logistic":
        return train_logistic(X, y, p)
    if kind == "stump":
        return train_stump(X, y, p)
    if kind == "presence":
        return train_presence(X, y, p)
    raise LearnerError(f"unknown learner kind {kind!r}")


def _as_arrays(instances):
    if isinstance(instances, tuple) and len(instances) == 2:
        X, y = instances
        return np.asarray(X, dtype=float), np.asarray(y, dtype=float)
    X = np.array([i.features for i in instances], dtype=float)
    y = np.array([i.label for i in instances], dtype=float)
    if X.ndim == 1:
        X = X.reshape(len(instances), -1)
    return X, y


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------


def stratified_folds(groups: Sequence[str], labels: Sequence[int], k: int, seed: int) -> dict:
    """Map each group id to a fold in ``range(k)``.

    Groups are sorted, shuffled per label with ``random.Random(seed)`` and
    dealt round-robin, so the result does not depend on input order.
    """
    label_of: dict = {}
    for g, lab in zip(groups, labels):
        label_of.setdefault(g, int(lab))
    if len(label_of) < k:
        raise TooFewInstancesError(f"need at least {k} groups for {k}-fold CV, got {len(label_of)}")
    rng = random.Random(seed)
    fold = {}
    start = 0
    for lab in sorted(set(label_of.values())):
        members = sorted(g for g, v in label_of.items() if v == lab)
        rng.shuffle(members)
        for i, g in enumerate(members):
            fold[g] = (start + i) % k
        start = (start + len(members)) % k
    return fold


def cv_metric(
    instances,
    kind: str = "logistic",
    k: int = 5,
    seed: int = 0,
    extra=None,
    groups: Sequence[str] | None = None,
) -> float:
    """Mean k-fold accuracy at threshold 0.5 (a score of exactly 0.5 counts as 0).

    Folds are stratified by label over ``groups`` (defaults to instance
    provenance ids); ``extra`` instances are added to every training split.
    """
    if k < 2:
        raise LearnerError("k must be at least 2")
    X, y = _as_arrays(instances)
    if len(y) < k:
        raise TooFewInstancesError(f"need at least {k} instances, got {len(y)}")
    if groups is None:
        groups = [_group_of(i, n) for n, i in enumerate(instances)] if not isinstance(instances, tuple) else [str(n) for n in range(len(y))]
    fold_of = stratified_folds(groups, y, k, seed)
    folds = np.array([fold_of[g] for g in groups])
    if extra is not None and len(_as_arrays(extra)[1]):
        Xe, ye = _as_arrays(extra)
    else:
        Xe = np.zeros((0, X.shape[1]))
        ye = np.zeros(0)
    accs = []
    for f in range(k):
        test = folds == f
        if not test.any():
            continue
        Xtr = np.vstack([X[~test], Xe])
        ytr = np.concatenate([y[~test], ye])
        if len(ytr) == 0:
            accs.append(float(np.mean(y[test] == 0)))
            continue
        p = np.full(len(ytr), 1.0 / len(ytr))
        model = train_weighted((Xtr, ytr), p, kind)
        pred = (model.predict_many(X[test]) > 0.5).astype(float)
        accs.append(float(np.mean(pred == y[test])))
    return float(np.mean(accs))


def _group_of(inst, n: int) -> str:
    prov = getattr(inst, "provenance", None)
    if not prov:
        return str(n)
    return str(prov[0])
