"""StAdaB, the TrAdaBoost baseline and the target-only baseline.

The loop runs on groups of identical ``(features, label, tag)`` instances.
Members of a group start with equal weight and always receive the same
update, so a group weight is its size times the shared instance weight and
the result is exactly the per-instance algorithm.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .domain import EmptyTrainingError, Lso, SemanticLearningTask
from .embedding import EmbeddingMatrix, build_embedding_matrix, feature_index, source_target
from .entailment import Entailment
from .learners import Instance, LearnerError, dumps_model, model_from_dict, train_weighted

log = logging.getLogger(__name__)

PSI_FLOOR = 1e-10
MODEL_FORMAT = "semtl-ensemble"
MODEL_VERSION = 1


class BoostError(ValueError):
    pass


class EmbeddingMismatchError(BoostError):
    pass


@dataclass(frozen=True)
class BoostConfig:
    iterations: int = 800
    alpha: float = 0.5
    beta: float = 0.5
    learner: str = "logistic"
    seed: int = 0
    epsilon_sample: int | None = None
    gamma_variant: str = "original"
    cv_folds: int = 5
    eq10: str = "symdiff"

    def __post_init__(self):
        if self.iterations < 1:
            raise BoostError("iterations must be at least 1")
        if self.alpha + self.beta <= 0:
            raise BoostError("alpha + beta must be positive")
        if self.gamma_variant not in ("original", "paper"):
            raise BoostError(f"unknown gamma variant {self.gamma_variant!r}")
        if self.learner not in ("logistic", "stump"):
            raise BoostError(f"unknown learner {self.learner!r}")


@dataclass(frozen=True)
class Ensemble:
    hypotheses: tuple  # of (Model, beta_t)
    config: BoostConfig
    early_stopped: bool = False
    features: str = "semantic"
    target: Entailment | None = None
    embedding: EmbeddingMatrix | None = None
    presence_index: tuple = ()

    def __post_init__(self):
        if any(not b > 0 for _, b in self.hypotheses):
            raise BoostError("every beta_t must be positive")

    @property
    def iterations_run(self) -> int:
        return len(self.hypotheses)

    @property
    def voting_range(self) -> tuple[int, int]:
        n = self.config.iterations
        return math.ceil(n / 2), n

    def voters(self) -> tuple[list, bool]:
        """Hypotheses in the voting window, and whether the fallback was used."""
        lo, hi = self.voting_range
        chosen = [h for t, h in enumerate(self.hypotheses, start=1) if lo <= t <= hi]
        if chosen:
            return chosen, False
        return list(self.hypotheses), True


# ---------------------------------------------------------------------------
# weight rules
# ---------------------------------------------------------------------------


def compute_gamma(n_source: int, iterations: int, variant: str = "original") -> float:
    """Source discount factor; 1 (no discount) when there is nothing to discount."""
    if n_source <= 1:
        return 1.0
    if variant == "original":
        return 1.0 / (1.0 + math.sqrt(2.0 * math.log(n_source) / iterations))
    inner = math.log(n_source / iterations)
    if inner < 0:
        log.warning("literal gamma form is undefined for |G_S| < N; using gamma = 1")
        return 1.0
    return 1.0 / (1.0 + math.sqrt(2.0 * inner))


def weight_update(w: float, gamma: float, gamma_t: float, abs_error: float, tag: str) -> float:
    if tag == "target":
        return w * gamma_t ** (-abs_error)
    if tag == "source":
        return w * gamma ** abs_error
    raise BoostError(f"unknown instance tag {tag!r}")


def error_on_target(model, X, y, w, tags) -> float:
    mask = np.asarray(tags) == "target"
    if not mask.any():
        raise BoostError("no target instances to measure the error on")
    w = np.asarray(w, dtype=float)
    err = np.abs(model.predict_many(np.asarray(X, dtype=float)) - np.asarray(y, dtype=float))
    return float(np.sum(w[mask] * err[mask]) / np.sum(w[mask]))


# ---------------------------------------------------------------------------
# the loop
# ---------------------------------------------------------------------------


def _groups(X: np.ndarray, y: np.ndarray, is_source: np.ndarray):
    keyed = np.column_stack([X, y, is_source.astype(float)])
    uniq, counts = np.unique(keyed, axis=0, return_counts=True)
    d = X.shape[1]
    return uniq[:, :d], uniq[:, d], uniq[:, d + 1] == 1.0, counts.astype(float)


def boost(X, y, tags, config: BoostConfig, trace: list | None = None):
    """Run the transfer boosting loop; returns ``(hypotheses, early_stopped)``.

    With ``trace`` a list, every iteration appends ``(groups, weights, err)``
    where ``groups`` is ``(X, y, is_source)`` of the aggregated instances.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    is_source = np.asarray(tags) == "source"
    if not (~is_source).any():
        raise EmptyTrainingError("no target training instances")
    Xg, yg, src, W = _groups(X, y, is_source)
    tgt = ~src
    gamma = compute_gamma(int(is_source.sum()), config.iterations, config.gamma_variant)
    hypotheses = []
    for _ in range(config.iterations):
        p = W / W.sum()
        model = train_weighted((Xg, yg), p, config.learner, config.seed)
        err = np.abs(model.predict_many(Xg) - yg)
        if trace is not None:
            trace.append(((Xg, yg, src), W.copy(), err))
        psi = float(np.sum(W[tgt] * err[tgt]) / np.sum(W[tgt]))
        if psi >= 0.5:
            return hypotheses, True
        psi = max(psi, PSI_FLOOR)
        gamma_t = psi / (1.0 - psi)
        W = np.where(tgt, W * gamma_t ** (-err), W * gamma ** err)
        hypotheses.append((model, gamma_t))
    return hypotheses, False


def boost_target_only(X, y, config: BoostConfig):
    """The same loop with the source branch removed."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Xg, yg, _, W = _groups(X, y, np.zeros(len(y), dtype=bool))
    hypotheses = []
    for _ in range(config.iterations):
        p = W / W.sum()
        model = train_weighted((Xg, yg), p, config.learner, config.seed)
        err = np.abs(model.predict_many(Xg) - yg)
        psi = float(np.sum(W * err) / np.sum(W))
        if psi >= 0.5:
            return hypotheses, True
        psi = max(psi, PSI_FLOOR)
        gamma_t = psi / (1.0 - psi)
        W = W * gamma_t ** (-err)
        hypotheses.append((model, gamma_t))
    return hypotheses, False


def vote(hypotheses, X: np.ndarray) -> np.ndarray:
    """Log-space form of prod beta_t^-f_t(e) >= prod beta_t^-1/2 for each row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not hypotheses:
        return np.zeros(len(X), dtype=int)
    F = np.stack([m.predict_many(X) for m, _ in hypotheses])
    logb = np.array([math.log(b) for _, b in hypotheses])
    lhs = np.sum(-F * logb[:, None], axis=0)
    rhs = np.sum(-0.5 * logb)
    return (lhs >= rhs).astype(int)


def ensemble_votes(ens: Ensemble, X) -> np.ndarray:
    voters, fallback = ens.voters()
    if fallback and ens.hypotheses:
        log.warning("voting window is empty; falling back to all %d hypotheses", len(voters))
    return vote(voters, X)


def ensemble_predict(ens: Ensemble, features) -> int:
    return int(ensemble_votes(ens, np.asarray(features, dtype=float)[None, :])[0])


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


def build_training_instances(task_s, task_t, emb: EmbeddingMatrix, target: Entailment | None = None) -> list:
    target = emb.target if target is None else target
    pos = emb.position()
    rows = emb.feature_rows()
    out = []
    label_s = source_target(task_s, task_t, target)
    for lsos, label_of, tag in ((task_s.train_lsos(), label_s, "source"), (task_t.train_lsos(), target, "target")):
        for x in lsos:
            y = int(label_of in x.closure)
            for g in x.closure:
                if g in pos:
                    out.append(Instance(tuple(rows[pos[g]]), y, (x.id, g, tag)))
    if not any(i.tag == "target" for i in out):
        raise EmptyTrainingError("target training LSOs yield no instances")
    return out


def _arrays(instances):
    X = np.array([i.features for i in instances], dtype=float)
    y = np.array([i.label for i in instances], dtype=float)
    tags = np.array([i.tag for i in instances])
    return X, y, tags


def stadab_train(task_s, task_t, config: BoostConfig, target: Entailment | None = None, emb=None) -> Ensemble:
    target = task_t.targets[0] if target is None else target
    if emb is None:
        emb = build_embedding_matrix(
            task_s, task_t, target, config.alpha, config.beta,
            k=config.cv_folds, seed=config.seed, epsilon_sample=config.epsilon_sample, eq10=config.eq10,
        )
    X, y, tags = _arrays(build_training_instances(task_s, task_t, emb, target))
    hyps, stopped = boost(X, y, tags, config)
    return Ensemble(tuple(hyps), config, stopped, "semantic", target, emb)


def without_source(task_s: SemanticLearningTask) -> SemanticLearningTask:
    return SemanticLearningTask(task_s.domain, frozenset())


def plain_train(task_s, task_t, config: BoostConfig, target: Entailment | None = None) -> Ensemble:
    """Target-only baseline: StAdaB with the source training set emptied."""
    return stadab_train(without_source(task_s), task_t, config, target)


def _presence_instances(task_s, task_t, index, target):
    col = {g: i for i, g in enumerate(index)}
    label_s = source_target(task_s, task_t, target)
    rows, ys, tags = [], [], []
    for lsos, label_of, tag in ((task_s.train_lsos(), label_s, "source"), (task_t.train_lsos(), target, "target")):
        for x in lsos:
            y = int(label_of in x.closure)
            for g in x.closure:
                if g in col:
                    rows.append(col[g])
                    ys.append(y)
                    tags.append(tag)
    X = np.zeros((len(rows), len(index)))
    X[np.arange(len(rows)), rows] = 1.0
    return X, np.array(ys, dtype=float), np.array(tags)


def tradaboost_train(task_s, task_t, config: BoostConfig, target: Entailment | None = None) -> Ensemble:
    """The same loop over one-hot entailment-presence features."""
    target = task_t.targets[0] if target is None else target
    index = feature_index(task_s, task_t)
    X, y, tags = _presence_instances(task_s, task_t, index, target)
    if not (tags == "target").any():
        raise EmptyTrainingError("target training LSOs yield no instances")
    hyps, stopped = boost(X, y, tags, config)
    return Ensemble(tuple(hyps), config, stopped, "presence", target, None, index)


TRAINERS = {"stadab": stadab_train, "tradaboost": tradaboost_train, "plain": plain_train}


# ---------------------------------------------------------------------------
# LSO-level prediction
# ---------------------------------------------------------------------------


def lso_features(ens: Ensemble, lso: Lso) -> np.ndarray:
    if ens.features == "presence":
        col = {g: i for i, g in enumerate(ens.presence_index)}
        hits = [col[g] for g in lso.closure if g in col]
        X = np.zeros((len(hits), len(ens.presence_index)))
        X[np.arange(len(hits)), hits] = 1.0
        return X
    emb = ens.embedding
    pos = emb.position()
    rows = emb.feature_rows()
    idx = [pos[g] for g in lso.closure if g in pos]
    return rows[idx] if idx else np.zeros((0, 3))


def lso_vote_share(ens: Ensemble, lso: Lso) -> float | None:
    """Mean per-entailment vote, or ``None`` when the LSO has no known entailment."""
    X = lso_features(ens, lso)
    if len(X) == 0:
        return None
    return float(np.mean(ensemble_votes(ens, X)))


def predict_lso(ens: Ensemble, lso: Lso) -> int:
    share = lso_vote_share(ens, lso)
    if share is None:
        log.warning("LSO %s shares no entailment with the model; predicting 0", lso.id)
        return 0
    return int(share >= 0.5)


def one_vs_rest(train_fn, targets, task_s, task_t, config: BoostConfig) -> dict:
    if not targets:
        raise BoostError("one_vs_rest needs at least one target")
    return {g: train_fn(task_s, task_t, config, g) for g in targets}


def predict_class(ensembles: dict, lso: Lso) -> Entailment:
    """Target with the largest vote share; ties go to the lexically first target."""
    best, best_share = None, -1.0
    for g in sorted(ensembles, key=str):
        share = lso_vote_share(ensembles[g], lso)
        share = -0.5 if share is None else share
        if share > best_share:
            best, best_share = g, share
    return best


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------


def dumps_ensemble(ens: Ensemble) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": asdict(ens.config),
        "features": ens.features,
        "target": str(ens.target) if ens.target is not None else None,
        "early_stopped": ens.early_stopped,
        "hypotheses": [{"model": json.loads(dumps_model(m)), "beta": b} for m, b in ens.hypotheses],
    }
    if ens.embedding is not None:
        e = ens.embedding
        doc["embedding"] = {
            "index_hash": e.index_hash(),
            "index": [str(g) for g in e.index],
            "t": list(e.t),
            "c": list(e.c),
            "v": e.v,
            "alpha": e.alpha,
            "beta": e.beta,
        }
    else:
        doc["presence_index"] = [str(g) for g in ens.presence_index]
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def loads_ensemble(text: str, expect_hash: str | None = None) -> Ensemble:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise BoostError("not a supported model file")
    config = BoostConfig(**doc["config"])
    target = Entailment.parse(doc["target"]) if doc.get("target") else None
    hyps = tuple((model_from_dict(h["model"]), float(h["beta"])) for h in doc["hypotheses"])
    emb = None
    if "embedding" in doc:
        e = doc["embedding"]
        emb = EmbeddingMatrix(
            tuple(Entailment.parse(g) for g in e["index"]),
            tuple(float(x) for x in e["t"]),
            tuple(int(x) for x in e["c"]),
            float(e["v"]),
            float(e["alpha"]),
            float(e["beta"]),
            target,
        )
        if emb.index_hash() != e["index_hash"]:
            raise EmbeddingMismatchError("stored embedding does not match its hash")
        if expect_hash is not None and expect_hash != e["index_hash"]:
            raise EmbeddingMismatchError("model was trained against a different embedding index")
    presence = tuple(Entailment.parse(g) for g in doc.get("presence_index", []))
    return Ensemble(hyps, config, bool(doc["early_stopped"]), doc["features"], target, emb, presence)


__all__ = [
    "BoostConfig",
    "Ensemble",
    "LearnerError",
    "boost",
    "boost_target_only",
    "build_training_instances",
    "compute_gamma",
    "ensemble_predict",
    "error_on_target",
    "one_vs_rest",
    "plain_train",
    "predict_class",
    "predict_lso",
    "stadab_train",
    "tradaboost_train",
    "vote",
    "weight_update",
]
