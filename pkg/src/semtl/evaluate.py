"""Cross-validated evaluation of the three algorithms and CSV run reports.

Target LSOs are split into stratified folds.  For every fold the embedding,
the instances and the ensemble are rebuilt from the training LSOs only, and
accuracy is the share of held-out LSOs whose class is predicted correctly.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .boost import TRAINERS, BoostConfig, one_vs_rest, predict_class, predict_lso
from .domain import LearningDomain, SemanticLearningTask
from .learners import stratified_folds

ALGOS = ("stadab", "tradaboost", "plain")
REPORT_COLUMNS = ["algo", "case_id", "consistency_ratio", "seed", "accuracy", "n_iterations_run", "early_stopped", "wall_time_ms"]


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    fold_accuracies: tuple
    n_iterations_run: int
    early_stopped: bool
    wall_time_ms: int


def true_class(lso, targets):
    """First target entailed by the LSO, or ``None``."""
    for g in targets:
        if g in lso.closure:
            return g
    return None


def _class_index(lso, targets) -> int:
    c = true_class(lso, targets)
    return -1 if c is None else list(targets).index(c)


def target_folds(domain: LearningDomain, k: int, seed: int) -> dict:
    ids = [x.id for x in domain.lsos]
    labels = [_class_index(x, domain.targets) for x in domain.lsos]
    return stratified_folds(ids, labels, min(k, len(ids)), seed)


def cross_validate(source: LearningDomain, target: LearningDomain, config: BoostConfig, algo: str = "stadab") -> EvalResult:
    if algo not in TRAINERS:
        raise ValueError(f"unknown algorithm {algo!r}")
    train_fn = TRAINERS[algo]
    start = time.perf_counter()
    folds = target_folds(target, config.cv_folds, config.seed)
    task_s = SemanticLearningTask(source, frozenset(source.ids))
    accs, iters, stopped = [], [], False
    for f in range(max(folds.values()) + 1):
        test_ids = {i for i, v in folds.items() if v == f}
        task_t = SemanticLearningTask(target, frozenset(target.ids) - test_ids, test_ids)
        test = task_t.test_lsos()
        if len(target.targets) == 1:
            ens = train_fn(task_s, task_t, config, target.targets[0])
            correct = [predict_lso(ens, x) == int(target.targets[0] in x.closure) for x in test]
            runs = [ens]
        else:
            ensembles = one_vs_rest(train_fn, target.targets, task_s, task_t, config)
            correct = [predict_class(ensembles, x) == true_class(x, target.targets) for x in test]
            runs = list(ensembles.values())
        accs.append(float(np.mean(correct)))
        iters.extend(e.iterations_run for e in runs)
        stopped = stopped or any(e.early_stopped for e in runs)
    elapsed = int((time.perf_counter() - start) * 1000)
    return EvalResult(float(np.mean(accs)), tuple(accs), min(iters), stopped, elapsed)


def report_row(algo: str, case_id: str, ratio: float, seed: int, res: EvalResult, timing: bool = True) -> dict:
    return {
        "algo": algo,
        "case_id": case_id,
        "consistency_ratio": f"{ratio:.4f}",
        "seed": seed,
        "accuracy": f"{res.accuracy:.6f}",
        "n_iterations_run": res.n_iterations_run,
        "early_stopped": int(res.early_stopped),
        "wall_time_ms": res.wall_time_ms if timing else 0,
    }


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def read_report(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != REPORT_COLUMNS:
        raise ValueError(f"report columns {reader.fieldnames} do not match {REPORT_COLUMNS}")
    rows = []
    for r in reader:
        acc = float(r["accuracy"])
        if not 0 <= acc <= 1:
            raise ValueError(f"accuracy {acc} outside [0, 1]")
        rows.append({**r, "accuracy": acc, "consistency_ratio": float(r["consistency_ratio"]), "seed": int(r["seed"])})
    return rows


def aggregate(rows) -> dict:
    """Per-algo, per-ratio mean/std and pairwise improvement percentages."""
    by: dict = {}
    for r in rows:
        by.setdefault(r["algo"], {}).setdefault(f"{r['consistency_ratio']:.4f}", []).append(r["accuracy"])
    per_ratio = {
        algo: {
            ratio: {"mean": float(np.mean(v)), "std": float(np.std(v)), "n": len(v)}
            for ratio, v in sorted(ratios.items())
        }
        for algo, ratios in sorted(by.items())
    }
    overall = {algo: float(np.mean([r["accuracy"] for r in rows if r["algo"] == algo])) for algo in sorted(by)}
    deltas = {}
    for a in sorted(overall):
        for b in sorted(overall):
            if a != b and overall[b] > 0:
                deltas[f"{a}_vs_{b}"] = (overall[a] - overall[b]) / overall[b] * 100.0
    return {"per_ratio": per_ratio, "overall": overall, "delta_percent": deltas}
