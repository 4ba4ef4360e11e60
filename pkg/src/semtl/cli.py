"""``semtl`` command line: reason, measure, embed, train, evaluate, synthesize.

Exit status is 0 on success, 1 on usage errors (bad flags, missing paths)
and 2 on domain errors such as an inconsistent target or a TBox mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .boost import (
    TRAINERS,
    BoostConfig,
    dumps_ensemble,
    loads_ensemble,
    one_vs_rest,
    predict_class,
    predict_lso,
)
from .domain import SemanticLearningTask, load_lso_bundle, task_variability_report
from .embedding import build_embedding_matrix, embedding_from_csv, variability_weight
from .entailment import Entailment
from .evaluate import ALGOS, EvalResult, aggregate, cross_validate, read_report, report_row, rows_to_csv, true_class
from .ontology import parse_ontology
from .reasoner import entailment_closure
from .synthgen import SynthConfig, _config_json, generate_domain_pair, parse_ratios, save_pair, sweep, write_sweep

log = logging.getLogger("semtl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise argparse.ArgumentTypeError(f"no such file or directory: {path}")
    return p


def _unit(text: str) -> float:
    x = float(text)
    if not 0 <= x <= 1:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return x


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"{text} must be at least 1")
    return n


def _write(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# shared flags
# ---------------------------------------------------------------------------


def _pair_flags(p):
    p.add_argument("--source", type=_existing, required=True, help="source LSO bundle directory")
    p.add_argument("--target", type=_existing, required=True, help="target LSO bundle directory")


def _model_flags(p, algo_choices):
    p.add_argument("--alpha", type=_unit, default=0.5)
    p.add_argument("--beta", type=_unit, default=0.5)
    p.add_argument("--iters", type=_positive, default=800, help="boosting iterations N")
    p.add_argument("--cv-folds", type=_positive, default=5)
    p.add_argument("--epsilon-sample", type=_positive, default=None, help="measure only k transferabilities exactly")
    p.add_argument("--gamma-variant", choices=("original", "paper"), default="original")
    p.add_argument("--eq10", choices=("symdiff", "literal"), default="symdiff", help="variant-set definition")
    p.add_argument("--learner", choices=("logistic", "stump"), default="logistic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algo", choices=algo_choices, default=algo_choices[0])
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall_time_ms (byte-stable reports)")


def _config(args) -> BoostConfig:
    return BoostConfig(
        iterations=args.iters,
        alpha=args.alpha,
        beta=args.beta,
        learner=args.learner,
        seed=args.seed,
        epsilon_sample=args.epsilon_sample,
        gamma_variant=args.gamma_variant,
        cv_folds=args.cv_folds,
        eq10=args.eq10,
    )


def _algos(name: str) -> tuple:
    return ALGOS if name == "all" else (name,)


def _synth_flags(p):
    d = SynthConfig()
    p.add_argument("--n-signal", type=_positive, default=d.n_concepts_shared)
    p.add_argument("--n-padding", type=_positive, default=d.n_concepts_per_side)
    p.add_argument("--n-noise", type=int, default=d.n_noise)
    p.add_argument("--n-source", type=_positive, default=d.n_lsos_source)
    p.add_argument("--n-target", type=_positive, default=d.n_lsos_target)
    p.add_argument("--variability", type=_unit, nargs=2, metavar=("VO", "VY"), default=list(d.target_variability))
    p.add_argument("--signal-strength", type=_unit, default=d.signal_strength)
    p.add_argument("--noise-rate", type=_unit, default=d.noise_rate)
    p.add_argument("--n-classes", type=int, default=d.n_classes)


def _synth_config(args, ratio: float, seed: int) -> SynthConfig:
    return SynthConfig(
        seed=seed,
        n_concepts_shared=args.n_signal,
        n_concepts_per_side=args.n_padding,
        n_noise=args.n_noise,
        n_lsos_source=args.n_source,
        n_lsos_target=args.n_target,
        target_variability=tuple(args.variability),
        consistency_ratio=ratio,
        signal_strength=args.signal_strength,
        noise_rate=args.noise_rate,
        n_classes=args.n_classes,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_reason(args) -> int:
    closure = entailment_closure(parse_ontology(args.ontology.read_text()))
    lines = closure.lines() + [f"# consistent: {'true' if closure.consistent else 'false'}"]
    _write(args.out, "".join(ln + "\n" for ln in lines))
    return 0


def cmd_variability(args) -> int:
    src, tgt = load_lso_bundle(args.source), load_lso_bundle(args.target)
    rep = task_variability_report(src, tgt, args.eq10)
    out = {
        "domain_variability": rep.domain_ratio,
        "task_variability": rep.target_ratio,
        "variant": len(rep.variant),
        "invariant": len(rep.invariant),
        "degenerate": rep.degenerate,
        "v": variability_weight(rep.domain_ratio, rep.target_ratio, args.alpha, args.beta),
        "alpha": args.alpha,
        "beta": args.beta,
    }
    _write(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def _tasks(args):
    src, tgt = load_lso_bundle(args.source), load_lso_bundle(args.target)
    return SemanticLearningTask.from_domain(src), SemanticLearningTask.from_domain(tgt)


def _target_arg(args, task_t) -> Entailment:
    if args.target_entailment is None:
        return task_t.targets[0]
    g = Entailment.parse(args.target_entailment)
    if g not in task_t.targets:
        raise ValueError(f"{g} is not a target of the target bundle")
    return g


def cmd_embed(args) -> int:
    task_s, task_t = _tasks(args)
    emb = build_embedding_matrix(
        task_s, task_t, _target_arg(args, task_t), args.alpha, args.beta,
        k=args.cv_folds, seed=args.seed, epsilon_sample=args.epsilon_sample, eq10=args.eq10,
    )
    _write(args.out, emb.to_csv())
    return 0


def _test_accuracy(ensembles: dict, task_t) -> tuple[float, str]:
    lsos = task_t.test_lsos()
    scope = "test"
    if not lsos:
        log.warning("target bundle has no test LSOs; reporting training accuracy")
        lsos, scope = task_t.train_lsos(), "train"
    targets = list(ensembles)
    if len(targets) == 1:
        g = targets[0]
        hits = [predict_lso(ensembles[g], x) == int(g in x.closure) for x in lsos]
    else:
        hits = [predict_class(ensembles, x) == true_class(x, targets) for x in lsos]
    return sum(hits) / len(hits), scope


def _save_models(path: Path, ensembles: dict) -> None:
    if len(ensembles) == 1:
        _write(path, dumps_ensemble(next(iter(ensembles.values()))))
        return
    path.mkdir(parents=True, exist_ok=True)
    for k, ens in enumerate(ensembles.values()):
        (path / f"target{k}.model").write_text(dumps_ensemble(ens))


def cmd_train(args) -> int:
    start = time.perf_counter()
    task_s, task_t = _tasks(args)
    config = _config(args)
    train_fn = TRAINERS[args.algo]
    if args.embedding is not None:
        if args.algo != "stadab":
            raise UsageError("--embedding only applies to --algo stadab")
        target = _target_arg(args, task_t)
        emb = embedding_from_csv(args.embedding.read_text(), target, args.alpha, args.beta)
        ensembles = {target: train_fn(task_s, task_t, config, target, emb)}
    elif args.target_entailment is not None:
        target = _target_arg(args, task_t)
        ensembles = {target: train_fn(task_s, task_t, config, target)}
    else:
        ensembles = one_vs_rest(train_fn, task_t.targets, task_s, task_t, config)
    acc, scope = _test_accuracy(ensembles, task_t)
    if args.save_model is not None:
        _save_models(args.save_model, ensembles)
    runs = list(ensembles.values())
    res = EvalResult(
        acc, (acc,), min(e.iterations_run for e in runs), any(e.early_stopped for e in runs),
        int((time.perf_counter() - start) * 1000),
    )
    row = report_row(args.algo, f"{args.target.name}:{scope}", float("nan"), args.seed, res, not args.no_timing)
    _write(args.out, rows_to_csv([row]))
    return 0


def cmd_predict(args) -> int:
    tgt = load_lso_bundle(args.target)
    ens = loads_ensemble(args.model.read_text())
    lsos = [x for x in tgt.lsos if x.split == "test"] or list(tgt.lsos)
    lines = ["lso,prediction,truth"]
    for x in lsos:
        lines.append(f"{x.id},{predict_lso(ens, x)},{int(ens.target in x.closure)}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _eval_cell(job) -> list[dict]:
    case_id, ratio, seed, src, tgt, config, algos, timing = job
    if isinstance(src, SynthConfig):
        src, tgt = generate_domain_pair(src)
    else:
        src, tgt = load_lso_bundle(src), load_lso_bundle(tgt)
    return [report_row(a, case_id, ratio, seed, cross_validate(src, tgt, config, a), timing) for a in algos]


def _workers() -> int:
    raw = os.environ.get("SEMTL_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"SEMTL_WORKERS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise UsageError("SEMTL_WORKERS must be at least 1")
    return n


def _run_jobs(jobs) -> list[dict]:
    n = min(_workers(), len(jobs))
    if n <= 1:
        results = [_eval_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_eval_cell, jobs))
    return [row for rows in results for row in rows]


def cmd_eval(args) -> int:
    ratio = float("nan")
    manifest = args.target / "manifest.json"
    if manifest.exists():
        ratio = float(json.loads(manifest.read_text()).get("annotations", {}).get("consistency_ratio", "nan"))
    job = (args.case_id or args.target.name, ratio, args.seed, args.source, args.target, _config(args), _algos(args.algo), not args.no_timing)
    _write(args.out, rows_to_csv(_run_jobs([job])))
    return 0


def cmd_synth(args) -> int:
    cfg = _synth_config(args, args.ratio, args.seed)
    src, tgt = generate_domain_pair(cfg)
    save_pair(src, tgt, args.out)
    (Path(args.out) / "config.json").write_text(json.dumps(_config_json(cfg), indent=2, sort_keys=True) + "\n")
    return 0


def cmd_sweep(args) -> int:
    template = _synth_config(args, 0.0, 0)
    cells = sweep(template, parse_ratios(args.ratios), range(args.seeds))
    config = _config(args)
    if args.emit is not None:
        write_sweep(template, [c["ratio"] for c in cells[:: args.seeds]], range(args.seeds), args.emit)
    jobs = [
        (c["id"], c["ratio"], c["seed"], c["config"], None, _with_seed(config, c["seed"]), _algos(args.algo), not args.no_timing)
        for c in cells
    ]
    _write(args.out, rows_to_csv(_run_jobs(jobs)))
    return 0


def _with_seed(config: BoostConfig, seed: int) -> BoostConfig:
    return replace(config, seed=seed)


def cmd_report(args) -> int:
    rows = []
    for path in args.csv:
        rows.extend(read_report(path.read_text()))
    if not rows:
        raise ValueError("report files contain no rows")
    _write(args.out, json.dumps(aggregate(rows), indent=2, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semtl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("reason", help="write the entailment closure of an ontology")
    p.add_argument("--ontology", type=_existing, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_reason)

    p = sub.add_parser("variability", help="domain and task variability of two bundles")
    _pair_flags(p)
    p.add_argument("--alpha", type=_unit, default=0.5)
    p.add_argument("--beta", type=_unit, default=0.5)
    p.add_argument("--eq10", choices=("symdiff", "literal"), default="symdiff")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_variability)

    p = sub.add_parser("embed", help="write the semantic embedding CSV")
    _pair_flags(p)
    _model_flags(p, ("stadab",))
    p.add_argument("--target-entailment", help='e.g. "CA Cleared(r0)"; defaults to the first target')
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="train one algorithm and report its accuracy on the test split")
    _pair_flags(p)
    _model_flags(p, ALGOS)
    p.add_argument("--target-entailment")
    p.add_argument("--embedding", type=_existing, help="reuse an embedding CSV written by `embed`")
    p.add_argument("--save-model", type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a saved model to the LSOs of a bundle")
    p.add_argument("--model", type=_existing, required=True)
    p.add_argument("--target", type=_existing, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="cross-validated accuracy on one bundle pair")
    _pair_flags(p)
    _model_flags(p, ALGOS + ("all",))
    p.add_argument("--case-id")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic bundle pair")
    _synth_flags(p)
    p.add_argument("--ratio", type=_unit, default=0.8, help="consistency ratio")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="evaluate a ratio x seed grid of synthetic pairs")
    _synth_flags(p)
    _model_flags(p, ALGOS + ("all",))
    p.add_argument("--ratios", default="0.1:1.0:0.1", help="lo:hi:step or a comma list")
    p.add_argument("--seeds", type=_positive, default=10, help="number of seeds, 0..n-1")
    p.add_argument("--emit", type=Path, help="also write every cell's bundles and sweep.json here")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate run report CSVs into JSON")
    p.add_argument("csv", type=_existing, nargs="+")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"semtl: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"semtl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
