"""Seeded source/target domain pairs with planted signal and clashes.

Every LSO describes the same individuals.  Its class is asserted on ``x0``
through target concepts (``Class_k``; with two classes a single ``Class0``
whose absence means the other class).  Each signal slot ``Sig_j(e_j)`` marks
one class and appears more often in LSOs of that class.  A consistent slot
uses the same entailment on both sides.  An inconsistent slot shows ``AntiSig_j(e_j)`` in
the target instead and ``Sig_j`` is declared disjoint from it, so the source
knowledge contradicts the target.  Noise slots ``Noise_i(n_i)`` carry no
signal.  Padding entailments, each placed in a single LSO, tune the domain
variability to the requested value.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .domain import LearningDomain, Lso, save_lso_bundle, task_variability
from .entailment import Entailment
from .ontology import BOTTOM, Atomic, ConceptAssertion, Gci, Ontology, Signature, conj


POSITIVE_SLOT_SHARE = 0.7


class InfeasibleConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_concepts_shared: int = 10  # signal slots
    n_concepts_per_side: int = 4  # padding concepts per side
    n_noise: int = 0
    n_lsos_source: int = 60
    n_lsos_target: int = 60
    target_variability: tuple = (0.5, 0.0)
    consistency_ratio: float = 0.8
    signal_strength: float = 0.8
    noise_rate: float = 0.1
    n_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "target_variability", tuple(float(x) for x in self.target_variability))
        counts = (self.n_concepts_shared, self.n_concepts_per_side, self.n_lsos_source, self.n_lsos_target)
        if min(counts) < 1 or self.n_noise < 0:
            raise InfeasibleConfigError("counts must be at least 1")
        for name in ("consistency_ratio", "signal_strength", "noise_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise InfeasibleConfigError(f"{name} must lie in [0, 1]")
        if len(self.target_variability) != 2 or not all(0 <= x <= 1 for x in self.target_variability):
            raise InfeasibleConfigError("target_variability must be a pair in [0, 1]")
        if not 2 <= self.n_classes <= 6:
            raise InfeasibleConfigError("n_classes must lie in 2..6")

    @property
    def n_targets(self) -> int:
        return 1 if self.n_classes == 2 else self.n_classes


def _choose_target_shift(n: int, vY: float) -> int:
    """Number of renamed target concepts giving a target ratio closest to ``vY``."""
    best = min(range(n + 1), key=lambda d: (abs(2 * d / (n + d) - vY), d))
    if abs(2 * best / (n + best) - vY) > 0.1:
        raise InfeasibleConfigError(f"target variability {vY} is unreachable with {n} target entailments")
    return best


def _slot_classes(n_sig: int, n_cls: int) -> list[int]:
    """Class marked by each signal slot.

    With two classes most slots mark the positive class: an LSO is predicted
    positive when at least half of its entailments vote 1, and only
    positive-class evidence can earn a nonzero transferability.
    """
    if n_cls == 2:
        n_pos = round(POSITIVE_SLOT_SHARE * n_sig)
        return [1 if j < n_pos else 0 for j in range(n_sig)]
    return [j % n_cls for j in range(n_sig)]


def _balanced_classes(rng: random.Random, n: int, n_classes: int) -> list[int]:
    labels = [i % n_classes for i in range(n)]
    rng.shuffle(labels)
    return labels


def generate_domain_pair(cfg: SynthConfig) -> tuple[LearningDomain, LearningDomain]:
    rng = random.Random(cfg.seed)
    n_sig = cfg.n_concepts_shared
    n_cons = round(cfg.consistency_ratio * n_sig)
    n_cls = cfg.n_classes
    slot_class = _slot_classes(n_sig, n_cls)
    # spread inconsistent slots proportionally over the classes
    per_class = [[j for j in range(n_sig) if slot_class[j] == c] for c in range(n_cls)]
    for members in per_class:
        rng.shuffle(members)
    dealt = sorted(
        (j for members in per_class for j in members),
        key=lambda j: ((per_class[slot_class[j]].index(j) + 0.5) / len(per_class[slot_class[j]]), slot_class[j]),
    )
    inconsistent = set(dealt[: n_sig - n_cons])
    n_t = cfg.n_targets
    shift = _choose_target_shift(n_t, cfg.target_variability[1])
    src_classes = [f"Class{k}" for k in range(n_t)]
    tgt_classes = [f"TClass{k}" if k < shift else f"Class{k}" for k in range(n_t)]

    def class_atoms(label: int, names) -> list:
        if n_t == 1:
            return [ConceptAssertion(Atomic(names[0]), "x0")] if label == 1 else []
        return [ConceptAssertion(Atomic(names[label]), "x0")]

    def side(n: int, is_target: bool) -> list[list]:
        labels = _balanced_classes(rng, n, n_cls)
        aboxes = []
        off = (1 - cfg.signal_strength) / (n_cls - 1)
        for y in labels:
            abox = []
            for j in range(n_sig):
                prob = cfg.signal_strength if y == slot_class[j] else off
                if rng.random() < prob:
                    name = f"AntiSig{j}" if is_target and j in inconsistent else f"Sig{j}"
                    abox.append(ConceptAssertion(Atomic(name), f"e{j}"))
            for i in range(cfg.n_noise):
                if rng.random() < 0.5:
                    abox.append(ConceptAssertion(Atomic(f"Noise{i}"), f"n{i}"))
            shown = y
            if rng.random() < cfg.noise_rate:
                shown = (1 - y) if n_cls == 2 else rng.choice([c for c in range(n_cls) if c != y])
            abox.extend(class_atoms(shown, tgt_classes if is_target else src_classes))
            aboxes.append(abox)
        # every slot shows up at least once per side so the clash is observable
        for j in range(n_sig):
            name = f"AntiSig{j}" if is_target and j in inconsistent else f"Sig{j}"
            ax = ConceptAssertion(Atomic(name), f"e{j}")
            if not any(ax in a for a in aboxes):
                aboxes[rng.randrange(n)].append(ax)
        return aboxes

    src_aboxes = side(cfg.n_lsos_source, False)
    tgt_aboxes = side(cfg.n_lsos_target, True)

    def atoms(aboxes) -> set:
        return {(ax.concept.name, ax.individual) for a in aboxes for ax in a}

    gS, gT = atoms(src_aboxes), atoms(tgt_aboxes)
    variant, invariant = len(gS ^ gT), len(gS & gT)
    vO = cfg.target_variability[0]
    pad_variant = pad_invariant = 0
    if variant < vO * (variant + invariant):
        if vO >= 1:
            raise InfeasibleConfigError("domain variability 1 is unreachable: the domains share entailments")
        pad_variant = math.ceil((vO * invariant - (1 - vO) * variant) / (1 - vO) - 1e-9)
    elif variant > vO * (variant + invariant):
        if vO <= 0:
            raise InfeasibleConfigError("domain variability 0 is unreachable: the domains differ")
        pad_invariant = math.ceil(variant / vO - variant - invariant - 1e-9)
    n_pad_concepts = cfg.n_concepts_per_side
    individuals_needed = 0
    for i in range(pad_variant):
        where = src_aboxes if i % 2 == 0 else tgt_aboxes
        tag = "PadS" if i % 2 == 0 else "PadT"
        k = i // 2
        ind = f"u{k // n_pad_concepts}"
        individuals_needed = max(individuals_needed, k // n_pad_concepts + 1)
        where[rng.randrange(len(where))].append(ConceptAssertion(Atomic(f"{tag}{k % n_pad_concepts}"), ind))
    for i in range(pad_invariant):
        ind = f"u{i // n_pad_concepts}"
        individuals_needed = max(individuals_needed, i // n_pad_concepts + 1)
        ax = ConceptAssertion(Atomic(f"Shared{i % n_pad_concepts}"), ind)
        src_aboxes[rng.randrange(len(src_aboxes))].append(ax)
        tgt_aboxes[rng.randrange(len(tgt_aboxes))].append(ax)

    concepts = set(src_classes) | set(tgt_classes)
    concepts |= {f"Sig{j}" for j in range(n_sig)} | {f"AntiSig{j}" for j in sorted(inconsistent)}
    concepts |= {f"Noise{i}" for i in range(cfg.n_noise)}
    concepts |= {f"{p}{c}" for p in ("PadS", "PadT", "Shared") for c in range(n_pad_concepts)}
    individuals = {"x0"} | {f"e{j}" for j in range(n_sig)} | {f"n{i}" for i in range(cfg.n_noise)}
    individuals |= {f"u{k}" for k in range(individuals_needed)}
    sig = Signature(frozenset(concepts), frozenset(), frozenset(individuals))
    tbox = tuple(Gci(conj(Atomic(f"Sig{j}"), Atomic(f"AntiSig{j}")), BOTTOM) for j in sorted(inconsistent))

    def domain(aboxes, prefix: str, classes, side_name: str) -> LearningDomain:
        lsos = [
            Lso(f"{prefix}{i:03d}", Ontology(sig, tbox, tuple(sorted(set(a), key=str))))
            for i, a in enumerate(aboxes)
        ]
        targets = tuple(Entailment.concept(c, "x0") for c in classes)
        return LearningDomain(tuple(lsos), targets, {"generator": "synthgen", "seed": str(cfg.seed), "side": side_name, "consistency_ratio": f"{cfg.consistency_ratio:g}"})

    return domain(src_aboxes, "s", src_classes, "source"), domain(tgt_aboxes, "t", tgt_classes, "target")


def planted_consistency_ratio(source: LearningDomain, target: LearningDomain) -> float:
    """Fraction of planted signal source entailments consistent with the target union."""
    from .embedding import consistency_checker

    checker = consistency_checker(target.lsos)
    planted = sorted({g for x in source.lsos for g in x.closure if g.predicate.startswith("Sig")}, key=str)
    if not planted:
        return 1.0
    return sum(checker.consistent_with(g) for g in planted) / len(planted)


def measured_variability(source: LearningDomain, target: LearningDomain) -> tuple[float, float]:
    return task_variability(source, target)


def save_pair(source: LearningDomain, target: LearningDomain, out) -> tuple[Path, Path]:
    out = Path(out)
    return save_lso_bundle(source, out / "source"), save_lso_bundle(target, out / "target")


def parse_ratios(spec: str) -> list[float]:
    """``"0.1:1.0:0.1"`` (inclusive range) or ``"0.2,0.8"``."""
    if ":" in spec:
        lo, hi, step = (float(x) for x in spec.split(":"))
        if step <= 0:
            raise ValueError("ratio step must be positive")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + i * step, 10) for i in range(n)]
    return [float(x) for x in spec.split(",") if x.strip()]


def sweep(template: SynthConfig, ratios, seeds) -> list[dict]:
    """One cell per ``(ratio, seed)``, ordered by ratio then seed."""
    ratios = list(ratios)
    seeds = list(seeds)
    if not ratios:
        raise ValueError("sweep needs at least one ratio")
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    for r in ratios:
        if not 0 <= r <= 1:
            raise ValueError(f"ratio {r} outside [0, 1]")
    cells = []
    for r in ratios:
        for s in seeds:
            cfg = replace(template, consistency_ratio=r, seed=s)
            cells.append({"id": f"r{r:.2f}_s{s}", "ratio": r, "seed": s, "config": cfg})
    return cells


def write_sweep(template: SynthConfig, ratios, seeds, out) -> Path:
    """Emit every cell's bundles plus ``sweep.json``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"template": _config_json(template), "cells": []}
    for cell in sweep(template, ratios, seeds):
        src, tgt = generate_domain_pair(cell["config"])
        save_pair(src, tgt, out / cell["id"])
        manifest["cells"].append(
            {"id": cell["id"], "ratio": cell["ratio"], "seed": cell["seed"], "source": f"{cell['id']}/source", "target": f"{cell['id']}/target"}
        )
    (out / "sweep.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out / "sweep.json"


def _config_json(cfg: SynthConfig) -> dict:
    d = asdict(cfg)
    d["target_variability"] = list(cfg.target_variability)
    return d


def config_from_json(d: dict) -> SynthConfig:
    return SynthConfig(**{**d, "target_variability": tuple(d["target_variability"])})
