"""Learning sample ontologies, learning domains, tasks and variability.

A bundle on disk is a directory holding ``manifest.json``, one shared
ontology file with every declaration and the TBox, and one ABox file per
LSO::

    {
      "annotations": {"topic": "Road", "country": "UK"},
      "tbox": "shared.onto",
      "lsos": [{"id": "t1", "abox": "t1.onto"}, ...],
      "targets": ["CA Cleared(r0)", "CA Disrupted(r0)"]
    }

An LSO entry may also carry ``"split": "train" | "test"``, its own
``"annotations"`` and a ``"tbox"`` override (which must then agree with the
shared one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .entailment import Entailment, EntailmentSet
from .ontology import Ontology, merge_abox, parse_ontology, serialize_ontology
from .reasoner import closure_of_lso_set, entailment_closure, entails, is_consistent, same_tbox

MANIFEST = "manifest.json"
SPLITS = ("train", "test")


class DomainError(ValueError):
    pass


class ManifestError(DomainError):
    pass


class TBoxMismatchError(DomainError):
    pass


class MissingFileError(DomainError, FileNotFoundError):
    pass


class InconsistentTargetError(DomainError):
    pass


class EmptyTrainingError(DomainError):
    pass


@dataclass(frozen=True)
class Lso:
    id: str
    ontology: Ontology
    annotations: dict = field(default_factory=dict, compare=False, hash=False)
    split: str | None = None

    @cached_property
    def closure(self) -> EntailmentSet:
        return entailment_closure(self.ontology)


@dataclass(frozen=True)
class LearningDomain:
    lsos: tuple
    targets: tuple
    annotations: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "lsos", tuple(self.lsos))
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise DomainError("a learning domain needs at least one target entailment")
        for g in self.targets:
            if not isinstance(g, Entailment):
                raise DomainError(f"target {g!r} is not an atomic entailment")
        ids = [x.id for x in self.lsos]
        if len(set(ids)) != len(ids):
            raise DomainError("LSO ids must be unique within a domain")
        for x in self.lsos[1:]:
            if not same_tbox(self.lsos[0].ontology, x.ontology):
                raise TBoxMismatchError(f"LSO {x.id!r} does not share the domain TBox")

    @property
    def shared_tbox(self) -> tuple:
        return self.lsos[0].ontology.tbox if self.lsos else ()

    @property
    def ids(self) -> list[str]:
        return [x.id for x in self.lsos]

    def lso(self, lso_id: str) -> Lso:
        for x in self.lsos:
            if x.id == lso_id:
                return x
        raise KeyError(lso_id)

    def closure(self) -> EntailmentSet:
        return closure_of_lso_set(self.lsos)


@dataclass(frozen=True)
class SemanticLearningTask:
    domain: LearningDomain
    train_ids: frozenset
    test_ids: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "train_ids", frozenset(self.train_ids))
        object.__setattr__(self, "test_ids", frozenset(self.test_ids))
        if self.train_ids & self.test_ids:
            raise DomainError("train and test LSO sets overlap")
        unknown = (self.train_ids | self.test_ids) - set(self.domain.ids)
        if unknown:
            raise DomainError(f"unknown LSO ids {sorted(unknown)}")

    @classmethod
    def from_domain(cls, domain: LearningDomain) -> "SemanticLearningTask":
        """Use the bundle's split marks; unmarked LSOs train."""
        test = {x.id for x in domain.lsos if x.split == "test"}
        return cls(domain, {x.id for x in domain.lsos} - test, test)

    def train_lsos(self) -> list[Lso]:
        return [x for x in self.domain.lsos if x.id in self.train_ids]

    def test_lsos(self) -> list[Lso]:
        return [x for x in self.domain.lsos if x.id in self.test_ids]

    @property
    def targets(self) -> tuple:
        return self.domain.targets


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except FileNotFoundError as exc:
        raise MissingFileError(f"missing bundle file {path}") from exc


def load_lso_bundle(path) -> LearningDomain:
    root = Path(path)
    try:
        manifest = json.loads(_read(root / MANIFEST))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{root / MANIFEST}: {exc}") from exc
    if not isinstance(manifest, dict):
        raise ManifestError("manifest must be a JSON object")
    for key, kind in (("tbox", str), ("lsos", list), ("targets", list)):
        if not isinstance(manifest.get(key), kind):
            raise ManifestError(f"manifest field {key!r} missing or not a {kind.__name__}")
    shared = _read(root / manifest["tbox"])
    shared_onto = parse_ontology(shared)
    lsos = []
    for entry in manifest["lsos"]:
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str) or not isinstance(entry.get("abox"), str):
            raise ManifestError(f"bad LSO entry {entry!r}")
        split = entry.get("split")
        if split is not None and split not in SPLITS:
            raise ManifestError(f"LSO {entry['id']!r}: split must be one of {SPLITS}")
        tbox_text = _read(root / entry["tbox"]) if "tbox" in entry else shared
        onto = parse_ontology(tbox_text + "\n" + _read(root / entry["abox"]))
        lsos.append(Lso(entry["id"], onto, dict(entry.get("annotations", {})), split))
        if not same_tbox(onto, shared_onto):
            raise TBoxMismatchError(f"LSO {entry['id']!r} has a TBox different from {manifest['tbox']}")
    try:
        targets = [Entailment.parse(t) for t in manifest["targets"]]
    except (TypeError, ValueError) as exc:
        raise ManifestError(str(exc)) from exc
    sig = shared_onto.signature
    for g in targets:
        cs, rs, ins = g.names()
        if (cs - sig.concepts) or (rs - sig.roles) or (ins - sig.individuals):
            raise ManifestError(f"target {g} uses names not declared in {manifest['tbox']}")
    return LearningDomain(tuple(lsos), tuple(targets), dict(manifest.get("annotations", {})))


def save_lso_bundle(domain: LearningDomain, path) -> Path:
    """Write ``domain`` as a bundle; declarations go to the shared file."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    sig = None
    for x in domain.lsos:
        sig = x.ontology.signature if sig is None else sig.union(x.ontology.signature)
    shared = Ontology(sig, domain.shared_tbox, ())
    (root / "shared.onto").write_text(serialize_ontology(shared))
    entries = []
    for x in domain.lsos:
        body = serialize_ontology(x.ontology.with_abox(x.ontology.abox).normalized())
        abox_lines = [ln for ln in body.splitlines() if ln.split(" ", 1)[0] in ("CA", "RA", "EQ", "NEQ")]
        fname = f"{x.id}.onto"
        (root / fname).write_text("".join(ln + "\n" for ln in abox_lines))
        entry = {"id": x.id, "abox": fname}
        if x.split:
            entry["split"] = x.split
        if x.annotations:
            entry["annotations"] = dict(sorted(x.annotations.items()))
        entries.append(entry)
    manifest = {
        "annotations": dict(sorted(domain.annotations.items())),
        "tbox": "shared.onto",
        "lsos": entries,
        "targets": [str(g) for g in domain.targets],
    }
    (root / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    return root


# ---------------------------------------------------------------------------
# truth and variability
# ---------------------------------------------------------------------------


def target_truth(lso: Lso, target: Entailment) -> bool:
    entails(lso.ontology, target)  # validates names
    return target in lso.closure


@dataclass(frozen=True)
class VariabilityReport:
    variant: EntailmentSet
    invariant: EntailmentSet
    domain_ratio: float
    target_ratio: float | None = None
    degenerate: bool = False


def _ratio(variant: int, invariant: int) -> tuple[float, bool]:
    total = variant + invariant
    if total == 0:
        return 0.0, True
    return variant / total, False


def _split(gS, gT, eq10: str):
    gS, gT = frozenset(gS), frozenset(gT)
    invariant = gS & gT
    if eq10 == "symdiff":
        variant = gS ^ gT
    elif eq10 == "literal":
        # g in G_T or g not in G_S, over G = G_S | G_T; overlaps the invariant set
        variant = frozenset(g for g in gS | gT if g in gT or g not in gS)
    else:
        raise ValueError(f"unknown eq10 mode {eq10!r}")
    return variant, invariant


def domain_variability(gS, gT, yS=None, yT=None, eq10: str = "symdiff") -> VariabilityReport:
    """Variant/invariant split of two closures.

    With target sets ``yS``/``yT`` the target-level ratio is filled in as well.
    An empty union yields ratio 0 and ``degenerate=True``.
    """
    variant, invariant = _split(_as_set(gS), _as_set(gT), eq10)
    ratio, degenerate = _ratio(len(variant), len(invariant))
    target_ratio = None
    if yS is not None and yT is not None:
        yv, yi = _split(_as_set(yS), _as_set(yT), eq10)
        target_ratio, deg_y = _ratio(len(yv), len(yi))
        degenerate = degenerate or deg_y
    return VariabilityReport(EntailmentSet(variant), EntailmentSet(invariant), ratio, target_ratio, degenerate)


def _as_set(g) -> frozenset:
    return g.items if isinstance(g, EntailmentSet) else frozenset(g)


def task_variability(task_s, task_t, eq10: str = "symdiff") -> tuple[float, float]:
    """``(vO, vY)`` from the domains' LSO closures and their target sets."""
    rep = task_variability_report(task_s, task_t, eq10)
    return rep.domain_ratio, rep.target_ratio


def task_variability_report(task_s, task_t, eq10: str = "symdiff") -> VariabilityReport:
    ds = _domain_of(task_s)
    dt = _domain_of(task_t)
    return domain_variability(_closure(ds.lsos), _closure(dt.lsos), ds.targets, dt.targets, eq10)


def _domain_of(task) -> LearningDomain:
    return task.domain if isinstance(task, SemanticLearningTask) else task


def _closure(lsos) -> frozenset:
    out: set = set()
    for x in lsos:
        out |= x.closure.items
    return frozenset(out)


def target_union(lsos: Sequence[Lso]) -> Ontology:
    """All ABoxes of ``lsos`` merged under their shared TBox."""
    if not lsos:
        raise EmptyTrainingError("no target training LSOs")
    base = lsos[0].ontology
    axioms = [ax for x in lsos[1:] for ax in x.ontology.abox]
    sig = base.signature
    for x in lsos[1:]:
        sig = sig.union(x.ontology.signature)
    return merge_abox(Ontology(sig, base.tbox, base.abox), axioms)


# ---------------------------------------------------------------------------
# transferability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    transferable: bool
    gain: float
    novel: bool


def assess_transferability(
    S: Iterable[Entailment],
    task_s: SemanticLearningTask,
    task_t: SemanticLearningTask,
    learner: str = "presence",
    k: int = 5,
    epsilon: float = 0.01,
    target: Entailment | None = None,
    seed: int = 0,
) -> Verdict:
    """Gain of adding the source knowledge ``S`` to the target task.

    Transferable iff the cross-validated gain exceeds ``epsilon`` and ``S``
    holds at least one entailment absent from the target closure.
    """
    from .embedding import transfer_gain

    if not 0 < epsilon <= 1:
        raise DomainError("epsilon must lie in (0, 1]")
    S = frozenset(S)
    if not task_t.train_ids:
        raise EmptyTrainingError("target task has no training LSOs")
    gT = _closure(task_t.train_lsos())
    novel = bool(S - gT)
    if not S:
        return Verdict(False, 0.0, False)
    target = target if target is not None else task_t.targets[0]
    gain = transfer_gain(S, task_s, task_t, target, learner=learner, k=k, seed=seed)
    return Verdict(gain > epsilon and novel, gain, novel)


def classify_knowledge(S, task_s, task_t, learner="presence", k=5, epsilon=0.01, target=None, seed=0) -> str:
    verdict = assess_transferability(S, task_s, task_t, learner, k, epsilon, target, seed)
    if not verdict.transferable:
        return "non-transferable"
    union = merge_abox(target_union(task_t.train_lsos()), S)
    return "consistent-transferable" if is_consistent(union) else "inconsistent-transferable"
