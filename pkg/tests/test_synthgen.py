import json

import pytest

from semtl.domain import SemanticLearningTask, load_lso_bundle
from semtl.embedding import build_embedding_matrix
from semtl.synthgen import (
    InfeasibleConfigError,
    SynthConfig,
    config_from_json,
    generate_domain_pair,
    measured_variability,
    parse_ratios,
    planted_consistency_ratio,
    save_pair,
    sweep,
    write_sweep,
)


def bundle_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_same_seed_same_bytes(tmp_path):
    cfg = SynthConfig(seed=11, n_lsos_source=10, n_lsos_target=8)
    save_pair(*generate_domain_pair(cfg), tmp_path / "a")
    save_pair(*generate_domain_pair(cfg), tmp_path / "b")
    assert bundle_bytes(tmp_path / "a") == bundle_bytes(tmp_path / "b")


def test_different_seeds_differ():
    a = generate_domain_pair(SynthConfig(seed=1))[1]
    b = generate_domain_pair(SynthConfig(seed=2))[1]
    assert [x.closure for x in a.lsos] != [x.closure for x in b.lsos]


@pytest.mark.parametrize("vt", [(0.5, 0.0), (2 / 3, 0.0), (0.3, 0.0), (0.8, 0.0)])
def test_variability_hits_request(vt):
    for seed in range(3):
        vO, vY = measured_variability(*generate_domain_pair(SynthConfig(seed=seed, target_variability=vt)))
        assert abs(vO - vt[0]) <= 0.1 and abs(vY - vt[1]) <= 0.1


def test_running_example_variability_exact():
    assert measured_variability(*generate_domain_pair(SynthConfig(target_variability=(2 / 3, 0.0)))) == (2 / 3, 0.0)


def test_multiclass_target_variability():
    cfg = SynthConfig(n_classes=5, target_variability=(0.5, 0.5))
    src, tgt = generate_domain_pair(cfg)
    assert len(tgt.targets) == 5
    assert abs(measured_variability(src, tgt)[1] - 0.5) <= 0.1


def test_unit_ratio_all_consistent():
    task_s, task_t = (SemanticLearningTask.from_domain(d) for d in generate_domain_pair(SynthConfig(consistency_ratio=1.0, n_lsos_target=20)))
    assert set(build_embedding_matrix(task_s, task_t).c) == {1}


@pytest.mark.parametrize("ratio", [0.0, 0.3, 0.5, 0.8, 1.0])
def test_planted_ratio(ratio):
    for seed in range(10):
        got = planted_consistency_ratio(*generate_domain_pair(SynthConfig(seed=seed, consistency_ratio=ratio)))
        assert abs(got - ratio) <= 0.1


@pytest.mark.parametrize(
    "kw",
    [
        {"n_lsos_source": 0},
        {"n_noise": -1},
        {"consistency_ratio": 1.5},
        {"target_variability": (0.5,)},
        {"target_variability": (0.5, 1.2)},
        {"n_classes": 1},
    ],
)
def test_infeasible_configs(kw):
    with pytest.raises(InfeasibleConfigError):
        SynthConfig(**kw)


def test_unreachable_target_variability():
    with pytest.raises(InfeasibleConfigError):
        generate_domain_pair(SynthConfig(target_variability=(0.5, 0.5)))


def test_parse_ratios():
    assert parse_ratios("0.1:1.0:0.1") == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    assert parse_ratios("0.2,0.8") == [0.2, 0.8]
    with pytest.raises(ValueError):
        parse_ratios("0:1:0")


def test_sweep_cells():
    cells = sweep(SynthConfig(), [0.2, 0.8], range(3))
    assert len(cells) == 6
    assert [c["id"] for c in cells[:2]] == ["r0.20_s0", "r0.20_s1"]
    assert cells[-1]["config"].consistency_ratio == 0.8 and cells[-1]["config"].seed == 2


@pytest.mark.parametrize("ratios, seeds", [([], [0]), ([0.5], []), ([1.5], [0])])
def test_sweep_errors(ratios, seeds):
    with pytest.raises(ValueError):
        sweep(SynthConfig(), ratios, seeds)


def test_emitted_sweep_is_loadable(tmp_path):
    template = SynthConfig(n_lsos_source=8, n_lsos_target=6)
    manifest = json.loads(write_sweep(template, [0.5], [0, 1], tmp_path).read_text())
    assert config_from_json(manifest["template"]) == template
    assert len(manifest["cells"]) == 2
    for cell in manifest["cells"]:
        tgt = load_lso_bundle(tmp_path / cell["target"])
        assert tgt.annotations["consistency_ratio"] == "0.5"
        assert len(load_lso_bundle(tmp_path / cell["source"]).lsos) == 8
