import csv
import io
import json
import shutil

import pytest

from semtl.cli import main
from semtl.evaluate import REPORT_COLUMNS

from conftest import FIXTURE

SMALL = ["--n-source", "12", "--n-target", "10"]
FAST = ["--iters", "10", "--no-timing"]


def run(*argv):
    return main([str(a) for a in argv])


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


@pytest.fixture
def pair(tmp_path):
    out = tmp_path / "pair"
    assert run("synth", *SMALL, "--seed", 3, "--ratio", 0.8, "--out", out) == 0
    return out


# -- exit codes --------------------------------------------------------------


def test_unknown_flag_is_usage_error(capsys):
    assert run("reason", "--bogus") == 1
    assert run("frobnicate") == 1


def test_missing_path_is_usage_error(tmp_path):
    assert run("reason", "--ontology", tmp_path / "nope.onto") == 1


def test_tbox_mismatch_is_domain_error(tmp_path):
    root = tmp_path / "s"
    shutil.copytree(FIXTURE / "source", root)
    (root / "other.onto").write_text((root / "shared.onto").read_text().replace("GCI Road SubClassOf", "# "))
    manifest = json.loads((root / "manifest.json").read_text())
    manifest["lsos"][1]["tbox"] = "other.onto"
    (root / "manifest.json").write_text(json.dumps(manifest))
    assert run("variability", "--source", root, "--target", FIXTURE / "target") == 2


def test_syntax_error_is_domain_error(tmp_path):
    bad = tmp_path / "bad.onto"
    bad.write_text("Concept A\nGCI A SubClassOf\n")
    assert run("reason", "--ontology", bad) == 2


def test_embedding_only_for_stadab(tmp_path, pair):
    emb = tmp_path / "e.csv"
    assert run("embed", "--source", pair / "source", "--target", pair / "target", "--out", emb) == 0
    argv = ["train", "--algo", "plain", "--source", pair / "source", "--target", pair / "target", "--embedding", emb]
    assert run(*argv) == 1


# -- subcommands -------------------------------------------------------------


def test_reason_footer(tmp_path):
    out = tmp_path / "closure.txt"
    onto = tmp_path / "o.onto"
    onto.write_text("Concept A\nConcept B\nIndividual a\nGCI A SubClassOf B\nCA A(a)\n")
    assert run("reason", "--ontology", onto, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[-1] == "# consistent: true"
    assert lines[:-1] == sorted(lines[:-1]) and "CA B(a)" in lines


def test_reason_reports_inconsistency(tmp_path):
    onto = tmp_path / "o.onto"
    onto.write_text("Concept A\nConcept B\nIndividual a\nGCI And(A B) SubClassOf Bottom\nCA A(a)\nCA B(a)\n")
    out = tmp_path / "c.txt"
    assert run("reason", "--ontology", onto, "--out", out) == 0
    assert out.read_text().splitlines()[-1] == "# consistent: false"


def test_variability_fixture(tmp_path):
    out = tmp_path / "v.json"
    assert run("variability", "--source", FIXTURE / "source", "--target", FIXTURE / "target", "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["domain_variability"] == 2 / 3 and data["task_variability"] == 0.0 and data["v"] == 1 / 3


def test_closed_loop(tmp_path, pair):
    src, tgt = pair / "source", pair / "target"
    emb, model, rep, pred = (tmp_path / n for n in ("e.csv", "m.model", "r.csv", "p.csv"))
    assert run("embed", "--source", src, "--target", tgt, "--out", emb) == 0
    assert run("train", "--source", src, "--target", tgt, *FAST, "--embedding", emb, "--save-model", model, "--out", rep) == 0
    assert list(rows(rep)[0]) == REPORT_COLUMNS
    assert run("predict", "--model", model, "--target", tgt, "--out", pred) == 0
    preds = rows(pred)
    assert len(preds) == 10 and {r["prediction"] for r in preds} <= {"0", "1"}
    assert run("report", rep, "--out", tmp_path / "agg.json") == 0


def test_multiclass_models_directory(tmp_path):
    out = tmp_path / "mc"
    assert run("synth", "--n-source", 20, "--n-target", 15, "--n-classes", 3, "--out", out) == 0
    models = tmp_path / "models"
    assert run("train", "--source", out / "source", "--target", out / "target", *FAST, "--save-model", models) == 0
    assert sorted(p.name for p in models.iterdir()) == ["target0.model", "target1.model", "target2.model"]


def test_eval_rows_and_reruns(tmp_path, pair):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["eval", "--source", pair / "source", "--target", pair / "target", "--algo", "all", *FAST, "--cv-folds", 2]
    assert run(*argv, "--out", a) == 0
    assert run(*argv, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    got = rows(a)
    assert [r["algo"] for r in got] == ["stadab", "tradaboost", "plain"]
    assert all(r["consistency_ratio"] == "0.8000" and r["wall_time_ms"] == "0" for r in got)


def test_synth_reruns_identical(tmp_path):
    for name in ("a", "b"):
        assert run("synth", *SMALL, "--seed", 5, "--out", tmp_path / name) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_small_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    argv = ["sweep", *SMALL, "--ratios", "0.2,0.8", "--seeds", 2, "--algo", "all", *FAST, "--cv-folds", 2]
    assert run(*argv, "--emit", tmp_path / "cells", "--out", out) == 0
    got = rows(out)
    assert len(got) == 12  # 3 algos x 2 ratios x 2 seeds
    assert len(json.loads((tmp_path / "cells" / "sweep.json").read_text())["cells"]) == 4
    agg = tmp_path / "agg.json"
    assert run("report", out, "--out", agg) == 0
    per = json.loads(agg.read_text())["per_ratio"]
    assert all(per[a][r]["n"] == 2 for a in per for r in per[a])


# -- report arithmetic -------------------------------------------------------


def write_report(path, entries):
    lines = [",".join(REPORT_COLUMNS)]
    for algo, ratio, seed, acc in entries:
        lines.append(f"{algo},c{seed},{ratio},{seed},{acc},8,0,0")
    path.write_text("\n".join(lines) + "\n")
    return path


def test_single_row_report(tmp_path):
    path = write_report(tmp_path / "r.csv", [("stadab", 0.5, 0, 0.75)])
    assert run("report", path, "--out", tmp_path / "a.json") == 0
    cell = json.loads((tmp_path / "a.json").read_text())["per_ratio"]["stadab"]["0.5000"]
    assert cell == {"mean": 0.75, "std": 0.0, "n": 1}


def test_report_delta(tmp_path):
    path = write_report(tmp_path / "r.csv", [("stadab", 0.5, 0, 0.9), ("plain", 0.5, 0, 0.6)])
    assert run("report", path, "--out", tmp_path / "a.json") == 0
    deltas = json.loads((tmp_path / "a.json").read_text())["delta_percent"]
    assert deltas["stadab_vs_plain"] == pytest.approx(50.0)
    assert deltas["plain_vs_stadab"] == pytest.approx(-100 / 3)


def test_report_schema_mismatch(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("algo,accuracy\nstadab,0.5\n")
    assert run("report", path) == 2
