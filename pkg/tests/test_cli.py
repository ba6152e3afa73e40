import csv
import json

import numpy as np
import pytest

from datadiag import cli


def write_csv(path, n_neg=150, n_pos=40, seed=0, shift=2.5):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_neg, 2)), rng.normal(shift, 1, (n_pos, 2))])
    lab = ["neg"] * n_neg + ["pos"] * n_pos
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "class", "x2"])
        for (a, b), c in zip(X, lab):
            w.writerow([f"{a:.5f}", c, f"{b:.5f}"])
    return path


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_unreadable_file_exit_1(tmp_path, capsys):
    code = cli.main(["diagnose", "--input", str(tmp_path / "missing.csv"), "--positive", "pos", "--out-dir", str(tmp_path)])
    assert code == 1
    assert capsys.readouterr().err


def test_missing_positive_value_exit_1(tmp_path):
    f = write_csv(tmp_path / "d.csv")
    assert cli.main(["diagnose", "--input", str(f), "--positive", "nope", "--out-dir", str(tmp_path)]) == 1


def test_cmin_violation_exit_2(tmp_path, capsys):
    f = write_csv(tmp_path / "d.csv")
    out = tmp_path / "o"
    code = cli.main(["diagnose", "--input", str(f), "--positive", "pos", "--c-min", "200", "--out-dir", str(out)])
    assert code == 2
    assert "c_min=200" in capsys.readouterr().err
    rows = read(out / "subclasses.csv")
    assert rows[0] == ["row", "subclass"] and len(rows) == 191
    assert not (out / "report.json").exists()


def test_diagnose_outputs(tmp_path):
    f = write_csv(tmp_path / "d.csv")
    out = tmp_path / "o"
    assert cli.main(["diagnose", "--input", str(f), "--positive", "pos", "--n-perm", "99", "--out-dir", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert set(rep["ddp"]) >= {"ir_level", "disjunct_level", "overlap_level"}
    for name in ("report.txt", "iro.csv", "noise.csv", "subclasses.csv", "config.json"):
        assert (out / name).exists()


def test_treat_raw_identity(tmp_path):
    f = write_csv(tmp_path / "d.csv")
    out = tmp_path / "o"
    assert cli.main(["treat", "--input", str(f), "--positive", "pos", "--treatment", "Raw", "--out-dir", str(out)]) == 0
    src, got = read(f), read(out / "treated.csv")
    assert got[0] == src[0] + ["provenance"]
    assert [r[:-1] for r in got[1:]] == src[1:]
    assert {r[-1] for r in got[1:]} == {"original"}


def test_treat_smote_counts(tmp_path):
    f = write_csv(tmp_path / "d.csv")
    out = tmp_path / "o"
    args = ["treat", "--input", str(f), "--positive", "pos", "--treatment", "SMOTE", "--params", '{"perc_over": 200}', "--out-dir", str(out)]
    assert cli.main(args) == 0
    rows = read(out / "treated.csv")[1:]
    syn = [r for r in rows if r[-1] == "synthetic"]
    assert len(syn) == 80 and all(r[1] == "pos" for r in syn)
    # 40 Positives kept, 80 synthetics, floor(1.5 * 80) = 120 Negatives kept
    assert len(rows) == 40 + 80 + 120
    assert sum(r[1] == "neg" for r in rows) == 120
    prov = read(out / "provenance.csv")
    assert prov[0] == ["output_row", "provenance", "source_row", "parent_a", "parent_b", "u"]
    assert all(0.0 <= float(r[5]) <= 1.0 for r in prov[1:] if r[1] == "synthetic")


def test_treat_enn_subset(tmp_path):
    f = write_csv(tmp_path / "d.csv", shift=1.0)
    out = tmp_path / "o"
    assert cli.main(["treat", "--input", str(f), "--positive", "pos", "--treatment", "ENN", "--out-dir", str(out)]) == 0
    src = {tuple(r) for r in read(f)[1:]}
    rows = read(out / "treated.csv")[1:]
    assert len(rows) < len(src)
    assert all(tuple(r[:-1]) in src for r in rows)
    removed = [r for r in read(out / "provenance.csv")[1:] if r[1].startswith("removed")]
    assert len(removed) == len(src) - len(rows)


def test_evaluate_resume(tmp_path):
    a, b = write_csv(tmp_path / "a.csv", seed=1), write_csv(tmp_path / "b.csv", seed=2)
    args = ["evaluate", "--input", str(a), str(b), "--positive", "pos", "--classifiers", "GNB", "LDA",
            "--treatments", "Raw", "SMOTE", "--folds", "3", "--out-dir", str(tmp_path)]
    assert cli.main(args) == 0
    first = (tmp_path / "results.csv").read_bytes()
    assert cli.main(args) == 0
    assert (tmp_path / "results.csv").read_bytes() == first


def write_results(path, table):
    """table: {(dataset, treatment): auc} for classifier GNB, one fold."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "classifier", "treatment", "fold", "metric", "value"])
        for (ds, t), v in table.items():
            w.writerow([ds, "GNB", t, 1, "auc", repr(v)])


def test_stats_identical_columns(tmp_path):
    res = tmp_path / "r.csv"
    write_results(res, {(f"d{i}", t): 0.5 + 0.01 * i for i in range(6) for t in ("Raw", "SMOTE", "ENN")})
    assert cli.main(["stats", "--results", str(res), "--metrics", "auc", "--out-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "stats.json").read_text())
    assert doc["friedman"]["auc"]["GNB"]["p_value"] == 1.0
    assert set(doc["cld"]["auc"]["GNB"]["letters"].values()) == {"a"}


def test_stats_best_gets_a(tmp_path):
    res = tmp_path / "r.csv"
    table = {}
    for i in range(12):
        table[(f"d{i}", "Raw")] = 0.60 + 0.001 * i
        table[(f"d{i}", "SMOTE")] = 0.80 + 0.001 * i
        table[(f"d{i}", "ENN")] = 0.70 + 0.001 * i
    write_results(res, table)
    assert cli.main(["stats", "--results", str(res), "--metrics", "auc", "--out-dir", str(tmp_path)]) == 0
    cld = json.loads((tmp_path / "stats.json").read_text())["cld"]["auc"]["GNB"]
    assert cld["friedman_rejected"]
    assert cld["letters"]["SMOTE"].startswith("a")
    assert "a" not in cld["letters"]["Raw"]


def test_config_merge_flags_win(tmp_path):
    f = write_csv(tmp_path / "d.csv")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"input": str(f), "positive": "pos", "treatment": "SMOTE", "seed": 5}))
    out = tmp_path / "o"
    assert cli.main(["treat", "--config", str(cfg), "--seed", "9", "--out-dir", str(out)]) == 0
    eff = json.loads((out / "config.json").read_text())
    assert eff["seed"] == 9 and eff["treatment"] == "SMOTE"


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["treat", "--config", str(cfg)]) == 1


def test_help_exits_cleanly():
    with pytest.raises(SystemExit) as e:
        cli.main(["--help"])
    assert e.value.code == 0
