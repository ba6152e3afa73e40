"""Command line: ``datadiag {diagnose,treat,evaluate,stats}``.

Settings come from built-in defaults, then an optional ``--config`` JSON
file, then explicit flags (flags win). The effective settings are written
to ``config.json`` next to every command's outputs.

Exit codes: 0 success, 1 error, 2 diagnosis stopped early because a
subclass is smaller than ``c_min`` (only subclass membership is written).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from collections import defaultdict

import numpy as np

from . import gmm, serialize
from .classifiers import CLASSIFIERS, ClassifierSpec, read_results_csv, run_grid
from .data import DataError, load_csv, read_csv_table
from .diagnosis import DISTANCES, DiagnosticReport, EarlyExit, diagnose
from .stats import StatsError, compare_levels, friedman, posthoc_lsd, rank_scores
from .treatments import TREATMENTS, TreatmentSpec, apply_treatment

log = logging.getLogger("datadiag")

EXIT_OK, EXIT_ERROR, EXIT_EARLY = 0, 1, 2

DEFAULTS = {
    "common": {"label_col": "class", "positive": None, "seed": 0, "threads": 1, "out_dir": "."},
    "diagnose": {
        "input": None,
        "k": 3,
        "c_min": "auto",
        "g_max": 9,
        "sp_th": 0.2,
        "alpha": 0.05,
        "dist": "euclidean",
        "standardize": True,
        "n_perm": 999,
        "extended_models": False,
    },
    "treat": {"input": None, "treatment": "Raw", "params": {}, "output": None, "standardize": True},
    "evaluate": {
        "input": None,
        "classifiers": list(CLASSIFIERS),
        "knn_k": 3,
        "treatments": list(TREATMENTS),
        "treatment_params": {},
        "folds": 10,
        "threshold": 0.5,
        "output": None,
    },
    "stats": {"results": None, "metrics": ["auc", "g_mean", "f1"], "alpha": 0.05, "ddp_labels": None, "force_posthoc": False},
}


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument handling


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not valid JSON: {exc}") from None


def _c_min_arg(text: str):
    if text == "auto":
        return text
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file with settings (flags override it)")
    common.add_argument("--label-col", dest="label_col", help="name of the class column (default: class)")
    common.add_argument("--positive", help="value of the Positive (minority) class")
    common.add_argument("--seed", type=int, help="random seed (default: 0)")
    common.add_argument("--threads", type=int, help="upper bound on worker threads (default: 1)")
    common.add_argument("--out-dir", dest="out_dir", help="directory for outputs (default: .)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = argparse.ArgumentParser(prog="datadiag", description="Diagnose, treat and evaluate imbalanced binary datasets.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("diagnose", parents=[common], argument_default=S, help="write the diagnostic report")
    d.add_argument("--input", help="CSV file with a header row")
    d.add_argument("--k", type=int, help="neighbours for the noise vote (default: 3)")
    d.add_argument("--c-min", dest="c_min", type=_c_min_arg, help="minimum subclass size, or 'auto' = D+2 (default)")
    d.add_argument("--g-max", dest="g_max", type=int, help="largest number of subclasses tried per class (default: 9)")
    d.add_argument("--sp-th", dest="sp_th", type=float, help="separation threshold for label noise (default: 0.2)")
    d.add_argument("--alpha", type=float, help="tail fraction for the separation index (default: 0.05)")
    d.add_argument("--dist", choices=DISTANCES, help="distance for the dispersion test (default: euclidean)")
    d.add_argument("--no-standardize", dest="standardize", action="store_false", help="use raw features")
    d.add_argument("--n-perm", dest="n_perm", type=int, help="permutations for the dispersion test (default: 999)")
    d.add_argument("--extended-models", dest="extended_models", action="store_true", help="also fit EVE, VEE, VVE, EEV, VEV, EVV")

    t = sub.add_parser("treat", parents=[common], argument_default=S, help="apply one treatment")
    t.add_argument("--input", help="CSV file with a header row")
    t.add_argument("--treatment", choices=TREATMENTS, help="treatment name (default: Raw)")
    t.add_argument("--params", type=_json_arg, help='treatment parameters as JSON, e.g. \'{"perc_over": 200}\'')
    t.add_argument("--output", help="treated CSV path (default: OUT_DIR/treated.csv)")
    t.add_argument("--no-standardize", dest="standardize", action="store_false", help="neighbour search on raw features")

    e = sub.add_parser("evaluate", parents=[common], argument_default=S, help="cross-validate classifiers x treatments")
    e.add_argument("--input", nargs="+", help="one or more CSV files (same label column and Positive value)")
    e.add_argument("--classifiers", nargs="+", choices=CLASSIFIERS, help="default: all")
    e.add_argument("--knn-k", dest="knn_k", type=int, help="neighbours for KNN (default: 3)")
    e.add_argument("--treatments", nargs="+", choices=TREATMENTS, help="default: all nine")
    e.add_argument("--treatment-params", dest="treatment_params", type=_json_arg, help="JSON map treatment -> params")
    e.add_argument("--folds", type=int, help="cross-validation folds (default: 10)")
    e.add_argument("--threshold", type=float, help="score threshold for a Positive prediction (default: 0.5)")
    e.add_argument("--output", help="results CSV (default: OUT_DIR/results.csv); existing rows are kept")

    s = sub.add_parser("stats", parents=[common], argument_default=S, help="Friedman, LSD letters and Wilcoxon tests")
    s.add_argument("--results", help="results CSV written by 'evaluate'")
    s.add_argument("--metrics", nargs="+", help="metrics to analyse (default: auc g_mean f1)")
    s.add_argument("--alpha", type=float, help="significance level (default: 0.05)")
    s.add_argument("--ddp-labels", dest="ddp_labels", help="CSV dataset,ir_level,disjunct_level,overlap_level or a directory of report.json files")
    s.add_argument("--force-posthoc", dest="force_posthoc", action="store_true", help="letters even when Friedman does not reject")
    return p


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[command])
    given = vars(args).copy()
    given.pop("command", None)
    given.pop("verbose", None)
    path = given.pop("config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(doc) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config key(s): {sorted(unknown)}")
        cfg.update(doc)
    cfg.update(given)
    return cfg


def _require(cfg: dict, *keys):
    for k in keys:
        if cfg.get(k) in (None, ""):
            raise UsageError(f"--{k.replace('_', '-')} is required")


def _limit_threads(n: int):
    if n < 1:
        raise UsageError("--threads must be >= 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _write_rows(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


# --------------------------------------------------------------------------
# commands


def cmd_diagnose(cfg: dict) -> int:
    _require(cfg, "input", "positive")
    d = load_csv(cfg["input"], cfg["label_col"], str(cfg["positive"]))
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    c_min = None if cfg["c_min"] == "auto" else int(cfg["c_min"])
    models = gmm.ALL_MODELS if cfg["extended_models"] else gmm.REQUIRED_MODELS
    result = diagnose(
        d,
        k=int(cfg["k"]),
        c_min=c_min,
        g_max=int(cfg["g_max"]),
        sp_th=float(cfg["sp_th"]),
        dist=cfg["dist"],
        alpha=float(cfg["alpha"]),
        models=models,
        seed=int(cfg["seed"]),
        standardize=bool(cfg["standardize"]),
        n_perm=int(cfg["n_perm"]),
    )
    serialize.dump(cfg, os.path.join(out, "config.json"))
    rows = [["row", "subclass"]] + [[i, s] for i, s in result.assignment.to_csv_rows()]
    _write_rows(os.path.join(out, "subclasses.csv"), rows)
    if isinstance(result, EarlyExit):
        small = ", ".join(f"{s} ({n})" for s, n in result.small_subclasses.items())
        print(f"subclass(es) smaller than c_min={result.c_min}: {small}; wrote subclass membership only", file=sys.stderr)
        return EXIT_EARLY
    assert isinstance(result, DiagnosticReport)
    serialize.dump(result.to_dict(), os.path.join(out, "report.json"))
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.to_text())
    _write_rows(os.path.join(out, "iro.csv"), [[_cell(v) for v in r] for r in result.iro_csv_rows()])
    _write_rows(os.path.join(out, "noise.csv"), result.noise_csv_rows())
    return EXIT_OK


def _cell(v):
    if isinstance(v, float):
        return format(v, ".12g")
    return v


def cmd_treat(cfg: dict) -> int:
    _require(cfg, "input", "positive")
    d, header, raw = read_csv_table(cfg["input"], cfg["label_col"], str(cfg["positive"]))
    spec = TreatmentSpec(cfg["treatment"], dict(cfg["params"] or {}), int(cfg["seed"]))
    res = apply_treatment(d, spec, standardize=bool(cfg["standardize"]))
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    path = cfg["output"] or os.path.join(out, "treated.csv")
    _write_treated(path, header, raw, d, res)
    rows = [["output_row", "provenance", "source_row", "parent_a", "parent_b", "u"]]
    for i, tag in enumerate(res.provenance):
        a, b, u = res.parents[i]
        if tag == "synthetic":
            rows.append([i, tag, int(res.source_index[i]), int(a), int(b), format(u, ".12g")])
        else:
            rows.append([i, tag, int(res.source_index[i]), "", "", ""])
    for j in sorted(res.removed):
        rows.append(["", f"removed-{res.removed[j]}", j, "", "", ""])
    _write_rows(os.path.join(out, "provenance.csv"), rows)
    serialize.dump(cfg, os.path.join(out, "config.json"))
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _write_treated(path, header, raw, d, res):
    """Input columns in input order plus ``provenance``.

    Original rows are copied cell for cell from the input file; synthetic
    rows use the shortest round-trip float text.
    """
    li = header.index(d.label_column)
    feat_pos = [i for i in range(len(header)) if i != li]
    neg, pos = d.class_values
    rows = [header + ["provenance"]]
    X = res.dataset.features
    for i, tag in enumerate(res.provenance):
        if tag == "synthetic":
            cells = [""] * len(header)
            for j, c in enumerate(feat_pos):
                cells[c] = repr(float(X[i, j]))
            cells[li] = pos if res.dataset.labels[i] == 1 else neg
        else:
            cells = list(raw[int(res.source_index[i])])
        rows.append(cells + [tag])
    _write_rows(path, rows)


def cmd_evaluate(cfg: dict) -> int:
    _require(cfg, "input", "positive")
    inputs = cfg["input"] if isinstance(cfg["input"], list) else [cfg["input"]]
    datasets = [load_csv(p, cfg["label_col"], str(cfg["positive"])) for p in inputs]
    ids = [d.id for d in datasets]
    if len(set(ids)) != len(ids):
        raise UsageError(f"dataset ids (file names) must be unique: {ids}")
    classifiers = []
    for c in cfg["classifiers"]:
        if isinstance(c, dict):
            classifiers.append(ClassifierSpec.from_dict(c))
        else:
            classifiers.append(ClassifierSpec(c, {"k": int(cfg["knn_k"])} if c == "KNN" else {}))
    tparams = cfg["treatment_params"] or {}
    treatments = []
    for t in cfg["treatments"]:
        if isinstance(t, dict):
            treatments.append(TreatmentSpec.from_dict(t))
        else:
            treatments.append(TreatmentSpec(t, dict(tparams.get(t, {}))))
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    path = cfg["output"] or os.path.join(out, "results.csv")
    res = run_grid(datasets, classifiers, treatments, int(cfg["folds"]), int(cfg["seed"]), path, float(cfg["threshold"]))
    serialize.dump(cfg, os.path.join(out, "config.json"))
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    n_fail = len(res.failures())
    if n_fail:
        print(f"{n_fail} fold(s) failed; see rows with metric 'error' in {path}", file=sys.stderr)
    return EXIT_OK


def _load_ddp_labels(path) -> dict[str, dict[str, str]]:
    """dataset -> {problem: level} from a CSV or a directory tree of report.json files."""
    out: dict[str, dict[str, str]] = {}
    if os.path.isdir(path):
        for root, _, files in sorted(os.walk(path)):
            if "report.json" in files:
                with open(os.path.join(root, "report.json"), encoding="utf-8") as fh:
                    rep = json.load(fh)
                out[os.path.basename(root)] = rep["ddp"]
        return out
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ds = row.pop("dataset")
            out[ds] = {k: v for k, v in row.items()}
    return out


def cmd_stats(cfg: dict) -> int:
    _require(cfg, "results")
    rows = read_results_csv(cfg["results"])
    alpha = float(cfg["alpha"])
    # mean over folds per (metric, classifier, dataset, treatment)
    acc: dict = defaultdict(list)
    for r in rows:
        if r.metric != "error" and r.value is not None:
            acc[(r.metric, r.classifier, r.dataset, r.treatment)].append(float(r.value))
    means = {k: float(np.mean(v)) for k, v in acc.items()}
    datasets = sorted({r.dataset for r in rows})
    classifiers = sorted({r.classifier for r in rows})
    treatments = [t for t in TREATMENTS if any(r.treatment == t for r in rows)]
    treatments += sorted({r.treatment for r in rows} - set(treatments))
    if len(datasets) < 2 or len(treatments) < 2:
        raise StatsError("need at least 2 datasets and 2 treatments in the results")

    doc: dict = {"friedman": {}, "pairwise": [], "cld": {}, "rank_table": {}, "wilcoxon": {}}
    text = []
    for metric in cfg["metrics"]:
        doc["friedman"][metric] = {}
        doc["cld"][metric] = {}
        doc["rank_table"][metric] = {}
        letters_by_clf = {}
        for clf in classifiers:
            S = np.array([[means.get((metric, clf, ds, t), np.nan) for t in treatments] for ds in datasets])
            rt = rank_scores(S, datasets, treatments)
            entry = {"rows_used": rt.n, "rows_dropped": rt.dropped_rows}
            if rt.n < 2:
                entry["error"] = "fewer than 2 complete datasets"
                doc["friedman"][metric][clf] = entry
                continue
            fr = friedman(rt)
            entry.update(fr.to_dict())
            doc["friedman"][metric][clf] = entry
            g = posthoc_lsd(rt, alpha)
            rejected = fr.p_value < alpha
            letters = g.letters if (rejected or cfg["force_posthoc"]) else {t: "a" for t in treatments}
            letters_by_clf[clf] = (g, letters)
            doc["cld"][metric][clf] = {"letters": letters, "mean_ranks": g.mean_ranks, "lsd": g.lsd, "friedman_rejected": rejected}
            doc["rank_table"][metric][clf] = {ds: dict(zip(treatments, row)) for ds, row in zip(rt.row_ids, rt.ranks)}
            for p in g.to_dict()["pairwise"]:
                doc["pairwise"].append({"metric": metric, "classifier": clf, **p})
        text.append(_letter_table(metric, treatments, letters_by_clf, doc["friedman"][metric]))

    if cfg["ddp_labels"]:
        doc["wilcoxon"] = _ddp_tests(means, _load_ddp_labels(cfg["ddp_labels"]), classifiers, cfg["metrics"], alpha)
        text.append(_wilcoxon_text(doc["wilcoxon"]))

    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    serialize.dump(doc, os.path.join(out, "stats.json"))
    with open(os.path.join(out, "stats.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n\n".join(text) + "\n")
    serialize.dump(cfg, os.path.join(out, "config.json"))
    return EXIT_OK


def _letter_table(metric, treatments, letters_by_clf, fried) -> str:
    clfs = list(letters_by_clf)
    lines = [f"== {metric}: mean rank (group) per classifier; best rank = {len(treatments)} =="]
    head = ["Treatment"] + clfs
    body = []
    for t in treatments:
        body.append([t] + [f"{letters_by_clf[c][0].mean_ranks[t]:.2f} ({letters_by_clf[c][1][t]})" for c in clfs])
    body.append(["p-value"] + [f"{fried[c]['p_value']:.4g}" for c in clfs])
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    for r in [head] + body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def _ddp_tests(means, labels, classifiers, metrics, alpha) -> dict:
    """Low vs High level of each problem, paired over classifiers.

    For every classifier the metric is averaged over the Raw-treatment
    results of the datasets in each level; Test A (two-sided) and Test B
    (Low > High) run on those paired means. AUC is also compared with G-mean
    within each level, paired over (dataset, classifier).
    """
    out: dict = {}
    problems = ("ir_level", "disjunct_level", "overlap_level")
    for metric in metrics:
        for prob in problems:
            lows, highs = [], []
            for clf in classifiers:
                lo = [means[(metric, clf, ds, "Raw")] for ds, lv in labels.items() if lv.get(prob) == "Low" and (metric, clf, ds, "Raw") in means]
                hi = [means[(metric, clf, ds, "Raw")] for ds, lv in labels.items() if lv.get(prob) == "High" and (metric, clf, ds, "Raw") in means]
                if lo and hi:
                    lows.append(float(np.mean(lo)))
                    highs.append(float(np.mean(hi)))
            key = f"{metric}/{prob}"
            if len(lows) < 1:
                out[key] = {"error": "no classifier has results at both levels"}
                continue
            cmp = compare_levels(lows, highs, alpha)
            out[key] = {**cmp.to_dict(), "n_pairs": len(lows), "mean_low": float(np.mean(lows)), "mean_high": float(np.mean(highs))}
    for prob in problems:
        for level in ("Low", "High"):
            a, g = [], []
            for ds, lv in sorted(labels.items()):
                if lv.get(prob) != level:
                    continue
                for clf in classifiers:
                    ka, kg = ("auc", clf, ds, "Raw"), ("g_mean", clf, ds, "Raw")
                    if ka in means and kg in means:
                        a.append(means[ka])
                        g.append(means[kg])
            if a:
                out[f"auc_vs_g_mean/{prob}/{level}"] = {**compare_levels(a, g, alpha).to_dict(), "n_pairs": len(a)}
    return out


def _wilcoxon_text(w: dict) -> str:
    lines = ["== Wilcoxon tests (A: two-sided, B: one-sided greater) =="]
    for key in sorted(w):
        v = w[key]
        if "error" in v:
            lines.append(f"{key}: {v['error']}")
            continue
        mark = "yes" if v["verdict"] else "no"
        lines.append(f"{key}: A p={v['test_a']['p_value']:.4g}  B p={v['test_b']['p_value']:.4g}  both reject: {mark}  (n={v['n_pairs']})")
    return "\n".join(lines)


COMMANDS = {"diagnose": cmd_diagnose, "treat": cmd_treat, "evaluate": cmd_evaluate, "stats": cmd_stats}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args.command, args)
        with _limit_threads(int(cfg["threads"])):
            return COMMANDS[args.command](cfg)
    except (UsageError, DataError, StatsError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
