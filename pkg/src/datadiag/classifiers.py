"""Small classifier suite and the cross-validated treat/train/evaluate loop.

Treatments are applied to the training part of each fold only; the test
fold is never resampled.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .data import NEGATIVE, POSITIVE, Dataset, standardize_matrix
from .gmm import RIDGE_FACTOR, component_logpdf
from .metrics import METRIC_NAMES, metric_set
from .treatments import TreatmentSpec, apply_treatment

log = logging.getLogger(__name__)

CLASSIFIERS = ("GNB", "LDA", "QDA", "KNN")
CSV_HEADER = ("dataset", "classifier", "treatment", "fold", "metric", "value")


class ClassifierError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.name not in CLASSIFIERS:
            raise ClassifierError(f"unknown classifier {self.name!r}; choose from {CLASSIFIERS}")
        allowed = {"k"} if self.name == "KNN" else set()
        bad = set(self.params) - allowed
        if bad:
            raise ClassifierError(f"{self.name} does not take parameter(s) {sorted(bad)}")
        if self.name == "KNN" and int(self.params.get("k", 3)) < 1:
            raise ClassifierError("KNN needs k >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassifierSpec":
        return cls(doc["name"], dict(doc.get("params", {})), int(doc.get("seed", 0)))

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "seed": self.seed}


class TrainedModel:
    """Fitted classifier; ``predict_score`` returns P(Positive | x)."""

    def __init__(self, name: str, score_fn):
        self.name = name
        self._score = score_fn

    def predict_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        return np.clip(self._score(X), 0.0, 1.0)

    def predict_proba(self, X) -> np.ndarray:
        """Columns (Negative, Positive)."""
        s = self.predict_score(X)
        return np.column_stack([1.0 - s, s])


def _split(train: Dataset):
    X = np.asarray(train.features, dtype=float)
    y = np.asarray(train.labels)
    if not (np.any(y == POSITIVE) and np.any(y == NEGATIVE)):
        raise ClassifierError("training data must contain both classes")
    return X, y


def _ridge(X: np.ndarray) -> float:
    v = X.var(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    r = RIDGE_FACTOR * float(np.mean(v))
    return r if r > 0 else RIDGE_FACTOR


def _gaussian_scorer(priors, means, covs):
    log_prior = np.log(priors)

    def score(X):
        try:
            lp = component_logpdf(X, means, covs) + log_prior
        except np.linalg.LinAlgError:
            raise ClassifierError("covariance not positive definite") from None
        lp -= lp.max(axis=1, keepdims=True)
        p = np.exp(lp)
        return p[:, 1] / p.sum(axis=1)

    return score


def _fit_gaussian(kind: str, X, y):
    d = X.shape[1]
    ridge = _ridge(X)
    classes = (NEGATIVE, POSITIVE)
    priors = np.array([np.mean(y == c) for c in classes])
    means = np.array([X[y == c].mean(axis=0) for c in classes])
    if kind == "GNB":
        var = np.array([X[y == c].var(axis=0) for c in classes]) + ridge
        covs = np.array([np.diag(v) for v in var])
    elif kind == "LDA":
        if X.shape[0] <= 2:
            raise ClassifierError("LDA needs more than 2 training instances")
        resid = np.vstack([X[y == c] - means[i] for i, c in enumerate(classes)])
        pooled = resid.T @ resid / (X.shape[0] - 2) + ridge * np.eye(d)
        covs = np.array([pooled, pooled])
    else:
        covs = []
        for c in classes:
            Xc = X[y == c]
            if Xc.shape[0] < 2:
                raise ClassifierError("QDA needs at least 2 instances per class")
            covs.append(np.atleast_2d(np.cov(Xc, rowvar=False, ddof=1)) + ridge * np.eye(d))
        covs = np.array(covs)
    for C in covs:
        try:
            np.linalg.cholesky(C)
        except np.linalg.LinAlgError:
            raise ClassifierError(f"{kind}: covariance singular after regularization") from None
    return _gaussian_scorer(priors, means, covs)


def _fit_knn(k: int, X, y):
    if k > X.shape[0]:
        raise ClassifierError(f"KNN k={k} exceeds training size {X.shape[0]}")
    mu = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(X.shape[1])
    sd = np.where(sd > 0, sd, 1.0)
    Z = (X - mu) / sd
    pos = (y == POSITIVE).astype(float)

    def score(Xq):
        D = cdist((Xq - mu) / sd, Z)
        nn = np.argsort(D, axis=1, kind="stable")[:, :k]
        return pos[nn].mean(axis=1)

    return score


def fit(spec: ClassifierSpec, train: Dataset) -> TrainedModel:
    X, y = _split(train)
    if spec.name == "KNN":
        return TrainedModel(spec.name, _fit_knn(int(spec.params.get("k", 3)), X, y))
    return TrainedModel(spec.name, _fit_gaussian(spec.name, X, y))


# --------------------------------------------------------------------------
# Cross-validation


def stratified_kfold(labels, folds: int = 10, seed: int = 0) -> tuple[list[tuple[np.ndarray, np.ndarray]], list[str]]:
    """Stratified (train, test) index pairs; folds shrink to the smallest class size."""
    y = np.asarray(labels)
    warnings = []
    smallest = min(int(np.sum(y == POSITIVE)), int(np.sum(y == NEGATIVE)))
    if smallest < 2:
        raise ClassifierError("each class needs at least 2 instances for cross-validation")
    if folds < 2:
        raise ClassifierError("need at least 2 folds")
    if smallest < folds:
        warnings.append(f"smallest class has {smallest} instances; using {smallest} folds instead of {folds}")
        folds = smallest
    rng = np.random.default_rng(seed)
    test_sets = [[] for _ in range(folds)]
    for c in (NEGATIVE, POSITIVE):
        idx = rng.permutation(np.flatnonzero(y == c))
        for f, part in enumerate(np.array_split(idx, folds)):
            test_sets[f].append(part)
    out = []
    everything = np.arange(y.size)
    for parts in test_sets:
        test = np.sort(np.concatenate(parts))
        out.append((np.setdiff1d(everything, test), test))
    return out, warnings


def cell_seed(global_seed: int, *parts) -> int:
    """Stable 32-bit seed for one grid cell."""
    key = "\x1f".join([str(global_seed), *map(str, parts)])
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:4], "little")


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    classifier: str
    treatment: str
    fold: int
    metric: str
    value: float | str | None

    def csv_cells(self) -> list[str]:
        v = self.value
        if v is None:
            cell = "NA"
        elif isinstance(v, str):
            cell = v
        else:
            cell = format(float(v), ".12g")
        return [self.dataset, self.classifier, self.treatment, str(self.fold), self.metric, cell]


@dataclass
class ExperimentResult:
    rows: list[ResultRow] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    audit: list[dict] = field(default_factory=list)

    def values(self, metric: str) -> dict[tuple[str, str, str], list[float | None]]:
        out: dict[tuple[str, str, str], list] = {}
        for r in self.rows:
            if r.metric == metric:
                out.setdefault((r.dataset, r.classifier, r.treatment), []).append(r.value)
        return out

    def mean(self, metric: str, dataset: str, classifier: str, treatment: str) -> float | None:
        vals = [v for v in self.values(metric).get((dataset, classifier, treatment), []) if v is not None]
        return float(np.mean(vals)) if vals else None

    def failures(self) -> list[ResultRow]:
        return [r for r in self.rows if r.metric == "error"]


def treatment_label(spec: TreatmentSpec) -> str:
    return spec.name


def evaluate(
    d: Dataset,
    cspec: ClassifierSpec,
    tspec: TreatmentSpec,
    folds: int = 10,
    seed: int = 0,
    threshold: float = 0.5,
    *,
    skip: set | None = None,
    keep_audit: bool = False,
) -> ExperimentResult:
    """k-fold CV of one (dataset, classifier, treatment) cell.

    Fold assignments depend only on (seed, dataset id) so every classifier
    and treatment sees the same folds. A failing fold yields a single row
    with metric ``error`` and the reason as value.
    """
    splits, warnings = stratified_kfold(d.labels, folds, cell_seed(seed, d.id, "folds"))
    res = ExperimentResult(warnings=[f"{d.id}: {w}" for w in warnings])
    tlabel = treatment_label(tspec)
    for f, (tr, te) in enumerate(splits, start=1):
        if skip and (d.id, cspec.name, tlabel, f) in skip:
            continue
        cseed = cell_seed(seed, d.id, cspec.name, tlabel, f, tspec.seed)
        try:
            train = d.subset(tr)
            treated = apply_treatment(train, TreatmentSpec(tspec.name, tspec.params, cseed))
            if keep_audit:
                res.audit.append({"fold": f, "test": te, "source": tr[treated.source_index]})
            model = fit(cspec, treated.dataset)
            scores = model.predict_score(d.features[te])
            ms = metric_set(scores, d.labels[te], threshold)
        except (ValueError, np.linalg.LinAlgError) as exc:
            log.info("%s/%s/%s fold %d failed: %s", d.id, cspec.name, tlabel, f, exc)
            res.rows.append(ResultRow(d.id, cspec.name, tlabel, f, "error", str(exc)))
            continue
        vals = ms.to_dict()
        for m in METRIC_NAMES:
            res.rows.append(ResultRow(d.id, cspec.name, tlabel, f, m, vals[m]))
    return res


def read_results_csv(path) -> list[ResultRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return rows
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for r in reader:
            if len(r) != len(CSV_HEADER):
                continue
            ds, cl, tr, fold, metric, value = r
            if metric == "error":
                v: float | str | None = value
            elif value == "NA":
                v = None
            else:
                v = float(value)
            rows.append(ResultRow(ds, cl, tr, int(fold), metric, v))
    return rows


def run_grid(
    datasets: list[Dataset],
    classifiers: list[ClassifierSpec],
    treatments: list[TreatmentSpec],
    folds: int = 10,
    seed: int = 0,
    out_path=None,
    threshold: float = 0.5,
) -> ExperimentResult:
    """Every (dataset, classifier, treatment) cell, streamed to ``out_path``.

    Folds already present in an existing file are skipped, so an
    interrupted run resumes and a finished one appends nothing.
    """
    done: set = set()
    result = ExperimentResult()
    fh = writer = None
    if out_path is not None:
        exists = os.path.isfile(out_path) and os.path.getsize(out_path) > 0
        if exists:
            prior = read_results_csv(out_path)
            done = {(r.dataset, r.classifier, r.treatment, r.fold) for r in prior}
            result.rows.extend(prior)
        fh = open(out_path, "a", newline="", encoding="utf-8")
        writer = csv.writer(fh, lineterminator="\n")
        if not exists:
            writer.writerow(CSV_HEADER)
    try:
        for d in datasets:
            for c in classifiers:
                for t in treatments:
                    cell = evaluate(d, c, t, folds, seed, threshold, skip=done)
                    result.warnings.extend(w for w in cell.warnings if w not in result.warnings)
                    result.rows.extend(cell.rows)
                    if writer is not None:
                        for r in cell.rows:
                            writer.writerow(r.csv_cells())
                        fh.flush()
    finally:
        if fh is not None:
            fh.close()
    return result
