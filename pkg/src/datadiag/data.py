"""Dataset container, CSV ingestion and the basic dataset description."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

POSITIVE = 1
NEGATIVE = 0


class DataError(ValueError):
    """Raised when input data cannot be turned into a valid binary dataset."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Binary classification training set.

    ``labels`` holds 1 for Positive and 0 for Negative instances. The
    original label strings are kept in ``class_values`` as
    ``(negative_value, positive_value)`` so treated data can be written back
    in the input's own vocabulary.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = ()
    id: str = "dataset"
    class_values: tuple[str, str] = ("N", "P")
    label_column: str = "class"
    dropped_rows: int = 0

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.labels).astype(np.int8)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError("features must be a non-empty N x D matrix")
        if y.shape != (X.shape[0],):
            raise DataError("labels must have one entry per row")
        if not np.isin(y, (NEGATIVE, POSITIVE)).all():
            raise DataError("labels must be 0 (Negative) or 1 (Positive)")
        if not np.isfinite(X).all():
            raise DataError("features contain missing or non-finite values")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError("feature_names length does not match feature count")
        object.__setattr__(self, "features", _readonly(X))
        object.__setattr__(self, "labels", _readonly(y))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def n_negative(self) -> int:
        return self.n - self.n_positive

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return self.replace(features=self.features[index], labels=self.labels[index])

    def replace(self, **changes) -> "Dataset":
        fields = dict(
            features=self.features,
            labels=self.labels,
            feature_names=self.feature_names,
            id=self.id,
            class_values=self.class_values,
            label_column=self.label_column,
            dropped_rows=self.dropped_rows,
        )
        fields.update(changes)
        return Dataset(**fields)

    def label_strings(self) -> list[str]:
        neg, pos = self.class_values
        return [pos if v == POSITIVE else neg for v in self.labels]


@dataclass(frozen=True)
class DatasetSummary:
    dimensions: int
    duplicate_instances: int
    total_instances: int
    positive_count: int
    negative_count: int
    imbalance_ratio: float
    majority: str = "Negative"
    missing_rows: int = 0

    @property
    def positive_pct(self) -> float:
        return 100.0 * self.positive_count / self.total_instances

    @property
    def negative_pct(self) -> float:
        return 100.0 * self.negative_count / self.total_instances

    def to_dict(self) -> dict:
        return {
            "dimensions": self.dimensions,
            "duplicate_instances": self.duplicate_instances,
            "total_instances": self.total_instances,
            "positive_count": self.positive_count,
            "negative_count": self.negative_count,
            "imbalance_ratio": self.imbalance_ratio,
            "majority": self.majority,
            "missing_rows": self.missing_rows,
        }

    def to_text(self) -> str:
        rows = [
            ("Dimensions", str(self.dimensions)),
            ("Missing-value rows dropped", str(self.missing_rows)),
            ("Duplicate instances", str(self.duplicate_instances)),
            ("Total instances", str(self.total_instances)),
            ("Positive instances", f"{self.positive_count} ({self.positive_pct:.1f}%)"),
            ("Negative instances", f"{self.negative_count} ({self.negative_pct:.1f}%)"),
            ("Imbalance ratio", f"{self.imbalance_ratio:.1f}:1 ({self.majority} majority)"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


@dataclass
class SubclassAssignment:
    """Subclass label (``N-01``, ``P-02``, ...) for every instance."""

    subclass_ids: np.ndarray
    order: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.subclass_ids = np.asarray(self.subclass_ids, dtype=object)
        if not self.order:
            self.order = sorted(set(self.subclass_ids), key=_subclass_sort_key)

    @property
    def per_subclass_counts(self) -> dict[str, int]:
        return {s: int(np.sum(self.subclass_ids == s)) for s in self.order}

    def index(self) -> np.ndarray:
        """Integer code of each instance's subclass in ``order``."""
        lookup = {s: i for i, s in enumerate(self.order)}
        return np.array([lookup[s] for s in self.subclass_ids], dtype=int)

    @staticmethod
    def is_positive(subclass: str) -> bool:
        return subclass.startswith("P-")

    def check(self, labels: np.ndarray) -> None:
        for s, y in zip(self.subclass_ids, labels):
            if self.is_positive(s) != (y == POSITIVE):
                raise DataError(f"subclass {s} does not match class label")

    def to_csv_rows(self) -> list[tuple[int, str]]:
        return [(i, s) for i, s in enumerate(self.subclass_ids)]


def _subclass_sort_key(s: str):
    # Negative subclasses first, then Positive, each in numeric order.
    return (0 if s.startswith("N-") else 1, s)


def _parse_float(cell: str) -> float | None:
    cell = cell.strip()
    if not cell or cell.upper() in {"NA", "NAN", "?", "NULL", "NONE"}:
        return None
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, label_column: str, positive_value: str, dataset_id: str | None = None) -> Dataset:
    """Read a comma-separated file with a header row into a :class:`Dataset`.

    Every column other than ``label_column`` is a feature. Rows with a
    missing or unparseable cell are dropped and counted in
    ``Dataset.dropped_rows``. A column whose non-empty cells are mostly
    non-numeric is treated as categorical and rejected.
    """
    return read_csv_table(path, label_column, positive_value, dataset_id)[0]


def read_csv_table(path, label_column: str, positive_value: str, dataset_id: str | None = None) -> tuple[Dataset, list[str], list[list[str]]]:
    """Like :func:`load_csv`, also returning the header and the raw cells of every kept row."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = [r for r in reader if any(c.strip() for c in r)]

    matches = [i for i, h in enumerate(header) if h == label_column]
    if not matches:
        raise DataError(f"label column {label_column!r} not found in {header}")
    if len(matches) > 1:
        raise DataError(f"label column {label_column!r} appears more than once")
    li = matches[0]
    feat_idx = [i for i in range(len(header)) if i != li]
    if not feat_idx:
        raise DataError("no feature columns")

    for j in feat_idx:
        cells = [r[j].strip() for r in rows if j < len(r) and r[j].strip()]
        bad = sum(_parse_float(c) is None for c in cells)
        if cells and bad * 2 > len(cells):
            raise DataError(f"column {header[j]!r} is not numeric (categorical features are not supported)")

    values: list[list[float]] = []
    labels: list[str] = []
    kept: list[list[str]] = []
    dropped = 0
    for r in rows:
        if len(r) != len(header):
            dropped += 1
            continue
        lab = r[li].strip()
        feats = [_parse_float(r[j]) for j in feat_idx]
        if not lab or any(v is None for v in feats):
            dropped += 1
            continue
        values.append(feats)
        labels.append(lab)
        kept.append(r)

    if not values:
        raise DataError("no usable rows")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise DataError(f"label column has fewer than 2 classes: {classes}")
    if len(classes) > 2:
        raise DataError(f"label column has {len(classes)} classes; only binary problems are supported")
    if positive_value not in classes:
        raise DataError(f"positive value {positive_value!r} not among labels {classes}")
    negative_value = classes[0] if classes[1] == positive_value else classes[1]

    ds = Dataset(
        features=np.array(values, dtype=float),
        labels=np.array([lab == positive_value for lab in labels], dtype=np.int8),
        feature_names=tuple(header[j] for j in feat_idx),
        id=dataset_id or os.path.splitext(os.path.basename(path))[0],
        class_values=(negative_value, positive_value),
        label_column=label_column,
        dropped_rows=dropped,
    )
    return ds, header, kept


def write_csv(d: Dataset, path, extra_columns: dict[str, list] | None = None) -> None:
    """Write features and labels back out; floats use shortest round-trip repr."""
    extra_columns = extra_columns or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*d.feature_names, d.label_column, *extra_columns])
        labs = d.label_strings()
        for i in range(d.n):
            w.writerow([*(repr(float(v)) for v in d.features[i]), labs[i], *(col[i] for col in extra_columns.values())])


def imbalance_ratio(labels: np.ndarray) -> float:
    labels = np.asarray(labels)
    p = int(np.sum(labels == POSITIVE))
    n = labels.size - p
    if p == 0 or n == 0:
        raise DataError("imbalance ratio needs both classes")
    return max(p, n) / min(p, n)


def summarize(d: Dataset) -> DatasetSummary:
    p, n = d.n_positive, d.n_negative
    if p == 0 or n == 0:
        raise DataError("summary needs both classes")
    rows = np.column_stack([d.features, d.labels])
    n_unique = np.unique(rows, axis=0).shape[0]
    return DatasetSummary(
        dimensions=d.d,
        duplicate_instances=d.n - n_unique,
        total_instances=d.n,
        positive_count=p,
        negative_count=n,
        imbalance_ratio=max(p, n) / min(p, n),
        majority="Negative" if n >= p else "Positive",
        missing_rows=d.dropped_rows,
    )


def standardize_matrix(X: np.ndarray) -> np.ndarray:
    """Column-wise z-scores with the sample (n-1) standard deviation.

    Constant columns (and any column of a single row) map to zeros.
    """
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    if X.shape[0] > 1:
        sd = X.std(axis=0, ddof=1)
    else:
        sd = np.zeros(X.shape[1])
    Z = np.zeros_like(X)
    ok = sd > 0
    Z[:, ok] = (X[:, ok] - mu[ok]) / sd[ok]
    return Z


def standardize(d: Dataset) -> Dataset:
    return d.replace(features=standardize_matrix(d.features))


def stratified_split(d: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split into (train, test) keeping each class's proportion."""
    if not 0 < test_fraction < 1:
        raise DataError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in (NEGATIVE, POSITIVE):
        idx = np.flatnonzero(d.labels == cls)
        if idx.size < 2:
            raise DataError("each class needs at least 2 instances to stratify")
        idx = rng.permutation(idx)
        n_test = int(round(test_fraction * idx.size))
        n_test = min(max(n_test, 1), idx.size - 1)
        test_idx.append(idx[:n_test])
        train_idx.append(idx[n_test:])
    tr = np.sort(np.concatenate(train_idx))
    te = np.sort(np.concatenate(test_idx))
    return d.subset(tr), d.subset(te)
