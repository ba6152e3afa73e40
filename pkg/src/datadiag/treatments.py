"""Resampling and cleaning treatments for imbalanced binary datasets.

Every treatment maps a :class:`Dataset` to a :class:`ResampledDataset`
that records where each output row came from. Neighbour searches are
brute force on standardized features (z-scores of the input); synthetic
points are interpolated in the original feature space, which gives the
same points because interpolation commutes with affine rescaling.

Oversampling conventions follow the ``perc.over``/``perc.under`` style:
``perc_over`` is the number of new Positives as a percentage of P and
``perc_under`` is the number of Negatives kept as a percentage of the
new Positives.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .data import NEGATIVE, POSITIVE, Dataset, standardize_matrix

log = logging.getLogger(__name__)

ORIGINAL = "original"
SYNTHETIC = "synthetic"


class TreatmentError(ValueError):
    pass


@dataclass
class ResampledDataset:
    """Treated dataset plus per-row provenance.

    ``source_index[i]`` is the input row an original output row came from,
    or the seed row of a synthetic one. ``parents`` holds ``(a, b, u)`` for
    each synthetic row, meaning ``X[a] + u * (X[b] - X[a])`` in input
    coordinates, and -1/nan for originals. ``removed`` maps dropped input
    rows to the reason they were dropped.
    """

    dataset: Dataset
    provenance: list[str]
    source_index: np.ndarray
    parents: np.ndarray
    removed: dict[int, str] = field(default_factory=dict)
    counts_before: dict[str, int] = field(default_factory=dict)
    counts_after: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    treatment: str = "Raw"

    @property
    def n_synthetic(self) -> int:
        return sum(p == SYNTHETIC for p in self.provenance)

    def synthetic_mask(self) -> np.ndarray:
        return np.array([p == SYNTHETIC for p in self.provenance], dtype=bool)


def _counts(labels) -> dict[str, int]:
    labels = np.asarray(labels)
    return {"Positive": int(np.sum(labels == POSITIVE)), "Negative": int(np.sum(labels == NEGATIVE))}


def _assemble(d: Dataset, keep: np.ndarray, synth: list[tuple[int, int, float]] | None = None, removed=None, warnings=None, name="Raw") -> ResampledDataset:
    """Output = kept input rows (in input order) followed by synthetic Positives."""
    keep = np.asarray(keep, dtype=int)
    synth = synth or []
    X = d.features
    rows = [X[keep]]
    labels = [d.labels[keep]]
    if synth:
        a = np.array([s[0] for s in synth], dtype=int)
        b = np.array([s[1] for s in synth], dtype=int)
        u = np.array([s[2] for s in synth], dtype=float)
        rows.append(X[a] + u[:, None] * (X[b] - X[a]))
        labels.append(np.full(len(synth), POSITIVE, dtype=np.int8))
    out = d.replace(features=np.vstack(rows), labels=np.concatenate(labels), dropped_rows=d.dropped_rows)
    parents = np.full((keep.size + len(synth), 3), np.nan)
    parents[:keep.size, :2] = -1
    if synth:
        parents[keep.size:] = np.array(synth, dtype=float)
    source = np.concatenate([keep, np.array([s[0] for s in synth], dtype=int)])
    return ResampledDataset(
        dataset=out,
        provenance=[ORIGINAL] * keep.size + [SYNTHETIC] * len(synth),
        source_index=source,
        parents=parents,
        removed=dict(removed or {}),
        counts_before=_counts(d.labels),
        counts_after=_counts(out.labels),
        warnings=list(warnings or []),
        treatment=name,
    )


def _classes(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    pos = np.flatnonzero(d.labels == POSITIVE)
    neg = np.flatnonzero(d.labels == NEGATIVE)
    if pos.size == 0 or neg.size == 0:
        raise TreatmentError("both classes must be present")
    return pos, neg


def _distances(d: Dataset, standardize: bool = True) -> np.ndarray:
    Z = standardize_matrix(d.features) if standardize else d.features
    D = cdist(Z, Z)
    np.fill_diagonal(D, np.inf)
    return D


def _nearest(D: np.ndarray, rows: np.ndarray, cols: np.ndarray, k: int) -> np.ndarray:
    """k nearest ``cols`` for each of ``rows`` (self excluded, ties to lower index)."""
    sub = D[np.ix_(rows, cols)]
    order = np.argsort(sub, axis=1, kind="stable")[:, :k]
    return cols[order]


def _check_percent(perc_over, perc_under):
    if perc_over < 0:
        raise TreatmentError("perc_over must be >= 0")
    if perc_under <= 0:
        raise TreatmentError("perc_under must be > 0")


def _undersample_negatives(neg: np.ndarray, n_syn: int, perc_under: float, rng, warnings: list) -> np.ndarray:
    want = int(math.floor(perc_under * n_syn / 100.0))
    if want > neg.size:
        warnings.append(f"asked to keep {want} Negatives but only {neg.size} exist; keeping all")
        want = neg.size
    return np.sort(rng.choice(neg, size=want, replace=False))


# --------------------------------------------------------------------------
# Oversampling


def random_resample(d: Dataset, perc_over: float = 200, perc_under: float = 150, seed: int = 0) -> ResampledDataset:
    """Duplicate random Positives and keep a random subset of Negatives."""
    _check_percent(perc_over, perc_under)
    pos, neg = _classes(d)
    rng = np.random.default_rng(seed)
    n_syn = int(math.floor(perc_over * pos.size / 100.0))
    dup = rng.choice(pos, size=n_syn, replace=True)
    warnings: list[str] = []
    kept_neg = _undersample_negatives(neg, n_syn, perc_under, rng, warnings)
    keep = np.sort(np.concatenate([pos, kept_neg]))
    removed = {int(i): "undersampled" for i in np.setdiff1d(neg, kept_neg)}
    synth = [(int(i), int(i), 0.0) for i in dup]
    return _assemble(d, keep, synth, removed, warnings, "Random")


def _interpolate(rng, seeds: np.ndarray, nbrs: np.ndarray, u_max: float = 1.0) -> list[tuple[int, int, float]]:
    """One synthetic per entry of ``seeds``; ``nbrs`` holds candidate partners per seed."""
    out = []
    for s, cand in zip(seeds, nbrs):
        partner = cand[rng.integers(cand.size)]
        out.append((int(s), int(partner), float(rng.uniform(0.0, u_max))))
    return out


def smote(d: Dataset, perc_over: float = 200, perc_under: float = 150, k: int = 3, seed: int = 0, standardize: bool = True) -> ResampledDataset:
    """SMOTE interpolation toward Positive neighbours, then Negative undersampling.

    Each Positive emits ``floor(perc_over/100)`` synthetics and the
    remaining ``floor(perc_over*P/100) - P*floor(perc_over/100)`` are spread
    over a random subset of Positives, one each.
    """
    _check_percent(perc_over, perc_under)
    if k < 1:
        raise TreatmentError("k must be >= 1")
    pos, neg = _classes(d)
    if pos.size <= k:
        raise TreatmentError(f"SMOTE needs more than k={k} Positive instances, got {pos.size}")
    rng = np.random.default_rng(seed)
    n_syn = int(math.floor(perc_over * pos.size / 100.0))
    base = int(math.floor(perc_over / 100.0))
    extra = n_syn - base * pos.size
    per = np.full(pos.size, base, dtype=int)
    if extra > 0:
        per[rng.choice(pos.size, size=extra, replace=False)] += 1
    D = _distances(d, standardize)
    nn = _nearest(D, pos, pos, k)
    seeds = np.repeat(pos, per)
    synth = _interpolate(rng, seeds, np.repeat(nn, per, axis=0))
    warnings: list[str] = []
    kept_neg = _undersample_negatives(neg, n_syn, perc_under, rng, warnings)
    keep = np.sort(np.concatenate([pos, kept_neg]))
    removed = {int(i): "undersampled" for i in np.setdiff1d(neg, kept_neg)}
    return _assemble(d, keep, synth, removed, warnings, "SMOTE")


def danger_set(d: Dataset, C: int = 3, standardize: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """(DANGER Positives, Positives judged noise) by C-NN counts over both classes."""
    pos, _ = _classes(d)
    D = _distances(d, standardize)
    nn = _nearest(D, pos, np.arange(d.n), C)
    m = np.sum(d.labels[nn] == NEGATIVE, axis=1)
    danger = pos[(m > C / 2.0) & (m < C)]
    noise = pos[m == C]
    return danger, noise


def borderline_smote(
    d: Dataset, K: int = 3, C: int = 3, dup_size: int = 1, seed: int = 0, method: str = "type2", standardize: bool = True
) -> ResampledDataset:
    """Oversample only the borderline (DANGER) Positives.

    Each DANGER instance emits ``dup_size`` synthetics toward its K nearest
    Positives (u ~ U(0, 1)); with ``type2`` it also emits ``dup_size``
    toward its K nearest Negatives with u ~ U(0, 0.5), so those stay on
    the Positive side of the midpoint. No undersampling.
    """
    if method not in ("type1", "type2"):
        raise TreatmentError("method must be 'type1' or 'type2'")
    if K < 1 or C < 1 or dup_size < 0:
        raise TreatmentError("K and C must be >= 1 and dup_size >= 0")
    pos, neg = _classes(d)
    if pos.size <= max(C, K):
        raise TreatmentError(f"B-SMOTE needs more than max(K, C)={max(K, C)} Positive instances")
    danger, _ = danger_set(d, C, standardize)
    keep = np.arange(d.n)
    if danger.size == 0:
        return _assemble(d, keep, warnings=["DANGER set is empty; data returned unchanged"], name="B-SMOTE")
    rng = np.random.default_rng(seed)
    D = _distances(d, standardize)
    seeds = np.repeat(danger, dup_size)
    synth = _interpolate(rng, seeds, np.repeat(_nearest(D, danger, pos, K), dup_size, axis=0))
    if method == "type2":
        k_neg = min(K, neg.size)
        synth += _interpolate(rng, seeds, np.repeat(_nearest(D, danger, neg, k_neg), dup_size, axis=0), 0.5)
    return _assemble(d, keep, synth, name="B-SMOTE")


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x) + 0.5).astype(int)


def adasyn(d: Dataset, K: int = 3, beta: float = 1.0, seed: int = 0, standardize: bool = True) -> ResampledDataset:
    """Adaptive synthesis: harder Positives (more Negative neighbours) get more synthetics."""
    if K < 1 or beta < 0:
        raise TreatmentError("K must be >= 1 and beta >= 0")
    pos, neg = _classes(d)
    if pos.size <= K:
        raise TreatmentError(f"ADASYN needs more than K={K} Positive instances")
    keep = np.arange(d.n)
    G = (neg.size - pos.size) * beta
    if G <= 0:
        return _assemble(d, keep, name="ADASYN")
    D = _distances(d, standardize)
    nn_all = _nearest(D, pos, np.arange(d.n), K)
    r = np.sum(d.labels[nn_all] == NEGATIVE, axis=1) / K
    if r.sum() == 0:
        return _assemble(d, keep, warnings=["no Positive has a Negative neighbour; data returned unchanged"], name="ADASYN")
    g = _round_half_up(G * r / r.sum())
    rng = np.random.default_rng(seed)
    nn = _nearest(D, pos, pos, K)
    synth = _interpolate(rng, np.repeat(pos, g), np.repeat(nn, g, axis=0))
    return _assemble(d, keep, synth, name="ADASYN")


def default_eps(d: Dataset, k: int = 3, standardize: bool = True) -> float:
    """Mean distance from each Positive to its k nearest Positives."""
    pos, _ = _classes(d)
    D = _distances(d, standardize)
    sub = np.sort(D[np.ix_(pos, pos)], axis=1)[:, : min(k, pos.size - 1)]
    return float(sub.mean())


def _shortest_paths(W: np.ndarray, source: int) -> list[int]:
    """Predecessors from Dijkstra on dense weight matrix ``W`` (inf = no edge).

    Paths compare by total weight, then hop count, then the predecessor's
    index, which makes the tree unique.
    """
    n = W.shape[0]
    dist = [math.inf] * n
    hops = [math.inf] * n
    pred = [-1] * n
    done = [False] * n
    dist[source], hops[source] = 0.0, 0
    heap = [(0.0, 0, source)]
    while heap:
        dv, hv, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for w in np.flatnonzero(np.isfinite(W[v])):
            w = int(w)
            if done[w]:
                continue
            cand = (dv + W[v, w], hv + 1, v)
            if cand < (dist[w], hops[w], pred[w] if pred[w] >= 0 else math.inf):
                dist[w], hops[w], pred[w] = cand
                heapq.heappush(heap, (cand[0], cand[1], w))
    return pred


def dbsmote(
    d: Dataset, dup_size: int = 1, eps: float | None = None, min_pts: int = 3, seed: int = 0, standardize: bool = True
) -> ResampledDataset:
    """Density-based SMOTE: synthetics along shortest paths to cluster pseudo-centroids.

    Positives are clustered with DBSCAN. In each cluster the member nearest
    the cluster mean is the pseudo-centroid; members are joined when within
    ``eps``. Every member emits ``dup_size`` points placed uniformly (by arc
    length) along its shortest path to the pseudo-centroid. DBSCAN noise
    emits nothing.
    """
    from sklearn.cluster import DBSCAN

    if dup_size < 0 or min_pts < 1:
        raise TreatmentError("dup_size must be >= 0 and min_pts >= 1")
    pos, _ = _classes(d)
    Z = standardize_matrix(d.features) if standardize else np.asarray(d.features, dtype=float)
    if eps is None:
        if pos.size < 2:
            raise TreatmentError("DBSMOTE needs at least 2 Positives to pick eps")
        eps = default_eps(d, 3, standardize)
    if eps <= 0:
        raise TreatmentError("eps must be positive")
    Zp = Z[pos]
    labels = DBSCAN(eps=eps, min_samples=min_pts).fit(Zp).labels_
    keep = np.arange(d.n)
    clusters = sorted(set(labels) - {-1})
    if not clusters:
        return _assemble(d, keep, warnings=["DBSCAN found no Positive cluster; data returned unchanged"], name="DBSMOTE")
    rng = np.random.default_rng(seed)
    synth: list[tuple[int, int, float]] = []
    for c in clusters:
        members = np.flatnonzero(labels == c)
        P = Zp[members]
        centre = int(np.argmin(np.linalg.norm(P - P.mean(axis=0), axis=1)))
        W = cdist(P, P)
        W[W > eps] = np.inf
        np.fill_diagonal(W, np.inf)
        pred = _shortest_paths(W, centre)
        for m in range(members.size):
            if m != centre and pred[m] < 0:
                continue  # not reachable within eps; cannot happen for DBSCAN clusters
            path = [m]
            while path[-1] != centre:
                path.append(pred[path[-1]])
            seg = np.array([W[path[i], path[i + 1]] for i in range(len(path) - 1)])
            total = float(seg.sum())
            for _ in range(dup_size):
                t = rng.uniform(0.0, total) if total > 0 else 0.0
                if total == 0:
                    a = b = pos[members[m]]
                    synth.append((int(a), int(b), 0.0))
                    continue
                cum = np.cumsum(seg)
                i = min(int(np.searchsorted(cum, t, side="right")), seg.size - 1)
                start = cum[i] - seg[i]
                u = (t - start) / seg[i]
                synth.append((int(pos[members[path[i]]]), int(pos[members[path[i + 1]]]), float(min(max(u, 0.0), 1.0))))
    return _assemble(d, keep, synth, name="DBSMOTE")


# --------------------------------------------------------------------------
# Cleaning


def _majority_disagrees(d: Dataset, D: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per instance: its k neighbours, and whether at least half of them are of the other class."""
    nn = _nearest(D, np.arange(d.n), np.arange(d.n), k)
    other = np.sum(d.labels[nn] != d.labels[:, None], axis=1)
    return nn, other * 2 >= k


def _check_k(d: Dataset, k: int):
    if k < 1:
        raise TreatmentError("k must be >= 1")
    if d.n <= k:
        raise TreatmentError(f"need more than k={k} instances")


def enn(d: Dataset, k: int = 3, standardize: bool = True) -> ResampledDataset:
    """Edited nearest neighbours: drop every instance outvoted by its k neighbours."""
    _check_k(d, k)
    _classes(d)
    _, bad = _majority_disagrees(d, _distances(d, standardize), k)
    return _assemble(d, np.flatnonzero(~bad), removed={int(i): "enn" for i in np.flatnonzero(bad)}, name="ENN")


def ncl(d: Dataset, k: int = 3, standardize: bool = True) -> ResampledDataset:
    """Neighbourhood cleaning rule; removes Negatives only.

    Step 1 drops Negatives outvoted by their k neighbours. Step 2 drops the
    Negative neighbours of every outvoted Positive. Both steps are decided
    on the input set.
    """
    _check_k(d, k)
    _classes(d)
    nn, bad = _majority_disagrees(d, _distances(d, standardize), k)
    removed: dict[int, str] = {}
    for i in np.flatnonzero(bad & (d.labels == NEGATIVE)):
        removed[int(i)] = "ncl-edited"
    for i in np.flatnonzero(bad & (d.labels == POSITIVE)):
        for j in nn[i]:
            if d.labels[j] == NEGATIVE:
                removed.setdefault(int(j), "ncl-neighbour")
    keep = np.setdiff1d(np.arange(d.n), np.fromiter(removed, dtype=int, count=len(removed)))
    return _assemble(d, keep, removed=removed, name="NCL")


def tomek_links(d: Dataset, D: np.ndarray) -> list[tuple[int, int]]:
    nn = np.argmin(D, axis=1)
    return [(i, int(nn[i])) for i in range(d.n) if nn[nn[i]] == i and i < nn[i] and d.labels[i] != d.labels[nn[i]]]


def oss(d: Dataset, seed: int = 0, standardize: bool = True) -> ResampledDataset:
    """One-sided selection: Tomek-link cleaning, then condensed nearest neighbour.

    The CNN store starts with every Positive plus one random Negative and
    grows with each remaining Negative that the store's 1-NN misclassifies
    (one pass in index order).
    """
    pos, neg = _classes(d)
    D = _distances(d, standardize)
    removed: dict[int, str] = {}
    for i, j in tomek_links(d, D):
        removed[i if d.labels[i] == NEGATIVE else j] = "tomek"
    neg_left = np.array([i for i in neg if i not in removed], dtype=int)
    store = list(pos)
    if neg_left.size:
        rng = np.random.default_rng(seed)
        first = int(rng.choice(neg_left))
        store.append(first)
        for i in neg_left:
            if i == first:
                continue
            s = np.array(store)
            nearest = s[np.argmin(D[i, s])]
            if d.labels[nearest] != NEGATIVE:
                store.append(int(i))
            else:
                removed[int(i)] = "cnn"
    keep = np.sort(np.array(store, dtype=int))
    return _assemble(d, keep, removed=removed, name="OSS")


# --------------------------------------------------------------------------
# Dispatch


TREATMENTS = ("Raw", "Random", "SMOTE", "B-SMOTE", "DBSMOTE", "ADASYN", "ENN", "NCL", "OSS")

_PARAMS = {
    "Raw": set(),
    "Random": {"perc_over", "perc_under"},
    "SMOTE": {"perc_over", "perc_under", "k"},
    "B-SMOTE": {"K", "C", "dup_size", "method"},
    "DBSMOTE": {"dup_size", "eps", "min_pts"},
    "ADASYN": {"K", "beta"},
    "ENN": {"k"},
    "NCL": {"k"},
    "OSS": set(),
}


@dataclass(frozen=True)
class TreatmentSpec:
    name: str = "Raw"
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.name not in _PARAMS:
            raise TreatmentError(f"unknown treatment {self.name!r}; choose from {TREATMENTS}")
        unknown = set(self.params) - _PARAMS[self.name]
        if unknown:
            raise TreatmentError(f"{self.name} does not take parameter(s) {sorted(unknown)}")

    @classmethod
    def from_dict(cls, doc: dict) -> "TreatmentSpec":
        extra = set(doc) - {"name", "params", "seed"}
        if extra:
            raise TreatmentError(f"unexpected treatment field(s) {sorted(extra)}")
        return cls(doc.get("name", "Raw"), dict(doc.get("params", {})), int(doc.get("seed", 0)))

    @classmethod
    def from_json(cls, text: str) -> "TreatmentSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "seed": self.seed}


def apply_treatment(d: Dataset, spec: TreatmentSpec, standardize: bool = True) -> ResampledDataset:
    p = dict(spec.params)
    name = spec.name
    try:
        if name == "Raw":
            return _assemble(d, np.arange(d.n), name="Raw")
        if name == "Random":
            return random_resample(d, seed=spec.seed, **p)
        if name == "SMOTE":
            return smote(d, seed=spec.seed, standardize=standardize, **p)
        if name == "B-SMOTE":
            return borderline_smote(d, seed=spec.seed, standardize=standardize, **p)
        if name == "DBSMOTE":
            return dbsmote(d, seed=spec.seed, standardize=standardize, **p)
        if name == "ADASYN":
            return adasyn(d, seed=spec.seed, standardize=standardize, **p)
        if name == "ENN":
            return enn(d, standardize=standardize, **p)
        if name == "NCL":
            return ncl(d, standardize=standardize, **p)
        if name == "OSS":
            return oss(d, seed=spec.seed, standardize=standardize)
    except TypeError as exc:
        raise TreatmentError(f"invalid parameters for {name}: {exc}") from None
    raise TreatmentError(f"unknown treatment {name!r}")
