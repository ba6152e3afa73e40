"""Dataset diagnosis: subclasses, imbalance/overlap matrix, noise and dispersion.

``diagnose`` runs the whole procedure. Each class is split into Gaussian
subclasses by BIC; if any subclass is smaller than ``c_min`` only the
subclass membership is returned (for outlier analysis). Otherwise the full
:class:`DiagnosticReport` is assembled from the pieces below.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import gmm
from .data import NEGATIVE, POSITIVE, Dataset, DatasetSummary, SubclassAssignment, standardize_matrix, summarize
from .gmm import GaussianComponent, MixtureModel
from .separation import ProjectionError, optimal_separation

log = logging.getLogger(__name__)

DISTANCES = ("euclidean", "mahalanobis", "manhattan")
IR_THRESHOLD = 10.0
DISJUNCT_THRESHOLD = 10
NOR_THRESHOLD = 0.1


class DiagnosisError(ValueError):
    pass


# --------------------------------------------------------------------------
# Subclass detection


@dataclass
class ClassDetection:
    label: str
    model_name: str
    k: int
    bic: float
    mixture: MixtureModel
    failures: list[str] = field(default_factory=list)
    c_min_met: bool = True

    def to_dict(self) -> dict:
        return {"model": self.model_name, "K": self.k, "bic": self.bic, "c_min_met": self.c_min_met}


def _detect_class(X, label, g_max, models, c_min, seed) -> ClassDetection:
    entries = gmm.fit_grid(X, g_max, models, seed)
    failures = [f"{label}: {e.model} K={e.k} failed ({e.error})" for e in entries if not e.ok]
    best = gmm.best_entry(entries, c_min)
    met = best is not None
    if best is None:
        # Only reachable when the class itself is smaller than c_min (K=1
        # qualifies otherwise), so the class is reported as one subclass.
        best = gmm.best_entry([e for e in entries if e.k == 1], 0) or gmm.best_entry(entries, 0)
    if best is None:
        raise DiagnosisError(f"every mixture fit failed for the {label} class")
    return ClassDetection(label, best.model, best.k, best.fit.bic, best.fit, failures, met)


def _name_subclasses(prefix: str, mixture: MixtureModel, n_inst: int):
    """Hard labels for one class, numbered by decreasing subclass size."""
    hard = mixture.hard_assignment() if mixture.responsibilities is not None else np.zeros(n_inst, dtype=int)
    sizes = np.bincount(hard, minlength=mixture.k)
    order = sorted(range(mixture.k), key=lambda c: (-sizes[c], c))
    names = {c: f"{prefix}-{i + 1:02d}" for i, c in enumerate(order)}
    comps = {names[c]: mixture.components[c] for c in range(mixture.k)}
    return np.array([names[c] for c in hard], dtype=object), comps, [names[c] for c in order]


# --------------------------------------------------------------------------
# IR / overlap matrix


@dataclass
class IROMatrix:
    subclass_order: list[str]
    counts: np.ndarray
    ir: np.ndarray
    j_star: list[list[float | None]]

    def upper(self, i: int, j: int) -> float:
        return float(self.ir[min(i, j), max(i, j)])

    def lower(self, i: int, j: int) -> float | None:
        return self.j_star[max(i, j)][min(i, j)]

    def separation(self, a: str, b: str) -> float | None:
        i, j = self.subclass_order.index(a), self.subclass_order.index(b)
        return self.lower(i, j)

    @property
    def has_unknown(self) -> bool:
        m = len(self.subclass_order)
        return any(self.j_star[i][j] is None for i in range(m) for j in range(i))

    def matrix(self) -> list[list[float | None]]:
        """Counts on the diagonal, IR above, separation index below."""
        m = len(self.subclass_order)
        out: list[list[float | None]] = []
        for i in range(m):
            row = []
            for j in range(m):
                if i == j:
                    row.append(int(self.counts[i]))
                elif i < j:
                    row.append(float(self.ir[i, j]))
                else:
                    row.append(self.j_star[i][j])
            out.append(row)
        return out

    def to_dict(self) -> dict:
        return {"subclasses": list(self.subclass_order), "matrix": self.matrix()}


def build_iro(assign: SubclassAssignment, components: dict[str, GaussianComponent], alpha: float = 0.05, warnings: list | None = None) -> IROMatrix:
    """Counts, pairwise imbalance ratios and pairwise separation indices.

    Pairs whose projection cannot be computed get ``None`` (Unknown).
    """
    order = list(assign.order)
    m = len(order)
    if m < 2:
        raise DiagnosisError("the IRO matrix needs at least two subclasses")
    counts = np.array([assign.per_subclass_counts[s] for s in order])
    ir = np.full((m, m), np.nan)
    js: list[list[float | None]] = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            hi, lo = max(counts[i], counts[j]), min(counts[i], counts[j])
            ir[i, j] = hi / lo if lo > 0 else np.inf
            try:
                js[j][i] = optimal_separation(components[order[i]], components[order[j]], alpha).j_star
            except ProjectionError as exc:
                if warnings is not None:
                    warnings.append(f"no projection between {order[i]} and {order[j]}: {exc}")
    return IROMatrix(order, counts, ir, js)


# --------------------------------------------------------------------------
# Noise


@dataclass
class NoiseReport:
    subclass_order: list[str]
    noise_matrix: np.ndarray
    estimated: np.ndarray
    is_noise: np.ndarray
    is_label_noise: np.ndarray
    per_class: dict[str, dict[str, int]]
    per_subclass: list[dict]
    nr: float | None
    nor: float | None
    nlr: float | None

    @property
    def total_noise(self) -> int:
        return int(self.is_noise.sum())

    @property
    def total_valid(self) -> int:
        return int(self.is_noise.size - self.is_noise.sum())

    def to_dict(self) -> dict:
        return {
            "subclasses": list(self.subclass_order),
            "noise_matrix": self.noise_matrix.tolist(),
            "per_class": self.per_class,
            "per_subclass": self.per_subclass,
            "nr": self.nr,
            "nor": self.nor,
            "nlr": self.nlr,
        }


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def knn_indices(X: np.ndarray, k: int) -> np.ndarray:
    """k nearest neighbours of every row (self excluded, ties to lower index)."""
    D = cdist(X, X)
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def noise_from_estimates(assign: SubclassAssignment, estimated: np.ndarray, separation, sp_th: float = 0.2, warnings: list | None = None) -> NoiseReport:
    """Noise tables from actual and estimated subclass codes.

    ``separation(a, b)`` returns the separation index between two subclass
    codes or ``None`` when unknown.
    """
    order = list(assign.order)
    m = len(order)
    actual = assign.index()
    estimated = np.asarray(estimated, dtype=int)
    positive = np.array([assign.is_positive(s) for s in order])
    nm = np.zeros((m, m), dtype=int)
    np.add.at(nm, (actual, estimated), 1)
    is_noise = positive[actual] != positive[estimated]
    is_label = np.zeros_like(is_noise)
    unknown_pairs = set()
    for i in np.flatnonzero(is_noise):
        j = separation(actual[i], estimated[i])
        if j is None:
            unknown_pairs.add((actual[i], estimated[i]))
        elif j >= sp_th:
            is_label[i] = True
    if warnings is not None:
        for a, b in sorted(unknown_pairs):
            warnings.append(f"noise between {order[a]} and {order[b]} counted as overlap: separation unknown")

    per_subclass = []
    for c, s in enumerate(order):
        mask = actual == c
        noise = int(is_noise[mask].sum())
        label = int(is_label[mask].sum())
        per_subclass.append(
            {"subclass": s, "instances": int(mask.sum()), "valid": int(mask.sum()) - noise, "noise": noise, "noise_overlap": noise - label, "noise_label": label}
        )
    per_class = {}
    for name, pos in (("Negative", False), ("Positive", True)):
        mask = positive[actual] == pos
        per_class[name] = {"noise": int(is_noise[mask].sum()), "valid": int((~is_noise[mask]).sum())}

    valid = int((~is_noise).sum())
    n_label = int(is_label.sum())
    n_overlap = int(is_noise.sum()) - n_label
    return NoiseReport(
        subclass_order=order,
        noise_matrix=nm,
        estimated=estimated,
        is_noise=is_noise,
        is_label_noise=is_label,
        per_class=per_class,
        per_subclass=per_subclass,
        nr=_ratio(valid, int(is_noise.sum())),
        nor=_ratio(valid, n_overlap),
        nlr=_ratio(valid, n_label),
    )


def detect_noise(X: np.ndarray, assign: SubclassAssignment, k: int, iro: IROMatrix, sp_th: float = 0.2, warnings: list | None = None) -> NoiseReport:
    """k-NN subclass vote for every instance.

    The winning subclass among the k nearest neighbours (ties go to the
    subclass of the nearest tied neighbour) is the estimated subclass. An
    instance is noise when that subclass belongs to the other class; the
    noise is attributed to mislabeling when the two subclasses are well
    separated (index >= ``sp_th``) and to overlap otherwise.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if k < 1 or k >= n:
        raise DiagnosisError(f"k must lie in [1, N-1], got k={k} with N={n}")
    if iro.subclass_order != list(assign.order):
        raise DiagnosisError("IRO matrix and assignment disagree on subclasses")
    actual = assign.index()
    m = len(assign.order)
    nbrs = knn_indices(X, k)
    votes = actual[nbrs]
    estimated = np.empty(n, dtype=int)
    for i in range(n):
        tally = np.bincount(votes[i], minlength=m)
        top = tally.max()
        # neighbours are sorted by distance, so the first tied label is the nearest
        estimated[i] = next(v for v in votes[i] if tally[v] == top)
    return noise_from_estimates(assign, estimated, iro.lower, sp_th, warnings)


# --------------------------------------------------------------------------
# Dispersion


@dataclass
class DispersionReport:
    per_subclass: dict[str, dict[str, dict[str, float | None]]]
    anderson_tables: dict[str, dict | None]

    def to_dict(self) -> dict:
        return {"per_subclass": self.per_subclass, "anderson_tables": self.anderson_tables}


def _regularized_cov(Xs: np.ndarray) -> np.ndarray:
    cov = np.atleast_2d(np.cov(Xs, rowvar=False, ddof=1))
    ridge = gmm.RIDGE_FACTOR * float(np.mean(np.diag(cov)))
    return cov + ridge * np.eye(cov.shape[0])


def distances_to_median(Xs: np.ndarray, dist: str = "euclidean") -> np.ndarray | None:
    """Distance of each row to the coordinate-wise median of ``Xs``.

    Returns ``None`` for Mahalanobis when the covariance is singular even
    after regularization.
    """
    med = np.median(Xs, axis=0)
    diff = Xs - med
    if dist == "euclidean":
        return np.sqrt((diff**2).sum(axis=1))
    if dist == "manhattan":
        return np.abs(diff).sum(axis=1)
    if dist == "mahalanobis":
        if Xs.shape[0] < 2:
            return None
        cov = _regularized_cov(Xs)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            return None
        z = np.linalg.solve(chol, diff.T)
        return np.sqrt((z**2).sum(axis=0))
    raise ValueError(f"unknown distance {dist!r}")


def dispersion_stats(X: np.ndarray, assign: SubclassAssignment) -> dict[str, dict[str, dict[str, float | None]]]:
    """Mean and sample standard deviation of distances to each subclass median."""
    X = np.asarray(X, dtype=float)
    out = {}
    for s in assign.order:
        Xs = X[assign.subclass_ids == s]
        row = {}
        for dist in DISTANCES:
            d = distances_to_median(Xs, dist)
            if d is None or d.size == 0:
                row[dist] = {"mean": None, "std": None}
            else:
                row[dist] = {"mean": float(d.mean()), "std": float(d.std(ddof=1)) if d.size > 1 else None}
        out[s] = row
    return out


def _anova_f(z: np.ndarray, groups: np.ndarray, g: int) -> tuple[float, float, float]:
    n = z.size
    counts = np.bincount(groups, minlength=g)
    means = np.bincount(groups, weights=z, minlength=g) / counts
    grand = z.mean()
    ssb = float(np.sum(counts * (means - grand) ** 2))
    ssw = float(np.sum((z - means[groups]) ** 2))
    return ssb, ssw, _f(ssb, ssw, g, n)


def _f(ssb, ssw, g, n):
    if ssw <= 0:
        return 0.0 if ssb <= 0 else np.inf
    return (ssb / (g - 1)) / (ssw / (n - g))


def permdisp_test(z: np.ndarray, groups: np.ndarray, n_perm: int = 999, rng=None) -> dict:
    """Permutation ANOVA on distances ``z`` across group codes ``groups``."""
    if n_perm < 1:
        raise ValueError("n_perm must be positive")
    z = np.asarray(z, dtype=float)
    _, groups = np.unique(groups, return_inverse=True)
    g = int(groups.max()) + 1
    n = z.size
    if g < 2:
        raise DiagnosisError("dispersion test needs at least two groups")
    if n <= g:
        raise DiagnosisError("dispersion test needs more instances than groups")
    rng = np.random.default_rng(rng)
    ssb, ssw, f_obs = _anova_f(z, groups, g)
    counts = np.bincount(groups, minlength=g)
    grand = z.mean()
    sst = float(np.sum((z - grand) ** 2))
    hits = 0
    slack = 1e-12 * max(1.0, abs(f_obs)) if np.isfinite(f_obs) else 0.0
    for _ in range(n_perm):
        perm = groups[rng.permutation(n)]
        sums = np.bincount(perm, weights=z, minlength=g)
        pssb = float(np.sum(sums**2 / counts) - n * grand**2)
        f_perm = _f(max(pssb, 0.0), max(sst - pssb, 0.0), g, n)
        if f_perm >= f_obs - slack:
            hits += 1
    return {
        "df": [g - 1, n - g],
        "sum_sq": [ssb, ssw],
        "mean_sq": [ssb / (g - 1), ssw / (n - g)],
        "F": f_obs,
        "n_perm": n_perm,
        "p_value": (1 + hits) / (n_perm + 1),
    }


def permdisp(X: np.ndarray, assign: SubclassAssignment, labels: np.ndarray, n_perm: int = 999, seed: int = 0, dist: str = "euclidean") -> dict[str, dict | None]:
    """Homogeneity-of-dispersion test per class (``None`` for a single subclass).

    Distances to each subclass median are compared across the class's
    subclasses with a one-way ANOVA F; its p-value comes from ``n_perm``
    random relabelings of the subclasses.
    """
    if n_perm < 99:
        raise DiagnosisError("n_perm must be at least 99")
    X = np.asarray(X, dtype=float)
    out: dict[str, dict | None] = {}
    streams = np.random.SeedSequence(seed).spawn(2)
    for (name, cls), ss in zip((("Negative", NEGATIVE), ("Positive", POSITIVE)), streams):
        mask = np.asarray(labels) == cls
        subs = [s for s in assign.order if assign.is_positive(s) == (cls == POSITIVE)]
        if len(subs) < 2:
            out[name] = None
            continue
        z = np.empty(int(mask.sum()))
        groups = np.empty(z.size, dtype=int)
        ids = assign.subclass_ids[mask]
        Xc = X[mask]
        for gi, s in enumerate(subs):
            sel = ids == s
            d = distances_to_median(Xc[sel], dist)
            if d is None:
                d = distances_to_median(Xc[sel], "euclidean")
            z[sel] = d
            groups[sel] = gi
        table = permdisp_test(z, groups, n_perm, np.random.default_rng(ss))
        table["groups"] = subs
        table["distance"] = dist
        out[name] = table
    return out


# --------------------------------------------------------------------------
# Profile and report


@dataclass(frozen=True)
class DDPProfile:
    ir_level: str
    disjunct_level: str
    overlap_level: str

    def to_dict(self) -> dict:
        return {"ir_level": self.ir_level, "disjunct_level": self.disjunct_level, "overlap_level": self.overlap_level}


def ddp_levels(ir: float, n_subclasses: int, nor: float | None, overlap_known: bool = True) -> DDPProfile:
    ir_level = "Low" if ir <= IR_THRESHOLD else "High"
    disjunct_level = "Low" if n_subclasses <= DISJUNCT_THRESHOLD else "High"
    if not overlap_known:
        overlap_level = "Unknown"
    elif nor is None or nor <= NOR_THRESHOLD:
        overlap_level = "Low"
    else:
        overlap_level = "High"
    return DDPProfile(ir_level, disjunct_level, overlap_level)


def ddp_profile(summary: DatasetSummary, assign: SubclassAssignment, noise: NoiseReport, overlap_known: bool = True) -> DDPProfile:
    return ddp_levels(summary.imbalance_ratio, len(assign.order), noise.nor, overlap_known)


@dataclass
class DiagnosticReport:
    summary: DatasetSummary
    assignment: SubclassAssignment
    detection: dict[str, ClassDetection]
    iro: IROMatrix
    noise: NoiseReport
    dispersion: DispersionReport
    ddp: DDPProfile
    warnings: list[str]
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "summary": self.summary.to_dict(),
            "subclasses": {
                "detection": {k: v.to_dict() for k, v in self.detection.items()},
                "counts": self.assignment.per_subclass_counts,
            },
            "iro": self.iro.to_dict(),
            "noise": self.noise.to_dict(),
            "dispersion": self.dispersion.to_dict(),
            "ddp": self.ddp.to_dict(),
            "warnings": list(self.warnings),
        }

    def to_text(self) -> str:
        return report_text(self)

    def iro_csv_rows(self) -> list[list]:
        order = self.iro.subclass_order
        rows = [["subclass", *order]]
        for s, row in zip(order, self.iro.matrix()):
            rows.append([s, *("Unknown" if v is None else v for v in row)])
        return rows

    def noise_csv_rows(self) -> list[list]:
        order = self.noise.subclass_order
        rows = [["actual\\estimated", *order]]
        for s, row in zip(order, self.noise.noise_matrix.tolist()):
            rows.append([s, *row])
        return rows


def _fmt(v, nd=2) -> str:
    if v is None:
        return "Undefined"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if not np.isfinite(v):
        return "Inf"
    return f"{v:.{nd}f}"


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    line = lambda r: "  ".join(f"{str(c):>{w}}" for c, w in zip(r, widths))
    return "\n".join([line(header), *(line(r) for r in rows)])


def report_text(r: DiagnosticReport) -> str:
    """Plain-text report: dataset summary, subclasses, IRO matrix, noise, dispersion, profile."""
    out = ["== Dataset summary ==", r.summary.to_text(), ""]
    out.append("== Subclass detection ==")
    out.append(_table(["Class", "Model", "K", "BIC"], [[c, d.model_name, str(d.k), f"{d.bic:.2f}"] for c, d in r.detection.items()]))
    out += ["", "== IRO matrix (diagonal: counts, upper: IR, lower: separation index) =="]
    order = r.iro.subclass_order
    mrows = [[s, *(_fmt(v, 2) if v is not None else "Unknown" for v in row)] for s, row in zip(order, r.iro.matrix())]
    out.append(_table(["", *order], mrows))
    out += ["", "== Noise matrix (rows: actual, columns: estimated) =="]
    out.append(_table(["", *order], [[s, *map(str, row)] for s, row in zip(order, r.noise.noise_matrix.tolist())]))
    out += ["", "== Noise per class =="]
    out.append(_table(["Class", "Noise", "Valid"], [[c, str(v["noise"]), str(v["valid"])] for c, v in r.noise.per_class.items()]))
    out += ["", "== Noise per subclass =="]
    keys = ["instances", "valid", "noise", "noise_overlap", "noise_label"]
    out.append(_table(["Subclass", "Instances", "Valid", "Noise", "Noise overlap", "Noise label"], [[p["subclass"], *(str(p[k]) for k in keys)] for p in r.noise.per_subclass]))
    out.append(f"NR = {_fmt(r.noise.nr)}  NOR = {_fmt(r.noise.nor)}  NLR = {_fmt(r.noise.nlr)}")
    out += ["", "== Dispersion (distance to subclass median: mean / std) =="]
    drows = []
    for s, row in r.dispersion.per_subclass.items():
        drows.append([s, *(f"{_fmt(row[d]['mean'])} / {_fmt(row[d]['std'])}" for d in DISTANCES)])
    out.append(_table(["Subclass", "Euclidean", "Mahalanobis", "Manhattan"], drows))
    for cls, t in r.dispersion.anderson_tables.items():
        out.append("")
        if t is None:
            out.append(f"{cls}: single subclass, dispersion test skipped")
            continue
        out.append(f"{cls}: dispersion test over {', '.join(t['groups'])}")
        out.append(_table(["", "Df", "Sum Sq", "Mean Sq", "F", "N.Perm", "Pr(>F)"], [
            ["Subclass", str(t["df"][0]), f"{t['sum_sq'][0]:.4f}", f"{t['mean_sq'][0]:.4f}", f"{t['F']:.4f}", str(t["n_perm"]), f"{t['p_value']:.3f}"],
            ["Residuals", str(t["df"][1]), f"{t['sum_sq'][1]:.4f}", f"{t['mean_sq'][1]:.4f}", "", "", ""],
        ]))
    out += ["", "== Degradation profile =="]
    out.append(f"IR: {r.ddp.ir_level}  Disjuncts: {r.ddp.disjunct_level}  Overlap: {r.ddp.overlap_level}")
    if r.warnings:
        out += ["", "== Warnings =="] + [f"- {w}" for w in r.warnings]
    return "\n".join(out) + "\n"


@dataclass
class EarlyExit:
    """Subclass membership only: some subclass is smaller than ``c_min``."""

    assignment: SubclassAssignment
    detection: dict[str, ClassDetection]
    c_min: int
    warnings: list[str]

    @property
    def small_subclasses(self) -> dict[str, int]:
        return {s: c for s, c in self.assignment.per_subclass_counts.items() if c < self.c_min}


def diagnose(
    S: Dataset,
    k: int = 3,
    c_min: int | None = None,
    g_max: int = 9,
    sp_th: float = 0.2,
    dist: str = "euclidean",
    *,
    alpha: float = 0.05,
    models=gmm.REQUIRED_MODELS,
    seed: int = 0,
    standardize: bool = True,
    n_perm: int = 999,
) -> DiagnosticReport | EarlyExit:
    """Run the full diagnosis of a binary training set."""
    if dist not in DISTANCES:
        raise DiagnosisError(f"unknown distance {dist!r}; choose from {DISTANCES}")
    summary = summarize(S)
    X = standardize_matrix(S.features) if standardize else np.asarray(S.features, dtype=float)
    if c_min is None:
        c_min = S.d + 2
    for name, cls in (("Negative", NEGATIVE), ("Positive", POSITIVE)):
        if int(np.sum(S.labels == cls)) < 2:
            raise DiagnosisError(f"the {name} class needs at least 2 instances")

    warnings: list[str] = []
    ids = np.empty(S.n, dtype=object)
    components: dict[str, GaussianComponent] = {}
    detection: dict[str, ClassDetection] = {}
    order: list[str] = []
    for name, cls, prefix in (("Negative", NEGATIVE, "N"), ("Positive", POSITIVE, "P")):
        mask = S.labels == cls
        det = _detect_class(X[mask], name, g_max, models, c_min, seed)
        warnings.extend(det.failures)
        detection[name] = det
        names, comps, sub_order = _name_subclasses(prefix, det.mixture, int(mask.sum()))
        ids[mask] = names
        components.update(comps)
        order.extend(sub_order)
    assign = SubclassAssignment(ids, order)
    params = dict(k=k, c_min=c_min, g_max=g_max, sp_th=sp_th, dist=dist, alpha=alpha, seed=seed, standardize=standardize, n_perm=n_perm, models=list(models))

    if any(c < c_min for c in assign.per_subclass_counts.values()):
        warnings.append(f"subclass smaller than c_min={c_min}; returning subclass membership only")
        return EarlyExit(assign, detection, c_min, warnings)

    iro = build_iro(assign, components, alpha, warnings)
    noise = detect_noise(X, assign, k, iro, sp_th, warnings)
    dispersion = DispersionReport(dispersion_stats(X, assign), permdisp(X, assign, S.labels, n_perm, seed, dist))
    ddp = ddp_profile(summary, assign, noise, overlap_known=not iro.has_unknown)
    return DiagnosticReport(summary, assign, detection, iro, noise, dispersion, ddp, warnings, params)
