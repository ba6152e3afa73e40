"""Gaussian mixtures fitted by EM under eigen-decomposed covariance families.

Each covariance is ``lambda_k * D_k A_k D_k^T`` (volume, orientation, shape)
and a three-letter model name says which of the three parts are Equal across
components, Variable, or fixed to the Identity / coordinate axes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _em_kernels

log = logging.getLogger(__name__)

REQUIRED_MODELS = ("EII", "VII", "EEI", "VEI", "EVI", "VVI", "EEE", "VVV")
EXTENDED_MODELS = ("EVE", "VEE", "VVE", "EEV", "VEV", "EVV")
ALL_MODELS = REQUIRED_MODELS + EXTENDED_MODELS

RIDGE_FACTOR = 1e-6
N_RESTARTS = 5
_INNER_TOL = 1e-10
_INNER_MAX = 200
_ORIENT_MAX = 20
_LOG_2PI = math.log(2.0 * math.pi)


class FitError(RuntimeError):
    """EM could not produce a valid mixture for a (K, model) pair."""


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    covariance: np.ndarray


@dataclass(eq=False)
class MixtureModel:
    model_name: str
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood: float = float("nan")
    bic: float = float("nan")
    responsibilities: np.ndarray | None = None
    n_iter: int = 0
    converged: bool = False
    history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def n_params(self) -> int:
        return count_free_params(self.model_name, self.d, self.k)

    @property
    def components(self) -> list[GaussianComponent]:
        return [GaussianComponent(float(w), m, c) for w, m, c in zip(self.weights, self.means, self.covariances)]

    def hard_assignment(self) -> np.ndarray:
        return np.argmax(self.responsibilities, axis=1)

    def to_dict(self) -> dict:
        return {
            "model": self.model_name,
            "K": self.k,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "loglik": self.log_likelihood,
            "bic": self.bic,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MixtureModel":
        return cls(
            model_name=doc["model"],
            weights=np.asarray(doc["weights"], dtype=float),
            means=np.asarray(doc["means"], dtype=float),
            covariances=np.asarray(doc["covariances"], dtype=float),
            log_likelihood=float(doc["loglik"]),
            bic=float(doc["bic"]),
        )


def _check_model(name: str) -> None:
    if name not in ALL_MODELS:
        raise ValueError(f"unknown covariance model {name!r}")


def count_free_params(model: str, d: int, k: int) -> int:
    """Free parameters of a K-component, D-dimensional mixture."""
    _check_model(model)
    if d < 1 or k < 1:
        raise ValueError("D and K must be at least 1")
    vol, shape, orient = model
    n = (k - 1) + k * d
    n += 1 if vol == "E" else k
    if shape != "I":
        n += (d - 1) if shape == "E" else k * (d - 1)
    if orient not in ("I",) and shape != "I":
        rot = d * (d - 1) // 2
        n += rot if orient == "E" else k * rot
    return n


def bic(log_likelihood: float, n_params: int, n: int) -> float:
    """Larger-is-better BIC: ``loglik - n_params * log(n) / 2``."""
    return log_likelihood - 0.5 * n_params * math.log(n)


def component_logpdf(X: np.ndarray, means: np.ndarray, covariances: np.ndarray) -> np.ndarray:
    """N x K matrix of Gaussian log densities."""
    X = np.atleast_2d(X)
    chol = np.linalg.cholesky(covariances)
    prec = np.linalg.inv(chol).transpose(0, 2, 1)
    z = np.matmul(X, prec) - np.matmul(means[:, None, :], prec)
    maha = (z * z).sum(axis=2)
    logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    d = X.shape[1]
    return (-0.5 * (maha + logdet[:, None] + d * _LOG_2PI)).T


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=1)
    return m + np.log(np.exp(a - m[:, None]).sum(axis=1))


def log_density(x, m: MixtureModel) -> float:
    """log p(x) under the mixture."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != m.d:
        raise ValueError(f"point has dimension {x.shape[0]}, model has {m.d}")
    lp = component_logpdf(x[None, :], m.means, m.covariances)[0] + np.log(m.weights)
    return float(logsumexp(lp))


def _norm_det1(v: np.ndarray) -> tuple[np.ndarray, float]:
    """Scale a positive diagonal (last axis) to unit product; return it and the scale."""
    scale = np.exp(np.mean(np.log(v), axis=-1, keepdims=True))
    return v / scale, scale[..., 0]


def _eig_desc(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(W)
    return vals[..., ::-1], vecs[..., ::-1]


def _orientation_mm(W: np.ndarray, B: np.ndarray, D0: np.ndarray, steps: int = 5) -> np.ndarray:
    """Minorize-maximize steps for a common orthogonal D minimizing sum_k tr(W_k D B_k D^T)."""
    wmax = np.linalg.eigvalsh(W)[:, -1]
    dim = W.shape[1]
    Dm = D0
    for _ in range(steps):
        G = np.zeros((dim, dim))
        for k in range(W.shape[0]):
            G += (W[k] - wmax[k] * np.eye(dim)) @ Dm @ np.diag(B[k])
        U, _, Vt = np.linalg.svd(G)
        Dm = -U @ Vt
    return Dm


def _constrained_scatter(model: str, W: np.ndarray, nk: np.ndarray, n: float, state: dict | None = None) -> np.ndarray:
    """Covariances maximizing the expected complete log-likelihood given the
    weighted scatter matrices ``W`` (K x D x D) and soft counts ``nk``.

    ``state`` carries the common orientation between calls for EVE/VVE so
    each M-step continues from the previous one.
    """
    K, D, _ = W.shape
    eye = np.eye(D)
    if model in ("EVI", "VEI") and np.any(np.diagonal(W, axis1=1, axis2=2) <= 0):
        raise FitError("zero variance along a coordinate axis")
    if model == "EII":
        lam = np.trace(W.sum(0)) / (n * D)
        return np.broadcast_to(lam * eye, (K, D, D)).copy()
    if model == "VII":
        lam = np.trace(W, axis1=1, axis2=2) / (nk * D)
        return lam[:, None, None] * eye
    if model == "EEI":
        S = np.diag(np.diagonal(W.sum(0))) / n
        return np.broadcast_to(S, (K, D, D)).copy()
    if model == "VVI":
        diag = np.diagonal(W, axis1=1, axis2=2) / nk[:, None]
        return diag[:, :, None] * eye
    if model == "EVI":
        dk = np.diagonal(W, axis1=1, axis2=2)
        shape, scale = _norm_det1(dk)
        lam = scale.sum() / n
        return (lam * shape)[:, :, None] * eye
    if model == "VEI":
        dk = np.diagonal(W, axis1=1, axis2=2)
        lam = dk.sum(1) / (nk * D)
        prev = None
        for _ in range(_INNER_MAX):
            shape, _ = _norm_det1((dk / lam[:, None]).sum(0))
            lam = (dk / shape).sum(1) / (nk * D)
            obj = float(np.sum(nk * np.log(lam)))
            if prev is not None and abs(obj - prev) <= _INNER_TOL * (1 + abs(obj)):
                break
            prev = obj
        return (lam[:, None] * shape)[:, :, None] * eye
    if model == "EEE":
        return np.broadcast_to(W.sum(0) / n, (K, D, D)).copy()
    if model == "VVV":
        return W / nk[:, None, None]
    if model == "EVV":
        dets = np.linalg.det(W)
        if np.any(dets <= 0):
            raise FitError("singular scatter matrix")
        root = dets ** (1.0 / D)
        lam = root.sum() / n
        return lam * W / root[:, None, None]
    if model in ("EEV", "VEV"):
        omega, L = _eig_desc(W)
        if np.any(omega <= 0):
            raise FitError("singular scatter matrix")
        if model == "EEV":
            shape, scale = _norm_det1(omega.sum(0))
            lam = np.full(K, scale / n)
        else:
            lam = omega.sum(1) / (nk * D)
            prev = None
            for _ in range(_INNER_MAX):
                shape, _ = _norm_det1((omega / lam[:, None]).sum(0))
                lam = (omega / shape).sum(1) / (nk * D)
                obj = float(np.sum(nk * np.log(lam)))
                if prev is not None and abs(obj - prev) <= _INNER_TOL * (1 + abs(obj)):
                    break
                prev = obj
        return np.einsum("kij,kj,klj->kil", L, lam[:, None] * shape, L)
    if model == "VEE":
        lam = np.trace(W, axis1=1, axis2=2) / (nk * D)
        prev = None
        for _ in range(_INNER_MAX):
            C = (W / lam[:, None, None]).sum(0)
            det = np.linalg.det(C)
            if det <= 0:
                raise FitError("singular scatter matrix")
            C = C / det ** (1.0 / D)
            Ci = np.linalg.inv(C)
            lam = np.einsum("kij,ji->k", W, Ci) / (nk * D)
            obj = float(np.sum(nk * np.log(lam)))
            if prev is not None and abs(obj - prev) <= _INNER_TOL * (1 + abs(obj)):
                break
            prev = obj
        return lam[:, None, None] * C
    if model in ("EVE", "VVE"):
        state = {} if state is None else state
        Dm = state.get("orientation")
        if Dm is None:
            _, Dm = _eig_desc(W.sum(0))
        prev = None
        for _ in range(_ORIENT_MAX):
            proj = np.einsum("ji,kjl,li->ki", Dm, W, Dm)
            if np.any(proj <= 0):
                raise FitError("singular scatter matrix")
            if model == "EVE":
                shape, scale = _norm_det1(proj)
                lam = np.full(K, scale.sum() / n)
                ev = lam[:, None] * shape
            else:
                ev = proj / nk[:, None]
            obj = float(np.sum(nk * np.log(ev).sum(1)) + np.sum(proj / ev))
            if prev is not None and abs(obj - prev) <= _INNER_TOL * (1 + abs(obj)):
                break
            prev = obj
            Dm = _orientation_mm(W, 1.0 / ev, Dm)
        state["orientation"] = Dm
        return np.einsum("ij,kj,lj->kil", Dm, ev, Dm)
    raise ValueError(f"unknown covariance model {model!r}")


def _m_step(X: np.ndarray, resp: np.ndarray, model: str, ridge: float, state: dict | None = None):
    n = X.shape[0]
    nk = resp.sum(axis=0)
    if np.any(nk < 1.0):
        raise FitError("component collapsed (weight -> 0)")
    means = (resp.T @ X) / nk[:, None]
    diff = X[None, :, :] - means[:, None, :]
    W = np.matmul((diff * resp.T[:, :, None]).transpose(0, 2, 1), diff)
    covs = _constrained_scatter(model, W, nk, float(n), state)
    covs = 0.5 * (covs + covs.transpose(0, 2, 1))
    covs = covs + ridge * np.eye(X.shape[1])
    return nk / n, means, covs


def _e_step(X, weights, means, covs):
    try:
        lp = component_logpdf(X, means, covs) + np.log(weights)
    except np.linalg.LinAlgError:
        raise FitError("covariance not positive definite") from None
    norm = _logsumexp_rows(lp)
    ll = float(norm.sum())
    if not math.isfinite(ll):
        raise FitError("non-finite log-likelihood")
    return ll, np.exp(lp - norm[:, None])


def ridge_for(X: np.ndarray) -> float:
    if X.shape[0] < 2:
        return RIDGE_FACTOR
    var = np.var(X, axis=0, ddof=1)
    return RIDGE_FACTOR * float(np.mean(var)) or RIDGE_FACTOR


def _kmeans_pp(X: np.ndarray, K: int, rng: np.random.Generator, n_lloyd: int = 50) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    C = np.array(centers)
    labels = None
    for _ in range(n_lloyd):
        dist = ((X[:, None, :] - C[None, :, :]) ** 2).sum(-1)
        new = np.argmin(dist, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(K):
            members = X[labels == k]
            if len(members):
                C[k] = members.mean(axis=0)
    return labels


def _canonical(labels: np.ndarray) -> tuple:
    mapping: dict[int, int] = {}
    return tuple(mapping.setdefault(int(v), len(mapping)) for v in labels)


def initial_partitions(X: np.ndarray, K: int, seed: int, restarts: int = N_RESTARTS) -> list[np.ndarray]:
    """Distinct k-means++ hard partitions used to start EM.

    Partitions that coincide up to relabeling are run only once; EM from
    either would end at the same likelihood.
    """
    if K == 1:
        return [np.zeros(X.shape[0], dtype=int)]
    rng = np.random.default_rng(seed)
    seen: set = set()
    out = []
    for _ in range(restarts):
        lab = _kmeans_pp(X, K, rng)
        key = _canonical(lab)
        if key not in seen:
            seen.add(key)
            out.append(np.array(key, dtype=int))
    return out


def _run_em_numpy(X, init_labels, K, model, tol, max_iter, ridge):
    resp = np.zeros((X.shape[0], K))
    resp[np.arange(X.shape[0]), init_labels] = 1.0
    state: dict = {}
    weights, means, covs = _m_step(X, resp, model, ridge, state)
    ll, resp = _e_step(X, weights, means, covs)
    history = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        weights, means, covs = _m_step(X, resp, model, ridge, state)
        new_ll, resp = _e_step(X, weights, means, covs)
        history.append(new_ll)
        done = abs(new_ll - ll) <= tol * abs(new_ll)
        ll = new_ll
        if done:
            converged = True
            break
    return weights, means, covs, ll, resp, it, converged, history


_STATUS_MESSAGES = {
    _em_kernels.COLLAPSED: "component collapsed (weight -> 0)",
    _em_kernels.NOT_PD: "covariance not positive definite",
    _em_kernels.NON_FINITE: "non-finite log-likelihood",
}


def _run_em_compiled(X, init_labels, K, model, tol, max_iter, ridge):
    N, D = X.shape
    resp = np.zeros((N, K))
    resp[np.arange(N), init_labels] = 1.0
    w = np.empty(K)
    mu = np.empty((K, D))
    covs = np.empty((K, D, D))
    history = np.empty(max_iter + 1)
    code = REQUIRED_MODELS.index(model)
    ll, it, converged, status = _em_kernels.run_em(
        np.ascontiguousarray(X), resp, code, ridge, tol, max_iter, w, mu, covs, history
    )
    if status != _em_kernels.OK:
        raise FitError(_STATUS_MESSAGES[status])
    return w, mu, covs, ll, resp, it, converged, history[: it + 1].tolist()


def _run_em(X, init_labels, K, model, tol, max_iter, ridge, compiled=True) -> MixtureModel:
    runner = _run_em_compiled if compiled and model in REQUIRED_MODELS else _run_em_numpy
    weights, means, covs, ll, resp, it, converged, history = runner(X, init_labels, K, model, tol, max_iter, ridge)
    return MixtureModel(
        model_name=model,
        weights=weights,
        means=means,
        covariances=covs,
        log_likelihood=ll,
        bic=bic(ll, count_free_params(model, X.shape[1], K), X.shape[0]),
        responsibilities=resp,
        n_iter=it,
        converged=converged,
        history=history,
    )


def em_fit(
    X,
    K: int,
    model: str = "VVV",
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 500,
    *,
    restarts: int = N_RESTARTS,
    partitions: list[np.ndarray] | None = None,
    compiled: bool = True,
) -> MixtureModel:
    """Fit a K-component mixture of the named family by EM.

    Starts from k-means++ partitions (``restarts`` of them, drawn from
    ``seed``) and keeps the run with the highest final log-likelihood.
    Raises :class:`FitError` if every start collapses.
    """
    _check_model(model)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if K < 1:
        raise ValueError("K must be at least 1")
    if X.shape[0] < K:
        raise ValueError(f"need at least K={K} points, got {X.shape[0]}")
    ridge = ridge_for(X)
    if partitions is None:
        partitions = initial_partitions(X, K, seed, restarts)
    best: MixtureModel | None = None
    last_err: Exception | None = None
    for labels in partitions:
        try:
            fit = _run_em(X, labels, K, model, tol, max_iter, ridge, compiled)
        except (FitError, np.linalg.LinAlgError) as exc:
            last_err = exc
            continue
        if best is None or fit.log_likelihood > best.log_likelihood:
            best = fit
    if best is None:
        raise FitError(f"{model} with K={K}: {last_err}")
    return best


@dataclass
class GridEntry:
    k: int
    model: str
    fit: MixtureModel | None
    error: str | None = None
    min_size: int = 0

    @property
    def ok(self) -> bool:
        return self.fit is not None


def fit_grid(X, g_max: int = 9, models=REQUIRED_MODELS, seed: int = 0, tol: float = 1e-8, max_iter: int = 500) -> list[GridEntry]:
    """Fit every (K, model) with K = 1..g_max; failures are kept as entries."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    entries = []
    for K in range(1, g_max + 1):
        if K > X.shape[0]:
            break
        parts = initial_partitions(X, K, seed)
        for model in models:
            _check_model(model)
            try:
                fit = em_fit(X, K, model, seed, tol, max_iter, partitions=parts)
            except (FitError, np.linalg.LinAlgError) as exc:
                log.debug("fit failed for K=%d %s: %s", K, model, exc)
                entries.append(GridEntry(K, model, None, str(exc)))
                continue
            sizes = np.bincount(fit.hard_assignment(), minlength=K)
            entries.append(GridEntry(K, model, fit, min_size=int(sizes.min())))
    return entries


def best_entry(entries: list[GridEntry], c_min: int = 0) -> GridEntry | None:
    """BIC argmax among successful fits whose components all hold >= c_min
    instances; ties go to fewer parameters, then smaller K, then name."""
    ok = [e for e in entries if e.ok and e.min_size >= c_min]
    if not ok:
        return None
    return min(ok, key=lambda e: (-e.fit.bic, e.fit.n_params, e.k, e.model))


def select_model(X, g_max: int = 9, models=REQUIRED_MODELS, c_min: int | None = None, seed: int = 0, **kw) -> MixtureModel:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 1:
        raise ValueError("no data")
    if c_min is None:
        c_min = X.shape[1] + 2
    entries = fit_grid(X, g_max, models, seed, **kw)
    best = best_entry(entries, c_min)
    if best is None:
        raise FitError("no (K, model) fit succeeded under the minimum-size constraint")
    return best.fit
