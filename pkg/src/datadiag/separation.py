"""Projection-based separation index between two Gaussian subclasses.

For a direction ``a`` the two clusters are projected to 1-D and compared by
the gap between their projected means relative to their ``q``-scaled
projected spreads, ``q`` being the upper ``alpha/2`` normal quantile. The
index lies in [-1, 1]: negative when the clusters overlap, 0 when they just
touch, positive when a gap separates them. ``optimal_separation`` searches
for the direction that maximizes it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .special import upper_normal_quantile

GRAD_TOL = 1e-8
IMPROVE_TOL = 1e-12
FD_STEP = 1e-5


class ProjectionError(ValueError):
    """No valid projection exists (covariance not positive definite)."""


@dataclass(frozen=True)
class SeparationResult:
    j_star: float
    direction: np.ndarray
    alpha: float
    converged: bool
    iterations: int


def _check_spd(cov: np.ndarray) -> None:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ProjectionError("covariance must be square")
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
        raise ProjectionError("covariance is not symmetric")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ProjectionError("covariance is not positive definite") from None


def _unpack(c):
    """Accept a GaussianComponent or a (mean, covariance) pair."""
    if hasattr(c, "mean"):
        return np.asarray(c.mean, dtype=float).reshape(-1), np.atleast_2d(np.asarray(c.covariance, dtype=float))
    mean, cov = c
    return np.asarray(mean, dtype=float).reshape(-1), np.atleast_2d(np.asarray(cov, dtype=float))


def _j(a, delta, s1, s2, q):
    gap = a @ delta
    if gap < 0:
        a = -a
        gap = -gap
    spread = q * (np.sqrt(a @ s1 @ a) + np.sqrt(a @ s2 @ a))
    return (gap - spread) / (gap + spread)


def j_index(a, c1, c2, alpha: float = 0.05) -> float:
    """Separation index of two components along direction ``a``."""
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    a = np.asarray(a, dtype=float).reshape(-1)
    if not np.any(a):
        raise ValueError("projection direction must be nonzero")
    m1, s1 = _unpack(c1)
    m2, s2 = _unpack(c2)
    _check_spd(s1)
    _check_spd(s2)
    return float(_j(a, m2 - m1, s1, s2, upper_normal_quantile(alpha / 2.0)))


def _tangent_basis(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis (D x D-1) of the complement of unit vector ``a``."""
    q, _ = np.linalg.qr(np.column_stack([a, np.eye(a.size)]))
    return q[:, 1:a.size]


def _ascend(a0, f, max_iter):
    """Newton ascent of a scale-invariant f over unit directions.

    Derivatives are central differences in the tangent space at the current
    point; when the Hessian is not negative definite the step falls back to
    the gradient, and every step is backtracked until f does not decrease.
    """
    a = a0 / np.linalg.norm(a0)
    fa = f(a)
    dim = a.size
    if dim == 1:
        return a, fa, True, 0
    h = FD_STEP
    for it in range(1, max_iter + 1):
        B = _tangent_basis(a)
        m = dim - 1

        def g_t(t):
            v = a + B @ t
            return f(v / np.linalg.norm(v))

        grad = np.empty(m)
        hess = np.empty((m, m))
        e = np.eye(m) * h
        for i in range(m):
            fp, fm = g_t(e[i]), g_t(-e[i])
            grad[i] = (fp - fm) / (2 * h)
            hess[i, i] = (fp - 2 * fa + fm) / (h * h)
            for j in range(i):
                hess[i, j] = hess[j, i] = (
                    g_t(e[i] + e[j]) - g_t(e[i] - e[j]) - g_t(-e[i] + e[j]) + g_t(-e[i] - e[j])
                ) / (4 * h * h)
        if np.linalg.norm(grad) < GRAD_TOL:
            return a, fa, True, it
        step = None
        if np.all(np.linalg.eigvalsh(hess) < 0):
            step = -np.linalg.solve(hess, grad)
        if step is None or step @ grad <= 0:
            step = grad
        t = 1.0
        improved = False
        while t > 1e-12:
            v = a + B @ (t * step)
            v = v / np.linalg.norm(v)
            fv = f(v)
            if fv >= fa:
                improved = True
                break
            t *= 0.5
        if not improved:
            return a, fa, True, it
        gain = fv - fa
        a, fa = v, fv
        if gain < IMPROVE_TOL:
            return a, fa, True, it
    return a, fa, False, max_iter


def optimal_separation(c1, c2, alpha: float = 0.05, max_iter: int = 100) -> SeparationResult:
    """Maximize the separation index over projection directions.

    Two searches are run, one from ``(S1 + S2)^-1 (m2 - m1)`` and one from
    ``m2 - m1``; the larger final index wins. Directions are reported with
    the orientation that puts the second component's projected mean on the
    right.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    m1, s1 = _unpack(c1)
    m2, s2 = _unpack(c2)
    _check_spd(s1)
    _check_spd(s2)
    q = upper_normal_quantile(alpha / 2.0)
    delta = m2 - m1
    dim = delta.size

    if not np.any(delta):
        # Every direction gives -1 when the means coincide.
        if np.allclose(s1, s2):
            return SeparationResult(-1.0, np.eye(dim)[0], alpha, True, 0)
        vals, vecs = np.linalg.eig(np.linalg.solve(s1, s2))
        k = int(np.argmax(np.abs(np.log(np.abs(vals.real)))))
        a = vecs[:, k].real
        a = a / np.linalg.norm(a)
        return SeparationResult(float(_j(a, delta, s1, s2, q)), a, alpha, False, 0)

    def f(a):
        return _j(a, delta, s1, s2, q)

    best = None
    for a0 in (np.linalg.solve(s1 + s2, delta), delta):
        if not np.any(a0):
            continue
        a, val, conv, its = _ascend(a0, f, max_iter)
        if best is None or val > best[1]:
            best = (a, val, conv, its)
    a, val, conv, its = best
    if a @ delta < 0:
        a = -a
    return SeparationResult(float(val), a, alpha, conv, its)
