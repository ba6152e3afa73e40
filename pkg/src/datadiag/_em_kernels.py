"""Compiled EM loop for the closed-form covariance families.

Mirrors ``gmm._run_em_numpy`` step for step; the numpy version stays as the
readable reference and as the path for the iterative ellipsoidal families.
"""

import math

import numpy as np
from numba import njit

# Index into gmm.REQUIRED_MODELS.
EII, VII, EEI, VEI, EVI, VVI, EEE, VVV = range(8)

OK, COLLAPSED, NOT_PD, NON_FINITE = 0, 1, 2, 3

_INNER_TOL = 1e-10
_INNER_MAX = 200
_EXP_FLOOR = -40.0


# Reassociation lets the per-component sums vectorize.
@njit(cache=True, fastmath={"reassoc", "contract"})
def _stats(XT, R, nk, mu, W, tmp):
    # Component-major layout (R is K x N, XT is D x N) so the inner loops
    # run over contiguous instances.
    D, N = XT.shape
    K = R.shape[0]
    for k in range(K):
        s = 0.0
        for n in range(N):
            s += R[k, n]
        nk[k] = s
        if s < 1.0:
            return False
    for k in range(K):
        for i in range(D):
            a = 0.0
            for n in range(N):
                a += R[k, n] * XT[i, n]
            mu[k, i] = a / nk[k]
        for i in range(D):
            m = mu[k, i]
            for n in range(N):
                tmp[i, n] = XT[i, n] - m
        for i in range(D):
            for j in range(i, D):
                a = 0.0
                for n in range(N):
                    a += R[k, n] * tmp[i, n] * tmp[j, n]
                W[k, i, j] = a
                W[k, j, i] = a
    return True


@njit(cache=True)
def _geomean(v):
    s = 0.0
    for x in v:
        s += math.log(x)
    return math.exp(s / v.shape[0])


@njit(cache=True)
def _constrain(code, W, nk, n, covs, ridge):
    K, D, _ = W.shape
    covs[:] = 0.0
    if code == EII:
        t = 0.0
        for k in range(K):
            for i in range(D):
                t += W[k, i, i]
        lam = t / (n * D)
        for k in range(K):
            for i in range(D):
                covs[k, i, i] = lam
    elif code == VII:
        for k in range(K):
            t = 0.0
            for i in range(D):
                t += W[k, i, i]
            for i in range(D):
                covs[k, i, i] = t / (nk[k] * D)
    elif code == EEI:
        for i in range(D):
            t = 0.0
            for k in range(K):
                t += W[k, i, i]
            for k in range(K):
                covs[k, i, i] = t / n
    elif code == VVI:
        for k in range(K):
            for i in range(D):
                covs[k, i, i] = W[k, i, i] / nk[k]
    elif code == EVI:
        geo = np.empty(K)
        for k in range(K):
            dk = np.empty(D)
            for i in range(D):
                dk[i] = W[k, i, i]
                if dk[i] <= 0.0:
                    return False
            geo[k] = _geomean(dk)
        lam = geo.sum() / n
        for k in range(K):
            for i in range(D):
                covs[k, i, i] = lam * W[k, i, i] / geo[k]
    elif code == VEI:
        dk = np.empty((K, D))
        lam = np.empty(K)
        for k in range(K):
            t = 0.0
            for i in range(D):
                dk[k, i] = W[k, i, i]
                t += dk[k, i]
            lam[k] = t / (nk[k] * D)
        shape = np.empty(D)
        prev = 0.0
        for it in range(_INNER_MAX):
            for i in range(D):
                s = 0.0
                for k in range(K):
                    if lam[k] <= 0.0:
                        return False
                    s += dk[k, i] / lam[k]
                if s <= 0.0:
                    return False
                shape[i] = s
            g = _geomean(shape)
            for i in range(D):
                shape[i] /= g
            obj = 0.0
            for k in range(K):
                t = 0.0
                for i in range(D):
                    t += dk[k, i] / shape[i]
                lam[k] = t / (nk[k] * D)
                if lam[k] <= 0.0:
                    return False
                obj += nk[k] * math.log(lam[k])
            if it > 0 and abs(obj - prev) <= _INNER_TOL * (1.0 + abs(obj)):
                break
            prev = obj
        for k in range(K):
            for i in range(D):
                covs[k, i, i] = lam[k] * shape[i]
    elif code == EEE:
        for i in range(D):
            for j in range(D):
                t = 0.0
                for k in range(K):
                    t += W[k, i, j]
                for k in range(K):
                    covs[k, i, j] = t / n
    else:
        for k in range(K):
            for i in range(D):
                for j in range(D):
                    covs[k, i, j] = W[k, i, j] / nk[k]
    for k in range(K):
        for i in range(D):
            covs[k, i, i] += ridge
    return True


@njit(cache=True)
def _cholesky(A, L):
    D = A.shape[0]
    for i in range(D):
        for j in range(i + 1):
            s = A[i, j]
            for m in range(j):
                s -= L[i, m] * L[j, m]
            if i == j:
                if s <= 0.0:
                    return False
                L[i, i] = math.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
        for j in range(i + 1, D):
            L[i, j] = 0.0
    return True


# exp() split into loops LLVM can vectorize: Cody-Waite reduction by
# ln 2, a degree-13 Taylor polynomial on |r| <= ln2/2 (within 1 ulp of libm),
# and the power of two assembled from the exponent bits.
_LN2_HI = 0.6931471803691238
_LN2_LO = 1.9082149292705877e-10
_INV_LN2 = 1.4426950408889634
_SHIFTER = 6755399441055744.0  # 1.5 * 2**52; rounds to nearest integer


@njit(cache=True)
def _exp_nonpos(d, out, fb):
    """out = exp(d) for d <= 0 (values below -700 give ~0); fb is scratch."""
    ib = fb.view(np.int64)
    n = d.shape[0]
    for i in range(n):
        x = max(d[i], -700.0)
        sh = x * _INV_LN2 + _SHIFTER
        fb[i] = sh
        kf = sh - _SHIFTER
        r = (x - kf * _LN2_HI) - kf * _LN2_LO
        p = 1.0 / 6227020800.0
        p = p * r + 1.0 / 479001600.0
        p = p * r + 1.0 / 39916800.0
        p = p * r + 1.0 / 3628800.0
        p = p * r + 1.0 / 362880.0
        p = p * r + 1.0 / 40320.0
        p = p * r + 1.0 / 5040.0
        p = p * r + 1.0 / 720.0
        p = p * r + 1.0 / 120.0
        p = p * r + 1.0 / 24.0
        p = p * r + 1.0 / 6.0
        p = p * r + 0.5
        p = p * r + 1.0
        out[i] = p * r + 1.0
    # low mantissa bits of the shifted value hold the integer exponent
    for i in range(n):
        ib[i] = (ib[i] + 1023) << 52
    for i in range(n):
        out[i] *= fb[i]


@njit(cache=True)
def _estep(XT, w, mu, covs, R, Z, q, mx, s):
    D, N = XT.shape
    K = w.shape[0]
    L = np.empty((D, D))
    c = D * math.log(2.0 * math.pi)
    for k in range(K):
        if not _cholesky(covs[k], L):
            return 0.0, NOT_PD
        ld = 0.0
        for i in range(D):
            ld += math.log(L[i, i])
        const = math.log(w[k]) - 0.5 * (2.0 * ld + c)
        for n in range(N):
            q[n] = 0.0
        # forward substitution L z = x - mu, one coordinate at a time
        for i in range(D):
            r = 1.0 / L[i, i]
            m = mu[k, i]
            for n in range(N):
                Z[i, n] = XT[i, n] - m
            for j in range(i):
                lij = L[i, j]
                for n in range(N):
                    Z[i, n] -= lij * Z[j, n]
            for n in range(N):
                v = Z[i, n] * r
                Z[i, n] = v
                q[n] += v * v
        for n in range(N):
            R[k, n] = const - 0.5 * q[n]
    for n in range(N):
        mx[n] = R[0, n]
    for k in range(1, K):
        for n in range(N):
            if R[k, n] > mx[n]:
                mx[n] = R[k, n]
    for n in range(N):
        s[n] = 0.0
    d = Z[0]
    for k in range(K):
        for n in range(N):
            d[n] = R[k, n] - mx[n]
        _exp_nonpos(d, R[k], q)
        for n in range(N):
            # exp(-40) * K is below the rounding unit of a sum that is >= 1
            e = R[k, n] if d[n] >= _EXP_FLOOR else 0.0
            R[k, n] = e
            s[n] += e
    ll = 0.0
    for n in range(N):
        ll += mx[n] + math.log(s[n])
        s[n] = 1.0 / s[n]
    for k in range(K):
        for n in range(N):
            R[k, n] *= s[n]
    if not math.isfinite(ll):
        return ll, NON_FINITE
    return ll, OK


@njit(cache=True)
def run_em(X, resp, code, ridge, tol, max_iter, w, mu, covs, history):
    """EM from the responsibilities in ``resp`` (updated in place).

    Returns (log-likelihood, iterations, converged, status); ``history`` gets
    the log-likelihood after every E-step and must hold max_iter + 1 slots.
    """
    N, D = X.shape
    K = resp.shape[1]
    XT = np.ascontiguousarray(X.T)
    R = np.ascontiguousarray(resp.T)
    Z = np.empty((D, N))
    q = np.empty(N)
    mx = np.empty(N)
    s = np.empty(N)
    nk = np.empty(K)
    W = np.empty((K, D, D))
    ll = 0.0
    it = 0
    converged = False
    status = OK
    while True:
        if not _stats(XT, R, nk, mu, W, Z):
            status = COLLAPSED
            break
        if not _constrain(code, W, nk, float(N), covs, ridge):
            status = NOT_PD
            break
        for k in range(K):
            w[k] = nk[k] / N
        new_ll, status = _estep(XT, w, mu, covs, R, Z, q, mx, s)
        if status != OK:
            ll = new_ll
            break
        history[it] = new_ll
        done = it > 0 and abs(new_ll - ll) <= tol * abs(new_ll)
        ll = new_ll
        if done:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
    resp[:, :] = R.T
    return ll, it, converged, status
