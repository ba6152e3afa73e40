"""Distribution functions shared by the separation index and the tests."""

import math

from scipy import special as _sp


def normal_cdf(x: float) -> float:
    return float(_sp.ndtr(x))


def normal_sf(x: float) -> float:
    return float(_sp.ndtr(-x))


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile probability must lie in (0, 1), got {p}")
    return float(_sp.ndtri(p))


def upper_normal_quantile(alpha: float) -> float:
    """``z`` with ``P(Z > z) = alpha``."""
    return -normal_quantile(alpha)


def chisq_cdf(x: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 0.0
    return float(_sp.gammainc(df / 2.0, x / 2.0))


def chisq_sf(x: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    return float(_sp.gammaincc(df / 2.0, x / 2.0))


def t_cdf(x: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x == 0:
        return 0.5
    # Regularized incomplete beta form.
    tail = 0.5 * float(_sp.betainc(df / 2.0, 0.5, df / (df + x * x)))
    return 1.0 - tail if x > 0 else tail


def t_sf(x: float, df: float) -> float:
    return t_cdf(-x, df)


def t_quantile(p: float, df: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("quantile probability must lie in (0, 1)")
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(df):
        return normal_quantile(p)
    return float(_sp.stdtrit(df, p))
