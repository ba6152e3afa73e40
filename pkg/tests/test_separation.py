import math
from statistics import NormalDist

import numpy as np
import pytest

from datadiag.gmm import GaussianComponent
from datadiag.separation import ProjectionError, j_index, optimal_separation
from datadiag import special

Z975 = NormalDist().inv_cdf(0.975)


def test_j_index_identical_is_minus_one():
    c = (np.array([1.0, 2.0]), np.array([[2.0, 0.1], [0.1, 1.0]]))
    assert j_index([1.0, 0.0], c, c) == -1.0
    r = optimal_separation(c, c)
    assert r.j_star == -1.0
    assert np.array_equal(r.direction, [1.0, 0.0])


def test_j_index_touching_is_zero():
    gap = 2 * Z975
    assert abs(j_index([1.0], (np.zeros(1), np.eye(1)), (np.array([gap]), np.eye(1)))) < 1e-12


def test_j_index_orientation_and_scale():
    c1 = (np.zeros(2), np.eye(2))
    c2 = (np.array([3.0, 1.0]), np.diag([2.0, 0.5]))
    a = np.array([0.8, 0.3])
    assert j_index(a, c1, c2) == j_index(-a, c1, c2)
    assert abs(j_index(a, c1, c2) - j_index(5 * a, c1, c2)) < 1e-14


def test_two_dim_reduces_to_one_dim():
    r = optimal_separation((np.zeros(2), np.eye(2)), (np.array([10.0, 0.0]), np.eye(2)))
    assert abs(r.j_star - (10 - 2 * Z975) / (10 + 2 * Z975)) < 1e-9
    assert np.allclose(r.direction, [1.0, 0.0], atol=1e-6)
    assert abs(np.linalg.norm(r.direction) - 1) < 1e-10
    assert r.converged


def test_optimum_beats_random_directions():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    c1 = (np.zeros(3), A @ A.T + np.eye(3))
    c2 = (np.array([2.0, -1.0, 3.0]), np.diag([0.5, 2.0, 1.0]))
    best = optimal_separation(c1, c2).j_star
    for _ in range(500):
        assert j_index(rng.normal(size=3), c1, c2) <= best + 1e-9
    assert -1 <= best <= 1


def test_accepts_gaussian_component():
    c1 = GaussianComponent(0.5, np.zeros(2), np.eye(2))
    c2 = GaussianComponent(0.5, np.array([4.0, 4.0]), np.eye(2))
    assert optimal_separation(c1, c2).j_star > 0


def test_rejects_bad_covariance():
    with pytest.raises(ProjectionError):
        optimal_separation((np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]])), (np.ones(2), np.eye(2)))
    with pytest.raises(ValueError):
        j_index([1.0], (np.zeros(1), np.eye(1)), (np.ones(1), np.eye(1)), alpha=0.7)


def test_special_functions():
    assert abs(special.normal_quantile(0.975) - 1.959963984540054) < 1.2e-9
    # series-expansion oracle for Phi: 1/2 + phi-series
    x = 1.3
    series = sum((-1) ** n * x ** (2 * n + 1) / (2**n * math.factorial(n) * (2 * n + 1)) for n in range(40))
    assert abs(special.normal_cdf(x) - (0.5 + series / math.sqrt(2 * math.pi))) < 1e-14
    assert special.chisq_cdf(0, 3) == 0.0
    assert special.t_cdf(0, 7) == 0.5
    # chi-square with 2 df has cdf 1 - exp(-x/2)
    assert abs(special.chisq_cdf(3.0, 2) - (1 - math.exp(-1.5))) < 1e-14
    # t with 1 df is Cauchy
    assert abs(special.t_cdf(2.0, 1) - (0.5 + math.atan(2.0) / math.pi)) < 1e-14
    assert abs(special.t_quantile(special.t_cdf(1.7, 9), 9) - 1.7) < 1e-10
