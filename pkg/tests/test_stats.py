import itertools

import numpy as np
import pytest

from datadiag.stats import (
    StatsError,
    compare_levels,
    cld_text,
    friedman,
    letter_display,
    posthoc_lsd,
    rank_scores,
    signed_rank_counts,
    wilcoxon_signed_rank,
)


def test_wilcoxon_examples():
    r = wilcoxon_signed_rank([1, 2, 3], alternative="greater")
    assert r.statistic == 6 and r.p_value == 0.125 and r.method == "exact"
    r = wilcoxon_signed_rank([1, 2, 3], [1, 2, 3])
    assert r.n_effective == 0 and r.p_value == 1.0
    assert wilcoxon_signed_rank([1, -2, 0, 3]).n_effective == 3


def test_two_sided_is_twice_min_tail():
    rng = np.random.default_rng(1)
    for _ in range(20):
        d = rng.normal(0.2, 1, 12)
        g = wilcoxon_signed_rank(d, alternative="greater").p_value
        l = wilcoxon_signed_rank(d, alternative="less").p_value
        assert wilcoxon_signed_rank(d).p_value == min(1.0, 2 * min(g, l))


def test_ties_use_approximation():
    r = wilcoxon_signed_rank([1, 1, 2, -3, 4])
    assert r.method == "approx"
    with pytest.raises(StatsError):
        wilcoxon_signed_rank([1, 1, 2], method="exact")


def test_counts_total():
    for n in range(0, 15):
        assert signed_rank_counts(n).sum() == 2**n


def test_compare_levels_drops_nan():
    x = [0.9, 0.8, np.nan, 0.85, 0.95, 0.9, 0.88]
    y = [0.5, 0.6, 0.7, 0.55, 0.4, 0.45, 0.52]
    c = compare_levels(x, y, 0.05)
    assert c.test_a.n_effective == 6
    assert c.test_b.p_value == 1 / 64
    assert c.verdict == (c.test_a.p_value < 0.05)


def test_rank_examples():
    assert rank_scores([[0.9, 0.7, 0.8]]).ranks.tolist() == [[3, 1, 2]]
    assert rank_scores([[0.9, 0.9, 0.1]]).ranks.tolist() == [[2.5, 2.5, 1]]
    assert rank_scores([[0.9, 0.7, 0.8]], higher_better=False).ranks.tolist() == [[1, 3, 2]]
    rt = rank_scores(np.arange(9.0)[None, :])
    assert rt.ranks[0, -1] == 9 and rt.ranks[0, 0] == 1
    rt = rank_scores([[1, 2], [np.nan, 1], [3, 1]], ["a", "b", "c"])
    assert rt.row_ids == ["a", "c"] and rt.dropped_rows == ["b"]


def test_friedman_consistent_rows():
    rt = rank_scores(np.tile([[0.9, 0.5, 0.1]], (10, 1)))
    fr = friedman(rt)
    assert abs(fr.statistic - 20.0) < 1e-12 and fr.p_value < 1e-4


def test_friedman_tie_correction():
    # rows: ranks (2.5, 2.5, 1), (3, 2, 1), (3, 1, 2); textbook corrected statistic
    S = np.array([[5, 5, 1], [3, 2, 1], [9, 1, 2]], float)
    rt = rank_scores(S)
    n, k = 3, 3
    R = rt.ranks.sum(axis=0)
    A = (rt.ranks**2).sum()
    C = n * k * (k + 1) ** 2 / 4
    # Conover's form: (k-1) * sum (R_j - n(k+1)/2)^2 / (A - C)
    expected = (k - 1) * np.sum((R - n * (k + 1) / 2) ** 2) / (A - C)
    assert abs(friedman(rt).statistic - expected) < 1e-12


def test_friedman_monotone_transform_invariance():
    rng = np.random.default_rng(2)
    S = rng.random((8, 4))
    assert friedman(rank_scores(S)).statistic == friedman(rank_scores(np.exp(5 * S))).statistic


def test_letters_best_is_a():
    S = np.column_stack([np.linspace(0.9, 0.95, 12), np.linspace(0.6, 0.65, 12), np.linspace(0.2, 0.25, 12)])
    S[::2, [1, 2]] = S[::2, [2, 1]]  # B and C swap on half the rows
    g = posthoc_lsd(rank_scores(S, column_ids=["A", "B", "C"]))
    assert g.letters["A"] == "a"
    assert g.letters["B"] == g.letters["C"] == "b"
    assert g.shares_letter("B", "C") and not g.shares_letter("A", "B")
    assert "Mean rank" in cld_text(g)


def test_letters_symmetric_reflexive():
    rng = np.random.default_rng(3)
    S = rng.random((15, 5)) + np.array([0.0, 0.1, 0.2, 0.5, 0.6])
    g = posthoc_lsd(rank_scores(S))
    for a, b in itertools.product(g.treatments, repeat=2):
        assert g.shares_letter(a, b) == g.shares_letter(b, a)
        assert g.shares_letter(a, a)
        if not g.significant[g.treatments.index(a), g.treatments.index(b)]:
            assert g.shares_letter(a, b)


def test_lsd_monotone_consistency():
    rng = np.random.default_rng(4)
    for _ in range(20):
        S = rng.random((10, 5)) + rng.random(5)
        g = posthoc_lsd(rank_scores(S))
        mr = np.array([g.mean_ranks[t] for t in g.treatments])
        for i, j, m in itertools.permutations(range(5), 3):
            if abs(mr[i] - mr[j]) > abs(mr[i] - mr[m]) and g.significant[i, m]:
                assert g.significant[i, j]


def test_letter_display_chain():
    # A-B differ, B and C, A and C do not: A=a, C=ab, B=b
    sig = np.zeros((3, 3), bool)
    sig[0, 1] = sig[1, 0] = True
    letters = letter_display(["A", "B", "C"], sig, np.array([3.0, 1.0, 2.0]))
    assert letters == {"A": "a", "B": "b", "C": "ab"}


def test_table_too_small():
    with pytest.raises(StatsError):
        friedman(rank_scores([[1.0, 2.0]]))
