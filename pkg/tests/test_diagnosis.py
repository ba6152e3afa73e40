import numpy as np
import pytest
from scipy.stats import f_oneway

from datadiag.data import Dataset, SubclassAssignment
from datadiag.diagnosis import (
    DiagnosisError,
    EarlyExit,
    build_iro,
    ddp_levels,
    detect_noise,
    diagnose,
    dispersion_stats,
    distances_to_median,
    knn_indices,
    noise_from_estimates,
    permdisp_test,
)
from datadiag.gmm import GaussianComponent


def far_classes(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (80, 2)), rng.normal((10, 10), 1, (30, 2))])
    return Dataset(X, np.r_[np.zeros(80), np.ones(30)], id="far")


def test_far_classes_report():
    r = diagnose(far_classes(), n_perm=99)
    assert not isinstance(r, EarlyExit)
    assert r.noise.total_noise == 0 and r.noise.nr is None
    order = r.iro.subclass_order
    for i, a in enumerate(order):
        for j, b in enumerate(order):
            if j < i and a[0] != b[0]:
                assert r.iro.separation(a, b) > 0.21
    assert r.ddp.to_dict() == {"ir_level": "Low", "disjunct_level": "Low", "overlap_level": "Low"}
    d = r.to_dict()
    assert set(d) == {"summary", "subclasses", "iro", "noise", "dispersion", "ddp", "warnings"}
    text = r.to_text()
    for heading in ("Dataset summary", "Subclass detection", "IRO matrix", "Noise matrix", "Noise per subclass", "Dispersion", "Degradation profile"):
        assert heading in text


def test_early_exit():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(0, 1, (60, 2)), rng.normal(5, 1, (4, 2))])
    # default c_min = D + 2 = 4: a 4-instance Positive class is allowed
    r = diagnose(Dataset(X, np.r_[np.zeros(60), np.ones(4)]), n_perm=99)
    assert not isinstance(r, EarlyExit)
    r = diagnose(Dataset(X, np.r_[np.zeros(60), np.ones(4)]), c_min=5, n_perm=99)
    assert isinstance(r, EarlyExit) and r.c_min == 5 and r.small_subclasses == {"P-01": 4}
    assert not r.detection["Positive"].c_min_met


def test_needs_two_per_class():
    with pytest.raises(DiagnosisError):
        diagnose(Dataset(np.arange(5.0)[:, None], np.array([0, 0, 0, 0, 1])))


def test_subclass_names_by_size():
    rng = np.random.default_rng(2)
    X = np.vstack([rng.normal(0, 0.5, (30, 2)), rng.normal((8, 0), 0.5, (60, 2)), rng.normal((0, 8), 0.5, (40, 2))])
    r = diagnose(Dataset(X, np.r_[np.zeros(90), np.ones(40)]), n_perm=99)
    counts = r.assignment.per_subclass_counts
    assert counts["N-01"] >= counts["N-02"]
    assert r.assignment.order[:2] == ["N-01", "N-02"]


def test_iro_duplicated_component():
    comp = GaussianComponent(0.5, np.zeros(2), np.eye(2))
    assign = SubclassAssignment(np.array(["N-01"] * 10 + ["N-02"] * 10 + ["P-01"] * 5, dtype=object))
    other = GaussianComponent(0.5, np.array([4.0, 0.0]), np.eye(2))
    iro = build_iro(assign, {"N-01": comp, "N-02": comp, "P-01": other})
    assert iro.separation("N-01", "N-02") == -1.0
    assert iro.upper(0, 1) == 1.0 and iro.upper(0, 2) == 2.0
    m = iro.matrix()
    assert m[0][0] == 10 and m[1][0] == -1.0


def test_iro_unknown_projection():
    bad = GaussianComponent(0.5, np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    good = GaussianComponent(0.5, np.ones(2), np.eye(2))
    assign = SubclassAssignment(np.array(["N-01"] * 3 + ["P-01"] * 3, dtype=object))
    warnings = []
    iro = build_iro(assign, {"N-01": bad, "P-01": good}, warnings=warnings)
    assert iro.has_unknown and warnings
    assert ddp_levels(1.0, 2, 5.0, overlap_known=not iro.has_unknown).overlap_level == "Unknown"


def test_knn_excludes_self_and_breaks_ties_low():
    X = np.array([[0.0], [1.0], [-1.0], [3.0]])
    nn = knn_indices(X, 2)
    assert nn[0].tolist() == [1, 2]
    assert 0 not in nn[0]


def test_noise_vote_and_label_split():
    # N-01 around 0, P-01 around 10, one Positive mislabeled inside N-01
    X = np.r_[np.linspace(-1, 1, 9), 0.05, np.linspace(9, 11, 6)][:, None]
    ids = np.array(["N-01"] * 9 + ["P-01"] * 7, dtype=object)
    assign = SubclassAssignment(ids)
    from datadiag.diagnosis import IROMatrix

    far = IROMatrix(assign.order, np.array([9, 7]), np.ones((2, 2)), [[None, None], [0.5, None]])
    rep = detect_noise(X, assign, 3, far, 0.2)
    assert rep.is_noise.tolist().count(True) == 1 and rep.is_noise[9]
    assert rep.per_subclass[1]["noise_label"] == 1
    assert rep.nlr == 15.0 and rep.nor is None
    near = IROMatrix(assign.order, np.array([9, 7]), np.ones((2, 2)), [[None, None], [0.1, None]])
    rep = detect_noise(X, assign, 3, near, 0.2)
    assert rep.per_subclass[1]["noise_overlap"] == 1 and rep.nr == rep.nor == 15.0


def test_same_class_moves_are_not_noise():
    ids = np.array(["N-01"] * 5 + ["N-02"] * 5 + ["P-01"] * 5, dtype=object)
    a = SubclassAssignment(ids)
    est = a.index().copy()
    est[0] = 1
    rep = noise_from_estimates(a, est, lambda i, j: None)
    assert rep.total_noise == 0 and rep.noise_matrix[0, 1] == 1


def test_dispersion_hand_values():
    a = SubclassAssignment(np.array(["N-01"] * 3 + ["P-01"] * 2, dtype=object))
    X = np.array([[0.0], [2.0], [4.0], [7.0], [7.0]])
    st = dispersion_stats(X, a)
    assert st["N-01"]["euclidean"]["mean"] == pytest.approx(4 / 3)
    assert st["N-01"]["euclidean"]["std"] == pytest.approx(np.std([2, 0, 2], ddof=1))
    assert st["P-01"]["euclidean"] == {"mean": 0.0, "std": 0.0}
    assert st["N-01"]["manhattan"]["mean"] == pytest.approx(4 / 3)


def test_distances_to_median():
    X = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
    assert distances_to_median(X, "euclidean").tolist() == pytest.approx([np.sqrt(2), np.sqrt(13), 0.0])
    assert distances_to_median(X, "manhattan").tolist() == pytest.approx([2.0, 5.0, 0.0])
    assert distances_to_median(X, "mahalanobis").shape == (3,)
    with pytest.raises(ValueError):
        distances_to_median(X, "cosine")


def test_permdisp_matches_anova_f():
    rng = np.random.default_rng(3)
    z = np.abs(rng.normal(size=60)) * np.repeat([1.0, 1.5, 2.0], 20)
    groups = np.repeat([0, 1, 2], 20)
    t = permdisp_test(z, groups, 199, rng)
    assert t["F"] == pytest.approx(f_oneway(z[:20], z[20:40], z[40:]).statistic, rel=1e-12)
    assert t["df"] == [2, 57]
    assert 1 / 200 <= t["p_value"] <= 1


def test_permdisp_reproducible():
    z = np.random.default_rng(4).random(30)
    g = np.repeat([0, 1], 15)
    assert permdisp_test(z, g, 99, 7) == permdisp_test(z, g, 99, 7)


def test_ddp_levels():
    assert ddp_levels(4.7, 5, None).to_dict() == {"ir_level": "Low", "disjunct_level": "Low", "overlap_level": "Low"}
    assert ddp_levels(13.76, 5, 0.5).ir_level == "High"
    assert ddp_levels(1.0, 11, 0.5).disjunct_level == "High"
