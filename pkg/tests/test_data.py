import numpy as np
import pytest

from datadiag.data import (
    DataError,
    Dataset,
    SubclassAssignment,
    imbalance_ratio,
    load_csv,
    read_csv_table,
    standardize,
    standardize_matrix,
    stratified_split,
    summarize,
    write_csv,
)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_minimal(tmp_path):
    p = _write(tmp_path, "x,y\n1,a\n2,b\n3,a\n")
    d = load_csv(p, "y", "a")
    assert (d.n, d.d, d.n_positive, d.n_negative) == (3, 1, 2, 1)
    assert d.class_values == ("b", "a")
    assert d.id == "d"


def test_load_drops_bad_row(tmp_path):
    p = _write(tmp_path, "f1,f2,c\n1,2,p\n3,oops,n\n4,5,n\n")
    d = load_csv(p, "c", "p")
    assert d.n == 2 and d.dropped_rows == 1
    assert d.features.tolist() == [[1.0, 2.0], [4.0, 5.0]]


@pytest.mark.parametrize(
    "text, label, pos, msg",
    [
        ("x,y\n1,a\n2,a\n", "y", "a", "fewer than 2"),
        ("x,y\n1,a\n2,b\n3,c\n", "y", "a", "binary"),
        ("x,y\n1,a\n2,b\n", "z", "a", "not found"),
        ("x,y\n1,a\n2,b\n", "y", "q", "positive value"),
        ("x,y\nu,a\nv,b\nw,a\n", "y", "a", "categorical"),
    ],
)
def test_load_errors(tmp_path, text, label, pos, msg):
    with pytest.raises(DataError, match=msg):
        load_csv(_write(tmp_path, text), label, pos)


def test_missing_file():
    with pytest.raises(DataError):
        load_csv("/nonexistent/x.csv", "c", "p")


def test_read_table_keeps_raw_cells(tmp_path):
    p = _write(tmp_path, "a,c\n1.50,p\nNA,n\n2,n\n")
    d, header, raw = read_csv_table(p, "c", "p")
    assert header == ["a", "c"] and raw == [["1.50", "p"], ["2", "n"]]
    assert d.dropped_rows == 1


def test_write_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    d = Dataset(rng.normal(size=(20, 3)), np.r_[np.zeros(15), np.ones(5)], class_values=("neg", "pos"))
    p = tmp_path / "out.csv"
    write_csv(d, p)
    back = load_csv(p, "class", "pos")
    assert np.array_equal(back.features, d.features)
    assert np.array_equal(back.labels, d.labels)


def test_summary_ir():
    d = Dataset(np.zeros((768, 1)) + np.arange(768)[:, None], np.r_[np.ones(268), np.zeros(500)])
    s = summarize(d)
    assert round(s.imbalance_ratio, 2) == 1.87
    assert s.positive_count == 268 and s.majority == "Negative"
    assert imbalance_ratio(np.r_[np.ones(100), np.zeros(100)]) == 1.0


def test_summary_duplicates():
    X = np.array([[1.0], [1.0], [2.0], [3.0]])
    s = summarize(Dataset(X, np.array([0, 0, 1, 0])))
    assert s.duplicate_instances == 1
    # same features but different labels are not duplicates
    s = summarize(Dataset(X, np.array([0, 1, 1, 0])))
    assert s.duplicate_instances == 0


def test_standardize_sample_sd():
    Z = standardize_matrix(np.array([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]]))
    assert Z[:, 0].tolist() == [-1.0, 0.0, 1.0]
    assert Z[:, 1].tolist() == [0.0, 0.0, 0.0]
    rng = np.random.default_rng(1)
    Z1 = standardize_matrix(rng.normal(size=(50, 3)))
    assert np.allclose(standardize_matrix(Z1), Z1, atol=1e-12)
    d = standardize(Dataset(rng.normal(size=(10, 2)), np.r_[np.zeros(5), np.ones(5)]))
    assert np.allclose(d.features.std(axis=0, ddof=1), 1.0)


def test_stratified_split():
    d = Dataset(np.arange(500.0)[:, None], np.r_[np.ones(100), np.zeros(400)])
    tr, te = stratified_split(d, 0.3, seed=4)
    assert (te.n_positive, te.n_negative) == (30, 120)
    assert tr.n + te.n == 500
    tr2, te2 = stratified_split(d, 0.3, seed=4)
    assert np.array_equal(te.features, te2.features)
    small = Dataset(np.arange(4.0)[:, None], np.array([1, 1, 0, 0]))
    a, b = stratified_split(small, 0.5, seed=0)
    assert (a.n_positive, a.n_negative, b.n_positive, b.n_negative) == (1, 1, 1, 1)


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), np.array([0, 1]))
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), np.array([0, 2]))


def test_assignment():
    a = SubclassAssignment(np.array(["P-01", "N-02", "N-01", "P-01"], dtype=object))
    assert a.order == ["N-01", "N-02", "P-01"]
    assert a.per_subclass_counts == {"N-01": 1, "N-02": 1, "P-01": 2}
    assert a.index().tolist() == [2, 1, 0, 2]
    a.check(np.array([1, 0, 0, 1]))
    with pytest.raises(DataError):
        a.check(np.array([0, 0, 0, 1]))
