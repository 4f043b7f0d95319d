import io
import math

import numpy as np
import pytest
from scipy import sparse

from cdkit.data import (
    Dataset,
    DatasetFormatError,
    SyntheticSpec,
    generate_linear_regression,
    gram_condition,
    load_dataset,
    parse_libsvm,
    read_any,
    save_dataset,
    write_libsvm,
)
from tests.conftest import SMALL_LIBSVM


def random_sparse_classification(seed, n=40, p=12, density=0.3):
    r = np.random.default_rng(seed)
    X = sparse.random(n, p, density=density, random_state=r, format="csr",
                      data_rvs=lambda k: r.standard_normal(k) * 10 ** r.uniform(-5, 5, k))
    labels = np.where(r.random(n) < 0.5, -1.0, 1.0)
    return Dataset(X, labels, "classification")


# ------------------------------------------------------------- generator

def test_generator_kappa_one():
    ds = generate_linear_regression(SyntheticSpec(30, 10, 1.0, seed=2))
    s = np.linalg.svd(ds.matrix, compute_uv=False)
    np.testing.assert_allclose(s, 1.0, rtol=1e-12)
    assert gram_condition(ds.matrix)[2] == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("kappa", [10.0, 100.0, 1e3])
def test_generator_condition_number(kappa):
    ds = generate_linear_regression(SyntheticSpec(200, 100, kappa, seed=5))
    assert gram_condition(ds.matrix)[2] == pytest.approx(kappa, rel=1e-6)


def test_generator_kappa_inf():
    ds = generate_linear_regression(SyntheticSpec(200, 100, math.inf, seed=5))
    lo, hi, _ = gram_condition(ds.matrix)
    assert lo <= 1e-12
    assert hi == pytest.approx(1.0, rel=1e-10)
    eig = np.linalg.eigvalsh(ds.matrix.T @ ds.matrix)
    assert eig[1] == pytest.approx(1e-4, rel=1e-8)  # second-smallest set by the spread


def test_generator_deterministic_and_seed_sensitive():
    a = generate_linear_regression(SyntheticSpec(50, 20, 100.0, seed=9))
    b = generate_linear_regression(SyntheticSpec(50, 20, 100.0, seed=9))
    c = generate_linear_regression(SyntheticSpec(50, 20, 100.0, seed=10))
    assert np.array_equal(a.matrix, b.matrix) and np.array_equal(a.target, b.target)
    assert np.array_equal(a.ground_truth, b.ground_truth)
    assert not np.array_equal(a.matrix, c.matrix)


def test_generator_noise_free_response():
    ds = generate_linear_regression(SyntheticSpec(30, 10, 10.0, sigma=0.0, seed=1))
    np.testing.assert_allclose(ds.target, ds.matrix @ ds.ground_truth, rtol=0, atol=1e-12)


def test_generator_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(kappa=0.5)
    with pytest.warns(UserWarning):
        SyntheticSpec(n_samples=5, dim=10)


# ---------------------------------------------------------------- LIBSVM

def test_parse_single_line():
    ds = parse_libsvm(["+1 2:0.5 4:-1.0"])
    assert ds.kind == "classification"
    assert ds.target.tolist() == [1.0]
    assert ds.dim >= 4
    row = ds.matrix.toarray()[0]
    assert row[1] == 0.5 and row[3] == -1.0 and np.count_nonzero(row) == 2


def test_parse_skips_comments_and_remaps_labels():
    ds = parse_libsvm(["# header", "", "0 1:1", "1 3:2"])
    assert ds.target.tolist() == [-1.0, 1.0]
    assert ds.dim == 3


def test_parse_empty_file():
    with pytest.raises(DatasetFormatError, match="no samples"):
        parse_libsvm([])


@pytest.mark.parametrize("text, lineno, msg", [
    ("1 1:1\n1 3:1 2:1\n", 2, "increasing"),
    ("1 1:1\n1 1:1\n-1 2:abc\n", 3, "non-numeric"),
    ("1 0:1\n", 1, "1-based"),
    ("1 1:1 2\n", 1, "index:value"),
    ("x 1:1\n", 1, "label"),
])
def test_parse_errors_report_line(text, lineno, msg):
    with pytest.raises(DatasetFormatError, match=msg) as info:
        parse_libsvm(io.StringIO(text))
    assert info.value.lineno == lineno
    assert f"line {lineno}" in str(info.value)


def test_parse_rejects_label_set():
    with pytest.raises(ValueError, match="label set"):
        parse_libsvm(["2 1:1", "1 1:1"])


@pytest.mark.parametrize("seed", range(10))
def test_libsvm_round_trip(seed):
    ds = random_sparse_classification(seed)
    buf = io.StringIO()
    write_libsvm(ds, buf)
    back = parse_libsvm(io.StringIO(buf.getvalue()), n_features=ds.dim)
    assert np.array_equal(back.target, ds.target)
    assert (back.matrix != ds.matrix).nnz == 0
    assert np.array_equal(back.matrix.toarray(), ds.matrix.toarray())


def test_small_fixture_file_parses():
    ds = read_any(SMALL_LIBSVM)
    assert (ds.n_samples, ds.dim) == (300, 25)
    assert set(ds.target.tolist()) == {-1.0, 1.0}


# ------------------------------------------------------------- container

def test_container_round_trip_generated(tmp_path):
    ds = generate_linear_regression(SyntheticSpec(60, 20, 1e3, seed=4))
    path = tmp_path / "d.txt"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.kind == "regression"
    assert np.array_equal(back.matrix, ds.matrix)
    assert np.array_equal(back.target, ds.target)
    assert np.array_equal(back.ground_truth, ds.ground_truth)


@pytest.mark.parametrize("seed", range(5))
def test_container_round_trip_sparse(tmp_path, seed):
    ds = random_sparse_classification(seed)
    path = tmp_path / "s.txt"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.is_sparse
    assert np.array_equal(back.matrix.toarray(), ds.matrix.toarray())
    assert np.array_equal(back.target, ds.target)
    assert back.ground_truth is None


def test_container_minimal(tmp_path):
    ds = Dataset(np.array([[0.1]]), [1.0 / 3.0], "regression")
    save_dataset(ds, tmp_path / "m.txt")
    back = load_dataset(tmp_path / "m.txt")
    assert back.matrix[0, 0] == 0.1 and back.target[0] == 1.0 / 3.0


def test_container_header_uses_lf(tmp_path):
    ds = Dataset(np.eye(2), [1.0, 2.0], "regression")
    save_dataset(ds, tmp_path / "h.txt")
    raw = (tmp_path / "h.txt").read_bytes()
    assert raw.startswith(b"cdkit-dataset v1 regression 2 2 dense\n")
    assert b"\r" not in raw


def test_container_version_mismatch(tmp_path):
    path = tmp_path / "v2.txt"
    path.write_text("cdkit-dataset v2 regression 1 1 dense\n1\n1\n")
    with pytest.raises(DatasetFormatError, match="version"):
        load_dataset(path)


@pytest.mark.parametrize("text", [
    "not-a-dataset v1 regression 1 1 dense\n1\n1\n",
    "cdkit-dataset v1 regression one 1 dense\n1\n1\n",
    "cdkit-dataset v1 regression 2 1 dense\n1 2\n1\n",
    "cdkit-dataset v1 regression 1 2 dense\n1\n1\n",
])
def test_container_corruption(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(DatasetFormatError):
        load_dataset(path)


def test_drop_empty_columns():
    X = sparse.csr_matrix(np.array([[1.0, 0.0, 2.0], [0.0, 0.0, 1.0]]))
    ds = Dataset(X, [1.0, -1.0], "classification").drop_empty_columns()
    assert ds.dim == 2
