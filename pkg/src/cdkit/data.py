"""Synthetic regression instances, LIBSVM parsing and the cdkit container.

Design matrices use rows = samples, columns = coordinates.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .rng import XorShift64Star

FORMAT_MAGIC = "cdkit-dataset"
FORMAT_VERSION = "v1"
# singular-value spread used for the nonzero part of a kappa = inf instance
KAPPA_INF_SPREAD = 1e4


class DatasetFormatError(ValueError):
    """Malformed dataset text; ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass
class SyntheticSpec:
    n_samples: int = 200
    dim: int = 100
    kappa: float = 100.0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1 or self.dim < 1:
            raise ValueError("n_samples and dim must be positive")
        if not (self.kappa >= 1.0):
            raise ValueError(f"kappa must be >= 1 or inf, got {self.kappa!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.n_samples < self.dim:
            warnings.warn("n_samples < dim: X^T X is singular regardless of kappa",
                          stacklevel=3)


@dataclass
class Dataset:
    matrix: object  # ndarray or scipy.sparse matrix
    target: np.ndarray
    kind: str  # "regression" | "classification"
    ground_truth: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float).ravel()
        if self.kind not in ("regression", "classification"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.matrix.shape[0] != self.target.size:
            raise ValueError("row count of matrix and target length disagree")
        if self.kind == "classification" and not np.all(np.abs(self.target) == 1.0):
            raise ValueError("classification labels must be -1 or +1")

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.matrix)

    def drop_empty_columns(self) -> "Dataset":
        """Remove coordinates whose design column is identically zero."""
        M = self.matrix
        if self.is_sparse:
            keep = np.flatnonzero(np.asarray(abs(M).sum(axis=0)).ravel() > 0)
            M = sparse.csr_matrix(M)[:, keep]
        else:
            keep = np.flatnonzero(np.any(M != 0, axis=0))
            M = M[:, keep]
        gt = None if self.ground_truth is None else self.ground_truth[keep]
        return Dataset(M, self.target.copy(), self.kind, gt, dict(self.meta))

    def problem(self):
        from .objectives import LeastSquaresProblem, LogisticProblem

        if self.kind == "regression":
            return LeastSquaresProblem(self.matrix, self.target)
        return LogisticProblem(self.matrix, self.target)


def generate_linear_regression(spec: SyntheticSpec) -> Dataset:
    """Gaussian design with the singular values of ``X`` mapped affinely
    onto ``[1/sqrt(kappa), 1]`` so that ``cond(X^T X) == kappa``.

    Random draws, all from one :class:`XorShift64Star` stream seeded with
    ``spec.seed``: the ``n_samples x dim`` raw matrix in row-major order,
    then ``beta_star`` (``dim`` normals), then the response noise
    (``n_samples`` normals).

    For ``kappa = inf`` the smallest singular value is set to exactly zero
    and the remaining ones are mapped onto ``[1/sqrt(1e4), 1]``.
    """
    n, p = spec.n_samples, spec.dim
    rng = XorShift64Star(spec.seed)
    raw = rng.normals(n * p).reshape(n, p)
    try:
        U, s, Vt = np.linalg.svd(raw, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError(f"SVD failed: {exc}") from exc

    if math.isinf(spec.kappa):
        d = np.zeros_like(s)
        d[:-1] = _rescale(s[:-1], 1.0 / math.sqrt(KAPPA_INF_SPREAD))
    else:
        d = _rescale(s, 1.0 / math.sqrt(spec.kappa))
    X = (U * d) @ Vt

    beta_star = rng.normals(p)
    noise = rng.normals(n)
    y = X @ beta_star + spec.sigma * noise
    meta = {"kappa": spec.kappa, "sigma": spec.sigma, "seed": spec.seed}
    return Dataset(X, y, "regression", beta_star, meta)


def _rescale(s, lo):
    s_min, s_max = s.min(), s.max()
    if s_max - s_min <= 0 or lo == 1.0:
        return np.ones_like(s)
    out = lo + (s - s_min) * (1.0 - lo) / (s_max - s_min)
    out[np.argmin(s)] = lo
    out[np.argmax(s)] = 1.0
    return out


def gram_condition(matrix) -> tuple[float, float, float]:
    """``(lambda_min, lambda_max, cond)`` of ``X^T X``."""
    X = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
    eig = np.linalg.eigvalsh(X.T @ X)
    lo, hi = float(eig[0]), float(eig[-1])
    cond = hi / lo if lo > 0 else math.inf
    return lo, hi, cond


# ---------------------------------------------------------------- LIBSVM

def _fmt(v: float) -> str:
    return "%.17g" % v


def _parse_pairs(tokens, lineno):
    idx, vals = [], []
    last = 0
    for tok in tokens:
        k, sep, v = tok.partition(":")
        if not sep:
            raise DatasetFormatError(f"expected index:value, got {tok!r}", lineno)
        try:
            j = int(k)
        except ValueError:
            raise DatasetFormatError(f"non-integer feature index {k!r}", lineno) from None
        try:
            x = float(v)
        except ValueError:
            raise DatasetFormatError(f"non-numeric value {v!r}", lineno) from None
        if j < 1:
            raise DatasetFormatError(f"feature indices are 1-based, got {j}", lineno)
        if j <= last:
            raise DatasetFormatError(f"feature indices not strictly increasing at {j}", lineno)
        last = j
        idx.append(j - 1)
        vals.append(x)
    return idx, vals


def normalize_labels(labels) -> np.ndarray:
    """Map ``{0, 1}`` or ``{-1, +1}`` labels to ``{-1, +1}``."""
    labels = np.asarray(labels, dtype=float)
    present = set(np.unique(labels).tolist())
    if present <= {-1.0, 1.0}:
        return labels
    if present <= {0.0, 1.0}:
        return np.where(labels == 0.0, -1.0, 1.0)
    raise ValueError(f"unsupported label set {sorted(present)}; need {{0,1}} or {{-1,+1}}")


def parse_libsvm(lines, n_features: int | None = None) -> Dataset:
    """Parse LIBSVM text (an iterable of lines) into a sparse classification set."""
    labels, rows, cols, vals = [], [], [], []
    dim = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise DatasetFormatError(f"non-numeric label {tokens[0]!r}", lineno) from None
        idx, v = _parse_pairs(tokens[1:], lineno)
        if idx:
            dim = max(dim, idx[-1] + 1)
        rows.extend([len(labels) - 1] * len(idx))
        cols.extend(idx)
        vals.extend(v)
    if not labels:
        raise DatasetFormatError("no samples")
    if n_features is not None:
        if n_features < dim:
            raise ValueError(f"file uses {dim} features, more than n_features={n_features}")
        dim = n_features
    X = sparse.csr_matrix((vals, (rows, cols)), shape=(len(labels), max(dim, 1)))
    return Dataset(X, normalize_labels(labels), "classification")


def load_libsvm(path, n_features: int | None = None) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, n_features)


def _sparse_row_text(X: sparse.csr_matrix, i: int) -> str:
    lo, hi = X.indptr[i], X.indptr[i + 1]
    return " ".join(f"{j + 1}:{_fmt(v)}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]))


def write_libsvm(dataset: Dataset, stream) -> None:
    X = sparse.csr_matrix(dataset.matrix)
    X.sort_indices()
    for i, label in enumerate(dataset.target):
        row = _sparse_row_text(X, i)
        stream.write(f"{_fmt(label)} {row}".rstrip() + "\n")


# ------------------------------------------------------- cdkit container

def save_dataset(dataset: Dataset, path) -> None:
    layout = "sparse" if dataset.is_sparse else "dense"
    out = io.StringIO()
    out.write(f"{FORMAT_MAGIC} {FORMAT_VERSION} {dataset.kind} "
              f"{dataset.n_samples} {dataset.dim} {layout}\n")
    out.write(" ".join(_fmt(v) for v in dataset.target) + "\n")
    if dataset.is_sparse:
        X = sparse.csr_matrix(dataset.matrix)
        X.sort_indices()
        for i in range(dataset.n_samples):
            out.write(_sparse_row_text(X, i) + "\n")
    else:
        for row in np.asarray(dataset.matrix):
            out.write(" ".join(_fmt(v) for v in row) + "\n")
    if dataset.ground_truth is not None:
        out.write("# beta_star\n")
        out.write(" ".join(_fmt(v) for v in dataset.ground_truth) + "\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(out.getvalue())


def _floats(text, lineno, expected=None):
    try:
        values = [float(t) for t in text.split()]
    except ValueError as exc:
        raise DatasetFormatError(str(exc), lineno) from None
    if expected is not None and len(values) != expected:
        raise DatasetFormatError(f"expected {expected} values, got {len(values)}", lineno)
    return values


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    parts = lines[0].split()
    if len(parts) != 6 or parts[0] != FORMAT_MAGIC:
        raise DatasetFormatError("not a cdkit-dataset header", 1)
    if parts[1] != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported container version {parts[1]!r}", 1)
    kind, layout = parts[2], parts[5]
    try:
        n, p = int(parts[3]), int(parts[4])
    except ValueError:
        raise DatasetFormatError("corrupt sample/dimension counts", 1) from None
    if kind not in ("regression", "classification") or layout not in ("dense", "sparse"):
        raise DatasetFormatError("corrupt kind/layout fields", 1)
    if len(lines) < n + 2:
        raise DatasetFormatError("file truncated")

    target = _floats(lines[1], 2, n)
    body = lines[2:2 + n]
    if layout == "dense":
        X = np.array([_floats(r, i + 3, p) for i, r in enumerate(body)], dtype=float)
        X = X.reshape(n, p)
    else:
        rows, cols, vals = [], [], []
        for i, r in enumerate(body):
            idx, v = _parse_pairs(r.split(), i + 3)
            if idx and idx[-1] >= p:
                raise DatasetFormatError(f"feature index {idx[-1] + 1} exceeds dim {p}", i + 3)
            rows.extend([i] * len(idx))
            cols.extend(idx)
            vals.extend(v)
        X = sparse.csr_matrix((vals, (rows, cols)), shape=(n, p))

    ground_truth = None
    rest = lines[2 + n:]
    for off, line in enumerate(rest):
        if line.strip() == "# beta_star":
            if off + 1 >= len(rest):
                raise DatasetFormatError("missing beta_star values", n + 3 + off)
            ground_truth = np.array(_floats(rest[off + 1], n + 4 + off, p))
            break
    return Dataset(X, np.array(target), kind, ground_truth)


def read_any(path, n_features: int | None = None) -> Dataset:
    """Load a cdkit container, falling back to LIBSVM text."""
    with open(path, encoding="utf-8") as fh:
        head = fh.readline()
    if head.startswith(FORMAT_MAGIC):
        return load_dataset(path)
    return load_libsvm(path, n_features)
