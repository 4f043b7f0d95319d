"""Least-squares and logistic objectives with incremental gradient caches.

Both objectives carry an *auxiliary* vector per iterate that is affine in the
iterate: the gradient itself for least squares (via the precomputed Gram
matrix) and the signed margins ``labels * (X @ beta)`` for logistic
regression. Because the solvers only ever form affine combinations whose
weights sum to one, the auxiliary vector of a combination is the same
combination of auxiliary vectors, and a coordinate step adds a scaled column.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.special import expit

from .numerics import Smoothness


class DegenerateColumnError(ValueError):
    """A coordinate has an identically zero design column (so ``L_i = 0``)."""


class StaleCacheError(RuntimeError):
    pass


def _check_beta(beta, dim):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (dim,):
        raise ValueError(f"dimension mismatch: expected ({dim},), got {beta.shape}")
    return beta


class LeastSquaresProblem:
    """``f(beta) = ||y - X beta||_2**2`` with the Gram matrix held in memory."""

    kind = "regression"

    def __init__(self, X, y):
        X = np.asarray(X.toarray() if sparse.issparse(X) else X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ValueError(f"X has shape {X.shape} but y has {y.size} entries")
        self.X = X
        self.y = y
        self.gram = X.T @ X
        self.gram_y = X.T @ y
        diag = np.diag(self.gram)
        zero = np.flatnonzero(diag == 0)
        if zero.size:
            raise DegenerateColumnError(f"all-zero design columns: {zero.tolist()[:10]}")
        # rows of 2*gram are its columns (symmetric); C-order keeps them contiguous
        self._two_gram = np.ascontiguousarray(2.0 * self.gram)
        self._L = Smoothness(2.0 * diag)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    def value(self, beta) -> float:
        r = self.y - self.X @ _check_beta(beta, self.dim)
        return float(r @ r)

    def full_gradient(self, beta) -> np.ndarray:
        beta = _check_beta(beta, self.dim)
        return 2.0 * (self.gram @ beta - self.gram_y)

    def coordinate_smoothness(self) -> Smoothness:
        return self._L

    # auxiliary-vector protocol used by GradientCache

    def aux(self, beta) -> np.ndarray:
        return self.full_gradient(beta)

    def gradient_from_aux(self, aux) -> np.ndarray:
        return aux

    def coordinate_gradient_from_aux(self, aux, i: int) -> float:
        return float(aux[i])

    def add_direction(self, aux, i: int, h: float) -> None:
        aux += h * self._two_gram[i]


class LogisticProblem:
    """``f(beta) = mean(log(1 + exp(-label_i * x_i @ beta)))``.

    ``X`` may be dense or any scipy sparse matrix; sparse input is kept in
    CSC form since every incremental operation touches exactly one column.
    """

    kind = "classification"

    def __init__(self, X, labels):
        labels = np.asarray(labels, dtype=float).ravel()
        if not np.all((labels == 1.0) | (labels == -1.0)):
            raise ValueError("logistic labels must be exactly -1 or +1")
        if X.shape[0] != labels.size:
            raise ValueError(f"X has {X.shape[0]} rows but {labels.size} labels")
        self.labels = labels
        self.sparse = sparse.issparse(X)
        if self.sparse:
            X = sparse.csc_matrix(X, dtype=float)
            X.sort_indices()
            S = sparse.csc_matrix(sparse.diags(labels) @ X)
            S.sort_indices()
            col_sq = np.asarray(X.multiply(X).sum(axis=0)).ravel()
            self._indptr, self._indices, self._data = S.indptr, S.indices, S.data
        else:
            X = np.asarray(X, dtype=float)
            S = np.asfortranarray(labels[:, None] * X)
            col_sq = (X * X).sum(axis=0)
        self.X = X
        self._S = S
        self._ST = S.T.tocsr() if self.sparse else np.ascontiguousarray(S.T)
        zero = np.flatnonzero(col_sq == 0)
        if zero.size:
            raise DegenerateColumnError(f"all-zero design columns: {zero.tolist()[:10]}")
        self._L = Smoothness(col_sq / (4.0 * labels.size))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    def margins(self, beta) -> np.ndarray:
        return np.asarray(self._S @ _check_beta(beta, self.dim)).ravel()

    def value(self, beta) -> float:
        return self.value_from_aux(self.margins(beta))

    @staticmethod
    def value_from_aux(m) -> float:
        return float(np.mean(np.logaddexp(0.0, -m)))

    def full_gradient(self, beta) -> np.ndarray:
        return self.gradient_from_aux(self.margins(beta))

    def coordinate_smoothness(self) -> Smoothness:
        return self._L

    def aux(self, beta) -> np.ndarray:
        return self.margins(beta)

    def gradient_from_aux(self, m) -> np.ndarray:
        w = expit(-m)
        return -np.asarray(self._ST @ w).ravel() / self.n_samples

    def _column(self, i):
        if self.sparse:
            lo, hi = self._indptr[i], self._indptr[i + 1]
            return self._indices[lo:hi], self._data[lo:hi]
        return slice(None), self._S[:, i]

    def coordinate_gradient_from_aux(self, m, i: int) -> float:
        idx, vals = self._column(i)
        return -float(vals @ expit(-m[idx])) / self.n_samples

    def add_direction(self, m, i: int, h: float) -> None:
        idx, vals = self._column(i)
        m[idx] += h * vals


def strong_convexity(problem: LeastSquaresProblem, mode: str = "exact",
                     rank_tol: float = 1e-10) -> float:
    """Strong convexity constant of a least-squares objective w.r.t. ``||.||_L``.

    This is the smallest eigenvalue of ``L^{-1/2} (2 X^T X) L^{-1/2}``. In
    ``"smallest-positive"`` mode eigenvalues below ``rank_tol * lambda_max``
    are treated as exact zeros and skipped; in ``"exact"`` mode such an
    eigenvalue is reported as 0.
    """
    if mode not in ("exact", "smallest-positive"):
        raise ValueError(f"unknown mode {mode!r}")
    s = 1.0 / np.sqrt(problem.coordinate_smoothness().L)
    M = (s[:, None] * (2.0 * problem.gram)) * s[None, :]
    try:
        eig = np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    cutoff = rank_tol * max(eig[-1], 0.0)
    if mode == "exact":
        return 0.0 if eig[0] <= cutoff else float(eig[0])
    pos = eig[eig > cutoff]
    if pos.size == 0:
        raise ValueError("objective has no positive curvature")
    return float(pos[0])


class GradientCache:
    """Iterates ``x`` and ``z`` with their auxiliary vectors kept in sync.

    Every coordinate step or assignment bumps ``refresh_counter``; once it
    reaches ``refresh_period`` both auxiliary vectors are recomputed from
    scratch to bound floating-point drift.
    """

    def __init__(self, problem, x0, refresh_period: int = 1000):
        if refresh_period < 1:
            raise ValueError("refresh_period must be >= 1")
        self.problem = problem
        self.x = _check_beta(x0, problem.dim).copy()
        self.z = self.x.copy()
        self.aux_x = problem.aux(self.x)
        self.aux_z = self.aux_x.copy()
        self.refresh_period = refresh_period
        self.refresh_counter = 0

    def _pair(self, which):
        if which == "x":
            return self.x, self.aux_x
        if which == "z":
            return self.z, self.aux_z
        raise ValueError(f"unknown iterate {which!r}")

    def combined(self, theta: float):
        """``(1-theta) x + theta z`` and its auxiliary vector."""
        beta = (1.0 - theta) * self.x + theta * self.z
        aux = (1.0 - theta) * self.aux_x + theta * self.aux_z
        return beta, aux

    def combined_aux(self, theta: float) -> np.ndarray:
        return (1.0 - theta) * self.aux_x + theta * self.aux_z

    def coordinate_gradient(self, which: str, i: int, theta: float | None = None) -> float:
        """``grad_i f`` at ``x``, ``z`` or the lazy combination ``y``."""
        if self.refresh_counter > self.refresh_period:
            raise StaleCacheError("cache missed its scheduled refresh")
        if which == "y":
            if theta is None:
                raise ValueError("theta required for the combined iterate")
            aux = self.combined_aux(theta)
        else:
            aux = self._pair(which)[1]
        return self.problem.coordinate_gradient_from_aux(aux, i)

    def gradient(self, which: str) -> np.ndarray:
        return np.array(self.problem.gradient_from_aux(self._pair(which)[1]))

    def apply_coordinate_step(self, which: str, i: int, h: float) -> None:
        beta, aux = self._pair(which)
        if not 0 <= i < beta.size:
            raise IndexError(f"coordinate {i} out of range")
        if h != 0.0:
            beta[i] += h
            self.problem.add_direction(aux, i, h)
        self._tick()

    def assign(self, which: str, beta, aux) -> None:
        """Replace an iterate with a precomputed vector and its auxiliary."""
        if which == "x":
            self.x, self.aux_x = beta, aux
        elif which == "z":
            self.z, self.aux_z = beta, aux
        else:
            raise ValueError(f"unknown iterate {which!r}")
        self._tick()

    def _tick(self):
        self.refresh_counter += 1
        if self.refresh_counter >= self.refresh_period:
            self.refresh()

    def refresh(self) -> None:
        self.aux_x = self.problem.aux(self.x)
        self.aux_z = self.problem.aux(self.z)
        self.refresh_counter = 0

    def max_deviation(self) -> float:
        fx = self.problem.aux(self.x)
        fz = self.problem.aux(self.z)
        return float(max(np.max(np.abs(fx - self.aux_x)), np.max(np.abs(fz - self.aux_z))))

    def verify(self, tol: float = 1e-8) -> None:
        dev = self.max_deviation()
        if dev > tol:
            raise StaleCacheError(f"cached auxiliary vectors drifted by {dev:.3e}")
