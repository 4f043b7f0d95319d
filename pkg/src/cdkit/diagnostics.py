"""Bound envelopes, the Lyapunov energy, the gamma estimator and reference solves."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import weighted_norm_sq
from .objectives import LeastSquaresProblem, LogisticProblem

DEFAULT_K_BAR = 5000


def bound_plain(k: int, dim: int, R_sq: float) -> float:
    """Expected-gap envelope ``2 dim**2 R_sq / (k+1)**2`` for ARCD/ASCD."""
    if k < 1:
        raise ValueError("bound is stated for k >= 1")
    return 2.0 * dim * dim * R_sq / (k + 1) ** 2


def bound_agcd(k: int, dim: int, gamma: float, R_sq: float) -> float:
    """AGCD envelope under the gamma condition; ``gamma`` must lie in (0, 1]."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma!r}")
    return gamma * bound_plain(k, dim, R_sq)


def bound_strong(k: int, a: float, initial_energy: float) -> float:
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie in (0, 1), got {a!r}")
    return (1.0 - a) ** k * initial_energy


def strong_energy(f_value, f_ref, z, x_ref, L, params) -> float:
    """``f - f* + (dim**2/2)(a**2 + b) ||z - x*||_L**2``."""
    d = params.dim
    dist = weighted_norm_sq(np.asarray(z) - x_ref, L)
    return (f_value - f_ref) + 0.5 * d * d * (params.a ** 2 + params.b) * dist


def lyapunov_energy(f_value, z, x_ref, f_ref, A_k, L) -> float:
    """``A_k (f - f*) + 0.5 ||x* - z||_L**2``."""
    return A_k * (f_value - f_ref) + 0.5 * weighted_norm_sq(np.asarray(x_ref) - z, L)


def energy_weight(theta: float, dim: int) -> float:
    """``A_k = (1 - theta_k) / (dim**2 theta_k**2)``; zero at ``theta_0 = 1``."""
    return (1.0 - theta) / (dim * dim * theta * theta)


@dataclass
class GammaEstimate:
    gamma: float
    K_bar: int
    ks: np.ndarray
    ratio_series: np.ndarray  # NaN where the cumulative denominator is <= 0
    cum_num: np.ndarray
    cum_den: np.ndarray
    sign_violations: int  # nonpositive denominators at k >= K_bar
    early_sign_violations: int  # the same before K_bar


def estimate_gamma(trace_or_terms, K_bar: int = DEFAULT_K_BAR) -> GammaEstimate:
    """Largest ratio of cumulative gamma sums over rows with ``k >= K_bar``.

    Accepts a :class:`~cdkit.solvers.Trace` or a tuple ``(ks, num, den)`` of
    per-row terms.
    """
    if isinstance(trace_or_terms, tuple):
        ks, num, den = (np.asarray(v, dtype=float) for v in trace_or_terms)
    else:
        tr = trace_or_terms
        ks = tr.column("k").astype(float)
        num = tr.column("gamma_num_term")
        den = tr.column("gamma_den_term")
    if np.any(np.isnan(num)) or np.any(np.isnan(den)):
        raise ValueError("trace has no gamma terms; rerun with a reference solution")
    if ks.size == 0 or ks[-1] <= K_bar:
        raise ValueError(f"trace must extend beyond K_bar={K_bar}")
    cum_num = np.cumsum(num)
    cum_den = np.cumsum(den)
    positive = cum_den > 0
    ratio = np.full(ks.shape, np.nan)
    ratio[positive] = cum_num[positive] / cum_den[positive]
    late = ks >= K_bar
    usable = late & positive
    if not usable.any():
        raise ValueError("every cumulative denominator beyond K_bar is nonpositive")
    return GammaEstimate(
        gamma=float(np.max(ratio[usable])),
        K_bar=int(K_bar),
        ks=ks.astype(int),
        ratio_series=ratio,
        cum_num=cum_num,
        cum_den=cum_den,
        sign_violations=int(np.sum(late & ~positive)),
        early_sign_violations=int(np.sum(~late & ~positive)),
    )


@dataclass
class Reference:
    f_ref: float
    x_ref: np.ndarray
    converged: bool
    iterations: int
    method: str

    def __iter__(self):
        return iter((self.f_ref, self.x_ref))


def conjugate_gradient(A, b, tol=1e-12, maxiter=None):
    """Plain CG for symmetric PSD ``A`` from the zero start.

    Stops when ``||A x - b||_2 <= tol * max(1, ||b||_2)``. Starting at zero
    keeps every iterate in ``range(A)``, so for a consistent singular system
    this returns the minimum-norm solution.
    """
    n = b.size
    maxiter = 20 * n if maxiter is None else maxiter
    x = np.zeros(n)
    r = b.astype(float).copy()
    p = r.copy()
    rs = r @ r
    target = tol * max(1.0, math.sqrt(b @ b))
    it = 0
    while math.sqrt(rs) > target and it < maxiter:
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            break
        alpha = rs / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        if it % 50 == 0:
            r = b - A @ x  # curb recursion drift
        rs_new = r @ r
        p = r + (rs_new / rs) * p
        rs = rs_new
    res = b - A @ x
    return x, float(np.linalg.norm(res)) <= target, it


def _newton_logistic(problem: LogisticProblem, tol, max_iter):
    X = problem.X.toarray() if problem.sparse else np.asarray(problem.X)
    n = problem.n_samples
    beta = np.zeros(problem.dim)
    f = problem.value(beta)
    for it in range(1, max_iter + 1):
        g = problem.full_gradient(beta)
        if np.max(np.abs(g)) <= tol:
            return beta, f, True, it - 1
        m = problem.margins(beta)
        s = np.exp(-np.logaddexp(0.0, m) - np.logaddexp(0.0, -m))  # sigma(m) sigma(-m)
        H = (X.T * s) @ X / n
        H[np.diag_indices_from(H)] += 1e-14 * max(1.0, np.trace(H) / H.shape[0])
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        slope = g @ step
        while t > 1e-12:
            cand = beta - t * step
            fc = problem.value(cand)
            if fc <= f - 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            # no decrease available at working precision
            g = problem.full_gradient(beta)
            return beta, f, bool(np.max(np.abs(g)) <= tol), it
        beta, f = cand, fc
    g = problem.full_gradient(beta)
    return beta, f, bool(np.max(np.abs(g)) <= tol), max_iter


def reference_solve(problem, tol: float = 1e-12, max_iter: int | None = None,
                    newton_max_dim: int = 2000) -> Reference:
    """High-accuracy optimum used to measure gaps and gamma terms.

    Least squares: CG on the normal equations. Logistic: damped Newton when
    ``dim <= newton_max_dim``, otherwise AGCD in strong mode with
    ``mu = 1e-10``. A run that stops short of ``tol`` returns
    ``converged=False`` and emits a warning.
    """
    if isinstance(problem, LeastSquaresProblem):
        x, ok, it = conjugate_gradient(problem.gram, problem.gram_y, tol, max_iter)
        ref = Reference(problem.value(x), x, ok, it, "cg")
    elif isinstance(problem, LogisticProblem):
        if problem.dim <= newton_max_dim:
            x, f, ok, it = _newton_logistic(problem, tol, max_iter or 200)
            ref = Reference(f, x, ok, it, "newton")
        else:
            from .solvers import run

            iters = max_iter or 200 * problem.dim
            tr = run(problem, "agcd", iters, mode="strong", mu=1e-10, record_period=iters)
            x = tr.x_final
            ok = bool(np.max(np.abs(problem.full_gradient(x))) <= tol)
            ref = Reference(problem.value(x), x, ok, iters, "agcd-strong")
    else:
        raise TypeError(f"unsupported problem type {type(problem).__name__}")
    if not ref.converged:
        warnings.warn(f"reference solve ({ref.method}) stopped before reaching tol={tol:g}; "
                      "treat gaps as low-confidence", RuntimeWarning, stacklevel=2)
    return ref
