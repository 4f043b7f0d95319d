"""Momentum schedules, weighted norms and strong-convexity parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class Smoothness:
    """Per-coordinate Lipschitz constants of the partial derivatives.

    Wraps the vector ``L`` and caches the derived quantities the solvers
    need on every step (``1/L`` and ``1/sqrt(L)``).
    """

    def __init__(self, L):
        L = np.array(L, dtype=float).ravel()
        if L.size == 0:
            raise ValueError("smoothness vector must be nonempty")
        if not np.all(np.isfinite(L)) or np.any(L <= 0):
            raise ValueError("every coordinate smoothness constant must be > 0")
        L.setflags(write=False)
        self.L = L
        self.inv = 1.0 / L
        self.inv_sqrt = 1.0 / np.sqrt(L)

    @property
    def dim(self) -> int:
        return self.L.size

    def __len__(self):
        return self.L.size

    def __repr__(self):
        return f"Smoothness(dim={self.dim})"


def _as_L(L) -> np.ndarray:
    return L.L if isinstance(L, Smoothness) else np.asarray(L, dtype=float)


def weighted_norm_sq(v, L) -> float:
    """Return ``sum_i L_i v_i**2``."""
    v = np.asarray(v, dtype=float)
    w = _as_L(L)
    if v.shape != w.shape:
        raise ValueError(f"dimension mismatch: {v.shape} vs {w.shape}")
    return float(np.dot(w * v, v))


def weighted_inv_norm_sq(g, L) -> float:
    """Return ``sum_i g_i**2 / L_i``."""
    g = np.asarray(g, dtype=float)
    w = _as_L(L)
    if g.shape != w.shape:
        raise ValueError(f"dimension mismatch: {g.shape} vs {w.shape}")
    return float(np.dot(g / w, g))


def theta_next(theta_prev: float) -> float:
    """Next momentum weight: the positive root of ``t**2 = theta_prev**2 * (1 - t)``."""
    if not 0.0 < theta_prev <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta_prev!r}")
    t = theta_prev
    return 0.5 * (t * math.sqrt(t * t + 4.0) - t * t)


@dataclass
class ThetaSchedule:
    """Incremental theta sequence, starting from ``theta_0 = 1``."""

    theta: float = 1.0
    k: int = 0

    def advance(self) -> float:
        self.theta = theta_next(self.theta)
        self.k += 1
        return self.theta


@dataclass(frozen=True)
class StrongParams:
    mu: float
    a: float
    b: float
    dim: int

    @property
    def mix_z(self) -> float:
        """Weight of ``z`` in the mixed point ``u``."""
        return self.a * self.a / (self.a * self.a + self.b)

    @property
    def mix_y(self) -> float:
        return self.b / (self.a * self.a + self.b)


def strong_params(mu: float, dim: int) -> StrongParams:
    if not mu > 0:
        raise ValueError(f"strong convexity constant must be > 0, got {mu!r}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    s = math.sqrt(mu)
    a = s / (dim + s)
    b = mu * a / dim**2
    return StrongParams(mu=float(mu), a=a, b=b, dim=int(dim))
