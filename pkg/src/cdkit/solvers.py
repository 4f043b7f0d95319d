"""Accelerated coordinate descent (plain and strongly convex frameworks).

Three coordinate rules plug into both frameworks:

=========  ======================  ======================
variant    x-update coordinate     z-update coordinate
=========  ======================  ======================
random     uniform draw            same draw        (ARCD)
greedy     argmax |g_i|/sqrt(L_i)  same             (AGCD)
semi       argmax |g_i|/sqrt(L_i)  uniform draw     (ASCD)
=========  ======================  ======================

The extrapolated point ``y`` is never kept between iterations; each step
forms it from the cached ``x``/``z`` data and reads both gradient
coordinates at that same ``y`` before either iterate moves.

Coordinate indices are 0-based throughout the Python API and CSV output.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .numerics import (
    StrongParams,
    ThetaSchedule,
    strong_params,
    weighted_norm_sq,
)
from .objectives import GradientCache
from .rng import XorShift64Star

ALGORITHMS = {"arcd": "random", "agcd": "greedy", "ascd": "semi-greedy"}
VARIANTS = ("greedy", "random", "semi-greedy")
DIVERGENCE_LIMIT = 1e12


class SolverDivergedError(RuntimeError):
    pass


class DescentViolation(AssertionError):
    pass


@dataclass(frozen=True)
class Rule:
    variant: str
    rng_seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown rule variant {self.variant!r}")

    @classmethod
    def for_algorithm(cls, name: str, seed: int = 0) -> "Rule":
        try:
            return cls(ALGORITHMS[name.lower()], seed)
        except KeyError:
            raise ValueError(f"unknown algorithm {name!r}") from None


def select_greedy(gradient_at_y, L) -> int:
    """Smallest index maximizing ``|g_i| / sqrt(L_i)``."""
    inv_sqrt = L.inv_sqrt if hasattr(L, "inv_sqrt") else 1.0 / np.sqrt(np.asarray(L, float))
    return int(np.argmax(np.abs(gradient_at_y) * inv_sqrt))


def select_random(rng: XorShift64Star, dim: int) -> int:
    return rng.randbelow(dim)


@dataclass
class TraceRecord:
    """One row of a solver trace, describing the state after ``k`` steps.

    ``theta_or_a`` is the momentum weight that the next step will use
    (``theta_k``, or the constant ``a`` in strong mode). ``j1``, ``j2`` and
    the two gamma terms describe the step(s) that led to this row; when rows
    are recorded every ``record_period`` steps the gamma terms are the sums
    over the skipped steps, so cumulative sums over rows stay exact.
    """

    k: int
    elapsed_seconds: float = 0.0
    f_value: float = math.nan
    gap: float = math.nan
    j1: int = -1
    j2: int = -1
    theta_or_a: float = math.nan
    gamma_num_term: float = math.nan
    gamma_den_term: float = math.nan
    energy: float = math.nan


TRACE_FIELDS = tuple(f.name for f in fields(TraceRecord))


@dataclass
class SolverState:
    cache: GradientCache
    mode: str  # "plain" | "strong" | "gcd"
    L: object
    schedule: ThetaSchedule | None = None
    params: StrongParams | None = None
    k: int = 0
    rng: XorShift64Star = field(default_factory=XorShift64Star)
    x_ref: np.ndarray | None = None
    check_descent: bool = False
    descent_tol: float = 1e-10

    @property
    def x(self):
        return self.cache.x

    @property
    def z(self):
        return self.cache.z

    @property
    def weight(self) -> float:
        """Current momentum weight: ``theta_k`` or ``a``."""
        if self.mode == "plain":
            return self.schedule.theta
        if self.mode == "strong":
            return self.params.a
        return math.nan


def init_state(problem, mode: str, rule: Rule | None = None, x0=None, mu: float | None = None,
               x_ref=None, refresh_period: int = 1000, check_descent: bool = False) -> SolverState:
    x0 = np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=float)
    cache = GradientCache(problem, x0, refresh_period)
    state = SolverState(cache=cache, mode=mode, L=problem.coordinate_smoothness(),
                        rng=XorShift64Star(rule.rng_seed if rule else 0),
                        x_ref=None if x_ref is None else np.asarray(x_ref, dtype=float),
                        check_descent=check_descent)
    if mode == "plain":
        state.schedule = ThetaSchedule()
    elif mode == "strong":
        if mu is None:
            raise ValueError("strong mode needs a strong convexity constant")
        state.params = strong_params(mu, problem.dim)
    elif mode != "gcd":
        raise ValueError(f"unknown mode {mode!r}")
    return state


def _choose(rule: Rule, state: SolverState, g, dim):
    if rule.variant == "random":
        j = select_random(state.rng, dim)
        return j, j
    j1 = select_greedy(g, state.L)
    if rule.variant == "greedy":
        return j1, j1
    return j1, select_random(state.rng, dim)


def _read_step(state, problem, rule, weight):
    """Shared front half of both frameworks: form y, pick coordinates, read gradients."""
    cache = state.cache
    dim = problem.dim
    y, aux_y = cache.combined(weight)
    need_full = rule.variant != "random" or state.x_ref is not None
    g = problem.gradient_from_aux(aux_y) if need_full else None
    j1, j2 = _choose(rule, state, g, dim)
    if g is not None:
        g1, g2 = float(g[j1]), float(g[j2])
    else:
        g1 = problem.coordinate_gradient_from_aux(aux_y, j1)
        g2 = g1 if j2 == j1 else problem.coordinate_gradient_from_aux(aux_y, j2)
    rec = TraceRecord(k=state.k + 1, j1=j1, j2=j2)
    if state.x_ref is not None:
        z, xs = cache.z, state.x_ref
        rec.gamma_num_term = float(g @ (z - xs)) / weight
        rec.gamma_den_term = dim * g2 * (z[j2] - xs[j2]) / weight
    f_y = problem.value(y) if state.check_descent else math.nan
    return y, aux_y, j1, j2, g1, g2, f_y, rec


def _check_descent(state, problem, f_y, g1, j1):
    f_new = problem.value(state.cache.x)
    bound = f_y - g1 * g1 / (2.0 * state.L.L[j1]) + state.descent_tol
    if not f_new <= bound:
        raise DescentViolation(
            f"step {state.k}: f(x+) = {f_new!r} exceeds f(y) - g^2/(2L) = {bound!r}")


def step_plain(state: SolverState, problem, rule: Rule) -> TraceRecord:
    """One iteration of the framework without strong convexity."""
    theta = state.schedule.theta
    y, aux_y, j1, j2, g1, g2, f_y, rec = _read_step(state, problem, rule, theta)
    cache, L = state.cache, state.L.L

    cache.assign("x", y, aux_y)
    cache.apply_coordinate_step("x", j1, -g1 / L[j1])
    cache.apply_coordinate_step("z", j2, -g2 / (problem.dim * L[j2] * theta))
    if state.check_descent:
        _check_descent(state, problem, f_y, g1, j1)

    state.schedule.advance()
    state.k += 1
    rec.theta_or_a = state.schedule.theta
    return rec


def step_strong(state: SolverState, problem, rule: Rule) -> TraceRecord:
    """One iteration of the strongly convex framework."""
    P = state.params
    a, b = P.a, P.b
    y, aux_y, j1, j2, g1, g2, f_y, rec = _read_step(state, problem, rule, a)
    cache, L = state.cache, state.L.L

    # u mixes z and y; its auxiliary vector is the same mix, so no recompute
    cz, cy = P.mix_z, P.mix_y
    u = cz * cache.z + cy * y
    aux_u = cz * cache.aux_z + cy * aux_y

    cache.assign("x", y, aux_y)
    cache.apply_coordinate_step("x", j1, -g1 / L[j1])
    cache.assign("z", u, aux_u)
    cache.apply_coordinate_step("z", j2, -(a / (a * a + b)) * g2 / (problem.dim * L[j2]))
    if state.check_descent:
        _check_descent(state, problem, f_y, g1, j1)

    state.k += 1
    rec.theta_or_a = a
    return rec


def step_gcd_baseline(state: SolverState, problem) -> TraceRecord:
    """Plain greedy coordinate descent: ``x -= grad_j f(x) / L_j`` on the greedy ``j``."""
    cache = state.cache
    g = problem.gradient_from_aux(cache.aux_x)
    j = select_greedy(g, state.L)
    gj = float(g[j])
    f_x = problem.value(cache.x) if state.check_descent else math.nan
    cache.apply_coordinate_step("x", j, -gj / state.L.L[j])
    if state.check_descent:
        _check_descent(state, problem, f_x, gj, j)
    state.k += 1
    return TraceRecord(k=state.k, j1=j, j2=j)


@dataclass
class Trace:
    records: list
    algorithm: str
    mode: str
    seed: int
    dim: int
    L: object
    x0: np.ndarray
    f_ref: float | None = None
    x_ref: np.ndarray | None = None
    params: StrongParams | None = None
    x_final: np.ndarray | None = None
    z_final: np.ndarray | None = None

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def ks(self) -> np.ndarray:
        return self.column("k")

    @property
    def gaps(self) -> np.ndarray:
        return self.column("gap")

    @property
    def R_sq(self) -> float:
        """``||x_ref - x0||_L**2``."""
        if self.x_ref is None:
            raise ValueError("trace has no reference solution")
        return weighted_norm_sq(self.x_ref - self.x0, self.L)

    def with_reference(self, f_ref: float) -> "Trace":
        """Fill the gap column after the fact from a reference value."""
        self.f_ref = float(f_ref)
        for r in self.records:
            r.gap = r.f_value - self.f_ref
        return self


def _energy(state: SolverState, f_value, f_ref, x_ref, dim):
    if x_ref is None or f_ref is None:
        return math.nan
    dist = weighted_norm_sq(state.z - x_ref, state.L)
    if state.mode == "plain":
        t = state.schedule.theta
        A = (1.0 - t) / (dim * dim * t * t)
        return A * (f_value - f_ref) + 0.5 * dist
    if state.mode == "strong":
        P = state.params
        return (f_value - f_ref) + 0.5 * dim * dim * (P.a * P.a + P.b) * dist
    return math.nan


def run(problem, algorithm, iters: int, mode: str = "plain", *, mu: float | None = None,
        seed: int = 0, x0=None, f_ref: float | None = None, x_ref=None,
        record_period: int = 1, check_descent: bool = False,
        refresh_period: int = 1000) -> Trace:
    """Run ``iters`` iterations of ``algorithm`` and return the trace.

    ``algorithm`` is one of ``"arcd"``, ``"agcd"``, ``"ascd"``, ``"gcd"`` or
    a :class:`Rule`. ``"gcd"`` ignores ``mode``. Supplying ``x_ref`` turns on
    the gamma-condition terms; with ``f_ref`` as well the energy column is
    filled (the distance part of the energy uses ``z``).
    """
    if iters < 0:
        raise ValueError("iters must be >= 0")
    if record_period < 1:
        raise ValueError("record_period must be >= 1")
    if isinstance(algorithm, Rule):
        rule, name = algorithm, algorithm.variant
    elif algorithm == "gcd":
        rule, name, mode = None, "gcd", "gcd"
    else:
        rule, name = Rule.for_algorithm(algorithm, seed), algorithm

    x_ref_arr = None if x_ref is None else np.asarray(x_ref, dtype=float)
    state = init_state(problem, mode, rule, x0=x0, mu=mu, x_ref=x_ref_arr,
                       refresh_period=refresh_period, check_descent=check_descent)
    dim = problem.dim
    x_start = state.x.copy()

    def finish(rec, elapsed):
        f = problem.value(state.x)
        if not math.isfinite(f):
            raise SolverDivergedError(f"objective became {f} at iteration {state.k}")
        if f > f0 + DIVERGENCE_LIMIT:
            raise SolverDivergedError(f"objective {f:.3e} blew past f(x0) at iteration {state.k}")
        rec.elapsed_seconds = elapsed
        rec.f_value = f
        rec.theta_or_a = state.weight
        if f_ref is not None:
            rec.gap = f - f_ref
        rec.energy = _energy(state, f, f_ref, x_ref_arr, dim)
        return rec

    f0 = problem.value(state.x)
    first = TraceRecord(k=0)
    if x_ref_arr is not None:
        first.gamma_num_term = first.gamma_den_term = 0.0
    records = [finish(first, 0.0)]

    if mode == "plain":
        stepper = lambda: step_plain(state, problem, rule)  # noqa: E731
    elif mode == "strong":
        stepper = lambda: step_strong(state, problem, rule)  # noqa: E731
    else:
        stepper = lambda: step_gcd_baseline(state, problem)  # noqa: E731

    elapsed = 0.0
    num_acc = den_acc = 0.0
    for k in range(1, iters + 1):
        t0 = time.perf_counter()
        rec = stepper()
        elapsed += time.perf_counter() - t0
        if x_ref_arr is not None and mode != "gcd":
            num_acc += rec.gamma_num_term
            den_acc += rec.gamma_den_term
        if k % record_period == 0 or k == iters:
            if x_ref_arr is not None and mode != "gcd":
                rec.gamma_num_term, rec.gamma_den_term = num_acc, den_acc
                num_acc = den_acc = 0.0
            records.append(finish(rec, elapsed))

    params = state.params
    return Trace(records=records, algorithm=name, mode=mode, seed=seed, dim=dim,
                 L=state.L, x0=x_start, f_ref=f_ref, x_ref=x_ref_arr, params=params,
                 x_final=state.x.copy(), z_final=state.z.copy())


__all__ = [
    "ALGORITHMS", "DescentViolation", "Rule", "SolverDivergedError", "SolverState",
    "Trace", "TraceRecord", "TRACE_FIELDS", "init_state", "run", "select_greedy",
    "select_random", "step_gcd_baseline", "step_plain", "step_strong",
]
