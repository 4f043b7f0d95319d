"""Accelerated greedy, semi-greedy and randomized coordinate descent."""

from .data import (
    Dataset,
    SyntheticSpec,
    generate_linear_regression,
    load_dataset,
    parse_libsvm,
    save_dataset,
)
from .diagnostics import (
    bound_agcd,
    bound_plain,
    bound_strong,
    estimate_gamma,
    lyapunov_energy,
    reference_solve,
)
from .numerics import Smoothness, strong_params, theta_next, weighted_inv_norm_sq, weighted_norm_sq
from .objectives import GradientCache, LeastSquaresProblem, LogisticProblem, strong_convexity
from .solvers import Rule, Trace, TraceRecord, run

__version__ = "0.1.0"
