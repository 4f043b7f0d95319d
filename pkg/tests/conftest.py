import os

import numpy as np
import pytest

from cdkit.data import SyntheticSpec, generate_linear_regression, load_libsvm
from cdkit.diagnostics import reference_solve
from cdkit.objectives import LeastSquaresProblem, LogisticProblem

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
SMALL_LIBSVM = os.path.join(DATA_DIR, "small.libsvm")

_ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail=""):
    _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {name}"
                             + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_ls(rng):
    X = rng.standard_normal((30, 8))
    y = rng.standard_normal(30)
    return LeastSquaresProblem(X, y)


@pytest.fixture
def small_logistic(rng):
    X = rng.standard_normal((40, 6))
    labels = np.where(rng.standard_normal(40) + X[:, 0] > 0, 1.0, -1.0)
    return LogisticProblem(X, labels)


@pytest.fixture(scope="session")
def synthetic_k100():
    ds = generate_linear_regression(SyntheticSpec(200, 100, 100.0, 1.0, seed=1))
    problem = ds.problem()
    return problem, reference_solve(problem)


@pytest.fixture(scope="session")
def libsvm_problem():
    problem = load_libsvm(SMALL_LIBSVM).problem()
    return problem, reference_solve(problem)
