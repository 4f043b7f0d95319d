"""``cdkit`` command line: generate, run, compare, gamma.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import diagnostics as dg
from .data import (
    DatasetFormatError,
    SyntheticSpec,
    generate_linear_regression,
    gram_condition,
    read_any,
    save_dataset,
)
from .objectives import DegenerateColumnError, strong_convexity
from .report import (
    aggregate,
    write_aggregate_csv,
    write_gamma_csv,
    write_summary_csv,
    write_trace_csv,
)
from .solvers import SolverDivergedError, run

log = logging.getLogger("cdkit")


class UsageError(Exception):
    pass


def _kappa(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid kappa {text!r}") from None
    if not v >= 1:
        raise argparse.ArgumentTypeError("kappa must be >= 1 or 'inf'")
    return v


def _mu(text: str):
    t = text.lower()
    if t in ("none", "exact", "smallest-positive"):
        return t
    try:
        v = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(
            "mu must be a number, 'exact', 'smallest-positive' or 'none'") from None
    if v < 0:
        raise argparse.ArgumentTypeError("mu must be >= 0")
    return v


def _seed_list(text: str) -> list[int]:
    """``"1,2,5"`` or ``"0:50"`` (half-open range)."""
    try:
        if ":" in text:
            lo, hi = text.split(":")
            seeds = list(range(int(lo), int(hi)))
        else:
            seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def _algo_list(text: str) -> list[str]:
    algos = [a.strip().lower() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in ("agcd", "ascd", "arcd", "gcd")]
    if bad or not algos:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s): {', '.join(bad) or text!r}")
    return algos


def _add_dataset_flags(p):
    g = p.add_argument_group("dataset (a file, or a synthetic least-squares instance)")
    g.add_argument("--data", help="cdkit-dataset v1 or LIBSVM file")
    g.add_argument("--drop-empty-columns", action="store_true",
                   help="discard all-zero features instead of failing")
    g.add_argument("--samples", type=int, default=200)
    g.add_argument("--dim", type=int, default=100)
    g.add_argument("--kappa", type=_kappa, default=100.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--data-seed", type=int, default=0)


def _add_solver_flags(p):
    p.add_argument("--mode", choices=("plain", "strong"), default="plain")
    p.add_argument("--mu", type=_mu, default="none",
                   help="strong convexity: a value, 'exact', 'smallest-positive' or 'none'")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--record-period", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic least-squares instance")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--kappa", type=_kappa, default=100.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run one solver and write its trace")
    _add_dataset_flags(p)
    p.add_argument("--algo", choices=("agcd", "ascd", "arcd", "gcd"), default="ascd")
    _add_solver_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", required=True, help="output CSV path")

    p = sub.add_parser("compare", help="seed-aggregated gap curves for several solvers")
    _add_dataset_flags(p)
    p.add_argument("--algos", type=_algo_list, default=["agcd", "ascd", "arcd"])
    p.add_argument("--seeds", type=_seed_list, default=[0])
    _add_solver_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot", action="store_true", help="also render PNG figures")

    p = sub.add_parser("gamma", help="estimate the AGCD gamma constant")
    _add_dataset_flags(p)
    p.add_argument("--iters", type=int, default=20000)
    p.add_argument("--kbar", type=int, default=dg.DEFAULT_K_BAR)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="ratio-series CSV path")
    p.add_argument("--plot", action="store_true", help="also render a PNG next to the CSV")
    return parser


def _load_dataset(args):
    if args.data:
        ds = read_any(args.data)
        if args.drop_empty_columns:
            ds = ds.drop_empty_columns()
        return ds
    spec = SyntheticSpec(args.samples, args.dim, args.kappa, args.sigma, args.data_seed)
    return generate_linear_regression(spec)


def _resolve_mode(args, problem):
    """Translate (mode, mu policy) into the solver's (mode, mu)."""
    mode, mu = args.mode, args.mu
    if mode == "plain":
        return "plain", None
    if mu == "none":
        raise UsageError("--mode strong needs --mu")
    if isinstance(mu, str):
        if problem.kind != "regression":
            raise UsageError(f"--mu {mu} is only available for least squares")
        return "strong", strong_convexity(problem, mu)
    if mu == 0.0:
        return "plain", None
    return "strong", float(mu)


def _check_iters(args):
    if args.iters < 0:
        raise UsageError("--iters must be >= 0")
    if getattr(args, "record_period", 1) < 1:
        raise UsageError("--record-period must be >= 1")


def cmd_generate(args) -> int:
    spec = SyntheticSpec(args.samples, args.dim, args.kappa, args.sigma, args.seed)
    ds = generate_linear_regression(spec)
    save_dataset(ds, args.out)
    lo, hi, cond = gram_condition(ds.matrix)
    print(f"wrote {args.out}: {ds.n_samples} x {ds.dim}")
    print(f"cond(X^T X) = {cond:.17g}")
    print(f"lambda_min(X^T X) = {lo:.17g}")
    mu = strong_convexity(ds.problem(), "exact")
    print(f"mu (exact) = {mu:.17g}")
    return 0


def _envelope_report(trace):
    """Print whether the final row sits inside the matching theoretical bound."""
    last = trace.records[-1]
    if trace.x_ref is None or last.k < 1 or trace.mode == "gcd":
        return
    if trace.mode == "plain":
        bound = dg.bound_plain(last.k, trace.dim, trace.R_sq)
        ok = last.gap <= bound
        label = "expected-gap envelope" + (" (gamma=1)" if trace.algorithm == "agcd" else "")
        print(f"{label} at k={last.k}: {bound:.6e} -> {'respected' if ok else 'EXCEEDED'}")
    else:
        e0 = trace.records[0].energy
        bound = dg.bound_strong(last.k, trace.params.a, e0)
        ok = last.energy <= bound
        print(f"energy contraction bound at k={last.k}: {bound:.6e} -> "
              f"{'respected' if ok else 'EXCEEDED'}")
    if not ok:
        log.warning("single-run trace exceeds an in-expectation bound; not an error")


def cmd_run(args) -> int:
    _check_iters(args)
    ds = _load_dataset(args)
    problem = ds.problem()
    mode, mu = _resolve_mode(args, problem)
    ref = dg.reference_solve(problem)
    trace = run(problem, args.algo, args.iters, mode=mode, mu=mu, seed=args.seed,
                f_ref=ref.f_ref, x_ref=ref.x_ref, record_period=args.record_period)
    with open(args.trace, "w", encoding="utf-8", newline="") as fh:
        write_trace_csv(trace, fh)
    print(f"final gap at k={trace.records[-1].k}: {trace.records[-1].gap:.6e}")
    _envelope_report(trace)
    return 0


def _run_cell(job):
    problem, algo, iters, mode, mu, seed, f_ref, x_ref, period = job
    return run(problem, algo, iters, mode=mode, mu=mu, seed=seed, f_ref=f_ref,
               x_ref=x_ref, record_period=period)


def worker_count() -> int:
    env = os.environ.get("CDKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer CDKIT_THREADS=%r", env)
    return os.cpu_count() or 1


def run_grid(problem, algos, seeds, iters, mode, mu, f_ref, x_ref, period, workers=None):
    """Run every (algorithm, seed) cell; results ordered by (algorithm, seed)."""
    jobs = [(problem, a, iters, mode, mu, s, f_ref, x_ref, period) for a in algos for s in seeds]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        traces = [_run_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            traces = list(ex.map(_run_cell, jobs))
    return {a: traces[i * len(seeds):(i + 1) * len(seeds)] for i, a in enumerate(algos)}


def cmd_compare(args) -> int:
    _check_iters(args)
    ds = _load_dataset(args)
    problem = ds.problem()
    mode, mu = _resolve_mode(args, problem)
    ref = dg.reference_solve(problem)
    os.makedirs(args.out, exist_ok=True)
    grid = run_grid(problem, args.algos, args.seeds, args.iters, mode, mu, ref.f_ref,
                    None, args.record_period)
    aggs = []
    for algo in args.algos:
        agg = aggregate(grid[algo])
        aggs.append(agg)
        with open(os.path.join(args.out, f"{algo}.csv"), "w", encoding="utf-8", newline="") as fh:
            write_aggregate_csv(agg, fh)
    with open(os.path.join(args.out, "summary.csv"), "w", encoding="utf-8", newline="") as fh:
        write_summary_csv(aggs, args.iters, fh)
    for agg in aggs:
        print(f"{agg.algorithm:>5}: median gap at k={int(agg.ks[-1])} = {agg.median_gap[-1]:.6e}")
    if args.plot:
        from .plotting import plot_gap_curves

        for path in plot_gap_curves(aggs, args.out):
            print(f"figure: {path}")
    return 0


def cmd_gamma(args) -> int:
    if args.kbar >= args.iters:
        raise UsageError("--kbar must be smaller than --iters")
    ds = _load_dataset(args)
    problem = ds.problem()
    ref = dg.reference_solve(problem)
    trace = run(problem, "agcd", args.iters, seed=args.seed, f_ref=ref.f_ref, x_ref=ref.x_ref)
    try:
        est = dg.estimate_gamma(trace, args.kbar)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        write_gamma_csv(est, fh)
    print(f"gamma = {est.gamma:.17g} (K_bar = {est.K_bar})")
    print(f"sign violations beyond K_bar = {est.sign_violations}")
    late = trace.ks >= args.kbar
    if est.gamma <= 1.0:
        env = np.array([dg.bound_agcd(int(k), trace.dim, est.gamma, trace.R_sq)
                        for k in trace.ks[late]])
        ok = bool(np.all(trace.gaps[late] <= env))
        print(f"AGCD envelope for k >= K_bar: {'respected' if ok else 'EXCEEDED'}")
    else:
        print("gamma > 1: the improved AGCD envelope does not apply")
    if args.plot:
        from .plotting import plot_gamma_ratio

        path = os.path.splitext(args.out)[0] + ".png"
        plot_gamma_ratio(est, path)
        print(f"figure: {path}")
    return 0


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "compare": cmd_compare,
            "gamma": cmd_gamma}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cdkit {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, DatasetFormatError, DegenerateColumnError, SolverDivergedError,
            ValueError) as exc:
        print(f"cdkit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
