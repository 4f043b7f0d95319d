"""CSV writers and seed aggregation for solver traces."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

TRACE_HEADER = ("k", "elapsed_s", "f", "gap", "j1", "j2", "theta_or_a",
                "gamma_num", "gamma_den", "energy")
AGG_HEADER = ("k", "mean_gap", "median_gap", "min_gap", "max_gap", "mean_elapsed_s")
GAMMA_HEADER = ("k", "cum_num", "cum_den", "ratio")


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def _writer(stream):
    return csv.writer(stream, lineterminator="\n")


def write_trace_csv(trace, stream) -> None:
    w = _writer(stream)
    w.writerow(TRACE_HEADER)
    for r in trace.records:
        w.writerow([fmt(r.k), fmt(r.elapsed_seconds), fmt(r.f_value), fmt(r.gap),
                    fmt(r.j1), fmt(r.j2), fmt(r.theta_or_a), fmt(r.gamma_num_term),
                    fmt(r.gamma_den_term), fmt(r.energy)])


def read_trace_csv(stream) -> dict:
    """Columns of a trace CSV as numpy arrays keyed by header name."""
    rows = list(csv.reader(stream))
    header, body = rows[0], rows[1:]
    cols = list(zip(*body)) if body else [()] * len(header)
    return {h: np.array([float(v) for v in c]) for h, c in zip(header, cols)}


@dataclass
class Aggregate:
    algorithm: str
    ks: np.ndarray
    mean_gap: np.ndarray
    median_gap: np.ndarray
    min_gap: np.ndarray
    max_gap: np.ndarray
    mean_elapsed: np.ndarray
    n_seeds: int


def aggregate(traces) -> Aggregate:
    """Per-row statistics of the gap across seeds (rows must line up)."""
    traces = list(traces)
    if not traces:
        raise ValueError("nothing to aggregate")
    ks = traces[0].ks
    for t in traces[1:]:
        if not np.array_equal(t.ks, ks):
            raise ValueError("traces were recorded at different iterations")
    G = np.array([t.gaps for t in traces])
    T = np.array([t.column("elapsed_seconds") for t in traces])
    return Aggregate(traces[0].algorithm, ks, G.mean(0), np.median(G, 0),
                     G.min(0), G.max(0), T.mean(0), len(traces))


def write_aggregate_csv(agg: Aggregate, stream) -> None:
    w = _writer(stream)
    w.writerow(AGG_HEADER)
    for row in zip(agg.ks, agg.mean_gap, agg.median_gap, agg.min_gap, agg.max_gap,
                   agg.mean_elapsed):
        w.writerow([fmt(int(row[0]))] + [fmt(float(v)) for v in row[1:]])


def decade_points(iters: int) -> list[int]:
    out, k = [0], 1
    while k <= iters:
        out.append(k)
        k *= 10
    if out[-1] != iters:
        out.append(iters)
    return out


def write_summary_csv(aggs, iters: int, stream) -> None:
    """Median gap of each algorithm at 0, 1, 10, 100, ... and the final k."""
    w = _writer(stream)
    w.writerow(["k"] + [f"{a.algorithm}_median_gap" for a in aggs])
    for k in decade_points(iters):
        row = [fmt(k)]
        for a in aggs:
            hit = np.flatnonzero(a.ks == k)
            row.append(fmt(float(a.median_gap[hit[0]])) if hit.size else "nan")
        w.writerow(row)


def write_gamma_csv(est, stream) -> None:
    w = _writer(stream)
    w.writerow(GAMMA_HEADER)
    for k, n, d, r in zip(est.ks, est.cum_num, est.cum_den, est.ratio_series):
        w.writerow([fmt(int(k)), fmt(float(n)), fmt(float(d)), fmt(float(r))])


def envelope_respected(values, bounds) -> bool:
    values, bounds = np.asarray(values), np.asarray(bounds)
    ok = ~np.isnan(values)
    return bool(np.all(values[ok] <= bounds[ok]))
