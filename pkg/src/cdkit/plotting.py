"""Figure rendering for the report commands (PNG files next to the CSVs)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

COLORS = {"agcd": "#d62728", "ascd": "#1f77b4", "arcd": "#2ca02c", "gcd": "#7f7f7f"}

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "figure.dpi": 120,
}


def _positive(values, floor=1e-16):
    v = np.asarray(values, dtype=float)
    return np.where(v > floor, v, floor)


def plot_gap_curves(aggs, out_dir, stem="compare"):
    """Median gap (with min/max band) against iterations and against time.

    Writes ``<stem>_iterations.png`` and ``<stem>_time.png`` into
    ``out_dir`` and returns their paths.
    """
    paths = []
    with plt.rc_context(STYLE):
        for xaxis in ("iterations", "time"):
            fig, ax = plt.subplots(figsize=(4.5, 3.4))
            for a in aggs:
                x = a.ks if xaxis == "iterations" else a.mean_elapsed
                c = COLORS.get(a.algorithm)
                ax.semilogy(x, _positive(a.median_gap), color=c, label=a.algorithm.upper())
                if a.n_seeds > 1:
                    ax.fill_between(x, _positive(a.min_gap), _positive(a.max_gap),
                                    color=c, alpha=0.15, linewidth=0)
            ax.set_xlabel("iteration" if xaxis == "iterations" else "time (s)")
            ax.set_ylabel(r"$f(x^k) - f^*$")
            ax.legend(frameon=False)
            fig.tight_layout()
            path = os.path.join(out_dir, f"{stem}_{xaxis}.png")
            fig.savefig(path)
            plt.close(fig)
            paths.append(path)
    return paths


def plot_gamma_ratio(est, path):
    """Cumulative-sum ratio against k with the burn-in and the estimate marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.4))
        ax.plot(est.ks, est.ratio_series, color="#1f77b4")
        ax.axvline(est.K_bar, color="0.5", linestyle=":", label=r"$\bar K$")
        ax.axhline(est.gamma, color="#d62728", linestyle="--",
                   label=rf"$\gamma = {est.gamma:.3g}$")
        ax.set_xlabel("iteration")
        ax.set_ylabel("cumulative ratio")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
