"""Figure rendering for the CLI report paths.

Each helper takes the already-computed report object and writes one PNG next
to the delimited output.  Figures are deliberately plain: log scales where
the quantities decay polynomially, one series per curve, no styling beyond
what matplotlib ships.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_walk1d(rows, path: str, scaled: bool = True) -> str:
    """rows: (n, lower, upper, sqrt_n_p, stderr) tuples."""
    ns = [r[0] for r in rows]
    ys = [r[3] for r in rows]
    fig, ax = _new_axes("sqrt(n)-scaled boundary event probability", "n", "sqrt(n) * P")
    ax.set_xscale("log", base=2)
    ax.plot(ns, ys, "o-")
    lo = [math.sqrt(r[0]) * r[1] for r in rows]
    hi = [math.sqrt(r[0]) * r[2] for r in rows]
    ax.fill_between(ns, lo, hi, alpha=0.25)
    return _save(fig, path)


def plot_capacity(content_by_min_level, path: str) -> str:
    ms = [m for m, _ in content_by_min_level]
    vals = [v for _, v in content_by_min_level]
    fig, ax = _new_axes("Hausdorff content by minimum cutset level", "min level", "content")
    ax.plot(ms, vals, "s-")
    return _save(fig, path)


def plot_scaling(rows, path: str) -> str:
    """rows: DepthQuantiles records from the conductance scaling run."""
    ds = [r.depth for r in rows]
    med = [r.conductance_q[1] for r in rows]
    q25 = [r.conductance_q[0] for r in rows]
    q75 = [r.conductance_q[2] for r in rows]
    fig, ax = _new_axes("Effective conductance by truncation depth", "depth", "conductance")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.plot(ds, med, "o-", label="median")
    ax.fill_between(ds, q25, q75, alpha=0.25, label="interquartile")
    ax.legend()
    return _save(fig, path)


def plot_stable(report, path: str) -> str:
    ns = [r.n for r in report.rows if r.estimate > 0]
    ps = [r.estimate for r in report.rows if r.estimate > 0]
    fig, ax = _new_axes(
        f"Linear-boundary survival, stable index {report.alpha}", "n", "P(stay above)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.plot(ns, ps, "o", label="estimate")
    if ns and not math.isnan(report.slope):
        anchor = ps[0] / ns[0] ** report.slope
        ax.plot(ns, [anchor * n ** report.slope for n in ns], "-",
                label=f"fit slope {report.slope:.2f}")
    ax.legend()
    return _save(fig, path)
