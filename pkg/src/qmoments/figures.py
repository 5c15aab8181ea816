"""Figure rendering for the report-producing commands.

Each report CSV gets a companion PNG with the same basename.  Rendering
is headless (Agg) and deliberately plain: one axes per figure, log scales
where the data spans decades.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, ax, path, title, xlabel, ylabel):
    ax.set_title(title, fontsize=10)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def square_residuals_figure(rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = [r["n"] for r in rows]
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.plot(ns, [r["normalized_residual"] for r in rows], "o-", ms=4)
    return _finish(fig, ax, path, f"square-case residuals, z = {rows[0]['z']}",
                   "n = m^2", "residual / z^0.6")


def nonsquare_ratio_figure(max_by_z, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    zs = sorted(max_by_z)
    ax.semilogx(zs, [max_by_z[z] for z in zs], "s-")
    return _finish(fig, ax, path, "non-square case: max normalized |T|",
                   "z", "max |T| / (sqrt(z) n^(1/4) log 2n)")


def convergence_figure(rows, candidates, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [r["X"] for r in rows]
    for name in candidates:
        ax.semilogx(xs, [r[f"ratio_{name}"] for r in rows], "o-", label=name)
    ax.axhline(1.0, color="0.6", lw=0.8)
    ax.legend(fontsize=8)
    return _finish(fig, ax, path, "moment / candidate main term", "X", "ratio")


def diag_trend_figure(rows, candidates, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ys = [r["Y"] for r in rows]
    ax.semilogx(ys, [r["normalized"] for r in rows], "o-", label="D_3 / Y^(3/2)")
    for name, c in candidates.items():
        ax.axhline(c, ls="--", lw=1, label=f"{name} = {c:.5f}")
    ax.legend(fontsize=8)
    return _finish(fig, ax, path, "diagonal sum, normalized", "Y", "D_3 / Y^(3/2)")


def perron_fit_figure(result, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ys = [r["Y"] for r in result["rows"]]
    rs = [max(abs(r["residual"]), 1e-300) for r in result["rows"]]
    ax.loglog(ys, rs, "o", label="|D_2(Y) - cY|")
    slope, intercept = result["slope"], result["intercept"]
    fit = [math.exp(intercept + slope * math.log(y)) for y in ys]
    ax.loglog(ys, fit, "-", label=f"fit slope {slope:.3f}")
    ax.legend(fontsize=8)
    return _finish(fig, ax, path, f"residual fit, parity = {result['parity']}", "Y", "|residual|")


def polytope_trend_figure(report, path, reference=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [r["x"] for r in report["rows"]]
    vals = [r["normalized"] for r in report["rows"]]
    errs = [(r["ci3"] or 0.0) for r in report["rows"]]
    ax.errorbar(xs, vals, yerr=errs, fmt="o-", capsize=3, label="normalized volume")
    if reference is not None:
        ax.axhline(reference, ls="--", color="0.4", label=f"limit {reference}")
    ax.set_xscale("log")
    ax.legend(fontsize=8)
    return _finish(fig, ax, path, "normalized volume trend", "x", "vol / (x^(k/2) (log x)^(q-k))")
