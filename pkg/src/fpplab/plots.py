"""Figure rendering for experiment reports.

Each experiment that has a natural picture gets one PNG next to its CSV
output.  Rendering is best-effort presentation; all quantitative content
lives in the CSV/manifest files.
"""

from __future__ import annotations

import math
from typing import List

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import groups

_RC = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.bbox": "tight",
}


def _new_axes(width=4.8, height=3.4):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def _save(fig, prefix: str, name: str) -> str:
    path = f"{prefix}.{name}.png"
    fig.savefig(path)
    plt.close(fig)
    return path


def _scatter_elements(ax, spec, elements, values, label):
    pts = np.array([list(g) for g in elements], dtype=np.float64)
    sc = ax.scatter(pts[:, 0], pts[:, 1], c=values, s=4, cmap="viridis")
    ax.set_aspect("equal")
    ax.figure.colorbar(sc, ax=ax, label=label)


def render(cfg, result, prefix: str) -> List[str]:
    """Render the experiment's figures; returns the created file paths."""
    name = cfg.experiment
    data = result.plot_data
    try:
        fn = _FIGURES.get(name)
        if fn is None:
            return []
        return fn(cfg, data, prefix)
    except Exception as exc:   # figures must never sink a finished run
        print(f"warning: figure rendering failed: {exc}")
        return []


def _fig_ball(cfg, data, prefix):
    spec = cfg.group
    elements, dists = data["elements"], data["dists"]
    values = data.get("times", dists)
    label = "omega time" if "times" in data else "word distance"
    fig, ax = _new_axes()
    if spec.kind in (groups.HEISENBERG, groups.LATTICE) and len(elements[0]) >= 2:
        _scatter_elements(ax, spec, elements, values, label)
        ax.set_xlabel("u" if spec.kind == groups.HEISENBERG else "x0")
        ax.set_ylabel("v" if spec.kind == groups.HEISENBERG else "x1")
    else:
        ax.hist(values, bins=min(40, max(5, len(set(map(float, values))))))
        ax.set_xlabel(label)
        ax.set_ylabel("count")
    ax.set_title(f"ball, {spec.describe()}, {len(elements)} elements")
    return [_save(fig, prefix, "ball")]


def _fig_path(cfg, data, prefix):
    spec = data["spec"]
    path = data.get("path") or (data["report"].z,)
    if spec.kind != groups.LATTICE or spec.dim != 2:
        return []
    pts = np.array([list(g) for g in path], dtype=np.float64)
    fig, ax = _new_axes()
    if len(pts) > 1:
        ax.plot(pts[:, 0], pts[:, 1], "-", lw=1, color="tab:blue")
    ax.plot(pts[0, 0], pts[0, 1], "o", color="tab:green", label="x")
    ax.plot(pts[-1, 0], pts[-1, 1], "o", color="tab:red", label="y")
    if "report" in data:
        z = data["report"].z
        ax.plot([z[0]], [z[1]], "s", color="tab:orange", label="z")
    ax.set_aspect("equal")
    ax.legend()
    ax.set_title(f"optimal path, {len(path)} vertices")
    return [_save(fig, prefix, "path")]


def _fig_tail(cfg, data, prefix):
    fit = data["fit"]
    fig, ax = _new_axes()
    xs = fit.u_grid ** 2 / fit.d_s
    positive = fit.tail > 0
    ax.semilogy(xs[positive], fit.tail[positive], "o", ms=3, label="empirical tail")
    grid = np.linspace(0, xs.max(), 50)
    ax.semilogy(grid, np.exp(fit.intercept + fit.slope * grid), "-",
                label=f"fit slope {fit.slope:.3g}")
    ax.set_xlabel("u^2 / d_S")
    ax.set_ylabel("P(|T - mean| >= u)")
    ax.legend()
    ax.set_title(f"concentration tail, d_S = {fit.d_s}, {fit.replica_count} replicas")
    return [_save(fig, prefix, "tail")]


def _fig_variance(cfg, data, prefix):
    scan = data["scan"]
    ns = np.array(scan.n_grid, dtype=np.float64)
    keep = ns > 0
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.2, 3.2))
    ax1.errorbar(ns[keep], scan.variances[keep],
                 yerr=[scan.variances[keep] - scan.ci_lo[keep],
                       scan.ci_hi[keep] - scan.variances[keep]],
                 fmt="o-", ms=3, capsize=3)
    ax1.set_xscale("log")
    ax1.set_yscale("log")
    ax1.set_xlabel("n")
    ax1.set_ylabel("var")
    ax2.plot(ns[keep], scan.var_over_n[keep], "o-", ms=3, label="var / n")
    ax2.plot(ns[keep], scan.var_lognorm[keep], "s-", ms=3, label="var (1+log n)/n")
    ax2.set_xlabel("n")
    ax2.legend()
    fig.suptitle("variance scaling")
    fig.tight_layout()
    return [_save(fig, prefix, "variance")]


def _fig_fluctuation(cfg, data, prefix):
    scan = data["scan"]
    fig, ax = _new_axes()
    rs = np.array(scan.r_grid, dtype=np.float64)
    ax.errorbar(rs, scan.normalized,
                yerr=[scan.normalized - scan.ci_lo, scan.ci_hi - scan.normalized],
                fmt="o-", ms=4, capsize=3)
    ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("sup |T - mean| / sqrt(r log r)")
    ax.set_title("normalized sup-fluctuations")
    return [_save(fig, prefix, "fluctuation")]


def _fig_subdivision(cfg, data, prefix):
    rep = data["report"]
    fig, ax = _new_axes()
    idx = np.arange(len(rep.gap_means))
    ax.bar(idx, rep.gap_means, yerr=rep.gap_ses, capsize=2, color="tab:blue")
    ax.set_xlabel("gap index")
    ax.set_ylabel("estimated mean gap")
    ax.set_title(f"dyadic chain, inflation {rep.inflation_ratio:.4f}")
    return [_save(fig, prefix, "gaps")]


def _fig_shape_scan(cfg, data, prefix):
    scan = data["scan"]
    spec = data["spec"]
    k = len(scan.clouds)
    fig, axes = plt.subplots(1, k + 1, figsize=(2.6 * (k + 1), 2.8))
    for ax, n, cloud in zip(axes[:-1], scan.n_grid, scan.clouds):
        pts = cloud.points
        if pts.shape[1] >= 3:
            sc = ax.scatter(pts[:, 0], pts[:, 1], c=pts[:, 2], s=1, cmap="coolwarm")
        else:
            ax.scatter(pts[:, 0], pts[:, 1], s=1)
        ax.set_aspect("equal")
        ax.set_title(f"n = {n}", fontsize=8)
        ax.tick_params(labelsize=6)
    mids = [f"{a}-{b}" for a, b in zip(scan.n_grid, scan.n_grid[1:])]
    axes[-1].plot(range(len(scan.distances)), scan.distances, "o-")
    axes[-1].set_xticks(range(len(scan.distances)), mids, fontsize=6)
    axes[-1].set_title("consecutive d_H", fontsize=8)
    fig.suptitle(f"rescaled ball clouds, {spec.describe()}")
    fig.tight_layout()
    return [_save(fig, prefix, "shape")]


def _fig_l1_compare(cfg, data, prefix):
    rep = data["report"]
    if rep.dim != 2:
        return []
    fig, ax = _new_axes(4.2, 4.2)
    ax.scatter(rep.cloud.points[:, 0], rep.cloud.points[:, 1], s=2,
               color="tab:blue", label="rescaled FPP ball")
    radius = 1.0 / rep.weight
    square = np.array([[radius, 0], [0, radius], [-radius, 0], [0, -radius],
                       [radius, 0]])
    ax.plot(square[:, 0], square[:, 1], "-", color="tab:red", lw=1,
            label="l1 ball boundary")
    ax.set_aspect("equal")
    ax.legend(fontsize=7)
    ax.set_title(f"d_H = {rep.distance:.4g} (bound {rep.bound:.4g})")
    return [_save(fig, prefix, "l1")]


def _fig_gh(cfg, data, prefix):
    rep = data["report"]
    fig, ax = _new_axes()
    ax.axhline(0.0, color="tab:red", lw=1)
    ax.plot(rep.margins, "o", ms=3)
    ax.set_xlabel("pair")
    ax.set_ylabel("|T - mean| - (eps n + 3 se)")
    ax.set_title(f"GH margin check, worst {rep.worst_margin:.4g}")
    return [_save(fig, prefix, "gh")]


def _fig_direction(cfg, data, prefix):
    est = data["estimate"]
    fig, ax = _new_axes()
    ax.errorbar(est.n_grid, est.means, yerr=est.std_errors, fmt="o-", ms=4,
                capsize=3)
    ax.set_xlabel("n")
    ax.set_ylabel("mean d_omega(e, g^n) / n")
    ax.set_title(f"directional norm, trailing spread {est.trailing_spread:.4g}")
    return [_save(fig, prefix, "direction")]


_FIGURES = {
    "ball": _fig_ball,
    "distance": _fig_path,
    "tail": _fig_tail,
    "variance-scan": _fig_variance,
    "fluctuation-scan": _fig_fluctuation,
    "midpoint": _fig_path,
    "subdivision": _fig_subdivision,
    "shape-scan": _fig_shape_scan,
    "l1-compare": _fig_l1_compare,
    "gh-check": _fig_gh,
    "direction": _fig_direction,
}
