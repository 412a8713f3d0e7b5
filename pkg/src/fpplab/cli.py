"""Experiment runner: config parsing, dispatch, CSV/manifest/figure emission.

Exit codes: 0 success, 2 configuration or precondition error, 3 exceeded
memory/exploration budget, 4 failed statistical assertion (--assert).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import config as cfgmod
from . import engine, groups, reporting, shapes, solvers, stats
from .errors import BudgetError, ConfigError, DiagnosticError, FpplabError, HypothesisError
from .weights import WeightAssignment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_ASSERT = 4


@dataclass
class RunResult:
    header: Sequence[str]
    rows: List[Sequence]
    summary: Dict[str, object]
    extra_csvs: List[Tuple[str, Sequence[str], List[Sequence]]] = field(default_factory=list)
    assertion: Optional[Tuple[bool, str]] = None
    plot_data: Dict[str, object] = field(default_factory=dict)


def _coord_names(spec: groups.GroupSpec) -> List[str]:
    if spec.kind == groups.HEISENBERG:
        return ["u", "v", "w"]
    if spec.kind == groups.LATTICE:
        return [f"x{i}" for i in range(spec.dim)]
    return ["word"]


def _lattice_ball_count(d: int, r: int) -> int:
    # exact |B_1(r)| in Z^d: counts[t] = #points at l1 distance exactly t,
    # built up one axis at a time
    counts = [1] + [0] * r
    for _ in range(d):
        new = []
        for t in range(r + 1):
            s = counts[t]
            for v in range(1, t + 1):
                s += 2 * counts[t - v]
            new.append(s)
        counts = new
    return sum(counts)


def _tree_ball_count(r_reg: int, radius: int) -> int:
    if radius == 0:
        return 1
    return 1 + r_reg * ((r_reg - 1) ** radius - 1) // (r_reg - 2)


# ---------------------------------------------------------------------------
# experiment runners


def _run_ball(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec = cfg.group
    radius = cfg.params["radius"]
    horizon = cfg.params.get("horizon")
    names = _coord_names(spec)
    if horizon is not None:
        if cfg.dist is None:
            raise ConfigError("horizon: an FPP ball needs a distribution")
        return _run_fpp_ball(cfg, horizon)

    if spec.kind in (groups.HEISENBERG, groups.LATTICE):
        table = groups.ball_table(spec, radius)
        elements = [tuple(int(c) for c in row) for row in table.coords]
        dists = [int(t) for t in table.dists]
    else:
        wb = groups.word_ball(spec, groups.identity(spec), radius)
        items = sorted(wb.members.items(), key=lambda kv: groups.encode(spec, kv[0]))
        elements = [g for g, _ in items]
        dists = [t for _, t in items]
    rows = []
    for g, t in zip(elements, dists):
        cell = list(g) if spec.kind != groups.TREE else [reporting.element_str(spec, g)]
        rows.append([reporting.element_key_hex(spec, g), *cell, t])

    summary = {"count": len(rows), "radius": radius}
    assertion = _ball_assertion(spec, radius, elements, dists)
    return RunResult(["key", *names, "word_distance"], rows, summary,
                     assertion=assertion,
                     plot_data={"elements": elements, "dists": dists})


def _ball_assertion(spec, radius, elements, dists) -> Tuple[bool, str]:
    if spec.kind == groups.LATTICE:
        expect = _lattice_ball_count(spec.dim, radius)
        ok = len(elements) == expect
        return ok, f"ball count {len(elements)} vs closed form {expect}"
    if spec.kind == groups.TREE:
        expect = _tree_ball_count(spec.arity, radius)
        ok = len(elements) == expect
        return ok, f"ball count {len(elements)} vs closed form {expect}"
    # no closed form: cross-check sampled distances against bidirectional BFS
    rng = np.random.default_rng(0)
    idx = rng.integers(0, len(elements), size=min(64, len(elements)))
    e = groups.identity(spec)
    for i in idx:
        if groups.word_distance(spec, e, elements[int(i)]) != dists[int(i)]:
            return False, f"BFS distance mismatch at {elements[int(i)]!r}"
    return True, f"sampled distances agree with bidirectional BFS ({len(idx)} checks)"


def _run_fpp_ball(cfg: cfgmod.ExperimentConfig, horizon: float) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    names = _coord_names(spec)
    if spec.kind == groups.HEISENBERG and dist.bounded and dist.support_min > 0:
        solver = solvers.HeisenbergBallSolver(dist, horizon)
        coords, times = solver.ball(cfg.seed)
        elements = [tuple(int(c) for c in row) for row in coords]
        word_table = groups.ball_table(spec, math.ceil(horizon / dist.support_min))
        dists = word_table.lookup(groups.pack_heisenberg(coords))
        word_dists = [int(t) for t in dists]
        times = [float(t) for t in times]
    elif spec.kind == groups.LATTICE and dist.bounded and dist.support_min > 0:
        solver = solvers.LatticeBallSolver(spec, dist, horizon)
        coords, tvals = solver.ball(cfg.seed)
        elements = [tuple(int(c) for c in row) for row in coords]
        word_dists = [int(np.abs(row).sum()) for row in coords]
        times = [float(t) for t in tvals]
    else:
        ball = engine.fpp_ball(spec, WeightAssignment(cfg.seed, dist),
                               groups.identity(spec), horizon)
        items = sorted(ball.times.items(), key=lambda kv: groups.encode(spec, kv[0]))
        elements = [g for g, _ in items]
        times = [t for _, t in items]
        word_dists = [groups.pair_distance(spec, groups.identity(spec), g)
                      for g in elements]
    rows = []
    for g, wd, t in zip(elements, word_dists, times):
        cell = list(g) if spec.kind != groups.TREE else [reporting.element_str(spec, g)]
        rows.append([reporting.element_key_hex(spec, g), *cell, wd, t])
    sandwich_ok = True
    if dist.bounded:
        a, b = dist.support_min, dist.support_max
        sandwich_ok = all(a * wd - 1e-9 <= t <= b * wd + 1e-9
                          for wd, t in zip(word_dists, times))
    summary = {"count": len(rows), "horizon": horizon}
    return RunResult(["key", *names, "word_distance", "omega_time"], rows, summary,
                     assertion=(sandwich_ok, "sandwich a*d <= time <= b*d on all members"),
                     plot_data={"elements": elements, "dists": word_dists,
                                "times": times})


def _run_distance(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    x, y = cfg.params["x"], cfg.params["y"]
    res = engine.passage_time(spec, WeightAssignment(cfg.seed, dist), x, y)
    d_s = groups.pair_distance(spec, x, y)
    rows = [[reporting.element_str(spec, x), reporting.element_str(spec, y),
             d_s, res.time, res.settled_count, len(res.path)]]
    summary = {"time": res.time, "d_s": d_s, "settled": res.settled_count}
    ok, detail = True, "trivial"
    if res.path:
        total = engine.path_weight(spec, WeightAssignment(cfg.seed, dist), res.path)
        ok = abs(total - res.time) <= 1e-12 * max(1.0, abs(res.time))
        detail = f"path sum {total!r} vs time {res.time!r}"
        if dist.bounded and ok:
            ok = dist.support_min * d_s - 1e-9 <= res.time <= dist.support_max * d_s + 1e-9
            detail += "; sandwich bound"
    return RunResult(["x", "y", "d_s", "time", "settled", "path_len"], rows,
                     summary, assertion=(ok, detail),
                     plot_data={"path": res.path, "spec": spec})


def _run_mean(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    x, y = cfg.params["x"], cfg.params["y"]
    est = stats.estimate_mean_distance(spec, dist, x, y, cfg.params["replicas"],
                                       cfg.seed, cfg.workers)
    d_s = groups.pair_distance(spec, x, y)
    rows = [[est.mean, est.std_error, est.replica_count, d_s]]
    summary = {"mean": est.mean, "std_error": est.std_error, "d_s": d_s}
    ok, detail = True, "unbounded support: no sandwich to check"
    if dist.bounded:
        lo = dist.support_min * d_s - 3 * est.std_error - 1e-9
        hi = dist.support_max * d_s + 3 * est.std_error + 1e-9
        ok = lo <= est.mean <= hi
        detail = f"mean {est.mean:.6g} within [{lo:.6g}, {hi:.6g}]"
    return RunResult(["mean", "std_error", "replicas", "d_s"], rows, summary,
                     assertion=(ok, detail))


def _run_tail(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    x, y = cfg.params["x"], cfg.params["y"]
    d_s = groups.pair_distance(spec, x, y)
    u_grid = cfg.params.get("u_grid") or stats.default_u_grid(d_s)
    fit = stats.concentration_tail(spec, dist, x, y, cfg.params["replicas"],
                                   u_grid, cfg.seed, cfg.workers)
    rows = [[u, u * u / d_s, t] for u, t in zip(fit.u_grid, fit.tail)]
    summary = {"slope": fit.slope, "intercept": fit.intercept, "mean": fit.mean,
               "fit_points": fit.fit_points, "d_s": d_s}
    u_ref = 2.0 * math.sqrt(d_s)
    ref_idx = int(np.argmin(np.abs(fit.u_grid - u_ref)))
    tail_ref = float(fit.tail[ref_idx])
    ok = fit.slope < 0 and tail_ref < 0.25
    detail = f"slope {fit.slope:.4g} < 0 and tail({fit.u_grid[ref_idx]:.4g}) = {tail_ref:.4g} < 0.25"
    return RunResult(["u", "u2_over_d", "tail"], rows, summary,
                     assertion=(ok, detail),
                     plot_data={"fit": fit})


def _run_variance_scan(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    scan = stats.variance_scan(spec, dist, cfg.params["g"], cfg.params["n_grid"],
                               cfg.params["replicas"], cfg.seed, cfg.workers)
    rows = [[n, v, lo, hi, von, vln]
            for n, v, lo, hi, von, vln in zip(scan.n_grid, scan.variances,
                                              scan.ci_lo, scan.ci_hi,
                                              scan.var_over_n, scan.var_lognorm)]
    summary = {"n_grid": scan.n_grid, "variances": list(scan.variances)}
    if dist.deterministic:
        ok = bool(np.all(scan.variances == 0))
        detail = "deterministic law: all variances exactly 0"
    elif spec.kind == groups.LATTICE and spec.dim == 1:
        # on Z the passage time is a sum of n independent edges, so the
        # variance is exactly n * (b-a)^2/4 for the symmetric two-point law
        edge_var = 0.25 * (dist.b - dist.a) ** 2
        ratios = [v / (edge_var * n) for n, v in zip(scan.n_grid, scan.variances) if n > 0]
        ok = all(0.8 <= r <= 1.2 for r in ratios)
        detail = f"var/(n*(b-a)^2/4) ratios {np.round(ratios, 4).tolist()} within [0.8, 1.2]"
    else:
        # sublinear trend: the normalized series must not grow appreciably
        first, last = scan.var_lognorm[0], scan.var_lognorm[-1]
        n0, n1 = scan.n_grid[0], scan.n_grid[-1]
        lo0, hi0 = scan.ci_lo[0], scan.ci_hi[0]
        lo1, hi1 = scan.ci_lo[-1], scan.ci_hi[-1]
        norm = lambda v, n: v * (1 + math.log(max(n, 1))) / max(n, 1)
        ok = norm(lo1, n1) <= 1.25 * norm(hi0, n0)
        detail = (f"normalized var CI at n={n1} lower {norm(lo1, n1):.4g} <= "
                  f"1.25 * upper {norm(hi0, n0):.4g} at n={n0}")
    return RunResult(["n", "variance", "ci_lo", "ci_hi", "var_over_n", "var_lognorm"],
                     rows, summary, assertion=(ok, detail),
                     plot_data={"scan": scan})


def _run_fluctuation_scan(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    scan = stats.fluctuation_scan(spec, dist, cfg.params["r_grid"],
                                  cfg.params["pair_samples"],
                                  cfg.params["replicas"], cfg.seed, cfg.workers)
    rows = [[r, s, n, lo, hi]
            for r, s, n, lo, hi in zip(scan.r_grid, scan.sups, scan.normalized,
                                       scan.ci_lo, scan.ci_hi)]
    summary = {"r_grid": scan.r_grid, "normalized": list(scan.normalized)}
    if dist.deterministic:
        ok = bool(np.all(scan.sups == 0))
        detail = "deterministic law: all sups exactly 0"
    else:
        ok = scan.ci_lo[-1] <= 1.2 * scan.ci_hi[0]
        detail = (f"normalized sup CI at r={scan.r_grid[-1]} lower {scan.ci_lo[-1]:.4g} "
                  f"<= 1.2 * upper {scan.ci_hi[0]:.4g} at r={scan.r_grid[0]}")
    return RunResult(["r", "sup", "normalized", "norm_ci_lo", "norm_ci_hi"],
                     rows, summary, assertion=(ok, detail),
                     plot_data={"scan": scan})


def _run_midpoint(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    rep = stats.midpoint_search(spec, dist, cfg.params["x"], cfg.params["y"],
                                cfg.params["lam"], cfg.params["replicas"],
                                cfg.seed, cfg.workers)
    rows = [[rep.lam, reporting.element_str(spec, rep.z), rep.deviation,
             rep.normalized, rep.r, rep.mean_xy, rep.se_xy, rep.path_length]]
    summary = {"z": reporting.element_str(spec, rep.z), "deviation": rep.deviation,
               "normalized": rep.normalized, "r": rep.r}
    ok = rep.deviation <= 3.0 * math.sqrt(rep.r * math.log(max(rep.r, 2)))
    detail = f"deviation {rep.deviation:.4g} <= 3*sqrt(r log r) = {3*math.sqrt(rep.r*math.log(max(rep.r,2))):.4g}"
    return RunResult(["lam", "z", "deviation", "normalized", "r", "mean_xy",
                      "se_xy", "path_len"], rows, summary,
                     assertion=(ok, detail), plot_data={"report": rep, "spec": spec})


def _run_subdivision(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    rep = stats.dyadic_subdivision(spec, dist, cfg.params["x"], cfg.params["y"],
                                   cfg.params["k"], cfg.params["replicas"],
                                   cfg.seed, cfg.workers,
                                   alpha0=cfg.params.get("alpha0", 8.0))
    rows = [[i, reporting.element_str(spec, rep.chain[i]),
             reporting.element_str(spec, rep.chain[i + 1]), m, s]
            for i, (m, s) in enumerate(zip(rep.gap_means, rep.gap_ses))]
    summary = {"inflation_ratio": rep.inflation_ratio, "max_gap": rep.max_gap,
               "min_gap": rep.min_gap, "mean_xy": rep.mean_xy,
               "chain_len": len(rep.chain)}
    ok = rep.inflation_ratio <= 1.15 and rep.max_gap <= 2.0 * rep.min_gap
    detail = (f"inflation {rep.inflation_ratio:.4g} <= 1.15 and "
              f"max gap {rep.max_gap:.4g} <= 2 * min gap {rep.min_gap:.4g}")
    return RunResult(["i", "from", "to", "gap_mean", "gap_se"], rows, summary,
                     assertion=(ok, detail), plot_data={"report": rep})


def _run_tree_search(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    rep = stats.tree_fluctuation_search(spec, dist, cfg.params["radius"],
                                        cfg.params["budget"], cfg.params["eps"],
                                        cfg.seed,
                                        segment_len=cfg.params.get("segment_len"))
    rows = [[rep.found, rep.scanned, rep.total_segments, rep.analytic_probability,
             rep.separation, rep.segment_len, rep.d_s,
             rep.d_omega if rep.d_omega is not None else "",
             reporting.element_str(spec, rep.x) if rep.x else "",
             reporting.element_str(spec, rep.y) if rep.y else ""]]
    summary = {"found": rep.found, "scanned": rep.scanned,
               "total_segments": rep.total_segments,
               "analytic_probability": rep.analytic_probability}
    ok = rep.found and rep.analytic_probability > 0.99
    detail = (f"found={rep.found}, analytic probability "
              f"{rep.analytic_probability:.6g} > 0.99")
    return RunResult(["found", "scanned", "total_segments", "analytic_probability",
                      "separation", "segment_len", "d_s", "d_omega", "x", "y"],
                     rows, summary, assertion=(ok, detail))


def _run_shape_scan(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec = cfg.group
    r = cfg.params["r"]
    n_grid = cfg.params["n_grid"]
    control = cfg.params.get("control", False)
    if control:
        scan = shapes.word_ball_cauchy_scan(spec, r, n_grid)
    else:
        scan = shapes.shape_cauchy_scan(spec, cfg.dist, cfg.seed, r, n_grid)
    rows = [[scan.n_grid[i], scan.n_grid[i + 1], d]
            for i, d in enumerate(scan.distances)]
    extra = []
    for n, cloud in zip(scan.n_grid, scan.clouds):
        header = _coord_names(spec) if spec.kind != groups.LATTICE else \
            [f"x{i}" for i in range(spec.dim)]
        cloud_rows = [[*pt, t] for pt, t in
                      zip(cloud.points.tolist(),
                          cloud.times.tolist() if cloud.times is not None
                          else [0.0] * len(cloud))]
        extra.append((f"cloud-n{n}", [*header, "time"], cloud_rows))
    summary = {"n_grid": scan.n_grid, "distances": list(scan.distances),
               "control": control}
    dists = scan.distances
    ok = all(dists[i + 1] <= 1.1 * dists[i] for i in range(len(dists) - 1))
    detail = f"consecutive Hausdorff distances {np.round(dists, 5).tolist()} non-increasing within 10%"
    return RunResult(["n_lo", "n_hi", "hausdorff"], rows, summary, extra_csvs=extra,
                     assertion=(ok, detail), plot_data={"scan": scan, "spec": spec})


def _run_l1_compare(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec = cfg.group
    if spec.kind != groups.LATTICE:
        raise ConfigError("l1-compare runs on integer lattices (group = \"z\")")
    rep = shapes.l1_ball_compare(spec.dim, cfg.params["weight"], cfg.params["n"])
    rows = [[rep.dim, rep.weight, rep.n, rep.distance, rep.bound,
             rep.distance <= rep.bound]]
    extra = []
    for name, cloud in (("cloud", rep.cloud), ("oracle", rep.oracle)):
        header = [f"x{i}" for i in range(rep.dim)] + ["time"]
        cloud_rows = [[*pt, t] for pt, t in
                      zip(cloud.points.tolist(),
                          cloud.times.tolist() if cloud.times is not None
                          else [0.0] * len(cloud))]
        extra.append((name, header, cloud_rows))
    summary = {"distance": rep.distance, "bound": rep.bound}
    return RunResult(["d", "weight", "n", "hausdorff", "bound", "within_bound"],
                     rows, summary, extra_csvs=extra,
                     assertion=(rep.distance <= rep.bound,
                                f"distance {rep.distance:.6g} <= bound {rep.bound:.6g}"),
                     plot_data={"report": rep})


def _run_gh_check(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    rep = shapes.gh_approximation_check(spec, dist, cfg.seed, cfg.params["n"],
                                        cfg.params["eps"],
                                        cfg.params["pair_samples"],
                                        cfg.params["replicas"], cfg.workers)
    rows = [[i, m] for i, m in enumerate(rep.margins)]
    summary = {"passed": rep.passed, "worst_margin": rep.worst_margin,
               "worst_pair": [reporting.element_str(spec, g) for g in rep.worst_pair]
               if rep.worst_pair else None}
    return RunResult(["pair", "margin"], rows, summary,
                     assertion=(rep.passed,
                                f"worst margin {rep.worst_margin:.4g} <= 0"),
                     plot_data={"report": rep})


def _run_direction(cfg: cfgmod.ExperimentConfig) -> RunResult:
    spec, dist = cfg.group, cfg.dist
    est = shapes.directional_norm(spec, dist, cfg.params["g"],
                                  cfg.params["n_grid"], cfg.params["replicas"],
                                  cfg.seed, cfg.workers)
    rows = [[n, m, s] for n, m, s in zip(est.n_grid, est.means, est.std_errors)]
    summary = {"trailing_mean": est.trailing_mean,
               "trailing_spread": est.trailing_spread}
    ok, detail = True, "unbounded support: no sandwich to check"
    if dist.bounded:
        e = groups.identity(spec)
        ok = True
        for n, m in zip(est.n_grid, est.means):
            d_s = groups.pair_distance(spec, e, groups.power(spec, cfg.params["g"], n))
            if not (dist.support_min * d_s / n - 1e-9 <= m <= dist.support_max * d_s / n + 1e-9):
                ok = False
        detail = "series entries within [a*d_S/n, b*d_S/n]"
    return RunResult(["n", "mean_over_n", "std_error"], rows, summary,
                     assertion=(ok, detail), plot_data={"estimate": est})


_RUNNERS = {
    "ball": _run_ball,
    "distance": _run_distance,
    "mean": _run_mean,
    "tail": _run_tail,
    "variance-scan": _run_variance_scan,
    "fluctuation-scan": _run_fluctuation_scan,
    "midpoint": _run_midpoint,
    "subdivision": _run_subdivision,
    "tree-search": _run_tree_search,
    "shape-scan": _run_shape_scan,
    "l1-compare": _run_l1_compare,
    "gh-check": _run_gh_check,
    "direction": _run_direction,
}


def run(cfg: cfgmod.ExperimentConfig, assert_mode: bool = False,
        plot: bool = True) -> Dict[str, object]:
    """Run one experiment; returns the manifest dictionary."""
    started = time.perf_counter()
    result = _RUNNERS[cfg.experiment](cfg)
    outputs = []
    main_csv = f"{cfg.out}.csv"
    reporting.write_csv(main_csv, result.header, result.rows)
    outputs.append(main_csv)
    for suffix, header, rows in result.extra_csvs:
        path = f"{cfg.out}.{suffix}.csv"
        reporting.write_csv(path, header, rows)
        outputs.append(path)
    if plot:
        from . import plots
        outputs.extend(plots.render(cfg, result, cfg.out))
    summary = dict(result.summary)
    if result.assertion is not None:
        ok, detail = result.assertion
        summary["assertion"] = {"passed": bool(ok), "detail": detail,
                                "enforced": assert_mode}
    manifest_path = f"{cfg.out}.manifest.json"
    reporting.write_manifest(manifest_path, experiment=cfg.experiment,
                             echo=cfg.echo, summary=summary,
                             outputs=outputs + [manifest_path],
                             wall_time_s=time.perf_counter() - started)
    manifest = {"experiment": cfg.experiment, "outputs": outputs + [manifest_path],
                "summary": summary}
    if assert_mode and result.assertion is not None and not result.assertion[0]:
        raise _AssertionFailure(result.assertion[1])
    return manifest


class _AssertionFailure(FpplabError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpp",
        description="First-passage percolation experiments on Cayley graphs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*cfgmod.EXPERIMENTS, "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a key = value config file")
        if name != "validate":
            p.add_argument("--seed", type=int, default=None, help="override the master seed")
            p.add_argument("--workers", type=int, default=None, help="override the worker count")
            p.add_argument("--out", default=None, help="override the output path prefix")
            p.add_argument("--assert", dest="assert_mode", action="store_true",
                           help="exit 4 when the experiment's statistical check fails")
            p.add_argument("--no-plot", dest="plot", action="store_false",
                           help="skip figure rendering")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        values = cfgmod.parse_file(args.config)
        if args.command == "validate":
            cfg, violations = cfgmod.interpret(values)
            if violations:
                for v in violations:
                    print(f"violation: {v}")
                return EXIT_CONFIG
            print("ok")
            return EXIT_OK
        if args.seed is not None:
            values["seed"] = args.seed
        if args.workers is not None:
            values["workers"] = args.workers
        if args.out is not None:
            values["out"] = args.out
        cfg, violations = cfgmod.interpret(values, args.command)
        if violations:
            for v in violations:
                print(f"violation: {v}", file=sys.stderr)
            return EXIT_CONFIG
        manifest = run(cfg, assert_mode=args.assert_mode, plot=args.plot)
        summary = manifest["summary"]
        assertion = summary.get("assertion")
        print(f"{cfg.experiment}: wrote {len(manifest['outputs'])} files to prefix {cfg.out!r}")
        if assertion is not None:
            state = "pass" if assertion["passed"] else "FAIL"
            print(f"check [{state}]: {assertion['detail']}")
        return EXIT_OK
    except _AssertionFailure as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, HypothesisError, DiagnosticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
