"""Monte Carlo estimators for the random metric: means, tails, variance
scaling, sup-fluctuations, midpoint geometry, and tree fluctuation searches.

Every procedure derives all of its randomness from a 64-bit master seed
through the published chains in :mod:`fpplab.weights`, so reruns with equal
configuration are bit-identical regardless of worker count.  Mean reductions
use numpy's pairwise summation over arrays assembled in replica order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import engine, groups, solvers
from .errors import DiagnosticError, HypothesisError
from .weights import (TWO_POINT, UNIFORM, DistributionSpec, WeightAssignment,
                      derive_seed, replica_seed, validate_distribution)

SEED_RULE = "replica_seed = mix64(master_seed XOR replica_index * 0x9E3779B97F4A7C15)"

# derivation labels for sub-streams of a master seed
_LBL_PATH = 101
_LBL_MEANS = 102
_LBL_HELD = 103
_LBL_PAIRS = 104
_LBL_BOOT = 105
_LBL_GAPS = 106
_LBL_TOTAL = 107


def _check_dist(spec: groups.GroupSpec, dist: DistributionSpec) -> None:
    reason = validate_distribution(dist, spec.degree)
    if reason is not None:
        raise HypothesisError(reason)


def replica_times(spec: groups.GroupSpec, dist: DistributionSpec,
                  x: tuple, y: tuple, replicas: int, master_seed: int,
                  workers: int = 1, solver=None) -> np.ndarray:
    """d_omega(x, y) over independent replica environments."""
    _check_dist(spec, dist)
    if solver is None:
        solver = solvers.pair_solver(spec, dist, x, y)
    seeds = [replica_seed(master_seed, i) for i in range(replicas)]
    return solvers.run_seeds(solver, seeds, workers)


def bootstrap_ci(values: np.ndarray, stat, n_resamples: int, seed: int,
                 alpha: float = 0.05) -> Tuple[float, float]:
    """Percentile bootstrap confidence interval for ``stat`` of the sample."""
    values = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(values), size=(n_resamples, len(values)))
    stats = stat(values[idx], axis=1)
    lo, hi = np.percentile(stats, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# mean distance


@dataclass
class MeanDistanceEstimate:
    x: tuple
    y: tuple
    replica_count: int
    mean: float
    std_error: float
    master_seed: int
    seed_rule: str = SEED_RULE


def estimate_mean_distance(spec: groups.GroupSpec, dist: DistributionSpec,
                           x: tuple, y: tuple, replicas: int, master_seed: int,
                           workers: int = 1, solver=None) -> MeanDistanceEstimate:
    """Sample mean and standard error of d_omega(x, y)."""
    if replicas < 2:
        raise HypothesisError(f"need at least 2 replicas, got {replicas}")
    times = replica_times(spec, dist, x, y, replicas, master_seed, workers, solver)
    mean = float(np.mean(times))
    se = float(np.std(times, ddof=1) / math.sqrt(replicas))
    return MeanDistanceEstimate(x, y, replicas, mean, se, master_seed)


# ---------------------------------------------------------------------------
# concentration tails


@dataclass
class ConcentrationFit:
    x: tuple
    y: tuple
    d_s: int
    replica_count: int
    mean: float
    u_grid: np.ndarray
    tail: np.ndarray
    slope: float
    intercept: float
    fit_points: int


def concentration_tail(spec: groups.GroupSpec, dist: DistributionSpec,
                       x: tuple, y: tuple, replicas: int,
                       u_grid: Sequence[float], master_seed: int,
                       workers: int = 1) -> ConcentrationFit:
    """Empirical deviation tails P(|d_omega - mean| >= u) and their decay rate.

    Fits the slope of log tail against u^2 / d_S(x, y) over the u-range where
    the tail lies in [1e-3, 0.5]; under Gaussian-type concentration the slope
    is negative and roughly scale-free in d_S.
    """
    times = replica_times(spec, dist, x, y, replicas, master_seed, workers)
    mean = float(np.mean(times))
    u_grid = np.asarray(sorted(u_grid), dtype=np.float64)
    dev = np.abs(times - mean)
    tail = np.array([np.mean(dev >= u) for u in u_grid])
    d_s = groups.pair_distance(spec, x, y)
    usable = (tail >= 1e-3) & (tail <= 0.5) & (u_grid > 0)
    if np.count_nonzero(usable) < 2:
        raise DiagnosticError(
            "empty tail-fitting range: no u with tail in [1e-3, 0.5]; "
            "widen the u grid or add replicas")
    xs = (u_grid[usable] ** 2) / d_s
    ys = np.log(tail[usable])
    slope, intercept = np.polyfit(xs, ys, 1)
    return ConcentrationFit(x, y, d_s, replicas, mean, u_grid, tail,
                            float(slope), float(intercept),
                            int(np.count_nonzero(usable)))


def default_u_grid(d_s: int, points: int = 32) -> List[float]:
    """u values theta * sqrt(d_S) for theta = 1/16 .. points/16."""
    root = math.sqrt(d_s)
    return [j / 16.0 * root for j in range(1, points + 1)]


# ---------------------------------------------------------------------------
# variance scaling


@dataclass
class VarianceScan:
    g: tuple
    n_grid: List[int]
    replica_count: int
    variances: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    var_over_n: np.ndarray
    var_lognorm: np.ndarray     # var * (1 + log n) / n


def variance_scan(spec: groups.GroupSpec, dist: DistributionSpec, g: tuple,
                  n_grid: Sequence[int], replicas: int, master_seed: int,
                  workers: int = 1, bootstrap_resamples: int = 1000) -> VarianceScan:
    """Sample variance of d_omega(identity, g^n) across a grid of n.

    Requires the symmetric two-point law (equal mass on both support points),
    the hypothesis under which the sublinear variance bound is stated.
    """
    symmetric = dist.kind == TWO_POINT and dist.p_a == 0.5 and dist.a < dist.b
    if not symmetric and not dist.deterministic:
        raise HypothesisError(
            "variance_scan requires the symmetric two-point law "
            "nu({a}) = nu({b}) = 1/2 (deterministic controls allowed)")
    _check_dist(spec, dist)
    e = groups.identity(spec)
    variances, lo_list, hi_list = [], [], []
    var_stat = lambda arr, axis: np.var(arr, axis=axis, ddof=1)
    for n in n_grid:
        target = groups.power(spec, g, int(n))
        if target == e:
            variances.append(0.0)
            lo_list.append(0.0)
            hi_list.append(0.0)
            continue
        seeds = [replica_seed(derive_seed(master_seed, int(n)), i)
                 for i in range(replicas)]
        solver = solvers.pair_solver(spec, dist, e, target)
        times = solvers.run_seeds(solver, seeds, workers)
        variances.append(float(np.var(times, ddof=1)))
        lo, hi = bootstrap_ci(times, var_stat, bootstrap_resamples,
                              derive_seed(master_seed, int(n), _LBL_BOOT))
        lo_list.append(lo)
        hi_list.append(hi)
    variances = np.array(variances)
    ns = np.array([max(int(n), 1) for n in n_grid], dtype=np.float64)
    return VarianceScan(g, [int(n) for n in n_grid], replicas, variances,
                        np.array(lo_list), np.array(hi_list),
                        variances / ns, variances * (1.0 + np.log(ns)) / ns)


# ---------------------------------------------------------------------------
# sup-fluctuations over balls


@dataclass
class FluctuationScan:
    r_grid: List[int]
    pair_samples: int
    replica_count: int
    sups: np.ndarray
    normalized: np.ndarray          # sup / sqrt(r log r)
    ci_lo: np.ndarray               # bootstrap CI of the normalized sup
    ci_hi: np.ndarray
    pair_deviations: List[np.ndarray] = field(repr=False, default_factory=list)


def _sample_ball_pairs(spec: groups.GroupSpec, r: int, pair_samples: int,
                       seed: int, min_distance: int) -> List[Tuple[tuple, tuple]]:
    """Uniform pairs from B(identity, r) subject to d_S(x, y) >= min_distance."""
    table = groups.ball_table(spec, r)
    rng = np.random.default_rng(seed)
    pairs = []
    attempts = 0
    max_attempts = 500 * pair_samples
    while len(pairs) < pair_samples:
        if attempts >= max_attempts:
            raise DiagnosticError(
                f"could not sample {pair_samples} pairs with d_S >= {min_distance} "
                f"in B(e, {r}) after {attempts} attempts")
        i, j = rng.integers(0, len(table), size=2)
        attempts += 1
        x = tuple(int(c) for c in table.coords[i])
        y = tuple(int(c) for c in table.coords[j])
        if x == y:
            continue
        if groups.pair_distance(spec, x, y) >= min_distance:
            pairs.append((x, y))
    return pairs


def fluctuation_scan(spec: groups.GroupSpec, dist: DistributionSpec,
                     r_grid: Sequence[int], pair_samples: int, replicas: int,
                     master_seed: int, workers: int = 1,
                     bootstrap_resamples: int = 1000) -> FluctuationScan:
    """Sampled sup of |d_omega - mean| over pairs in growing balls.

    For each radius r: sample pairs from B(e, r) with d_S >= r/4, estimate
    the mean distance of each pair by Monte Carlo, then record the sup of
    |d_omega - mean| under one held-out environment, normalized by
    sqrt(r log r).
    """
    if spec.kind not in (groups.LATTICE, groups.HEISENBERG):
        raise HypothesisError("fluctuation_scan needs a polynomial-growth group")
    _check_dist(spec, dist)
    sups, norms, lo_list, hi_list, devs_list = [], [], [], [], []
    for r in r_grid:
        r = int(r)
        if r < 2:
            raise HypothesisError(f"radii must be >= 2 for the (r log r)^(1/2) normalizer, got {r}")
        pairs = _sample_ball_pairs(spec, r, pair_samples,
                                   derive_seed(master_seed, r, _LBL_PAIRS),
                                   min_distance=max(1, r // 4))
        held_seed = derive_seed(master_seed, r, _LBL_HELD)
        deviations = np.empty(len(pairs))
        for i, (x, y) in enumerate(pairs):
            solver = solvers.pair_solver(spec, dist, x, y)
            seeds = [replica_seed(derive_seed(master_seed, r, _LBL_MEANS, i), j)
                     for j in range(replicas)]
            times = solvers.run_seeds(solver, seeds, workers)
            held = solver.distance(held_seed)
            deviations[i] = abs(held - float(np.mean(times)))
        normalizer = math.sqrt(r * math.log(r))
        sup = float(np.max(deviations))
        lo, hi = bootstrap_ci(deviations, lambda a, axis: np.max(a, axis=axis),
                              bootstrap_resamples,
                              derive_seed(master_seed, r, _LBL_BOOT))
        sups.append(sup)
        norms.append(sup / normalizer)
        lo_list.append(lo / normalizer)
        hi_list.append(hi / normalizer)
        devs_list.append(deviations)
    return FluctuationScan([int(r) for r in r_grid], pair_samples, replicas,
                           np.array(sups), np.array(norms),
                           np.array(lo_list), np.array(hi_list), devs_list)


# ---------------------------------------------------------------------------
# midpoints and dyadic subdivision


@dataclass
class MidpointReport:
    x: tuple
    y: tuple
    lam: float
    z: tuple
    deviation: float
    normalized: float           # deviation / sqrt(r log r), r = d_S(x, y)
    r: int
    mean_xy: float
    se_xy: float
    path_length: int


def _path_profiles(spec: groups.GroupSpec, dist: DistributionSpec,
                   x: tuple, y: tuple, path: Sequence[tuple],
                   seeds: Sequence[int], workers: int):
    """Per-replica d_omega(x, z) and d_omega(z, y) for every path vertex z."""
    solver = solvers.pair_solver(spec, dist, x, y)
    if isinstance(solver, solvers.LatticePairSolver):
        target_idx = np.array([solver.index_of(z) for z in path], dtype=np.int64)

        def task(seed):
            dx = solver.distances_from(seed, "x")
            dy = solver.distances_from(seed, "y")
            return dx[target_idx], dy[target_idx]
    else:
        def task(seed):
            assignment = WeightAssignment(seed, dist)
            from_x = engine.multi_target_times(spec, assignment, x, list(path))
            from_y = engine.multi_target_times(spec, assignment, y, list(path))
            return (np.array([from_x[z] for z in path]),
                    np.array([from_y[z] for z in path]))

    results = solvers.run_map(task, [(int(s),) for s in seeds], workers)
    dx = np.stack([a for a, _ in results])
    dy = np.stack([b for _, b in results])
    return dx, dy


def midpoint_search(spec: groups.GroupSpec, dist: DistributionSpec,
                    x: tuple, y: tuple, lam: float, replicas: int,
                    master_seed: int, workers: int = 1) -> MidpointReport:
    """Best proportional point along one optimal path.

    Draws one environment, takes its optimal x-y path, and picks the path
    vertex z minimizing
    ``max(|lam*m(x,y) - m(x,z)|, |(1-lam)*m(x,y) - m(z,y)|)`` where the m are
    Monte Carlo means over replica environments.
    """
    if not 0.0 <= lam <= 1.0:
        raise HypothesisError(f"lambda must lie in [0, 1], got {lam}")
    _check_dist(spec, dist)
    path_assignment = WeightAssignment(derive_seed(master_seed, _LBL_PATH), dist)
    witness = engine.passage_time(spec, path_assignment, x, y)
    path = witness.path if witness.path else (x,)
    seeds = [replica_seed(derive_seed(master_seed, _LBL_MEANS), i)
             for i in range(replicas)]
    dx, dy = _path_profiles(spec, dist, x, y, path, seeds, workers)
    mean_xz = dx.mean(axis=0)
    mean_zy = dy.mean(axis=0)
    xy_times = dx[:, -1] if path[-1] == y else dy[:, 0]
    mean_xy = float(np.mean(xy_times))
    se_xy = float(np.std(xy_times, ddof=1) / math.sqrt(len(xy_times))) if len(xy_times) > 1 else 0.0
    dev = np.maximum(np.abs(lam * mean_xy - mean_xz),
                     np.abs((1.0 - lam) * mean_xy - mean_zy))
    best = int(np.argmin(dev))       # ties resolve to the vertex nearest x
    r = groups.pair_distance(spec, x, y)
    normalizer = math.sqrt(r * math.log(r)) if r >= 2 else 1.0
    return MidpointReport(x, y, lam, path[best], float(dev[best]),
                          float(dev[best]) / normalizer, r, mean_xy, se_xy,
                          len(path))


@dataclass
class SubdivisionReport:
    x: tuple
    y: tuple
    depth: int
    chain: Tuple[tuple, ...]
    gap_means: np.ndarray
    gap_ses: np.ndarray
    max_gap: float
    min_gap: float
    inflation_ratio: float
    mean_xy: float
    se_xy: float


def dyadic_subdivision(spec: groups.GroupSpec, dist: DistributionSpec,
                       x: tuple, y: tuple, k: int, replicas: int,
                       master_seed: int, workers: int = 1,
                       alpha0: float = 8.0) -> SubdivisionReport:
    """Recursive halving of (x, y) into a chain of 2^k near-even steps.

    Reports the estimated mean gaps and the inflation ratio
    ``sum(gap means) / mean(x, y)``; an asymptotically geodesic mean metric
    keeps the ratio near one.
    """
    if k < 0:
        raise HypothesisError(f"subdivision depth must be >= 0, got {k}")
    est = estimate_mean_distance(spec, dist, x, y, replicas,
                                 derive_seed(master_seed, _LBL_TOTAL), workers)
    alpha = est.mean / 2 ** k
    if alpha < alpha0:
        raise HypothesisError(
            f"mean gap {alpha:.4g} falls below alpha0 = {alpha0}; "
            f"use a smaller subdivision depth than k = {k}")
    chain: List[tuple] = [x, y]
    for depth in range(1, k + 1):
        new_chain: List[tuple] = [chain[0]]
        for j in range(len(chain) - 1):
            u, v = chain[j], chain[j + 1]
            report = midpoint_search(spec, dist, u, v, 0.5, replicas,
                                     derive_seed(master_seed, depth, j), workers)
            new_chain.extend([report.z, v])
        chain = new_chain
    if k == 0:
        gap_means = np.array([est.mean])
        gap_ses = np.array([est.std_error])
    else:
        gap_means = np.empty(len(chain) - 1)
        gap_ses = np.empty(len(chain) - 1)
        for i in range(len(chain) - 1):
            gap = estimate_mean_distance(spec, dist, chain[i], chain[i + 1],
                                         replicas,
                                         derive_seed(master_seed, _LBL_GAPS, i),
                                         workers)
            gap_means[i] = gap.mean
            gap_ses[i] = gap.std_error
    return SubdivisionReport(x, y, k, tuple(chain), gap_means, gap_ses,
                             float(np.max(gap_means)), float(np.min(gap_means)),
                             float(np.sum(gap_means) / est.mean),
                             est.mean, est.std_error)


# ---------------------------------------------------------------------------
# trees: linear fluctuations below the mean


@dataclass
class TreeSearchReport:
    found: bool
    x: Optional[tuple]
    y: Optional[tuple]
    d_omega: Optional[float]
    d_s: int
    scanned: int
    total_segments: int
    analytic_probability: float
    separation: int
    segment_len: int


def _tree_words_of_length(arity: int, length: int):
    """Reduced words of the given length in lexicographic order."""
    if length == 0:
        yield ()
        return
    stack = [(letter,) for letter in reversed(range(arity))]
    while stack:
        word = stack.pop()
        if len(word) == length:
            yield word
            continue
        for letter in reversed(range(arity)):
            if letter != word[-1]:
                stack.append(word + (letter,))


def _count_sphere(arity: int, length: int) -> int:
    if length == 0:
        return 1
    return arity * (arity - 1) ** (length - 1)


def _extend_descending(word: tuple, count: int) -> tuple:
    out = list(word)
    for _ in range(count):
        out.append(0 if (not out or out[-1] != 0) else 1)
    return tuple(out)


def _segment_success_probability(dist: DistributionSpec, k: int, eps: float) -> float:
    """P(total weight of k i.i.d. edges <= (a + eps) * k), exact per kind."""
    a, b = dist.support_min, dist.support_max
    if dist.kind == TWO_POINT:
        if a == b:
            return 1.0
        j_max = math.floor(eps * k / (b - a) + 1e-12)
        j_max = min(j_max, k)
        p = dist.p_a
        return float(sum(math.comb(k, j) * p ** (k - j) * (1 - p) ** j
                         for j in range(j_max + 1)))
    if dist.kind == UNIFORM:
        if a == b:
            return 1.0
        t = min(max(eps * k / (b - a), 0.0), float(k))
        # Irwin-Hall CDF at t for k standard uniforms
        total = 0.0
        for j in range(int(math.floor(t)) + 1):
            total += (-1.0) ** j * math.comb(k, j) * (t - j) ** k
        return float(total / math.factorial(k))
    raise HypothesisError("segment success probability needs a bounded law")


def tree_fluctuation_search(spec: groups.GroupSpec, dist: DistributionSpec,
                            r: int, budget: int, eps: float, seed: int,
                            segment_len: Optional[int] = None) -> TreeSearchReport:
    """Hunt for a pair whose passage time is near the minimal possible value.

    Enumerates a ceil(r/4)-separated family of vertices inside B(identity, r)
    (representatives of sphere prefixes, so the hanging geodesics are
    pairwise disjoint), hangs a descending geodesic of the requested length
    off each, and scans for one whose total weight is at most
    ``(a + eps) * length``.  Disjointness makes segment successes independent,
    so the analytic hit probability is ``1 - (1 - q)^M`` with q the exact
    per-segment probability and M the number of segments enumerated.
    """
    if spec.kind != groups.TREE:
        raise HypothesisError("tree_fluctuation_search needs a regular tree")
    if not dist.bounded:
        raise HypothesisError("tree_fluctuation_search needs a bounded law")
    if eps < 0:
        raise HypothesisError(f"eps must be >= 0, got {eps}")
    if eps == 0 and dist.atom(dist.support_min) <= 0:
        raise HypothesisError(
            "eps = 0 requires an atom at the support minimum: nu({a}) > 0")
    _check_dist(spec, dist)
    arity = spec.arity
    s = max(2, math.ceil(r / 4))
    k = segment_len if segment_len is not None else max(1, r // 8)
    if k < 1:
        raise HypothesisError(f"segment length must be >= 1, got {k}")
    a = dist.support_min
    threshold = (a + eps) * k

    from .weights import ELEMENT_SALT, element_hash, mix64
    from . import groups as _g
    tag = _g._KIND_TAGS[_g.TREE]
    premix = WeightAssignment(seed, dist).premix
    inv_cdf = dist.inv_cdf

    sphere_levels = list(range(s, r + 1, s))
    total_segments = 0
    for L in sphere_levels:
        total_segments += _count_sphere(arity, L - math.ceil(s / 2) + 1)
    total_segments = min(total_segments, budget)

    scanned = 0
    found_pair = None
    found_time = None
    for L in sphere_levels:
        prefix_len = L - math.ceil(s / 2) + 1
        for prefix in _tree_words_of_length(arity, prefix_len):
            if scanned >= budget:
                break
            x = _extend_descending(prefix, L - prefix_len)
            scanned += 1
            # incremental hash chain along the descending segment
            h = mix64(ELEMENT_SALT ^ tag)
            for letter in x:
                h = mix64(h ^ letter)
            total = 0.0
            word = list(x)
            for _ in range(k):
                nxt = 0 if (not word or word[-1] != 0) else 1
                word.append(nxt)
                h_next = mix64(h ^ nxt)
                u64 = mix64(premix ^ (h ^ h_next))
                total += inv_cdf((u64 >> 11) * 2.0 ** -53)
                h = h_next
            if total <= threshold:
                found_pair = (x, tuple(word))
                found_time = total
                break
        if found_pair or scanned >= budget:
            break

    q = _segment_success_probability(dist, k, eps)
    analytic = 1.0 - (1.0 - q) ** total_segments
    if found_pair:
        return TreeSearchReport(True, found_pair[0], found_pair[1],
                                found_time, k, scanned, total_segments,
                                analytic, s, k)
    return TreeSearchReport(False, None, None, None, k, scanned,
                            total_segments, analytic, s, k)


# ---------------------------------------------------------------------------
# trees: mean distance ratio


@dataclass
class MeanRatioReport:
    ratio: float
    mean_weight: float
    support_min: float
    exceeds_min: bool
    pairs_checked: int


def mean_ratio_bound(spec: groups.GroupSpec, dist: DistributionSpec,
                     pair_samples: int, master_seed: int = 0) -> MeanRatioReport:
    """Minimal mean-to-word-distance ratio over sampled tree pairs.

    On a tree the mean distance is exactly ``E[omega] * d_S`` by linearity
    along the unique geodesic, so the ratio equals the mean edge weight for
    every pair; the hypothesis nu({a}) < 1/degree guarantees it exceeds a.
    """
    if spec.kind != groups.TREE:
        raise HypothesisError("mean_ratio_bound needs a regular tree")
    q = spec.degree
    atom = dist.atom(dist.support_min)
    if atom >= 1.0 / q:
        raise HypothesisError(
            f"nu({{a}}) >= 1/q: atom at the support minimum is {atom} "
            f"but 1/{q} = {1.0 / q:.6g} is required")
    rng = np.random.default_rng(derive_seed(master_seed, _LBL_PAIRS))
    checked = 0
    ratios = []
    while checked < pair_samples:
        length_x = int(rng.integers(0, 7))
        length_y = int(rng.integers(1, 9))
        x = _random_tree_word(spec.arity, length_x, rng)
        y = _random_tree_word(spec.arity, length_y, rng)
        if x == y:
            continue
        d_s = groups.pair_distance(spec, x, y)
        ratios.append(dist.mean * d_s / d_s)
        checked += 1
    ratio = float(min(ratios)) if ratios else dist.mean
    return MeanRatioReport(ratio, dist.mean, dist.support_min,
                           ratio > dist.support_min, checked)


def _random_tree_word(arity: int, length: int, rng) -> tuple:
    word: List[int] = []
    for _ in range(length):
        choices = [l for l in range(arity) if not word or l != word[-1]]
        word.append(int(rng.choice(choices)))
    return tuple(word)
