"""Limit-shape diagnostics: rescaled ball clouds and Hausdorff geometry.

Lattice clouds live in R^d with the l1 metric.  Heisenberg clouds live in
the real Heisenberg group; distances between cloud points use the
left-invariant homogeneous gauge distance

    rho(p, q) = max(N(p^-1 q), N(q^-1 p)),   N(u, v, w) = max(|u|+|v|, sqrt(|w|)),

symmetrized so that rho is a genuine metric (N is subadditive under the
group law, which gives the triangle inequality).  rho scales linearly under
dilations, so Hausdorff diagnostics in rho are equivalent to those in any
homogeneous left-invariant metric up to bi-Lipschitz constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from . import engine, groups, solvers
from .errors import DiagnosticError, HypothesisError
from .stats import replica_times
from .weights import (DistributionSpec, WeightAssignment, derive_seed,
                      replica_seed, validate_distribution)

GAUGE_L1 = "l1"
GAUGE_HEISENBERG = "heisenberg"

_LBL_PAIRS = 204
_LBL_MEANS = 205


@dataclass
class PointCloud:
    """Embedded, rescaled point set with its gauge and provenance."""

    points: np.ndarray            # (n, dim) float64
    gauge: str
    provenance: Dict[str, object]
    times: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.points) == 0:
            raise HypothesisError("point clouds must be non-empty")
        if not np.all(np.isfinite(self.points)):
            raise HypothesisError("point clouds must have finite coordinates")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class HausdorffReport:
    a_provenance: Dict[str, object]
    b_provenance: Dict[str, object]
    distance: float
    gauge: str


# ---------------------------------------------------------------------------
# gauge distance machinery


def _heisenberg_gauge_to_block(p: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Symmetrized gauge distance from one point to a block of points."""
    du = block[:, 0] - p[0]
    dv = block[:, 1] - p[1]
    dw = block[:, 2] - p[2]
    w1 = np.abs(dw - p[0] * dv)          # w-part of p^-1 q
    w2 = np.abs(dw - block[:, 0] * dv)   # w-part of q^-1 p
    return np.maximum(np.abs(du) + np.abs(dv), np.sqrt(np.maximum(w1, w2)))


def heisenberg_gauge_distance(p, q) -> float:
    """Symmetrized homogeneous gauge distance between two real points."""
    arr = np.asarray([q], dtype=np.float64)
    return float(_heisenberg_gauge_to_block(np.asarray(p, dtype=np.float64), arr)[0])


def _directed_l1(A: np.ndarray, B: np.ndarray) -> float:
    tree = cKDTree(B)
    dists, _ = tree.query(A, k=1, p=1)
    return float(np.max(dists))


def _cell_runs(points: np.ndarray, cell: float):
    """Group points by (u, v)-plane cell; returns sorted points and run map."""
    iu = np.floor(points[:, 0] / cell).astype(np.int64)
    iv = np.floor(points[:, 1] / cell).astype(np.int64)
    order = np.lexsort((iv, iu))
    iu, iv = iu[order], iv[order]
    sorted_points = points[order]
    if len(iu) > 1:
        change = np.flatnonzero((np.diff(iu) != 0) | (np.diff(iv) != 0)) + 1
    else:
        change = np.array([], dtype=np.int64)
    starts = np.concatenate([[0], change]).astype(np.int64)
    ends = np.append(change, len(iu)).astype(np.int64)
    cells = {}
    for s0, e0 in zip(starts, ends):
        cells[(int(iu[s0]), int(iv[s0]))] = (int(s0), int(e0))
    return sorted_points, cells


def _gauge_min_block(P: np.ndarray, block: np.ndarray,
                     best: np.ndarray) -> np.ndarray:
    """Per-row min of the symmetrized gauge from P rows to block points."""
    du = block[None, :, 0] - P[:, None, 0]
    dv = block[None, :, 1] - P[:, None, 1]
    dw = block[None, :, 2] - P[:, None, 2]
    w1 = np.abs(dw - P[:, None, 0] * dv)
    w2 = np.abs(dw - block[None, :, 0] * dv)
    dist = np.maximum(np.abs(du) + np.abs(dv), np.sqrt(np.maximum(w1, w2)))
    return np.minimum(best, dist.min(axis=1))


def _directed_heisenberg(A: np.ndarray, B: np.ndarray) -> float:
    """sup_{a in A} inf_{b in B} rho(a, b), exactly.

    The first two coordinates of p^-1 q are plain coordinate differences, so
    |du| + |dv| lower-bounds rho and a ring of plane cells at Chebyshev
    index distance L cannot beat (L-1)*cell: expanding rings per source cell
    terminate with the exact minimum.  Points whose minimum is already below
    the running sup cannot affect the result and are dropped early.
    """
    spread = (B[:, 0].max() - B[:, 0].min()) + (B[:, 1].max() - B[:, 1].min())
    # aim for a few dozen points per occupied cell
    cell = max(spread / max(math.sqrt(len(B) / 8.0), 4.0), 1e-9)
    b_points, b_cells = _cell_runs(B, cell)
    a_points, a_cells = _cell_runs(A, cell)
    worst = 0.0
    for (cu, cv), (s0, e0) in a_cells.items():
        P = a_points[s0:e0]
        best = np.full(len(P), np.inf)
        ring = 0
        while len(P):
            if ring > 0:
                # certified: no unexamined candidate can beat best;
                # points at or below the running sup cannot change it
                certified = best <= (ring - 1) * cell
                if np.any(certified):
                    worst = max(worst, float(best[certified].max()))
                keep = (~certified) & (best > worst)
                P, best = P[keep], best[keep]
                if not len(P):
                    break
            blocks = []
            for du in range(-ring, ring + 1):
                dvs = (-ring, ring) if abs(du) != ring else range(-ring, ring + 1)
                for dv in dvs:
                    span = b_cells.get((cu + du, cv + dv))
                    if span is not None:
                        blocks.append(b_points[span[0]:span[1]])
            if blocks:
                cand = np.concatenate(blocks) if len(blocks) > 1 else blocks[0]
                best = _gauge_min_block(P, cand, best)
            ring += 1
    return worst


def hausdorff(a: PointCloud, b: PointCloud) -> HausdorffReport:
    """Exact Hausdorff distance between two clouds in their common gauge.

    Uses KD-trees (l1) or plane-bucket ring search (Heisenberg); both equal
    the brute-force two-sided sup-min value exactly.
    """
    if a.gauge != b.gauge:
        raise HypothesisError(f"gauge mismatch: {a.gauge!r} vs {b.gauge!r}")
    if a.points.shape[1] != b.points.shape[1]:
        raise HypothesisError("point clouds have different dimensions")
    if a.gauge == GAUGE_L1:
        d = max(_directed_l1(a.points, b.points), _directed_l1(b.points, a.points))
    else:
        d = max(_directed_heisenberg(a.points, b.points),
                _directed_heisenberg(b.points, a.points))
    return HausdorffReport(a.provenance, b.provenance, float(d), a.gauge)


def hausdorff_brute(a: PointCloud, b: PointCloud, chunk: int = 512) -> float:
    """O(|A||B|) reference value; used to certify the accelerated paths."""
    if a.gauge != b.gauge:
        raise HypothesisError(f"gauge mismatch: {a.gauge!r} vs {b.gauge!r}")

    def directed(A, B):
        worst = 0.0
        for start in range(0, len(A), chunk):
            rows = A[start:start + chunk]
            if a.gauge == GAUGE_L1:
                mins = np.min(np.abs(rows[:, None, :] - B[None, :, :]).sum(axis=2), axis=1)
            else:
                mins = np.array([np.min(_heisenberg_gauge_to_block(p, B)) for p in rows])
            worst = max(worst, float(np.max(mins)))
        return worst

    return max(directed(a.points, b.points), directed(b.points, a.points))


# ---------------------------------------------------------------------------
# cloud constructors


def _dilate_heisenberg_points(coords: np.ndarray, n: int) -> np.ndarray:
    pts = coords.astype(np.float64)
    pts[:, 0] /= n
    pts[:, 1] /= n
    pts[:, 2] /= n * n
    return pts


def rescaled_word_ball_cloud(spec: groups.GroupSpec, n: int, r: float) -> PointCloud:
    """delta_{1/n} image of the word ball B_S(e, floor(r*n))."""
    if spec.kind != groups.HEISENBERG:
        raise HypothesisError("word-ball clouds are defined on the Heisenberg group")
    if n < 1:
        raise HypothesisError(f"n must be >= 1, got {n}")
    radius = int(math.floor(r * n))
    table = groups.ball_table(spec, radius)
    points = _dilate_heisenberg_points(table.coords, n)
    return PointCloud(points, GAUGE_HEISENBERG,
                      {"group": spec.describe(), "seed": "deterministic",
                       "n": n, "r": r, "kind": "word-ball"},
                      times=table.dists.astype(np.float64))


def rescaled_fpp_ball_cloud(spec: groups.GroupSpec, assignment: WeightAssignment,
                            n: int, r: float) -> PointCloud:
    """delta_{1/n} image of the FPP ball B_omega(e, r*n)."""
    if spec.kind != groups.HEISENBERG:
        raise HypothesisError("rescaled FPP clouds are defined on the Heisenberg group")
    if n < 1:
        raise HypothesisError(f"n must be >= 1, got {n}")
    reason = validate_distribution(assignment.distribution, spec.degree)
    if reason is not None:
        raise HypothesisError(reason)
    horizon = r * n
    solver = solvers.HeisenbergBallSolver(assignment.distribution, horizon)
    coords, times = solver.ball(assignment.master_seed)
    points = _dilate_heisenberg_points(coords, n)
    return PointCloud(points, GAUGE_HEISENBERG,
                      {"group": spec.describe(), "seed": assignment.master_seed,
                       "n": n, "r": r, "kind": "fpp-ball"},
                      times=times)


def _lattice_fpp_cloud(spec: groups.GroupSpec, dist: DistributionSpec,
                       seed: int, n: int, r: float) -> PointCloud:
    horizon = r * n
    solver = solvers.LatticeBallSolver(spec, dist, horizon)
    coords, times = solver.ball(seed)
    return PointCloud(coords.astype(np.float64) / n, GAUGE_L1,
                      {"group": spec.describe(), "seed": seed,
                       "n": n, "r": r, "kind": "fpp-ball"},
                      times=times)


def fpp_cloud(spec: groups.GroupSpec, dist: DistributionSpec,
              seed: int, n: int, r: float) -> PointCloud:
    """Rescaled FPP ball cloud on a lattice or the Heisenberg group."""
    if spec.kind == groups.HEISENBERG:
        return rescaled_fpp_ball_cloud(spec, WeightAssignment(seed, dist), n, r)
    if spec.kind == groups.LATTICE:
        return _lattice_fpp_cloud(spec, dist, seed, n, r)
    raise HypothesisError("shape clouds need a lattice or Heisenberg group")


# ---------------------------------------------------------------------------
# scans and checks


@dataclass
class ShapeScanReport:
    n_grid: List[int]
    distances: np.ndarray        # consecutive Hausdorff distances
    clouds: List[PointCloud] = field(repr=False, default_factory=list)
    r: float = 1.0
    seed: int = 0


def shape_cauchy_scan(spec: groups.GroupSpec, dist: DistributionSpec,
                      seed: int, r: float, n_grid: Sequence[int]) -> ShapeScanReport:
    """Consecutive Hausdorff distances of rescaled FPP clouds at one omega.

    A single environment (fixed seed) is shared across the whole grid;
    convergence of the rescaled balls shows up as a Cauchy-like decay of the
    consecutive distances.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise HypothesisError(f"n grid must be strictly increasing, got {n_grid}")
    clouds = [fpp_cloud(spec, dist, seed, n, r) for n in n_grid]
    distances = np.array([hausdorff(clouds[i], clouds[i + 1]).distance
                          for i in range(len(clouds) - 1)])
    return ShapeScanReport(n_grid, distances, clouds, r, seed)


def word_ball_cauchy_scan(spec: groups.GroupSpec, r: float,
                          n_grid: Sequence[int]) -> ShapeScanReport:
    """Deterministic control: the same scan on rescaled word balls."""
    n_grid = [int(n) for n in n_grid]
    clouds = [rescaled_word_ball_cloud(spec, n, r) for n in n_grid]
    distances = np.array([hausdorff(clouds[i], clouds[i + 1]).distance
                          for i in range(len(clouds) - 1)])
    return ShapeScanReport(n_grid, distances, clouds, r, 0)


@dataclass
class L1CompareReport:
    dim: int
    weight: float
    n: int
    distance: float
    bound: float
    cloud: PointCloud = field(repr=False, default=None)
    oracle: PointCloud = field(repr=False, default=None)


def l1_ball_compare(d: int, weight: float, n: int) -> L1CompareReport:
    """Deterministic FPP ball against the exact l1 ball, both rescaled.

    With constant weight c the FPP ball of horizon n is exactly the word
    ball of radius n/c, so the rescaled cloud must match the l1 ball of
    radius 1/c sampled on (1/n)Z^d up to pure discretization, giving
    d_H <= d / (c n).
    """
    if weight <= 0:
        raise HypothesisError(f"weight must be positive, got {weight}")
    spec = groups.integer_lattice(d)
    from .weights import two_point
    dist = two_point(weight, weight, 1.0)
    cloud = _lattice_fpp_cloud(spec, dist, seed=0, n=n, r=1.0)
    # independent oracle: direct l1 enumeration, no shortest-path search
    radius = int(math.floor(n / weight))
    table = groups.ball_table(spec, radius)
    oracle_points = table.coords.astype(np.float64) / n
    oracle = PointCloud(oracle_points, GAUGE_L1,
                        {"group": spec.describe(), "seed": "deterministic",
                         "n": n, "r": 1.0 / weight, "kind": "l1-oracle"})
    distance = hausdorff(cloud, oracle).distance
    return L1CompareReport(d, weight, n, distance, d / (weight * n), cloud, oracle)


@dataclass
class GhCheckReport:
    passed: bool
    n: int
    eps: float
    pair_samples: int
    replica_count: int
    worst_margin: float
    worst_pair: Optional[Tuple[tuple, tuple]]
    margins: np.ndarray = field(repr=False, default=None)


def gh_approximation_check(spec: groups.GroupSpec, dist: DistributionSpec,
                           seed: int, n: int, eps: float, pair_samples: int,
                           replicas: int, workers: int = 1) -> GhCheckReport:
    """Spot check that one environment is eps-close to the mean metric.

    Samples pairs in B(e, n) and verifies
    ``|d_omega(x,y) - mean(x,y)| <= eps*n + 3*std_error`` for all of them,
    reporting the worst violation margin.
    """
    if spec.kind not in (groups.LATTICE, groups.HEISENBERG):
        raise HypothesisError("gh_approximation_check needs a polynomial-growth group")
    reason = validate_distribution(dist, spec.degree)
    if reason is not None:
        raise HypothesisError(reason)
    table = groups.ball_table(spec, int(n))
    rng = np.random.default_rng(derive_seed(seed, _LBL_PAIRS))
    margins = np.empty(pair_samples)
    worst_pair = None
    worst = -math.inf
    for i in range(pair_samples):
        while True:
            ia, ib = rng.integers(0, len(table), size=2)
            x = tuple(int(c) for c in table.coords[ia])
            y = tuple(int(c) for c in table.coords[ib])
            if x != y:
                break
        solver = solvers.pair_solver(spec, dist, x, y)
        seeds = [replica_seed(derive_seed(seed, _LBL_MEANS, i), j)
                 for j in range(replicas)]
        times = solvers.run_seeds(solver, seeds, workers)
        mean = float(np.mean(times))
        se = float(np.std(times, ddof=1) / math.sqrt(replicas))
        held = solver.distance(seed)
        margins[i] = abs(held - mean) - (eps * n + 3.0 * se)
        if margins[i] > worst:
            worst = margins[i]
            worst_pair = (x, y)
    return GhCheckReport(bool(np.all(margins <= 0)), int(n), eps, pair_samples,
                         replicas, float(worst), worst_pair, margins)


@dataclass
class DirectionalNormEstimate:
    g: tuple
    n_grid: List[int]
    means: np.ndarray            # mean of d_omega(e, g^n) / n
    std_errors: np.ndarray
    trailing_mean: float
    trailing_spread: float


def directional_norm(spec: groups.GroupSpec, dist: DistributionSpec, g: tuple,
                     n_grid: Sequence[int], replicas: int, master_seed: int,
                     workers: int = 1) -> DirectionalNormEstimate:
    """Normalized passage times along powers of one element.

    The series d_omega(e, g^n)/n estimates the directional limit norm; the
    trailing-window spread is a crude convergence proxy.
    """
    e = groups.identity(spec)
    if g == e:
        raise HypothesisError("directional_norm needs a non-identity direction")
    means, ses = [], []
    for n in n_grid:
        n = int(n)
        target = groups.power(spec, g, n)
        times = replica_times(spec, dist, e, target, replicas,
                              derive_seed(master_seed, n), workers)
        means.append(float(np.mean(times)) / n)
        ses.append(float(np.std(times, ddof=1) / math.sqrt(len(times))) / n)
    means = np.array(means)
    window = min(3, len(means))
    trailing = means[-window:]
    return DirectionalNormEstimate(g, [int(n) for n in n_grid], means,
                                   np.array(ses), float(np.mean(trailing)),
                                   float(np.max(trailing) - np.min(trailing)))
