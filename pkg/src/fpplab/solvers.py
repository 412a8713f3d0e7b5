"""Vectorized passage-time solvers for replica-heavy experiments.

The scalar engine in :mod:`fpplab.engine` is the reference implementation.
For Monte Carlo work on lattices and the Heisenberg group we materialize a
finite region that provably contains every optimal path, generate all edge
weights in one vectorized pass from the same keyed hash, and run compiled
Dijkstra (scipy.sparse.csgraph) over a reusable CSR matrix.

Exactness of the restriction: for a law supported on [a, b] with a > 0,
every vertex v on an optimal x-y path satisfies
``a * (d(x,v) + d(v,y)) <= d_omega(x,y) <= b * d(x,y)``, so restricting the
search to ``{v : d(x,v) + d(v,y) <= S}`` with ``S >= b*d(x,y)/a`` cannot
change the result.  Smaller trial regions are used with a per-replica
certificate (``found <= a*S``) and fall back to the guaranteed region when
the certificate fails.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from . import engine, groups
from .errors import BudgetError, HypothesisError
from .weights import (DistributionSpec, WeightAssignment, element_hash_array,
                      vector_edge_weights)


def _csr_template(n_nodes: int, rows: np.ndarray, cols: np.ndarray):
    """CSR matrix with reusable structure.

    Returns (matrix, perm) where assigning ``matrix.data[:] = values[perm]``
    installs per-edge values given in the original (rows, cols) order.
    """
    payload = np.arange(len(rows), dtype=np.float64)
    mat = sp.csr_matrix((payload, (rows, cols)), shape=(n_nodes, n_nodes))
    perm = mat.data.astype(np.int64)
    mat.data = np.empty(len(perm), dtype=np.float64)
    return mat, perm


def _dijkstra(mat, source: int, limit: float = np.inf,
              return_predecessors: bool = False):
    return _csgraph_dijkstra(mat, directed=True, indices=source, limit=limit,
                             return_predecessors=return_predecessors)


# ---------------------------------------------------------------------------
# lattice solvers


def _lattice_box(x: Sequence[int], y: Sequence[int], total_budget: int):
    """Axis ranges of {v : l1(x,v) + l1(v,y) <= total_budget}."""
    deltas = [abs(a - b) for a, b in zip(x, y)]
    l1 = sum(deltas)
    lo, hi = [], []
    for i, (a, b) in enumerate(zip(x, y)):
        axis_budget = total_budget - (l1 - deltas[i])
        slack = max(0, (axis_budget - deltas[i]) // 2)
        lo.append(min(a, b) - slack)
        hi.append(max(a, b) + slack)
    return lo, hi


class _LatticeBoxSolver:
    """CSR Dijkstra over an axis-aligned box of Z^d cells."""

    def __init__(self, spec: groups.GroupSpec, dist: DistributionSpec,
                 lo: Sequence[int], hi: Sequence[int]):
        self.spec, self.dist = spec, dist
        shape = [h - l + 1 for l, h in zip(lo, hi)]
        n = int(np.prod(shape))
        strides = np.array([int(np.prod(shape[i + 1:])) for i in range(len(shape))],
                           dtype=np.int64)
        idx = np.arange(n, dtype=np.int64)
        coords = np.empty((n, len(shape)), dtype=np.int64)
        rem = idx
        for i in range(len(shape)):
            coords[:, i] = rem // strides[i] + lo[i]
            rem = rem % strides[i]
        self.coords = coords
        eh = element_hash_array(spec, coords)
        rows_parts, cols_parts, hash_parts = [], [], []
        for i in range(len(shape)):
            mask = coords[:, i] < hi[i]
            r = idx[mask]
            c = r + strides[i]
            rows_parts.append(r)
            cols_parts.append(c)
            hash_parts.append(eh[r] ^ eh[c])
        rows_und = np.concatenate(rows_parts)
        cols_und = np.concatenate(cols_parts)
        self.edge_hashes = np.concatenate(hash_parts)
        rows = np.concatenate([rows_und, cols_und])
        cols = np.concatenate([cols_und, rows_und])
        self.mat, self.perm = _csr_template(n, rows, cols)
        self._lo, self._strides = np.array(lo, dtype=np.int64), strides

    def index_of(self, g: tuple) -> int:
        rel = np.array(g, dtype=np.int64) - self._lo
        return int(np.dot(rel, self._strides))

    def fill(self, seed: int) -> None:
        w = vector_edge_weights(self.dist, seed, self.edge_hashes)
        both = np.concatenate([w, w])
        self.mat.data[:] = both[self.perm]

    def distances(self, seed: int, source: tuple, limit: float = np.inf) -> np.ndarray:
        self.fill(seed)
        return _dijkstra(self.mat, self.index_of(source), limit=limit)


class LatticePairSolver:
    """Repeated d_omega(x, y) on Z^d for a bounded law with a > 0."""

    def __init__(self, spec: groups.GroupSpec, dist: DistributionSpec,
                 x: tuple, y: tuple):
        if spec.kind != groups.LATTICE:
            raise HypothesisError("LatticePairSolver needs a lattice group")
        if not dist.bounded or dist.support_min <= 0:
            raise HypothesisError("region restriction needs bounded support with a > 0")
        self.spec, self.dist, self.x, self.y = spec, dist, x, y
        l1 = sum(abs(a - b) for a, b in zip(x, y))
        S = math.ceil(dist.support_max * max(l1, 1) / dist.support_min)
        # d_omega(x, y) <= b*l1, so longer paths can be abandoned early
        self._limit = dist.support_max * (l1 + 1)
        lo, hi = _lattice_box(x, y, S)
        self.box = _LatticeBoxSolver(spec, dist, lo, hi)
        self.coords = self.box.coords

    def distance(self, seed: int) -> float:
        d = self.box.distances(seed, self.x, limit=self._limit)
        return float(d[self.box.index_of(self.y)])

    def distances_from(self, seed: int, source: str = "x") -> np.ndarray:
        return self.box.distances(seed, self.x if source == "x" else self.y)

    def index_of(self, g: tuple) -> int:
        return self.box.index_of(g)


# ---------------------------------------------------------------------------
# Heisenberg solvers


def _heisenberg_translate(y_inv: tuple, coords: np.ndarray) -> np.ndarray:
    """Coordinates of y_inv * v for a block of elements v."""
    u0, v0, w0 = y_inv
    out = np.empty_like(coords)
    out[:, 0] = coords[:, 0] + u0
    out[:, 1] = coords[:, 1] + v0
    out[:, 2] = coords[:, 2] + w0 + u0 * coords[:, 1]
    return out


class _HeisenbergRegionSolver:
    """CSR Dijkstra over an explicit set of Heisenberg vertices."""

    def __init__(self, dist: DistributionSpec, keys: np.ndarray, coords: np.ndarray):
        spec = groups.heisenberg()
        self.spec, self.dist = spec, dist
        self.keys, self.coords = keys, coords
        n = len(keys)
        cand = groups._heisenberg_step(coords)
        cand_keys = groups.pack_heisenberg(cand)
        rows = np.tile(np.arange(n, dtype=np.int64), 4)
        pos = np.searchsorted(keys, cand_keys)
        pos_clip = np.minimum(pos, n - 1)
        inside = keys[pos_clip] == cand_keys
        rows, cols = rows[inside], pos_clip[inside]
        eh = element_hash_array(spec, coords)
        self.edge_hashes = eh[rows] ^ eh[cols]
        self.mat, self.perm = _csr_template(n, rows, cols)

    def index_of(self, g: tuple) -> int:
        key = groups.pack_heisenberg(np.array([g], dtype=np.int64))[0]
        pos = int(np.searchsorted(self.keys, key))
        if pos >= len(self.keys) or self.keys[pos] != key:
            raise HypothesisError(f"element {g!r} is outside the solver region")
        return pos

    def fill(self, seed: int) -> None:
        self.mat.data[:] = vector_edge_weights(self.dist, seed, self.edge_hashes)[self.perm]

    def distances(self, seed: int, source: tuple, limit: float = np.inf) -> np.ndarray:
        self.fill(seed)
        return _dijkstra(self.mat, self.index_of(source), limit=limit)


class HeisenbergPairSolver:
    """Repeated d_omega(identity, y) on H(Z) for a bounded law with a > 0."""

    def __init__(self, dist: DistributionSpec, target: tuple,
                 max_elements: int = groups.DEFAULT_BALL_CAP):
        if not dist.bounded or dist.support_min <= 0:
            raise HypothesisError("region restriction needs bounded support with a > 0")
        spec = groups.heisenberg()
        self.spec, self.dist, self.target = spec, dist, target
        self.d_xy = groups.pair_distance(spec, groups.identity(spec), target)
        a, b = dist.support_min, dist.support_max
        self.S_max = math.ceil(b * max(self.d_xy, 1) / a)
        trial = math.ceil(0.5 * (dist.mean + b) * max(self.d_xy, 1) / a) + 2
        self.S_trial = min(self.S_max, trial)
        self.max_elements = max_elements
        self._primary = self._build(self.S_trial)
        self._fallback: Optional[_HeisenbergRegionSolver] = None

    def _build(self, S: int) -> _HeisenbergRegionSolver:
        spec = self.spec
        radius = (S + self.d_xy) // 2
        table = groups.ball_table(spec, radius, self.max_elements)
        y_inv = groups.invert(spec, self.target)
        translated = _heisenberg_translate(y_inv, table.coords)
        d_to_y = table.lookup(groups.pack_heisenberg(translated))
        inside = (d_to_y >= 0) & (table.dists.astype(np.int64) + d_to_y <= S)
        return _HeisenbergRegionSolver(self.dist, table.keys[inside],
                                       table.coords[inside])

    def distance(self, seed: int) -> float:
        a = self.dist.support_min
        limit = a * self.S_trial + self.dist.support_max
        d = self._primary.distances(seed, groups.identity(self.spec), limit=limit)
        found = float(d[self._primary.index_of(self.target)])
        if found <= a * self.S_trial or self.S_trial == self.S_max:
            return found
        # certificate failed: redo on the worst-case-safe region
        if self._fallback is None:
            self._fallback = self._build(self.S_max)
        d = self._fallback.distances(seed, groups.identity(self.spec))
        return float(d[self._fallback.index_of(self.target)])


class HeisenbergBallSolver:
    """FPP ball around the identity on H(Z), vectorized."""

    def __init__(self, dist: DistributionSpec, horizon: float,
                 max_elements: int = groups.DEFAULT_BALL_CAP):
        if not dist.bounded or dist.support_min <= 0:
            raise HypothesisError("ball materialization needs bounded support with a > 0")
        spec = groups.heisenberg()
        self.spec, self.dist, self.horizon = spec, dist, horizon
        radius = math.ceil(horizon / dist.support_min)
        table = groups.ball_table(spec, radius, max_elements)
        self.solver = _HeisenbergRegionSolver(dist, table.keys, table.coords)

    def ball(self, seed: int) -> Tuple[np.ndarray, np.ndarray]:
        """(coords, times) of all elements with d_omega <= horizon."""
        limit = self.horizon + self.dist.support_max
        times = self.solver.distances(seed, groups.identity(self.spec), limit=limit)
        inside = times <= self.horizon
        return self.solver.coords[inside], times[inside]


class LatticeBallSolver:
    """FPP ball around the origin on Z^d, vectorized.

    The box [-R, R]^d with R = ceil(horizon / a) contains every vertex of
    every optimal path to a ball member, so the restriction is exact.
    """

    def __init__(self, spec: groups.GroupSpec, dist: DistributionSpec, horizon: float,
                 max_elements: int = groups.DEFAULT_BALL_CAP):
        if spec.kind != groups.LATTICE:
            raise HypothesisError("LatticeBallSolver needs a lattice group")
        if not dist.bounded or dist.support_min <= 0:
            raise HypothesisError("ball materialization needs bounded support with a > 0")
        radius = math.ceil(horizon / dist.support_min)
        if (2 * radius + 1) ** spec.dim > max_elements:
            raise BudgetError(
                f"ball cap of {max_elements} elements exceeded by box radius {radius}",
                budget=max_elements, reached=radius)
        self.box = _LatticeBoxSolver(spec, dist, [-radius] * spec.dim,
                                     [radius] * spec.dim)
        self.spec, self.dist, self.horizon = spec, dist, horizon
        self.radius = radius

    def ball(self, seed: int) -> Tuple[np.ndarray, np.ndarray]:
        limit = self.horizon + self.dist.support_max
        times = self.box.distances(seed, groups.identity(self.spec), limit=limit)
        inside = times <= self.horizon
        return self.box.coords[inside], times[inside]


class TreePathSolver:
    """Repeated d_omega(x, y) on a regular tree via the unique geodesic."""

    def __init__(self, spec: groups.GroupSpec, dist: DistributionSpec,
                 x: tuple, y: tuple):
        if spec.kind != groups.TREE:
            raise HypothesisError("TreePathSolver needs a regular tree")
        from .weights import element_hash
        self.spec, self.dist = spec, dist
        path = engine.tree_geodesic(spec, x, y)
        hashes = np.array([element_hash(spec, g) for g in path], dtype=np.uint64)
        self.edge_hashes = hashes[:-1] ^ hashes[1:]

    def distance(self, seed: int) -> float:
        if len(self.edge_hashes) == 0:
            return 0.0
        return float(np.sum(vector_edge_weights(self.dist, seed, self.edge_hashes)))


class ScalarPairSolver:
    """Fallback: one scalar best-first search per replica."""

    def __init__(self, spec: groups.GroupSpec, dist: DistributionSpec,
                 x: tuple, y: tuple, budget: int = engine.DEFAULT_BUDGET):
        self.spec, self.dist, self.x, self.y = spec, dist, x, y
        self.budget = budget

    def distance(self, seed: int) -> float:
        assignment = WeightAssignment(seed, self.dist)
        return engine.passage_time(self.spec, assignment, self.x, self.y,
                                   self.budget).time


def pair_solver(spec: groups.GroupSpec, dist: DistributionSpec, x: tuple, y: tuple):
    """Fastest exact solver available for repeated d_omega(x, y) queries."""
    if spec.kind == groups.TREE:
        return TreePathSolver(spec, dist, x, y)
    if dist.bounded and dist.support_min > 0:
        if spec.kind == groups.LATTICE:
            return LatticePairSolver(spec, dist, x, y)
        if spec.kind == groups.HEISENBERG and x == groups.identity(spec):
            return HeisenbergPairSolver(dist, y)
        if spec.kind == groups.HEISENBERG:
            # left-invariance: d_omega'(e, x^-1 y) for the translated environment
            # is NOT the same omega, so fall back to the scalar engine
            return ScalarPairSolver(spec, dist, x, y)
    return ScalarPairSolver(spec, dist, x, y)


# ---------------------------------------------------------------------------
# replica execution


_ACTIVE_TASK = None


def _task_chunk(args_list):
    return [_ACTIVE_TASK(*args) for args in args_list]


def run_map(task, args_list: Sequence[tuple], workers: int = 1) -> list:
    """Apply ``task`` to each argument tuple, in order, optionally forking.

    Child processes are forked after all shared state (solvers, tables) is
    built, so large read-only arrays are shared; results are reassembled in
    submission order, making the output independent of the worker count.
    """
    args_list = list(args_list)
    if workers <= 1 or len(args_list) < 2 * workers:
        return [task(*args) for args in args_list]
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        return [task(*args) for args in args_list]
    global _ACTIVE_TASK
    _ACTIVE_TASK = task
    try:
        bounds = np.linspace(0, len(args_list), workers * 4 + 1).astype(int)
        chunks = [args_list[bounds[i]:bounds[i + 1]] for i in range(len(bounds) - 1)
                  if bounds[i] < bounds[i + 1]]
        with ctx.Pool(processes=workers) as pool:
            parts = pool.map(_task_chunk, chunks)
    finally:
        _ACTIVE_TASK = None
    return [value for part in parts for value in part]


def run_seeds(solver, seeds: Sequence[int], workers: int = 1) -> np.ndarray:
    """Per-seed distances, independent of worker count."""
    out = run_map(solver.distance, [(int(s),) for s in seeds], workers)
    return np.array(out, dtype=np.float64)
