"""Exact shortest-path computation of the random metric on implicit graphs.

Best-first (Dijkstra) search over the infinite Cayley graph: vertices are
materialized lazily by applying generators, weights come from the keyed hash
in :mod:`fpplab.weights`.  Ties in the priority queue are broken by canonical
byte key, so the settled order is deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

from . import groups
from .errors import BudgetError, HypothesisError
from .weights import (WeightAssignment, EdgeKey, edge_deviate, element_hash,
                      validate_distribution, _uniform_from_u64)

#: default cap on settled vertices per search
DEFAULT_BUDGET = 50_000_000


@dataclass
class PassageTimeResult:
    """d_omega(x, y) together with an optimal path witness."""

    time: float
    path: Tuple[tuple, ...]     # element sequence from x to y; () when x == y
    settled_count: int


@dataclass
class FppBall:
    """Exact ball {x : d_omega(origin, x) <= horizon} of the random metric."""

    origin: tuple
    horizon: float
    times: Dict[tuple, float]
    settled_count: int

    def __len__(self) -> int:
        return len(self.times)


def _check_preconditions(spec: groups.GroupSpec, assignment: WeightAssignment) -> None:
    reason = validate_distribution(assignment.distribution, spec.degree)
    if reason is not None:
        raise HypothesisError(reason)


def _weight_fn(spec: groups.GroupSpec,
               assignment: WeightAssignment) -> Callable[[tuple, tuple], float]:
    """Per-search closure computing edge weights with cached element hashes."""
    premix = assignment.premix
    inv_cdf = assignment.distribution.inv_cdf
    hashes: Dict[tuple, int] = {}
    overlay = assignment.overlay_map()
    enc_cache: Dict[tuple, bytes] = {}

    def elem_hash(g: tuple) -> int:
        h = hashes.get(g)
        if h is None:
            h = element_hash(spec, g)
            hashes[g] = h
        return h

    def enc(g: tuple) -> bytes:
        e = enc_cache.get(g)
        if e is None:
            e = groups.encode(spec, g)
            enc_cache[g] = e
        return e

    if overlay:
        def weight(x: tuple, y: tuple) -> float:
            kx, ky = enc(x), enc(y)
            key = EdgeKey(min(kx, ky), max(kx, ky))
            forced = overlay.get(key)
            if forced is not None:
                return forced
            return inv_cdf(_uniform_from_u64(edge_deviate(premix, elem_hash(x), elem_hash(y))))
    else:
        def weight(x: tuple, y: tuple) -> float:
            return inv_cdf(_uniform_from_u64(edge_deviate(premix, elem_hash(x), elem_hash(y))))

    return weight


def passage_time(spec: groups.GroupSpec, assignment: WeightAssignment,
                 x: tuple, y: tuple, budget: int = DEFAULT_BUDGET) -> PassageTimeResult:
    """First-passage time d_omega(x, y) with an optimal path.

    Expands neighbors by generator application and stops once ``y`` is
    settled.  For a law supported on [a, b] the result obeys
    ``a*d_S(x,y) <= time <= b*d_S(x,y)``.
    """
    _check_preconditions(spec, assignment)
    if x == y:
        return PassageTimeResult(0.0, (), 0)
    weight = _weight_fn(spec, assignment)
    gens = spec.generators
    mul = groups.multiply
    enc = groups.encode

    heap: List[Tuple[float, bytes, tuple]] = [(0.0, enc(spec, x), x)]
    best: Dict[tuple, float] = {x: 0.0}
    parent: Dict[tuple, tuple] = {}
    settled = set()
    settled_count = 0
    while heap:
        t, _, g = heapq.heappop(heap)
        if g in settled:
            continue
        settled.add(g)
        settled_count += 1
        if g == y:
            path = [g]
            while path[-1] != x:
                path.append(parent[path[-1]])
            path.reverse()
            return PassageTimeResult(t, tuple(path), settled_count)
        if settled_count >= budget:
            raise BudgetError(
                f"exploration budget of {budget} settled vertices exceeded; "
                f"best lower bound on the passage time so far: {t!r}",
                budget=budget, best_bound=t)
        for s in gens:
            h = mul(spec, g, s)
            if h in settled:
                continue
            nt = t + weight(g, h)
            known = best.get(h)
            if known is None or nt < known:
                best[h] = nt
                parent[h] = g
                heapq.heappush(heap, (nt, enc(spec, h), h))
    raise HypothesisError("search exhausted without reaching the target")


def fpp_ball(spec: groups.GroupSpec, assignment: WeightAssignment,
             origin: tuple, horizon: float,
             budget: int = DEFAULT_BUDGET) -> FppBall:
    """Exactly {x : d_omega(origin, x) <= horizon} with exact times.

    The frontier stops once the minimum heap key exceeds the horizon.
    """
    _check_preconditions(spec, assignment)
    if horizon < 0:
        raise HypothesisError(f"horizon must be >= 0, got {horizon}")
    weight = _weight_fn(spec, assignment)
    gens = spec.generators
    mul = groups.multiply
    enc = groups.encode

    heap: List[Tuple[float, bytes, tuple]] = [(0.0, enc(spec, origin), origin)]
    best: Dict[tuple, float] = {origin: 0.0}
    times: Dict[tuple, float] = {}
    settled_count = 0
    while heap:
        t, _, g = heapq.heappop(heap)
        if t > horizon:
            break
        if g in times:
            continue
        times[g] = t
        settled_count += 1
        if settled_count >= budget:
            raise BudgetError(
                f"exploration budget of {budget} settled vertices exceeded at time {t!r}",
                budget=budget, best_bound=t)
        for s in gens:
            h = mul(spec, g, s)
            if h in times:
                continue
            nt = t + weight(g, h)
            if nt > horizon:
                continue
            known = best.get(h)
            if known is None or nt < known:
                best[h] = nt
                heapq.heappush(heap, (nt, enc(spec, h), h))
    return FppBall(origin, horizon, times, settled_count)


def multi_target_times(spec: groups.GroupSpec, assignment: WeightAssignment,
                       source: tuple, targets,
                       budget: int = DEFAULT_BUDGET) -> Dict[tuple, float]:
    """d_omega(source, t) for every t in ``targets``, from one search."""
    _check_preconditions(spec, assignment)
    remaining = set(targets)
    out: Dict[tuple, float] = {}
    if source in remaining:
        out[source] = 0.0
        remaining.discard(source)
    if not remaining:
        return out
    weight = _weight_fn(spec, assignment)
    gens = spec.generators
    mul = groups.multiply
    enc = groups.encode
    heap: List[Tuple[float, bytes, tuple]] = [(0.0, enc(spec, source), source)]
    best: Dict[tuple, float] = {source: 0.0}
    settled = set()
    settled_count = 0
    while heap and remaining:
        t, _, g = heapq.heappop(heap)
        if g in settled:
            continue
        settled.add(g)
        settled_count += 1
        if g in remaining:
            out[g] = t
            remaining.discard(g)
            if not remaining:
                return out
        if settled_count >= budget:
            raise BudgetError(
                f"exploration budget of {budget} settled vertices exceeded; "
                f"{len(remaining)} targets unresolved beyond time {t!r}",
                budget=budget, best_bound=t)
        for s in gens:
            h = mul(spec, g, s)
            if h in settled:
                continue
            nt = t + weight(g, h)
            known = best.get(h)
            if known is None or nt < known:
                best[h] = nt
                heapq.heappush(heap, (nt, enc(spec, h), h))
    if remaining:
        raise HypothesisError("search exhausted with unresolved targets")
    return out


def path_weight(spec: groups.GroupSpec, assignment: WeightAssignment,
                path: Tuple[tuple, ...]) -> float:
    """Total weight along a vertex path (consecutive entries must be adjacent)."""
    total = 0.0
    for g, h in zip(path, path[1:]):
        total += edge_weight_checked(spec, assignment, g, h)
    return total


def edge_weight_checked(spec: groups.GroupSpec, assignment: WeightAssignment,
                        x: tuple, y: tuple) -> float:
    if not groups.is_adjacent(spec, x, y):
        raise HypothesisError(f"not a Cayley edge: {x!r} -- {y!r}")
    from .weights import edge_weight
    return edge_weight(spec, assignment, x, y)


def tree_geodesic(spec: groups.GroupSpec, x: tuple, y: tuple) -> Tuple[tuple, ...]:
    """The unique reduced vertex path from x to y on a regular tree."""
    if spec.kind != groups.TREE:
        raise HypothesisError("tree_geodesic needs a regular tree")
    g = groups.multiply(spec, groups.invert(spec, x), y)
    path = [x]
    for letter in g:
        path.append(groups.multiply(spec, path[-1], (letter,)))
    return tuple(path)


def tree_passage_time(spec: groups.GroupSpec, assignment: WeightAssignment,
                      x: tuple, y: tuple) -> float:
    """d_omega on a tree: the weight sum along the unique reduced path."""
    path = tree_geodesic(spec, x, y)
    from .weights import edge_weight
    return sum(edge_weight(spec, assignment, g, h) for g, h in zip(path, path[1:]))
