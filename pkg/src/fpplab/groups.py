"""Exact arithmetic and word-metric geometry for the supported Cayley graphs.

Supported groups and their element representations:

* integer lattice Z^d       -- tuple of ``d`` ints
* discrete Heisenberg group -- tuple ``(u, v, w)`` encoding the unipotent
  matrix [[1, u, w], [0, 1, v], [0, 0, 1]]; the group law is
  ``(u1,v1,w1)*(u2,v2,w2) = (u1+u2, v1+v2, w1+w2+u1*v2)``
* r-regular tree            -- reduced word over ``r`` involutive letters
  ``0..r-1`` (free product of r copies of Z/2); reduced means no letter is
  immediately repeated
* direct product            -- pair ``(left_element, right_element)``

All operations are pure functions of immutable inputs.  Canonical byte
encodings (see :func:`encode`) give every element a stable total order used
for edge keys and CSV output.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import BudgetError, HypothesisError

LATTICE = "lattice"
HEISENBERG = "heisenberg"
TREE = "tree"
PRODUCT = "product"

_KIND_TAGS = {LATTICE: 1, HEISENBERG: 2, TREE: 3, PRODUCT: 4}

#: default cap on enumerated ball sizes (elements)
DEFAULT_BALL_CAP = 20_000_000

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class GroupSpec:
    """Which group we walk on, with its fixed symmetric generating set."""

    kind: str
    dim: int = 0                      # lattice dimension d
    arity: int = 0                    # tree degree r
    left: Optional["GroupSpec"] = None
    right: Optional["GroupSpec"] = None

    @property
    def degree(self) -> int:
        """Cayley-graph degree = number of distinct generators."""
        if self.kind == LATTICE:
            return 2 * self.dim
        if self.kind == HEISENBERG:
            return 4
        if self.kind == TREE:
            return self.arity
        return self.left.degree + self.right.degree

    @property
    def generators(self) -> Tuple[tuple, ...]:
        """Generating set, closed under inversion."""
        return _generators(self)

    def describe(self) -> str:
        if self.kind == LATTICE:
            return f"Z^{self.dim}"
        if self.kind == HEISENBERG:
            return "H(Z)"
        if self.kind == TREE:
            return f"T{self.arity}"
        return f"{self.left.describe()}x{self.right.describe()}"


def integer_lattice(d: int) -> GroupSpec:
    if d < 1:
        raise HypothesisError(f"lattice dimension must be >= 1, got {d}")
    return GroupSpec(LATTICE, dim=d)


def heisenberg() -> GroupSpec:
    return GroupSpec(HEISENBERG)


def regular_tree(r: int) -> GroupSpec:
    if r < 3:
        raise HypothesisError(f"regular tree degree must be >= 3, got {r}")
    if r > 255:
        raise HypothesisError(f"regular tree degree must fit one letter byte, got {r}")
    return GroupSpec(TREE, arity=r)


def product(left: GroupSpec, right: GroupSpec) -> GroupSpec:
    return GroupSpec(PRODUCT, left=left, right=right)


def identity(spec: GroupSpec) -> tuple:
    if spec.kind == LATTICE:
        return (0,) * spec.dim
    if spec.kind == HEISENBERG:
        return (0, 0, 0)
    if spec.kind == TREE:
        return ()
    return (identity(spec.left), identity(spec.right))


def _generators(spec: GroupSpec) -> Tuple[tuple, ...]:
    if spec.kind == LATTICE:
        gens = []
        for i in range(spec.dim):
            e = [0] * spec.dim
            e[i] = 1
            gens.append(tuple(e))
            e[i] = -1
            gens.append(tuple(e))
        return tuple(gens)
    if spec.kind == HEISENBERG:
        # a, a^-1, b, b^-1
        return ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))
    if spec.kind == TREE:
        # involutive letters: each generator is its own inverse
        return tuple((i,) for i in range(spec.arity))
    el = identity(spec.left)
    er = identity(spec.right)
    gens = [(g, er) for g in _generators(spec.left)]
    gens += [(el, g) for g in _generators(spec.right)]
    return tuple(gens)


# ---------------------------------------------------------------------------
# group operations


def multiply(spec: GroupSpec, g: tuple, h: tuple) -> tuple:
    """Group product g*h; the factors must live in the same group."""
    if spec.kind == LATTICE:
        if len(g) != spec.dim or len(h) != spec.dim:
            raise HypothesisError(
                f"element arity mismatch for Z^{spec.dim}: {g!r} * {h!r}")
        return tuple(a + b for a, b in zip(g, h))
    if spec.kind == HEISENBERG:
        if len(g) != 3 or len(h) != 3:
            raise HypothesisError(
                f"element arity mismatch for the Heisenberg group: {g!r} * {h!r}")
        u1, v1, w1 = g
        u2, v2, w2 = h
        return (u1 + u2, v1 + v2, w1 + w2 + u1 * v2)
    if spec.kind == TREE:
        word = list(g)
        for letter in h:
            if word and word[-1] == letter:
                word.pop()          # letter * letter = identity
            else:
                word.append(letter)
        return tuple(word)
    return (multiply(spec.left, g[0], h[0]), multiply(spec.right, g[1], h[1]))


def invert(spec: GroupSpec, g: tuple) -> tuple:
    """Group inverse; multiply(g, invert(g)) is the identity."""
    if spec.kind == LATTICE:
        return tuple(-a for a in g)
    if spec.kind == HEISENBERG:
        u, v, w = g
        return (-u, -v, -w + u * v)
    if spec.kind == TREE:
        return tuple(reversed(g))   # letters are involutions
    return (invert(spec.left, g[0]), invert(spec.right, g[1]))


def commutator(spec: GroupSpec, g: tuple, h: tuple) -> tuple:
    """[g, h] = g * h * g^-1 * h^-1."""
    gh = multiply(spec, g, h)
    return multiply(spec, multiply(spec, gh, invert(spec, g)), invert(spec, h))


def power(spec: GroupSpec, g: tuple, n: int) -> tuple:
    """g^n for any integer n (square-and-multiply)."""
    if n < 0:
        return power(spec, invert(spec, g), -n)
    acc = identity(spec)
    base = g
    while n:
        if n & 1:
            acc = multiply(spec, acc, base)
        base = multiply(spec, base, base)
        n >>= 1
    return acc


def neighbors(spec: GroupSpec, g: tuple) -> List[tuple]:
    return [multiply(spec, g, s) for s in spec.generators]


def is_adjacent(spec: GroupSpec, x: tuple, y: tuple) -> bool:
    return any(multiply(spec, x, s) == y for s in spec.generators)


def validate_element(spec: GroupSpec, g: tuple) -> None:
    """Raise HypothesisError when g is not a well-formed element of spec."""
    if spec.kind == LATTICE:
        if len(g) != spec.dim or not all(isinstance(c, int) for c in g):
            raise HypothesisError(f"not a Z^{spec.dim} element: {g!r}")
    elif spec.kind == HEISENBERG:
        if len(g) != 3 or not all(isinstance(c, int) for c in g):
            raise HypothesisError(f"not a Heisenberg element: {g!r}")
    elif spec.kind == TREE:
        for i, letter in enumerate(g):
            if not 0 <= letter < spec.arity:
                raise HypothesisError(f"tree letter out of range: {g!r}")
            if i and g[i - 1] == letter:
                raise HypothesisError(f"tree word not reduced: {g!r}")
    else:
        validate_element(spec.left, g[0])
        validate_element(spec.right, g[1])


# ---------------------------------------------------------------------------
# canonical encoding
#
# Byte layout: one kind tag byte, then fixed-width little-endian signed
# 64-bit coordinates (tree words are length-prefixed letter bytes).  The
# encoding is injective, hence usable as a total-order key for edges.


def encode(spec: GroupSpec, g: tuple) -> bytes:
    tag = _KIND_TAGS[spec.kind]
    if spec.kind in (LATTICE, HEISENBERG):
        for c in g:
            if not _INT64_MIN <= c <= _INT64_MAX:
                raise BudgetError(f"coordinate {c} exceeds the 64-bit encoding range")
        return bytes([tag]) + struct.pack(f"<{len(g)}q", *g)
    if spec.kind == TREE:
        return bytes([tag]) + struct.pack("<q", len(g)) + bytes(g)
    return bytes([tag]) + encode(spec.left, g[0]) + encode(spec.right, g[1])


def decode(spec: GroupSpec, data: bytes) -> tuple:
    g, rest = _decode_prefix(spec, data)
    if rest:
        raise HypothesisError(f"trailing bytes after element encoding: {rest!r}")
    return g


def _decode_prefix(spec: GroupSpec, data: bytes) -> Tuple[tuple, bytes]:
    if not data or data[0] != _KIND_TAGS[spec.kind]:
        raise HypothesisError(f"encoding does not start with the {spec.kind} tag")
    body = data[1:]
    if spec.kind in (LATTICE, HEISENBERG):
        n = spec.dim if spec.kind == LATTICE else 3
        coords = struct.unpack(f"<{n}q", body[: 8 * n])
        return tuple(coords), body[8 * n:]
    if spec.kind == TREE:
        (length,) = struct.unpack("<q", body[:8])
        word = tuple(body[8: 8 + length])
        return word, body[8 + length:]
    left, rest = _decode_prefix(spec.left, body)
    right, rest = _decode_prefix(spec.right, rest)
    return (left, right), rest


def hash_ints(spec: GroupSpec, g: tuple) -> Tuple[int, ...]:
    """Flat integer view of an element, absorbed by the weight hash chain."""
    tag = _KIND_TAGS[spec.kind]
    if spec.kind in (LATTICE, HEISENBERG):
        return (tag, *g)
    if spec.kind == TREE:
        return (tag, *g)
    return (tag, *hash_ints(spec.left, g[0]), *hash_ints(spec.right, g[1]))


# ---------------------------------------------------------------------------
# word metric


@dataclass
class WordBall:
    """Exact ball of the word metric: members map elements to distances."""

    origin: tuple
    radius: int
    members: Dict[tuple, int]

    def __len__(self) -> int:
        return len(self.members)


def word_ball(spec: GroupSpec, origin: tuple, radius: int,
              max_elements: int = DEFAULT_BALL_CAP) -> WordBall:
    """BFS enumeration of {x : d_S(origin, x) <= radius} with exact distances."""
    if radius < 0:
        raise HypothesisError(f"radius must be >= 0, got {radius}")
    gens = spec.generators
    members = {origin: 0}
    frontier = [origin]
    for t in range(1, radius + 1):
        new = []
        for g in frontier:
            for s in gens:
                h = multiply(spec, g, s)
                if h not in members:
                    members[h] = t
                    new.append(h)
        if len(members) > max_elements:
            raise BudgetError(
                f"ball cap of {max_elements} elements exceeded at radius {t}",
                budget=max_elements, reached=t)
        frontier = new
        if not frontier:
            break
    return WordBall(origin, radius, members)


def word_distance(spec: GroupSpec, x: tuple, y: tuple,
                  frontier_cap: int = DEFAULT_BALL_CAP) -> int:
    """Exact d_S(x, y) by bidirectional BFS.

    Left-invariance makes this equal d_S(identity, x^-1 y); the search runs
    from both endpoints and stops as soon as no shorter meeting is possible.
    """
    if x == y:
        return 0
    gens = spec.generators
    dist_x = {x: 0}
    dist_y = {y: 0}
    frontier_x, frontier_y = [x], [y]
    rx = ry = 0
    best = None
    while frontier_x and frontier_y:
        if best is not None and best <= rx + ry + 1:
            return best
        if len(frontier_x) <= len(frontier_y):
            side, other = dist_x, dist_y
            frontier = frontier_x
            rx += 1
            level = rx
        else:
            side, other = dist_y, dist_x
            frontier = frontier_y
            ry += 1
            level = ry
        new = []
        for g in frontier:
            for s in gens:
                h = multiply(spec, g, s)
                if h not in side:
                    side[h] = level
                    if h in other:
                        meet = level + other[h]
                        if best is None or meet < best:
                            best = meet
                    new.append(h)
        if len(dist_x) + len(dist_y) > frontier_cap:
            raise BudgetError(
                f"search-frontier cap of {frontier_cap} vertices exceeded",
                budget=frontier_cap, reached=rx + ry)
        if side is dist_x:
            frontier_x = new
        else:
            frontier_y = new
    if best is None:
        raise HypothesisError("endpoints are not connected")  # impossible in a group
    return best


def word_length_exact(spec: GroupSpec, g: tuple) -> Optional[int]:
    """Closed-form d_S(identity, g) where one exists, else None.

    Lattice: l1 norm; tree: reduced word length; product: sum of factors;
    Heisenberg with w = 0: |u| + |v|, since b^v a^u = (u, v, 0) attains the
    abelianization lower bound.  All agree with BFS (checked by the tests).
    """
    if spec.kind == LATTICE:
        return sum(abs(c) for c in g)
    if spec.kind == TREE:
        return len(g)
    if spec.kind == PRODUCT:
        ll = word_length_exact(spec.left, g[0])
        rr = word_length_exact(spec.right, g[1])
        if ll is None or rr is None:
            return None
        return ll + rr
    if spec.kind == HEISENBERG and g[2] == 0:
        return abs(g[0]) + abs(g[1])
    return None


def pair_distance(spec: GroupSpec, x: tuple, y: tuple) -> int:
    """d_S(x, y), using a closed form when available and BFS otherwise."""
    exact = word_length_exact(spec, multiply(spec, invert(spec, x), y))
    if exact is not None:
        return exact
    return word_distance(spec, x, y)


# ---------------------------------------------------------------------------
# abelianization and the center


def abelianize(spec: GroupSpec, g: tuple) -> Tuple[int, ...]:
    """Image of g in G/[G,G]; Heisenberg (u,v,w) -> (u,v), lattice -> itself."""
    if spec.kind == HEISENBERG:
        return (g[0], g[1])
    if spec.kind == LATTICE:
        return tuple(g)
    raise HypothesisError(f"abelianize is not supported for kind {spec.kind!r}")


def center_growth(spec: GroupSpec, radius: int,
                  max_elements: int = DEFAULT_BALL_CAP) -> int:
    """Number of central elements within word distance ``radius`` of identity."""
    if spec.kind == HEISENBERG:
        table = ball_table(spec, radius, max_elements=max_elements)
        central = (table.coords[:, 0] == 0) & (table.coords[:, 1] == 0)
        return int(np.count_nonzero(central))
    if spec.kind == LATTICE:
        table = ball_table(spec, radius, max_elements=max_elements)
        return len(table)
    raise HypothesisError(f"center_growth is not supported for kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# real Heisenberg points, dilations, gauge


def dilate(t: float, p: Tuple[float, float, float]) -> Tuple[float, float, float]:
    """Dilation (u, v, w) -> (t*u, t*v, t^2*w); a group automorphism for t > 0."""
    if t <= 0:
        raise HypothesisError(f"dilation parameter must be > 0, got {t}")
    u, v, w = p
    return (t * u, t * v, t * t * w)


def homogeneous_gauge(p: Tuple[float, float, float]) -> float:
    """Gauge N(u,v,w) = max(|u| + |v|, sqrt(|w|)); N(dilate(t, p)) = t*N(p)."""
    u, v, w = p
    return max(abs(u) + abs(v), abs(w) ** 0.5)


def heis_real_mul(p, q):
    u1, v1, w1 = p
    u2, v2, w2 = q
    return (u1 + u2, v1 + v2, w1 + w2 + u1 * v2)


def heis_real_inv(p):
    u, v, w = p
    return (-u, -v, -w + u * v)


def gauge_distance(p, q) -> float:
    """Left-invariant gauge distance N(p^-1 q) on the real Heisenberg group."""
    return homogeneous_gauge(heis_real_mul(heis_real_inv(p), q))


def embed_heisenberg(spec: GroupSpec, g: tuple) -> Tuple[float, float, float]:
    """Read an integer Heisenberg element as a real point."""
    if spec.kind != HEISENBERG:
        raise HypothesisError(f"embed_heisenberg needs a Heisenberg group, got {spec.kind!r}")
    return (float(g[0]), float(g[1]), float(g[2]))


# ---------------------------------------------------------------------------
# packed ball tables
#
# Large Heisenberg and lattice balls are enumerated into flat numpy arrays:
# coordinates packed into one uint64 key per element, distances alongside.
# The packing supports |u|,|v| < 2^15 and |w| < 2^31 (Heisenberg) and
# |x_i| < 2^20 (lattice, d <= 3), far beyond any radius that fits in memory.

_H_OFF_UV = 1 << 15
_H_OFF_W = 1 << 31
_L_BITS = 21
_L_OFF = 1 << 20


@dataclass
class BallTable:
    """Ball of the word metric in packed array form, sorted by key."""

    spec: GroupSpec
    radius: int
    keys: np.ndarray      # uint64, sorted ascending
    dists: np.ndarray     # uint16, aligned with keys
    coords: np.ndarray    # int64 (n, dim), aligned with keys

    def __len__(self) -> int:
        return len(self.keys)

    def counts_by_radius(self) -> np.ndarray:
        """|B(t)| for t = 0..radius."""
        return np.cumsum(np.bincount(self.dists, minlength=self.radius + 1))

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        """Distances for the given packed keys; -1 where absent."""
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, len(self.keys) - 1)
        found = self.keys[pos] == keys
        out = np.where(found, self.dists[pos].astype(np.int64), -1)
        return out


def pack_heisenberg(coords: np.ndarray) -> np.ndarray:
    u = (coords[:, 0].astype(np.int64) + _H_OFF_UV).astype(np.uint64)
    v = (coords[:, 1].astype(np.int64) + _H_OFF_UV).astype(np.uint64)
    w = (coords[:, 2].astype(np.int64) + _H_OFF_W).astype(np.uint64)
    return (u << np.uint64(48)) | (v << np.uint64(32)) | w


def unpack_heisenberg(keys: np.ndarray) -> np.ndarray:
    u = (keys >> np.uint64(48)).astype(np.int64) - _H_OFF_UV
    v = ((keys >> np.uint64(32)) & np.uint64(0xFFFF)).astype(np.int64) - _H_OFF_UV
    w = (keys & np.uint64(0xFFFFFFFF)).astype(np.int64) - _H_OFF_W
    return np.stack([u, v, w], axis=1)


def pack_lattice(coords: np.ndarray) -> np.ndarray:
    d = coords.shape[1]
    key = np.zeros(len(coords), dtype=np.uint64)
    for i in range(d):
        key |= (coords[:, i].astype(np.int64) + _L_OFF).astype(np.uint64) << np.uint64(_L_BITS * i)
    return key


def _heisenberg_step(coords: np.ndarray) -> np.ndarray:
    """All right-multiplications of a coordinate block by the 4 generators."""
    u, v, w = coords[:, 0], coords[:, 1], coords[:, 2]
    out = np.empty((4 * len(coords), 3), dtype=np.int64)
    n = len(coords)
    out[:n] = coords
    out[:n, 0] += 1                      # * a
    out[n:2 * n] = coords
    out[n:2 * n, 0] -= 1                 # * a^-1
    out[2 * n:3 * n, 0] = u              # * b : (u, v+1, w+u)
    out[2 * n:3 * n, 1] = v + 1
    out[2 * n:3 * n, 2] = w + u
    out[3 * n:, 0] = u                   # * b^-1 : (u, v-1, w-u)
    out[3 * n:, 1] = v - 1
    out[3 * n:, 2] = w - u
    return out


def _heisenberg_table(radius: int, cap: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if radius >= _H_OFF_UV - 1:
        raise BudgetError(f"packed Heisenberg radius limit exceeded: {radius}")
    level_keys: List[np.ndarray] = [pack_heisenberg(np.zeros((1, 3), dtype=np.int64))]
    level_coords: List[np.ndarray] = [np.zeros((1, 3), dtype=np.int64)]
    total = 1
    for t in range(1, radius + 1):
        cand = _heisenberg_step(level_coords[t - 1])
        keys = pack_heisenberg(cand)
        keys, idx = np.unique(keys, return_index=True)
        cand = cand[idx]
        # the graph is bipartite: candidates sit at distance t or t-2 only
        if t >= 2:
            fresh = ~np.isin(keys, level_keys[t - 2], assume_unique=False)
            keys, cand = keys[fresh], cand[fresh]
        total += len(keys)
        if total > cap:
            raise BudgetError(
                f"ball cap of {cap} elements exceeded at radius {t}",
                budget=cap, reached=t)
        level_keys.append(keys)
        level_coords.append(cand)
    keys = np.concatenate(level_keys)
    coords = np.concatenate(level_coords)
    dists = np.concatenate([np.full(len(k), t, dtype=np.uint16)
                            for t, k in enumerate(level_keys)])
    order = np.argsort(keys)
    return keys[order], dists[order], coords[order]


def _lattice_table(d: int, radius: int, cap: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if d > 3:
        raise BudgetError(f"packed lattice tables support d <= 3, got {d}")
    if radius >= _L_OFF - 1:
        raise BudgetError(f"packed lattice radius limit exceeded: {radius}")
    coords = np.zeros((1, 0), dtype=np.int64)
    budget = np.array([radius], dtype=np.int64)
    for _ in range(d):
        counts = 2 * budget + 1
        total = int(counts.sum())
        if total > cap:
            raise BudgetError(f"ball cap of {cap} elements exceeded", budget=cap)
        rows = np.repeat(np.arange(len(coords)), counts)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        pos = np.arange(total) - np.repeat(starts, counts)
        vals = pos - np.repeat(budget, counts)
        coords = np.concatenate([coords[rows], vals[:, None]], axis=1)
        budget = np.repeat(budget, counts) - np.abs(vals)
    dists = (radius - budget).astype(np.uint16)
    keys = pack_lattice(coords)
    order = np.argsort(keys)
    return keys[order], dists[order], coords[order]


_TABLE_CACHE: Dict[tuple, BallTable] = {}


def ball_table(spec: GroupSpec, radius: int,
               max_elements: int = DEFAULT_BALL_CAP) -> BallTable:
    """Packed ball of radius ``radius`` around the identity (cached)."""
    cache_key = (spec.kind, spec.dim, radius)
    hit = _TABLE_CACHE.get(cache_key)
    if hit is not None:
        return hit
    if spec.kind == HEISENBERG:
        keys, dists, coords = _heisenberg_table(radius, max_elements)
    elif spec.kind == LATTICE:
        keys, dists, coords = _lattice_table(spec.dim, radius, max_elements)
    else:
        raise HypothesisError(f"packed ball tables are not supported for {spec.kind!r}")
    table = BallTable(spec, radius, keys, dists, coords)
    # keep only the largest table per (kind, dim) to bound cache memory
    for key in [k for k in _TABLE_CACHE if k[:2] == cache_key[:2] and k[2] <= radius]:
        del _TABLE_CACHE[key]
    if not any(k[:2] == cache_key[:2] and k[2] > radius for k in _TABLE_CACHE):
        _TABLE_CACHE[cache_key] = table
    return table


def ball_counts(spec: GroupSpec, radius: int,
                max_elements: int = DEFAULT_BALL_CAP) -> np.ndarray:
    """|B(identity, t)| for t = 0..radius."""
    if spec.kind in (HEISENBERG, LATTICE):
        return ball_table(spec, radius, max_elements).counts_by_radius()
    ball = word_ball(spec, identity(spec), radius, max_elements)
    dists = np.fromiter(ball.members.values(), dtype=np.int64)
    return np.cumsum(np.bincount(dists, minlength=radius + 1))
