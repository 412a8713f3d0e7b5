"""Seeded i.i.d. edge-weight environments on implicit Cayley graphs.

Weights are never materialized: the weight of an edge is a pure function of
``(master_seed, edge)`` through a fixed 64-bit mixing chain, so the same seed
reproduces the same environment everywhere, in any traversal order, at O(1)
memory per query.

Mixing chain (published so independent implementations can reproduce runs):

* ``mix64(x) = splitmix64_finalizer(x + 0x9E3779B97F4A7C15)`` where the
  finalizer is ``x ^= x>>30; x *= 0xBF58476D1CE4E5B9; x ^= x>>27;
  x *= 0x94D049BB133111EB; x ^= x>>31`` (all mod 2^64)
* element hash: fold ``h = mix64(h ^ int)`` over the element's flat integer
  view, starting from ``mix64(ELEMENT_SALT ^ kind_tag)``
* edge deviate: ``u64 = mix64(mix64(seed ^ WEIGHT_SALT) ^ (h(x) ^ h(y)))``;
  xor-combining the endpoint hashes makes the two orientations of an edge see
  one weight by construction
* uniform deviate ``u = (u64 >> 11) * 2^-53`` feeds the inverse CDF
* replica seeds: ``replica_seed = mix64(master_seed ^ replica_index * REPLICA_STRIDE)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from . import groups
from .errors import HypothesisError

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
ELEMENT_SALT = 0x8C2F9D5371A6B04D
WEIGHT_SALT = 0xD1B54A32D192ED03
REPLICA_STRIDE = 0x9E3779B97F4A7C15  # odd
DERIVE_SALT = 0xBF58476D1CE4E5B9

_U = np.uint64
_INV_2_53 = 2.0 ** -53


def mix64(x: int) -> int:
    """splitmix64 step: bijective 64-bit mixer."""
    x = (int(x) + GOLDEN) & MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vector mix64, bit-identical to the scalar version."""
    x = x + _U(GOLDEN)
    x ^= x >> _U(30)
    x *= _U(0xBF58476D1CE4E5B9)
    x ^= x >> _U(27)
    x *= _U(0x94D049BB133111EB)
    x ^= x >> _U(31)
    return x


def _to_u64(value: int) -> int:
    return int(value) & MASK64


def element_hash(spec: groups.GroupSpec, g: tuple) -> int:
    h = mix64(ELEMENT_SALT ^ _to_u64(groups._KIND_TAGS[spec.kind]))
    for c in groups.hash_ints(spec, g)[1:]:
        h = mix64(h ^ _to_u64(c))
    return h


def element_hash_array(spec: groups.GroupSpec, coords: np.ndarray) -> np.ndarray:
    """Vector element hashes for lattice/Heisenberg coordinate blocks."""
    if spec.kind not in (groups.LATTICE, groups.HEISENBERG):
        raise HypothesisError("vector element hashes need coordinate groups")
    tag = groups._KIND_TAGS[spec.kind]
    h = np.full(len(coords), mix64(ELEMENT_SALT ^ tag), dtype=np.uint64)
    for j in range(coords.shape[1]):
        h = mix64_array(h ^ coords[:, j].astype(np.int64).view(np.uint64))
    return h


def replica_seed(master_seed: int, index: int) -> int:
    """Seed of the index-th replica of an experiment."""
    return mix64(master_seed ^ ((index * REPLICA_STRIDE) & MASK64))


def derive_seed(master_seed: int, *labels: int) -> int:
    """Deterministic sub-stream seed for labelled scan points."""
    h = mix64(master_seed ^ DERIVE_SALT)
    for v in labels:
        h = mix64(h ^ _to_u64(v))
    return h


def _uniform_from_u64(u64: int) -> float:
    return (u64 >> 11) * _INV_2_53


# ---------------------------------------------------------------------------
# distributions


TWO_POINT = "two_point"
UNIFORM = "uniform"
SHIFTED_EXPONENTIAL = "shifted_exponential"


@dataclass(frozen=True)
class DistributionSpec:
    """Edge-length law; all supported kinds have an exponential moment."""

    kind: str
    a: float = 0.0          # support minimum (shift for the exponential)
    b: float = math.inf     # support maximum
    p_a: float = 0.0        # two-point: mass at a
    rate: float = 0.0       # shifted exponential

    def __post_init__(self):
        if self.kind == TWO_POINT:
            if not (0.0 <= self.a <= self.b):
                raise HypothesisError(f"two-point needs 0 <= a <= b, got a={self.a} b={self.b}")
            if not 0.0 <= self.p_a <= 1.0:
                raise HypothesisError(f"two-point mass must lie in [0,1], got {self.p_a}")
        elif self.kind == UNIFORM:
            if not (0.0 <= self.a <= self.b):
                raise HypothesisError(f"uniform needs 0 <= a <= b, got a={self.a} b={self.b}")
        elif self.kind == SHIFTED_EXPONENTIAL:
            if self.a < 0:
                raise HypothesisError(f"exponential shift must be >= 0, got {self.a}")
            if self.rate <= 0:
                raise HypothesisError(f"exponential rate must be > 0, got {self.rate}")
        else:
            raise HypothesisError(f"unknown distribution kind {self.kind!r}")

    @property
    def support_min(self) -> float:
        return self.a

    @property
    def support_max(self) -> float:
        if self.kind == SHIFTED_EXPONENTIAL:
            return math.inf
        return self.b

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.support_max)

    @property
    def mean(self) -> float:
        if self.kind == TWO_POINT:
            return self.p_a * self.a + (1.0 - self.p_a) * self.b
        if self.kind == UNIFORM:
            return 0.5 * (self.a + self.b)
        return self.a + 1.0 / self.rate

    @property
    def deterministic(self) -> bool:
        if self.kind == TWO_POINT:
            return self.a == self.b or self.p_a in (0.0, 1.0)
        if self.kind == UNIFORM:
            return self.a == self.b
        return False

    def atom(self, x: float) -> float:
        """Point mass nu({x})."""
        if self.kind == TWO_POINT:
            if self.a == self.b:
                return 1.0 if x == self.a else 0.0
            if x == self.a:
                return self.p_a
            if x == self.b:
                return 1.0 - self.p_a
            return 0.0
        if self.kind == UNIFORM and self.a == self.b:
            return 1.0 if x == self.a else 0.0
        return 0.0

    def inv_cdf(self, u: float) -> float:
        if self.kind == TWO_POINT:
            return self.a if u < self.p_a else self.b
        if self.kind == UNIFORM:
            return self.a + (self.b - self.a) * u
        return self.a - math.log1p(-u) / self.rate

    def inv_cdf_array(self, u: np.ndarray) -> np.ndarray:
        if self.kind == TWO_POINT:
            return np.where(u < self.p_a, self.a, self.b)
        if self.kind == UNIFORM:
            return self.a + (self.b - self.a) * u
        return self.a - np.log1p(-u) / self.rate

    def describe(self) -> str:
        if self.kind == TWO_POINT:
            return f"TwoPoint(a={self.a}, b={self.b}, p_a={self.p_a})"
        if self.kind == UNIFORM:
            return f"Uniform({self.a}, {self.b})"
        return f"ShiftedExponential(shift={self.a}, rate={self.rate})"


def two_point(a: float, b: float, p_a: float) -> DistributionSpec:
    return DistributionSpec(TWO_POINT, a=a, b=b, p_a=p_a)


def uniform(a: float, b: float) -> DistributionSpec:
    return DistributionSpec(UNIFORM, a=a, b=b)


def shifted_exponential(shift: float, rate: float) -> DistributionSpec:
    return DistributionSpec(SHIFTED_EXPONENTIAL, a=shift, rate=rate)


def validate_distribution(dist: DistributionSpec, degree: int) -> Optional[str]:
    """None when the law is admissible for a graph of this degree.

    Otherwise the violated assumption by name.  All supported kinds have an
    exponential moment; the remaining requirement is that the atom at zero
    stays below 1/degree, which also guarantees a linear lower bound on the
    average distance.
    """
    if degree < 2:
        return f"degree must be >= 2, got {degree}"
    atom0 = dist.atom(0.0)
    if atom0 >= 1.0 / degree:
        return (f"nu({{0}}) >= 1/degree: atom at 0 is {atom0} "
                f"but 1/{degree} = {1.0 / degree:.6g} is required")
    return None


# ---------------------------------------------------------------------------
# edges and assignments


@dataclass(frozen=True, order=True)
class EdgeKey:
    """Unordered Cayley edge, identified by sorted canonical byte keys."""

    lo: bytes
    hi: bytes

    @classmethod
    def of(cls, spec: groups.GroupSpec, x: tuple, y: tuple) -> "EdgeKey":
        if not groups.is_adjacent(spec, x, y):
            raise HypothesisError(f"elements are not Cayley-adjacent: {x!r}, {y!r}")
        kx = groups.encode(spec, x)
        ky = groups.encode(spec, y)
        if kx == ky:
            raise HypothesisError("an edge needs two distinct endpoints")
        return cls(min(kx, ky), max(kx, ky))


@dataclass(frozen=True)
class WeightAssignment:
    """A full random environment: seed, law, and optional forced weights.

    Immutable and cheap to share; every weight is recomputed on demand from
    the seed, so two assignments with equal fields are the same environment.
    """

    master_seed: int
    distribution: DistributionSpec
    overlay: Tuple[Tuple[EdgeKey, float], ...] = ()

    def __post_init__(self):
        for _, value in self.overlay:
            if value <= 0:
                raise HypothesisError(f"overlay weights must be positive, got {value}")

    @property
    def premix(self) -> int:
        return mix64(_to_u64(self.master_seed) ^ WEIGHT_SALT)

    def overlay_map(self) -> Dict[EdgeKey, float]:
        return dict(self.overlay)

    def with_overlay(self, spec: groups.GroupSpec, forced: Dict[tuple, float]) -> "WeightAssignment":
        """Copy of this environment with weights forced on the given edges.

        ``forced`` maps (x, y) endpoint pairs to weights.
        """
        items = dict(self.overlay)
        for (x, y), value in forced.items():
            items[EdgeKey.of(spec, x, y)] = value
        return WeightAssignment(self.master_seed, self.distribution,
                                tuple(sorted(items.items())))


def edge_deviate(premix: int, hash_x: int, hash_y: int) -> int:
    return mix64(premix ^ hash_x ^ hash_y)


def edge_weight(spec: groups.GroupSpec, assignment: WeightAssignment,
                x: tuple, y: tuple) -> float:
    """Weight of the edge {x, y} under this environment."""
    if assignment.overlay:
        key = EdgeKey.of(spec, x, y)
        for k, value in assignment.overlay:
            if k == key:
                return value
    u64 = edge_deviate(assignment.premix, element_hash(spec, x), element_hash(spec, y))
    return assignment.distribution.inv_cdf(_uniform_from_u64(u64))


def vector_edge_weights(dist: DistributionSpec, seed: int,
                        edge_hashes: np.ndarray) -> np.ndarray:
    """Vector weights for precomputed xor-combined endpoint hashes.

    Bit-identical to :func:`edge_weight` on the same edges (no overlay).
    """
    premix = mix64(_to_u64(seed) ^ WEIGHT_SALT)
    u64 = mix64_array(_U(premix) ^ edge_hashes)
    u = (u64 >> _U(11)).astype(np.float64) * _INV_2_53
    return dist.inv_cdf_array(u)
