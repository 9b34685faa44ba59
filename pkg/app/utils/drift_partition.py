"""
Combinatorics of drift vectors.

A drift vector splits uniquely into consecutive irreducible blocks whose means do not decrease (the stable
partition). The block means are the isotonic projection of the drift vector, so the partition is built by
pooling adjacent violators from left to right. The coalescing-particle dynamics gives an independent oracle
for the same grouping.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

import numpy as np

from app.utils.errors import CapabilityError, InvalidInputError, StructuralError
from app.utils.parsing import parse_vector
from app.utils.settings import get_partition_tolerance

logger = logging.getLogger()

Number = Union[Fraction, float]
BRUTE_FORCE_MAX = 12


def _coerce(value) -> Number:
    if isinstance(value, bool):
        raise InvalidInputError("booleans are not drift values")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Fraction):
        return value
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInputError("vector components must be finite, got {}".format(value))
    return value


def _is_exact(values: Sequence[Number]) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def mean(values: Sequence[Number]) -> Number:
    """Arithmetic mean; exact for rational input."""
    if _is_exact(values):
        return sum(values, Fraction(0)) / len(values)
    return math.fsum(float(v) for v in values) / len(values)


def greater(u: Number, v: Number, tolerance: float = None) -> bool:
    """
    Strict comparison of two means.

    Rationals compare exactly. Otherwise u > v holds only when u - v exceeds the absolute tolerance, so means
    within the tolerance count as equal.
    """
    if isinstance(u, Fraction) and isinstance(v, Fraction):
        return u > v
    tolerance = get_partition_tolerance() if tolerance is None else tolerance
    return float(u) - float(v) > tolerance


class _Vector:
    values: Tuple[Number, ...]

    @property
    def n(self) -> int:
        """Number of coordinates."""
        return len(self.values)

    @property
    def exact(self) -> bool:
        """True when every component is rational."""
        return _is_exact(self.values)

    def as_floats(self) -> np.ndarray:
        """Components as a float array."""
        return np.array([float(v) for v in self.values])

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, item):
        return self.values[item]


@dataclass(frozen=True)
class DriftVector(_Vector):

    """Drift rates a = (a_1, ..., a_n) of the n particles."""

    values: Tuple[Number, ...]

    def __post_init__(self):
        """Coerce the components and check the length."""
        object.__setattr__(self, "values", tuple(_coerce(v) for v in self.values))
        if len(self.values) < 2:
            raise InvalidInputError("a drift vector needs at least 2 components, got {}".format(len(self.values)))

    @classmethod
    def parse(cls, text: str) -> "DriftVector":
        """Parse ``"3,1,2,5,1"`` or ``"1/2,-1/3"``."""
        return cls(tuple(parse_vector(text)))

    def shifted(self, c) -> "DriftVector":
        """The drift vector a + c(1, ..., 1)."""
        c = _coerce(c)
        return DriftVector(tuple(v + c for v in self.values))


@dataclass(frozen=True)
class StartVector(_Vector):

    """Starting positions x_1 < ... < x_n inside the Weyl chamber."""

    values: Tuple[Number, ...]

    def __post_init__(self):
        """Coerce the components and check membership in the chamber."""
        object.__setattr__(self, "values", tuple(_coerce(v) for v in self.values))
        if len(self.values) < 1:
            raise InvalidInputError("empty start vector")
        for i, (u, v) in enumerate(zip(self.values, self.values[1:])):
            if not u < v:
                raise InvalidInputError(
                    "start vector is not in the Weyl chamber: "
                    "x_{} = {} is not below x_{} = {}".format(i + 1, u, i + 2, v)
                )

    @classmethod
    def parse(cls, text: str) -> "StartVector":
        """Parse a comma-separated start vector."""
        return cls(tuple(parse_vector(text)))

    def gaps(self) -> np.ndarray:
        """Consecutive differences x_{i+1} - x_i."""
        return np.diff(self.as_floats())


def as_drift(a) -> DriftVector:
    """Accept a DriftVector or any sequence of numbers."""
    return a if isinstance(a, DriftVector) else DriftVector(tuple(a))


def as_start(x) -> StartVector:
    """Accept a StartVector or any sequence of numbers."""
    return x if isinstance(x, StartVector) else StartVector(tuple(x))


def check_dimensions(x: StartVector, a: DriftVector):
    """Reject a start vector and a drift vector of different lengths."""
    if x.n != a.n:
        raise InvalidInputError("start vector has {} components but drift vector has {}".format(x.n, a.n))


def prefix_suffix_means(values: Sequence) -> List[Tuple[Number, Number]]:
    """
    Prefix and complementary suffix means of a vector.

    :param values: The vector (a_1, ..., a_n).
    :return: For k = 1, ..., n-1 the pair (mean(a_1..a_k), mean(a_{k+1}..a_n)).
    """
    values = [_coerce(v) for v in values]
    return [(mean(values[:k]), mean(values[k:])) for k in range(1, len(values))]


def is_irreducible(values: Sequence, tolerance: float = None) -> bool:
    """
    Whether every prefix mean strictly exceeds the complementary suffix mean.

    A singleton is irreducible. Equal prefix and suffix means make the vector reducible.

    :param values: Drift vector or sequence of length >= 1.
    :param tolerance: Absolute tolerance for float comparisons.
    """
    values = list(values.values) if isinstance(values, _Vector) else list(values)
    if not values:
        raise InvalidInputError("irreducibility needs at least one component")
    return all(greater(p, s, tolerance) for p, s in prefix_suffix_means(values))


@dataclass(frozen=True)
class StablePartition:

    """
    Consecutive blocks (m_{k-1}, m_k] of the drift vector with nondecreasing block means.

    Boundaries and block indices are 1-based as in the mathematical notation.
    """

    m: Tuple[int, ...]
    f_block: Tuple[Number, ...]
    drift: DriftVector

    def __post_init__(self):
        """Check the structural invariants."""
        if not self.m or self.m[-1] != self.drift.n:
            raise StructuralError("last boundary must equal n = {}, got {}".format(self.drift.n, self.m))
        if any(u >= v for u, v in zip((0,) + self.m, self.m)):
            raise StructuralError("boundaries must be strictly increasing positive integers: {}".format(self.m))
        if len(self.f_block) != len(self.m):
            raise StructuralError("one block mean per block expected")

    @property
    def n(self) -> int:
        """Dimension."""
        return self.m[-1]

    @property
    def q(self) -> int:
        """Number of blocks."""
        return len(self.m)

    @property
    def nu(self) -> Tuple[int, ...]:
        """Block sizes."""
        return tuple(v - u for u, v in zip((0,) + self.m, self.m))

    @property
    def f_full(self) -> Tuple[Number, ...]:
        """Block means expanded to one entry per coordinate."""
        return tuple(f for f, size in zip(self.f_block, self.nu) for _ in range(size))

    def blocks(self) -> List[Tuple[int, int]]:
        """Blocks as 0-based half-open index ranges."""
        return list(zip((0,) + self.m[:-1], self.m))

    def block_of(self, i: int) -> int:
        """0-based block index of the 0-based coordinate i."""
        for k, (start, end) in enumerate(self.blocks()):
            if start <= i < end:
                return k
        raise InvalidInputError("coordinate {} outside 0..{}".format(i, self.n - 1))

    def within_block_gaps(self) -> List[int]:
        """0-based indices k of the gaps (k, k+1) whose endpoints share a block."""
        return [k for k in range(self.n - 1) if self.block_of(k) == self.block_of(k + 1)]

    def to_json(self):
        """Partition together with its strong representation in the stable JSON shape."""
        sr = strong_representation(self)
        return {
            "m": list(self.m),
            "nu": list(self.nu),
            "f_block": [float(f) for f in self.f_block],
            "m_prime": list(sr.m_prime),
            "q": self.q,
            "q_prime": sr.q_prime,
            "k0": sr.k0,
        }


@dataclass(frozen=True)
class StrongRepresentation:

    """Coarsening of a stable partition at the strict increases of the block means."""

    m_prime: Tuple[int, ...]
    source_indices: Tuple[int, ...]

    @property
    def n(self) -> int:
        """Dimension."""
        return self.m_prime[-1]

    @property
    def q_prime(self) -> int:
        """Number of strong blocks."""
        return len(self.m_prime)

    @property
    def nu_prime(self) -> Tuple[int, ...]:
        """Strong block sizes."""
        return tuple(v - u for u, v in zip((0,) + self.m_prime, self.m_prime))

    @property
    def k0(self) -> int:
        """Sum of C(nu'_j, 2), the leading order of the determinant expansion in t^{-1/2}."""
        return sum(math.comb(v, 2) for v in self.nu_prime)

    def blocks(self) -> List[Tuple[int, int]]:
        """Strong blocks as 0-based half-open index ranges."""
        return list(zip((0,) + self.m_prime[:-1], self.m_prime))

    def stable_blocks_of(self, block: int) -> List[int]:
        """0-based indices of the stable blocks forming the 0-based strong block ``block``."""
        start = self.source_indices[block - 1] if block > 0 else 0
        return list(range(start, self.source_indices[block]))

    def powers(self) -> Tuple[int, ...]:
        """Column powers 0, 1, ..., nu'_l - 1 restarting on every strong block."""
        return tuple(p for size in self.nu_prime for p in range(size))


def stable_partition(a, tolerance: float = None) -> StablePartition:
    """
    Stable partition of a drift vector by pooling adjacent violators.

    Each new component opens a block; while the previous block mean strictly exceeds the last one, the two
    merge. A merge of irreducible blocks with decreasing means is irreducible, so every block stays irreducible
    and the final means do not decrease.

    :param a: Drift vector.
    :param tolerance: Absolute tolerance for float means (configured default).
    :return: The unique stable partition.
    """
    a = as_drift(a)
    blocks: List[List[Number]] = []
    ends: List[int] = []
    for i, value in enumerate(a.values):
        blocks.append([value])
        ends.append(i + 1)
        while len(blocks) > 1 and greater(mean(blocks[-2]), mean(blocks[-1]), tolerance):
            last = blocks.pop()
            ends.pop()
            blocks[-1].extend(last)
            ends[-1] = i + 1
    partition = StablePartition(tuple(ends), tuple(mean(b) for b in blocks), a)
    logger.info("stable partition of %s: m=%s", [str(v) for v in a.values], partition.m)
    return partition


def strong_representation(p: StablePartition, tolerance: float = None) -> StrongRepresentation:
    """
    Keep the boundaries m_j followed by a strictly larger block mean, and n.

    :param p: Stable partition.
    :param tolerance: Absolute tolerance for float means.
    """
    positions = [j + 1 for j in range(p.q - 1) if greater(p.f_block[j + 1], p.f_block[j], tolerance)] + [p.q]
    return StrongRepresentation(tuple(p.m[j - 1] for j in positions), tuple(positions))


def partition_from_boundaries(a, m: Sequence[int]) -> StablePartition:
    """Partition with the given boundaries and the block means of a."""
    a = as_drift(a)
    starts = [0] + list(m[:-1])
    return StablePartition(tuple(m), tuple(mean(a.values[s:e]) for s, e in zip(starts, m)), a)


def is_stable(a, m: Sequence[int], tolerance: float = None) -> bool:
    """Whether the boundaries m define irreducible blocks with nondecreasing means."""
    p = partition_from_boundaries(a, m)
    if any(greater(u, v, tolerance) for u, v in zip(p.f_block, p.f_block[1:])):
        return False
    return all(is_irreducible(p.drift.values[s:e], tolerance) for s, e in p.blocks())


def brute_force_partition(a, tolerance: float = None) -> StablePartition:
    """
    Stable partition by exhaustive search over all 2^{n-1} compositions.

    :raises CapabilityError: For n above the exhaustive-search limit.
    :raises StructuralError: If the stable partition is not unique.
    """
    a = as_drift(a)
    if a.n > BRUTE_FORCE_MAX:
        raise CapabilityError("exhaustive partition search supports n <= {}".format(BRUTE_FORCE_MAX))
    found = []
    for cuts in itertools.product((False, True), repeat=a.n - 1):
        m = [k + 1 for k, cut in enumerate(cuts) if cut] + [a.n]
        if is_stable(a, m, tolerance):
            found.append(m)
    if len(found) != 1:
        raise StructuralError("expected one stable partition, found {}: {}".format(len(found), found))
    return partition_from_boundaries(a, found[0])


def _exact(value: Number) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def coalescing_groups(x, a) -> List[Tuple[int, ...]]:
    """
    Terminal grouping of the deterministic coalescing particle system.

    Particle i starts at x_i with speed a_i. Adjacent clusters collide when the left one is faster; all
    clusters involved in the earliest collision time merge jointly and move on at their mass-weighted mean
    speed. Event times are computed in exact rational arithmetic (floats are converted exactly). Speeds of a float
    drift vector are compared with the partition tolerance, so near-ties behave as in stable_partition.

    :param x: Start vector in the Weyl chamber.
    :param a: Drift vector.
    :return: Groups of 1-based particle indices, left to right.
    """
    x, a = as_start(x), as_drift(a)
    check_dimensions(x, a)
    members = [[i] for i in range(a.n)]
    position = [_exact(v) for v in x.values]
    total = [_exact(v) for v in a.values]

    def closing(left: Fraction, right: Fraction) -> bool:
        return left > right if a.exact else greater(float(left), float(right))

    while len(members) > 1:
        speed = [s / len(g) for s, g in zip(total, members)]
        times = [
            (position[c + 1] - position[c]) / (speed[c] - speed[c + 1]) if closing(speed[c], speed[c + 1]) else None
            for c in range(len(members) - 1)
        ]
        pending = [tau for tau in times if tau is not None]
        if not pending:
            break
        event = min(pending)
        position = [p + v * event for p, v in zip(position, speed)]
        merged_members, merged_position, merged_total = [members[0]], [position[0]], [total[0]]
        for c in range(1, len(members)):
            if times[c - 1] == event:
                merged_members[-1] = merged_members[-1] + members[c]
                merged_total[-1] += total[c]
            else:
                merged_members.append(members[c])
                merged_position.append(position[c])
                merged_total.append(total[c])
        members, position, total = merged_members, merged_position, merged_total
    return [tuple(i + 1 for i in g) for g in members]


def groups_to_boundaries(groups: Sequence[Sequence[int]]) -> Tuple[int, ...]:
    """Right boundaries of consecutive groups of 1-based indices."""
    return tuple(g[-1] for g in groups)
