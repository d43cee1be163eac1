"""Model parameters, particle configurations and index-set combinatorics.

Everything downstream is built from four small pieces: the hop rates
(p, q) with p + q = 1, strictly increasing particle configurations on Z,
subsets of {1, ..., N} with their index sums / position sums / signs, and
the bracket calculus

    [n] = (p^n - q^n) / (p - q),   [n]! = [n][n-1]...[1],
    binom[n, m] = [n]! / ([m]! [n-m]!),

which supplies every coefficient in the subset expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .errors import DomainError

# Below this |p - q| the removable singularity of [n] is evaluated as its
# analytic limit n * p^(n-1).
SYMMETRY_EPS = 1e-12

_RATE_SUM_TOL = 1e-15


@dataclass(frozen=True)
class ModelParams:
    """Hop rates: p to the right, q = 1 - p to the left."""

    p: float
    q: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise DomainError(f"rates must lie in [0,1], got p={self.p}, q={self.q}")
        if abs(self.p + self.q - 1.0) > _RATE_SUM_TOL:
            raise DomainError(f"p + q must equal 1, got {self.p + self.q!r}")

    @classmethod
    def from_p(cls, p: float) -> "ModelParams":
        return cls(float(p), 1.0 - float(p))

    @property
    def is_symmetric(self) -> bool:
        return abs(self.p - self.q) < SYMMETRY_EPS

    def swapped(self) -> "ModelParams":
        """Rates of the mirrored process (p and q interchanged)."""
        return ModelParams(self.q, self.p)


@dataclass(frozen=True)
class Configuration:
    """Strictly increasing particle positions on the integer lattice."""

    positions: tuple[int, ...]

    def __post_init__(self) -> None:
        pos = tuple(int(x) for x in self.positions)
        if len(pos) < 1:
            raise DomainError("a configuration holds at least one particle")
        if any(a >= b for a, b in zip(pos, pos[1:])):
            # The exclusion constraint is a model invariant; reject rather
            # than silently sort.
            raise DomainError(f"positions must be strictly increasing, got {pos}")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def from_iterable(cls, xs: Iterable[int]) -> "Configuration":
        return cls(tuple(xs))

    @property
    def n(self) -> int:
        return len(self.positions)

    def reflected(self) -> "Configuration":
        """Mirror through the origin: {x_1,...,x_N} -> {-x_N,...,-x_1}."""
        return Configuration(tuple(-x for x in reversed(self.positions)))

    def __iter__(self):
        return iter(self.positions)

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class IndexSet:
    """A subset of {1, ..., ambient_size}, kept with its ambient size."""

    members: frozenset[int] = field()
    ambient_size: int = field()

    def __post_init__(self) -> None:
        members = frozenset(int(i) for i in self.members)
        if self.ambient_size < 0:
            raise DomainError("ambient size must be nonnegative")
        if any(i < 1 or i > self.ambient_size for i in members):
            raise DomainError(
                f"members {sorted(members)} not within 1..{self.ambient_size}"
            )
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, members: Iterable[int], ambient_size: int) -> "IndexSet":
        return cls(frozenset(members), ambient_size)

    @classmethod
    def full(cls, ambient_size: int) -> "IndexSet":
        return cls(frozenset(range(1, ambient_size + 1)), ambient_size)

    def complement(self) -> "IndexSet":
        full = frozenset(range(1, self.ambient_size + 1))
        return IndexSet(full - self.members, self.ambient_size)

    @property
    def sorted_members(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, i: int) -> bool:
        return i in self.members


def qbracket(n: int, params: ModelParams) -> float:
    """[n] = (p^n - q^n)/(p - q), with the limit n p^(n-1) at p = q."""
    if n < 1:
        raise DomainError(f"qbracket requires n >= 1, got {n}")
    p, q = params.p, params.q
    if abs(p - q) < SYMMETRY_EPS:
        return n * p ** (n - 1)
    return (p**n - q**n) / (p - q)


def qbracket_factorial(n: int, params: ModelParams) -> float:
    """[n]! = [n][n-1]...[1], with [0]! = 1."""
    if n < 0:
        raise DomainError(f"qbracket_factorial requires n >= 0, got {n}")
    out = 1.0
    for k in range(1, n + 1):
        out *= qbracket(k, params)
    return out


def qbracket_binom(n: int, m: int, params: ModelParams) -> float:
    """Bracket binomial [n]! / ([m]! [n-m]!)."""
    if m < 0 or m > n:
        raise DomainError(f"bracket binomial needs 0 <= m <= n, got n={n}, m={m}")
    return qbracket_factorial(n, params) / (
        qbracket_factorial(m, params) * qbracket_factorial(n - m, params)
    )


def _members(s: IndexSet | Iterable[int]) -> frozenset[int]:
    if isinstance(s, IndexSet):
        return s.members
    return frozenset(int(i) for i in s)


def sigma_sum(s: IndexSet | Iterable[int]) -> int:
    """Sum of the indices in S; the empty set gives 0."""
    return sum(_members(s))


def sigma_positions(t: IndexSet | Iterable[int], u: IndexSet | Iterable[int]) -> int:
    """Sum of the 1-based positions of the elements of T within sorted U.

    Example: T = {2, 5} inside U = {2, 3, 5} gives 1 + 3 = 4.
    """
    tm, um = _members(t), _members(u)
    if not tm <= um:
        raise DomainError(f"T={sorted(tm)} is not a subset of U={sorted(um)}")
    rank = {v: k for k, v in enumerate(sorted(um), start=1)}
    return sum(rank[v] for v in tm)


def sign_of_set(u: IndexSet) -> int:
    """(-1) to the number of pairs (i, j) with i > j, i in U, j not in U."""
    inside = u.sorted_members
    outside = u.complement().sorted_members
    crossings = sum(1 for i in inside for j in outside if i > j)
    return -1 if crossings % 2 else 1


def binomial(n: int, m: int) -> int:
    """Ordinary binomial coefficient (convenience wrapper)."""
    return math.comb(n, m)
