"""Players, coalitions, and the value-oracle contract.

Everything downstream (exact enumeration, Monte-Carlo estimation, the
information-theoretic equivalence checks) consumes only these primitives:
a player set ``{0..n-1}``, subsets of it (coalitions), and a deterministic
scalar set function ``v(S)``.
"""

from __future__ import annotations

import itertools
import threading
from typing import Callable, Iterable, Iterator

from .errors import InvalidArgumentError

__all__ = [
    "Coalition",
    "ValueOracle",
    "coalitions_of_size",
    "delta_v",
]


class Coalition:
    """An immutable subset of player indices.

    Stored as a bitmask; Python integers are unbounded, so one
    representation serves any player count. Iteration over members is
    ascending, and equality is set equality.
    """

    __slots__ = ("mask",)

    def __init__(self, members: Iterable[int] = ()):
        mask = 0
        for i in members:
            i = int(i)
            if i < 0:
                raise InvalidArgumentError(f"player index {i} is negative")
            mask |= 1 << i
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_mask(cls, mask: int) -> "Coalition":
        if mask < 0:
            raise InvalidArgumentError("coalition mask must be non-negative")
        c = cls.__new__(cls)
        object.__setattr__(c, "mask", int(mask))
        return c

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(self)

    def __iter__(self) -> Iterator[int]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, i: int) -> bool:
        return i >= 0 and (self.mask >> i) & 1 == 1

    def __eq__(self, other) -> bool:
        return isinstance(other, Coalition) and self.mask == other.mask

    def __hash__(self) -> int:
        return hash(self.mask)

    def __repr__(self) -> str:
        return f"Coalition({{{', '.join(map(str, self))}}})"

    def __setattr__(self, name, value):
        raise AttributeError("Coalition is immutable")

    def add(self, *players: int) -> "Coalition":
        mask = self.mask
        for i in players:
            if i < 0:
                raise InvalidArgumentError(f"player index {i} is negative")
            mask |= 1 << i
        return Coalition.from_mask(mask)

    def remove(self, *players: int) -> "Coalition":
        mask = self.mask
        for i in players:
            if i < 0:
                raise InvalidArgumentError(f"player index {i} is negative")
            mask &= ~(1 << i)
        return Coalition.from_mask(mask)

    def union(self, other: "Coalition") -> "Coalition":
        return Coalition.from_mask(self.mask | other.mask)

    def issubset(self, other: "Coalition") -> bool:
        return self.mask & ~other.mask == 0


EMPTY = Coalition.from_mask(0)


def full_coalition(n: int) -> Coalition:
    """The grand coalition N = {0..n-1}."""
    return Coalition.from_mask((1 << n) - 1)


class ValueOracle:
    """A deterministic real-valued set function ``v(S)`` over ``n`` players.

    ``evaluate`` must be pure: the same coalition always yields a
    bitwise-identical float, and it is defined for every subset of the
    player set including the empty and grand coalitions. An optional
    lock-protected cache makes repeated evaluation cheap; it never changes
    observable values.
    """

    def __init__(
        self,
        n: int,
        fn: Callable[[Coalition], float],
        label: str = "",
        cache: bool = False,
    ):
        if n < 2:
            raise InvalidArgumentError(f"need at least 2 players, got n={n}")
        self.n = int(n)
        self.label = label
        self._fn = fn
        self._cache: dict[int, float] | None = {} if cache else None
        self._lock = threading.Lock() if cache else None

    def _check(self, coalition: Coalition) -> None:
        if coalition.mask >> self.n:
            raise InvalidArgumentError(
                f"coalition {coalition!r} has members outside 0..{self.n - 1}"
            )

    def evaluate(self, coalition: Coalition) -> float:
        self._check(coalition)
        if self._cache is None:
            return float(self._fn(coalition))
        with self._lock:
            if coalition.mask in self._cache:
                return self._cache[coalition.mask]
        value = float(self._fn(coalition))
        with self._lock:
            self._cache.setdefault(coalition.mask, value)
            return self._cache[coalition.mask]

    def __repr__(self) -> str:
        return f"ValueOracle(n={self.n}, label={self.label!r})"


def coalitions_of_size(n: int, m: int) -> Iterator[Coalition]:
    """Yield all C(n, m) size-m coalitions of {0..n-1}.

    Order is ascending lexicographic over member tuples; each coalition
    appears exactly once.
    """
    if n < 0 or m < 0 or m > n:
        raise InvalidArgumentError(f"need 0 <= m <= n, got n={n}, m={m}")
    for combo in itertools.combinations(range(n), m):
        yield Coalition(combo)


def delta_v(v: ValueOracle, i: int, j: int, s: Coalition) -> float:
    """The elementary pairwise interaction at one context:

        v(S u {i,j}) - v(S u {i}) - v(S u {j}) + v(S)

    Exactly four oracle evaluations; no caching assumptions. Grouped as
    (v(S u {i,j}) + v(S)) - (v(S u {i}) + v(S u {j})) so swapping i and j
    gives a bitwise-identical result.
    """
    if i == j:
        raise InvalidArgumentError(f"players must differ, got i=j={i}")
    if i in s or j in s:
        raise InvalidArgumentError(f"players {i},{j} must not be in the context {s!r}")
    both = v.evaluate(s.add(i, j))
    only_i = v.evaluate(s.add(i))
    only_j = v.evaluate(s.add(j))
    base = v.evaluate(s)
    return (both + base) - (only_i + only_j)
