"""Integer partitions, degree vectors, Young diagrams and multi-index orders.

Partitions are stored with non-decreasing positive parts, so ``(1, 1, 3, 4)``
has its largest part last.  The degree vector attached to a partition is
``m_j = lambda_j + (j - 1)`` (one-based ``j``); it is strictly increasing and
its last entry ``m_n`` controls the size of every matrix built downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable, Sequence


class InvalidPartitionError(ValueError):
    """Raised for empty input or a non-positive part."""


class InvalidMultiIndexError(ValueError):
    """Raised when a multi-index is not strictly increasing or too small."""


@dataclass(frozen=True)
class Partition:
    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise InvalidPartitionError("a partition needs at least one part")
        if any((not isinstance(p, int)) or p < 1 for p in self.parts):
            raise InvalidPartitionError(f"parts must be positive integers, got {self.parts}")
        if any(a > b for a, b in zip(self.parts, self.parts[1:])):
            raise InvalidPartitionError(f"parts must be non-decreasing, got {self.parts}")

    @property
    def n(self) -> int:
        return len(self.parts)

    @property
    def N(self) -> int:  # noqa: N802 - conventional name for |lambda|
        return sum(self.parts)

    @property
    def degrees(self) -> tuple[int, ...]:
        return degree_vector(self)

    @property
    def m_n(self) -> int:
        return self.parts[-1] + self.n - 1

    @property
    def lump_count(self) -> int:
        """Total number of lumps, ``N + n * m_n``."""
        return self.N + self.n * self.m_n

    def to_json(self) -> dict:
        return {"parts": list(self.parts)}

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class LexComparison:
    """Outcome of comparing two multi-indices.

    ``order`` is -1, 0 or 1 for the lexicographic comparison and
    ``dominated`` is true when every entry of the first index is at most the
    matching entry of the second.
    """

    order: int
    dominated: bool


def make_partition(parts: Iterable[int]) -> Partition:
    values = list(parts)
    if not values:
        raise InvalidPartitionError("a partition needs at least one part")
    for p in values:
        if isinstance(p, bool) or not isinstance(p, int) or p < 1:
            raise InvalidPartitionError(f"parts must be positive integers, got {values}")
    return Partition(tuple(sorted(values)))


def parse_partition(text: str) -> Partition:
    """Parse ``"1,2,3"`` (whitespace tolerated) into a partition."""
    try:
        values = [int(chunk) for chunk in text.replace(" ", "").split(",") if chunk]
    except ValueError as exc:
        raise InvalidPartitionError(f"cannot parse partition {text!r}") from exc
    return make_partition(values)


def degree_vector(p: Partition) -> tuple[int, ...]:
    return tuple(part + j for j, part in enumerate(p.parts))


def conjugate(p: Partition) -> Partition:
    # Column heights of the diagram; reversed so parts stay non-decreasing.
    heights = [sum(1 for part in p.parts if part > col) for col in range(p.parts[-1])]
    return Partition(tuple(reversed(heights)))


def partition_of_multiindex(r: Sequence[int]) -> tuple[int, ...]:
    """Return ``lambda(r)_i = r_i - i + 1`` (zero-based ``i`` gives ``r_i - i``).

    Zero parts are kept, so the empty partition of length ``n`` comes back as
    ``(0,) * n``.
    """
    check_multiindex(r)
    for i, value in enumerate(r):
        if value < i:
            raise InvalidMultiIndexError(f"entry {value} at position {i} is below {i}")
    return tuple(value - i for i, value in enumerate(r))


def check_multiindex(r: Sequence[int], bound: int | None = None) -> None:
    if any(x < 0 for x in r):
        raise InvalidMultiIndexError(f"negative entry in {tuple(r)}")
    if any(a >= b for a, b in zip(r, r[1:])):
        raise InvalidMultiIndexError(f"{tuple(r)} is not strictly increasing")
    if bound is not None and r and r[-1] > bound:
        raise InvalidMultiIndexError(f"{tuple(r)} exceeds bound {bound}")


def compare_multiindices(r: Sequence[int], s: Sequence[int]) -> LexComparison:
    if len(r) != len(s):
        raise InvalidMultiIndexError(f"length mismatch: {tuple(r)} vs {tuple(s)}")
    order = 0
    for a, b in zip(r, s):
        if a != b:
            order = -1 if a < b else 1
            break
    return LexComparison(order, all(a <= b for a, b in zip(r, s)))


def enumerate_multiindices(n: int, m_n: int) -> list[tuple[int, ...]]:
    """All strictly increasing ``n``-tuples in ``[0, 2*m_n]`` in lexicographic order."""
    if n < 1:
        raise InvalidMultiIndexError("n must be at least 1")
    return list(itertools.combinations(range(2 * m_n + 1), n))


def multiindex_count(n: int, m_n: int) -> int:
    return comb(2 * m_n + 1, n)


def classify_special(p: Partition) -> frozenset[str]:
    parts = p.parts
    n = p.n
    tags: set[str] = set()
    if len(set(parts)) == 1 and n > 1:
        tags.add("rectangular")
    consecutive = all(b - a == 1 for a, b in zip(parts, parts[1:]))
    if consecutive and n > 1:
        if parts[0] == 1:
            tags.add("triangular")
        else:
            tags.add("trapezoidal")
            if parts[0] == n:
                tags.add("pentagonal")
    if n > 1 and parts == tuple(range(1, 2 * n, 2)):
        tags.add("odd")
    if n > 1 and parts == tuple(range(2, 2 * n + 1, 2)):
        tags.add("even")
    if n % 2 == 0 and all(parts[i] == parts[i + 1] for i in range(0, n, 2)):
        tags.add("square")
    if not tags:
        tags.add("none")
    return frozenset(tags)


def skew_contains(mu: Sequence[int], lam: Partition | Sequence[int]) -> bool:
    """Whether the diagram of ``mu`` fits inside the diagram of ``lam``.

    Both are aligned at their largest part, so shorter inputs are padded
    with leading zeros.
    """
    big = list(lam.parts if isinstance(lam, Partition) else lam)
    small = list(mu)
    if len(small) > len(big):
        excess = small[: len(small) - len(big)]
        if any(excess):
            return False
        small = small[len(small) - len(big):]
    small = [0] * (len(big) - len(small)) + small
    return all(a <= b for a, b in zip(sorted(small), sorted(big)))


def young_diagram(p: Partition | Sequence[int], glyph: str = "[]") -> str:
    """ASCII diagram with the largest part on the top row."""
    parts = p.parts if isinstance(p, Partition) else tuple(p)
    return "\n".join(glyph * part for part in sorted(parts, reverse=True) if part > 0)
