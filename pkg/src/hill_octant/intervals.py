"""Closed-interval set algebra with Minkowski sums.

Sets are finite unions of closed intervals (points are zero-length
intervals; the right endpoint may be +inf).  All constructors merge
overlapping or touching pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["Interval", "IntervalSet", "minkowski_sum"]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be nan")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def distance(self, other: "Interval") -> float:
        """0 if they intersect, otherwise the gap between them."""
        if self.hi < other.lo:
            return other.lo - self.hi
        if other.hi < self.lo:
            return self.lo - other.hi
        return 0.0

    def distance_point(self, x: float) -> float:
        if x < self.lo:
            return self.lo - x
        if x > self.hi:
            return x - self.hi
        return 0.0


class IntervalSet:
    """Sorted union of disjoint closed intervals."""

    def __init__(self, intervals=(), merge_tol: float = 0.0):
        pieces = sorted(
            (iv if isinstance(iv, Interval) else Interval(*iv) for iv in intervals),
            key=lambda iv: (iv.lo, iv.hi),
        )
        merged: list[Interval] = []
        for iv in pieces:
            if merged and iv.lo <= merged[-1].hi + merge_tol:
                if iv.hi > merged[-1].hi:
                    merged[-1] = Interval(merged[-1].lo, iv.hi)
            else:
                merged.append(iv)
        self.intervals: tuple[Interval, ...] = tuple(merged)
        self.merge_tol = merge_tol

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.intervals == other.intervals

    def __repr__(self):
        body = ", ".join(f"[{iv.lo:g}, {iv.hi:g}]" for iv in self.intervals)
        return f"IntervalSet({body})"

    @property
    def empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float) -> bool:
        return any(iv.contains(x) for iv in self.intervals)

    def distance(self, target: Interval) -> float:
        """Distance from this set to an interval (inf when empty)."""
        if self.empty:
            return math.inf
        return min(iv.distance(target) for iv in self.intervals)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(
            list(self.intervals) + list(other.intervals),
            merge_tol=max(self.merge_tol, other.merge_tol),
        )

    def hull(self) -> Interval | None:
        if self.empty:
            return None
        return Interval(self.intervals[0].lo, self.intervals[-1].hi)


def minkowski_sum(a: IntervalSet, b: IntervalSet, merge_tol: float = 0.0) -> IntervalSet:
    """{x + y : x in A, y in B} for finite unions of closed intervals."""
    if a.empty or b.empty:
        return IntervalSet((), merge_tol=merge_tol)
    return IntervalSet(
        (ia + ib for ia in a for ib in b),
        merge_tol=merge_tol,
    )
