"""Exact rational time, intervals and coalesced interval sets.

Every time value in dredmtl is a ``fractions.Fraction``. Intervals are
bounded and never empty; an empty result is ``None`` (for single intervals)
or an empty ``IntervalSet``.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Tuple, Union

Rational = Fraction
Number = Union[int, str, Fraction]


def to_rational(value: Number) -> Fraction:
    """Convert an int, a decimal/fraction literal or a Fraction to a Fraction.

    Decimal literals are converted exactly ('0.5' becomes 1/2).

    Raises:
        ValueError: If the value is not a rational literal
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise ValueError(f"Not an exact rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    text = str(value).strip()
    if not text:
        raise ValueError("Empty rational literal")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Invalid rational literal {text!r}: {e}")


def format_rational(value: Fraction) -> str:
    """Render a rational as an integer or as p/q."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, order=False)
class Interval:
    """A bounded, nonempty interval with open or closed endpoints."""

    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        lo = to_rational(self.lo)
        hi = to_rational(self.hi)
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)
        if lo > hi or (lo == hi and not (self.lo_closed and self.hi_closed)):
            raise ValueError(f"Empty interval {self._render(lo, hi)}")

    def _render(self, lo, hi) -> str:
        left = '[' if self.lo_closed else '('
        right = ']' if self.hi_closed else ')'
        return f"{left}{format_rational(lo)},{format_rational(hi)}{right}"

    def __str__(self) -> str:
        return self._render(self.lo, self.hi)

    @classmethod
    def closed(cls, lo: Number, hi: Number) -> 'Interval':
        return cls(to_rational(lo), to_rational(hi), True, True)

    @classmethod
    def point(cls, t: Number) -> 'Interval':
        t = to_rational(t)
        return cls(t, t, True, True)

    @property
    def is_punctual(self) -> bool:
        return self.lo == self.hi

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def sort_key(self) -> Tuple[Fraction, bool, Fraction, bool]:
        # a closed left endpoint starts before an open one at the same value
        return (self.lo, not self.lo_closed, self.hi, self.hi_closed)

    def contains(self, t: Fraction) -> bool:
        if t < self.lo or t > self.hi:
            return False
        if t == self.lo and not self.lo_closed:
            return False
        if t == self.hi and not self.hi_closed:
            return False
        return True

    def covers(self, other: 'Interval') -> bool:
        """True iff ``other`` is a subset of this interval."""
        if other.lo < self.lo or (other.lo == self.lo and other.lo_closed and not self.lo_closed):
            return False
        if other.hi > self.hi or (other.hi == self.hi and other.hi_closed and not self.hi_closed):
            return False
        return True

    def intersect(self, other: 'Interval') -> Optional['Interval']:
        return intersect(self, other)

    def overlaps(self, other: 'Interval') -> bool:
        return intersect(self, other) is not None

    def shift(self, delta: Fraction) -> 'Interval':
        return Interval(self.lo + delta, self.hi + delta, self.lo_closed, self.hi_closed)

    def reflect(self) -> 'Interval':
        """The interval {-t | t in self}."""
        return Interval(-self.hi, -self.lo, self.hi_closed, self.lo_closed)

    def expand(self, radius: Fraction) -> 'Interval':
        """Closed interval widened by ``radius`` on both sides."""
        return Interval(self.lo - radius, self.hi + radius, True, True)

    def closure(self) -> 'Interval':
        return Interval(self.lo, self.hi, True, True)


def make_interval(lo: Fraction, hi: Fraction, lo_closed: bool, hi_closed: bool) -> Optional[Interval]:
    """Build an interval, or return None when the bounds describe the empty set."""
    if lo > hi or (lo == hi and not (lo_closed and hi_closed)):
        return None
    return Interval(lo, hi, lo_closed, hi_closed)


def intersect(a: Interval, b: Interval) -> Optional[Interval]:
    """Set intersection of two intervals, or None if they share no point."""
    if a.lo > b.lo:
        lo, lo_closed = a.lo, a.lo_closed
    elif b.lo > a.lo:
        lo, lo_closed = b.lo, b.lo_closed
    else:
        lo, lo_closed = a.lo, a.lo_closed and b.lo_closed
    if a.hi < b.hi:
        hi, hi_closed = a.hi, a.hi_closed
    elif b.hi < a.hi:
        hi, hi_closed = b.hi, b.hi_closed
    else:
        hi, hi_closed = a.hi, a.hi_closed and b.hi_closed
    return make_interval(lo, hi, lo_closed, hi_closed)


def _touches(left: Interval, right: Interval) -> bool:
    """True iff ``right`` (starting no earlier than ``left``) merges into ``left``."""
    if right.lo < left.hi:
        return True
    if right.lo == left.hi:
        return left.hi_closed or right.lo_closed
    return False


def _subtract(a: Interval, b: Interval) -> List[Interval]:
    if intersect(a, b) is None:
        return [a]
    pieces = []
    left = make_interval(a.lo, b.lo, a.lo_closed, not b.lo_closed)
    if left is not None:
        pieces.append(left)
    right = make_interval(b.hi, a.hi, not b.hi_closed, a.hi_closed)
    if right is not None:
        pieces.append(right)
    return pieces


def coalesce(intervals: Iterable[Interval]) -> Tuple[Interval, ...]:
    """Sort and merge intervals into canonical, maximal, disjoint form."""
    ordered = sorted(intervals, key=Interval.sort_key)
    merged: List[Interval] = []
    for current in ordered:
        if merged and _touches(merged[-1], current):
            last = merged[-1]
            if current.hi > last.hi:
                hi, hi_closed = current.hi, current.hi_closed
            elif current.hi < last.hi:
                hi, hi_closed = last.hi, last.hi_closed
            else:
                hi, hi_closed = last.hi, last.hi_closed or current.hi_closed
            merged[-1] = Interval(last.lo, hi, last.lo_closed, hi_closed)
        else:
            merged.append(current)
    return tuple(merged)


class IntervalSet:
    """An immutable, coalesced set of intervals."""

    __slots__ = ('_intervals', '_hash')

    def __init__(self, intervals: Iterable[Interval] = ()):
        self._intervals = coalesce(intervals)
        self._hash = None

    @classmethod
    def _canonical(cls, intervals: Tuple[Interval, ...]) -> 'IntervalSet':
        # intervals already sorted and coalesced
        result = cls.__new__(cls)
        result._intervals = intervals
        result._hash = None
        return result

    @classmethod
    def of(cls, *intervals: Interval) -> 'IntervalSet':
        return cls(intervals)

    @property
    def intervals(self) -> Tuple[Interval, ...]:
        return self._intervals

    def __iter__(self) -> Iterator[Interval]:
        return iter(self._intervals)

    def __len__(self) -> int:
        return len(self._intervals)

    def __bool__(self) -> bool:
        return bool(self._intervals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self._intervals == other._intervals

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._intervals)
        return self._hash

    def __repr__(self) -> str:
        return f"IntervalSet({self})"

    def __str__(self) -> str:
        return '{' + ', '.join(str(i) for i in self._intervals) + '}'

    def is_empty(self) -> bool:
        return not self._intervals

    def contains(self, t: Number) -> bool:
        t = to_rational(t)
        return any(interval.contains(t) for interval in self._intervals)

    def covers(self, interval: Interval) -> bool:
        """True iff every point of ``interval`` is in the set."""
        return any(member.covers(interval) for member in self._intervals)

    def hull(self) -> Optional[Interval]:
        if not self._intervals:
            return None
        first, last = self._intervals[0], self._intervals[-1]
        return Interval(first.lo, last.hi, first.lo_closed, last.hi_closed)

    def union(self, other: 'IntervalSet') -> 'IntervalSet':
        if not other._intervals:
            return self
        if not self._intervals:
            return other
        return IntervalSet(self._intervals + other._intervals)

    def difference(self, other: 'IntervalSet') -> 'IntervalSet':
        if not self._intervals or not other._intervals:
            return self
        result: List[Interval] = []
        for interval in self._intervals:
            pieces = [interval]
            for removed in other._intervals:
                if removed.lo > interval.hi:
                    break
                if removed.hi < interval.lo:
                    continue
                pieces = [piece for part in pieces for piece in _subtract(part, removed)]
                if not pieces:
                    break
            result.extend(pieces)
        return IntervalSet._canonical(tuple(result))

    def intersection(self, other: 'IntervalSet') -> 'IntervalSet':
        result: List[Interval] = []
        i = j = 0
        mine, theirs = self._intervals, other._intervals
        while i < len(mine) and j < len(theirs):
            common = intersect(mine[i], theirs[j])
            if common is not None:
                result.append(common)
            # advance whichever ends first
            a, b = mine[i], theirs[j]
            if a.hi < b.hi or (a.hi == b.hi and not a.hi_closed):
                i += 1
            else:
                j += 1
        return IntervalSet._canonical(tuple(result))

    def restrict(self, window: Interval) -> 'IntervalSet':
        """Intersection with a single interval."""
        if not self._intervals:
            return self
        hull = self.hull()
        if window.covers(hull):
            return self
        result = []
        for interval in self._intervals:
            if interval.lo > window.hi:
                break
            common = intersect(interval, window)
            if common is not None:
                result.append(common)
        return IntervalSet._canonical(tuple(result))

    def shift(self, delta: Number) -> 'IntervalSet':
        delta = to_rational(delta)
        if delta == 0 or not self._intervals:
            return self
        return IntervalSet._canonical(tuple(i.shift(delta) for i in self._intervals))

    def minkowski_sum(self, window: Interval) -> 'IntervalSet':
        """{t | exists t1 in self with t - t1 in window}."""
        return IntervalSet(
            Interval(i.lo + window.lo, i.hi + window.hi,
                     i.lo_closed and window.lo_closed, i.hi_closed and window.hi_closed)
            for i in self._intervals
        )

    def endpoints(self) -> List[Fraction]:
        points = []
        for interval in self._intervals:
            points.append(interval.lo)
            points.append(interval.hi)
        return points


EMPTY = IntervalSet()


def set_union(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.union(b)


def set_difference(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.difference(b)


def set_intersection(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.intersection(b)


def shift(s: IntervalSet, delta: Number) -> IntervalSet:
    return s.shift(delta)


def minkowski_sum(s: IntervalSet, window: Interval) -> IntervalSet:
    return s.minkowski_sum(window)


def hull_of(intervals: Iterable[Interval]) -> Optional[Interval]:
    """Smallest closed interval containing every given interval."""
    lo = hi = None
    for interval in intervals:
        if lo is None or interval.lo < lo:
            lo = interval.lo
        if hi is None or interval.hi > hi:
            hi = interval.hi
    if lo is None:
        return None
    return Interval(lo, hi, True, True)
