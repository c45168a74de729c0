"""Tests for intervals and interval sets."""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dredmtl.temporal import (EMPTY, Interval, IntervalSet, coalesce, format_rational, hull_of, intersect,
                              make_interval, minkowski_sum, set_difference, set_intersection, set_union, shift,
                              to_rational)


def closed(lo, hi):
    return Interval.closed(lo, hi)


@st.composite
def intervals(draw, low=-10, high=10):
    lo = draw(st.integers(low, high))
    hi = draw(st.integers(lo, high))
    if lo == hi:
        return Interval.point(lo)
    return Interval(Fraction(lo), Fraction(hi), draw(st.booleans()), draw(st.booleans()))


interval_sets = st.lists(intervals(), max_size=5).map(IntervalSet)
samples = st.integers(-22, 22).map(lambda k: Fraction(k, 2))


class TestRationals:
    """Test rational parsing and formatting."""

    def test_integer_and_fraction_literals(self):
        assert to_rational(3) == Fraction(3)
        assert to_rational('1/2') == Fraction(1, 2)
        assert to_rational('-7') == Fraction(-7)

    def test_decimal_is_exact(self):
        assert to_rational('0.1') == Fraction(1, 10)

    def test_floats_rejected(self):
        with pytest.raises(ValueError):
            to_rational(0.5)

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            to_rational('abc')

    def test_format(self):
        assert format_rational(Fraction(4)) == '4'
        assert format_rational(Fraction(-3, 4)) == '-3/4'


class TestInterval:
    """Test single intervals."""

    def test_empty_interval_rejected(self):
        with pytest.raises(ValueError):
            Interval(Fraction(1), Fraction(1), True, False)
        with pytest.raises(ValueError):
            closed(2, 1)

    def test_make_interval_returns_none_for_empty(self):
        assert make_interval(Fraction(1), Fraction(1), False, True) is None
        assert make_interval(Fraction(1), Fraction(1), True, True) == Interval.point(1)

    def test_str(self):
        assert str(Interval(Fraction(24), Fraction(34), False, True)) == '(24,34]'
        assert str(closed('1/2', 3)) == '[1/2,3]'

    def test_contains_respects_open_ends(self):
        interval = Interval(Fraction(0), Fraction(1), False, True)
        assert not interval.contains(Fraction(0))
        assert interval.contains(Fraction(1))
        assert interval.contains(Fraction(1, 2))

    def test_intersect_meeting_endpoints(self):
        assert intersect(closed(0, 1), closed(1, 2)) == Interval.point(1)
        assert intersect(Interval(Fraction(0), Fraction(1), True, False), closed(1, 2)) is None

    def test_intersect_open_closed_same_endpoint(self):
        a = Interval(Fraction(0), Fraction(5), False, True)
        b = closed(0, 3)
        assert intersect(a, b) == Interval(Fraction(0), Fraction(3), False, True)

    def test_covers(self):
        assert closed(0, 10).covers(Interval(Fraction(0), Fraction(10), False, False))
        assert not Interval(Fraction(0), Fraction(10), False, True).covers(closed(0, 1))

    def test_reflect_and_shift(self):
        window = Interval(Fraction(1), Fraction(3), True, False)
        assert window.reflect() == Interval(Fraction(-3), Fraction(-1), False, True)
        assert window.shift(Fraction(2)) == Interval(Fraction(3), Fraction(5), True, False)


class TestIntervalSet:
    """Test coalesced interval sets."""

    def test_coalesce_merges_touching(self):
        merged = coalesce([closed(2, 3), Interval(Fraction(0), Fraction(2), True, False)])
        assert merged == (closed(0, 3),)

    def test_open_gap_is_kept(self):
        left = Interval(Fraction(0), Fraction(1), True, False)
        right = Interval(Fraction(1), Fraction(2), False, True)
        assert len(IntervalSet([left, right])) == 2

    def test_union(self):
        result = set_union(IntervalSet.of(closed(0, 1)), IntervalSet.of(closed(1, 2), closed(5, 6)))
        assert result == IntervalSet.of(closed(0, 2), closed(5, 6))

    def test_difference_leaves_open_ends(self):
        result = set_difference(IntervalSet.of(closed(0, 10)), IntervalSet.of(closed(3, 4)))
        assert result == IntervalSet.of(Interval(Fraction(0), Fraction(3), True, False),
                                        Interval(Fraction(4), Fraction(10), False, True))

    def test_difference_to_empty(self):
        assert set_difference(IntervalSet.of(closed(1, 2)), IntervalSet.of(closed(0, 3))) == EMPTY

    def test_intersection(self):
        a = IntervalSet.of(closed(0, 2), closed(4, 6))
        b = IntervalSet.of(closed(1, 5))
        assert set_intersection(a, b) == IntervalSet.of(closed(1, 2), closed(4, 5))

    def test_shift(self):
        assert shift(IntervalSet.of(closed(0, 1)), Fraction(10)) == IntervalSet.of(closed(10, 11))

    def test_minkowski_sum(self):
        assert minkowski_sum(IntervalSet.of(closed(0, 1)), closed(0, 2)) == IntervalSet.of(closed(0, 3))

    def test_minkowski_sum_open_window(self):
        result = minkowski_sum(IntervalSet.of(Interval.point(0)), Interval(Fraction(1), Fraction(2), False, True))
        assert result == IntervalSet.of(Interval(Fraction(1), Fraction(2), False, True))

    def test_restrict(self):
        s = IntervalSet.of(closed(0, 1), closed(10, 11), closed(20, 21))
        assert s.restrict(closed(5, 15)) == IntervalSet.of(closed(10, 11))

    def test_hull(self):
        s = IntervalSet.of(Interval(Fraction(0), Fraction(1), False, True), closed(5, 6))
        assert s.hull() == Interval(Fraction(0), Fraction(6), False, True)
        assert EMPTY.hull() is None
        assert hull_of([closed(3, 4), closed(-1, 0)]) == closed(-1, 4)


class TestIntervalSetProperties:
    """Pointwise properties of the set operations."""

    @given(interval_sets, interval_sets, samples)
    def test_union_pointwise(self, a, b, t):
        assert a.union(b).contains(t) == (a.contains(t) or b.contains(t))

    @given(interval_sets, interval_sets, samples)
    def test_difference_pointwise(self, a, b, t):
        assert a.difference(b).contains(t) == (a.contains(t) and not b.contains(t))

    @given(interval_sets, interval_sets, samples)
    def test_intersection_pointwise(self, a, b, t):
        assert a.intersection(b).contains(t) == (a.contains(t) and b.contains(t))

    @given(interval_sets)
    def test_results_are_coalesced(self, a):
        members = a.intervals
        for left, right in zip(members, members[1:]):
            assert left.hi < right.lo or (left.hi == right.lo and not left.hi_closed and not right.lo_closed)

    @given(interval_sets, intervals(0, 3), samples)
    def test_minkowski_sum_pointwise(self, a, window, t):
        # t is in the sum iff t - t1 is in the window for some t1 in a
        expected = any(
            member.contains(t - d)
            for member in a
            for d in {window.lo, window.hi, (window.lo + window.hi) / 2}
            if window.contains(d)
        )
        if expected:
            assert a.minkowski_sum(window).contains(t)
