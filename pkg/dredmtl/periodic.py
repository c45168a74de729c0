"""Periodic materialisations: a finite core plus repeating left/right periods.

A left period ``[a,b)`` makes the unfolding repeat the core's content on
``[a,b)`` forever to the left; a right period ``(c,e]`` does the same to the
right. The core holds the unfolding exactly on ``[a,e]``.
"""
import logging
import math
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from dredmtl.store import AtomSet, FactStore
from dredmtl.syntax import Fact, GroundAtom, Program, Ruler, parse_dataset, parse_interval
from dredmtl.temporal import EMPTY, Interval, IntervalSet, hull_of, make_interval
from dredmtl.utils import EvaluationError, ParseError, PeriodError, read_text, write_text

logger = logging.getLogger('dredmtl.periodic')

LEFT = 'left'
RIGHT = 'right'

Periods = Tuple[Interval, Interval]

_UNKNOWN = object()


def rational_lcm(a: Fraction, b: Fraction) -> Fraction:
    """Least common multiple of two positive rationals."""
    denominator = math.lcm(a.denominator, b.denominator)
    return Fraction(math.lcm(int(a * denominator), int(b * denominator)), denominator)


def _check_period(period: Optional[Interval], end: str):
    if period is None:
        return
    if period.is_punctual:
        raise PeriodError(f"{end} period {period} has zero length")
    if end == LEFT and not (period.lo_closed and not period.hi_closed):
        raise PeriodError(f"left period must have the form [a,b), got {period}")
    if end == RIGHT and not (not period.lo_closed and period.hi_closed):
        raise PeriodError(f"right period must have the form (c,d], got {period}")


def _tiles_left(content: IntervalSet, period: Interval, window: Interval) -> List[Interval]:
    length = period.length
    first = max(1, math.ceil((period.lo - window.hi) / length))
    last = math.ceil((period.hi - window.lo) / length) - 1
    pieces: List[Interval] = []
    for n in range(first, last + 1):
        pieces.extend(content.shift(-n * length).restrict(window))
    return pieces


def _tiles_right(content: IntervalSet, period: Interval, window: Interval) -> List[Interval]:
    length = period.length
    first = max(1, math.ceil((window.lo - period.hi) / length))
    last = math.ceil((window.hi - period.lo) / length) - 1
    pieces: List[Interval] = []
    for n in range(first, last + 1):
        pieces.extend(content.shift(n * length).restrict(window))
    return pieces


def _core_window(left: Optional[Interval], right: Optional[Interval], window: Interval) -> Optional[Interval]:
    lo, lo_closed = window.lo, window.lo_closed
    hi, hi_closed = window.hi, window.hi_closed
    if left is not None and left.lo > lo:
        lo, lo_closed = left.lo, True
    if right is not None and right.hi < hi:
        hi, hi_closed = right.hi, True
    return make_interval(lo, hi, lo_closed, hi_closed)


def _unfold(intervals: IntervalSet, left: Optional[Interval], right: Optional[Interval],
            window: Interval) -> IntervalSet:
    # one atom's core content, tiled through both periods and cut to `window`
    if not intervals:
        return EMPTY
    pieces: List[Interval] = []
    core_window = _core_window(left, right, window)
    if core_window is not None:
        pieces.extend(intervals.restrict(core_window))
    if left is not None and window.lo < left.lo:
        content = intervals.restrict(left)
        if content:
            pieces.extend(_tiles_left(content, left, window))
    if right is not None and window.hi > right.hi:
        content = intervals.restrict(right)
        if content:
            pieces.extend(_tiles_right(content, right, window))
    return IntervalSet(pieces) if pieces else EMPTY


class PeriodicMaterialisation:
    """
    Finite handle ``<core, left, right>`` on an infinite interpretation.

    Core content outside ``[left.lo, right.hi]`` is dropped on construction.
    An absent period means the unfolding has nothing beyond the core on that
    side.

    A materialisation produced by ``periodic_minus``/``periodic_union`` is
    *patched*: it keeps a plain root materialisation and the new core content
    of the atoms the operation touched. Every other atom unfolds exactly as
    in the root. The full core is only built when ``core`` is read.
    """

    __slots__ = ('_core', 'left', 'right', '_bounds', '_root', '_patches', '_atom_sets')

    def __init__(self, core: FactStore, left: Optional[Interval] = None, right: Optional[Interval] = None):
        _check_period(left, LEFT)
        _check_period(right, RIGHT)
        if left is not None and right is not None and left.hi > right.lo:
            raise PeriodError(f"left period {left} overlaps right period {right}")
        bounds = _UNKNOWN
        if left is not None or right is not None:
            hull = core.hull()
            bounds = hull
            if hull is not None and not self._span_of(left, right, hull).covers(hull):
                core = core.project(self._span_of(left, right, hull))
                bounds = _UNKNOWN
        self._core: Optional[FactStore] = core
        self.left = left
        self.right = right
        self._bounds = bounds
        self._root: Optional[PeriodicMaterialisation] = None
        self._patches: Dict[GroundAtom, IntervalSet] = {}
        self._atom_sets: Dict[Optional[str], Iterable[GroundAtom]] = {}

    @classmethod
    def patched(cls, root: 'PeriodicMaterialisation', patches: Dict[GroundAtom, IntervalSet],
                left: Optional[Interval], right: Optional[Interval], span: Interval) -> 'PeriodicMaterialisation':
        """
        A materialisation that unfolds like ``root`` except on the patched atoms.

        ``patches`` maps each touched atom to its core content on ``span`` (an
        empty set masks the atom). The periods must repeat ``root``: their
        lengths are multiples of the root's and they lie at or beyond its
        periods, or beyond its content where the root has none.
        """
        if root._root is not None:
            raise PeriodError("the root of a patched materialisation must be plain")
        _check_period(left, LEFT)
        _check_period(right, RIGHT)
        m = cls.__new__(cls)
        m._core = None
        m.left = left
        m.right = right
        m._bounds = span
        m._root = root
        m._patches = patches
        m._atom_sets = {}
        return m

    @staticmethod
    def _span_of(left: Optional[Interval], right: Optional[Interval], hull: Interval) -> Interval:
        lo = left.lo if left is not None else hull.lo
        hi = right.hi if right is not None else hull.hi
        return Interval(lo, max(lo, hi))

    @classmethod
    def bounded(cls, store: FactStore) -> 'PeriodicMaterialisation':
        return cls(store)

    # structure -----------------------------------------------------------

    @property
    def core(self) -> FactStore:
        """The core content of every atom on ``[left.lo, right.hi]``."""
        if self._core is None:
            span = self._bounds
            core = FactStore()
            for atom in self._root.atoms():
                if atom not in self._patches:
                    core.add_set(atom, self._root.unfold_atom(atom, span))
            for atom, intervals in self._patches.items():
                core.add_set(atom, intervals)
            self._core = core
            self._root = None
            self._patches = {}
            self._atom_sets = {}
        return self._core

    @property
    def is_patched(self) -> bool:
        return self._root is not None

    @property
    def root(self) -> 'PeriodicMaterialisation':
        return self._root if self._root is not None else self

    @property
    def patches(self) -> Dict[GroundAtom, IntervalSet]:
        return self._patches

    def __eq__(self, other) -> bool:
        if not isinstance(other, PeriodicMaterialisation):
            return NotImplemented
        return self.left == other.left and self.right == other.right and self.core == other.core

    def __repr__(self) -> str:
        if self._root is not None:
            return (f"PeriodicMaterialisation(left={self.left}, right={self.right}, "
                    f"{len(self._patches)} patched atoms)")
        return (f"PeriodicMaterialisation(left={self.left}, right={self.right}, "
                f"core={len(self._core)} facts)")

    def is_bounded(self) -> bool:
        return self.left is None and self.right is None

    def is_empty(self) -> bool:
        if self._root is None:
            return self._core.is_empty()
        if any(self._patches.values()):
            return False
        return all(atom in self._patches for atom in self._root.atoms())

    def content(self, end: str) -> FactStore:
        """Core facts inside the period at ``end`` (empty if there is none)."""
        period = self.left if end == LEFT else self.right
        return FactStore() if period is None else self.core.project(period)

    def period(self, end: str) -> Optional[Interval]:
        return self.left if end == LEFT else self.right

    def with_core(self, core: FactStore) -> 'PeriodicMaterialisation':
        return PeriodicMaterialisation(core, self.left, self.right)

    def stored(self, atom: GroundAtom) -> IntervalSet:
        """Core content of one atom."""
        if self._root is None:
            return self._core.get(atom)
        if atom in self._patches:
            return self._patches[atom]
        return self._root.unfold_atom(atom, self._bounds)

    # unfolding -----------------------------------------------------------

    def unfold_atom(self, atom: GroundAtom, window: Interval) -> IntervalSet:
        """The unfolding of one atom on ``window``."""
        if self._root is None:
            return _unfold(self._core.get(atom), self.left, self.right, window)
        patch = self._patches.get(atom)
        if patch is None:
            return self._root.unfold_atom(atom, window)
        return _unfold(patch, self.left, self.right, window)

    def unfold_window(self, window: Interval) -> FactStore:
        core = self.core
        result = FactStore()
        core_window = _core_window(self.left, self.right, window)
        if core_window is not None:
            result.update(core.project(core_window))
        for end, tiles, outside in ((LEFT, _tiles_left, self.left is not None and window.lo < self.left.lo),
                                    (RIGHT, _tiles_right, self.right is not None and window.hi > self.right.hi)):
            if not outside:
                continue
            period = self.period(end)
            for atom, content in self.content(end).items():
                result.add_set(atom, IntervalSet(tiles(content, period, window)))
        return result

    def atoms(self, predicate: Optional[str] = None) -> Iterable[GroundAtom]:
        if self._root is None:
            return self._core.atoms(predicate)
        cached = self._atom_sets.get(predicate)
        if cached is None:
            base = self._root.atoms(predicate)
            added, dropped = set(), set()
            for atom, intervals in self._patches.items():
                if predicate is not None and atom.predicate != predicate:
                    continue
                if intervals and atom not in base:
                    added.add(atom)
                elif not intervals and atom in base:
                    dropped.add(atom)
            cached = AtomSet(base, added, dropped) if added or dropped else base
            self._atom_sets[predicate] = cached
        return cached

    def entails(self, fact: Fact) -> bool:
        return self.unfold_atom(fact.atom, fact.interval).covers(fact.interval)

    def content_bounds(self) -> Optional[Interval]:
        """A closed interval holding all core content; None when the core is empty."""
        if self._bounds is _UNKNOWN:
            self._bounds = self._core.hull()
        return self._bounds


class PeriodicView:
    """Lazy read access to the unfolding of a periodic materialisation."""

    def __init__(self, materialisation: PeriodicMaterialisation):
        self.materialisation = materialisation

    def lookup(self, atom: GroundAtom, window: Optional[Interval] = None) -> IntervalSet:
        if window is None:
            if self.materialisation.is_bounded():
                return self.materialisation.stored(atom)
            raise EvaluationError("an unfolding can only be read through a bounded window")
        return self.materialisation.unfold_atom(atom, window)

    def atoms(self, predicate: str) -> Iterable[GroundAtom]:
        return self.materialisation.atoms(predicate)


def unfold_window(m: PeriodicMaterialisation, window: Interval) -> FactStore:
    """Exactly unfold(m) restricted to ``window``."""
    return m.unfold_window(window)


# ---------------------------------------------------------------------------
# Ext and Aln
# ---------------------------------------------------------------------------

def _grow(m: PeriodicMaterialisation, end: str, target: Interval) -> PeriodicMaterialisation:
    # re-describe m with the period at `end` replaced by `target`, which must
    # lie further out than (or equal to) the current one
    period = m.period(end)
    if period is not None:
        if end == LEFT:
            extra = make_interval(target.lo, period.lo, True, False)
        else:
            extra = make_interval(period.hi, target.hi, False, True)
        core = m.core
        if extra is not None:
            core = m.core.union(m.unfold_window(extra))
    else:
        core = m.core
    left = target if end == LEFT else m.left
    right = target if end == RIGHT else m.right
    return PeriodicMaterialisation(core, left, right)


def _extend(m: PeriodicMaterialisation, end: str, length: Fraction) -> PeriodicMaterialisation:
    period = m.period(end)
    if period.length == length:
        return m
    if end == LEFT:
        target = Interval(period.hi - length, period.hi, True, False)
    else:
        target = Interval(period.lo, period.lo + length, False, True)
    return _grow(m, end, target)


def ext(m1: PeriodicMaterialisation, m2: PeriodicMaterialisation,
        end: str) -> Tuple[PeriodicMaterialisation, PeriodicMaterialisation]:
    """
    Give both periods at ``end`` the least common multiple of their lengths.

    Unfoldings are unchanged: the longer period repeats the old content.

    Raises:
        PeriodError: If either input has no period at ``end``
    """
    p1, p2 = m1.period(end), m2.period(end)
    if p1 is None or p2 is None:
        raise PeriodError(f"ext needs a {end} period on both inputs")
    length = rational_lcm(p1.length, p2.length)
    return _extend(m1, end, length), _extend(m2, end, length)


def aln(m1: PeriodicMaterialisation, m2: PeriodicMaterialisation,
        end: str) -> Tuple[PeriodicMaterialisation, PeriodicMaterialisation, Interval]:
    """
    Seat the periods at ``end`` on one common interval.

    The seat is the outermost of the two periods; an input without a period
    gets an empty one placed beyond all of its content.

    Raises:
        PeriodError: If neither input has a period at ``end``, or both have
            one and their lengths differ
    """
    p1, p2 = m1.period(end), m2.period(end)
    if p1 is None and p2 is None:
        raise PeriodError(f"aln needs a {end} period on at least one input")
    if p1 is not None and p2 is not None and p1.length != p2.length:
        raise PeriodError(f"aln needs equal {end} period lengths, got {p1.length} and {p2.length}")
    length = (p1 or p2).length
    hulls = [m.content_bounds() if p is None else None for m, p in ((m1, p1), (m2, p2))]
    if end == LEFT:
        seats = [p.hi for p in (p1, p2) if p is not None]
        seats += [hull.lo for hull in hulls if hull is not None]
        seat = min(seats)
        common = Interval(seat - length, seat, True, False)
    else:
        seats = [p.lo for p in (p1, p2) if p is not None]
        seats += [hull.hi for hull in hulls if hull is not None]
        seat = max(seats)
        common = Interval(seat, seat + length, False, True)
    return _grow(m1, end, common), _grow(m2, end, common), common


def align(m1: PeriodicMaterialisation,
          m2: PeriodicMaterialisation) -> Tuple[PeriodicMaterialisation, PeriodicMaterialisation]:
    """Make both ends tile identically, wherever either input has a period."""
    for end in (LEFT, RIGHT):
        p1, p2 = m1.period(end), m2.period(end)
        if p1 is None and p2 is None:
            continue
        if p1 is not None and p2 is not None:
            m1, m2 = ext(m1, m2, end)
        m1, m2, _ = aln(m1, m2, end)
    return m1, m2


def _seat(m: PeriodicMaterialisation, end: str) -> Optional[Fraction]:
    # inner end of the period at `end`, or the content edge when there is none
    period = m.period(end)
    if period is not None:
        return period.hi if end == LEFT else period.lo
    bounds = m.content_bounds()
    if bounds is None:
        return None
    return bounds.lo if end == LEFT else bounds.hi


def _common_period(m1: PeriodicMaterialisation, m2: PeriodicMaterialisation, end: str) -> Optional[Interval]:
    """A period at ``end`` repeating both unfoldings, or None if neither repeats there."""
    p1, p2 = m1.period(end), m2.period(end)
    if p1 is None and p2 is None:
        return None
    length = rational_lcm(p1.length, p2.length) if p1 is not None and p2 is not None else (p1 or p2).length
    seats = [seat for seat in (_seat(m1, end), _seat(m2, end)) if seat is not None]
    if end == LEFT:
        seat = min(seats)
        return Interval(seat - length, seat, True, False)
    seat = max(seats)
    return Interval(seat, seat + length, False, True)


def _reseat(m: PeriodicMaterialisation) -> PeriodicMaterialisation:
    """
    Move the periods of a patched materialisation back towards its root.

    A period moves inwards one length at a time (or up to the root's seat)
    while every patched atom still repeats across the move.
    """
    root = m.root
    left, right = m.left, m.right
    right_floor = _seat(root, RIGHT)
    left_ceiling = _seat(root, LEFT)
    if right is not None and right_floor is not None:
        if left is not None:
            right_floor = max(right_floor, left.hi)
        seat, length = right.lo, right.length
        while seat > right_floor:
            candidate = max(right_floor, seat - length)
            moved = Interval(candidate, seat, False, True)
            if not all(m.unfold_atom(atom, moved) == m.unfold_atom(atom, moved.shift(length)).shift(-length)
                       for atom in m.patches):
                break
            seat = candidate
        right = Interval(seat, seat + length, False, True)
    if left is not None and left_ceiling is not None:
        if right is not None:
            left_ceiling = min(left_ceiling, right.lo)
        seat, length = left.hi, left.length
        while seat < left_ceiling:
            candidate = min(left_ceiling, seat + length)
            moved = Interval(seat, candidate, True, False)
            if not all(m.unfold_atom(atom, moved) == m.unfold_atom(atom, moved.shift(-length)).shift(length)
                       for atom in m.patches):
                break
            seat = candidate
        left = Interval(seat - length, seat, True, False)
    if left == m.left and right == m.right:
        return m
    span = m.content_bounds()
    span = Interval(left.lo if left is not None else span.lo, right.hi if right is not None else span.hi)
    patches = {atom: intervals.restrict(span) for atom, intervals in m.patches.items()}
    logger.debug(f"reseated periods {m.left}, {m.right} to {left}, {right}")
    return PeriodicMaterialisation.patched(root, patches, left, right, span)


def _patch(m1: PeriodicMaterialisation, m2: PeriodicMaterialisation,
           combine: Callable[[IntervalSet, IntervalSet], IntervalSet]) -> PeriodicMaterialisation:
    # only atoms of m2 (and atoms m1 already patched) are unfolded and combined
    left = _common_period(m1, m2, LEFT)
    right = _common_period(m1, m2, RIGHT)
    if left is None or right is None:
        hull = hull_of(bounds for bounds in (m1.content_bounds(), m2.content_bounds()) if bounds is not None)
        span = Interval(left.lo if left is not None else hull.lo, right.hi if right is not None else hull.hi)
    else:
        span = Interval(left.lo, right.hi)
    patches: Dict[GroundAtom, IntervalSet] = {}
    for atom in list(m1.patches) + [atom for atom in m2.atoms() if atom not in m1.patches]:
        patches[atom] = combine(m1.unfold_atom(atom, span), m2.unfold_atom(atom, span))
    return _reseat(PeriodicMaterialisation.patched(m1.root, patches, left, right, span))


def periodic_minus(m1: PeriodicMaterialisation, m2: PeriodicMaterialisation) -> PeriodicMaterialisation:
    """
    A materialisation whose unfolding is unfold(m1) minus unfold(m2).

    Both operands are read on a common period, after which the unfoldings
    of every atom of ``m2`` tile identically and their difference is exact.
    Atoms ``m2`` does not mention are shared with ``m1`` unchanged.
    """
    if m2.is_empty() or m1.is_empty():
        return m1
    return _patch(m1, m2, IntervalSet.difference)


def periodic_union(m1: PeriodicMaterialisation, m2: PeriodicMaterialisation) -> PeriodicMaterialisation:
    """A materialisation whose unfolding is unfold(m1) together with unfold(m2)."""
    if m2.is_empty():
        return m1
    if m1.is_empty():
        return m2
    return _patch(m1, m2, IntervalSet.union)


def difference_witness(m1: PeriodicMaterialisation,
                       m2: PeriodicMaterialisation) -> Optional[Tuple[str, Fact]]:
    """
    First fact on which two unfoldings disagree, or None if they are equal.

    Returns:
        ``('-', fact)`` for a fact only the first unfolding has, ``('+', fact)``
        for one only the second has
    """
    if m1.is_empty() and m2.is_empty():
        return None
    a1, a2 = align(m1, m2)
    for sign, store in (('-', a1.core.difference(a2.core)), ('+', a2.core.difference(a1.core))):
        for fact in store.facts():
            return sign, fact
    return None


def equivalent(m1: PeriodicMaterialisation, m2: PeriodicMaterialisation) -> bool:
    """True iff the two materialisations unfold to the same interpretation."""
    return difference_witness(m1, m2) is None


# ---------------------------------------------------------------------------
# Period search
# ---------------------------------------------------------------------------

def _matches(region: FactStore, first: Interval, second: Interval, offset: Fraction) -> bool:
    for _, intervals in region.items():
        if intervals.restrict(first).shift(offset) != intervals.restrict(second):
            return False
    return True


def _search_left(region: FactStore, ruler: Ruler, width: Fraction, bound: Fraction, step: Fraction,
                 above: Optional[Fraction], floor: Optional[Fraction]) -> Optional[Interval]:
    hull = region.hull()
    lowest = hull.lo if hull is not None else None

    def allowed(x: Fraction) -> bool:
        return (above is None or x > above) and (floor is None or x >= floor)

    multiple = 1
    while True:
        offset = multiple * step
        first_candidate = True
        for x in ruler.below(bound - offset - width):
            if not allowed(x):
                if first_candidate:
                    return None
                break
            first_candidate = False
            if lowest is None or x + offset + width < lowest:
                return Interval(x, x + offset, True, False)
            if _matches(region, Interval(x, x + width), Interval(x + offset, x + offset + width), offset):
                return Interval(x, x + offset, True, False)
        multiple += 1


def _search_right(region: FactStore, ruler: Ruler, width: Fraction, bound: Fraction, step: Fraction,
                  below: Optional[Fraction], ceiling: Optional[Fraction]) -> Optional[Interval]:
    hull = region.hull()
    highest = hull.hi if hull is not None else None

    multiple = 1
    while True:
        offset = multiple * step
        first_candidate = True
        for y in ruler.above(bound + width):
            if (below is not None and y + offset >= below) or (ceiling is not None and y + offset > ceiling):
                if first_candidate:
                    return None
                break
            first_candidate = False
            if highest is None or y - width > highest:
                return Interval(y, y + offset, False, True)
            if _matches(region, Interval(y - width, y), Interval(y + offset - width, y + offset), offset):
                return Interval(y, y + offset, False, True)
        multiple += 1


def _flank_limits(changes: FactStore, span: Interval) -> Optional[Tuple[Optional[Fraction], Optional[Fraction]]]:
    below = above = None
    for _, intervals in changes.items():
        for interval in intervals:
            if interval.hi < span.lo:
                below = interval.hi if below is None else max(below, interval.hi)
            elif interval.lo > span.hi:
                above = interval.lo if above is None else min(above, interval.lo)
            else:
                return None
    return below, above


def find_periods(program: Program, span: Interval, store: FactStore, changes: FactStore, ruler: Ruler,
                 left_bound: Optional[Fraction] = None, right_bound: Optional[Fraction] = None,
                 left_step: Optional[Fraction] = None, right_step: Optional[Fraction] = None,
                 explored: Optional[Interval] = None) -> Optional[Periods]:
    """
    Look for repeating flanks of ``store`` on both sides of ``span``.

    On the left, two windows ``[x, x+2d]`` and ``[x+p, x+p+2d]`` must carry
    shifted copies of the same facts, lie above every change left of the
    span and end before ``left_bound``; the right is symmetric. Anchors are
    ruler points, offsets are multiples of the step, and the smallest offset
    with the innermost anchor wins.

    Returns:
        ``([x, x+p), (y, y+p')]``, or None when a change meets ``span`` or
        no window pair qualifies
    """
    limits = _flank_limits(changes, span)
    if limits is None:
        return None
    below, above = limits
    width = 2 * program.depth
    left_bound = span.lo if left_bound is None else min(left_bound, span.lo)
    right_bound = span.hi if right_bound is None else max(right_bound, span.hi)
    floor = explored.lo if explored is not None else None
    ceiling = explored.hi if explored is not None else None

    region_lo = max([value for value in (below, floor) if value is not None], default=None)
    hull = store.hull()
    if hull is None:
        left_region = right_region = store
    else:
        lo = region_lo if region_lo is not None else hull.lo
        left_region = store.project(Interval(lo, left_bound)) if lo <= left_bound else FactStore()
        region_hi = min([value for value in (above, ceiling) if value is not None], default=None)
        hi = region_hi if region_hi is not None else hull.hi
        right_region = store.project(Interval(right_bound, hi)) if right_bound <= hi else FactStore()

    left = _search_left(left_region, ruler, width, left_bound, left_step or program.div, below, floor)
    if left is None:
        return None
    right = _search_right(right_region, ruler, width, right_bound, right_step or program.div, above, ceiling)
    if right is None:
        return None
    return left, right


def detect_saturation(program: Program, e: FactStore, current: FactStore, previous: FactStore,
                      changes: Optional[FactStore] = None, ruler: Optional[Ruler] = None) -> Optional[Periods]:
    """
    Periods showing that ``current`` is saturated, or None.

    ``current`` must be ``previous`` plus one round of rule applications; the
    returned windows avoid every fact that round added.
    """
    span = e.hull()
    if span is None:
        return None
    if changes is None:
        changes = current.difference(previous)
    if ruler is None:
        ruler = Ruler(program.div, e.endpoints())
    return find_periods(program, span, current, changes, ruler)


def pds(program: Program, span: Interval, reference: PeriodicMaterialisation, d: FactStore, delta: FactStore,
        ruler: Ruler, explored: Optional[Interval] = None) -> Optional[Periods]:
    """
    Period search for a DRed stage store.

    Windows stay where the reference materialisation already repeats: left of
    its left period's end and right of its right period's start (or beyond
    its core content when it has no period there). Offsets are multiples of
    the reference period lengths, or of div when a period is absent.

    Args:
        program: The program
        span: Hull of every dataset involved in the update
        reference: The materialisation the stage works against
        d: The stage store (D, R or A)
        delta: The facts the last round added to ``d``
        ruler: Ruler of the update's datasets
        explored: Region outside which ``d`` is not known to be complete

    Returns:
        The periods for ``d``, or None
    """
    bounds = reference.content_bounds()
    if reference.left is not None:
        left_bound, left_step = reference.left.hi, reference.left.length
    else:
        left_bound, left_step = (bounds.lo if bounds is not None else None), program.div
    if reference.right is not None:
        right_bound, right_step = reference.right.lo, reference.right.length
    else:
        right_bound, right_step = (bounds.hi if bounds is not None else None), program.div
    return find_periods(program, span, d, delta, ruler, left_bound, right_bound,
                        left_step, right_step, explored)


def with_periods(store: FactStore, periods: Periods) -> PeriodicMaterialisation:
    """Cut ``store`` to the span of the periods and attach them."""
    left, right = periods
    return PeriodicMaterialisation(store.project(Interval(left.lo, right.hi)), left, right)


# ---------------------------------------------------------------------------
# .pmat files
# ---------------------------------------------------------------------------

LEFT_HEADER = '#LPERIOD'
RIGHT_HEADER = '#RPERIOD'


def serialize_pmat(m: PeriodicMaterialisation) -> str:
    lines = []
    if m.left is not None:
        lines.append(f"{LEFT_HEADER} {m.left}\n")
    if m.right is not None:
        lines.append(f"{RIGHT_HEADER} {m.right}\n")
    return ''.join(lines) + m.core.serialize()


def parse_pmat(text: str) -> PeriodicMaterialisation:
    """
    Parse the ``.pmat`` format written by ``serialize_pmat``.

    Raises:
        ParseError: On malformed headers or facts
    """
    left = right = None
    body: List[str] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith('#'):
            keyword, _, rest = line.partition(' ')
            if keyword not in (LEFT_HEADER, RIGHT_HEADER):
                raise ParseError(f"unknown header {keyword}", number, 1)
            try:
                period = parse_interval(rest.strip())
            except ParseError as e:
                raise ParseError(f"bad period in {keyword}: {e}", number)
            if keyword == LEFT_HEADER:
                left = period
            else:
                right = period
            body.append('')
        else:
            body.append(raw)
    facts = parse_dataset('\n'.join(body))
    try:
        return PeriodicMaterialisation(FactStore(facts), left, right)
    except PeriodError as e:
        raise ParseError(str(e))


def write_pmat(m: PeriodicMaterialisation, path) -> None:
    write_text(path, serialize_pmat(m))
    logger.info(f"Wrote materialisation to {path}: {m!r}")


def read_pmat(path) -> PeriodicMaterialisation:
    """Load a ``.pmat`` file written by ``write_pmat``."""
    return parse_pmat(read_text(path))


__all__ = [
    'PeriodicMaterialisation', 'PeriodicView', 'unfold_window', 'ext', 'aln', 'align', 'periodic_minus',
    'periodic_union', 'equivalent', 'difference_witness', 'find_periods', 'detect_saturation', 'pds',
    'with_periods', 'serialize_pmat', 'parse_pmat', 'read_pmat', 'write_pmat', 'rational_lcm', 'LEFT', 'RIGHT',
]
