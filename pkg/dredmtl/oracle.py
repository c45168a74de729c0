"""Pointwise reference reasoner used to cross-check the interval evaluator.

The window is cut into ruler regions: every ruler point is a punctual
region and every open gap between neighbouring points is another. All
interpretations built by T_Pi are constant on these regions, so the oracle
keeps one bit per region and checks each rule at one sample per region.
It shares no evaluation code with ``dredmtl.evaluation``.
"""
import itertools
import logging
from bisect import bisect_left
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Set, Tuple

from dredmtl.store import FactStore
from dredmtl.syntax import (Bottom, Boxminus, Boxplus, Diamondminus, Diamondplus, GroundAtom, MetricAtom,
                            Program, Relational, Ruler, Since, Top, Until, is_variable)
from dredmtl.temporal import Interval, IntervalSet, intersect, make_interval
from dredmtl.utils import EvaluationError

logger = logging.getLogger('dredmtl.oracle')


class OracleResult(NamedTuple):
    store: FactStore
    rounds: int
    converged: bool


class _Regions:
    """Ruler regions of a window, addressed by bit position."""

    def __init__(self, points: List[Fraction]):
        self.points = points
        self.count = 2 * len(points) - 1
        self.full = (1 << self.count) - 1

    def interval(self, index: int) -> Interval:
        i, odd = divmod(index, 2)
        if not odd:
            return Interval.point(self.points[i])
        return Interval(self.points[i], self.points[i + 1], False, False)

    def sample(self, index: int) -> Fraction:
        i, odd = divmod(index, 2)
        if not odd:
            return self.points[i]
        return (self.points[i] + self.points[i + 1]) / 2

    def _start(self, t: Fraction, closed: bool) -> Tuple[int, bool]:
        # first region meeting [t, ... or (t, ...
        points = self.points
        if t < points[0]:
            return 0, True
        if t > points[-1]:
            return self.count, True
        i = bisect_left(points, t)
        if points[i] == t:
            return (2 * i if closed else 2 * i + 1), False
        return 2 * i - 1, False

    def _end(self, t: Fraction, closed: bool) -> Tuple[int, bool]:
        # last region meeting ..., t] or ..., t)
        points = self.points
        if t > points[-1]:
            return self.count - 1, True
        if t < points[0]:
            return -1, True
        i = bisect_left(points, t)
        if points[i] == t:
            return (2 * i if closed else 2 * i - 1), False
        return 2 * i - 1, False

    def hit(self, interval: Optional[Interval]) -> Tuple[int, bool]:
        """Bit mask of regions meeting ``interval`` and whether it leaves the window."""
        if interval is None:
            return 0, False
        start, left_out = self._start(interval.lo, interval.lo_closed)
        end, right_out = self._end(interval.hi, interval.hi_closed)
        outside = left_out or right_out or interval.lo < self.points[0] or interval.hi > self.points[-1]
        if start > end:
            return 0, outside
        return ((1 << (end + 1)) - 1) ^ ((1 << start) - 1), outside

    def of(self, intervals: IntervalSet) -> int:
        bits = 0
        for index in range(self.count):
            if intervals.contains(self.sample(index)):
                bits |= 1 << index
        return bits

    def to_set(self, bits: int) -> IntervalSet:
        return IntervalSet(self.interval(index) for index in range(self.count) if bits >> index & 1)

    def members(self, bits: int, descending: bool = False):
        indices = range(self.count - 1, -1, -1) if descending else range(self.count)
        return [index for index in indices if bits >> index & 1]


def _past(t: Fraction, window: Interval) -> Interval:
    return Interval(t - window.hi, t - window.lo, window.hi_closed, window.lo_closed)


def _future(t: Fraction, window: Interval) -> Interval:
    return Interval(t + window.lo, t + window.hi, window.lo_closed, window.hi_closed)


class _Evaluator:
    """Truth vectors of ground metric atoms over one fixed interpretation."""

    def __init__(self, regions: _Regions, truth: Dict[GroundAtom, int]):
        self.regions = regions
        self.truth = truth
        self._cache: Dict[MetricAtom, int] = {}

    def bits(self, atom: MetricAtom) -> int:
        if isinstance(atom, Relational):
            return self.truth.get(GroundAtom(atom.predicate, atom.terms), 0)
        cached = self._cache.get(atom)
        if cached is None:
            cached = 0
            for index in range(self.regions.count):
                if self._at(atom, self.regions.sample(index), index):
                    cached |= 1 << index
            self._cache[atom] = cached
        return cached

    def _at(self, atom: MetricAtom, t: Fraction, index: int) -> bool:
        if isinstance(atom, Relational):
            return bool(self.truth.get(GroundAtom(atom.predicate, atom.terms), 0) >> index & 1)
        if isinstance(atom, Top):
            return True
        if isinstance(atom, Bottom):
            return False
        if isinstance(atom, (Diamondminus, Diamondplus, Boxminus, Boxplus)):
            span = _past(t, atom.interval) if isinstance(atom, (Diamondminus, Boxminus)) else _future(t, atom.interval)
            mask, outside = self.regions.hit(span)
            operand = self.bits(atom.operand)
            if isinstance(atom, (Diamondminus, Diamondplus)):
                return bool(operand & mask)
            return not outside and operand & mask == mask
        if isinstance(atom, Since):
            return self._since(atom, t)
        if isinstance(atom, Until):
            return self._until(atom, t)
        raise EvaluationError(f"Unsupported metric atom: {atom!r}")

    def _covered(self, bits: int, interval: Optional[Interval]) -> bool:
        if interval is None:
            return True
        mask, outside = self.regions.hit(interval)
        return not outside and bits & mask == mask

    def _since(self, atom: Since, t: Fraction) -> bool:
        anchor = self.bits(atom.right)
        gap = self.bits(atom.left)
        mask, _ = self.regions.hit(_past(t, atom.interval))
        for k in self.regions.members(anchor & mask, descending=True):
            candidates = intersect(self.regions.interval(k), _past(t, atom.interval))
            if candidates is None:
                continue
            latest = candidates.hi
            if candidates.hi_closed:
                if self._covered(gap, make_interval(latest, t, False, False)):
                    return True
            elif gap >> k & 1 and self._covered(gap, make_interval(latest, t, True, False)):
                return True
        return False

    def _until(self, atom: Until, t: Fraction) -> bool:
        anchor = self.bits(atom.right)
        gap = self.bits(atom.left)
        mask, _ = self.regions.hit(_future(t, atom.interval))
        for k in self.regions.members(anchor & mask):
            candidates = intersect(self.regions.interval(k), _future(t, atom.interval))
            if candidates is None:
                continue
            earliest = candidates.lo
            if candidates.lo_closed:
                if self._covered(gap, make_interval(t, earliest, False, False)):
                    return True
            elif gap >> k & 1 and self._covered(gap, make_interval(t, earliest, False, True)):
                return True
        return False


def _active_domain(program: Program, data: FactStore) -> List[str]:
    constants: Set[str] = set(data.constants())
    for rule in program.rules:
        atoms = [rule.head_atom()] + [rel for atom in rule.body for rel in atom.relational_atoms()]
        for atom in atoms:
            constants.update(term for term in atom.terms if not is_variable(term))
    return sorted(constants)


def _widen(head: MetricAtom, region: Interval) -> Tuple[Relational, Interval]:
    span = region
    while isinstance(head, (Boxplus, Boxminus)):
        window = head.interval if isinstance(head, Boxplus) else head.interval.reflect()
        span = Interval(span.lo + window.lo, span.hi + window.hi,
                        span.lo_closed and window.lo_closed, span.hi_closed and window.hi_closed)
        head = head.operand
    return head, span


def pointwise_oracle(program: Program, data: FactStore, window: Interval, max_rounds: int = 200) -> OracleResult:
    """
    Naive T_Pi iteration checked pointwise on ruler regions of ``window``.

    Everything outside ``window`` is treated as false, so results near the
    window edges may be incomplete; compare on an inner window.

    Args:
        program: The rules
        data: The dataset
        window: Bounded evaluation window
        max_rounds: Round limit

    Returns:
        OracleResult with the store restricted to the window, the number of
        rounds run and whether a fixpoint was reached
    """
    ruler = Ruler(program.div, data.endpoints())
    points = sorted(set(ruler.points(window)) | {window.lo, window.hi})
    regions = _Regions(points)
    truth: Dict[GroundAtom, int] = {}
    for atom, intervals in data.items():
        bits = regions.of(intervals)
        if bits:
            truth[atom] = bits

    domain = _active_domain(program, data)
    full_mask = regions.full
    rounds = 0
    converged = False
    while rounds < max_rounds:
        rounds += 1
        evaluator = _Evaluator(regions, dict(truth))
        changed = False
        for rule in program.rules:
            variables = sorted(rule.variables())
            for values in itertools.product(domain, repeat=len(variables)):
                sigma = dict(zip(variables, values))
                body = full_mask
                for atom in rule.body:
                    body &= evaluator.bits(atom.substitute(sigma))
                    if not body:
                        break
                if not body:
                    continue
                head = rule.head.substitute(sigma)
                for index in regions.members(body):
                    target, span = _widen(head, regions.interval(index))
                    mask, _ = regions.hit(span)
                    key = GroundAtom(target.predicate, target.terms)
                    before = truth.get(key, 0)
                    after = before | mask
                    if after != before:
                        truth[key] = after
                        changed = True
        if not changed:
            converged = True
            break
    if not converged:
        logger.warning(f"Oracle stopped after {max_rounds} rounds without a fixpoint")

    store = FactStore()
    for atom, bits in truth.items():
        store.add_set(atom, regions.to_set(bits))
    return OracleResult(store, rounds, converged)


def oracle_fixpoint(program: Program, data: FactStore, window: Interval, margin: Optional[Fraction] = None,
                    max_rounds: int = 200, attempts: int = 6) -> OracleResult:
    """
    Oracle result on ``window`` that is stable under doubling the outer margin.

    The oracle runs on ``window`` widened by ``margin``; the margin doubles
    until two consecutive runs agree on ``window``.
    """
    if margin is None:
        margin = max(4 * program.depth, Fraction(1))
    previous: Optional[FactStore] = None
    result = None
    for _ in range(attempts):
        outer = window.expand(margin)
        result = pointwise_oracle(program, data, outer, max_rounds)
        inner = result.store.project(window)
        if previous is not None and inner == previous and result.converged:
            return OracleResult(inner, result.rounds, True)
        previous = inner
        margin *= 2
    logger.warning(f"Oracle window did not stabilise after {attempts} attempts")
    return OracleResult(previous, result.rounds, False)


__all__ = ['OracleResult', 'pointwise_oracle', 'oracle_fixpoint']
