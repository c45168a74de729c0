"""Evaluation of metric atoms and rules over fact stores and lazy views.

Everything here works on intervals symbolically. A *source* is anything with
``lookup(atom, window)`` and ``atoms(predicate)``: a ``FactStore``, a
``PeriodicView`` over a periodic materialisation, or the composite
``UnionView``/``DifferenceView`` used by the DRed stages.
"""
import logging
from fractions import Fraction
from functools import lru_cache
from typing import FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Protocol, Set, Tuple

from dredmtl.store import AtomSet, FactStore
from dredmtl.syntax import (Bottom, Boxminus, Boxplus, Diamondminus, Diamondplus, Fact, GroundAtom,
                            MetricAtom, Program, Relational, Rule, Since, Substitution, Top, Until)
from dredmtl.temporal import EMPTY, Interval, IntervalSet, intersect, make_interval
from dredmtl.utils import EvaluationError

logger = logging.getLogger('dredmtl.evaluation')


class Interpretation(Protocol):
    """Read access to a (possibly infinite) interpretation."""

    def lookup(self, atom: GroundAtom, window: Optional[Interval] = None) -> IntervalSet:
        ...

    def atoms(self, predicate: str) -> Iterable[GroundAtom]:
        ...


class UnionView:
    """``base`` together with the facts of ``extra``, never materialised."""

    def __init__(self, base: Interpretation, extra: FactStore):
        self.base = base
        self.extra = extra

    def lookup(self, atom: GroundAtom, window: Optional[Interval] = None) -> IntervalSet:
        return self.base.lookup(atom, window).union(self.extra.lookup(atom, window))

    def atoms(self, predicate: str) -> Iterable[GroundAtom]:
        base = self.base.atoms(predicate)
        fresh = {atom for atom in self.extra.atoms(predicate) if atom not in base}
        return AtomSet(base, fresh) if fresh else base


class DifferenceView:
    """``base`` with the time points of ``removed`` taken out."""

    def __init__(self, base: Interpretation, removed: FactStore):
        self.base = base
        self.removed = removed

    def lookup(self, atom: GroundAtom, window: Optional[Interval] = None) -> IntervalSet:
        present = self.base.lookup(atom, window)
        if not present:
            return present
        return present.difference(self.removed.lookup(atom, window))

    def atoms(self, predicate: str) -> Iterable[GroundAtom]:
        # may over-approximate; lookups of fully removed atoms come back empty
        return self.base.atoms(predicate)


# ---------------------------------------------------------------------------
# Metric atoms
# ---------------------------------------------------------------------------

def _box_past(support: IntervalSet, window: Interval) -> IntervalSet:
    # t such that {t1 | t - t1 in window} fits inside one maximal interval
    pieces = []
    for rho in support:
        piece = make_interval(rho.lo + window.hi, rho.hi + window.lo,
                              rho.lo_closed or not window.hi_closed,
                              rho.hi_closed or not window.lo_closed)
        if piece is not None:
            pieces.append(piece)
    return IntervalSet(pieces)


def _box_future(support: IntervalSet, window: Interval) -> IntervalSet:
    pieces = []
    for rho in support:
        piece = make_interval(rho.lo - window.lo, rho.hi - window.hi,
                              rho.lo_closed or not window.lo_closed,
                              rho.hi_closed or not window.hi_closed)
        if piece is not None:
            pieces.append(piece)
    return IntervalSet(pieces)


def _without_zero(window: Interval) -> Optional[Interval]:
    if window.lo == 0 and window.lo_closed:
        return make_interval(window.lo, window.hi, False, window.hi_closed)
    return window


def _since(gap: IntervalSet, window: Interval, anchor: IntervalSet) -> IntervalSet:
    """Points t with an anchor point t1, t - t1 in window, and (t1, t) inside the gap set."""
    pieces: List[Interval] = []
    positive = _without_zero(window)
    zero_allowed = window.contains(Fraction(0))
    for alpha in anchor:
        if zero_allowed:
            pieces.append(alpha)
        if positive is None:
            continue
        for beta in gap:
            if beta.lo > alpha.hi:
                break
            if beta.hi < alpha.lo:
                continue
            common = intersect(alpha, beta.closure())
            if common is None:
                continue
            hi = common.hi + positive.hi
            hi_closed = common.hi_closed and positive.hi_closed
            if hi > beta.hi:
                hi, hi_closed = beta.hi, True
            piece = make_interval(common.lo + positive.lo, hi,
                                  common.lo_closed and positive.lo_closed, hi_closed)
            if piece is not None:
                pieces.append(piece)
    return IntervalSet(pieces)


def _until(gap: IntervalSet, window: Interval, anchor: IntervalSet) -> IntervalSet:
    """Mirror image of ``_since``: the anchor lies in the future."""
    pieces: List[Interval] = []
    positive = _without_zero(window)
    zero_allowed = window.contains(Fraction(0))
    for alpha in anchor:
        if zero_allowed:
            pieces.append(alpha)
        if positive is None:
            continue
        for beta in gap:
            if beta.lo > alpha.hi:
                break
            if beta.hi < alpha.lo:
                continue
            common = intersect(alpha, beta.closure())
            if common is None:
                continue
            lo = common.lo - positive.hi
            lo_closed = common.lo_closed and positive.hi_closed
            if lo < beta.lo:
                lo, lo_closed = beta.lo, True
            piece = make_interval(lo, common.hi - positive.lo,
                                  lo_closed, common.hi_closed and positive.lo_closed)
            if piece is not None:
                pieces.append(piece)
    return IntervalSet(pieces)


def _eval(atom: MetricAtom, source: Interpretation, universe: Optional[Interval]) -> IntervalSet:
    if isinstance(atom, Relational):
        return source.lookup(GroundAtom(atom.predicate, atom.terms), universe)
    if isinstance(atom, Top):
        if universe is None:
            raise EvaluationError("TOP needs a bounded evaluation window")
        return IntervalSet.of(universe)
    if isinstance(atom, Bottom):
        return EMPTY
    if isinstance(atom, Diamondminus):
        return _eval(atom.operand, source, universe).minkowski_sum(atom.interval)
    if isinstance(atom, Diamondplus):
        return _eval(atom.operand, source, universe).minkowski_sum(atom.interval.reflect())
    if isinstance(atom, Boxminus):
        return _box_past(_eval(atom.operand, source, universe), atom.interval)
    if isinstance(atom, Boxplus):
        return _box_future(_eval(atom.operand, source, universe), atom.interval)
    if isinstance(atom, Since):
        anchor = _eval(atom.right, source, universe)
        if not anchor:
            return EMPTY
        return _since(_eval(atom.left, source, universe), atom.interval, anchor)
    if isinstance(atom, Until):
        anchor = _eval(atom.right, source, universe)
        if not anchor:
            return EMPTY
        return _until(_eval(atom.left, source, universe), atom.interval, anchor)
    raise EvaluationError(f"Unsupported metric atom: {atom!r}")


def eval_atom(atom: MetricAtom, source: Interpretation, universe: Optional[Interval] = None) -> IntervalSet:
    """
    Compute the time points at which a ground metric atom holds.

    Args:
        atom: A ground metric atom
        source: The interpretation to evaluate over
        universe: Bounded window the evaluation is confined to. TOP denotes
            this window and relational lookups are cut to it, so the result
            is exact at points whose reach lies inside the window.

    Returns:
        A coalesced IntervalSet

    Raises:
        EvaluationError: If the atom is not ground, or mentions TOP and no
            universe is given
    """
    if not atom.is_ground():
        raise EvaluationError(f"Cannot evaluate non-ground atom {atom}")
    return _eval(atom, source, universe)


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

class _RulePlan(NamedTuple):
    body: Tuple[MetricAtom, ...]
    required: Tuple[Relational, ...]
    relational: Tuple[Relational, ...]
    reach: Fraction


@lru_cache(maxsize=None)
def _plan(rule: Rule) -> _RulePlan:
    # bare relational atoms first so empty bodies are detected early
    body = tuple(sorted(rule.body, key=lambda atom: not isinstance(atom, Relational)))
    required = tuple(dict.fromkeys(rule.required_atoms()))
    relational = tuple(dict.fromkeys(rel for atom in rule.body for rel in atom.relational_atoms()))
    reach = max((atom.reach() for atom in rule.body), default=Fraction(0))
    return _RulePlan(body, required, relational, reach)


def body_reach(rule: Rule) -> Fraction:
    return _plan(rule).reach


def _join(atoms: Tuple[Relational, ...], source: Interpretation, sigma: Substitution) -> Iterator[Substitution]:
    if not atoms:
        yield sigma
        return
    first, rest = atoms[0], atoms[1:]
    if first.variables() <= sigma.keys():
        yield from _join(rest, source, sigma)
        return
    for candidate in source.atoms(first.predicate):
        extended = first.match(candidate, sigma)
        if extended is not None:
            yield from _join(rest, source, extended)


def substitutions(rule: Rule, source: Interpretation, seeds: Optional[FactStore] = None,
                  initial: Optional[Substitution] = None) -> Iterator[Substitution]:
    """
    Enumerate the substitutions of a rule, each exactly once.

    With ``seeds``, only substitutions that send some body relational atom to
    an atom of ``seeds`` are produced. ``initial`` pre-binds variables (used to
    evaluate rules backwards from a head atom).
    """
    plan = _plan(rule)
    start = dict(initial or {})
    if seeds is None:
        starts: Iterable[Substitution] = [start]
    else:
        starts = (sigma
                  for atom in plan.relational
                  for candidate in seeds.atoms(atom.predicate)
                  for sigma in [atom.match(candidate, start)]
                  if sigma is not None)
    seen: Set[FrozenSet[Tuple[str, str]]] = set()
    for seed in starts:
        for sigma in _join(plan.required, source, seed):
            key = frozenset(sigma.items())
            if key not in seen:
                seen.add(key)
                yield sigma


def body_times(rule: Rule, sigma: Substitution, source: Interpretation,
               universe: Optional[Interval] = None) -> IntervalSet:
    """Time points where every body atom of ``rule``·``sigma`` holds."""
    times: Optional[IntervalSet] = None
    for atom in _plan(rule).body:
        current = _eval(atom.substitute(sigma), source, universe)
        times = current if times is None else times.intersection(current)
        if not times:
            return EMPTY
    return times if times is not None else EMPTY


def _default_universe(source: Interpretation, reach: Fraction) -> Tuple[Optional[Interval], Optional[Interval]]:
    # a body holds only within reach of some fact, so a plain store needs no more
    if isinstance(source, FactStore):
        hull = source.hull()
        if hull is not None:
            return hull.expand(2 * reach), hull.expand(reach)
    return None, None


def ground_rule_matches(rule: Rule, source: Interpretation, universe: Optional[Interval] = None,
                        seeds: Optional[FactStore] = None) -> Iterator[Tuple[Substitution, IntervalSet]]:
    """
    Yield every substitution with a nonempty body, paired with its body times.

    Over a plain FactStore with no universe, the window is derived from the
    store's hull so results are exact everywhere.
    """
    inner = None
    if universe is None:
        universe, inner = _default_universe(source, _plan(rule).reach)
    for sigma in substitutions(rule, source, seeds=seeds):
        times = body_times(rule, sigma, source, universe)
        if inner is not None and times:
            times = times.restrict(inner)
        if times:
            yield sigma, times


def head_times(head: MetricAtom, times: IntervalSet) -> Tuple[GroundAtom, IntervalSet]:
    """Push body times through nested BOXPLUS/BOXMINUS head operators."""
    while isinstance(head, (Boxplus, Boxminus)):
        if isinstance(head, Boxplus):
            times = times.minkowski_sum(head.interval)
        else:
            times = times.minkowski_sum(head.interval.reflect())
        head = head.operand
    if not isinstance(head, Relational) or not head.is_ground():
        raise EvaluationError(f"Head is not a ground relational atom under boxes: {head}")
    return GroundAtom(head.predicate, head.terms), times


def apply_head(head: MetricAtom, times: IntervalSet) -> List[Fact]:
    """
    Facts making a ground head true at every point of ``times``.

    Examples:
        BOXPLUS[0,1] R(a1) at {[10,10]} gives R(a1)@[10,11].
    """
    atom, derived = head_times(head, times)
    return [Fact(atom.predicate, atom.constants, interval) for interval in derived]


def derive(program: Program, source: Interpretation, universe: Optional[Interval] = None) -> FactStore:
    """Facts derived by one application of every rule, without the input."""
    result = FactStore()
    for rule in program.rules:
        for sigma, times in ground_rule_matches(rule, source, universe):
            atom, derived = head_times(rule.head.substitute(sigma), times)
            result.add_set(atom, derived)
    return result


def immediate_consequence(program: Program, store: FactStore) -> FactStore:
    """One application of T_Pi: the store plus everything one round derives."""
    result = store.copy()
    result.update(derive(program, store))
    return result


def _seed_hull(rule: Rule, sigma: Substitution, delta: FactStore) -> Optional[Interval]:
    lo = hi = None
    for atom in _plan(rule).relational:
        ground = atom.substitute(sigma)
        intervals = delta.get(GroundAtom(ground.predicate, ground.terms))
        if not intervals:
            continue
        first, last = intervals.intervals[0], intervals.intervals[-1]
        if lo is None or first.lo < lo:
            lo = first.lo
        if hi is None or last.hi > hi:
            hi = last.hi
    if lo is None:
        return None
    return Interval(lo, hi)


def seminaive(program: Program, full: Interpretation, delta: FactStore) -> FactStore:
    """
    Facts whose body holds in ``full`` but not once ``delta`` is taken out.

    Every ground rule is instantiated from an atom of ``delta``. Its body is
    evaluated only near that atom's delta content: a change further away than
    the body's reach cannot make the body newly true.

    Args:
        program: The rules to apply
        full: The interpretation, with ``delta`` already included
        delta: The new facts

    Returns:
        A coalesced FactStore of derived facts
    """
    result = FactStore()
    if delta.is_empty():
        return result
    without = DifferenceView(full, delta)
    instances = 0
    for rule in program.rules:
        reach = _plan(rule).reach
        for sigma in substitutions(rule, full, seeds=delta):
            hull = _seed_hull(rule, sigma, delta)
            if hull is None:
                continue
            universe = hull.expand(2 * reach)
            inner = hull.expand(reach)
            now = body_times(rule, sigma, full, universe).restrict(inner)
            if not now:
                continue
            before = body_times(rule, sigma, without, universe).restrict(inner)
            fresh = now.difference(before)
            if fresh:
                instances += 1
                atom, derived = head_times(rule.head.substitute(sigma), fresh)
                result.add_set(atom, derived)
    logger.debug(f"seminaive: {len(delta)} delta facts fired {instances} ground rules")
    return result


def _touched(atom: MetricAtom, source: Interpretation, delta: FactStore,
             universe: Optional[Interval]) -> IntervalSet:
    # points where `atom` holds in `source` through a witness that may use a delta fact;
    # over-approximates, never under-approximates
    if isinstance(atom, Relational):
        return delta.lookup(GroundAtom(atom.predicate, atom.terms), universe)
    if isinstance(atom, (Top, Bottom)):
        return EMPTY
    if isinstance(atom, Diamondminus):
        return _touched(atom.operand, source, delta, universe).minkowski_sum(atom.interval)
    if isinstance(atom, Diamondplus):
        return _touched(atom.operand, source, delta, universe).minkowski_sum(atom.interval.reflect())
    if isinstance(atom, (Boxminus, Boxplus)):
        inner = _touched(atom.operand, source, delta, universe)
        if not inner:
            return EMPTY
        window = atom.interval if isinstance(atom, Boxminus) else atom.interval.reflect()
        return _eval(atom, source, universe).intersection(inner.minkowski_sum(window))
    if isinstance(atom, (Since, Until)):
        anchor = _touched(atom.right, source, delta, universe)
        gap = _eval(atom.left, source, universe)
        combine = _since if isinstance(atom, Since) else _until
        result = combine(gap, atom.interval, anchor) if anchor else EMPTY
        touched_gap = _touched(atom.left, source, delta, universe)
        reach = make_interval(Fraction(0), atom.interval.hi, False, True)
        if touched_gap and reach is not None:
            if isinstance(atom, Until):
                reach = reach.reflect()
            near = touched_gap.minkowski_sum(reach)
            result = result.union(_eval(atom, source, universe).intersection(near))
        return result
    raise EvaluationError(f"Unsupported metric atom: {atom!r}")


def deletion_consequences(program: Program, full: Interpretation, delta: FactStore) -> FactStore:
    """
    Facts with some derivation in ``full`` that uses a fact of ``delta``.

    Each body atom is evaluated once with its relational atoms restricted to
    ``delta`` while the remaining atoms range over ``full``. A fact whose body
    still holds without ``delta`` is returned too when one of its derivations
    goes through ``delta``: such facts may support themselves through their
    own earlier points and must be rederived rather than kept.

    Args:
        program: The rules to apply
        full: The interpretation the deletion starts from, ``delta`` included
        delta: The facts being deleted in this round

    Returns:
        A coalesced FactStore of facts to overdelete
    """
    result = FactStore()
    if delta.is_empty():
        return result
    instances = 0
    for rule in program.rules:
        plan = _plan(rule)
        for sigma in substitutions(rule, full, seeds=delta):
            hull = _seed_hull(rule, sigma, delta)
            if hull is None:
                continue
            universe = hull.expand(2 * plan.reach)
            inner = hull.expand(plan.reach)
            now = body_times(rule, sigma, full, universe).restrict(inner)
            if not now:
                continue
            touched = EMPTY
            for atom in plan.body:
                touched = touched.union(_touched(atom.substitute(sigma), full, delta, universe))
            lost = now.intersection(touched)
            if lost:
                instances += 1
                atom, derived = head_times(rule.head.substitute(sigma), lost)
                result.add_set(atom, derived)
    logger.debug(f"deletion: {len(delta)} delta facts reached {instances} ground rules")
    return result


def derive_for(program: Program, source: Interpretation, target: GroundAtom, window: Interval) -> IntervalSet:
    """
    Evaluate rules backwards from one head atom.

    Returns the time points of ``target`` derived in one step from bodies
    holding inside ``window``. Callers pad ``window`` by the program depth
    around the region they care about.
    """
    derived = EMPTY
    for rule in program.rules:
        head = rule.head_atom()
        sigma = head.match(target, {})
        if sigma is None:
            continue
        plan = _plan(rule)
        universe = window.expand(plan.reach)
        for complete in substitutions(rule, source, initial=sigma):
            times = body_times(rule, complete, source, universe).restrict(window)
            if times:
                _, produced = head_times(rule.head.substitute(complete), times)
                derived = derived.union(produced)
    return derived


__all__ = [
    'Interpretation', 'UnionView', 'DifferenceView', 'eval_atom', 'substitutions', 'body_times',
    'ground_rule_matches', 'head_times', 'apply_head', 'derive', 'immediate_consequence',
    'seminaive', 'deletion_consequences', 'derive_for', 'body_reach',
]
