"""Reasoning flows: materialisation, DRed updates, rematerialisation, entailment."""
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, NamedTuple, Optional, Tuple

from dredmtl.evaluation import DifferenceView, UnionView, deletion_consequences, derive_for, seminaive
from dredmtl.periodic import (Periods, PeriodicMaterialisation, PeriodicView, detect_saturation, pds,
                              periodic_minus, periodic_union, with_periods)
from dredmtl.store import FactStore
from dredmtl.syntax import Fact, Program, Ruler, is_variable
from dredmtl.temporal import Interval, hull_of, make_interval
from dredmtl.utils import DEFAULT_STAGE_CAP, BudgetExceededError

# largest A*B for which the saturation bound is still computed exactly
EXACT_BOUND_LIMIT = 256

OVERDELETE = 'overdelete'
REDERIVE = 'rederive'
INSERT = 'insert'
MATERIALISE = 'materialise'


@dataclass(frozen=True)
class SaturationBudget:
    """Round limit for one reasoning stage.

    ``k_max`` follows the saturation bound w = C + B*C*(2^A)^B, where A is the
    number of ground atoms, B the number of ruler intervals in a 2*depth
    window at the dataset's left edge and C the number of ruler points in a
    reference period. It is None when the bound is too large to matter.
    """

    atoms: int
    intervals: int
    period_points: int
    k_max: Optional[int]
    cap: int = DEFAULT_STAGE_CAP

    @property
    def limit(self) -> int:
        if self.k_max is None:
            return self.cap
        return min(self.k_max, self.cap)

    @classmethod
    def for_update(cls, program: Program, data: FactStore, reference: Optional[PeriodicMaterialisation] = None,
                   cap: int = DEFAULT_STAGE_CAP) -> 'SaturationBudget':
        constants = data.constants()
        for rule in program.rules:
            for atom in [rule.head_atom()] + [rel for body in rule.body for rel in body.relational_atoms()]:
                constants.update(term for term in atom.terms if not is_variable(term))
        arities = dict(program.arities())
        for atom in data.atoms():
            arities.setdefault(atom.predicate, len(atom.constants))
        atoms = sum(len(constants) ** arity for arity in arities.values())

        ruler = Ruler(program.div, data.endpoints())
        hull = data.hull()
        points = len(ruler.points(Interval(hull.lo, hull.lo + 2 * program.depth))) if hull is not None else 1
        intervals = max(1, 2 * points - 1)
        period_points = 1
        if reference is not None:
            for period in (reference.left, reference.right):
                if period is not None:
                    period_points = max(period_points, len(ruler.points(period)))

        k_max = None
        if atoms * intervals <= EXACT_BOUND_LIMIT:
            k_max = period_points + intervals * period_points * (2 ** atoms) ** intervals
        return cls(atoms, intervals, period_points, k_max, cap)

    def check(self, stage: str, rounds: int):
        """Raise BudgetExceededError once ``rounds`` passes the limit."""
        if rounds > self.limit:
            logging.getLogger('dredmtl.Engine').error(f"{stage}: exceeded {self.limit} rounds")
            raise BudgetExceededError(stage, rounds, self.limit)


@dataclass
class UpdateReport:
    """What one DRed update did, stage by stage."""

    overdeleted: FactStore = field(default_factory=FactStore)
    rederived: FactStore = field(default_factory=FactStore)
    inserted: FactStore = field(default_factory=FactStore)
    durations: Dict[str, float] = field(default_factory=dict)
    rounds: Dict[str, int] = field(default_factory=dict)
    periods: Dict[str, Optional[Periods]] = field(default_factory=dict)

    @property
    def D(self) -> int:
        return len(self.overdeleted)

    @property
    def R(self) -> int:
        return len(self.rederived)

    @property
    def A(self) -> int:
        return len(self.inserted)

    @property
    def total_ms(self) -> float:
        return sum(self.durations.values())

    def as_dict(self) -> Dict[str, object]:
        return {
            'overdelete_ms': round(self.durations.get(OVERDELETE, 0.0), 3),
            'rederive_ms': round(self.durations.get(REDERIVE, 0.0), 3),
            'insert_ms': round(self.durations.get(INSERT, 0.0), 3),
            'total_ms': round(self.total_ms, 3),
            'D': self.D,
            'R': self.R,
            'A': self.A,
            'rounds_D': self.rounds.get(OVERDELETE, 0),
            'rounds_R': self.rounds.get(REDERIVE, 0),
            'rounds_A': self.rounds.get(INSERT, 0),
        }


class Saturation(NamedTuple):
    materialisation: PeriodicMaterialisation
    rounds: int
    periods: Optional[Periods]


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000


def _restrict_to(store: FactStore, reference: PeriodicMaterialisation) -> FactStore:
    """The part of ``store`` that lies inside unfold(reference)."""
    result = FactStore()
    for atom, intervals in store.items():
        inside = intervals.intersection(reference.unfold_atom(atom, intervals.hull()))
        result.add_set(atom, inside)
    return result


def _outside_of(store: FactStore, view, extra: FactStore) -> FactStore:
    """The part of ``store`` in neither ``view`` nor ``extra``."""
    result = FactStore()
    for atom, intervals in store.items():
        remaining = intervals.difference(view.lookup(atom, intervals.hull())).difference(extra.get(atom))
        result.add_set(atom, remaining)
    return result


class Engine:
    """Materialises a program and keeps the result up to date under updates."""

    def __init__(self, program: Program, stage_cap: int = DEFAULT_STAGE_CAP, rederive_margin: int = 1):
        """Initialize the engine.

        Args:
            program: The rules to reason with
            stage_cap: Hard round limit per stage
            rederive_margin: Number of depth(Pi) paddings used when looking
                for one-step rederivations
        """
        self.program = program
        self.stage_cap = stage_cap
        self.rederive_margin = max(1, int(rederive_margin))
        self.logger = logging.getLogger('dredmtl.Engine')
        self.materialiser_logger = logging.getLogger('dredmtl.Materialiser')

    @classmethod
    def from_config(cls, program: Program, config) -> 'Engine':
        return cls(program, config.get_stage_cap(), config.get_rederive_margin())

    # materialisation -----------------------------------------------------

    def saturate(self, e: FactStore) -> Saturation:
        """Iterate T_Pi seminaively until a saturation check succeeds.

        Raises:
            BudgetExceededError: If no periods appear within the stage budget
        """
        if e.is_empty():
            return Saturation(PeriodicMaterialisation(FactStore()), 0, None)
        budget = SaturationBudget.for_update(self.program, e, cap=self.stage_cap)
        ruler = Ruler(self.program.div, e.endpoints())
        current = e.copy()
        delta = e
        rounds = 0
        while True:
            rounds += 1
            budget.check(MATERIALISE, rounds)
            fresh = seminaive(self.program, current, delta).difference(current)
            following = current.copy()
            following.update(fresh)
            self.materialiser_logger.debug(f"round {rounds}: {len(fresh)} new facts, {len(following)} in total")
            periods = detect_saturation(self.program, e, following, current, changes=fresh, ruler=ruler)
            if periods is not None:
                self.materialiser_logger.info(f"Saturated after {rounds} rounds "
                                              f"with periods {periods[0]} and {periods[1]}")
                return Saturation(with_periods(following, periods), rounds, periods)
            current, delta = following, fresh

    def materialise(self, e: FactStore) -> PeriodicMaterialisation:
        return self.saturate(e).materialisation

    def rematerialise(self, new_e: FactStore) -> PeriodicMaterialisation:
        return self.materialise(new_e)

    # DRed ------------------------------------------------------------------

    def update(self, e: FactStore, m: PeriodicMaterialisation, e_minus: FactStore,
               e_plus: FactStore) -> Tuple[PeriodicMaterialisation, FactStore, UpdateReport]:
        """
        Bring a materialisation of ``e`` up to date after removing ``e_minus``
        and adding ``e_plus``.

        Args:
            e: The dataset ``m`` was computed from
            m: A periodic materialisation of the program over ``e``
            e_minus: Facts to remove; only the parts present in ``e`` count
            e_plus: Facts to add

        Returns:
            The updated materialisation, the updated dataset and the report

        Raises:
            BudgetExceededError: If a stage runs past its budget
        """
        e_minus = e_minus.intersection(e).difference(e_plus)
        e_plus = e_plus.difference(e)
        report = UpdateReport()

        endpoints = e.endpoints() | e_minus.endpoints() | e_plus.endpoints()
        span = hull_of(Interval.point(point) for point in endpoints)
        new_e = e.difference(e_minus)
        new_e.update(e_plus)
        if span is None:
            return m, new_e, report
        ruler = Ruler(self.program.div, endpoints)
        budget = SaturationBudget.for_update(self.program, e.union(e_plus), m, self.stage_cap)
        self.logger.info(f"Update: removing {len(e_minus)} and adding {len(e_plus)} facts")

        start = time.perf_counter()
        m, deleted = self._overdelete(m, e_minus, span, ruler, budget, report)
        report.durations[OVERDELETE] = _elapsed_ms(start)

        start = time.perf_counter()
        m = self._rederive(m, deleted, e.difference(e_minus), span, ruler, budget, report)
        report.durations[REDERIVE] = _elapsed_ms(start)

        start = time.perf_counter()
        m = self._insert(m, e_plus, span, ruler, budget, report)
        report.durations[INSERT] = _elapsed_ms(start)

        self.logger.info(f"Update done: D={report.D} R={report.R} A={report.A} "
                         f"in {report.total_ms:.1f} ms")
        return m, new_e, report

    def _overdelete(self, m: PeriodicMaterialisation, e_minus: FactStore, span: Interval, ruler: Ruler,
                    budget: SaturationBudget, report: UpdateReport):
        overdeleted = FactStore()
        pending = e_minus
        view = PeriodicView(m)
        rounds = 0
        while True:
            rounds += 1
            budget.check(OVERDELETE, rounds)
            delta = pending.difference(overdeleted)
            periods = pds(self.program, span, m, overdeleted, delta, ruler)
            if periods is not None:
                break
            pending = deletion_consequences(self.program, DifferenceView(view, overdeleted), delta)
            overdeleted.update(delta)
            self.logger.debug(f"overdelete round {rounds}: {len(delta)} new, {len(overdeleted)} in total")
        report.overdeleted = overdeleted
        report.rounds[OVERDELETE] = rounds
        report.periods[OVERDELETE] = periods
        deleted = with_periods(overdeleted, periods)
        self.logger.info(f"Overdeleted {len(overdeleted)} facts in {rounds} rounds, periods {periods}")
        return periodic_minus(m, deleted), deleted

    def _rederivable(self, m: PeriodicMaterialisation, deleted: PeriodicMaterialisation, survivors: FactStore,
                     strip: Interval) -> FactStore:
        # one-step rederivations of overdeleted facts inside `strip`
        padding = self.rederive_margin * self.program.depth
        body_window = strip.expand(padding)
        view = PeriodicView(m)
        found = FactStore()
        for atom in deleted.atoms():
            lost = deleted.unfold_atom(atom, strip)
            if not lost:
                continue
            derived = derive_for(self.program, view, atom, body_window).union(survivors.get(atom))
            found.add_set(atom, lost.intersection(derived))
        return found

    def _rederive(self, m: PeriodicMaterialisation, deleted: PeriodicMaterialisation, survivors: FactStore,
                  span: Interval, ruler: Ruler, budget: SaturationBudget, report: UpdateReport):
        rederived = FactStore()
        pending = FactStore()
        if deleted.is_empty():
            report.rounds[REDERIVE] = 0
            report.periods[REDERIVE] = None
            return m
        view = PeriodicView(m)
        left_edge = m.left.hi if m.left is not None else span.lo
        right_edge = m.right.lo if m.right is not None else span.hi
        left_step = max(2 * self.program.depth, m.left.length if m.left is not None else Fraction(0))
        right_step = max(2 * self.program.depth, m.right.length if m.right is not None else Fraction(0))
        left_step = left_step or self.program.div
        right_step = right_step or self.program.div
        explored: Optional[Interval] = None
        k = 1
        while True:
            budget.check(REDERIVE, k)
            window = Interval(min(left_edge - k * left_step, span.lo), max(right_edge + k * right_step, span.hi))
            strips = [window] if explored is None else [
                strip for strip in (make_interval(window.lo, explored.lo, True, False),
                                    make_interval(explored.hi, window.hi, False, True))
                if strip is not None]
            for strip in strips:
                pending.update(self._rederivable(m, deleted, survivors, strip))
            explored = window
            delta = pending.difference(rederived)
            periods = pds(self.program, span, m, rederived, delta, ruler, explored=explored)
            if periods is not None:
                break
            rederived.update(delta)
            k += 1
            propagated = seminaive(self.program, UnionView(view, rederived), delta)
            pending = pending.union(_restrict_to(propagated, deleted))
            self.logger.debug(f"rederive round {k - 1}: {len(delta)} new, {len(rederived)} in total")
        report.rederived = rederived
        report.rounds[REDERIVE] = k
        report.periods[REDERIVE] = periods
        self.logger.info(f"Rederived {len(rederived)} facts in {k} rounds, periods {periods}")
        return periodic_union(m, with_periods(rederived, periods))

    def _insert(self, m: PeriodicMaterialisation, e_plus: FactStore, span: Interval, ruler: Ruler,
                budget: SaturationBudget, report: UpdateReport):
        inserted = FactStore()
        pending = e_plus
        view = PeriodicView(m)
        rounds = 0
        while True:
            rounds += 1
            budget.check(INSERT, rounds)
            delta = _outside_of(pending, view, inserted)
            periods = pds(self.program, span, m, inserted, delta, ruler)
            if periods is not None:
                break
            inserted.update(delta)
            pending = seminaive(self.program, UnionView(view, inserted), delta)
            self.logger.debug(f"insert round {rounds}: {len(delta)} new, {len(inserted)} in total")
        report.inserted = inserted
        report.rounds[INSERT] = rounds
        report.periods[INSERT] = periods
        self.logger.info(f"Inserted {len(inserted)} facts in {rounds} rounds, periods {periods}")
        return periodic_union(m, with_periods(inserted, periods))


def materialise(program: Program, e: FactStore, stage_cap: int = DEFAULT_STAGE_CAP) -> PeriodicMaterialisation:
    """Periodic materialisation of ``program`` over ``e``."""
    return Engine(program, stage_cap).materialise(e)


def dred_update(program: Program, e: FactStore, m: PeriodicMaterialisation, e_minus: FactStore,
                e_plus: FactStore,
                stage_cap: int = DEFAULT_STAGE_CAP) -> Tuple[PeriodicMaterialisation, FactStore, UpdateReport]:
    return Engine(program, stage_cap).update(e, m, e_minus, e_plus)


def rematerialise(program: Program, new_e: FactStore, stage_cap: int = DEFAULT_STAGE_CAP) -> PeriodicMaterialisation:
    return Engine(program, stage_cap).rematerialise(new_e)


def entails(m: PeriodicMaterialisation, fact: Fact) -> bool:
    """True iff the unfolding of ``m`` holds the fact's atom over its whole interval."""
    return m.entails(fact)


__all__ = [
    'Engine', 'SaturationBudget', 'UpdateReport', 'Saturation', 'materialise', 'dred_update',
    'rematerialise', 'entails', 'OVERDELETE', 'REDERIVE', 'INSERT',
]
