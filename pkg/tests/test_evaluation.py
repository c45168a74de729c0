"""Tests for metric-atom evaluation, grounding and the seminaive operator."""
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dredmtl.evaluation import (DifferenceView, UnionView, apply_head, derive_for, eval_atom, ground_rule_matches,
                                immediate_consequence, seminaive)
from dredmtl.store import FactStore
from dredmtl.syntax import Fact, GroundAtom, Ruler, parse_atom, parse_dataset, parse_program
from dredmtl.temporal import Interval, IntervalSet
from dredmtl.utils import EvaluationError


def store(text: str) -> FactStore:
    return FactStore(parse_dataset(text))


def closed(lo, hi):
    return Interval.closed(lo, hi)


def point(t):
    return Interval.point(t)


class TestEvalAtom:
    """Test the closed forms per metric constructor."""

    def test_diamondminus(self):
        assert eval_atom(parse_atom('DIAMONDMINUS[0,2] L'), store('L@[0,1]')) == IntervalSet.of(closed(0, 3))

    def test_diamondplus(self):
        assert eval_atom(parse_atom('DIAMONDPLUS[1,2] R'), store('R@[0,1]')) == IntervalSet.of(closed(-2, 0))

    def test_boxminus_window_fits(self):
        assert eval_atom(parse_atom('BOXMINUS[9,10] R'), store('R@[0,1]')) == IntervalSet.of(point(10))

    def test_boxminus_window_too_long(self):
        assert eval_atom(parse_atom('BOXMINUS[9,10] R'), store('R@[0,1/2]')) == IntervalSet()

    def test_boxminus_open_support(self):
        # [t-10, t-9] must fit inside (0,1], which no t achieves
        assert eval_atom(parse_atom('BOXMINUS[9,10] R'), store('R@(0,1]')) == IntervalSet()

    def test_boxplus(self):
        assert eval_atom(parse_atom('BOXPLUS[1,2] R'), store('R@[0,5]')) == IntervalSet.of(closed(-1, 3))

    def test_since_punctual_window(self):
        result = eval_atom(parse_atom('B SINCE[1,1] A'), store('A@0\nB@(0,5]'))
        assert result == IntervalSet.of(point(1))

    def test_since_window_with_zero(self):
        result = eval_atom(parse_atom('B SINCE[0,2] A'), store('A@[0,1]\nB@[0,10]'))
        assert result == IntervalSet.of(closed(0, 3))

    def test_since_gap_breaks_chain(self):
        # B is missing on (2,3), so A@0 cannot reach t=4
        result = eval_atom(parse_atom('B SINCE[4,4] A'), store('A@0\nB@[0,2]\nB@[3,6]'))
        assert result == IntervalSet()

    def test_until(self):
        result = eval_atom(parse_atom('A UNTIL[1,1] B'), store('B@5\nA@[0,5)'))
        assert result == IntervalSet.of(point(4))

    def test_bottom(self):
        assert eval_atom(parse_atom('BOTTOM'), store('R@1')) == IntervalSet()

    def test_top_needs_universe(self):
        with pytest.raises(EvaluationError):
            eval_atom(parse_atom('DIAMONDMINUS[0,1] TOP'), store('R@1'))

    def test_top_with_universe(self):
        result = eval_atom(parse_atom('DIAMONDMINUS[0,1] TOP'), store('R@1'), universe=closed(0, 5))
        assert result == IntervalSet.of(closed(0, 6))

    def test_non_ground_rejected(self):
        with pytest.raises(EvaluationError):
            eval_atom(parse_atom('R(?x)'), store('R(a)@1'))

    def test_nested_operators(self):
        atom = parse_atom('DIAMONDMINUS[1,1] BOXMINUS[0,1] R')
        # BOXMINUS[0,1] R holds on [1,4]; a step of one moves it to [2,5]
        assert eval_atom(atom, store('R@[0,4]')) == IntervalSet.of(closed(2, 5))


class TestGrounding:
    """Test rule grounding and head application."""

    def test_rule1_matches(self, rule1):
        data = store('P(s1,x1)@[0,5]\nL(u1,x1)@1\nP(s1,y1)@[0,5]')
        matches = {frozenset(sigma.items()): times for sigma, times in ground_rule_matches(rule1.rules[0], data)}
        key = frozenset({'?u': 'u1', '?x': 'x1', '?s': 's1', '?y': 'y1'}.items())
        assert matches[key] == IntervalSet.of(closed(1, 3))
        # ?y may also bind to x1 through the second P atom
        assert len(matches) == 2

    def test_empty_store(self, rule1):
        assert list(ground_rule_matches(rule1.rules[0], FactStore())) == []

    def test_example1_match(self, example1, example1_data):
        matches = list(ground_rule_matches(example1.rules[0], example1_data))
        assert matches == [({'?x': 'a1'}, IntervalSet.of(point(10)))]

    def test_apply_boxplus_head(self):
        facts = apply_head(parse_atom('BOXPLUS[0,1] R(a1)'), IntervalSet.of(point(10)))
        assert facts == [Fact('R', ('a1',), closed(10, 11))]

    def test_apply_bare_head(self):
        facts = apply_head(parse_atom('R(a)'), IntervalSet.of(closed(1, 3)))
        assert facts == [Fact('R', ('a',), closed(1, 3))]

    def test_apply_boxminus_head(self):
        facts = apply_head(parse_atom('BOXMINUS[2,2] R(a)'), IntervalSet.of(closed(5, 6)))
        assert facts == [Fact('R', ('a',), closed(3, 4))]


class TestImmediateConsequence:
    """Test one application of T_Pi."""

    def test_example1_two_constants(self, example1):
        result = immediate_consequence(example1, store('R(a1)@[0,1]\nR(a2)@[0,1]'))
        assert result == store('R(a1)@[0,1]\nR(a1)@[10,11]\nR(a2)@[0,1]\nR(a2)@[10,11]')

    def test_fixpoint_unchanged(self, rule1):
        data = store('P(s1,x1)@[0,5]\nL(u1,x1)@1\nP(s1,y1)@[0,5]')
        once = immediate_consequence(rule1, data)
        assert immediate_consequence(rule1, once) == once

    def test_empty_store(self, example1):
        assert immediate_consequence(example1, FactStore()) == FactStore()


class TestSeminaive:
    """Test the seminaive operator."""

    def test_all_new(self, example1, example1_data):
        assert seminaive(example1, example1_data, example1_data) == store('R(a1)@[10,11]')

    def test_empty_delta(self, example1, example1_data):
        assert seminaive(example1, example1_data, FactStore()) == FactStore()

    def test_no_rederivation_of_old_facts(self, example1):
        full = store('R(a1)@[0,1]\nR(a1)@[10,11]')
        assert seminaive(example1, full, store('R(a1)@[10,11]')) == store('R(a1)@[20,21]')

    def test_over_views(self, example1):
        base = store('R(a1)@[0,1]\nR(a1)@[10,11]')
        extra = store('R(a1)@[20,21]')
        assert seminaive(example1, UnionView(base, extra), extra) == store('R(a1)@[30,31]')

    def test_difference_view_blocks_removed(self, example1):
        full = store('R(a1)@[0,1]\nR(a2)@[0,1]')
        removed = store('R(a2)@[0,1]')
        view = DifferenceView(full, removed)
        assert view.lookup(GroundAtom('R', ('a2',)), closed(-5, 5)) == IntervalSet()
        assert seminaive(example1, view, store('R(a1)@[0,1]')) == store('R(a1)@[10,11]')


class TestDeriveFor:
    """Test backward evaluation from a head atom."""

    def test_example1(self, example1):
        full = store('R(a1)@[0,1]\nR(a2)@[0,1]')
        derived = derive_for(example1, full, GroundAtom('R', ('a1',)), closed(-15, 15))
        assert derived == IntervalSet.of(closed(10, 11))

    def test_unknown_head(self, example1):
        assert derive_for(example1, store('R(a1)@[0,1]'), GroundAtom('S', ()), closed(0, 20)) == IntervalSet()


PROGRAMS = [
    'BOXPLUS[0,1] A(?x) :- BOXMINUS[2,3] A(?x)',
    'B(?x) :- A(?x), DIAMONDMINUS[0,2] B(?x)',
    'A(?y) :- B(?x) SINCE[1,2] C(?x,?y)',
    'C(?x,?x) :- DIAMONDPLUS[0,1] A(?x)\nB(?x) :- A(?x) UNTIL(0,2] B(?x)',
    'BOXMINUS[0,1] B(?x) :- A(?x), C(?x,?y)',
]


@st.composite
def datasets(draw):
    facts = []
    for _ in range(draw(st.integers(0, 6))):
        lo = draw(st.integers(0, 8))
        hi = draw(st.integers(lo, lo + 3))
        predicate = draw(st.sampled_from(['A', 'B', 'C']))
        arity = 2 if predicate == 'C' else 1
        constants = tuple(draw(st.sampled_from(['a', 'b'])) for _ in range(arity))
        facts.append(Fact(predicate, constants, Interval.closed(lo, hi) if lo < hi else Interval.point(lo)))
    return FactStore(facts)


class TestEvaluationProperties:
    """Algebraic properties of T_Pi and the seminaive operator."""

    @given(st.sampled_from(PROGRAMS), datasets())
    def test_seminaive_generalises_naive(self, text, data):
        program = parse_program(text)
        assert immediate_consequence(program, data) == data.union(seminaive(program, data, data))

    @given(st.sampled_from(PROGRAMS), datasets(), datasets())
    def test_monotone(self, text, small, extra):
        program = parse_program(text)
        large = small.union(extra)
        assert immediate_consequence(program, large).contains_store(immediate_consequence(program, small))

    @given(st.sampled_from(PROGRAMS), datasets())
    def test_derived_endpoints_on_ruler(self, text, data):
        program = parse_program(text)
        ruler = Ruler(program.div, data.endpoints())
        for point_ in immediate_consequence(program, data).endpoints():
            assert ruler.is_on(point_)
