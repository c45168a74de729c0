"""End-to-end tests: incremental updates against rematerialisation and the oracle."""
from fractions import Fraction
from pathlib import Path

import pytest
from click.testing import CliRunner
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from dredmtl import config as config_module
from dredmtl.bench import StatsRecord, collect, example1_dataset, example1_program
from dredmtl.cli import dredmtl
from dredmtl.engine import Engine
from dredmtl.oracle import oracle_fixpoint
from dredmtl.periodic import difference_witness, parse_pmat, periodic_minus, periodic_union, read_pmat, unfold_window
from dredmtl.store import FactStore
from dredmtl.syntax import Fact, parse_program
from dredmtl.temporal import Interval, make_interval
from dredmtl.utils import BudgetExceededError

# (rules, arities of the predicates datasets may use)
CORPUS = [
    ('BOXPLUS[0,1] A(?x) :- BOXMINUS[3,4] A(?x)', {'A': 1}),
    ('A(?x) :- DIAMONDMINUS[1,1] A(?x)', {'A': 1}),
    ('A(?x) :- DIAMONDPLUS[2,2] A(?x)', {'A': 1}),
    ('B(?x) :- A(?x) SINCE[1,3] C(?x)\nA(?x) :- DIAMONDMINUS[2,2] B(?x)', {'A': 1, 'B': 1, 'C': 1}),
    ('R(?x,?y) :- P(?x), DIAMONDMINUS[0,2] Q(?y)\nP(?y) :- R(?x,?y), BOXMINUS[0,1] Q(?x)', {'P': 1, 'Q': 1}),
    ('B(?x) :- A(?x) UNTIL(0,2] C(?x)\nC(?x) :- DIAMONDMINUS[5,5] B(?x)', {'A': 1, 'B': 1, 'C': 1}),
]

STAGE_CAP = 500


def facts_for(arities):
    @st.composite
    def build(draw):
        predicate = draw(st.sampled_from(sorted(arities)))
        constants = tuple(draw(st.sampled_from(['a', 'b'])) for _ in range(arities[predicate]))
        lo = draw(st.integers(0, 10))
        hi = draw(st.integers(lo, lo + 3))
        return Fact(predicate, constants, Interval.closed(lo, hi))
    return build()


@st.composite
def update_cases(draw):
    text, arities = draw(st.sampled_from(CORPUS))
    facts = draw(st.lists(facts_for(arities), min_size=1, max_size=5))
    removed = draw(st.lists(st.sampled_from(facts), max_size=2))
    added = draw(st.lists(facts_for(arities), max_size=2))
    return parse_program(text), FactStore(facts), FactStore(removed), FactStore(added)


integration_settings = settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])


PREDICATES = ['A', 'B', 'C']
HALVES = [Fraction(k, 2) for k in range(5)]
OPERATORS = ['DIAMONDMINUS', 'DIAMONDPLUS', 'BOXMINUS', 'BOXPLUS', 'SINCE', 'UNTIL']


@st.composite
def metric_intervals(draw):
    lo = draw(st.sampled_from(HALVES))
    hi = draw(st.sampled_from([value for value in HALVES if value >= lo]))
    if lo == hi:
        return Interval.point(lo)
    return Interval(lo, hi, draw(st.booleans()), draw(st.booleans()))


@st.composite
def rule_texts(draw):
    """A guarded rule whose metric atom usually mentions its own head."""
    head = draw(st.sampled_from(PREDICATES))
    guard = draw(st.sampled_from([p for p in PREDICATES if p != head]))
    target = draw(st.sampled_from([head, head, guard]))
    operator = draw(st.sampled_from(OPERATORS))
    interval = draw(metric_intervals())
    if operator in ('SINCE', 'UNTIL'):
        gap, anchor = draw(st.permutations([target, draw(st.sampled_from(PREDICATES))]))
        metric = f"{gap}(?x) {operator}{interval} {anchor}(?x)"
    else:
        metric = f"{operator}{interval} {target}(?x)"
    wrapper = draw(st.sampled_from(['', '', 'BOXPLUS', 'BOXMINUS']))
    head_text = f"{wrapper}{draw(metric_intervals())} {head}(?x)" if wrapper else f"{head}(?x)"
    return f"{head_text} :- {guard}(?x), {metric}"


@st.composite
def rational_facts(draw):
    lo = Fraction(draw(st.integers(0, 12)), 2)
    length = draw(st.sampled_from([Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)]))
    if length == 0:
        interval = Interval.point(lo)
    else:
        interval = Interval(lo, lo + length, draw(st.booleans()), draw(st.booleans()))
    return Fact(draw(st.sampled_from(PREDICATES)), (draw(st.sampled_from(['a', 'b'])),), interval)


@st.composite
def partial_removals(draw, facts):
    """A leading piece of one dataset fact, cut at its start, middle or end."""
    fact = draw(st.sampled_from(facts))
    interval = fact.interval
    cut = draw(st.sampled_from([interval.lo, (interval.lo + interval.hi) / 2, interval.hi]))
    piece = make_interval(interval.lo, cut, interval.lo_closed, draw(st.booleans())) or interval
    return Fact(fact.predicate, fact.constants, piece)


@st.composite
def random_updates(draw):
    program = parse_program('\n'.join(draw(st.lists(rule_texts(), min_size=1, max_size=2))))
    facts = draw(st.lists(rational_facts(), min_size=1, max_size=4))
    removed = draw(st.lists(partial_removals(facts), min_size=1, max_size=2))
    added = draw(st.lists(rational_facts(), max_size=2))
    return program, FactStore(facts), FactStore(removed), FactStore(added)


def run_update(case):
    """Updated materialisation, its rematerialisation and the new dataset; rejects runs over budget."""
    program, e, e_minus, e_plus = case
    engine = Engine(program, stage_cap=STAGE_CAP)
    try:
        updated, new_e, _ = engine.update(e, engine.materialise(e), e_minus, e_plus)
        return updated, engine.rematerialise(new_e), new_e
    except BudgetExceededError:
        assume(False)


random_settings = settings(max_examples=60, deadline=None,
                           suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])


class TestRandomPrograms:
    """Random programs whose rules support themselves, over data with rational and open endpoints."""

    @random_settings
    @given(random_updates())
    def test_dred_matches_rematerialisation(self, case):
        updated, expected, _ = run_update(case)
        assert difference_witness(updated, expected) is None

    @random_settings
    @given(random_updates())
    def test_dred_matches_oracle(self, case):
        updated, expected, new_e = run_update(case)
        window = Interval.closed(-2, 10)
        oracle = oracle_fixpoint(case[0], new_e, window, max_rounds=80, attempts=3)
        assume(oracle.converged)
        assert unfold_window(updated, window) == oracle.store
        assert unfold_window(expected, window) == oracle.store


class TestDRedAgainstRematerialisation:
    """Incremental updates give the same unfolding as materialising from scratch."""

    @integration_settings
    @given(update_cases())
    def test_random_updates(self, case):
        program, e, e_minus, e_plus = case
        engine = Engine(program, stage_cap=STAGE_CAP)
        m = engine.materialise(e)
        updated, new_e, report = engine.update(e, m, e_minus, e_plus)
        assert difference_witness(updated, engine.rematerialise(new_e)) is None
        if e_minus.intersection(e).difference(e_plus).is_empty():
            assert report.D == 0
        if e_plus.difference(e).is_empty():
            assert report.A == 0
        assert set(report.durations) == {'overdelete', 'rederive', 'insert'}

    def test_delete_everything(self):
        program = parse_program(CORPUS[1][0])
        e = FactStore([Fact('A', ('a',), Interval.closed(0, 1))])
        engine = Engine(program, stage_cap=STAGE_CAP)
        updated, new_e, _ = engine.update(e, engine.materialise(e), e, FactStore())
        assert new_e.is_empty()
        assert unfold_window(updated, Interval.closed(-50, 50)).is_empty()

    def test_deletion_keeps_facts_with_other_support(self):
        program = parse_program(CORPUS[1][0])
        e = FactStore([Fact('A', ('a',), Interval.closed(0, 1)), Fact('A', ('a',), Interval.closed(4, 5))])
        engine = Engine(program, stage_cap=STAGE_CAP)
        m = engine.materialise(e)
        removed = FactStore([Fact('A', ('a',), Interval.closed(0, 1))])
        updated, new_e, report = engine.update(e, m, removed, FactStore())
        assert report.R > 0
        assert difference_witness(updated, engine.rematerialise(new_e)) is None
        assert unfold_window(updated, Interval.closed(0, 10)) == FactStore(
            [Fact('A', ('a',), Interval.closed(4, 10))])


class TestExample1:
    """The Example 1 program end to end."""

    def test_materialisation_matches_oracle(self, example1):
        m = Engine(example1).materialise(example1_dataset(2))
        window = Interval.closed(-50, 50)
        expected = oracle_fixpoint(example1, example1_dataset(2), window)
        assert expected.converged
        assert unfold_window(m, window) == expected.store

    def test_depth(self):
        assert example1_program().depth == 11


class TestPeriodicAlgebraOnMaterialisations:
    """Union and difference of materialisations agree with their unfoldings."""

    @pytest.mark.parametrize('text, arities', CORPUS[:3])
    def test_sub_materialisation(self, text, arities):
        program = parse_program(text)
        engine = Engine(program, stage_cap=STAGE_CAP)
        small = FactStore([Fact('A', ('a',), Interval.closed(2, 3))])
        large = small.union(FactStore([Fact('A', ('b',), Interval.closed(0, 1)),
                                       Fact('A', ('a',), Interval.closed(7, 9))]))
        m1, m2 = engine.materialise(large), engine.materialise(small)
        for lo in (-60, -25, 0, 15):
            window = Interval.closed(lo, lo + 70)
            u1, u2 = unfold_window(m1, window), unfold_window(m2, window)
            assert unfold_window(periodic_union(m1, m2), window) == u1.union(u2)
            assert unfold_window(periodic_minus(m1, m2), window) == u1.difference(u2)


class TestEngineAgainstOracle:
    """Unfoldings agree with the pointwise oracle on bounded windows."""

    @pytest.mark.parametrize('text, arities', CORPUS)
    def test_materialisation(self, text, arities):
        program = parse_program(text)
        e = FactStore()
        for predicate, arity in sorted(arities.items()):
            e.add(Fact(predicate, ('a',) * arity, Interval.closed(1, 2)))
        e.add(Fact(sorted(arities)[0], ('b',) * arities[sorted(arities)[0]], Interval.closed(3, 5)))
        m = Engine(program, stage_cap=STAGE_CAP).materialise(e)
        window = Interval.closed(-15, 25)
        expected = oracle_fixpoint(program, e, window)
        assert expected.converged
        assert unfold_window(m, window) == expected.store


class TestScaleIndependence:
    """Touched-fact counts of the Example 1 update do not grow with the dataset."""

    def test_counts(self):
        records = [collect(n)[0] for n in (4, 16, 32)]
        assert len({(record.D, record.R, record.A) for record in records}) == 1
        assert records[0].D == 6

    @pytest.mark.slow
    @pytest.mark.parametrize('n', [100, 1000, 10000])
    def test_update_beats_rematerialisation(self, n):
        small = collect(4)[0]
        dred = min(collect(n, 'dred', repeat=3), key=lambda record: record.total_ms)
        remat = collect(n, 'remat')[0]
        assert (dred.D, dred.R, dred.A) == (small.D, small.R, small.A)
        assert remat.total_ms >= 5 * dred.total_ms


class TestStatsShape:
    """The --stats line of the update command on three kinds of update."""

    @pytest.fixture(autouse=True)
    def _fresh_global_config(self, monkeypatch):
        monkeypatch.setattr(config_module, '_config', None)

    @pytest.mark.parametrize('remove, add', [
        ('R(a1)@[0,1]\n', ''),
        ('', 'R(a9)@[0,1]\n'),
        ('R(a1)@[0,1]\n', 'R(a9)@[0,1]\n'),
    ])
    def test_stats(self, remove, add):
        runner = CliRunner(mix_stderr=False)
        with runner.isolated_filesystem():
            Path('p.dmtl').write_text('BOXPLUS[0,1] R(?x) :- BOXMINUS[9,10] R(?x)\n')
            Path('e.facts').write_text('R(a1)@[0,1]\nR(a2)@[0,1]\n')
            Path('minus.facts').write_text(remove)
            Path('plus.facts').write_text(add)
            assert runner.invoke(dredmtl, ['materialize', '--program', 'p.dmtl', '--data', 'e.facts',
                                           '--out', 'm.pmat']).exit_code == 0
            result = runner.invoke(dredmtl, ['update', '--program', 'p.dmtl', '--data', 'e.facts', '--mat', 'm.pmat',
                                             '--remove', 'minus.facts', '--add', 'plus.facts', '--out', 'u.pmat',
                                             '--stats'])
            assert result.exit_code == 0
            record = StatsRecord.parse(result.stdout.strip())
        assert record.total_ms == pytest.approx(record.overdelete_ms + record.rederive_ms + record.insert_ms,
                                                abs=0.01)
        assert (record.D > 0) == bool(remove)
        assert (record.A > 0) == bool(add)
        assert record.rounds_D >= 1
        assert record.rounds_A >= 1

    def test_stats_without_out_keeps_materialisation(self):
        runner = CliRunner(mix_stderr=False)
        with runner.isolated_filesystem():
            Path('p.dmtl').write_text('BOXPLUS[0,1] R(?x) :- BOXMINUS[9,10] R(?x)\n')
            Path('e.facts').write_text('R(a1)@[0,1]\nR(a2)@[0,1]\nR(a3)@[0,1]\n')
            Path('minus.facts').write_text('R(a1)@[0,1]\n')
            Path('plus.facts').write_text('R(a4)@[0,1]\n')
            assert runner.invoke(dredmtl, ['materialize', '--program', 'p.dmtl', '--data', 'e.facts',
                                           '--out', 'm.pmat']).exit_code == 0
            result = runner.invoke(dredmtl, ['update', '--program', 'p.dmtl', '--data', 'e.facts', '--mat', 'm.pmat',
                                             '--remove', 'minus.facts', '--add', 'plus.facts', '--stats'])
            assert result.exit_code == 0
            body, _, stats_line = result.stdout.rstrip('\n').rpartition('\n')
            m = read_pmat('m.pmat')
        updated = parse_pmat(body + '\n')
        record = StatsRecord.parse(stats_line)
        assert record.n == 4
        assert record.core_facts == len(updated.core)
        window = Interval.closed(-30, 40)
        assert unfold_window(updated, window) != unfold_window(m, window)
        assert {fact.constants for fact in unfold_window(updated, window)} == {('a2',), ('a3',), ('a4',)}
