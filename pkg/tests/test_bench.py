"""Tests for scenario generators and stats records."""
import pytest

from dredmtl.bench import (EXAMPLE1_RULE, StatsRecord, collect, example1_dataset, example1_fact, example1_program,
                           example1_update, run_scenario)
from dredmtl.engine import Engine
from dredmtl.syntax import GroundAtom


class TestGenerators:
    """Test the Example 1 family."""

    def test_program(self):
        program = example1_program()
        assert str(program.rules[0]) == EXAMPLE1_RULE
        assert program.depth == 11

    def test_dataset(self):
        data = example1_dataset(3)
        assert len(data) == 3
        assert set(data.atoms('R')) == {GroundAtom('R', (f'a{i}',)) for i in (1, 2, 3)}

    def test_update(self):
        e, e_minus, e_plus = example1_update(5)
        assert e == example1_dataset(4)
        assert list(e_minus) == [example1_fact(1)]
        assert list(e_plus) == [example1_fact(5)]


class TestStatsRecord:
    """Test the key=value stats line."""

    def test_format(self):
        record = StatsRecord(scenario='example1', mode='dred', n=10, total_ms=1.5, D=6)
        line = record.format()
        assert line.startswith('scenario=example1 mode=dred n=10 overdelete_ms=0.0')
        assert 'D=6' in line.split()
        assert line.split()[-3:] == ['rounds_D=0', 'rounds_R=0', 'rounds_A=0']

    def test_parse_reads_format(self):
        record = StatsRecord(scenario='update', mode='dred', n=4, overdelete_ms=0.25, total_ms=2.125,
                             D=6, R=0, A=9, core_facts=12, rounds_D=7, rounds_R=2, rounds_A=10)
        assert StatsRecord.parse(record.format()) == record

    def test_parse_missing_key(self):
        with pytest.raises(KeyError):
            StatsRecord.parse('scenario=example1 mode=dred')


class TestRunScenario:
    """Test timed scenario runs."""

    def test_dred_repeats(self):
        records = list(run_scenario(3, 'dred', repeat=2))
        assert len(records) == 2
        for record in records:
            assert record.mode == 'dred'
            assert record.D == 6
            assert record.R == 0
            assert record.total_ms >= 0
            assert record.core_facts > 0

    def test_remat(self):
        records = collect(3, 'remat')
        assert len(records) == 1
        assert records[0].mode == 'remat'
        assert (records[0].D, records[0].A) == (0, 0)

    def test_counts_do_not_depend_on_n(self):
        small = collect(5)[0]
        large = collect(12)[0]
        assert (small.D, small.R, small.A) == (large.D, large.R, large.A)
        assert (small.rounds_D, small.rounds_R, small.rounds_A) == (large.rounds_D, large.rounds_R, large.rounds_A)
        assert large.core_facts > small.core_facts

    def test_engine_factory(self):
        built = []

        def factory(program):
            engine = Engine(program, stage_cap=50)
            built.append(engine)
            return engine

        list(run_scenario(3, engine_factory=factory))
        assert len(built) == 1

    @pytest.mark.parametrize('kwargs', [{'n': 1}, {'n': 3, 'mode': 'naive'}, {'n': 3, 'scenario': 'lubm'}])
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(ValueError):
            list(run_scenario(**kwargs))
