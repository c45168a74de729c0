"""Scenario generators and timing records for ``dredmtl bench``."""
import logging
import time
from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterator, List, Tuple

from dredmtl.engine import Engine
from dredmtl.store import FactStore
from dredmtl.syntax import Fact, Program, parse_program
from dredmtl.temporal import Interval

logger = logging.getLogger('dredmtl.bench')

EXAMPLE1_RULE = 'BOXPLUS[0,1] R(?x) :- BOXMINUS[9,10] R(?x)'
SCENARIOS = ('example1',)
MODES = ('dred', 'remat')


@dataclass
class StatsRecord:
    """One benchmark or update run, printed as a single ``key=value`` line."""

    scenario: str
    mode: str
    n: int
    overdelete_ms: float = 0.0
    rederive_ms: float = 0.0
    insert_ms: float = 0.0
    total_ms: float = 0.0
    D: int = 0
    R: int = 0
    A: int = 0
    core_facts: int = 0
    rounds_D: int = 0
    rounds_R: int = 0
    rounds_A: int = 0

    def format(self) -> str:
        return ' '.join(f"{key}={value}" for key, value in asdict(self).items())

    @classmethod
    def parse(cls, line: str) -> 'StatsRecord':
        """Read back a line written by ``format``."""
        values: Dict[str, str] = dict(part.split('=', 1) for part in line.split())
        return cls(**{entry.name: entry.type(values[entry.name]) for entry in fields(cls)})

    @classmethod
    def from_report(cls, scenario: str, n: int, report, core_facts: int) -> 'StatsRecord':
        return cls(scenario=scenario, mode='dred', n=n, core_facts=core_facts, **report.as_dict())


def example1_program() -> Program:
    return parse_program(EXAMPLE1_RULE)


def example1_fact(i: int) -> Fact:
    return Fact('R', (f"a{i}",), Interval.closed(0, 1))


def example1_dataset(count: int) -> FactStore:
    """R(a1)@[0,1] .. R(a<count>)@[0,1]."""
    return FactStore(example1_fact(i) for i in range(1, count + 1))


def example1_update(n: int) -> Tuple[FactStore, FactStore, FactStore]:
    """E = {R(a_i)@[0,1] | 0<i<n}, E- = {R(a1)@[0,1]}, E+ = {R(a_n)@[0,1]}."""
    return example1_dataset(n - 1), FactStore([example1_fact(1)]), FactStore([example1_fact(n)])


def run_scenario(n: int, mode: str = 'dred', repeat: int = 1, scenario: str = 'example1',
                 engine_factory=Engine) -> Iterator[StatsRecord]:
    """
    Time one update of the Example 1 family at scale ``n``.

    In ``dred`` mode the initial materialisation is built once, outside the
    timed region, and each repetition updates it afresh. In ``remat`` mode
    each repetition materialises the updated dataset from scratch.

    Args:
        n: Scale; E holds n-1 facts
        mode: 'dred' or 'remat'
        repeat: Number of timed runs
        scenario: Scenario name (only 'example1')
        engine_factory: Callable building an Engine from a program

    Yields:
        One StatsRecord per run
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"Unknown scenario: {scenario}")
    if mode not in MODES:
        raise ValueError(f"Unknown mode: {mode}")
    if n < 2:
        raise ValueError("n must be at least 2")

    program = example1_program()
    engine = engine_factory(program)
    e, e_minus, e_plus = example1_update(n)

    if mode == 'dred':
        m = engine.materialise(e)
        for run in range(repeat):
            updated, _, report = engine.update(e, m, e_minus, e_plus)
            logger.debug(f"{scenario} n={n} dred run {run + 1}: {report.total_ms:.1f} ms")
            yield StatsRecord.from_report(scenario, n, report, len(updated.core))
    else:
        new_e = e.difference(e_minus).union(e_plus)
        for run in range(repeat):
            start = time.perf_counter()
            m = engine.rematerialise(new_e)
            elapsed = (time.perf_counter() - start) * 1000
            logger.debug(f"{scenario} n={n} remat run {run + 1}: {elapsed:.1f} ms")
            yield StatsRecord(scenario=scenario, mode='remat', n=n, total_ms=round(elapsed, 3),
                              core_facts=len(m.core))


def collect(n: int, mode: str = 'dred', repeat: int = 1) -> List[StatsRecord]:
    return list(run_scenario(n, mode, repeat))


__all__ = [
    'StatsRecord', 'example1_program', 'example1_dataset', 'example1_update', 'example1_fact',
    'run_scenario', 'collect', 'EXAMPLE1_RULE',
]
