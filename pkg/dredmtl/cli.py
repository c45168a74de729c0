#!/usr/bin/env python3
import logging
import sys
from typing import Optional

import click
from rich.console import Console
from rich.panel import Panel

from dredmtl import __version__
from dredmtl.bench import MODES, SCENARIOS, StatsRecord, run_scenario
from dredmtl.config import Config, ConfigurationError, get_config, load_config
from dredmtl.engine import Engine
from dredmtl.inspector import MaterialisationInspector
from dredmtl.oracle import pointwise_oracle
from dredmtl.periodic import read_pmat, serialize_pmat, write_pmat
from dredmtl.store import FactStore, read_store
from dredmtl.syntax import parse_fact, parse_program
from dredmtl.temporal import Interval, to_rational
from dredmtl.utils import BudgetExceededError, DMTLError, read_text, write_text

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_BUDGET = 2
EXIT_NOT_ENTAILED = 3

console = Console(stderr=True)
logger = logging.getLogger('dredmtl.cli')


def _setup(config: Optional[str]) -> Config:
    """Load the configuration (or the defaults) and apply its logging section."""
    if config:
        try:
            cfg = load_config(config)
            console.print(f"[green]✓ Loaded configuration from {config}[/green]")
            return cfg
        except ConfigurationError as e:
            console.print(f"[red]Error loading configuration: {e}[/red]")
            sys.exit(EXIT_PARSE)
    cfg = get_config()
    cfg.apply_logging_config()
    return cfg


def _banner(cfg: Config):
    if cfg.get('output.show_banner', True):
        console.print(Panel.fit(
            "[bold cyan]dredmtl[/bold cyan] - incremental DatalogMTL reasoning\n"
            f"Version {__version__}",
            border_style="cyan"
        ))


def _engine(cfg: Config, program) -> Engine:
    try:
        return Engine.from_config(program, cfg)
    except ConfigurationError as e:
        console.print(f"[red]Error: {e}[/red]")
        sys.exit(EXIT_PARSE)


def _fail(e: Exception):
    """Report a domain error and exit with its code."""
    if isinstance(e, BudgetExceededError):
        console.print(f"[red]Budget exceeded: {e}[/red]")
        sys.exit(EXIT_BUDGET)
    console.print(f"[red]Error: {e}[/red]")
    sys.exit(EXIT_PARSE)


def _emit(text: str, out: Optional[str]):
    if out:
        write_text(out, text)
    else:
        click.echo(text, nl=False)


def _optional_store(path: Optional[str]) -> FactStore:
    return read_store(path) if path else FactStore()


def config_option(f):
    return click.option('--config', type=click.Path(exists=True, dir_okay=False),
                        help='Path to configuration file (YAML or JSON)')(f)


@click.group()
@click.version_option(__version__, prog_name='dredmtl')
def dredmtl():
    """dredmtl - materialise DatalogMTL programs and keep them up to date."""


@dredmtl.command()
@click.option('--program', 'program_path', required=True, type=click.Path(), help='Program file (.dmtl)')
@click.option('--data', 'data_path', required=True, type=click.Path(), help='Dataset file')
@click.option('--out', type=click.Path(), help='Output .pmat file (stdout if omitted)')
@config_option
def materialize(program_path, data_path, out, config):
    """Compute the periodic materialisation of a program over a dataset."""
    cfg = _setup(config)
    _banner(cfg)
    try:
        program = parse_program(read_text(program_path))
        data = read_store(data_path)
        engine = _engine(cfg, program)
        result = engine.saturate(data)
        _emit(serialize_pmat(result.materialisation), out)
    except (DMTLError, OSError) as e:
        _fail(e)
    console.print(f"[green]✓ Saturated after {result.rounds} rounds, "
                  f"{len(result.materialisation.core)} core facts[/green]")


@dredmtl.command()
@click.option('--program', 'program_path', required=True, type=click.Path(), help='Program file (.dmtl)')
@click.option('--data', 'data_path', required=True, type=click.Path(), help='Dataset the materialisation was built on')
@click.option('--mat', 'mat_path', required=True, type=click.Path(), help='Current .pmat file')
@click.option('--remove', 'remove_path', type=click.Path(), help='Facts to delete')
@click.option('--add', 'add_path', type=click.Path(), help='Facts to insert')
@click.option('--out', type=click.Path(), help='Output .pmat file (stdout if omitted)')
@click.option('--data-out', type=click.Path(), help='Where to write the updated dataset')
@click.option('--stats', is_flag=True, help='Print a key=value stats line')
@config_option
def update(program_path, data_path, mat_path, remove_path, add_path, out, data_out, stats, config):
    """Apply deletions and insertions to a materialisation with DRed."""
    cfg = _setup(config)
    _banner(cfg)
    try:
        program = parse_program(read_text(program_path))
        data = read_store(data_path)
        m = read_pmat(mat_path)
        e_minus = _optional_store(remove_path)
        e_plus = _optional_store(add_path)
        engine = _engine(cfg, program)
        updated, new_data, report = engine.update(data, m, e_minus, e_plus)
        if out:
            write_pmat(updated, out)
        if data_out:
            write_text(data_out, new_data.serialize())
    except (DMTLError, OSError) as e:
        _fail(e)
    if not out:
        click.echo(serialize_pmat(updated), nl=False)
    if stats:
        # scale: distinct ground atoms of E and E+
        scale = data.union(e_plus).atom_count()
        click.echo(StatsRecord(scenario='update', mode='dred', n=scale, core_facts=len(updated.core),
                               **report.as_dict()).format())
    console.print(f"[green]✓ Updated: D={report.D} R={report.R} A={report.A}[/green]")


@dredmtl.command()
@click.argument('first', type=click.Path())
@click.argument('second', type=click.Path())
@config_option
def diff(first, second, config):
    """Check whether two .pmat files unfold to the same interpretation."""
    _setup(config)
    try:
        comparison = MaterialisationInspector(first, console).compare(second)
    except DMTLError as e:
        _fail(e)
    if comparison['equivalent']:
        click.echo('equivalent')
        return
    where = first if comparison['side'] == '-' else second
    click.echo(f"{comparison['side']} {comparison['fact']}")
    console.print(f"[yellow]First difference: {comparison['fact']} holds only in {where}[/yellow]")
    sys.exit(1)


@dredmtl.command()
@click.option('--mat', 'mat_path', required=True, type=click.Path(), help='.pmat file')
@click.argument('fact')
@config_option
def entail(mat_path, fact, config):
    """Check whether a materialisation entails FACT, e.g. 'R(a1)@[30,31]'."""
    _setup(config)
    try:
        m = read_pmat(mat_path)
        parsed = parse_fact(fact)
    except DMTLError as e:
        _fail(e)
    if m.entails(parsed):
        click.echo('entailed')
        return
    click.echo('not entailed')
    sys.exit(EXIT_NOT_ENTAILED)


@dredmtl.command()
@click.option('--program', 'program_path', required=True, type=click.Path(), help='Program file (.dmtl)')
@click.option('--data', 'data_path', required=True, type=click.Path(), help='Dataset file')
@click.option('--window', required=True, nargs=2, type=str, help='Window bounds, e.g. --window 0 50')
@click.option('--max-rounds', type=int, help='Round limit (default from config)')
@config_option
def oracle(program_path, data_path, window, max_rounds, config):
    """Run the pointwise reference reasoner on a closed window."""
    cfg = _setup(config)
    try:
        lo, hi = (to_rational(bound) for bound in window)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint='--window')
    if lo > hi:
        raise click.BadParameter('lower bound exceeds upper bound', param_hint='--window')
    try:
        program = parse_program(read_text(program_path))
        data = read_store(data_path)
        result = pointwise_oracle(program, data, Interval(lo, hi), max_rounds or cfg.get_oracle_rounds())
    except DMTLError as e:
        _fail(e)
    click.echo(result.store.serialize(), nl=False)
    if not result.converged:
        console.print(f"[yellow]No fixpoint within {result.rounds} rounds[/yellow]")
        sys.exit(EXIT_BUDGET)


@dredmtl.command()
@click.option('--scenario', type=click.Choice(SCENARIOS), default='example1', show_default=True)
@click.option('--n', 'n', type=click.IntRange(min=2), default=100, show_default=True, help='Scale')
@click.option('--mode', type=click.Choice(MODES), default='dred', show_default=True)
@click.option('--repeat', type=click.IntRange(min=1), default=1, show_default=True)
@config_option
def bench(scenario, n, mode, repeat, config):
    """Time the delete-a1 / insert-an update of a scenario family."""
    cfg = _setup(config)
    try:
        for record in run_scenario(n, mode, repeat, scenario,
                                   engine_factory=lambda program: _engine(cfg, program)):
            click.echo(record.format())
    except DMTLError as e:
        _fail(e)


@dredmtl.command()
@click.argument('pmat', type=click.Path())
@config_option
def inspect(pmat, config):
    """Summarise a .pmat file."""
    cfg = _setup(config)
    _banner(cfg)
    try:
        MaterialisationInspector(pmat, Console()).display_inspection()
    except DMTLError as e:
        _fail(e)


if __name__ == '__main__':
    dredmtl()
