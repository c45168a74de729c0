"""Inspection of periodic materialisation files."""
import logging
from typing import Any, Dict

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from dredmtl.periodic import LEFT, RIGHT, difference_witness, read_pmat
from dredmtl.utils import DMTLError, ParseError, validate_path


class MaterialisationInspector:
    """Summarise and compare ``.pmat`` files."""

    def __init__(self, pmat_path: str, console: Console = None):
        """Initialize the inspector with validation.

        Args:
            pmat_path: Path to the ``.pmat`` file to inspect
            console: Console to print to

        Raises:
            DMTLError: If the path is invalid or the file does not parse
        """
        self.pmat_path = validate_path(pmat_path, must_exist=True)
        self.console = console or Console()
        self.logger = logging.getLogger(f'dredmtl.Inspector.{self.pmat_path.name}')
        try:
            self.materialisation = read_pmat(self.pmat_path)
        except ParseError as e:
            self.logger.error(f"Could not parse {self.pmat_path.name}: {e}")
            raise

    def inspect(self) -> Dict[str, Any]:
        """Periods, sizes and per-predicate counts of the materialisation."""
        m = self.materialisation
        core = m.core
        predicates: Dict[str, Dict[str, int]] = {}
        for atom, intervals in core.items():
            entry = predicates.setdefault(atom.predicate, {'atoms': 0, 'facts': 0})
            entry['atoms'] += 1
            entry['facts'] += len(intervals)
        result = {
            'file_name': self.pmat_path.name,
            'left_period': m.left,
            'right_period': m.right,
            'left_length': m.left.length if m.left is not None else None,
            'right_length': m.right.length if m.right is not None else None,
            'left_facts': len(m.content(LEFT)),
            'right_facts': len(m.content(RIGHT)),
            'atoms': core.atom_count(),
            'facts': len(core),
            'span': core.hull(),
            'predicates': predicates,
        }
        self.logger.info(f"Inspected {self.pmat_path.name}: {result['facts']} core facts")
        return result

    def display_inspection(self):
        """Print the inspection as a panel and a per-predicate table."""
        inspection = self.inspect()

        self.console.print(Panel.fit(
            f"[bold cyan]Materialisation Report[/bold cyan]\n"
            f"File: {inspection['file_name']}",
            border_style="cyan"
        ))

        self.console.print("\n[bold]Summary:[/bold]")
        for label, end in (('Left', 'left'), ('Right', 'right')):
            period = inspection[f'{end}_period']
            if period is None:
                self.console.print(f"  {label} period: none")
            else:
                self.console.print(f"  {label} period: {period} (length {inspection[f'{end}_length']}, "
                                   f"{inspection[f'{end}_facts']} facts)")
        span = inspection['span']
        self.console.print(f"  Core span: {span if span is not None else 'empty'}")
        self.console.print(f"  Atoms: {inspection['atoms']}")
        self.console.print(f"  Facts: {inspection['facts']}")

        if inspection['predicates']:
            table = Table()
            table.add_column("Predicate", style="cyan")
            table.add_column("Atoms", justify="right", style="green")
            table.add_column("Facts", justify="right", style="yellow")
            for name in sorted(inspection['predicates']):
                entry = inspection['predicates'][name]
                table.add_row(name, str(entry['atoms']), str(entry['facts']))
            self.console.print(table)

    def compare(self, other_path: str) -> Dict[str, Any]:
        """Compare with another ``.pmat`` file.

        Returns:
            ``equivalent`` plus, when they differ, the first differing fact
            and the side (``-`` only here, ``+`` only there) it is on
        """
        other = MaterialisationInspector(other_path, self.console)
        try:
            witness = difference_witness(self.materialisation, other.materialisation)
        except DMTLError as e:
            self.logger.error(f"Comparison failed: {e}")
            raise
        result = {'equivalent': witness is None, 'side': None, 'fact': None}
        if witness is not None:
            result['side'], result['fact'] = witness
        return result
