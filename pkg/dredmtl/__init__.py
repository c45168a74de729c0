"""dredmtl - incremental DatalogMTL reasoning.

Materialises DatalogMTL programs over bounded datasets as periodic
materialisations and keeps them up to date under deletions and insertions
with DRed-style overdelete, rederive and insert stages.
"""

__version__ = "1.0.0"
__author__ = "dredmtl"

from dredmtl.temporal import Interval, IntervalSet
from dredmtl.syntax import Fact, GroundAtom, Program, Rule, parse_dataset, parse_fact, parse_program
from dredmtl.store import FactStore
from dredmtl.periodic import PeriodicMaterialisation, equivalent, periodic_minus, periodic_union
from dredmtl.engine import Engine, SaturationBudget, UpdateReport, dred_update, entails, materialise, rematerialise
from dredmtl.oracle import oracle_fixpoint, pointwise_oracle

# Custom exceptions
from dredmtl.utils import (
    DMTLError,
    DMTLFileNotFoundError,
    InvalidPathError,
    ParseError,
    EvaluationError,
    PeriodError,
    BudgetExceededError
)

__all__ = [
    # Core types
    'Interval',
    'IntervalSet',
    'Fact',
    'GroundAtom',
    'Program',
    'Rule',
    'FactStore',
    'PeriodicMaterialisation',

    # Reasoning
    'Engine',
    'SaturationBudget',
    'UpdateReport',
    'materialise',
    'dred_update',
    'rematerialise',
    'entails',
    'equivalent',
    'periodic_minus',
    'periodic_union',
    'pointwise_oracle',
    'oracle_fixpoint',
    'parse_program',
    'parse_dataset',
    'parse_fact',

    # Exceptions
    'DMTLError',
    'DMTLFileNotFoundError',
    'InvalidPathError',
    'ParseError',
    'EvaluationError',
    'PeriodError',
    'BudgetExceededError',

    # Version info
    '__version__',
    '__author__'
]
