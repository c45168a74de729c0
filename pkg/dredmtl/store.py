"""Fact stores: finite interpretations kept as one coalesced IntervalSet per ground atom."""
from collections.abc import Set as AbstractSet
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

from dredmtl.syntax import Fact, GroundAtom, parse_dataset
from dredmtl.temporal import EMPTY, Interval, IntervalSet, hull_of
from dredmtl.utils import ParseError, read_text


class AtomSet(AbstractSet):
    """Atoms of a base collection with a few added and a few dropped, never copied."""

    __slots__ = ('_base', '_added', '_dropped')

    def __init__(self, base: Iterable[GroundAtom], added: Set[GroundAtom], dropped: Set[GroundAtom] = frozenset()):
        self._base = base
        self._added = added
        self._dropped = dropped

    def __contains__(self, atom) -> bool:
        if atom in self._dropped:
            return False
        return atom in self._added or atom in self._base

    def __iter__(self) -> Iterator[GroundAtom]:
        for atom in self._base:
            if atom not in self._dropped:
                yield atom
        yield from self._added

    def __len__(self) -> int:
        return len(self._base) - len(self._dropped) + len(self._added)


class FactStore:
    """A map from ground atoms to nonempty coalesced interval sets.

    Stores are built by ``add``/``add_set`` and treated as values afterwards:
    every set operation returns a new store.
    """

    __slots__ = ('_atoms', '_index', '_arities')

    def __init__(self, facts: Iterable[Fact] = ()):
        self._atoms: Dict[GroundAtom, IntervalSet] = {}
        self._index: Optional[Dict[str, Set[GroundAtom]]] = None
        self._arities: Dict[str, int] = {}
        for fact in facts:
            self.add(fact)

    @classmethod
    def from_sets(cls, mapping: Dict[GroundAtom, IntervalSet]) -> 'FactStore':
        store = cls()
        for atom, intervals in mapping.items():
            store.add_set(atom, intervals)
        return store

    def _adopt(self, atoms: Dict[GroundAtom, IntervalSet]) -> 'FactStore':
        # atoms must already be nonempty and arity-consistent
        store = FactStore()
        store._atoms = atoms
        store._arities = dict(self._arities)
        return store

    # build phase ---------------------------------------------------------

    def _check_arity(self, atom: GroundAtom):
        expected = self._arities.setdefault(atom.predicate, len(atom.constants))
        if expected != len(atom.constants):
            raise ParseError(f"arity mismatch for {atom.predicate}: "
                             f"got {len(atom.constants)}, expected {expected}")

    def add_set(self, atom: GroundAtom, intervals: IntervalSet) -> bool:
        """Add time points for ``atom``; returns True if any point is new."""
        if not intervals:
            return False
        current = self._atoms.get(atom)
        if current is None:
            self._check_arity(atom)
            self._atoms[atom] = intervals
            if self._index is not None:
                self._index.setdefault(atom.predicate, set()).add(atom)
            return True
        merged = current.union(intervals)
        if merged == current:
            return False
        self._atoms[atom] = merged
        return True

    def add(self, fact: Fact) -> bool:
        return self.add_set(fact.atom, IntervalSet.of(fact.interval))

    def update(self, other: 'FactStore') -> bool:
        changed = False
        for atom, intervals in other._atoms.items():
            changed = self.add_set(atom, intervals) or changed
        return changed

    def copy(self) -> 'FactStore':
        return self._adopt(dict(self._atoms))

    # lookups -------------------------------------------------------------

    def get(self, atom: GroundAtom) -> IntervalSet:
        return self._atoms.get(atom, EMPTY)

    def lookup(self, atom: GroundAtom, window: Optional[Interval] = None) -> IntervalSet:
        intervals = self._atoms.get(atom, EMPTY)
        if window is None or not intervals:
            return intervals
        return intervals.restrict(window)

    def atoms(self, predicate: Optional[str] = None) -> Iterable[GroundAtom]:
        if predicate is None:
            return self._atoms.keys()
        if self._index is None:
            index: Dict[str, Set[GroundAtom]] = {}
            for atom in self._atoms:
                index.setdefault(atom.predicate, set()).add(atom)
            self._index = index
        return self._index.get(predicate, ())

    def items(self) -> Iterable[Tuple[GroundAtom, IntervalSet]]:
        return self._atoms.items()

    def predicates(self) -> List[str]:
        return sorted({atom.predicate for atom in self._atoms})

    def constants(self) -> Set[str]:
        return {constant for atom in self._atoms for constant in atom.constants}

    def facts(self) -> Iterator[Fact]:
        """Facts in canonical order: atoms sorted, intervals by left endpoint."""
        for atom in sorted(self._atoms):
            for interval in self._atoms[atom]:
                yield Fact(atom.predicate, atom.constants, interval)

    def __iter__(self) -> Iterator[Fact]:
        return self.facts()

    def __len__(self) -> int:
        """Number of facts (maximal intervals) in the store."""
        return sum(len(intervals) for intervals in self._atoms.values())

    def atom_count(self) -> int:
        return len(self._atoms)

    def __contains__(self, atom: GroundAtom) -> bool:
        return atom in self._atoms

    def __bool__(self) -> bool:
        return bool(self._atoms)

    def is_empty(self) -> bool:
        return not self._atoms

    def __eq__(self, other) -> bool:
        if not isinstance(other, FactStore):
            return NotImplemented
        return self._atoms == other._atoms

    def __repr__(self) -> str:
        return f"FactStore({len(self._atoms)} atoms, {len(self)} facts)"

    def hull(self) -> Optional[Interval]:
        return hull_of(interval for intervals in self._atoms.values() for interval in intervals)

    def endpoints(self) -> Set[Fraction]:
        return {point for intervals in self._atoms.values() for point in intervals.endpoints()}

    # semantic set operations ---------------------------------------------

    def union(self, other: 'FactStore') -> 'FactStore':
        if len(other._atoms) > len(self._atoms):
            result = other.copy()
            result.update(self)
        else:
            result = self.copy()
            result.update(other)
        return result

    def difference(self, other: 'FactStore') -> 'FactStore':
        atoms = dict(self._atoms)
        for atom, removed in other._atoms.items():
            current = atoms.get(atom)
            if current is None:
                continue
            remaining = current.difference(removed)
            if remaining:
                atoms[atom] = remaining
            else:
                del atoms[atom]
        return self._adopt(atoms)

    def intersection(self, other: 'FactStore') -> 'FactStore':
        small, large = (self, other) if len(self._atoms) <= len(other._atoms) else (other, self)
        atoms = {}
        for atom, intervals in small._atoms.items():
            theirs = large._atoms.get(atom)
            if theirs is None:
                continue
            common = intervals.intersection(theirs)
            if common:
                atoms[atom] = common
        return self._adopt(atoms)

    def project(self, window: Interval) -> 'FactStore':
        atoms = {}
        for atom, intervals in self._atoms.items():
            inside = intervals.restrict(window)
            if inside:
                atoms[atom] = inside
        return self._adopt(atoms)

    def shift(self, delta: Fraction) -> 'FactStore':
        if delta == 0:
            return self
        return self._adopt({atom: intervals.shift(delta) for atom, intervals in self._atoms.items()})

    def is_shift(self, other: 'FactStore', delta: Fraction) -> bool:
        """True iff shifting every interval of this store by ``delta`` gives ``other``."""
        if len(self._atoms) != len(other._atoms):
            return False
        for atom, intervals in self._atoms.items():
            theirs = other._atoms.get(atom)
            if theirs is None or intervals.shift(delta) != theirs:
                return False
        return True

    def satisfies(self, fact: Fact) -> bool:
        return self.get(fact.atom).covers(fact.interval)

    def contains_store(self, other: 'FactStore') -> bool:
        return other.difference(self).is_empty()

    def serialize(self) -> str:
        """Dataset-format text, one fact per line."""
        return ''.join(f"{fact}\n" for fact in self.facts())


def insert_fact(store: FactStore, fact: Fact) -> Tuple[FactStore, bool]:
    """Return a store with ``fact`` added and whether any time point was new."""
    result = store.copy()
    changed = result.add(fact)
    return result, changed


def store_union(a: FactStore, b: FactStore) -> FactStore:
    return a.union(b)


def store_difference(a: FactStore, b: FactStore) -> FactStore:
    return a.difference(b)


def store_intersection(a: FactStore, b: FactStore) -> FactStore:
    return a.intersection(b)


def project(store: FactStore, window: Interval) -> FactStore:
    return store.project(window)


def is_shift(a: FactStore, b: FactStore, delta: Fraction) -> bool:
    return a.is_shift(b, delta)


def satisfies(store: FactStore, fact: Fact) -> bool:
    return store.satisfies(fact)


def serialize_store(store: FactStore) -> str:
    return store.serialize()


def read_store(path) -> FactStore:
    """Load a dataset file into a coalesced store."""
    return FactStore(parse_dataset(read_text(path)))


__all__ = [
    'FactStore', 'AtomSet', 'GroundAtom', 'insert_fact', 'store_union', 'store_difference',
    'store_intersection', 'project', 'is_shift', 'satisfies', 'serialize_store', 'read_store',
]
