"""DatalogMTL syntax: metric atoms, rules, programs, facts and their parsers.

Program files hold one rule per line::

    BOXPLUS[0,1] R(?x) :- BOXMINUS[9,10] R(?x)

Dataset files hold one fact per line::

    R(a1)@[0,1]
    P(s,x)@3

``%`` starts a comment; blank lines are ignored.
"""
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Tuple

from dredmtl.temporal import Interval, format_rational, make_interval, to_rational
from dredmtl.utils import ParseError

Substitution = Dict[str, str]

KEYWORDS = frozenset({
    'BOXPLUS', 'BOXMINUS', 'DIAMONDPLUS', 'DIAMONDMINUS',
    'SINCE', 'UNTIL', 'TOP', 'BOTTOM',
})


def is_variable(term: str) -> bool:
    return term.startswith('?')


class GroundAtom(NamedTuple):
    """A predicate applied to constants."""

    predicate: str
    constants: Tuple[str, ...]

    def __str__(self) -> str:
        if not self.constants:
            return self.predicate
        return f"{self.predicate}({','.join(self.constants)})"


# ---------------------------------------------------------------------------
# Metric atoms
# ---------------------------------------------------------------------------

class MetricAtom:
    """Base class for metric atoms."""

    def variables(self) -> FrozenSet[str]:
        return frozenset()

    def substitute(self, sigma: Substitution) -> 'MetricAtom':
        return self

    def relational_atoms(self) -> List['Relational']:
        return []

    def required_atoms(self) -> List['Relational']:
        """Relational atoms that must hold somewhere whenever this atom holds."""
        return []

    def intervals(self) -> List[Interval]:
        return []

    def reach(self) -> Fraction:
        """How far from t the truth of this atom at t may look."""
        return Fraction(0)

    def is_ground(self) -> bool:
        return not self.variables()

    def _operand_text(self) -> str:
        return str(self)


@dataclass(frozen=True)
class Top(MetricAtom):
    def __str__(self) -> str:
        return 'TOP'


@dataclass(frozen=True)
class Bottom(MetricAtom):
    def __str__(self) -> str:
        return 'BOTTOM'


@dataclass(frozen=True)
class Relational(MetricAtom):
    predicate: str
    terms: Tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.terms:
            return self.predicate
        return f"{self.predicate}({','.join(self.terms)})"

    def variables(self) -> FrozenSet[str]:
        return frozenset(t for t in self.terms if is_variable(t))

    def substitute(self, sigma: Substitution) -> 'Relational':
        if not any(is_variable(t) for t in self.terms):
            return self
        return Relational(self.predicate, tuple(sigma.get(t, t) if is_variable(t) else t
                                                for t in self.terms))

    def relational_atoms(self) -> List['Relational']:
        return [self]

    def required_atoms(self) -> List['Relational']:
        return [self]

    def ground_atom(self) -> GroundAtom:
        if self.variables():
            raise ValueError(f"Atom {self} is not ground")
        return GroundAtom(self.predicate, self.terms)

    def match(self, atom: GroundAtom, sigma: Substitution) -> Optional[Substitution]:
        """Extend ``sigma`` so that this atom becomes ``atom``, or None."""
        if atom.predicate != self.predicate or len(atom.constants) != len(self.terms):
            return None
        extended = None
        for term, constant in zip(self.terms, atom.constants):
            if is_variable(term):
                bound = sigma.get(term) if extended is None else extended.get(term)
                if bound is None:
                    if extended is None:
                        extended = dict(sigma)
                    extended[term] = constant
                elif bound != constant:
                    return None
            elif term != constant:
                return None
        return dict(sigma) if extended is None else extended


@dataclass(frozen=True)
class _Unary(MetricAtom):
    interval: Interval
    operand: MetricAtom
    keyword = ''

    def __str__(self) -> str:
        return f"{self.keyword}{self.interval} {self.operand._operand_text()}"

    def variables(self) -> FrozenSet[str]:
        return self.operand.variables()

    def substitute(self, sigma: Substitution) -> MetricAtom:
        return type(self)(self.interval, self.operand.substitute(sigma))

    def relational_atoms(self) -> List[Relational]:
        return self.operand.relational_atoms()

    def required_atoms(self) -> List[Relational]:
        return self.operand.required_atoms()

    def intervals(self) -> List[Interval]:
        return [self.interval] + self.operand.intervals()

    def reach(self) -> Fraction:
        return self.interval.hi + self.operand.reach()


class Boxplus(_Unary):
    keyword = 'BOXPLUS'


class Boxminus(_Unary):
    keyword = 'BOXMINUS'


class Diamondplus(_Unary):
    keyword = 'DIAMONDPLUS'


class Diamondminus(_Unary):
    keyword = 'DIAMONDMINUS'


@dataclass(frozen=True)
class _Binary(MetricAtom):
    left: MetricAtom
    interval: Interval
    right: MetricAtom
    keyword = ''

    def __str__(self) -> str:
        return f"{self.left._operand_text()} {self.keyword}{self.interval} {self.right._operand_text()}"

    def _operand_text(self) -> str:
        return f"({self})"

    def variables(self) -> FrozenSet[str]:
        return self.left.variables() | self.right.variables()

    def substitute(self, sigma: Substitution) -> MetricAtom:
        return type(self)(self.left.substitute(sigma), self.interval, self.right.substitute(sigma))

    def relational_atoms(self) -> List[Relational]:
        return self.left.relational_atoms() + self.right.relational_atoms()

    def required_atoms(self) -> List[Relational]:
        required = list(self.right.required_atoms())
        if not self.interval.contains(Fraction(0)):
            # the gap (t1, t) is nonempty, so the left operand holds somewhere
            required.extend(self.left.required_atoms())
        return required

    def intervals(self) -> List[Interval]:
        return [self.interval] + self.left.intervals() + self.right.intervals()

    def reach(self) -> Fraction:
        return self.interval.hi + max(self.left.reach(), self.right.reach())


class Since(_Binary):
    keyword = 'SINCE'


class Until(_Binary):
    keyword = 'UNTIL'


UNARY_OPERATORS = {cls.keyword: cls for cls in (Boxplus, Boxminus, Diamondplus, Diamondminus)}
BINARY_OPERATORS = {cls.keyword: cls for cls in (Since, Until)}


# ---------------------------------------------------------------------------
# Rules, programs, facts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    head: MetricAtom
    body: Tuple[MetricAtom, ...]

    def __str__(self) -> str:
        return f"{self.head} :- {', '.join(str(atom) for atom in self.body)}"

    def variables(self) -> FrozenSet[str]:
        result = self.head.variables()
        for atom in self.body:
            result |= atom.variables()
        return result

    def required_atoms(self) -> List[Relational]:
        return [rel for atom in self.body for rel in atom.required_atoms()]

    def head_atom(self) -> Relational:
        atom = self.head
        while isinstance(atom, (Boxplus, Boxminus)):
            atom = atom.operand
        return atom

    def intervals(self) -> List[Interval]:
        result = self.head.intervals()
        for atom in self.body:
            result.extend(atom.intervals())
        return result

    @property
    def depth(self) -> Fraction:
        return sum((interval.hi for interval in self.intervals()), Fraction(0))


@dataclass(frozen=True)
class Program:
    rules: Tuple[Rule, ...] = ()
    depth: Fraction = field(init=False)
    div: Fraction = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'rules', tuple(self.rules))
        object.__setattr__(self, 'depth', max((rule.depth for rule in self.rules), default=Fraction(0)))
        # distinct denominators suffice: every endpoint stays a multiple of div
        denominators = {endpoint.denominator
                        for rule in self.rules
                        for interval in rule.intervals()
                        for endpoint in (interval.lo, interval.hi)}
        product = reduce(lambda a, b: a * b, denominators, 1)
        object.__setattr__(self, 'div', Fraction(1, product))

    def __str__(self) -> str:
        return '\n'.join(str(rule) for rule in self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def arities(self) -> Dict[str, int]:
        result: Dict[str, int] = {}
        for rule in self.rules:
            for atom in [rule.head_atom()] + [rel for body in rule.body for rel in body.relational_atoms()]:
                result.setdefault(atom.predicate, len(atom.terms))
        return result


@dataclass(frozen=True)
class Fact:
    predicate: str
    constants: Tuple[str, ...]
    interval: Interval

    @property
    def atom(self) -> GroundAtom:
        return GroundAtom(self.predicate, self.constants)

    def __str__(self) -> str:
        return f"{self.atom}@{self.interval}"


def program_depth(program: Program) -> Fraction:
    """Maximum over rules of the sum of right endpoints of operator intervals."""
    return program.depth


# ---------------------------------------------------------------------------
# Ruler
# ---------------------------------------------------------------------------

class Ruler:
    """The lattice of time points e + i*div anchored at dataset endpoints."""

    def __init__(self, div: Fraction, endpoints: Iterable[Fraction]):
        self.div = Fraction(div)
        residues = {self._residue(Fraction(e)) for e in endpoints}
        if not residues:
            residues = {Fraction(0)}
        self.residues: Tuple[Fraction, ...] = tuple(sorted(residues))

    def _residue(self, t: Fraction) -> Fraction:
        return t - math.floor(t / self.div) * self.div

    def is_on(self, t: Fraction) -> bool:
        return self._residue(t) in self.residues

    def points(self, window: Interval) -> List[Fraction]:
        result = set()
        for base in self.residues:
            first = math.ceil((window.lo - base) / self.div)
            last = math.floor((window.hi - base) / self.div)
            for i in range(first, last + 1):
                t = base + i * self.div
                if window.contains(t):
                    result.add(t)
        return sorted(result)

    def floor(self, t: Fraction) -> Fraction:
        """Largest ruler point <= t."""
        return max(base + math.floor((t - base) / self.div) * self.div for base in self.residues)

    def ceil(self, t: Fraction) -> Fraction:
        """Smallest ruler point >= t."""
        return min(base + math.ceil((t - base) / self.div) * self.div for base in self.residues)

    def below(self, t: Fraction) -> Iterator[Fraction]:
        """Ruler points strictly below t, descending."""
        cursor = self.floor(t)
        if cursor == t:
            cursor = self._previous(cursor)
        while True:
            yield cursor
            cursor = self._previous(cursor)

    def above(self, t: Fraction) -> Iterator[Fraction]:
        """Ruler points strictly above t, ascending."""
        cursor = self.ceil(t)
        if cursor == t:
            cursor = self._next(cursor)
        while True:
            yield cursor
            cursor = self._next(cursor)

    def _previous(self, t: Fraction) -> Fraction:
        residue = self._residue(t)
        index = self.residues.index(residue)
        if index > 0:
            return t - (residue - self.residues[index - 1])
        return t - residue - self.div + self.residues[-1]

    def _next(self, t: Fraction) -> Fraction:
        residue = self._residue(t)
        index = self.residues.index(residue)
        if index + 1 < len(self.residues):
            return t + (self.residues[index + 1] - residue)
        return t - residue + self.div + self.residues[0]


def ruler_points(program: Program, endpoints: Iterable[Fraction], window: Interval) -> List[Fraction]:
    """All points e + i*div(program) inside ``window``, sorted and deduplicated."""
    return Ruler(program.div, endpoints).points(window)


# ---------------------------------------------------------------------------
# Lexer and parser
# ---------------------------------------------------------------------------

class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


_TOKEN_PATTERN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>-?\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<implies>:-)
  | (?P<punct>[\[\]\(\),@])
""", re.VERBOSE)


def tokenize(line_text: str, line: int) -> List[Token]:
    """Tokenize one source line (comments already stripped)."""
    tokens: List[Token] = []
    pos = 0
    while pos < len(line_text):
        match = _TOKEN_PATTERN.match(line_text, pos)
        if match is None:
            raise ParseError(f"unexpected character {line_text[pos]!r}", line, pos + 1)
        kind = match.lastgroup
        text = match.group()
        if kind != 'ws':
            if kind == 'ident' and text in KEYWORDS:
                kind = 'keyword'
            elif kind == 'punct':
                kind = text
            tokens.append(Token(kind, text, line, pos + 1))
        pos = match.end()
    tokens.append(Token('eol', '', line, len(line_text) + 1))
    return tokens


class Parser:
    """Recursive-descent parser over the tokens of one line."""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != 'eol':
            self.pos += 1
        return token

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.peek()
        return ParseError(message, token.line, token.column)

    def expect(self, kind: str) -> Token:
        token = self.next()
        if token.kind != kind:
            found = token.text or 'end of line'
            raise self.error(f"expected {kind!r}, found {found!r}", token)
        return token

    def expect_end(self):
        token = self.peek()
        if token.kind != 'eol':
            raise self.error(f"unexpected {token.text!r}", token)

    # intervals -----------------------------------------------------------

    def parse_number(self) -> Fraction:
        token = self.next()
        if token.kind == 'ident' and token.text.lower() in ('inf', 'infinity'):
            raise self.error("unbounded intervals are not supported", token)
        if token.kind != 'number':
            raise self.error(f"expected a number, found {token.text or 'end of line'!r}", token)
        try:
            return to_rational(token.text)
        except ValueError as e:
            raise self.error(str(e), token)

    def parse_interval(self) -> Interval:
        start = self.next()
        if start.kind not in ('[', '('):
            raise self.error("expected '[' or '(' to open an interval", start)
        lo = self.parse_number()
        self.expect(',')
        hi = self.parse_number()
        end = self.next()
        if end.kind not in (']', ')'):
            raise self.error("expected ']' or ')' to close an interval", end)
        interval = make_interval(lo, hi, start.kind == '[', end.kind == ']')
        if interval is None:
            raise self.error("empty interval", start)
        return interval

    # atoms ---------------------------------------------------------------

    def parse_relational(self, allow_variables: bool = True) -> Relational:
        name = self.next()
        if name.kind != 'ident':
            raise self.error(f"expected a predicate, found {name.text or 'end of line'!r}", name)
        terms: List[str] = []
        if self.peek().kind == '(':
            self.next()
            if self.peek().kind != ')':
                while True:
                    term = self.next()
                    if term.kind == 'var':
                        if not allow_variables:
                            raise self.error(f"variable {term.text} in a ground fact", term)
                    elif term.kind not in ('ident', 'number'):
                        raise self.error(f"expected a term, found {term.text or 'end of line'!r}", term)
                    terms.append(term.text)
                    if self.peek().kind == ',':
                        self.next()
                        continue
                    break
            self.expect(')')
        return Relational(name.text, tuple(terms))

    def parse_operator_interval(self) -> Interval:
        token = self.peek()
        interval = self.parse_interval()
        if interval.lo < 0:
            raise self.error("operator intervals must contain only nonnegative rationals", token)
        return interval

    def parse_unary(self) -> MetricAtom:
        token = self.peek()
        if token.kind == 'keyword':
            if token.text == 'TOP':
                self.next()
                return Top()
            if token.text == 'BOTTOM':
                self.next()
                return Bottom()
            if token.text in UNARY_OPERATORS:
                self.next()
                interval = self.parse_operator_interval()
                return UNARY_OPERATORS[token.text](interval, self.parse_unary())
            raise self.error(f"{token.text} is a binary operator and needs a left operand", token)
        if token.kind == '(':
            self.next()
            atom = self.parse_metric()
            self.expect(')')
            return atom
        return self.parse_relational()

    def parse_metric(self) -> MetricAtom:
        left = self.parse_unary()
        token = self.peek()
        if token.kind == 'keyword' and token.text in BINARY_OPERATORS:
            self.next()
            interval = self.parse_operator_interval()
            right = self.parse_unary()
            after = self.peek()
            if after.kind == 'keyword' and after.text in BINARY_OPERATORS:
                raise self.error("SINCE/UNTIL are non-associative; add parentheses", after)
            return BINARY_OPERATORS[token.text](left, interval, right)
        return left

    def parse_rule(self) -> Rule:
        head_token = self.peek()
        head = self.parse_metric()
        self.expect('implies')
        body = [self.parse_metric()]
        while self.peek().kind == ',':
            self.next()
            body.append(self.parse_metric())
        self.expect_end()
        return validate_rule(Rule(head, tuple(body)), head_token)

    def parse_fact(self) -> Fact:
        atom = self.parse_relational(allow_variables=False)
        self.expect('@')
        if self.peek().kind in ('[', '('):
            interval = self.parse_interval()
        else:
            interval = Interval.point(self.parse_number())
        self.expect_end()
        return Fact(atom.predicate, atom.terms, interval)


def validate_rule(rule: Rule, token: Optional[Token] = None) -> Rule:
    """Enforce head shape, anchoring and range restriction."""
    line = token.line if token else None
    column = token.column if token else None
    head = rule.head
    while isinstance(head, (Boxplus, Boxminus)):
        head = head.operand
    if not isinstance(head, Relational):
        raise ParseError(f"head may only nest BOXPLUS/BOXMINUS over a relational atom, got {rule.head}",
                         line, column)
    required = rule.required_atoms()
    if not required:
        raise ParseError("body has no relational atom", line, column)
    bound = set()
    for atom in required:
        bound |= atom.variables()
    unsafe = sorted(rule.variables() - bound)
    if unsafe:
        raise ParseError(f"unsafe variable(s) {', '.join(unsafe)}: each must occur in a body relational atom",
                         line, column)
    return rule


def _source_lines(text: str) -> Iterator[Tuple[int, str]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('%', 1)[0]
        if line.strip():
            yield number, line


def _check_arity(arities: Dict[str, int], atom: Relational, line: int):
    expected = arities.setdefault(atom.predicate, len(atom.terms))
    if expected != len(atom.terms):
        raise ParseError(f"predicate {atom.predicate} used with arity {len(atom.terms)}, expected {expected}",
                         line)


def parse_rule(text: str) -> Rule:
    """Parse a single rule."""
    return Parser(tokenize(text, 1)).parse_rule()


def parse_atom(text: str) -> MetricAtom:
    """Parse a single metric atom."""
    parser = Parser(tokenize(text, 1))
    atom = parser.parse_metric()
    parser.expect_end()
    return atom


def parse_program(text: str) -> Program:
    """Parse a program file.

    Raises:
        ParseError: On syntax errors, unsafe rules, invalid operator
            intervals, forbidden head shapes or arity mismatches
    """
    rules = []
    arities: Dict[str, int] = {}
    for number, line in _source_lines(text):
        rule = Parser(tokenize(line, number)).parse_rule()
        for atom in [rule.head_atom()] + [rel for body in rule.body for rel in body.relational_atoms()]:
            _check_arity(arities, atom, number)
        rules.append(rule)
    return Program(tuple(rules))


def parse_fact(text: str) -> Fact:
    """Parse a single fact such as ``R(a)@[0,1]``."""
    return Parser(tokenize(text, 1)).parse_fact()


def parse_dataset(text: str) -> List[Fact]:
    """Parse a dataset file into facts, one per nonempty line.

    Raises:
        ParseError: On syntax errors, variables, unbounded intervals or
            arity mismatches
    """
    facts = []
    arities: Dict[str, int] = {}
    for number, line in _source_lines(text):
        fact = Parser(tokenize(line, number)).parse_fact()
        _check_arity(arities, Relational(fact.predicate, fact.constants), number)
        facts.append(fact)
    return facts


def parse_interval(text: str) -> Interval:
    """Parse an interval literal such as ``(24,34]``."""
    parser = Parser(tokenize(text, 1))
    interval = parser.parse_interval()
    parser.expect_end()
    return interval


def format_interval(interval: Interval) -> str:
    return str(interval)


__all__ = [
    'GroundAtom', 'MetricAtom', 'Top', 'Bottom', 'Relational', 'Boxplus', 'Boxminus',
    'Diamondplus', 'Diamondminus', 'Since', 'Until', 'Rule', 'Program', 'Fact', 'Ruler',
    'Substitution', 'parse_program', 'parse_dataset', 'parse_rule', 'parse_atom', 'parse_fact',
    'parse_interval', 'program_depth', 'ruler_points', 'validate_rule', 'format_rational',
]
