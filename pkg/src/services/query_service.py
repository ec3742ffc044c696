"""
Query Service - SPARQL subset for competency questions
SELECT [DISTINCT] with basic graph patterns, FILTER (REGEX, str, =, !=, &&, ||, !),
GROUP BY and COUNT aggregates, plus the competency question library
"""

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from string import Template
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from src.services.reasoning_service import InferredGraph
from src.services.triple_store import (
    BlankNode, Graph, Iri, Literal, PatternTerm, Term, Variable,
    RDF_TYPE, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_NS, XSD_STRING, term_key,
)
from src.utils.config import get_settings, load_yaml_file
from src.utils.error_handler import (
    CompetencyQuestionError, QuerySyntaxError, UnsupportedFeatureError, ValidationError,
    handle_service_errors,
)
from src.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

XSD_DOUBLE = Iri(XSD_NS + "double")
NUMERIC_TYPES = {XSD_INTEGER, XSD_DECIMAL, XSD_DOUBLE}

# Keywords of full SPARQL that this engine rejects by name
UNSUPPORTED_KEYWORDS = {
    'OPTIONAL', 'UNION', 'MINUS', 'BIND', 'VALUES', 'SERVICE', 'GRAPH', 'ORDER', 'LIMIT', 'OFFSET',
    'HAVING', 'CONSTRUCT', 'ASK', 'DESCRIBE', 'FROM', 'BASE', 'REDUCED', 'EXISTS', 'INSERT', 'DELETE',
    'LOAD', 'CLEAR', 'WITH',
}
UNSUPPORTED_AGGREGATES = {'SUM', 'AVG', 'MIN', 'MAX', 'SAMPLE', 'GROUP_CONCAT'}
PATH_OPERATORS = {'*', '+', '?', '/', '|', '^'}

_TOKEN_SPEC = [
    ('WS', r'\s+'),
    ('COMMENT', r'#[^\n]*'),
    ('IRIREF', r'<[^<>"{}|^`\\\s]*>'),
    ('VAR', r'[?$][A-Za-z_][A-Za-z0-9_]*'),
    ('STRING', r'"(?:[^"\\\n]|\\.)*"|\'(?:[^\'\\\n]|\\.)*\''),
    ('LANGTAG', r'@[A-Za-z]+(?:-[A-Za-z0-9]+)*'),
    ('DTMARK', r'\^\^'),
    ('BNODE', r'_:[A-Za-z0-9_]+|\[\s*\]'),
    ('NUMBER', r'(?:\d+\.\d+|\d+)(?:[eE][+-]?\d+)?'),
    ('PNAME', r'(?:[A-Za-z][A-Za-z0-9_\-]*(?:\.[A-Za-z0-9_\-]+)*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?'),
    ('WORD', r'[A-Za-z_][A-Za-z0-9_]*'),
    ('OP', r'!=|&&|\|\||<=|>=|[{}().;,*=!<>/|^+?\[\]-]'),
    ('MISMATCH', r'.'),
]
_TOKEN_RE = re.compile('|'.join(f'(?P<{name}>{pattern})' for name, pattern in _TOKEN_SPEC))

# Conservative regex subset: literal text, classes, anchors, '.', '*', '+'
_REGEX_FORBIDDEN = re.compile(r'(?<!\\)[(){}|?]|\\[1-9]')
_STRING_ESCAPE = re.compile(r'\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|.)')


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    position: int


_ESCAPES = {'t': '\t', 'n': '\n', 'r': '\r', 'b': '\b', 'f': '\f', '"': '"', "'": "'", '\\': '\\'}


def _unescape(body: str, position: int) -> str:
    """Decode string escapes of a quoted literal body"""
    def replace(match: re.Match) -> str:
        escape = match.group(1)
        if escape[0] in ('u', 'U'):
            return chr(int(escape[1:], 16))
        return _ESCAPES[escape]
    try:
        return _STRING_ESCAPE.sub(replace, body)
    except KeyError as e:
        raise QuerySyntaxError(f"invalid escape '\\{e.args[0]}'", position) from e


def tokenize(text: str) -> List[Token]:
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind in ('WS', 'COMMENT'):
            continue
        if kind == 'MISMATCH':
            raise QuerySyntaxError("unexpected character", m.start(), m.group())
        tokens.append(Token(kind, m.group(), m.start()))
    tokens.append(Token('EOF', '', len(text)))
    return tokens


# Filter expression tree

@dataclass(frozen=True)
class VarExpr:
    variable: Variable


@dataclass(frozen=True)
class ConstExpr:
    term: Term


@dataclass(frozen=True)
class StrExpr:
    argument: "FilterExpr"


@dataclass(frozen=True)
class RegexExpr:
    text: "FilterExpr"
    pattern: str
    flags: str = ""


@dataclass(frozen=True)
class EqualsExpr:
    left: "FilterExpr"
    right: "FilterExpr"
    negated: bool = False


@dataclass(frozen=True)
class AndExpr:
    left: "FilterExpr"
    right: "FilterExpr"


@dataclass(frozen=True)
class OrExpr:
    left: "FilterExpr"
    right: "FilterExpr"


@dataclass(frozen=True)
class NotExpr:
    argument: "FilterExpr"


FilterExpr = Union[VarExpr, ConstExpr, StrExpr, RegexExpr, EqualsExpr, AndExpr, OrExpr, NotExpr]


def expression_variables(expr: FilterExpr) -> Set[Variable]:
    if isinstance(expr, VarExpr):
        return {expr.variable}
    if isinstance(expr, ConstExpr):
        return set()
    if isinstance(expr, (StrExpr, NotExpr)):
        return expression_variables(expr.argument)
    if isinstance(expr, RegexExpr):
        return expression_variables(expr.text)
    return expression_variables(expr.left) | expression_variables(expr.right)


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def terms(self) -> Tuple[PatternTerm, PatternTerm, PatternTerm]:
        return (self.subject, self.predicate, self.object)

    def variables(self) -> List[Variable]:
        return [t for t in self.terms() if isinstance(t, Variable)]


@dataclass(frozen=True)
class Aggregate:
    """COUNT([DISTINCT] ?v | *) AS ?alias"""
    function: str
    variable: Optional[Variable]
    distinct: bool
    alias: Variable


ProjectionItem = Union[Variable, Aggregate]


@dataclass(frozen=True)
class QueryPlan:
    """Parsed SELECT query"""
    prefixes: Dict[str, str]
    projection: Tuple[ProjectionItem, ...]
    distinct: bool
    patterns: Tuple[TriplePattern, ...]
    filters: Tuple[FilterExpr, ...] = ()
    group_by: Tuple[Variable, ...] = ()
    renames: Dict[Variable, Variable] = field(default_factory=dict)

    @property
    def aggregates(self) -> List[Aggregate]:
        return [item for item in self.projection if isinstance(item, Aggregate)]

    @property
    def header(self) -> Tuple[str, ...]:
        return tuple(item.alias.name if isinstance(item, Aggregate) else item.name for item in self.projection)

    def pattern_variables(self) -> List[Variable]:
        seen: List[Variable] = []
        for pattern in self.patterns:
            for var in pattern.variables():
                if var not in seen:
                    seen.append(var)
        return seen


Cell = Union[Term, int, None]


def _cell_key(cell: Cell) -> Tuple:
    if cell is None:
        return (0,)
    if isinstance(cell, int):
        return (9, cell)
    key = term_key(cell)
    return (key[0] + 1,) + key[1:]


def _render_cell(cell: Cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, int):
        return str(cell)
    if isinstance(cell, Iri):
        return cell.value
    if isinstance(cell, BlankNode):
        return str(cell)
    return cell.lexical.replace('\t', ' ').replace('\r', '').replace('\n', ' ')


@dataclass(frozen=True)
class SolutionTable:
    """Query result with a deterministic row order"""
    header: Tuple[str, ...]
    rows: Tuple[Tuple[Cell, ...], ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValidationError(f"Row arity {len(row)} does not match header arity {len(self.header)}",
                                      "rows")

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> List[Cell]:
        index = self.header.index(name)
        return [row[index] for row in self.rows]

    def as_dicts(self) -> List[Dict[str, Cell]]:
        return [dict(zip(self.header, row)) for row in self.rows]

    def to_tsv(self) -> str:
        lines = ["\t".join(self.header)]
        lines.extend("\t".join(_render_cell(cell) for cell in row) for row in self.rows)
        return "\n".join(lines) + "\n"


class QueryParser:
    """Recursive descent parser for the supported SELECT subset"""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0
        self.prefixes: Dict[str, str] = {}

    # Token helpers

    def _peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def _next(self) -> Token:
        token = self._peek()
        self.index += 1
        return token

    def _is_keyword(self, word: str, token: Optional[Token] = None) -> bool:
        token = token or self._peek()
        return token.kind == 'WORD' and token.value.upper() == word

    def _is_op(self, op: str, token: Optional[Token] = None) -> bool:
        token = token or self._peek()
        return token.kind == 'OP' and token.value == op

    def _fail(self, message: str, token: Optional[Token] = None):
        token = token or self._peek()
        if token.kind == 'WORD' and token.value.upper() in UNSUPPORTED_KEYWORDS:
            raise UnsupportedFeatureError(token.value.upper(), token.position)
        if token.kind == 'EOF':
            raise QuerySyntaxError(f"{message}, found end of query", token.position)
        raise QuerySyntaxError(message, token.position, token.value)

    def _expect_op(self, op: str) -> Token:
        if not self._is_op(op):
            self._fail(f"expected '{op}'")
        return self._next()

    def _expect_keyword(self, word: str) -> Token:
        if not self._is_keyword(word):
            self._fail(f"expected {word}")
        return self._next()

    def _expect_var(self) -> Variable:
        token = self._peek()
        if token.kind != 'VAR':
            self._fail("expected a variable")
        self._next()
        return Variable(token.value[1:])

    # Grammar

    def parse(self) -> QueryPlan:
        self._prologue()
        if not self._is_keyword('SELECT'):
            self._fail("expected SELECT")
        self._next()

        distinct = False
        if self._is_keyword('DISTINCT'):
            self._next()
            distinct = True

        projection, select_all = self._projection()

        if self._is_keyword('WHERE'):
            self._next()
        elif not self._is_op('{'):
            self._fail("expected WHERE")
        patterns, filters = self._group_graph_pattern()

        group_by: List[Variable] = []
        if self._is_keyword('GROUP'):
            self._next()
            self._expect_keyword('BY')
            group_by.append(self._expect_var())
            while self._peek().kind == 'VAR':
                group_by.append(self._expect_var())

        if self._peek().kind != 'EOF':
            self._fail("unexpected trailing input")

        plan = QueryPlan(
            prefixes=dict(self.prefixes),
            projection=tuple(projection),
            distinct=distinct,
            patterns=tuple(patterns),
            filters=tuple(filters),
            group_by=tuple(group_by),
        )
        if select_all:
            plan = QueryPlan(plan.prefixes, tuple(plan.pattern_variables()), plan.distinct, plan.patterns,
                             plan.filters, plan.group_by)
        return _validate_plan(plan)

    def _prologue(self) -> None:
        while True:
            token = self._peek()
            if self._is_keyword('PREFIX'):
                self._next()
                name = self._peek()
                if name.kind != 'PNAME' or not name.value.endswith(':') or name.value.count(':') != 1:
                    self._fail("expected a prefix name ending in ':'")
                self._next()
                iri = self._peek()
                if iri.kind != 'IRIREF':
                    self._fail("expected an IRI in angle brackets")
                self._next()
                self.prefixes[name.value[:-1]] = iri.value[1:-1]
            elif token.kind == 'WORD' and token.value.upper() in UNSUPPORTED_KEYWORDS:
                raise UnsupportedFeatureError(token.value.upper(), token.position)
            else:
                return

    def _projection(self) -> Tuple[List[ProjectionItem], bool]:
        if self._is_op('*'):
            self._next()
            return [], True

        items: List[ProjectionItem] = []
        while True:
            token = self._peek()
            if token.kind == 'VAR':
                items.append(self._expect_var())
            elif self._is_op('('):
                items.append(self._aggregate())
            else:
                break
        if not items:
            self._fail("expected a projection")
        return items, False

    def _aggregate(self) -> Aggregate:
        self._expect_op('(')
        name = self._peek()
        if name.kind != 'WORD':
            self._fail("expected an aggregate")
        if name.value.upper() in UNSUPPORTED_AGGREGATES:
            raise UnsupportedFeatureError(f"{name.value.upper()} aggregate", name.position)
        if name.value.upper() != 'COUNT':
            self._fail("expected COUNT")
        self._next()
        self._expect_op('(')
        distinct = False
        if self._is_keyword('DISTINCT'):
            self._next()
            distinct = True
        if self._is_op('*'):
            self._next()
            variable = None
        else:
            variable = self._expect_var()
        self._expect_op(')')
        self._expect_keyword('AS')
        alias = self._expect_var()
        self._expect_op(')')
        return Aggregate('COUNT', variable, distinct, alias)

    def _group_graph_pattern(self) -> Tuple[List[TriplePattern], List[FilterExpr]]:
        self._expect_op('{')
        patterns: List[TriplePattern] = []
        filters: List[FilterExpr] = []
        while not self._is_op('}'):
            token = self._peek()
            if token.kind == 'EOF':
                self._fail("expected '}'")
            if self._is_keyword('FILTER'):
                self._next()
                filters.append(self._filter_constraint())
                if self._is_op('.'):
                    self._next()
                continue
            if self._is_op('{'):
                raise UnsupportedFeatureError("nested group patterns", token.position)
            if self._is_keyword('SELECT'):
                raise UnsupportedFeatureError("subqueries", token.position)
            if token.kind == 'WORD' and token.value.upper() in UNSUPPORTED_KEYWORDS:
                raise UnsupportedFeatureError(token.value.upper(), token.position)
            patterns.extend(self._triples_block())
            if self._is_op('.'):
                self._next()
        self._next()
        return patterns, filters

    def _triples_block(self) -> List[TriplePattern]:
        subject = self._pattern_term(position='subject')
        patterns: List[TriplePattern] = []
        while True:
            predicate = self._verb()
            while True:
                obj = self._pattern_term(position='object')
                patterns.append(TriplePattern(subject, predicate, obj))
                if self._is_op(','):
                    self._next()
                    continue
                break
            if self._is_op(';'):
                self._next()
                # trailing ';' before '.', FILTER or '}'
                if self._is_op('.') or self._is_op('}') or self._is_keyword('FILTER'):
                    break
                continue
            break
        return patterns

    def _verb(self) -> PatternTerm:
        token = self._peek()
        if self._is_keyword('A') and token.value == 'a':
            self._next()
            predicate: PatternTerm = RDF_TYPE
        elif token.kind == 'VAR':
            predicate = self._expect_var()
        elif token.kind in ('IRIREF', 'PNAME'):
            predicate = self._iri()
        elif token.kind == 'OP' and token.value in ('^', '!', '('):
            raise UnsupportedFeatureError("property paths", token.position)
        else:
            self._fail("expected a predicate")
        after = self._peek()
        if after.kind == 'OP' and after.value in PATH_OPERATORS:
            raise UnsupportedFeatureError("property paths", after.position)
        return predicate

    def _pattern_term(self, position: str) -> PatternTerm:
        token = self._peek()
        if token.kind == 'VAR':
            return self._expect_var()
        if token.kind in ('IRIREF', 'PNAME'):
            return self._iri()
        if token.kind == 'BNODE' or self._is_op('['):
            raise UnsupportedFeatureError("blank nodes in patterns", token.position)
        if self._is_op('('):
            raise UnsupportedFeatureError("collections", token.position)
        if position == 'object':
            literal = self._literal()
            if literal is not None:
                return literal
        self._fail(f"expected a {position}")

    def _iri(self) -> Iri:
        token = self._next()
        if token.kind == 'IRIREF':
            return Iri(token.value[1:-1])
        prefix, _, local = token.value.partition(':')
        if prefix not in self.prefixes:
            raise QuerySyntaxError(f"undeclared prefix '{prefix}'", token.position, token.value)
        return Iri(self.prefixes[prefix] + local)

    def _literal(self) -> Optional[Literal]:
        token = self._peek()
        if token.kind == 'STRING':
            self._next()
            lexical = _unescape(token.value[1:-1], token.position)
            if self._peek().kind == 'LANGTAG':
                return Literal(lexical, lang_tag=self._next().value[1:])
            if self._peek().kind == 'DTMARK':
                self._next()
                if self._peek().kind not in ('IRIREF', 'PNAME'):
                    self._fail("expected a datatype IRI")
                return Literal(lexical, datatype=self._iri())
            return Literal(lexical)
        if token.kind == 'NUMBER':
            self._next()
            if 'e' in token.value.lower():
                return Literal(token.value, datatype=XSD_DOUBLE)
            return Literal(token.value, datatype=XSD_DECIMAL if '.' in token.value else XSD_INTEGER)
        if token.kind == 'OP' and token.value == '-' and self._peek(1).kind == 'NUMBER':
            self._next()
            number = self._next()
            datatype = XSD_DECIMAL if '.' in number.value else XSD_INTEGER
            return Literal('-' + number.value, datatype=datatype)
        if token.kind == 'WORD' and token.value in ('true', 'false'):
            self._next()
            return Literal(token.value, datatype=XSD_BOOLEAN)
        return None

    # Filters

    def _filter_constraint(self) -> FilterExpr:
        if self._is_op('('):
            self._next()
            expr = self._or_expression()
            self._expect_op(')')
            return expr
        token = self._peek()
        if token.kind == 'WORD':
            return self._call()
        self._fail("expected a filter constraint")

    def _or_expression(self) -> FilterExpr:
        expr = self._and_expression()
        while self._is_op('||'):
            self._next()
            expr = OrExpr(expr, self._and_expression())
        return expr

    def _and_expression(self) -> FilterExpr:
        expr = self._unary_expression()
        while self._is_op('&&'):
            self._next()
            expr = AndExpr(expr, self._unary_expression())
        return expr

    def _unary_expression(self) -> FilterExpr:
        if self._is_op('!'):
            self._next()
            return NotExpr(self._unary_expression())
        left = self._primary_expression()
        token = self._peek()
        if self._is_op('=') or self._is_op('!='):
            self._next()
            right = self._primary_expression()
            return EqualsExpr(left, right, negated=token.value == '!=')
        if token.kind == 'OP' and token.value in ('<', '>', '<=', '>='):
            raise UnsupportedFeatureError(f"comparison operator '{token.value}'", token.position)
        return left

    def _primary_expression(self) -> FilterExpr:
        token = self._peek()
        if self._is_op('('):
            self._next()
            expr = self._or_expression()
            self._expect_op(')')
            return expr
        if token.kind == 'VAR':
            return VarExpr(self._expect_var())
        if token.kind in ('IRIREF', 'PNAME'):
            return ConstExpr(self._iri())
        if token.kind == 'WORD' and token.value not in ('true', 'false'):
            return self._call()
        literal = self._literal()
        if literal is not None:
            return ConstExpr(literal)
        self._fail("expected an expression")

    def _call(self) -> FilterExpr:
        token = self._next()
        name = token.value.upper()
        if name == 'STR':
            self._expect_op('(')
            argument = self._or_expression()
            self._expect_op(')')
            return StrExpr(argument)
        if name == 'REGEX':
            self._expect_op('(')
            text = self._or_expression()
            self._expect_op(',')
            pattern_token = self._peek()
            if pattern_token.kind != 'STRING':
                self._fail("REGEX pattern must be a string literal")
            self._next()
            pattern = _unescape(pattern_token.value[1:-1], pattern_token.position)
            _check_regex(pattern, pattern_token.position)
            flags = ""
            if self._is_op(','):
                self._next()
                flags_token = self._peek()
                if flags_token.kind != 'STRING':
                    self._fail("REGEX flags must be a string literal")
                self._next()
                flags = _unescape(flags_token.value[1:-1], flags_token.position)
                if flags not in ("", "i"):
                    raise UnsupportedFeatureError(f"REGEX flags '{flags}'", flags_token.position)
            self._expect_op(')')
            return RegexExpr(text, pattern, flags)
        if name in UNSUPPORTED_KEYWORDS:
            raise UnsupportedFeatureError(name, token.position)
        raise UnsupportedFeatureError(f"function {name}", token.position)


def _check_regex(pattern: str, position: int) -> None:
    forbidden = _REGEX_FORBIDDEN.search(pattern)
    if forbidden:
        raise UnsupportedFeatureError(f"regex construct '{forbidden.group()}'", position)
    try:
        re.compile(pattern)
    except re.error as e:
        raise QuerySyntaxError(f"invalid regular expression: {e}", position, pattern) from e


_NAME_SUFFIX = re.compile(r'^(.*?)(_\d+)?$')


def _abbreviates(short: str, full: str) -> bool:
    """formal_1 abbreviates formalization_1: same numeric suffix, stem is a proper prefix"""
    short_stem, short_suffix = _NAME_SUFFIX.match(short).groups()
    full_stem, full_suffix = _NAME_SUFFIX.match(full).groups()
    return (short_suffix == full_suffix and bool(short_stem)
            and full_stem.startswith(short_stem) and full_stem != short_stem)


def _validate_plan(plan: QueryPlan) -> QueryPlan:
    """Scope checks plus dangling projection repair"""
    pattern_vars = plan.pattern_variables()
    filter_vars: Set[Variable] = set()
    for expr in plan.filters:
        filter_vars |= expression_variables(expr)

    for var in sorted(filter_vars - set(pattern_vars), key=lambda v: v.name):
        raise QuerySyntaxError(f"filter variable ?{var.name} is not bound by any pattern", 0)

    aggregates = plan.aggregates
    aggregate_vars = {agg.variable for agg in aggregates if agg.variable is not None}
    plain = [item for item in plan.projection if isinstance(item, Variable)]
    if aggregates or plan.group_by:
        for var in plain:
            if var not in plan.group_by:
                raise QuerySyntaxError(f"projected variable ?{var.name} must appear in GROUP BY", 0)

    names = [name for name in plan.header]
    if len(names) != len(set(names)):
        raise QuerySyntaxError("duplicate projected name", 0)

    renames: Dict[Variable, Variable] = {}
    dangling = [var for var in plain if var not in pattern_vars]
    if len(dangling) == 1 and pattern_vars:
        used = set(plain) | filter_vars | set(plan.group_by) | aggregate_vars
        candidates = [var for var in pattern_vars if var not in used and _abbreviates(var.name, dangling[0].name)]
        if len(candidates) == 1:
            renames[dangling[0]] = candidates[0]
            logger.warning(f"Projected ?{dangling[0].name} is never bound; reading it from ?{candidates[0].name}")

    if not renames:
        return plan
    return QueryPlan(plan.prefixes, plan.projection, plan.distinct, plan.patterns, plan.filters,
                     plan.group_by, renames)


@handle_service_errors
def parse_query(text: str) -> QueryPlan:
    """Parse query text in the supported subset"""
    return QueryParser(text).parse()


# Evaluation

class _ExpressionError(Exception):
    """Type error inside a filter; the filter evaluates to false"""


def _numeric(term: Term) -> Optional[Decimal]:
    if isinstance(term, Literal) and term.datatype in NUMERIC_TYPES:
        try:
            return Decimal(term.lexical)
        except InvalidOperation:
            return None
    return None


def _evaluate(expr: FilterExpr, solution: Mapping[Variable, Term]) -> Union[Term, bool]:
    if isinstance(expr, VarExpr):
        value = solution.get(expr.variable)
        if value is None:
            raise _ExpressionError(f"unbound ?{expr.variable.name}")
        return value
    if isinstance(expr, ConstExpr):
        return expr.term
    if isinstance(expr, StrExpr):
        value = _evaluate(expr.argument, solution)
        if isinstance(value, Iri):
            return Literal(value.value)
        if isinstance(value, Literal):
            return Literal(value.lexical)
        raise _ExpressionError("str() of a blank node")
    if isinstance(expr, RegexExpr):
        value = _evaluate(expr.text, solution)
        if not isinstance(value, Literal) or not (value.lang_tag or value.datatype == XSD_STRING):
            raise _ExpressionError("REGEX needs a string")
        flags = re.IGNORECASE if 'i' in expr.flags else 0
        return re.search(expr.pattern, value.lexical, flags) is not None
    if isinstance(expr, EqualsExpr):
        left, right = _evaluate(expr.left, solution), _evaluate(expr.right, solution)
        left_num = _numeric(left) if not isinstance(left, bool) else None
        right_num = _numeric(right) if not isinstance(right, bool) else None
        if left_num is not None and right_num is not None:
            equal = left_num == right_num
        else:
            equal = left == right
        return equal != expr.negated
    if isinstance(expr, NotExpr):
        return not _effective_boolean(_evaluate(expr.argument, solution))
    if isinstance(expr, AndExpr):
        return _logical(expr.left, expr.right, solution, conjunction=True)
    if isinstance(expr, OrExpr):
        return _logical(expr.left, expr.right, solution, conjunction=False)
    raise _ExpressionError(f"unknown expression {expr!r}")


def _logical(left: FilterExpr, right: FilterExpr, solution: Mapping[Variable, Term], conjunction: bool) -> bool:
    results = []
    for side in (left, right):
        try:
            results.append(_effective_boolean(_evaluate(side, solution)))
        except _ExpressionError:
            results.append(None)
    if conjunction:
        if False in results:
            return False
        if None in results:
            raise _ExpressionError("error in conjunction")
        return True
    if True in results:
        return True
    if None in results:
        raise _ExpressionError("error in disjunction")
    return False


def _effective_boolean(value: Union[Term, bool]) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, Literal):
        if value.datatype == XSD_BOOLEAN:
            return value.lexical == 'true'
        number = _numeric(value)
        if number is not None:
            return number != 0
        if value.lang_tag or value.datatype == XSD_STRING:
            return len(value.lexical) > 0
    raise _ExpressionError("no effective boolean value")


def _passes(filters: Sequence[FilterExpr], solution: Mapping[Variable, Term]) -> bool:
    for expr in filters:
        try:
            if not _effective_boolean(_evaluate(expr, solution)):
                return False
        except _ExpressionError:
            return False
    return True


def _join_order(patterns: Sequence[TriplePattern]) -> List[TriplePattern]:
    """Most-bound-first, ties broken left to right"""
    remaining = list(patterns)
    bound: Set[Variable] = set()
    ordered = []
    while remaining:
        def boundness(pattern: TriplePattern) -> int:
            return sum(1 for t in pattern.terms() if not isinstance(t, Variable) or t in bound)
        best = max(remaining, key=boundness)
        remaining.remove(best)
        ordered.append(best)
        bound.update(best.variables())
    return ordered


def _resolve(term: PatternTerm, solution: Mapping[Variable, Term]) -> Optional[Term]:
    if isinstance(term, Variable):
        return solution.get(term)
    return term


def _match_pattern(graph: Graph, pattern: TriplePattern, solution: Dict[Variable, Term]) -> Iterator[Dict]:
    s, p, o = (_resolve(t, solution) for t in pattern.terms())
    if isinstance(s, Literal) or (p is not None and not isinstance(p, Iri)):
        return
    for triple in graph.triples(s, p, o):
        extended = dict(solution)
        consistent = True
        for pattern_term, value in zip(pattern.terms(), (triple.subject, triple.predicate, triple.object)):
            if isinstance(pattern_term, Variable):
                if extended.setdefault(pattern_term, value) != value:
                    consistent = False
                    break
        if consistent:
            yield extended


def basic_graph_pattern(graph: Graph, patterns: Sequence[TriplePattern]) -> List[Dict[Variable, Term]]:
    """All solutions of the conjunctive pattern (bag semantics)"""
    solutions: List[Dict[Variable, Term]] = [{}]
    for pattern in _join_order(patterns):
        solutions = [extended for solution in solutions for extended in _match_pattern(graph, pattern, solution)]
        if not solutions:
            break
    return solutions


@handle_service_errors
@performance_monitor.track_operation("execute_query")
def execute(ig: Union[InferredGraph, Graph], plan: QueryPlan) -> SolutionTable:
    """Evaluate plan over base and inferred triples"""
    graph = ig.closure if isinstance(ig, InferredGraph) else ig
    solutions = [s for s in basic_graph_pattern(graph, plan.patterns) if _passes(plan.filters, s)]

    def lookup(solution: Mapping[Variable, Term], var: Variable) -> Optional[Term]:
        return solution.get(plan.renames.get(var, var))

    rows: List[Tuple[Cell, ...]] = []
    if plan.aggregates or plan.group_by:
        groups: Dict[Tuple, List[Dict[Variable, Term]]] = {}
        for solution in solutions:
            key = tuple(lookup(solution, var) for var in plan.group_by)
            groups.setdefault(key, []).append(solution)
        if not plan.group_by and not groups:
            groups[()] = []
        for key, members in groups.items():
            keyed = dict(zip(plan.group_by, key))
            row: List[Cell] = []
            for item in plan.projection:
                if isinstance(item, Aggregate):
                    row.append(_count(item, members, lookup))
                else:
                    row.append(keyed.get(item))
            rows.append(tuple(row))
    else:
        for solution in solutions:
            rows.append(tuple(lookup(solution, var) for var in plan.projection))

    if plan.distinct:
        rows = list(dict.fromkeys(rows))
    rows.sort(key=lambda r: tuple(_cell_key(cell) for cell in r))
    logger.debug(f"Query produced {len(rows)} rows from {len(solutions)} solutions")
    return SolutionTable(plan.header, tuple(rows))


def _count(aggregate: Aggregate, members: List[Dict[Variable, Term]], lookup) -> int:
    if aggregate.variable is None:
        values = [tuple(sorted(m.items(), key=lambda kv: kv[0].name)) for m in members]
    else:
        values = [lookup(m, aggregate.variable) for m in members]
        values = [v for v in values if v is not None]
    return len(set(values)) if aggregate.distinct else len(values)


def brute_force_bgp(graph: Graph, patterns: Sequence[TriplePattern]) -> Counter:
    """Nested-loop join over every triple; reference for the planner"""
    all_triples = list(graph.triples())
    solutions: List[Dict[Variable, Term]] = [{}]
    for pattern in patterns:
        extended_solutions = []
        for solution in solutions:
            for triple in all_triples:
                candidate = dict(solution)
                ok = True
                for pattern_term, value in zip(pattern.terms(), (triple.subject, triple.predicate, triple.object)):
                    if isinstance(pattern_term, Variable):
                        if candidate.setdefault(pattern_term, value) != value:
                            ok = False
                            break
                    elif pattern_term != value:
                        ok = False
                        break
                if ok:
                    extended_solutions.append(candidate)
        solutions = extended_solutions
    return Counter(frozenset(s.items()) for s in solutions)


# Competency questions

@dataclass(frozen=True)
class CompetencyQuestion:
    """Stored query template with ${name} placeholders"""
    id: str
    question: str
    template: str
    placeholders: Dict[str, str] = field(default_factory=dict)
    optional_clauses: Dict[str, str] = field(default_factory=dict)


def _render_binding(name: str, kind: str, value, question_id: str) -> str:
    if kind == 'iri':
        if isinstance(value, str):
            value = Iri(value)
        if not isinstance(value, Iri):
            raise CompetencyQuestionError(f"placeholder '{name}' of {question_id} needs an IRI", question_id)
        return f"<{value.value}>"
    if kind == 'text':
        text = value.lexical if isinstance(value, Literal) else str(value)
        return text.replace('\\', '\\\\').replace('"', '\\"')
    raise CompetencyQuestionError(f"unknown placeholder kind '{kind}' in {question_id}", question_id)


class CompetencyLibrary:
    """Competency question templates loaded from YAML"""

    def __init__(self, questions: Optional[Dict[str, CompetencyQuestion]] = None):
        self.questions: Dict[str, CompetencyQuestion] = dict(questions or {})

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CompetencyLibrary":
        raw = load_yaml_file(str(path))
        questions = {}
        for question_id, entry in (raw.get('questions') or {}).items():
            question_id = str(question_id)
            if not isinstance(entry, dict) or 'template' not in entry:
                raise ValidationError(f"{path}: question {question_id} has no template", "template")
            questions[question_id] = CompetencyQuestion(
                id=question_id,
                question=entry.get('question', ''),
                template=entry['template'],
                placeholders=dict(entry.get('placeholders') or {}),
                optional_clauses=dict(entry.get('optional_clauses') or {}),
            )
        logger.debug(f"Loaded {len(questions)} competency questions from {path}")
        return cls(questions)

    def merge(self, other: "CompetencyLibrary") -> "CompetencyLibrary":
        """Questions of other override same-id questions of self"""
        return CompetencyLibrary({**self.questions, **other.questions})

    def ids(self) -> List[str]:
        return sorted(self.questions)

    def get(self, question_id: str) -> CompetencyQuestion:
        if question_id not in self.questions:
            known = ", ".join(self.ids())
            raise CompetencyQuestionError(f"unknown competency question '{question_id}' (known: {known})",
                                          question_id)
        return self.questions[question_id]

    def render(self, question_id: str, bindings: Mapping[str, object]) -> str:
        """Query text with placeholders substituted"""
        question = self.get(question_id)
        values: Dict[str, str] = {}
        for name, kind in question.placeholders.items():
            if name in bindings and bindings[name] is not None:
                values[name] = _render_binding(name, kind, bindings[name], question_id)

        clauses: Dict[str, str] = {}
        for clause, fragment in question.optional_clauses.items():
            needed = {m.group('named') or m.group('braced') for m in Template.pattern.finditer(fragment)
                      if m.group('named') or m.group('braced')}
            clauses[clause] = Template(fragment).substitute(values) if needed <= set(values) else ""

        optional_names = set()
        for fragment in question.optional_clauses.values():
            optional_names |= {m.group('named') or m.group('braced') for m in Template.pattern.finditer(fragment)
                               if m.group('named') or m.group('braced')}
        for name in question.placeholders:
            if name not in values and name not in optional_names:
                raise CompetencyQuestionError(f"missing placeholder '{name}' for {question_id}", question_id)

        try:
            return Template(question.template).substitute({**values, **clauses})
        except KeyError as e:
            raise CompetencyQuestionError(f"missing placeholder {e} for {question_id}", question_id) from e


_default_library: Optional[CompetencyLibrary] = None


def default_library() -> CompetencyLibrary:
    """Shipped competency questions"""
    global _default_library
    if _default_library is None:
        _default_library = CompetencyLibrary.load(get_settings().questions_file)
    return _default_library


@handle_service_errors
@performance_monitor.track_operation("ask_competency")
def ask_competency(ig: Union[InferredGraph, Graph], question_id: str,
                   bindings: Optional[Mapping[str, object]] = None,
                   library: Optional[CompetencyLibrary] = None) -> SolutionTable:
    """Instantiate a stored competency question and execute it"""
    library = library or default_library()
    text = library.render(question_id, bindings or {})
    logger.info(f"Asking {question_id}", extra={'question_id': question_id})
    return execute(ig, parse_query(text))
