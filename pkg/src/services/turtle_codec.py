"""
Turtle Codec - parser and deterministic serializer for the supported Turtle subset
Subset: @prefix / PREFIX, IRIs, prefixed names, strings with language tag or datatype,
integers, decimals, doubles, booleans, `a`, predicate lists `;`, object lists `,`, labeled blank nodes
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

from src.services.triple_store import (
    BlankNode, Graph, Iri, Literal, Term, Triple, RDF_TYPE,
    XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_NS, XSD_STRING,
)
from src.utils.error_handler import (
    TurtleSyntaxError, UndeclaredPrefixError, ValidationError, handle_service_errors,
)
from src.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

XSD_DOUBLE = Iri(XSD_NS + "double")

PN_PREFIX = r'[A-Za-z][A-Za-z0-9_\-]*'
PN_LOCAL = r'[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?'
_LOCAL_NAME = re.compile(rf'^{PN_LOCAL}$')

_TOKEN_SPEC = [
    ('NEWLINE', r'\n'),
    ('SKIP', r'[ \t\r]+'),
    ('COMMENT', r'#[^\n]*'),
    ('IRIREF', r'<[^<>"{}|^`\\\x00-\x20]*>'),
    ('LONG_STRING', r'"""|\'\'\''),
    ('STRING', r'"(?:[^"\\\n]|\\.)*"|\'(?:[^\'\\\n]|\\.)*\''),
    ('AT_WORD', r'@[A-Za-z]+(?:-[A-Za-z0-9]+)*'),
    ('DATATYPE_MARK', r'\^\^'),
    ('NUMBER', r'[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+|\d*\.\d+|\d+)'),
    ('BNODE', r'_:[A-Za-z0-9_][A-Za-z0-9_\-]*'),
    ('PNAME', rf'(?:{PN_PREFIX})?:(?:{PN_LOCAL})?'),
    ('WORD', r'[A-Za-z][A-Za-z0-9_\-]*'),
    ('PUNCT', r'[.;,]'),
    ('BRACKET', r'[\[\]()]'),
    ('MISMATCH', r'.'),
]
_TOKEN_REGEX = re.compile('|'.join(f'(?P<{name}>{pattern})' for name, pattern in _TOKEN_SPEC))

_ESCAPES = {'t': '\t', 'n': '\n', 'r': '\r', 'b': '\b', 'f': '\f', '"': '"', "'": "'", '\\': '\\'}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str, source: Optional[str]) -> Iterator[Token]:
    line = 1
    line_start = 0
    for mo in _TOKEN_REGEX.finditer(text):
        kind = mo.lastgroup
        value = mo.group()
        column = mo.start() - line_start + 1
        if kind == 'NEWLINE':
            line += 1
            line_start = mo.end()
            continue
        if kind in ('SKIP', 'COMMENT'):
            continue
        if kind == 'LONG_STRING':
            raise TurtleSyntaxError("multi-line literals are not supported", line, column, value, source)
        if kind == 'BRACKET':
            feature = "collections" if value in '()' else "anonymous blank nodes"
            raise TurtleSyntaxError(f"{feature} are not supported", line, column, value, source)
        if kind == 'MISMATCH':
            raise TurtleSyntaxError("unexpected character", line, column, value, source)
        yield Token(kind, value, line, column)
    yield Token('EOF', '', line, len(text) - line_start + 1)


def _unescape(body: str, token: Token, source: Optional[str]) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != '\\':
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1] if i + 1 < len(body) else ''
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in ('u', 'U'):
            width = 4 if nxt == 'u' else 8
            digits = body[i + 2:i + 2 + width]
            if len(digits) != width or not all(c in '0123456789abcdefABCDEF' for c in digits):
                raise TurtleSyntaxError("invalid unicode escape", token.line, token.column, token.text, source)
            out.append(chr(int(digits, 16)))
            i += 2 + width
        else:
            raise TurtleSyntaxError(f"invalid escape '\\{nxt}'", token.line, token.column, token.text, source)
    return ''.join(out)


class TurtleParser:
    """Recursive-descent parser producing a Graph"""

    def __init__(self, text: str, source: Optional[str] = None):
        self.source = source
        self.tokens = list(_tokenize(text, source))
        self.position = 0
        self.graph = Graph()

    # Token helpers
    def _peek(self) -> Token:
        return self.tokens[self.position]

    def _next(self) -> Token:
        token = self.tokens[self.position]
        self.position += 1
        return token

    def _error(self, message: str, token: Token) -> TurtleSyntaxError:
        return TurtleSyntaxError(message, token.line, token.column, token.text or None, self.source)

    def _expect_punct(self, value: str) -> Token:
        token = self._next()
        if token.kind != 'PUNCT' or token.text != value:
            raise self._error(f"expected '{value}'", token)
        return token

    # Grammar
    def parse(self) -> Graph:
        while self._peek().kind != 'EOF':
            token = self._peek()
            if token.kind == 'AT_WORD' and token.text == '@prefix':
                self._next()
                self._prefix_declaration()
                self._expect_punct('.')
            elif token.kind == 'AT_WORD' and token.text == '@base':
                raise self._error("@base is not supported", token)
            elif token.kind == 'WORD' and token.text.upper() == 'PREFIX':
                self._next()
                self._prefix_declaration()
            else:
                self._triples()
                self._expect_punct('.')
        return self.graph

    def _prefix_declaration(self) -> None:
        name = self._next()
        if name.kind != 'PNAME' or not name.text.endswith(':'):
            raise self._error("expected prefix name ending in ':'", name)
        namespace = self._next()
        if namespace.kind != 'IRIREF':
            raise self._error("expected namespace IRI", namespace)
        self.graph.bind(name.text[:-1], self._iri_from_ref(namespace).value)

    def _triples(self) -> None:
        subject = self._subject()
        self._predicate_object_list(subject)

    def _predicate_object_list(self, subject: Term) -> None:
        while True:
            predicate = self._verb()
            self._object_list(subject, predicate)
            if not (self._peek().kind == 'PUNCT' and self._peek().text == ';'):
                return
            while self._peek().kind == 'PUNCT' and self._peek().text == ';':
                self._next()
            if self._peek().kind == 'PUNCT' and self._peek().text == '.':
                return

    def _object_list(self, subject: Term, predicate: Iri) -> None:
        while True:
            obj = self._object()
            self.graph.add(Triple(subject, predicate, obj))
            if self._peek().kind == 'PUNCT' and self._peek().text == ',':
                self._next()
                continue
            return

    def _subject(self) -> Term:
        token = self._next()
        if token.kind == 'IRIREF':
            return self._iri_from_ref(token)
        if token.kind == 'PNAME':
            return self._iri_from_pname(token)
        if token.kind == 'BNODE':
            return BlankNode(token.text[2:])
        if token.kind in ('STRING', 'NUMBER') or (token.kind == 'WORD' and token.text in ('true', 'false')):
            raise self._error("literal in subject position", token)
        raise self._error("expected subject", token)

    def _verb(self) -> Iri:
        token = self._next()
        if token.kind == 'WORD' and token.text == 'a':
            return RDF_TYPE
        if token.kind == 'IRIREF':
            return self._iri_from_ref(token)
        if token.kind == 'PNAME':
            return self._iri_from_pname(token)
        if token.kind == 'BNODE':
            raise self._error("blank node in predicate position", token)
        if token.kind in ('STRING', 'NUMBER'):
            raise self._error("literal in predicate position", token)
        raise self._error("expected predicate", token)

    def _object(self) -> Term:
        token = self._next()
        if token.kind == 'IRIREF':
            return self._iri_from_ref(token)
        if token.kind == 'PNAME':
            return self._iri_from_pname(token)
        if token.kind == 'BNODE':
            return BlankNode(token.text[2:])
        if token.kind == 'STRING':
            return self._literal(token)
        if token.kind == 'NUMBER':
            return self._number(token)
        if token.kind == 'WORD' and token.text in ('true', 'false'):
            return Literal(token.text, datatype=XSD_BOOLEAN)
        raise self._error("expected object", token)

    def _literal(self, token: Token) -> Literal:
        lexical = _unescape(token.text[1:-1], token, self.source)
        following = self._peek()
        if following.kind == 'AT_WORD' and following.text not in ('@prefix', '@base'):
            self._next()
            try:
                return Literal(lexical, lang_tag=following.text[1:])
            except ValidationError as e:
                raise self._error(e.message, following) from e
        if following.kind == 'DATATYPE_MARK':
            self._next()
            datatype_token = self._next()
            if datatype_token.kind == 'IRIREF':
                datatype = self._iri_from_ref(datatype_token)
            elif datatype_token.kind == 'PNAME':
                datatype = self._iri_from_pname(datatype_token)
            else:
                raise self._error("expected datatype IRI", datatype_token)
            return Literal(lexical, datatype=datatype)
        return Literal(lexical)

    def _number(self, token: Token) -> Literal:
        text = token.text
        if 'e' in text or 'E' in text:
            return Literal(text, datatype=XSD_DOUBLE)
        if '.' in text:
            return Literal(text, datatype=XSD_DECIMAL)
        return Literal(text, datatype=XSD_INTEGER)

    def _iri_from_ref(self, token: Token) -> Iri:
        try:
            return Iri(token.text[1:-1])
        except ValidationError as e:
            raise self._error(e.message, token) from e

    def _iri_from_pname(self, token: Token) -> Iri:
        prefix, _, local = token.text.partition(':')
        if prefix not in self.graph.prefixes:
            raise UndeclaredPrefixError(prefix, token.line, token.column, self.source)
        try:
            return Iri(self.graph.prefixes[prefix] + local)
        except ValidationError as e:
            raise self._error(e.message, token) from e


@handle_service_errors
@performance_monitor.track_operation("parse_turtle")
def parse_turtle(text: str, source: Optional[str] = None) -> Graph:
    """Parse a Turtle document in the supported subset"""
    graph = TurtleParser(text, source).parse()
    logger.debug(f"Parsed {len(graph)} triples from {source or 'text'}")
    return graph


def parse_turtle_file(path: str) -> Graph:
    """Read a UTF-8 .ttl file"""
    text = Path(path).read_text(encoding='utf-8')
    return parse_turtle(text, source=str(path))


class TurtleSerializer:
    """Deterministic writer: prefixes sorted, triples sorted by subject, predicate, object"""

    def __init__(self, graph: Graph):
        self.graph = graph
        self.prefixes = sorted(graph.prefixes.items())
        # longest namespace first so the most specific prefix wins
        self._by_length = sorted(self.prefixes, key=lambda item: (-len(item[1]), item[0]))
        self.blank_labels: Dict[BlankNode, str] = {}

    def serialize(self) -> str:
        if len(self.graph) == 0 and not self.prefixes:
            return ""

        lines = [f"@prefix {prefix}: <{namespace}> ." for prefix, namespace in self.prefixes]
        ordered = sorted(self.graph.triples(), key=Triple.sort_key)
        for triple in ordered:
            for term in (triple.subject, triple.object):
                if isinstance(term, BlankNode) and term not in self.blank_labels:
                    self.blank_labels[term] = f"b{len(self.blank_labels)}"

        for subject, statements in self._group_by_subject(ordered):
            if lines:
                lines.append("")
            lines.extend(self._subject_block(subject, statements))
        return "\n".join(lines) + "\n"

    @staticmethod
    def _group_by_subject(ordered: List[Triple]) -> Iterator[Tuple[Term, List[Triple]]]:
        current: Optional[Term] = None
        bucket: List[Triple] = []
        for triple in ordered:
            if bucket and triple.subject != current:
                yield current, bucket
                bucket = []
            current = triple.subject
            bucket.append(triple)
        if bucket:
            yield current, bucket

    def _subject_block(self, subject: Term, statements: List[Triple]) -> List[str]:
        groups: List[Tuple[Iri, List[Term]]] = []
        for triple in statements:
            if groups and groups[-1][0] == triple.predicate:
                groups[-1][1].append(triple.object)
            else:
                groups.append((triple.predicate, [triple.object]))

        rendered = []
        for predicate, objects in groups:
            verb = 'a' if predicate == RDF_TYPE else self.render(predicate)
            rendered.append(f"{verb} {', '.join(self.render(o) for o in objects)}")

        head = self.render(subject)
        block = [f"{head} {rendered[0]}"]
        block.extend(f"    {item}" for item in rendered[1:])
        return [line + (" ;" if i < len(block) - 1 else " .") for i, line in enumerate(block)]

    def render(self, term: Term) -> str:
        if isinstance(term, Iri):
            return self._render_iri(term)
        if isinstance(term, BlankNode):
            return f"_:{self.blank_labels.get(term, term.label)}"
        return self._render_literal(term)

    def _render_iri(self, iri: Iri) -> str:
        for prefix, namespace in self._by_length:
            if iri.value.startswith(namespace):
                local = iri.value[len(namespace):]
                if local == "" or _LOCAL_NAME.match(local):
                    return f"{prefix}:{local}"
        return f"<{iri.value}>"

    def _render_literal(self, literal: Literal) -> str:
        body = (literal.lexical.replace('\\', '\\\\').replace('"', '\\"')
                .replace('\n', '\\n').replace('\r', '\\r').replace('\t', '\\t'))
        if literal.lang_tag is not None:
            return f'"{body}"@{literal.lang_tag}'
        if literal.datatype is None or literal.datatype == XSD_STRING:
            return f'"{body}"'
        return f'"{body}"^^{self._render_iri(literal.datatype)}'


@performance_monitor.track_operation("serialize_turtle")
def serialize_turtle(g: Graph) -> str:
    """Canonical Turtle text for g (byte-identical for identical triple sets and prefix maps)"""
    return TurtleSerializer(g).serialize()


def serialize_sections(base: Graph, trailing: Graph, header: str) -> str:
    """
    Serialize base, then the trailing triples under a comment header
    Both parts share one prefix map and one blank-node labelling
    """
    merged = base.union(trailing)
    serializer = TurtleSerializer(merged)
    ordered = sorted(merged.triples(), key=Triple.sort_key)
    for triple in ordered:
        for term in (triple.subject, triple.object):
            if isinstance(term, BlankNode) and term not in serializer.blank_labels:
                serializer.blank_labels[term] = f"b{len(serializer.blank_labels)}"

    lines = [f"@prefix {prefix}: <{namespace}> ." for prefix, namespace in serializer.prefixes]
    sections = ([t for t in ordered if t in base], [t for t in ordered if t not in base])
    for index, section in enumerate(sections):
        if index == 1:
            if not section:
                break
            lines.extend(["", f"# {header}"])
        for subject, statements in serializer._group_by_subject(section):
            if lines:
                lines.append("")
            lines.extend(serializer._subject_block(subject, statements))
    return "\n".join(lines) + "\n" if lines else ""
