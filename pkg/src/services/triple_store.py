"""
Triple Store - RDF term model and indexed in-memory graph
SPO / POS / OSP indexes, pattern matching and blank-node aware isomorphism
"""

import logging
import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple, Union

from src.utils.error_handler import TermPositionError, ValidationError

logger = logging.getLogger(__name__)

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
SKOS_NS = "http://www.w3.org/2004/02/skos/core#"

_URN_PATTERN = re.compile(r'^urn:[A-Za-z0-9][A-Za-z0-9-]{0,31}:\S+$', re.IGNORECASE)
_LANG_PATTERN = re.compile(r'^[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*$')
# characters a Turtle IRIREF may not contain
_IRI_FORBIDDEN = re.compile(r'[<>"{}|^`\\\x00-\x1f]')


@dataclass(frozen=True)
class Iri:
    """Absolute IRI, compared as a plain string"""
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or not self.value:
            raise ValidationError("IRI must be a non-empty string", "iri")
        if any(ch.isspace() for ch in self.value):
            raise ValidationError(f"IRI contains whitespace: {self.value!r}", "iri")
        if _IRI_FORBIDDEN.search(self.value):
            raise ValidationError(f"IRI contains characters not allowed in Turtle: {self.value!r}", "iri")
        if "://" not in self.value and not _URN_PATTERN.match(self.value):
            raise ValidationError(f"IRI is not absolute: {self.value!r}", "iri")

    def __str__(self) -> str:
        return self.value

    @property
    def local_name(self) -> str:
        """Text after the last '#' or '/'"""
        cut = max(self.value.rfind('#'), self.value.rfind('/'))
        return self.value[cut + 1:]


@dataclass(frozen=True)
class Literal:
    """Literal with either a language tag or a datatype (xsd:string when neither is given)"""
    lexical: str
    lang_tag: Optional[str] = None
    datatype: Optional[Iri] = None

    def __post_init__(self):
        if not isinstance(self.lexical, str):
            raise ValidationError("Literal lexical form must be a string", "lexical")
        if self.lang_tag is not None and self.datatype is not None:
            raise ValidationError("Literal cannot carry both a language tag and a datatype", "lang_tag")
        if self.lang_tag is not None:
            if not _LANG_PATTERN.match(self.lang_tag):
                raise ValidationError(f"Invalid language tag: {self.lang_tag!r}", "lang_tag")
        elif self.datatype is None:
            object.__setattr__(self, 'datatype', XSD_STRING)

    def __str__(self) -> str:
        return self.lexical


@dataclass(frozen=True)
class BlankNode:
    """Blank node, label scoped to one graph"""
    label: str

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label:
            raise ValidationError("Blank node label must be a non-empty string", "label")

    def __str__(self) -> str:
        return f"_:{self.label}"


@dataclass(frozen=True)
class Variable:
    """Pattern variable shared by the reasoner rules and the query engine"""
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


Term = Union[Iri, Literal, BlankNode]
PatternTerm = Union[Iri, Literal, BlankNode, Variable]

XSD_STRING = Iri(XSD_NS + "string")
XSD_INTEGER = Iri(XSD_NS + "integer")
XSD_DECIMAL = Iri(XSD_NS + "decimal")
XSD_BOOLEAN = Iri(XSD_NS + "boolean")
XSD_DATETIME = Iri(XSD_NS + "dateTime")

RDF_TYPE = Iri(RDF_NS + "type")
RDF_PROPERTY = Iri(RDF_NS + "Property")
RDFS_CLASS = Iri(RDFS_NS + "Class")
RDFS_SUBCLASSOF = Iri(RDFS_NS + "subClassOf")
RDFS_SUBPROPERTYOF = Iri(RDFS_NS + "subPropertyOf")
RDFS_DOMAIN = Iri(RDFS_NS + "domain")
RDFS_RANGE = Iri(RDFS_NS + "range")
RDFS_LABEL = Iri(RDFS_NS + "label")
RDFS_COMMENT = Iri(RDFS_NS + "comment")
OWL_CLASS = Iri(OWL_NS + "Class")
OWL_OBJECT_PROPERTY = Iri(OWL_NS + "ObjectProperty")
OWL_DATATYPE_PROPERTY = Iri(OWL_NS + "DatatypeProperty")
OWL_ANNOTATION_PROPERTY = Iri(OWL_NS + "AnnotationProperty")
OWL_EQUIVALENT_CLASS = Iri(OWL_NS + "equivalentClass")
OWL_INVERSE_OF = Iri(OWL_NS + "inverseOf")
OWL_DISJOINT_WITH = Iri(OWL_NS + "disjointWith")
SKOS_DEFINITION = Iri(SKOS_NS + "definition")


def term_key(term: PatternTerm) -> Tuple[int, str, str, str]:
    """Total order over terms: IRIs, then blank nodes, then literals, each lexicographic"""
    if isinstance(term, Iri):
        return (0, term.value, "", "")
    if isinstance(term, BlankNode):
        return (1, term.label, "", "")
    if isinstance(term, Literal):
        return (2, term.lexical, term.lang_tag or "", term.datatype.value if term.datatype else "")
    return (3, term.name, "", "")


@dataclass(frozen=True)
class Triple:
    """RDF statement; literals only as object, predicates always IRIs"""
    subject: Term
    predicate: Iri
    object: Term

    def __post_init__(self):
        if not isinstance(self.subject, (Iri, BlankNode)):
            raise TermPositionError(f"{type(self.subject).__name__} not allowed in subject position", "subject")
        if not isinstance(self.predicate, Iri):
            raise TermPositionError(f"{type(self.predicate).__name__} not allowed in predicate position",
                                    "predicate")
        if not isinstance(self.object, (Iri, BlankNode, Literal)):
            raise TermPositionError(f"{type(self.object).__name__} not allowed in object position", "object")

    def sort_key(self) -> Tuple:
        return (term_key(self.subject), term_key(self.predicate), term_key(self.object))

    def has_blank_nodes(self) -> bool:
        return isinstance(self.subject, BlankNode) or isinstance(self.object, BlankNode)


def _index_add(index: Dict, a, b, c) -> bool:
    inner = index.setdefault(a, {})
    leaf = inner.setdefault(b, set())
    if c in leaf:
        return False
    leaf.add(c)
    return True


class Graph:
    """
    Indexed triple container with set semantics
    Built by a single writer; treat as immutable once shared (insert() returns a new version)
    """

    def __init__(self, triples: Iterable[Triple] = (), prefixes: Optional[Dict[str, str]] = None):
        self._spo: Dict[Term, Dict[Iri, Set[Term]]] = {}
        self._pos: Dict[Iri, Dict[Term, Set[Term]]] = {}
        self._osp: Dict[Term, Dict[Term, Set[Iri]]] = {}
        self._size = 0
        self.prefixes: Dict[str, str] = dict(prefixes or {})
        for triple in triples:
            self.add(triple)

    def add(self, triple: Triple) -> bool:
        """Add in place; returns False when the triple was already present"""
        if not isinstance(triple, Triple):
            raise TermPositionError("Only Triple instances can be stored", "triple")
        if not _index_add(self._spo, triple.subject, triple.predicate, triple.object):
            return False
        _index_add(self._pos, triple.predicate, triple.object, triple.subject)
        _index_add(self._osp, triple.object, triple.subject, triple.predicate)
        self._size += 1
        return True

    def bind(self, prefix: str, namespace: str) -> None:
        self.prefixes[prefix] = namespace

    def copy(self) -> "Graph":
        clone = Graph(prefixes=self.prefixes)
        for triple in self.triples():
            clone.add(triple)
        return clone

    def union(self, other: "Graph") -> "Graph":
        merged = self.copy()
        for prefix, namespace in other.prefixes.items():
            merged.prefixes.setdefault(prefix, namespace)
        for triple in other.triples():
            merged.add(triple)
        return merged

    def __len__(self) -> int:
        return self._size

    def __contains__(self, triple: Triple) -> bool:
        return triple.object in self._spo.get(triple.subject, {}).get(triple.predicate, ())

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.match())

    def triples(self, s: Optional[Term] = None, p: Optional[Iri] = None,
                o: Optional[Term] = None) -> Iterator[Triple]:
        """Unordered scan choosing the index that covers the bound positions"""
        if s is not None:
            by_pred = self._spo.get(s)
            if not by_pred:
                return
            if p is not None:
                objects = by_pred.get(p, ())
                if o is not None:
                    if o in objects:
                        yield Triple(s, p, o)
                    return
                for obj in objects:
                    yield Triple(s, p, obj)
                return
            if o is not None:
                for pred in self._osp.get(o, {}).get(s, ()):
                    yield Triple(s, pred, o)
                return
            for pred, objects in by_pred.items():
                for obj in objects:
                    yield Triple(s, pred, obj)
            return

        if p is not None:
            by_obj = self._pos.get(p)
            if not by_obj:
                return
            if o is not None:
                for subj in by_obj.get(o, ()):
                    yield Triple(subj, p, o)
                return
            for obj, subjects in by_obj.items():
                for subj in subjects:
                    yield Triple(subj, p, obj)
            return

        if o is not None:
            for subj, preds in self._osp.get(o, {}).items():
                for pred in preds:
                    yield Triple(subj, pred, o)
            return

        for subj, by_pred in self._spo.items():
            for pred, objects in by_pred.items():
                for obj in objects:
                    yield Triple(subj, pred, obj)

    def match(self, s: Optional[Term] = None, p: Optional[Iri] = None,
              o: Optional[Term] = None) -> List[Triple]:
        """Matching triples in deterministic (subject, predicate, object) order"""
        return sorted(self.triples(s, p, o), key=Triple.sort_key)

    def objects(self, s: Term, p: Iri) -> List[Term]:
        return sorted(self._spo.get(s, {}).get(p, ()), key=term_key)

    def subjects(self, p: Iri, o: Term) -> List[Term]:
        return sorted(self._pos.get(p, {}).get(o, ()), key=term_key)

    def value(self, s: Term, p: Iri) -> Optional[Term]:
        """First object in term order, or None"""
        objects = self.objects(s, p)
        return objects[0] if objects else None

    def has_subject(self, term: Term) -> bool:
        return term in self._spo

    def mentions(self, term: Term) -> bool:
        """True when the term occurs in any position"""
        return term in self._spo or term in self._osp or term in self._pos

    def predicates(self) -> List[Iri]:
        return sorted(self._pos, key=term_key)

    def blank_nodes(self) -> Set[BlankNode]:
        nodes = {s for s in self._spo if isinstance(s, BlankNode)}
        nodes.update(o for o in self._osp if isinstance(o, BlankNode))
        return nodes

    def triple_set(self) -> FrozenSet[Triple]:
        return frozenset(self.triples())

    def index_sizes(self) -> Tuple[int, int, int]:
        """Entry counts of the SPO, POS and OSP indexes"""
        def count(index):
            return sum(len(leaf) for inner in index.values() for leaf in inner.values())
        return count(self._spo), count(self._pos), count(self._osp)

    def __repr__(self) -> str:
        return f"<Graph triples={self._size} prefixes={len(self.prefixes)}>"


def insert(g: Graph, t: Triple) -> Graph:
    """New graph version containing t; idempotent"""
    if not isinstance(t, Triple):
        raise TermPositionError("insert() expects a Triple", "triple")
    if t in g:
        return g
    updated = g.copy()
    updated.add(t)
    return updated


def match(g: Graph, s: Optional[Term] = None, p: Optional[Iri] = None,
          o: Optional[Term] = None) -> Iterator[Triple]:
    """Stream of triples matching every bound position, in index order"""
    if p is not None and not isinstance(p, Iri):
        return iter(())
    return iter(g.match(s, p, o))


def _relabel(term: Term, mapping: Dict[BlankNode, BlankNode]) -> Term:
    return mapping.get(term, term) if isinstance(term, BlankNode) else term


def _refined_colors(triples: List[Triple], nodes: Set[BlankNode], rounds: int = 3) -> Dict[BlankNode, int]:
    """Iteratively hash each blank node's neighbourhood"""
    colors = {node: 0 for node in nodes}
    for _ in range(rounds):
        signatures = defaultdict(list)
        for t in triples:
            if isinstance(t.subject, BlankNode):
                other = colors[t.object] if isinstance(t.object, BlankNode) else term_key(t.object)
                signatures[t.subject].append(('out', t.predicate.value, repr(other)))
            if isinstance(t.object, BlankNode):
                other = colors[t.subject] if isinstance(t.subject, BlankNode) else term_key(t.subject)
                signatures[t.object].append(('in', t.predicate.value, repr(other)))
        colors = {node: hash((colors[node], tuple(sorted(signatures[node])))) for node in nodes}
    return colors


def isomorphic(g1: Graph, g2: Graph) -> bool:
    """True iff a blank-node bijection makes the triple sets equal"""
    if len(g1) != len(g2):
        return False

    ground1 = {t for t in g1.triples() if not t.has_blank_nodes()}
    ground2 = {t for t in g2.triples() if not t.has_blank_nodes()}
    if ground1 != ground2:
        return False

    blank1 = [t for t in g1.triples() if t.has_blank_nodes()]
    blank2 = [t for t in g2.triples() if t.has_blank_nodes()]
    if not blank1:
        return not blank2

    nodes1, nodes2 = g1.blank_nodes(), g2.blank_nodes()
    if len(nodes1) != len(nodes2):
        return False

    colors1 = _refined_colors(blank1, nodes1)
    colors2 = _refined_colors(blank2, nodes2)
    if sorted(colors1.values()) != sorted(colors2.values()):
        return False

    target = set(blank2)
    by_color = defaultdict(list)
    for node in sorted(nodes2, key=term_key):
        by_color[colors2[node]].append(node)

    order = sorted(nodes1, key=lambda n: (len(by_color[colors1[n]]), n.label))
    incident = defaultdict(list)
    for t in blank1:
        for term in (t.subject, t.object):
            if isinstance(term, BlankNode):
                incident[term].append(t)

    mapping: Dict[BlankNode, BlankNode] = {}
    used: Set[BlankNode] = set()

    def consistent(node: BlankNode) -> bool:
        for t in incident[node]:
            if all(not isinstance(x, BlankNode) or x in mapping for x in (t.subject, t.object)):
                mapped = Triple(_relabel(t.subject, mapping), t.predicate, _relabel(t.object, mapping))
                if mapped not in target:
                    return False
        return True

    def search(position: int) -> bool:
        if position == len(order):
            return True
        node = order[position]
        for candidate in by_color[colors1[node]]:
            if candidate in used:
                continue
            mapping[node] = candidate
            used.add(candidate)
            if consistent(node) and search(position + 1):
                return True
            del mapping[node]
            used.discard(candidate)
        return False

    return search(0)
