"""
Validation Service - closed-world checks over bias documentation graphs
Instance validation, consistency checks, pitfall scanning and quality indicators
"""

import logging
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

from src.services.reasoning_service import InferredGraph, infer_types, is_subclass_of
from src.services.triple_store import (
    BlankNode, Graph, Iri, Literal, Term, Triple,
    OWL_DISJOINT_WITH, OWL_EQUIVALENT_CLASS, RDF_TYPE, RDFS_DOMAIN, RDFS_LABEL, RDFS_RANGE,
    RDFS_SUBCLASSOF, SKOS_DEFINITION, XSD_DECIMAL, XSD_INTEGER, XSD_STRING, term_key,
)
from src.services.vocabulary_service import (
    BIAS, BIAS_EVALUATION, EVALUATES_BIAS, HAS_VALUE, RDFS_LITERAL, USES_MEASURE,
    NamespaceKind, PropertyKind, VocabManifest, ancestors, declared_classes, declared_properties,
)
from src.utils.config import Settings, get_settings
from src.utils.error_handler import QualityIndicatorError, handle_service_errors
from src.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

_CAMEL_WORDS = re.compile(r'[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+')
_LABEL_CHUNKS = re.compile(r'[A-Za-z0-9]+')

# Datatypes accepted where a property declares the key datatype as range
_COMPATIBLE_DATATYPES = {
    XSD_DECIMAL: {XSD_DECIMAL, XSD_INTEGER},
}


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    """One validation or pitfall result"""
    severity: Severity
    code: str
    subject: Term
    message: str

    def sort_key(self) -> Tuple:
        return (self.code, term_key(self.subject), self.message)

    def to_tsv(self) -> str:
        return "\t".join((self.severity.value, self.code, _render(self.subject), self.message))


def _render(term: Term) -> str:
    if isinstance(term, Iri):
        return term.value
    if isinstance(term, BlankNode):
        return str(term)
    return term.lexical


@dataclass(frozen=True)
class ValidationReport:
    """Sorted findings; ok when no finding has error severity"""
    findings: Tuple[Finding, ...] = ()

    def __post_init__(self):
        unique = sorted(set(self.findings), key=Finding.sort_key)
        object.__setattr__(self, 'findings', tuple(unique))

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def errors(self) -> List[Finding]:
        return [f for f in self.findings if f.severity == Severity.ERROR]

    @property
    def warnings(self) -> List[Finding]:
        return [f for f in self.findings if f.severity == Severity.WARNING]

    def codes(self) -> List[str]:
        return [f.code for f in self.findings]

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.findings + other.findings)

    def to_tsv(self) -> str:
        return "".join(f.to_tsv() + "\n" for f in self.findings)

    def to_lines(self) -> List[str]:
        lines = [f"{f.severity.value.upper()} {f.code} {_render(f.subject)}: {f.message}" for f in self.findings]
        lines.append(f"{len(self.errors)} errors, {len(self.warnings)} warnings")
        return lines


@dataclass(frozen=True)
class Completeness:
    defined_classes: int
    total_classes: int
    ratio: float


@dataclass(frozen=True)
class Interoperability:
    external_terms: int
    proprietary_terms: int
    total_terms: int
    external_ratio: float
    proprietary_ratio: float


@dataclass(frozen=True)
class QualityReport:
    """Completeness, interoperability and accessibility indicators"""
    completeness: Completeness
    interoperability: Interoperability
    accessibility: str

    def to_lines(self) -> List[str]:
        c, i = self.completeness, self.interoperability
        return [
            f"definedClasses: {c.defined_classes}",
            f"totalClasses: {c.total_classes}",
            f"completeness: {c.ratio:.0%}",
            f"externalTerms: {i.external_terms}",
            f"proprietaryTerms: {i.proprietary_terms}",
            f"totalTerms: {i.total_terms}",
            f"externalRatio: {i.external_ratio:.0%}",
            f"proprietaryRatio: {i.proprietary_ratio:.0%}",
            f"accessibility: {self.accessibility}",
        ]


def split_identifier(text: str) -> List[str]:
    """Lower-cased words of a camelCase identifier or a free-text label"""
    words = []
    for chunk in _LABEL_CHUNKS.findall(text):
        words.extend(w.lower() for w in _CAMEL_WORDS.findall(chunk))
    return words


class ValidationService:
    """Closed-world validation over an inferred graph"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    # Instance validation

    @handle_service_errors
    @performance_monitor.track_operation("validate_instances")
    def validate_instances(self, ig: InferredGraph, manifest: VocabManifest) -> ValidationReport:
        """Range, domain, declaration and evaluation checks over base triples"""
        findings: List[Finding] = []
        base = ig.base
        classes = declared_classes(ig.closure) | manifest.class_iris()
        untyped: Set[Term] = set()
        graph_properties = declared_properties(base)

        for triple in base.match():
            predicate = triple.predicate
            prop = manifest.property(predicate)
            if prop is None:
                if manifest.is_proprietary(predicate) and predicate not in graph_properties:
                    findings.append(Finding(Severity.ERROR, "undeclared-property", triple.subject,
                                            f"property {predicate.local_name} is not declared"))
                continue
            if prop.kind == PropertyKind.ANNOTATION:
                continue

            if prop.domain is not None:
                verdict = self._conforms(ig, classes, triple.subject, prop.domain)
                if verdict is False:
                    findings.append(Finding(
                        Severity.ERROR, "domain-violation", triple.subject,
                        f"{predicate.local_name} expects a subject of type {prop.domain.local_name}",
                    ))
                elif verdict is None:
                    untyped.add(triple.subject)

            if predicate == HAS_VALUE:
                findings.extend(self._check_value(triple))
                continue
            if prop.range is None:
                continue
            if prop.kind == PropertyKind.DATA:
                if not self._literal_conforms(triple.object, prop.range):
                    findings.append(Finding(
                        Severity.ERROR, "range-violation", triple.subject,
                        f"{predicate.local_name} expects a {prop.range.local_name} value",
                    ))
                continue
            if isinstance(triple.object, Literal):
                findings.append(Finding(
                    Severity.ERROR, "range-violation", triple.subject,
                    f"{predicate.local_name} expects a {prop.range.local_name}, got a literal",
                ))
                continue
            verdict = self._conforms(ig, classes, triple.object, prop.range)
            if verdict is False:
                findings.append(Finding(
                    Severity.ERROR, "range-violation", triple.subject,
                    f"{predicate.local_name} expects an object of type {prop.range.local_name}, "
                    f"{_render(triple.object)} is not one",
                ))
            elif verdict is None:
                untyped.add(triple.object)

        for term in untyped:
            if isinstance(term, Iri) and manifest.is_proprietary(term):
                findings.append(Finding(Severity.WARNING, "untyped-instance", term,
                                        f"{term.local_name} has no type information"))

        findings.extend(self._check_evaluations(ig))
        report = ValidationReport(tuple(findings))
        logger.info(f"Instance validation: {len(report.errors)} errors, {len(report.warnings)} warnings")
        return report

    def asserted_types(self, ig: InferredGraph, term: Term) -> Set[Iri]:
        """Asserted rdf:type values of term closed upward under subclass"""
        types: Set[Iri] = set()
        for cls in ig.base.objects(term, RDF_TYPE):
            if isinstance(cls, Iri):
                types.add(cls)
                types.update(o for o in ig.closure.objects(cls, RDFS_SUBCLASSOF) if isinstance(o, Iri))
        return types

    def _conforms(self, ig: InferredGraph, classes: Set[Iri], term: Term, expected: Iri) -> Optional[bool]:
        """True/False when term has type information, None when it has none"""
        types = self.asserted_types(ig, term)
        # classes used as individuals conform through their own hierarchy
        is_class = isinstance(term, Iri) and term in classes
        if not types and not is_class:
            return None
        if is_class and is_subclass_of(ig, term, expected):
            return True
        return any(is_subclass_of(ig, t, expected) for t in types)

    @staticmethod
    def _literal_conforms(value: Term, datatype: Iri) -> bool:
        if not isinstance(value, Literal):
            return False
        if datatype == RDFS_LITERAL:
            return True
        if value.lang_tag is not None:
            return datatype == XSD_STRING
        return value.datatype in _COMPATIBLE_DATATYPES.get(datatype, {datatype})

    @staticmethod
    def _check_value(triple: Triple) -> List[Finding]:
        value = triple.object
        if not isinstance(value, Literal) or value.datatype not in (XSD_DECIMAL, XSD_INTEGER):
            return [Finding(Severity.ERROR, "invalid-value", triple.subject,
                            f"hasValue must be an xsd:decimal literal, got {_render(value)!r}")]
        try:
            number = Decimal(value.lexical)
        except InvalidOperation:
            return [Finding(Severity.ERROR, "invalid-value", triple.subject,
                            f"hasValue {value.lexical!r} is not a decimal number")]
        if not number.is_finite():
            return [Finding(Severity.ERROR, "invalid-value", triple.subject,
                            f"hasValue {value.lexical!r} is not finite")]
        return []

    def _check_evaluations(self, ig: InferredGraph) -> List[Finding]:
        findings = []
        evaluations = {t.subject for t in ig.base.triples(None, RDF_TYPE, None)
                       if BIAS_EVALUATION in self.asserted_types(ig, t.subject)}
        for evaluation in evaluations:
            missing = [p.local_name for p in (EVALUATES_BIAS, USES_MEASURE) if ig.closure.value(evaluation, p) is None]
            if missing:
                findings.append(Finding(Severity.ERROR, "evaluation-incomplete", evaluation,
                                        f"evaluation is missing {', '.join(missing)}"))
        return findings

    # Consistency

    @handle_service_errors
    @performance_monitor.track_operation("check_consistency")
    def check_consistency(self, ig: InferredGraph) -> ValidationReport:
        """Subclass cycles and disjointness clashes"""
        findings: List[Finding] = []
        closure = ig.closure

        for triple in closure.triples(None, RDFS_SUBCLASSOF, None):
            a, b = triple.subject, triple.object
            if not isinstance(b, (Iri, BlankNode)) or a == b or term_key(a) > term_key(b):
                continue
            if Triple(b, RDFS_SUBCLASSOF, a) not in closure:
                continue
            if Triple(a, OWL_EQUIVALENT_CLASS, b) in closure or Triple(b, OWL_EQUIVALENT_CLASS, a) in closure:
                continue
            findings.append(Finding(Severity.ERROR, "subclass-cycle", a,
                                    f"subclass cycle between {_render(a)} and {_render(b)}"))

        for triple in closure.triples(None, OWL_DISJOINT_WITH, None):
            a, b = triple.subject, triple.object
            if not isinstance(a, Iri) or not isinstance(b, Iri):
                continue
            if a != b and (is_subclass_of(ig, a, b) or is_subclass_of(ig, b, a)):
                findings.append(Finding(Severity.ERROR, "disjoint-superclass", a,
                                        f"{a.local_name} is declared disjoint with related class {b.local_name}"))
            for member in closure.subjects(RDF_TYPE, a):
                if b in infer_types(ig, member):
                    findings.append(Finding(Severity.ERROR, "disjoint-violation", member,
                                            f"typed with disjoint classes {a.local_name} and {b.local_name}"))

        report = ValidationReport(tuple(findings))
        logger.info(f"Consistency check: {len(report.errors)} errors")
        return report

    # Pitfalls

    @handle_service_errors
    @performance_monitor.track_operation("scan_pitfalls")
    def scan_pitfalls(self, g: Graph, manifest: VocabManifest) -> ValidationReport:
        """Modelling pitfalls over the proprietary vocabulary"""
        findings: List[Finding] = []
        classes = sorted((c for c in declared_classes(g) if manifest.is_proprietary(c)), key=term_key)
        properties = sorted(((p, k) for p, k in declared_properties(g).items() if manifest.is_proprietary(p)),
                            key=lambda item: term_key(item[0]))
        top_concepts = set(manifest.top_concepts)

        for cls in classes:
            if not any(isinstance(o, Literal) for o in g.objects(cls, SKOS_DEFINITION)):
                findings.append(Finding(Severity.WARNING, "missing-definition", cls,
                                        f"class {cls.local_name} has no skos:definition"))
            if top_concepts and cls not in top_concepts and not (ancestors(g, cls) & top_concepts):
                findings.append(Finding(Severity.WARNING, "unreachable-class", cls,
                                        f"class {cls.local_name} is not reachable from any top concept"))
            findings.extend(self._label_findings(g, cls))

        for prop, kind in properties:
            if kind != PropertyKind.ANNOTATION:
                if g.value(prop, RDFS_DOMAIN) is None:
                    findings.append(Finding(Severity.WARNING, "missing-domain", prop,
                                            f"property {prop.local_name} has no rdfs:domain"))
                if g.value(prop, RDFS_RANGE) is None:
                    findings.append(Finding(Severity.WARNING, "missing-range", prop,
                                            f"property {prop.local_name} has no rdfs:range"))
            if next(g.triples(None, prop, None), None) is None:
                findings.append(Finding(Severity.WARNING, "unused-property", prop,
                                        f"property {prop.local_name} is declared but never used"))
            findings.extend(self._label_findings(g, prop))

        report = ValidationReport(tuple(findings))
        logger.info(f"Pitfall scan: {len(report.findings)} findings")
        return report

    @staticmethod
    def _label_findings(g: Graph, term: Iri) -> List[Finding]:
        expected = split_identifier(term.local_name)
        findings = []
        for label in g.objects(term, RDFS_LABEL):
            if not isinstance(label, Literal):
                continue
            if label.lang_tag and not label.lang_tag.lower().startswith('en'):
                continue
            if split_identifier(label.lexical) != expected:
                findings.append(Finding(Severity.WARNING, "label-mismatch", term,
                                        f"label {label.lexical!r} does not match local name {term.local_name}"))
        return findings

    # Quality indicators

    @handle_service_errors
    @performance_monitor.track_operation("quality_indicators")
    def quality_indicators(self, g: Graph, manifest: VocabManifest,
                           locator: Optional[str] = None) -> QualityReport:
        """Completeness, interoperability and accessibility of the vocabulary in g"""
        terms = self.schema_terms(g)
        if not terms:
            raise QualityIndicatorError("empty schema")

        counts: Dict[NamespaceKind, int] = {NamespaceKind.EXTERNAL: 0, NamespaceKind.PROPRIETARY: 0}
        for term in terms:
            kind = manifest.classify(term)
            if kind is None:
                raise QualityIndicatorError(f"unclassified namespace for {term.value}", {'term': term.value})
            counts[kind] += 1

        external, proprietary = counts[NamespaceKind.EXTERNAL], counts[NamespaceKind.PROPRIETARY]
        total = external + proprietary
        interoperability = Interoperability(
            external_terms=external,
            proprietary_terms=proprietary,
            total_terms=total,
            external_ratio=external / total,
            proprietary_ratio=proprietary / total,
        )

        bias_classes = [c for c in declared_classes(g) if c != BIAS and BIAS in ancestors(g, c)]
        defined = sum(1 for c in bias_classes for o in g.objects(c, SKOS_DEFINITION) if isinstance(o, Literal))
        ratio = defined / len(bias_classes) if bias_classes else 0.0
        if ratio > 1:
            logger.info(f"Completeness above 1 ({defined}/{len(bias_classes)}): classes carry several definitions")

        return QualityReport(
            completeness=Completeness(defined, len(bias_classes), ratio),
            interoperability=interoperability,
            accessibility=locator or self.settings.accessibility_locator,
        )

    @staticmethod
    def schema_terms(g: Graph) -> Set[Iri]:
        """Declared classes and properties plus IRIs in subclass and equivalence axioms"""
        terms: Set[Iri] = set(declared_classes(g)) | set(declared_properties(g))
        for predicate in (RDFS_SUBCLASSOF, OWL_EQUIVALENT_CLASS):
            for triple in g.triples(None, predicate, None):
                terms.update(t for t in (triple.subject, triple.object) if isinstance(t, Iri))
        return terms


# Global validation service instance
validation_service = ValidationService()
