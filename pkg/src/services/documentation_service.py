"""
Documentation Service - human-readable reports for bias documentation subjects
Every rendered line cites the triples it was derived from
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Set, Tuple

from src.services.reasoning_service import InferredGraph
from src.services.triple_store import Graph, Iri, Literal, Term, Triple, RDFS_LABEL, RDFS_SUBCLASSOF, SKOS_DEFINITION, term_key
from src.services.vocabulary_service import (
    EVALUATED_ON, EVALUATES_BIAS, FORMALIZATION, HAS_VALUE, IS_ALIGNED_WITH, IS_ASSOCIATED_WITH, MEASURES,
    PROV_GENERATED_AT_TIME, USES_MEASURE, VocabularyService, label_of, vocabulary_service,
)
from src.utils.error_handler import DocumentationError, handle_service_errors
from src.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

SECTION_ORDER = (
    "Definition",
    "Bias Category",
    "Associated Applications",
    "Aligned Harms",
    "Measures",
    "Recorded Evaluations",
)


@dataclass(frozen=True)
class DocLine:
    text: str
    cited: Tuple[Triple, ...]


@dataclass(frozen=True)
class DocSection:
    heading: str
    lines: Tuple[DocLine, ...]


@dataclass(frozen=True)
class DocumentationBundle:
    """Ordered report sections about one subject"""
    subject: Iri
    title: str
    sections: Tuple[DocSection, ...]

    def headings(self) -> List[str]:
        return [section.heading for section in self.sections]

    def section(self, heading: str) -> Optional[DocSection]:
        for candidate in self.sections:
            if candidate.heading == heading:
                return candidate
        return None

    def cited_triples(self) -> Set[Triple]:
        return {t for section in self.sections for line in section.lines for t in line.cited}

    def cited_graph(self, prefixes: Optional[dict] = None) -> Graph:
        """Machine-readable form: the triples behind the report"""
        return Graph(sorted(self.cited_triples(), key=Triple.sort_key), prefixes=prefixes)

    def render(self) -> str:
        out = [f"# {self.title} <{self.subject.value}>"]
        for section in self.sections:
            out.append("")
            out.append(f"## {section.heading}")
            out.extend(line.text for line in section.lines)
        return "\n".join(out) + "\n"


class DocumentationService:
    """Builds documentation bundles from an inferred graph"""

    def __init__(self, vocabulary: Optional[VocabularyService] = None):
        self.vocabulary = vocabulary or vocabulary_service

    @handle_service_errors
    @performance_monitor.track_operation("docgen")
    def docgen(self, ig: InferredGraph, subject: Iri) -> DocumentationBundle:
        """Report on subject with sections in a fixed order; empty sections are omitted"""
        closure = ig.closure
        if not closure.has_subject(subject):
            raise DocumentationError(f"unknown subject {subject.value}", subject.value)

        builders = {
            "Definition": self._definition,
            "Bias Category": self._category,
            "Associated Applications": lambda g, s: self._linked(g, s, IS_ASSOCIATED_WITH),
            "Aligned Harms": lambda g, s: self._linked(g, s, IS_ALIGNED_WITH),
            "Measures": self._measures,
            "Recorded Evaluations": self._evaluations,
        }
        sections = []
        for heading in SECTION_ORDER:
            lines = builders[heading](ig, subject)
            if lines:
                sections.append(DocSection(heading, tuple(lines)))

        logger.info(f"Generated documentation for {subject.local_name}: {len(sections)} sections")
        return DocumentationBundle(subject, label_of(closure, subject), tuple(sections))

    def _definition(self, ig: InferredGraph, subject: Iri) -> List[DocLine]:
        definition = self.vocabulary.lookup_definition(ig.closure, subject)
        if definition is None:
            return []
        return [DocLine(definition.lexical, (Triple(subject, SKOS_DEFINITION, definition),))]

    def _category(self, ig: InferredGraph, subject: Iri) -> List[DocLine]:
        """Asserted superclass chain, nearest first"""
        lines = []
        seen = {subject}
        current = subject
        while True:
            parents = [p for p in ig.base.objects(current, RDFS_SUBCLASSOF) if isinstance(p, Iri) and p not in seen]
            if not parents:
                break
            parent = parents[0]
            lines.append(DocLine(f"- {label_of(ig.closure, parent)}",
                                 (Triple(current, RDFS_SUBCLASSOF, parent),) + self._label_triples(ig, parent)))
            seen.add(parent)
            current = parent
        return lines

    def _linked(self, ig: InferredGraph, subject: Iri, predicate: Iri) -> List[DocLine]:
        lines = []
        for target in ig.closure.objects(subject, predicate):
            lines.append(DocLine(f"- {self._name(ig, target)}",
                                 (Triple(subject, predicate, target),) + self._label_triples(ig, target)))
        return lines

    def _measures(self, ig: InferredGraph, subject: Iri) -> List[DocLine]:
        lines = []
        closure = ig.closure
        for measure in closure.subjects(MEASURES, subject):
            lines.append(DocLine(f"- {self._name(ig, measure)}",
                                 (Triple(measure, MEASURES, subject),) + self._label_triples(ig, measure)))
            definition = self.vocabulary.lookup_definition(closure, measure)
            if definition is not None:
                lines.append(DocLine(f"  definition: {definition.lexical}",
                                     (Triple(measure, SKOS_DEFINITION, definition),)))
            for formalization in closure.objects(measure, FORMALIZATION):
                if isinstance(formalization, Literal):
                    lines.append(DocLine(f"  formalization: {formalization.lexical}",
                                         (Triple(measure, FORMALIZATION, formalization),)))
        return lines

    def _evaluations(self, ig: InferredGraph, subject: Iri) -> List[DocLine]:
        closure = ig.closure
        evaluations: Set[Term] = set(closure.subjects(EVALUATES_BIAS, subject))
        evaluations.update(closure.subjects(USES_MEASURE, subject))

        def order(evaluation: Term) -> Tuple:
            stamp = closure.value(evaluation, PROV_GENERATED_AT_TIME)
            return (stamp.lexical if isinstance(stamp, Literal) else "", term_key(evaluation))

        lines = []
        for evaluation in sorted(evaluations, key=order):
            parts, cited = [], []
            measure = closure.value(evaluation, USES_MEASURE)
            if measure is not None:
                parts.append(self._name(ig, measure))
                cited.append(Triple(evaluation, USES_MEASURE, measure))
            value = closure.value(evaluation, HAS_VALUE)
            if isinstance(value, Literal):
                parts.append(f"= {value.lexical}")
                cited.append(Triple(evaluation, HAS_VALUE, value))
            dataset = closure.value(evaluation, EVALUATED_ON)
            if dataset is not None:
                parts.append(f"on {self._name(ig, dataset)}")
                cited.append(Triple(evaluation, EVALUATED_ON, dataset))
            stamp = closure.value(evaluation, PROV_GENERATED_AT_TIME)
            if isinstance(stamp, Literal):
                parts.append(f"at {stamp.lexical}")
                cited.append(Triple(evaluation, PROV_GENERATED_AT_TIME, stamp))
            if cited:
                lines.append(DocLine("- " + " ".join(parts), tuple(cited)))
        return lines

    @staticmethod
    def _name(ig: InferredGraph, term: Term) -> str:
        if isinstance(term, Iri) and not ig.closure.objects(term, RDFS_LABEL):
            return term.value
        return label_of(ig.closure, term)

    @staticmethod
    def _label_triples(ig: InferredGraph, term: Term) -> Tuple[Triple, ...]:
        return tuple(Triple(term, RDFS_LABEL, label) for label in ig.closure.objects(term, RDFS_LABEL))


# Global documentation service instance
documentation_service = DocumentationService()
