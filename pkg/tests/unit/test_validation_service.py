"""
Unit tests for Validation Service
"""

from decimal import Decimal

import pytest

from src.services.reasoning_service import materialize
from src.services.triple_store import (
    Graph, Iri, Literal, Triple, OWL_CLASS, OWL_DISJOINT_WITH, OWL_OBJECT_PROPERTY, RDF_TYPE, RDFS_LABEL,
    RDFS_SUBCLASSOF,
)
from src.services.validation_service import (
    Finding, Severity, ValidationReport, ValidationService, split_identifier, validation_service,
)
from src.services.vocabulary_service import (
    BIAS_EVALUATION, ERASURE, EVALUATES_BIAS, GINI_IN_DEGREE, HAS_VALUE, IS_ALIGNED_WITH, POPULARITY_BIAS,
    RECOMMENDER_SYSTEM, BiasEvaluationRecord, NamespaceKind, bias, vocabulary_service,
)
from src.utils.error_handler import QualityIndicatorError


def _validate(g: Graph, manifest):
    return validation_service.validate_instances(materialize(g), manifest)


class TestReport:

    def test_findings_sorted_and_deduplicated(self, ex):
        late = Finding(Severity.WARNING, "unused-property", ex("p"), "unused")
        early = Finding(Severity.ERROR, "domain-violation", ex("s"), "wrong domain")
        report = ValidationReport((late, early, late))
        assert report.findings == (early, late)
        assert not report.ok
        assert report.to_lines()[-1] == "1 errors, 1 warnings"

    def test_tsv_line(self, ex):
        finding = Finding(Severity.ERROR, "range-violation", ex("s"), "bad range")
        assert finding.to_tsv() == "error\trange-violation\thttp://example.org/s\tbad range"

    def test_warnings_only_report_is_ok(self, ex):
        report = ValidationReport((Finding(Severity.WARNING, "missing-range", ex("p"), "no range"),))
        assert report.ok
        assert report.merge(ValidationReport()).findings == report.findings


class TestSplitIdentifier:

    @pytest.mark.parametrize("text,words", [
        ("PopularityBias", ["popularity", "bias"]),
        ("MLTask", ["ml", "task"]),
        ("ML Task", ["ml", "task"]),
        ("Gini In-Degree", ["gini", "in", "degree"]),
        ("PopularityMeasure2", ["popularity", "measure", "2"]),
    ])
    def test_words(self, text, words):
        assert split_identifier(text) == words


class TestValidateInstances:

    def test_seed_is_valid(self, seed_ig, seed_manifest):
        assert validation_service.validate_instances(seed_ig, seed_manifest).ok

    def test_recorded_evaluation_is_valid(self, seed_graph, seed_manifest, fixed_timestamp, ex):
        g, _ = vocabulary_service.record_evaluation(seed_graph, BiasEvaluationRecord(
            bias=POPULARITY_BIAS, measure=GINI_IN_DEGREE, value=Decimal("0.25"), dataset=ex("ds"),
            timestamp=fixed_timestamp,
        ))
        report = _validate(g, seed_manifest)
        assert report.ok
        assert report.findings == ()

    def test_domain_violation(self, seed_graph, seed_manifest, ex):
        g = seed_graph.union(Graph([
            Triple(ex("x"), RDF_TYPE, bias("Harm")),
            Triple(ex("x"), IS_ALIGNED_WITH, ERASURE),
        ]))
        report = _validate(g, seed_manifest)
        assert report.codes() == ["domain-violation"]
        assert report.errors[0].subject == ex("x")

    def test_range_violation_by_type(self, seed_graph, seed_manifest):
        g = seed_graph.union(Graph([Triple(POPULARITY_BIAS, IS_ALIGNED_WITH, RECOMMENDER_SYSTEM)]))
        report = _validate(g, seed_manifest)
        assert report.codes() == ["range-violation"]
        assert "RecommenderSystem" in report.errors[0].message

    def test_range_violation_by_literal(self, seed_graph, seed_manifest):
        g = seed_graph.union(Graph([Triple(POPULARITY_BIAS, IS_ALIGNED_WITH, Literal("erasure"))]))
        report = _validate(g, seed_manifest)
        assert "got a literal" in report.errors[0].message

    def test_untyped_proprietary_object_is_a_warning(self, seed_graph, seed_manifest):
        g = seed_graph.union(Graph([Triple(POPULARITY_BIAS, IS_ALIGNED_WITH, bias("Exclusion"))]))
        report = _validate(g, seed_manifest)
        assert report.ok
        assert report.codes() == ["untyped-instance"]

    def test_undeclared_proprietary_property(self, seed_graph, seed_manifest):
        g = seed_graph.union(Graph([Triple(POPULARITY_BIAS, bias("inventedLink"), ERASURE)]))
        report = _validate(g, seed_manifest)
        assert report.codes() == ["undeclared-property"]

    def test_evaluation_checks(self, seed_graph, seed_manifest, ex):
        g = seed_graph.union(Graph([
            Triple(ex("e1"), RDF_TYPE, BIAS_EVALUATION),
            Triple(ex("e1"), EVALUATES_BIAS, POPULARITY_BIAS),
            Triple(ex("e1"), HAS_VALUE, Literal("high")),
        ]))
        report = _validate(g, seed_manifest)
        assert report.codes() == ["evaluation-incomplete", "invalid-value"]
        assert "usesMeasure" in report.errors[0].message


class TestConsistency:

    def test_seed_is_consistent(self, seed_ig):
        assert validation_service.check_consistency(seed_ig).findings == ()

    def test_subclass_cycle(self, ex):
        g = Graph([Triple(ex("A"), RDFS_SUBCLASSOF, ex("B")), Triple(ex("B"), RDFS_SUBCLASSOF, ex("A"))])
        report = validation_service.check_consistency(materialize(g))
        assert report.codes() == ["subclass-cycle"]
        assert report.findings[0].subject == ex("A")

    def test_disjoint_classes_sharing_a_member(self, ex):
        g = Graph([
            Triple(ex("A"), OWL_DISJOINT_WITH, ex("B")),
            Triple(ex("x"), RDF_TYPE, ex("A")),
            Triple(ex("x"), RDF_TYPE, ex("B")),
        ])
        report = validation_service.check_consistency(materialize(g))
        assert report.codes() == ["disjoint-violation"]
        assert report.findings[0].subject == ex("x")

    def test_disjoint_with_superclass(self, ex):
        g = Graph([Triple(ex("A"), RDFS_SUBCLASSOF, ex("B")), Triple(ex("A"), OWL_DISJOINT_WITH, ex("B"))])
        report = validation_service.check_consistency(materialize(g))
        assert report.codes() == ["disjoint-superclass"]


class TestPitfalls:

    def test_seed_only_warns_about_unused_properties(self, seed_graph, seed_manifest):
        report = validation_service.scan_pitfalls(seed_graph, seed_manifest)
        assert report.ok
        assert set(report.codes()) == {"unused-property"}
        assert {f.subject.local_name for f in report.findings} == {
            "evaluatedOn", "evaluatesBias", "hasDocument", "inApplication", "onTask", "usesMeasure", "hasValue",
        }

    def test_bare_class_and_property(self, seed_manifest):
        g = Graph([
            Triple(bias("Foo"), RDF_TYPE, OWL_CLASS),
            Triple(bias("Foo"), RDFS_LABEL, Literal("Something Else", lang_tag="en")),
            Triple(bias("relatesTo"), RDF_TYPE, OWL_OBJECT_PROPERTY),
        ])
        report = validation_service.scan_pitfalls(g, seed_manifest)
        assert report.codes() == [
            "label-mismatch", "missing-definition", "missing-domain", "missing-range", "unreachable-class",
            "unused-property",
        ]
        assert report.ok

    def test_non_english_labels_ignored(self, seed_manifest):
        g = Graph([
            Triple(bias("Bias"), RDF_TYPE, OWL_CLASS),
            Triple(bias("Bias"), RDFS_LABEL, Literal("Sesgo", lang_tag="es")),
        ])
        assert "label-mismatch" not in validation_service.scan_pitfalls(g, seed_manifest).codes()

    def test_external_terms_not_scanned(self, seed_manifest):
        g = Graph([Triple(Iri("http://www.w3.org/ns/dqv#QualityMeasurement"), RDF_TYPE, OWL_CLASS)])
        assert validation_service.scan_pitfalls(g, seed_manifest).findings == ()


class TestQualityIndicators:

    def test_seed_indicators(self, seed_graph, seed_manifest):
        report = validation_service.quality_indicators(seed_graph, seed_manifest)
        assert report.completeness.defined_classes == 6
        assert report.completeness.total_classes == 6
        assert report.interoperability.external_terms == 11
        assert report.interoperability.proprietary_terms == 27
        assert report.interoperability.total_terms == 38
        lines = report.to_lines()
        assert "completeness: 100%" in lines
        assert "externalRatio: 29%" in lines
        assert "proprietaryRatio: 71%" in lines
        assert lines[-1] == "accessibility: http://ontology.tib.eu/DocBIASO/visualization"

    def test_ratios_sum_to_one(self, seed_graph, seed_manifest):
        i = validation_service.quality_indicators(seed_graph, seed_manifest).interoperability
        assert i.external_ratio + i.proprietary_ratio == pytest.approx(1.0)

    def test_locator_override(self, seed_graph, seed_manifest):
        report = validation_service.quality_indicators(seed_graph, seed_manifest, locator="https://example.org/viz")
        assert report.accessibility == "https://example.org/viz"

    def test_percentages_round_to_whole_numbers(self, seed_manifest):
        classes = [Triple(bias(f"Term{i}"), RDF_TYPE, OWL_CLASS) for i in range(73)]
        classes += [Triple(Iri(f"http://www.w3.org/ns/dqv#Term{i}"), RDF_TYPE, OWL_CLASS) for i in range(316)]
        lines = validation_service.quality_indicators(Graph(classes), seed_manifest).to_lines()
        assert "externalRatio: 81%" in lines
        assert "proprietaryRatio: 19%" in lines

    def test_empty_schema(self, seed_manifest):
        with pytest.raises(QualityIndicatorError, match="empty schema"):
            validation_service.quality_indicators(Graph(), seed_manifest)

    def test_unclassified_namespace(self, seed_manifest, ex):
        with pytest.raises(QualityIndicatorError, match="unclassified namespace"):
            validation_service.quality_indicators(Graph([Triple(ex("C"), RDF_TYPE, OWL_CLASS)]), seed_manifest)

    def test_no_bias_classes_gives_zero_completeness(self, seed_manifest):
        g = Graph([Triple(bias("Harm"), RDF_TYPE, OWL_CLASS)])
        assert validation_service.quality_indicators(g, seed_manifest).completeness.ratio == 0.0

    def test_manifest_from_graph_classifies_custom_namespace(self, ex):
        g = Graph([Triple(ex("C"), RDF_TYPE, OWL_CLASS)])
        manifest = vocabulary_service.manifest_from_graph(g, namespaces={"http://example.org/": NamespaceKind.EXTERNAL})
        report = ValidationService().quality_indicators(g, manifest)
        assert report.interoperability.external_ratio == 1.0
