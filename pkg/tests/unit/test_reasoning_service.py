"""
Unit tests for Reasoning Service
Rule validation, fixpoint materialization and closure queries
"""

import random

import pytest
from hypothesis import given, settings, strategies as st

from src.services.reasoning_service import (
    DEFAULT_RULES, STRUCTURAL_RULES, Rule, RuleSet, X, Y, A, B,
    infer_types, is_subclass_of, materialize, subclasses, superclasses,
)
from src.services.triple_store import (
    Graph, Iri, Literal, Triple, OWL_EQUIVALENT_CLASS, OWL_INVERSE_OF, RDF_TYPE, RDFS_DOMAIN, RDFS_RANGE,
    RDFS_SUBCLASSOF, RDFS_SUBPROPERTYOF,
)
from src.services.vocabulary_service import (
    BIAS, GINI_IN_DEGREE, HAS_BIAS_MEASURE, MEASURES, ML_TASK, POPULARITY_BIAS, bias,
)
from src.utils.error_handler import ValidationError


def _ex(local: str) -> Iri:
    return Iri(f"http://example.org/{local}")


class TestRules:

    def test_conclusion_variables_must_be_bound(self):
        with pytest.raises(ValidationError):
            Rule("broken", ((X, RDF_TYPE, A),), (X, RDF_TYPE, B))

    def test_rule_needs_premises(self):
        with pytest.raises(ValidationError):
            Rule("empty", (), (X, RDF_TYPE, A))

    def test_rule_names_unique(self):
        rule = Rule("r", ((X, RDF_TYPE, A),), (X, RDF_TYPE, A))
        with pytest.raises(ValidationError):
            RuleSet([rule, rule])

    def test_default_rule_set(self):
        assert len(DEFAULT_RULES) == 11
        assert "property-inheritance" in DEFAULT_RULES.names
        assert "domain-inference" not in STRUCTURAL_RULES.names
        assert len(STRUCTURAL_RULES) == 9


class TestMaterialize:

    def test_subclass_and_type_closure(self, small_hierarchy, ex):
        ig = materialize(small_hierarchy)
        assert Triple(ex("A"), RDFS_SUBCLASSOF, ex("C")) in ig.inferred
        assert Triple(ex("a1"), RDF_TYPE, ex("B")) in ig.inferred
        assert Triple(ex("a1"), RDF_TYPE, ex("C")) in ig.inferred
        assert len(ig.inferred) == 3
        assert len(ig) == len(small_hierarchy) + 3

    def test_inferred_disjoint_from_base(self, seed_ig):
        assert all(t not in seed_ig.base for t in seed_ig.inferred)
        assert len(seed_ig.closure) == len(seed_ig.base) + len(seed_ig.inferred)

    def test_base_not_mutated(self, small_hierarchy):
        size = len(small_hierarchy)
        materialize(small_hierarchy)
        assert len(small_hierarchy) == size

    def test_idempotent(self, seed_ig):
        again = materialize(seed_ig.closure)
        assert len(again.inferred) == 0

    def test_no_reflexive_subclass_triples(self, ex):
        g = Graph([
            Triple(ex("A"), OWL_EQUIVALENT_CLASS, ex("B")),
            Triple(ex("B"), RDFS_SUBCLASSOF, ex("A")),
        ])
        ig = materialize(g)
        assert Triple(ex("A"), RDFS_SUBCLASSOF, ex("A")) not in ig.closure
        assert Triple(ex("A"), OWL_EQUIVALENT_CLASS, ex("A")) not in ig.closure
        assert is_subclass_of(ig, ex("A"), ex("A"))

    def test_equivalence_is_bidirectional_subclass(self, seed_ig):
        task = Iri("http://www.w3.org/ns/mls#Task")
        assert is_subclass_of(seed_ig, ML_TASK, task)
        assert is_subclass_of(seed_ig, task, ML_TASK)
        assert Triple(task, OWL_EQUIVALENT_CLASS, ML_TASK) in seed_ig.closure

    def test_inverse_property(self, seed_ig):
        assert Triple(POPULARITY_BIAS, HAS_BIAS_MEASURE, bias("PopularityMeasure2")) in seed_ig.closure
        assert Triple(GINI_IN_DEGREE, MEASURES, POPULARITY_BIAS) in seed_ig.base
        assert Triple(MEASURES, OWL_INVERSE_OF, HAS_BIAS_MEASURE) in seed_ig.inferred

    def test_domain_and_range_inference(self, ex):
        g = Graph([
            Triple(ex("p"), RDFS_DOMAIN, ex("D")),
            Triple(ex("p"), RDFS_RANGE, ex("R")),
            Triple(ex("s"), ex("p"), ex("o")),
            Triple(ex("s"), ex("p"), Literal("v")),
        ])
        ig = materialize(g)
        assert ex("D") in infer_types(ig, ex("s"))
        assert ex("R") in infer_types(ig, ex("o"))
        assert infer_types(ig, Literal("v")) == set()

    def test_structural_rules_skip_domain_and_range(self, ex):
        g = Graph([
            Triple(ex("p"), RDFS_DOMAIN, ex("D")),
            Triple(ex("s"), ex("p"), ex("o")),
        ])
        assert infer_types(materialize(g, STRUCTURAL_RULES), ex("s")) == set()

    def test_subproperty_chain_and_inheritance(self, ex):
        g = Graph([
            Triple(ex("p"), RDFS_SUBPROPERTYOF, ex("q")),
            Triple(ex("q"), RDFS_SUBPROPERTYOF, ex("r")),
            Triple(ex("s"), ex("p"), ex("o")),
        ])
        ig = materialize(g)
        assert Triple(ex("p"), RDFS_SUBPROPERTYOF, ex("r")) in ig.closure
        assert Triple(ex("s"), ex("r"), ex("o")) in ig.closure

    def test_evaluation_values_reach_dqv(self, seed_graph, ex):
        g = seed_graph.union(Graph([Triple(ex("eval"), bias("usesMeasure"), GINI_IN_DEGREE)]))
        ig = materialize(g)
        assert Triple(ex("eval"), Iri("http://www.w3.org/ns/dqv#isMeasurementOf"), GINI_IN_DEGREE) in ig.closure

    def test_seed_bias_hierarchy(self, seed_ig):
        assert is_subclass_of(seed_ig, POPULARITY_BIAS, BIAS)
        assert not is_subclass_of(seed_ig, BIAS, POPULARITY_BIAS)
        assert superclasses(seed_ig, POPULARITY_BIAS) == [BIAS, bias("StatisticalComputationalBias")]
        assert bias("DemographyBias") in subclasses(seed_ig, BIAS)

    def test_schedule_does_not_change_closure(self, seed_graph):
        reference = materialize(seed_graph).closure.triple_set()
        for seed in range(5):
            shuffled = materialize(seed_graph, rng=random.Random(seed))
            assert shuffled.closure.triple_set() == reference

    def test_inferred_graph_carries_prefixes(self, seed_ig):
        assert seed_ig.inferred_graph().prefixes == seed_ig.base.prefixes
        assert len(seed_ig.inferred_graph()) == len(seed_ig.inferred)


_NODES = [_ex(name) for name in "abcdef"]
_PREDICATES = [RDFS_SUBCLASSOF, RDF_TYPE, OWL_EQUIVALENT_CLASS, _ex("p"), _ex("q")]
_SCHEMA = [
    Triple(_ex("p"), RDFS_DOMAIN, _ex("a")),
    Triple(_ex("q"), RDFS_RANGE, _ex("b")),
    Triple(_ex("p"), OWL_INVERSE_OF, _ex("q")),
]

triples = st.builds(Triple, st.sampled_from(_NODES), st.sampled_from(_PREDICATES), st.sampled_from(_NODES))


class TestMaterializeProperties:

    @settings(max_examples=60, deadline=None)
    @given(st.lists(triples, max_size=15), st.integers(min_value=0, max_value=10_000))
    def test_order_independent_and_idempotent(self, base_triples, seed):
        g = Graph(base_triples + _SCHEMA)
        reference = materialize(g)
        shuffled = materialize(Graph(reversed(list(g.triples()))), rng=random.Random(seed))
        assert shuffled.closure.triple_set() == reference.closure.triple_set()
        assert len(materialize(reference.closure).inferred) == 0

    @settings(max_examples=60, deadline=None)
    @given(st.lists(triples, max_size=15))
    def test_monotone(self, base_triples):
        g = Graph(base_triples)
        smaller = Graph(base_triples[: len(base_triples) // 2])
        assert materialize(smaller).closure.triple_set() <= materialize(g).closure.triple_set()

    @settings(max_examples=60, deadline=None)
    @given(st.lists(triples, max_size=15))
    def test_never_reflexive_subclass(self, base_triples):
        g = Graph(t for t in base_triples if not (t.predicate == RDFS_SUBCLASSOF and t.subject == t.object))
        ig = materialize(g)
        assert not any(t.subject == t.object for t in ig.inferred
                       if t.predicate in (RDFS_SUBCLASSOF, OWL_EQUIVALENT_CLASS))
