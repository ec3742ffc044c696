"""
Reasoning Service - RDFS-lite forward chaining
Semi-naive materialization with owl:equivalentClass and owl:inverseOf support
"""

import logging
import random
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple

from src.services.triple_store import (
    BlankNode, Graph, Iri, Literal, PatternTerm, Term, Triple, Variable,
    OWL_EQUIVALENT_CLASS, OWL_INVERSE_OF, RDF_TYPE, RDFS_DOMAIN, RDFS_RANGE,
    RDFS_SUBCLASSOF, RDFS_SUBPROPERTYOF, term_key,
)
from src.utils.error_handler import ValidationError, handle_service_errors
from src.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

Pattern = Tuple[PatternTerm, PatternTerm, PatternTerm]
Binding = Dict[Variable, Term]

# Predicates whose reflexive statements are never materialized
IRREFLEXIVE = (RDFS_SUBCLASSOF, RDFS_SUBPROPERTYOF, OWL_EQUIVALENT_CLASS)


def _variables(pattern: Pattern) -> Set[Variable]:
    return {term for term in pattern if isinstance(term, Variable)}


@dataclass(frozen=True)
class Rule:
    """Horn rule: all premises matched jointly produce the conclusion"""
    name: str
    premises: Tuple[Pattern, ...]
    conclusion: Pattern

    def __post_init__(self):
        object.__setattr__(self, 'premises', tuple(tuple(p) for p in self.premises))
        if not self.premises:
            raise ValidationError(f"Rule {self.name} has no premises", "premises")
        bound = set().union(*(_variables(p) for p in self.premises))
        unbound = _variables(self.conclusion) - bound
        if unbound:
            names = ", ".join(sorted(str(v) for v in unbound))
            raise ValidationError(f"Rule {self.name} concludes unbound variables: {names}", "conclusion")


class RuleSet:
    """Ordered, uniquely named rules"""

    def __init__(self, rules: Iterable[Rule]):
        self.rules: Tuple[Rule, ...] = tuple(rules)
        names = [rule.name for rule in self.rules]
        if len(names) != len(set(names)):
            raise ValidationError("Rule names must be unique", "rules")

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def names(self) -> List[str]:
        return [rule.name for rule in self.rules]

    def without(self, *names: str) -> "RuleSet":
        return RuleSet(rule for rule in self.rules if rule.name not in names)


X, Y, P, Q, A, B, C = (Variable(n) for n in ("x", "y", "p", "q", "a", "b", "c"))

SUBCLASS_TRANSITIVITY = Rule(
    "subClassOf-transitivity",
    ((A, RDFS_SUBCLASSOF, B), (B, RDFS_SUBCLASSOF, C)),
    (A, RDFS_SUBCLASSOF, C),
)
SUBPROPERTY_TRANSITIVITY = Rule(
    "subPropertyOf-transitivity",
    ((P, RDFS_SUBPROPERTYOF, Q), (Q, RDFS_SUBPROPERTYOF, C)),
    (P, RDFS_SUBPROPERTYOF, C),
)
TYPE_INHERITANCE = Rule(
    "type-inheritance",
    ((X, RDF_TYPE, A), (A, RDFS_SUBCLASSOF, B)),
    (X, RDF_TYPE, B),
)
DOMAIN_INFERENCE = Rule(
    "domain-inference",
    ((P, RDFS_DOMAIN, C), (X, P, Y)),
    (X, RDF_TYPE, C),
)
RANGE_INFERENCE = Rule(
    "range-inference",
    ((P, RDFS_RANGE, C), (X, P, Y)),
    (Y, RDF_TYPE, C),
)
EQUIVALENCE_SYMMETRY = Rule(
    "equivalentClass-symmetry",
    ((A, OWL_EQUIVALENT_CLASS, B),),
    (B, OWL_EQUIVALENT_CLASS, A),
)
EQUIVALENCE_SUBCLASS = Rule(
    "equivalentClass-to-subClassOf",
    ((A, OWL_EQUIVALENT_CLASS, B),),
    (A, RDFS_SUBCLASSOF, B),
)
EQUIVALENCE_SUPERCLASS = Rule(
    "equivalentClass-to-superClassOf",
    ((A, OWL_EQUIVALENT_CLASS, B),),
    (B, RDFS_SUBCLASSOF, A),
)
INVERSE_PROPERTY = Rule(
    "inverse-property",
    ((P, OWL_INVERSE_OF, Q), (X, P, Y)),
    (Y, Q, X),
)
INVERSE_SYMMETRY = Rule(
    "inverseOf-symmetry",
    ((P, OWL_INVERSE_OF, Q),),
    (Q, OWL_INVERSE_OF, P),
)
PROPERTY_INHERITANCE = Rule(
    "property-inheritance",
    ((P, RDFS_SUBPROPERTYOF, Q), (X, P, Y)),
    (X, Q, Y),
)

DEFAULT_RULES = RuleSet([
    SUBCLASS_TRANSITIVITY,
    SUBPROPERTY_TRANSITIVITY,
    TYPE_INHERITANCE,
    DOMAIN_INFERENCE,
    RANGE_INFERENCE,
    EQUIVALENCE_SYMMETRY,
    EQUIVALENCE_SUBCLASS,
    EQUIVALENCE_SUPERCLASS,
    INVERSE_PROPERTY,
    INVERSE_SYMMETRY,
    PROPERTY_INHERITANCE,
])

# Asserted-type reasoning: hierarchy only, no types read off property usage
STRUCTURAL_RULES = DEFAULT_RULES.without("domain-inference", "range-inference")


@dataclass(frozen=True)
class InferredGraph:
    """Base graph plus the triples its closure adds"""
    base: Graph
    inferred: FrozenSet[Triple]
    closure: Graph

    def triples(self, s: Optional[Term] = None, p: Optional[Iri] = None,
                o: Optional[Term] = None) -> Iterator[Triple]:
        return self.closure.triples(s, p, o)

    def __len__(self) -> int:
        return len(self.closure)

    def inferred_graph(self) -> Graph:
        """Inferred triples as a graph carrying the base prefixes"""
        return Graph(sorted(self.inferred, key=Triple.sort_key), prefixes=self.base.prefixes)


def _unify(pattern: Pattern, triple: Triple, binding: Binding) -> Optional[Binding]:
    extended = dict(binding)
    for pattern_term, value in zip(pattern, (triple.subject, triple.predicate, triple.object)):
        if isinstance(pattern_term, Variable):
            bound = extended.get(pattern_term)
            if bound is None:
                extended[pattern_term] = value
            elif bound != value:
                return None
        elif pattern_term != value:
            return None
    return extended


def _resolve(term: PatternTerm, binding: Binding) -> Optional[PatternTerm]:
    if isinstance(term, Variable):
        return binding.get(term)
    return term


def _join(graph: Graph, patterns: List[Pattern], binding: Binding) -> Iterator[Binding]:
    if not patterns:
        yield binding
        return
    pattern, rest = patterns[0], patterns[1:]
    s, p, o = (_resolve(term, binding) for term in pattern)
    if s is not None and not isinstance(s, (Iri, BlankNode)):
        return
    if p is not None and not isinstance(p, Iri):
        return
    for triple in graph.triples(s, p, o):
        extended = _unify(pattern, triple, binding)
        if extended is not None:
            yield from _join(graph, rest, extended)


def _instantiate(conclusion: Pattern, binding: Binding) -> Optional[Triple]:
    s, p, o = (_resolve(term, binding) for term in conclusion)
    if not isinstance(s, (Iri, BlankNode)) or not isinstance(p, Iri) or o is None:
        return None
    if isinstance(o, Variable):
        return None
    if p in IRREFLEXIVE and s == o:
        return None
    return Triple(s, p, o)


def _fire(rule: Rule, closure: Graph, delta: List[Triple]) -> Iterator[Triple]:
    """Conclusions using at least one delta triple in some premise"""
    for index, premise in enumerate(rule.premises):
        others = [p for i, p in enumerate(rule.premises) if i != index]
        for triple in delta:
            binding = _unify(premise, triple, {})
            if binding is None:
                continue
            for full in _join(closure, others, binding):
                conclusion = _instantiate(rule.conclusion, full)
                if conclusion is not None:
                    yield conclusion


@handle_service_errors
def materialize(g: Graph, rs: RuleSet = DEFAULT_RULES, rng: Optional[random.Random] = None) -> InferredGraph:
    """
    Fixpoint closure of g under rs
    rng shuffles the rule schedule and frontier order each round; the closure does not depend on it
    """
    with performance_monitor.track_execution_time("materialize") as counters:
        closure = g.copy()
        delta = list(g.triples())
        rounds = 0
        while delta:
            rounds += 1
            rules = list(rs)
            if rng is not None:
                rng.shuffle(rules)
                rng.shuffle(delta)
            produced: Set[Triple] = set()
            for rule in rules:
                for conclusion in _fire(rule, closure, delta):
                    if conclusion not in closure:
                        produced.add(conclusion)
            for triple in produced:
                closure.add(triple)
            delta = sorted(produced, key=Triple.sort_key)

        inferred = frozenset(t for t in closure.triples() if t not in g)
        counters.update(base=len(g), inferred=len(inferred), rounds=rounds)
    logger.debug(f"Materialized {len(inferred)} triples over {len(g)} base triples in {rounds} rounds")
    return InferredGraph(base=g, inferred=inferred, closure=closure)


def is_subclass_of(ig: InferredGraph, a: Iri, b: Iri) -> bool:
    """Reflexive subclass test over base and inferred triples"""
    if a == b:
        return True
    return Triple(a, RDFS_SUBCLASSOF, b) in ig.closure


def infer_types(ig: InferredGraph, instance: Term) -> Set[Iri]:
    """All classes of instance in the closure"""
    if isinstance(instance, Literal):
        return set()
    return {o for o in ig.closure.objects(instance, RDF_TYPE) if isinstance(o, Iri)}


def superclasses(ig: InferredGraph, cls: Iri) -> List[Iri]:
    """Strict superclasses in term order"""
    return sorted((o for o in ig.closure.objects(cls, RDFS_SUBCLASSOF) if isinstance(o, Iri) and o != cls),
                  key=term_key)


def subclasses(ig: InferredGraph, cls: Iri) -> List[Iri]:
    """Strict subclasses in term order"""
    return sorted((s for s in ig.closure.subjects(RDFS_SUBCLASSOF, cls) if isinstance(s, Iri) and s != cls),
                  key=term_key)
