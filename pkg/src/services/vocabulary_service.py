"""
Vocabulary Service - bias documentation vocabulary
Seed graph, manifest, typed registration of classes, measures and properties,
and reified bias evaluation records
"""

import hashlib
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

from src.services.triple_store import (
    Graph, Iri, Literal, Term, Triple,
    OWL_ANNOTATION_PROPERTY, OWL_CLASS, OWL_DATATYPE_PROPERTY, OWL_EQUIVALENT_CLASS,
    OWL_OBJECT_PROPERTY, RDF_PROPERTY, RDF_TYPE, RDFS_CLASS, RDFS_COMMENT, RDFS_DOMAIN,
    RDFS_LABEL, RDFS_NS, RDFS_RANGE, RDFS_SUBCLASSOF, SKOS_DEFINITION, SKOS_NS,
    XSD_DATETIME, XSD_DECIMAL, XSD_NS, term_key,
)
from src.services.turtle_codec import parse_turtle
from src.utils.config import Settings, get_settings, load_yaml_file
from src.utils.error_handler import ValidationError, VocabularyError, handle_service_errors
from src.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

BIAS_NS = "https://bias-project.x/bias/"
DCAT_NS = "http://www.w3.org/ns/dcat#"
DCTERMS_NS = "http://purl.org/dc/terms/"
DQV_NS = "http://www.w3.org/ns/dqv#"
FOAF_NS = "http://xmlns.com/foaf/0.1/"
MLS_NS = "http://www.w3.org/ns/mls#"
PROV_NS = "http://www.w3.org/ns/prov#"


def bias(local: str) -> Iri:
    """IRI in the bias namespace"""
    return Iri(BIAS_NS + local)


# Core concepts
BIAS = bias("Bias")
APPLICATION = bias("Application")
ML_TASK = bias("MLTask")
HARM = bias("Harm")
BIAS_MEASURE = bias("BiasMeasure")
BIAS_EVALUATION = bias("BiasEvaluation")
DCAT_DATASET = Iri(DCAT_NS + "Dataset")
FOAF_DOCUMENT = Iri(FOAF_NS + "Document")

# Properties
MEASURES = bias("measures")
HAS_BIAS_MEASURE = bias("hasBiasMeasure")
IS_ASSOCIATED_WITH = bias("isAssociatedWith")
IS_ALIGNED_WITH = bias("isAlignedWith")
FORMALIZATION = bias("formalization")
EVALUATES_BIAS = bias("evaluatesBias")
USES_MEASURE = bias("usesMeasure")
HAS_VALUE = bias("hasValue")
EVALUATED_ON = bias("evaluatedOn")
ON_TASK = bias("onTask")
HAS_DOCUMENT = bias("hasDocument")
IN_APPLICATION = bias("inApplication")
PROV_GENERATED_AT_TIME = Iri(PROV_NS + "generatedAtTime")
DCTERMS_SOURCE = Iri(DCTERMS_NS + "source")
SKOS_ALT_LABEL = Iri(SKOS_NS + "altLabel")

# Seed individuals
POPULARITY_BIAS = bias("PopularityBias")
GINI_IN_DEGREE = bias("GiniInDegree")
RECOMMENDER_SYSTEM = bias("RecommenderSystem")
ERASURE = bias("Erasure")

CLASS_TYPES = (OWL_CLASS, RDFS_CLASS)
PROPERTY_TYPES = (OWL_OBJECT_PROPERTY, OWL_DATATYPE_PROPERTY, OWL_ANNOTATION_PROPERTY, RDF_PROPERTY)
DATATYPE_NAMESPACES = (XSD_NS,)
RDFS_LITERAL = Iri(RDFS_NS + "Literal")


class PropertyKind(Enum):
    OBJECT = "object"
    DATA = "data"
    ANNOTATION = "annotation"


class NamespaceKind(Enum):
    EXTERNAL = "external"
    PROPRIETARY = "proprietary"


def is_datatype_iri(iri: Iri) -> bool:
    return iri == RDFS_LITERAL or any(iri.value.startswith(ns) for ns in DATATYPE_NAMESPACES)


@dataclass(frozen=True)
class ClassDef:
    """Class declaration with label, definition and hierarchy links"""
    iri: Iri
    label: str
    definition: Optional[Literal] = None
    parents: Tuple[Iri, ...] = ()
    equivalents: Tuple[Iri, ...] = ()
    source: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'parents', tuple(self.parents))
        object.__setattr__(self, 'equivalents', tuple(self.equivalents))
        if self.iri in self.parents:
            raise ValidationError(f"{self.iri} cannot be its own parent", "parents")
        if self.definition is not None and self.definition.lang_tag is None:
            raise ValidationError("Class definitions must carry a language tag", "definition")


@dataclass(frozen=True)
class PropertyDef:
    """Property declaration; data properties range over datatypes, object properties over classes"""
    iri: Iri
    kind: PropertyKind
    domain: Optional[Iri] = None
    range: Optional[Iri] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.range is None:
            return
        if self.kind == PropertyKind.DATA and not is_datatype_iri(self.range):
            raise ValidationError(f"Data property {self.iri} needs a datatype range", "range")
        if self.kind == PropertyKind.OBJECT and is_datatype_iri(self.range):
            raise ValidationError(f"Object property {self.iri} needs a class range", "range")


@dataclass(frozen=True)
class VocabCounts:
    class_count: int
    object_property_count: int
    data_property_count: int
    annotation_property_count: int = 0


@dataclass
class VocabManifest:
    """Declared vocabulary: classes, properties, namespace classification and counts"""
    classes: List[ClassDef]
    properties: List[PropertyDef]
    namespaces: Dict[str, NamespaceKind]
    counts: VocabCounts
    top_concepts: List[Iri] = field(default_factory=list)

    def classify(self, iri: Iri) -> Optional[NamespaceKind]:
        """Namespace classification by longest matching namespace"""
        best = None
        for namespace, kind in self.namespaces.items():
            if iri.value.startswith(namespace) and (best is None or len(namespace) > len(best[0])):
                best = (namespace, kind)
        return best[1] if best else None

    def is_proprietary(self, iri: Iri) -> bool:
        return self.classify(iri) == NamespaceKind.PROPRIETARY

    def proprietary_namespaces(self) -> List[str]:
        return sorted(ns for ns, kind in self.namespaces.items() if kind == NamespaceKind.PROPRIETARY)

    def property(self, iri: Iri) -> Optional[PropertyDef]:
        for prop in self.properties:
            if prop.iri == iri:
                return prop
        return None

    def class_iris(self) -> Set[Iri]:
        return {c.iri for c in self.classes}

    def property_iris(self) -> Set[Iri]:
        return {p.iri for p in self.properties}


@dataclass(frozen=True)
class BiasEvaluationRecord:
    """One measured value of a bias measure on a dataset"""
    bias: Iri
    measure: Iri
    value: Decimal
    dataset: Iri
    ml_task: Optional[Iri] = None
    document: Optional[Iri] = None
    application: Optional[Iri] = None
    timestamp: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    comment: Optional[str] = None


# Graph helpers shared by the other services

def declared_classes(g: Graph) -> Set[Iri]:
    return {t.subject for cls in CLASS_TYPES for t in g.triples(None, RDF_TYPE, cls) if isinstance(t.subject, Iri)}


def declared_properties(g: Graph) -> Dict[Iri, PropertyKind]:
    kinds = {
        OWL_OBJECT_PROPERTY: PropertyKind.OBJECT,
        OWL_DATATYPE_PROPERTY: PropertyKind.DATA,
        OWL_ANNOTATION_PROPERTY: PropertyKind.ANNOTATION,
        RDF_PROPERTY: PropertyKind.OBJECT,
    }
    found: Dict[Iri, PropertyKind] = {}
    # specific OWL kinds win over a plain rdf:Property declaration
    for declared_type in (RDF_PROPERTY, OWL_ANNOTATION_PROPERTY, OWL_OBJECT_PROPERTY, OWL_DATATYPE_PROPERTY):
        for t in g.triples(None, RDF_TYPE, declared_type):
            if isinstance(t.subject, Iri):
                found[t.subject] = kinds[declared_type]
    return found


def ancestors(g: Graph, iri: Iri) -> Set[Iri]:
    """Strict superclasses reachable through rdfs:subClassOf and owl:equivalentClass"""
    seen: Set[Iri] = set()
    frontier = [iri]
    while frontier:
        current = frontier.pop()
        neighbours = list(g.objects(current, RDFS_SUBCLASSOF)) + list(g.objects(current, OWL_EQUIVALENT_CLASS))
        neighbours += list(g.subjects(OWL_EQUIVALENT_CLASS, current))
        for parent in neighbours:
            if isinstance(parent, Iri) and parent not in seen:
                seen.add(parent)
                frontier.append(parent)
    seen.discard(iri)
    return seen


def is_kind_of(g: Graph, term: Iri, top: Iri) -> bool:
    """Subclass-or-instance test used for bias and measure arguments"""
    if term == top or top in ancestors(g, term):
        return True
    return any(isinstance(cls, Iri) and (cls == top or top in ancestors(g, cls))
               for cls in g.objects(term, RDF_TYPE))


def label_of(g: Graph, term: Term) -> str:
    """English rdfs:label, any label, or the local name"""
    labels = [o for o in g.objects(term, RDFS_LABEL) if isinstance(o, Literal)]
    for preferred in labels:
        if preferred.lang_tag and preferred.lang_tag.lower().startswith('en'):
            return preferred.lexical
    if labels:
        return labels[0].lexical
    return term.local_name if isinstance(term, Iri) else str(term)


def expand_curie(g: Graph, text: str) -> Iri:
    """Full IRI, <IRI>, or prefix:local resolved against the graph's prefixes"""
    text = text.strip()
    if text.startswith('<') and text.endswith('>'):
        return Iri(text[1:-1])
    if '://' in text or text.lower().startswith('urn:'):
        return Iri(text)
    prefix, sep, local = text.partition(':')
    if sep and prefix in g.prefixes:
        return Iri(g.prefixes[prefix] + local)
    raise ValidationError(f"Cannot resolve term {text!r}", "iri")


def _format_decimal(value: Decimal) -> str:
    text = format(value, 'f')
    return text if text not in ('-0', '-0.0') else text.lstrip('-')


def _format_timestamp(timestamp: datetime) -> str:
    if timestamp.tzinfo is None:
        timestamp = timestamp.replace(tzinfo=timezone.utc)
    utc = timestamp.astimezone(timezone.utc)
    return utc.isoformat(timespec='seconds').replace('+00:00', 'Z')


def to_decimal(value: Union[Decimal, int, float, str]) -> Decimal:
    """Finite decimal or ValidationError"""
    try:
        number = value if isinstance(value, Decimal) else Decimal(str(value))
    except (InvalidOperation, ValueError) as e:
        raise ValidationError(f"Value {value!r} is not a decimal number", "value") from e
    if not number.is_finite():
        raise ValidationError(f"Value {value!r} is not finite", "value")
    return number


class VocabularyService:
    """
    Vocabulary operations over immutable Graph values
    Every mutating operation returns a new graph version
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self._seed_cache: Optional[Graph] = None
        self._manifest_cache: Optional[VocabManifest] = None

    @performance_monitor.track_operation("seed_graph")
    def seed_graph(self) -> Graph:
        """Built-in vocabulary graph (a fresh copy per call)"""
        if self._seed_cache is None:
            path = Path(self.settings.seed_file)
            self._seed_cache = parse_turtle(path.read_text(encoding='utf-8'), source=str(path))
            logger.info(f"Loaded seed vocabulary: {len(self._seed_cache)} triples")
        return self._seed_cache.copy()

    def seed_manifest(self) -> VocabManifest:
        """Shipped manifest sidecar"""
        if self._manifest_cache is None:
            self._manifest_cache = self.load_manifest(self.settings.manifest_file)
        return self._manifest_cache

    @handle_service_errors
    def load_manifest(self, path: str) -> VocabManifest:
        """Read a manifest YAML sidecar"""
        raw = load_yaml_file(path)

        classes = [
            ClassDef(
                iri=Iri(entry['iri']),
                label=entry.get('label') or Iri(entry['iri']).local_name,
                parents=tuple(Iri(p) for p in entry.get('parents', [])),
                equivalents=tuple(Iri(e) for e in entry.get('equivalents', [])),
                source=entry.get('source'),
            )
            for entry in raw.get('classes', [])
        ]
        properties = [
            PropertyDef(
                iri=Iri(entry['iri']),
                kind=PropertyKind(entry.get('kind', 'object')),
                domain=Iri(entry['domain']) if entry.get('domain') else None,
                range=Iri(entry['range']) if entry.get('range') else None,
                label=entry.get('label'),
            )
            for entry in raw.get('properties', [])
        ]
        counts_raw = raw.get('counts', {})
        counts = VocabCounts(
            class_count=int(counts_raw.get('class_count', len(classes))),
            object_property_count=int(counts_raw.get('object_property_count', 0)),
            data_property_count=int(counts_raw.get('data_property_count', 0)),
            annotation_property_count=int(counts_raw.get('annotation_property_count', 0)),
        )
        namespaces = {ns: NamespaceKind(kind) for ns, kind in (raw.get('namespaces') or {}).items()}
        top_concepts = [Iri(iri) for iri in raw.get('top_concepts', [])]
        return VocabManifest(classes, properties, namespaces, counts, top_concepts)

    @handle_service_errors
    def manifest_from_graph(self, g: Graph, namespaces: Optional[Dict[str, NamespaceKind]] = None,
                            top_concepts: Optional[List[Iri]] = None) -> VocabManifest:
        """Derive a manifest from the declarations present in g"""
        seed = self.seed_manifest()

        classes = []
        for iri in sorted(declared_classes(g), key=term_key):
            definition = self.lookup_definition(g, iri)
            parents = tuple(p for p in g.objects(iri, RDFS_SUBCLASSOF) if isinstance(p, Iri) and p != iri)
            equivalents = tuple(e for e in g.objects(iri, OWL_EQUIVALENT_CLASS) if isinstance(e, Iri))
            source = g.value(iri, DCTERMS_SOURCE)
            classes.append(ClassDef(
                iri=iri,
                label=label_of(g, iri),
                definition=definition if definition is not None and definition.lang_tag else None,
                parents=parents,
                equivalents=equivalents,
                source=source.lexical if isinstance(source, Literal) else None,
            ))

        properties = []
        for iri, kind in sorted(declared_properties(g).items(), key=lambda item: term_key(item[0])):
            domain = g.value(iri, RDFS_DOMAIN)
            range_ = g.value(iri, RDFS_RANGE)
            range_iri = range_ if isinstance(range_, Iri) else None
            if kind == PropertyKind.OBJECT and range_iri is not None and is_datatype_iri(range_iri):
                kind = PropertyKind.DATA
            properties.append(PropertyDef(
                iri=iri,
                kind=kind,
                domain=domain if isinstance(domain, Iri) else None,
                range=range_iri,
                label=label_of(g, iri),
            ))

        counts = VocabCounts(
            class_count=len(classes),
            object_property_count=sum(1 for p in properties if p.kind == PropertyKind.OBJECT),
            data_property_count=sum(1 for p in properties if p.kind == PropertyKind.DATA),
            annotation_property_count=sum(1 for p in properties if p.kind == PropertyKind.ANNOTATION),
        )
        return VocabManifest(
            classes=classes,
            properties=properties,
            namespaces=dict(namespaces if namespaces is not None else seed.namespaces),
            counts=counts,
            top_concepts=list(top_concepts if top_concepts is not None else seed.top_concepts),
        )

    @handle_service_errors
    @performance_monitor.track_operation("register_bias_class")
    def register_bias_class(self, g: Graph, definition: ClassDef) -> Tuple[Graph, Iri]:
        """Add a bias class below existing bias classes"""
        for parent in definition.parents or (BIAS,):
            if parent != BIAS and not (parent in declared_classes(g) and BIAS in ancestors(g, parent)):
                raise VocabularyError(f"Unresolved parent {parent} (not a bias class)", str(parent))

        if not definition.parents:
            definition = ClassDef(definition.iri, definition.label, definition.definition, (BIAS,),
                                  definition.equivalents, definition.source)
        return self._add_class(g, definition)

    @handle_service_errors
    @performance_monitor.track_operation("register_measure")
    def register_measure(self, g: Graph, definition: ClassDef, measures: Iri,
                         formalization: Literal) -> Tuple[Graph, Iri]:
        """Add a bias measure class linked to the bias it measures"""
        if not is_kind_of(g, measures, BIAS) or not g.mentions(measures):
            raise VocabularyError(f"Unresolved bias target {measures}", str(measures))

        parents = definition.parents if BIAS_MEASURE in definition.parents else definition.parents + (BIAS_MEASURE,)
        for parent in parents:
            if parent != BIAS_MEASURE and BIAS_MEASURE not in ancestors(g, parent):
                raise VocabularyError(f"Unresolved parent {parent} (not a bias measure)", str(parent))

        existing_formalization = [o for o in g.objects(definition.iri, FORMALIZATION) if isinstance(o, Literal)]
        if existing_formalization and formalization not in existing_formalization and \
                any(o.lang_tag == formalization.lang_tag for o in existing_formalization):
            raise VocabularyError(f"Conflicting formalization for {definition.iri}", str(definition.iri))

        measure_def = ClassDef(definition.iri, definition.label, definition.definition, parents,
                               definition.equivalents, definition.source)
        updated, iri = self._add_class(g, measure_def)
        additions = [
            Triple(iri, MEASURES, measures),
            Triple(iri, FORMALIZATION, formalization),
        ]
        return self._with_triples(updated, additions), iri

    @handle_service_errors
    def register_property(self, g: Graph, definition: PropertyDef) -> Tuple[Graph, Iri]:
        """Declare an object, data or annotation property"""
        declared_type = {
            PropertyKind.OBJECT: OWL_OBJECT_PROPERTY,
            PropertyKind.DATA: OWL_DATATYPE_PROPERTY,
            PropertyKind.ANNOTATION: OWL_ANNOTATION_PROPERTY,
        }[definition.kind]
        existing = declared_properties(g).get(definition.iri)
        if existing is not None and existing != definition.kind:
            raise VocabularyError(f"{definition.iri} already declared as {existing.value} property",
                                  str(definition.iri))

        additions = [Triple(definition.iri, RDF_TYPE, declared_type)]
        if definition.domain is not None:
            additions.append(Triple(definition.iri, RDFS_DOMAIN, definition.domain))
        if definition.range is not None:
            additions.append(Triple(definition.iri, RDFS_RANGE, definition.range))
        if definition.label:
            additions.append(Triple(definition.iri, RDFS_LABEL, Literal(definition.label, lang_tag='en')))
        return self._with_triples(g, additions), definition.iri

    @handle_service_errors
    @performance_monitor.track_operation("record_evaluation")
    def record_evaluation(self, g: Graph, record: BiasEvaluationRecord) -> Tuple[Graph, Iri]:
        """Mint a BiasEvaluation instance linking every present field of the record"""
        if not is_kind_of(g, record.bias, BIAS) or not g.mentions(record.bias):
            raise VocabularyError(f"Bias {record.bias} not found", str(record.bias))
        if not is_kind_of(g, record.measure, BIAS_MEASURE) or not g.mentions(record.measure):
            raise VocabularyError(f"Measure {record.measure} not found", str(record.measure))
        value = to_decimal(record.value)

        timestamp = _format_timestamp(record.timestamp)
        iri = self._mint_evaluation_iri(g, record, value, timestamp)

        additions = [
            Triple(iri, RDF_TYPE, BIAS_EVALUATION),
            Triple(iri, EVALUATES_BIAS, record.bias),
            Triple(iri, USES_MEASURE, record.measure),
            Triple(iri, HAS_VALUE, Literal(_format_decimal(value), datatype=XSD_DECIMAL)),
            Triple(iri, EVALUATED_ON, record.dataset),
            Triple(iri, PROV_GENERATED_AT_TIME, Literal(timestamp, datatype=XSD_DATETIME)),
        ]
        if record.ml_task is not None:
            additions.append(Triple(iri, ON_TASK, record.ml_task))
        if record.document is not None:
            additions.append(Triple(iri, HAS_DOCUMENT, record.document))
        if record.application is not None:
            additions.append(Triple(iri, IN_APPLICATION, record.application))
        if record.comment:
            additions.append(Triple(iri, RDFS_COMMENT, Literal(record.comment)))

        logger.info(f"Recorded evaluation {iri.local_name}: {record.measure.local_name}={value} "
                    f"on {record.dataset}")
        return self._with_triples(g, additions), iri

    def lookup_definition(self, g: Graph, term: Iri) -> Optional[Literal]:
        """skos:definition of term, English preferred"""
        definitions = [o for o in g.objects(term, SKOS_DEFINITION) if isinstance(o, Literal)]
        if not definitions:
            return None
        for candidate in definitions:
            if candidate.lang_tag and candidate.lang_tag.lower() == 'en':
                return candidate
        for candidate in definitions:
            if candidate.lang_tag and candidate.lang_tag.lower().startswith('en-'):
                return candidate
        return definitions[0]

    @handle_service_errors
    def load_extension(self, g: Graph, path: str) -> Tuple[Graph, List[Iri]]:
        """Apply an extension YAML file (properties, classes, measures) in that order"""
        raw = load_yaml_file(path)

        for prefix, namespace in (raw.get('prefixes') or {}).items():
            if prefix not in g.prefixes:
                g = g.copy()
                g.bind(prefix, namespace)

        added: List[Iri] = []
        for entry in raw.get('properties', []) or []:
            definition = PropertyDef(
                iri=expand_curie(g, entry['iri']),
                kind=PropertyKind(entry.get('kind', 'object')),
                domain=expand_curie(g, entry['domain']) if entry.get('domain') else None,
                range=expand_curie(g, entry['range']) if entry.get('range') else None,
                label=entry.get('label'),
            )
            g, iri = self.register_property(g, definition)
            added.append(iri)

        for entry in raw.get('classes', []) or []:
            g, iri = self.register_bias_class(g, self._class_def_from_entry(g, entry))
            added.append(iri)

        for entry in raw.get('measures', []) or []:
            g, iri = self.register_measure(
                g,
                self._class_def_from_entry(g, entry),
                expand_curie(g, entry['measures']),
                Literal(entry['formalization'], lang_tag=entry.get('lang', 'en')),
            )
            added.append(iri)

        logger.info(f"Applied extension {path}: {len(added)} terms")
        return g, added

    def _class_def_from_entry(self, g: Graph, entry: Dict) -> ClassDef:
        lang = entry.get('lang', 'en')
        return ClassDef(
            iri=expand_curie(g, entry['iri']),
            label=entry.get('label') or expand_curie(g, entry['iri']).local_name,
            definition=Literal(entry['definition'], lang_tag=lang) if entry.get('definition') else None,
            parents=tuple(expand_curie(g, p) for p in entry.get('parents', []) or []),
            equivalents=tuple(expand_curie(g, e) for e in entry.get('equivalents', []) or []),
            source=entry.get('source'),
        )

    def _add_class(self, g: Graph, definition: ClassDef) -> Tuple[Graph, Iri]:
        iri = definition.iri
        if iri in declared_classes(g) and definition.definition is not None:
            for existing in g.objects(iri, SKOS_DEFINITION):
                if isinstance(existing, Literal) and existing.lang_tag == definition.definition.lang_tag \
                        and existing != definition.definition:
                    raise VocabularyError(f"Duplicate class {iri} with conflicting definition", str(iri))

        additions = [
            Triple(iri, RDF_TYPE, OWL_CLASS),
            Triple(iri, RDFS_LABEL, Literal(definition.label, lang_tag='en')),
        ]
        if definition.definition is not None:
            additions.append(Triple(iri, SKOS_DEFINITION, definition.definition))
        additions.extend(Triple(iri, RDFS_SUBCLASSOF, parent) for parent in definition.parents)
        additions.extend(Triple(iri, OWL_EQUIVALENT_CLASS, other) for other in definition.equivalents)
        if definition.source:
            additions.append(Triple(iri, DCTERMS_SOURCE, Literal(definition.source)))
        return self._with_triples(g, additions), iri

    @staticmethod
    def _with_triples(g: Graph, additions: Iterable[Triple]) -> Graph:
        additions = list(additions)
        if all(t in g for t in additions):
            return g
        updated = g.copy()
        for triple in additions:
            updated.add(triple)
        return updated

    def _mint_evaluation_iri(self, g: Graph, record: BiasEvaluationRecord, value: Decimal,
                             timestamp: str) -> Iri:
        fingerprint = "|".join(str(part) for part in (
            record.bias, record.measure, value, record.dataset, record.ml_task,
            record.document, record.application, timestamp,
        ))
        digest = hashlib.sha256(fingerprint.encode('utf-8')).hexdigest()[:12]
        base = f"{self.settings.evaluation_local_prefix}{digest}"
        namespace = self.settings.bias_namespace
        candidate = Iri(namespace + base)
        counter = 1
        while g.mentions(candidate):
            candidate = Iri(f"{namespace}{base}-{counter}")
            counter += 1
        return candidate


# Global vocabulary service instance
vocabulary_service = VocabularyService()
