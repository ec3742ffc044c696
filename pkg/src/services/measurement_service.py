"""
Measurement Service - bias measures over interaction data
In-degree distributions, the Gini coefficient, a measure registry and
recording of computed values as bias evaluations
"""

import hashlib
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from src.services.triple_store import Graph, Iri, term_key
from src.services.vocabulary_service import (
    GINI_IN_DEGREE, HAS_BIAS_MEASURE, MEASURES, BiasEvaluationRecord, VocabularyService, vocabulary_service,
)
from src.utils.error_handler import MeasureError, ValidationError, handle_service_errors
from src.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

# Stored values keep twelve decimal places
VALUE_QUANTUM = Decimal("1e-12")


@dataclass(frozen=True)
class EdgeList:
    """Directed interactions (source -> target), optionally over an explicit node universe"""
    edges: Tuple[Tuple[str, str], ...]
    node_universe: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, 'edges', tuple((str(s), str(t)) for s, t in self.edges))
        for source, target in self.edges:
            if not source or not target:
                raise ValidationError("Node ids must be non-empty", "edges")
        if self.node_universe is not None:
            universe = tuple(dict.fromkeys(str(n) for n in self.node_universe))
            if any(not node for node in universe):
                raise ValidationError("Node ids must be non-empty", "node_universe")
            object.__setattr__(self, 'node_universe', universe)
            known = set(universe)
            outside = sorted({t for _, t in self.edges if t not in known})
            if outside:
                raise ValidationError(f"Edge targets outside the node universe: {', '.join(outside[:5])}",
                                      "node_universe")

    def __len__(self) -> int:
        return len(self.edges)

    def digest(self) -> str:
        """Content hash, independent of edge order"""
        h = hashlib.sha256()
        for source, target in sorted(self.edges):
            h.update(f"{source}\t{target}\n".encode('utf-8'))
        if self.node_universe is not None:
            h.update(b"--universe--\n")
            for node in sorted(self.node_universe):
                h.update(f"{node}\n".encode('utf-8'))
        return h.hexdigest()


@dataclass(frozen=True)
class DegreeDistribution:
    """In-degree per node id"""
    counts: Dict[str, int]

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def values(self) -> List[int]:
        return [self.counts[node] for node in sorted(self.counts)]


@dataclass(frozen=True)
class MeasureResult:
    """Computed measure value with the input it was computed on"""
    measure: Iri
    value: Decimal
    input_digest: str
    n: int


def in_degree_distribution(e: EdgeList) -> DegreeDistribution:
    """Count incoming edges per node; parallel edges each count"""
    if e.node_universe is not None:
        counts = {node: 0 for node in e.node_universe}
    else:
        counts = {}
        for source, target in e.edges:
            counts.setdefault(source, 0)
            counts.setdefault(target, 0)
    for _, target in e.edges:
        counts[target] += 1
    return DegreeDistribution(counts)


def gini(values: Iterable[Union[int, float, Decimal]]) -> float:
    """
    Gini coefficient, population form: sum_i sum_j |x_i - x_j| / (2 n^2 mean)
    Computed with the sorted-rank formula; all-zero input gives 0
    """
    x = np.asarray([float(v) for v in values], dtype=np.float64)
    if x.size == 0:
        raise MeasureError("gini needs at least one value", "gini")
    if not np.all(np.isfinite(x)):
        raise MeasureError("gini values must be finite", "gini")
    if np.any(x < 0):
        raise MeasureError("gini values must be non-negative", "gini")

    n = x.size
    total = x.sum()
    if total == 0:
        return 0.0
    x = np.sort(x)
    ranks = np.arange(1, n + 1, dtype=np.float64)
    g = 2.0 * np.dot(ranks, x) / (n * total) - (n + 1) / n
    return float(min(max(g, 0.0), (n - 1) / n))


def to_value(number: float) -> Decimal:
    """Decimal with twelve places, trailing zeros dropped"""
    value = Decimal(repr(number)).quantize(VALUE_QUANTUM).normalize()
    return value if value != 0 else Decimal(0)


MeasureFunction = Callable[[EdgeList], Tuple[float, int]]


@dataclass(frozen=True)
class RegisteredMeasure:
    iri: Iri
    alias: str
    compute: MeasureFunction


class MeasureRegistry:
    """Measure IRIs mapped to their computations"""

    def __init__(self):
        self._measures: Dict[Iri, RegisteredMeasure] = {}

    def register(self, iri: Iri, alias: Optional[str] = None) -> Callable[[MeasureFunction], MeasureFunction]:
        def decorator(func: MeasureFunction) -> MeasureFunction:
            self._measures[iri] = RegisteredMeasure(iri, alias or iri.local_name, func)
            logger.debug(f"Registered measure {iri.local_name}")
            return func
        return decorator

    def __contains__(self, iri: Iri) -> bool:
        return iri in self._measures

    def get(self, iri: Iri) -> RegisteredMeasure:
        if iri not in self._measures:
            raise MeasureError(f"unregistered measure {iri}", str(iri))
        return self._measures[iri]

    def resolve(self, name: str) -> Iri:
        """Measure IRI for an alias, a local name or a full IRI"""
        for registered in self._measures.values():
            if name in (registered.alias, registered.iri.local_name, registered.iri.value):
                return registered.iri
        raise MeasureError(f"unregistered measure {name!r}", name)

    def aliases(self) -> List[str]:
        return sorted(m.alias for m in self._measures.values())

    def compute(self, iri: Iri, data: EdgeList) -> MeasureResult:
        registered = self.get(iri)
        value, n = registered.compute(data)
        return MeasureResult(iri, to_value(value), data.digest(), n)


measure_registry = MeasureRegistry()


@measure_registry.register(GINI_IN_DEGREE, alias="gini-indegree")
def gini_in_degree(data: EdgeList) -> Tuple[float, int]:
    distribution = in_degree_distribution(data)
    return gini(distribution.values()), distribution.n


def load_edge_list(path: str, universe_path: Optional[str] = None) -> EdgeList:
    """Read `source<TAB>target` lines; '#' lines and blank lines are skipped"""
    edges: List[Tuple[str, str]] = []
    with open(path, 'r', encoding='utf-8') as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.rstrip('\r\n')
            if not line.strip() or line.startswith('#'):
                continue
            fields = line.split('\t')
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise ValidationError(f"{path}:{number}: expected 'source<TAB>target'", "edges")
            edges.append((fields[0], fields[1]))
    universe = load_universe(universe_path) if universe_path else None
    logger.info(f"Loaded {len(edges)} edges from {path}")
    return EdgeList(tuple(edges), universe)


def load_universe(path: str) -> Tuple[str, ...]:
    """One node id per line"""
    with open(path, 'r', encoding='utf-8') as handle:
        nodes = [line.strip() for line in handle]
    return tuple(node for node in nodes if node and not node.startswith('#'))


class MeasurementService:
    """Computes registered measures and records them as bias evaluations"""

    def __init__(self, registry: Optional[MeasureRegistry] = None,
                 vocabulary: Optional[VocabularyService] = None):
        self.registry = registry or measure_registry
        self.vocabulary = vocabulary or vocabulary_service

    def measured_bias(self, g: Graph, measure: Iri) -> Iri:
        """Bias linked to the measure via bias:measures (or its inverse)"""
        candidates = [o for o in g.objects(measure, MEASURES) if isinstance(o, Iri)]
        candidates += [s for s in g.subjects(HAS_BIAS_MEASURE, measure) if isinstance(s, Iri)]
        if not candidates:
            raise MeasureError(f"measure {measure.local_name} is not linked to a bias", str(measure))
        return sorted(set(candidates), key=term_key)[0]

    @handle_service_errors
    @performance_monitor.track_operation("evaluate_measure")
    def evaluate_measure(self, g: Graph, measure: Iri, data: EdgeList, dataset: Iri,
                         timestamp: Optional[datetime] = None, ml_task: Optional[Iri] = None,
                         document: Optional[Iri] = None,
                         application: Optional[Iri] = None) -> Tuple[Graph, BiasEvaluationRecord]:
        """Compute the measure on data and record the value as a bias evaluation"""
        self.registry.get(measure)
        if not data.edges:
            raise MeasureError("empty input data", str(measure))

        result = self.registry.compute(measure, data)
        bias = self.measured_bias(g, measure)

        if data.node_universe is not None:
            universe = f"explicit node universe ({result.n} nodes)"
        else:
            universe = f"all node ids appearing in edges ({result.n} nodes)"
        comment = f"{universe}; input sha256 {result.input_digest}"

        record = BiasEvaluationRecord(
            bias=bias,
            measure=measure,
            value=result.value,
            dataset=dataset,
            ml_task=ml_task,
            document=document,
            application=application,
            timestamp=timestamp or datetime.now(timezone.utc),
            comment=comment,
        )
        updated, iri = self.vocabulary.record_evaluation(g, record)
        logger.info(f"{measure.local_name} = {result.value} over {result.n} nodes recorded as {iri.local_name}")
        return updated, record


# Global measurement service instance
measurement_service = MeasurementService()
