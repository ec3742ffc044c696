"""
Pytest Configuration and Fixtures
Shared test fixtures for the biasdoc test suite
"""

import os
from datetime import datetime, timezone

import pytest

# Set test environment variables
os.environ.update({
    'LOG_LEVEL': 'DEBUG',
})
os.environ.pop('BIASDOC_DATA', None)
os.environ.pop('BIASDOC_CONFIG', None)

from src.services.reasoning_service import materialize
from src.services.triple_store import Graph, Iri, Literal, Triple, RDF_TYPE, RDFS_LABEL, RDFS_SUBCLASSOF
from src.services.vocabulary_service import bias, vocabulary_service
from src.utils.config import get_settings
from src.utils.performance_monitor import performance_monitor


@pytest.fixture(autouse=True)
def reset_state():
    """Fresh settings and metrics for every test"""
    get_settings.cache_clear()
    performance_monitor.reset_metrics()
    yield
    get_settings.cache_clear()


@pytest.fixture
def seed_graph():
    """Shipped seed vocabulary"""
    return vocabulary_service.seed_graph()


@pytest.fixture
def seed_ig(seed_graph):
    """Seed vocabulary with its materialized closure"""
    return materialize(seed_graph)


@pytest.fixture
def seed_manifest():
    return vocabulary_service.seed_manifest()


@pytest.fixture
def fixed_timestamp():
    return datetime(2024, 1, 15, 10, 30, tzinfo=timezone.utc)


@pytest.fixture
def ex():
    """IRI factory for an example namespace"""
    def make(local: str) -> Iri:
        return Iri(f"http://example.org/{local}")
    return make


@pytest.fixture
def small_hierarchy(ex):
    """A < B < C with one instance of A"""
    return Graph([
        Triple(ex("A"), RDFS_SUBCLASSOF, ex("B")),
        Triple(ex("B"), RDFS_SUBCLASSOF, ex("C")),
        Triple(ex("a1"), RDF_TYPE, ex("A")),
        Triple(ex("A"), RDFS_LABEL, Literal("A", lang_tag="en")),
    ], prefixes={'ex': "http://example.org/"})


@pytest.fixture
def edges_file(tmp_path):
    """Interaction fixture: item i1 gets three of four edges"""
    path = tmp_path / "edges.tsv"
    path.write_text(
        "# user\titem\n"
        "u1\ti1\n"
        "u2\ti1\n"
        "u3\ti1\n"
        "u1\ti2\n",
        encoding='utf-8',
    )
    return path


@pytest.fixture
def popularity_bias():
    return bias("PopularityBias")
