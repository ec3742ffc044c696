"""
Unit tests for the Turtle codec
Parsing the supported subset, error positions and canonical serialization
"""

import pytest

from src.services.triple_store import (
    BlankNode, Graph, Iri, Literal, Triple, RDF_TYPE, RDFS_LABEL, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER,
    isomorphic,
)
from src.services.turtle_codec import XSD_DOUBLE, parse_turtle, parse_turtle_file, serialize_sections, serialize_turtle
from src.utils.error_handler import TurtleSyntaxError, UndeclaredPrefixError

EX = "http://example.org/"


class TestParseTurtle:

    def test_prefixes_lists_and_type_shortcut(self):
        g = parse_turtle(
            "@prefix ex: <http://example.org/> .\n"
            "ex:a a ex:C ;\n"
            "    ex:p ex:b , ex:c ;\n"
            "    .\n"
        )
        assert len(g) == 3
        assert Triple(Iri(EX + "a"), RDF_TYPE, Iri(EX + "C")) in g
        assert g.prefixes == {'ex': EX}

    def test_sparql_style_prefix(self):
        g = parse_turtle("PREFIX ex: <http://example.org/>\nex:a ex:p ex:b .")
        assert len(g) == 1

    def test_literal_forms(self):
        g = parse_turtle(
            '@prefix ex: <http://example.org/> .\n'
            '@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n'
            'ex:a ex:lang "colour"@en-GB ;\n'
            '     ex:typed "7"^^xsd:integer ;\n'
            '     ex:int 42 ; ex:dec 0.25 ; ex:dbl 1e3 ; ex:flag true ;\n'
            '     ex:esc "tab\\there \\"q\\" \\u00e9" .\n'
        )
        a = Iri(EX + "a")
        assert g.value(a, Iri(EX + "lang")) == Literal("colour", lang_tag="en-GB")
        assert g.value(a, Iri(EX + "typed")) == Literal("7", datatype=XSD_INTEGER)
        assert g.value(a, Iri(EX + "int")) == Literal("42", datatype=XSD_INTEGER)
        assert g.value(a, Iri(EX + "dec")) == Literal("0.25", datatype=XSD_DECIMAL)
        assert g.value(a, Iri(EX + "dbl")) == Literal("1e3", datatype=XSD_DOUBLE)
        assert g.value(a, Iri(EX + "flag")) == Literal("true", datatype=XSD_BOOLEAN)
        assert g.value(a, Iri(EX + "esc")).lexical == 'tab\there "q" é'

    def test_labeled_blank_nodes(self):
        g = parse_turtle("@prefix ex: <http://example.org/> .\n_:b1 ex:p _:b2 .")
        assert g.match()[0].subject == BlankNode("b1")

    def test_undeclared_prefix_reports_position(self):
        with pytest.raises(UndeclaredPrefixError) as exc_info:
            parse_turtle("@prefix ex: <http://example.org/> .\nex:a nope:p ex:b .")
        assert exc_info.value.prefix == "nope"
        assert exc_info.value.line == 2
        assert exc_info.value.column == 6

    def test_literal_subject_rejected(self):
        with pytest.raises(TurtleSyntaxError) as exc_info:
            parse_turtle('@prefix ex: <http://example.org/> .\n"x" ex:p ex:b .')
        assert "subject" in exc_info.value.message

    def test_blank_node_predicate_rejected(self):
        with pytest.raises(TurtleSyntaxError, match="predicate"):
            parse_turtle("@prefix ex: <http://example.org/> .\nex:a _:p ex:b .")

    @pytest.mark.parametrize("text,feature", [
        ("@base <http://example.org/> .", "@base"),
        ("<http://a.org/s> <http://a.org/p> ( 1 2 ) .", "collections"),
        ("<http://a.org/s> <http://a.org/p> [ ] .", "anonymous blank nodes"),
        ('<http://a.org/s> <http://a.org/p> """long""" .', "multi-line"),
    ])
    def test_unsupported_constructs(self, text, feature):
        with pytest.raises(TurtleSyntaxError, match=feature):
            parse_turtle(text)

    def test_missing_final_dot(self):
        with pytest.raises(TurtleSyntaxError, match="expected '.'"):
            parse_turtle("<http://a.org/s> <http://a.org/p> <http://a.org/o>")

    def test_relative_iri_is_a_syntax_error(self):
        with pytest.raises(TurtleSyntaxError):
            parse_turtle("<s> <http://a.org/p> <http://a.org/o> .")

    def test_parse_file(self, tmp_path):
        path = tmp_path / "g.ttl"
        path.write_text("<http://a.org/s> <http://a.org/p> \"v\" .\n", encoding='utf-8')
        assert len(parse_turtle_file(str(path))) == 1

    def test_missing_file_raises_file_not_found(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_turtle_file(str(tmp_path / "absent.ttl"))


class TestSerializeTurtle:

    def test_canonical_layout(self):
        g = Graph([
            Triple(Iri(EX + "b"), RDFS_LABEL, Literal("B", lang_tag="en")),
            Triple(Iri(EX + "a"), Iri(EX + "p"), Iri(EX + "z")),
            Triple(Iri(EX + "a"), Iri(EX + "p"), Iri(EX + "y")),
            Triple(Iri(EX + "a"), RDF_TYPE, Iri(EX + "C")),
        ], prefixes={'ex': EX, 'rdfs': "http://www.w3.org/2000/01/rdf-schema#"})
        assert serialize_turtle(g) == (
            "@prefix ex: <http://example.org/> .\n"
            "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n"
            "\n"
            "ex:a ex:p ex:y, ex:z ;\n"
            "    a ex:C .\n"
            "\n"
            "ex:b rdfs:label \"B\"@en .\n"
        )

    def test_independent_of_insertion_order(self, seed_graph):
        shuffled = Graph(reversed(seed_graph.match()), prefixes=seed_graph.prefixes)
        assert serialize_turtle(shuffled) == serialize_turtle(seed_graph)

    def test_round_trip_seed(self, seed_graph):
        reparsed = parse_turtle(serialize_turtle(seed_graph))
        assert isomorphic(reparsed, seed_graph)
        assert reparsed.prefixes == seed_graph.prefixes

    def test_round_trip_escapes(self):
        g = Graph([Triple(Iri(EX + "s"), Iri(EX + "p"), Literal('line\nbreak "quoted" back\\slash\ttab'))])
        assert isomorphic(parse_turtle(serialize_turtle(g)), g)

    def test_unprefixable_local_name_written_in_full(self):
        g = Graph([Triple(Iri(EX + "s"), Iri(EX + "p"), Iri(EX + "a/b"))], prefixes={'ex': EX})
        assert "<http://example.org/a/b>" in serialize_turtle(g)

    def test_empty_graph(self):
        assert serialize_turtle(Graph()) == ""

    def test_sections_share_blank_node_labels(self):
        b = BlankNode("node")
        base = Graph([Triple(b, Iri(EX + "p"), Iri(EX + "o"))], prefixes={'ex': EX})
        trailing = Graph([Triple(b, RDF_TYPE, Iri(EX + "C"))])
        text = serialize_sections(base, trailing, "Inferred triples")
        head, _, tail = text.partition("# Inferred triples")
        assert "_:b0 ex:p ex:o ." in head
        assert "_:b0 a ex:C ." in tail
        assert isomorphic(parse_turtle(text), base.union(trailing))

    def test_sections_without_trailing_triples(self, small_hierarchy):
        text = serialize_sections(small_hierarchy, Graph(), "Inferred triples")
        assert "# Inferred triples" not in text
        assert text == serialize_turtle(small_hierarchy)
