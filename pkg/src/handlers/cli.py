"""
biasdoc command line
Load, query, validate, measure, annotate and document bias documentation graphs
"""

import logging
import sys
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence

import click

from src.services.documentation_service import documentation_service
from src.services.measurement_service import load_edge_list, measure_registry, measurement_service
from src.services.query_service import CompetencyLibrary, ask_competency, default_library, execute, parse_query
from src.services.reasoning_service import InferredGraph, materialize
from src.services.triple_store import Graph, Iri
from src.services.turtle_codec import parse_turtle_file, serialize_sections, serialize_turtle
from src.services.validation_service import validation_service
from src.services.vocabulary_service import BiasEvaluationRecord, expand_curie, to_decimal, vocabulary_service
from src.utils.config import configure_logging, get_settings
from src.utils.error_handler import EXIT_FINDINGS, EXIT_OK, ValidationError, handle_cli_errors
from src.utils.performance_monitor import track_command_performance

logger = logging.getLogger(__name__)

SEED_ALIAS = "seed"

DATA_OPTION_HELP = "Turtle file to read, or 'seed' for the built-in vocabulary (default: BIASDOC_DATA or seed)"


def load_graph(source: Optional[str]) -> Graph:
    """Graph for a --data value"""
    source = source or get_settings().default_data
    if source == SEED_ALIAS:
        return vocabulary_service.seed_graph()
    return parse_turtle_file(source)


def load_inferred(source: Optional[str]) -> InferredGraph:
    return materialize(load_graph(source))


def resolve_term(g: Graph, text: str) -> Iri:
    """Full IRI or prefixed name known to the graph"""
    return expand_curie(g, text)


def parse_timestamp(text: Optional[str]) -> datetime:
    if not text:
        return datetime.now(timezone.utc)
    try:
        stamp = datetime.fromisoformat(text.replace('Z', '+00:00'))
    except ValueError as e:
        raise ValidationError(f"invalid timestamp {text!r}", "timestamp") from e
    return stamp if stamp.tzinfo else stamp.replace(tzinfo=timezone.utc)


def write_output(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, 'w', encoding='utf-8') as handle:
            handle.write(text)
        logger.info(f"Wrote {out}")
    else:
        click.echo(text, nl=False)


def materialized_turtle(ig: InferredGraph) -> str:
    """Base triples followed by a commented section of inferred triples"""
    return serialize_sections(ig.base, ig.inferred_graph(), "Inferred triples")


def pick_source(positional: Optional[str], data: Optional[str]) -> Optional[str]:
    if positional and data and positional != data:
        raise click.UsageError("give the graph either as an argument or with --data, not both")
    return positional or data


@click.group()
@click.option("--log-level", default=None, help="Logging level (default from configuration)")
def cli(log_level):
    """biasdoc - bias documentation knowledge graph toolkit."""
    configure_logging(log_level)


@cli.command("load")
@click.argument("source", required=False)
@click.option("--data", "data", default=None, help=DATA_OPTION_HELP)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the canonical Turtle serialization")
@click.option("--materialize", "with_inferred", is_flag=True, help="Include inferred triples in the output")
@handle_cli_errors
@track_command_performance("load")
def load_command(source, data, out, with_inferred):
    """Parse a graph, materialize it and print a summary."""
    ig = load_inferred(pick_source(source, data))
    click.echo(f"{len(ig.base)} triples, {len(ig.inferred)} inferred", err=bool(with_inferred and not out))
    if out or with_inferred:
        text = materialized_turtle(ig) if with_inferred else serialize_turtle(ig.base)
        write_output(text, out)


@cli.command("query")
@click.option("--file", "query_file", required=True, type=click.Path(dir_okay=False),
              help="Query file ('-' reads standard input)")
@click.option("--data", "data", default=None, help=DATA_OPTION_HELP)
@handle_cli_errors
@track_command_performance("query")
def query_command(query_file, data):
    """Run a SELECT query and print a tab-separated table."""
    if query_file == "-":
        text = sys.stdin.read()
    else:
        with open(query_file, 'r', encoding='utf-8') as handle:
            text = handle.read()
    plan = parse_query(text)
    table = execute(load_inferred(data), plan)
    click.echo(table.to_tsv(), nl=False)


@cli.command("ask")
@click.argument("question_id")
@click.option("--bias", default=None, help="Bias IRI or prefixed name")
@click.option("--measure", default=None, help="Measure name fragment matched case-insensitively")
@click.option("--data", "data", default=None, help=DATA_OPTION_HELP)
@click.option("--questions", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Additional competency questions (YAML)")
@handle_cli_errors
@track_command_performance("ask")
def ask_command(question_id, bias, measure, data, questions):
    """Answer a stored competency question (Q1, Q4.1, Q6, ...)."""
    library = default_library()
    if questions:
        library = library.merge(CompetencyLibrary.load(questions))
    ig = load_inferred(data)
    bindings: Dict[str, object] = {}
    if bias:
        bindings['bias'] = resolve_term(ig.base, bias)
    if measure:
        bindings['measure'] = measure
    table = ask_competency(ig, question_id, bindings, library=library)
    click.echo(table.to_tsv(), nl=False)


@cli.command("validate")
@click.argument("source", required=False)
@click.option("--data", "data", default=None, help=DATA_OPTION_HELP)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Write findings as tab-separated lines")
@handle_cli_errors
@track_command_performance("validate")
def validate_command(source, data, report_path):
    """Check consistency, instance data and modelling pitfalls."""
    ig = load_inferred(pick_source(source, data))
    manifest = vocabulary_service.manifest_from_graph(ig.base)
    report = (validation_service.check_consistency(ig)
              .merge(validation_service.validate_instances(ig, manifest))
              .merge(validation_service.scan_pitfalls(ig.base, manifest)))

    for line in report.to_lines():
        click.echo(line)
    if report_path:
        with open(report_path, 'w', encoding='utf-8') as handle:
            handle.write(report.to_tsv())
    click.echo("OK" if report.ok else "FAILED")
    sys.exit(EXIT_OK if report.ok else EXIT_FINDINGS)


@cli.command("report")
@click.argument("source", required=False)
@click.option("--data", "data", default=None, help=DATA_OPTION_HELP)
@click.option("--locator", default=None, help="Published resource locator (default from configuration)")
@handle_cli_errors
@track_command_performance("report")
def report_command(source, data, locator):
    """Print completeness, interoperability and accessibility indicators."""
    g = load_graph(pick_source(source, data))
    manifest = vocabulary_service.manifest_from_graph(g)
    quality = validation_service.quality_indicators(g, manifest, locator)
    for line in quality.to_lines():
        click.echo(line)


@cli.command("measure")
@click.argument("measure_name")
@click.option("--edges", required=True, type=click.Path(dir_okay=False), help="Edge list, one 'source<TAB>target' per line")
@click.option("--universe", type=click.Path(dir_okay=False), default=None, help="Node universe, one id per line")
@click.option("--dataset", required=True, help="Dataset IRI the edges come from")
@click.option("--data", "data", default=None, help=DATA_OPTION_HELP)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the updated graph as Turtle")
@click.option("--timestamp", default=None, help="Evaluation time (ISO 8601, default now)")
@click.option("--task", default=None, help="ML task IRI")
@click.option("--document", default=None, help="Source document IRI")
@click.option("--application", default=None, help="Application IRI")
@handle_cli_errors
@track_command_performance("measure")
def measure_command(measure_name, edges, universe, dataset, data, out, timestamp, task, document, application):
    """Compute a registered bias measure and record it as an evaluation."""
    g = load_graph(data)
    measure = measure_registry.resolve(measure_name)
    edge_list = load_edge_list(edges, universe)
    updated, record = measurement_service.evaluate_measure(
        g, measure, edge_list, resolve_term(g, dataset),
        timestamp=parse_timestamp(timestamp),
        ml_task=resolve_term(g, task) if task else None,
        document=resolve_term(g, document) if document else None,
        application=resolve_term(g, application) if application else None,
    )
    click.echo("measure\tbias\tvalue\tdataset")
    click.echo(f"{record.measure.value}\t{record.bias.value}\t{record.value}\t{record.dataset.value}")
    if out:
        write_output(serialize_turtle(updated), out)


@cli.command("annotate")
@click.option("--data", "data", default=None, help=DATA_OPTION_HELP)
@click.option("--extension", type=click.Path(exists=True, dir_okay=False), default=None,
              help="YAML file of classes, measures and properties to register")
@click.option("--bias", default=None, help="Evaluated bias")
@click.option("--measure", default=None, help="Measure used")
@click.option("--value", default=None, help="Measured value (decimal)")
@click.option("--dataset", default=None, help="Dataset the value was computed on")
@click.option("--task", default=None, help="ML task")
@click.option("--document", default=None, help="Source document")
@click.option("--application", default=None, help="Application")
@click.option("--timestamp", default=None, help="Evaluation time (ISO 8601, default now)")
@click.option("--comment", default=None, help="Free-text provenance note")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the annotated graph here")
@handle_cli_errors
@track_command_performance("annotate")
def annotate_command(data, extension, bias, measure, value, dataset, task, document, application,
                     timestamp, comment, out):
    """Register vocabulary extensions and/or record a bias evaluation."""
    evaluation_flags = [bias, measure, value, dataset]
    if not extension and not any(evaluation_flags):
        raise click.UsageError("nothing to annotate: give --extension and/or --bias/--measure/--value/--dataset")
    if any(evaluation_flags) and not all(evaluation_flags):
        raise click.UsageError("recording an evaluation needs --bias, --measure, --value and --dataset")

    g = load_graph(data)
    if extension:
        g, added = vocabulary_service.load_extension(g, extension)
        click.echo(f"registered {len(added)} terms", err=not out)
    if all(evaluation_flags):
        record = BiasEvaluationRecord(
            bias=resolve_term(g, bias),
            measure=resolve_term(g, measure),
            value=to_decimal(value),
            dataset=resolve_term(g, dataset),
            ml_task=resolve_term(g, task) if task else None,
            document=resolve_term(g, document) if document else None,
            application=resolve_term(g, application) if application else None,
            timestamp=parse_timestamp(timestamp),
            comment=comment,
        )
        g, iri = vocabulary_service.record_evaluation(g, record)
        click.echo(f"recorded {iri.value}", err=not out)
    write_output(serialize_turtle(g), out)


@cli.command("docgen")
@click.argument("subject")
@click.option("--data", "data", default=None, help=DATA_OPTION_HELP)
@click.option("--format", "output_format", type=click.Choice(["text", "turtle"]), default="text",
              help="Human-readable report or the cited triples as Turtle")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here")
@handle_cli_errors
@track_command_performance("docgen")
def docgen_command(subject, data, output_format, out):
    """Generate a documentation report for a bias, measure or other subject."""
    ig = load_inferred(data)
    bundle = documentation_service.docgen(ig, resolve_term(ig.base, subject))
    if output_format == "turtle":
        write_output(serialize_turtle(bundle.cited_graph(ig.base.prefixes)), out)
    else:
        write_output(bundle.render(), out)


def run(argv: Sequence[str]) -> int:
    """Run the command line in-process and return the exit code"""
    try:
        result = cli.main(args=list(argv), prog_name="biasdoc", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else (0 if e.code is None else 1)
    # --help and similar early exits come back as an int
    return result if isinstance(result, int) else EXIT_OK


def main(argv: Optional[List[str]] = None) -> None:
    """Console script entry point"""
    sys.exit(run(sys.argv[1:] if argv is None else argv))
