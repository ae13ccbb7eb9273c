"""Operator command line: serve the API, print dataset profiles, replay
scripted explorations.

Exit codes: 0 ok, 1 bad configuration, 2 data parse error, 3 exploration
violation.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from typing import Dict, List, Optional, Tuple

import click

from .config import ServiceConfig, load_config
from .endpoint import EndpointClient, EndpointConfig
from .errors import (
    ElindaError,
    EndpointError,
    InvalidComparator,
    NTriplesSyntaxError,
    TypeMismatch,
    UnknownLabel,
)
from .expansion import ExplorationSession, initial_chart, property_expansion
from .graph import Graph, build_graph, dataset_stats
from .model import (
    Chart,
    Comparator,
    ExpansionKind,
    ExpansionOp,
    FilterCondition,
)
from .ntriples import parse_ntriples
from .terms import literal, local_name, uri

EXIT_CONFIG = 1
EXIT_PARSE = 2
EXIT_EXPLORATION = 3


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _load_graph(paths: Tuple[str, ...]) -> Graph:
    triples = []
    for path in paths:
        try:
            with open(path, "rb") as fh:
                triples.extend(parse_ntriples(fh))
        except OSError as exc:
            _fail(EXIT_CONFIG, f"cannot read {path}: {exc}")
        except NTriplesSyntaxError as exc:
            _fail(EXIT_PARSE, f"{path}: {exc}")
        except ElindaError as exc:
            _fail(EXIT_PARSE, f"{path}: {exc}")
    return build_graph(triples)


@click.group()
def main() -> None:
    """Interactive linked-data exploration engine."""


# ------------------------------------------------------------------------ serve


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--data", multiple=True, type=click.Path())
@click.option("--endpoint", default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, data, endpoint, host, port) -> None:
    """Start the HTTP API over a dataset file or a remote endpoint."""
    try:
        config = load_config(config_path)
    except (OSError, ValueError) as exc:
        _fail(EXIT_CONFIG, f"bad config: {exc}")
    if data:
        config.data = list(data)
    if endpoint:
        config.endpoint = endpoint
    if host:
        config.listen_host = host
    if port is not None:
        config.listen_port = port
    if not config.data and not config.endpoint:
        _fail(EXIT_CONFIG, "serve needs --data FILE or --endpoint URL (or a config)")

    if config.endpoint:
        try:
            stats = EndpointClient(EndpointConfig(url=config.endpoint)).probe()
        except EndpointError as exc:
            _fail(EXIT_CONFIG, f"endpoint unusable: {exc}")
    else:
        for path in config.data:
            try:
                with open(path, "rb") as fh:
                    pass
            except OSError as exc:
                _fail(EXIT_CONFIG, f"cannot read {path}: {exc}")
        stats = dataset_stats(_load_graph(tuple(config.data)))
    click.echo(f"{stats['triple_count']} triples, {stats['class_count']} classes")

    import uvicorn

    from .service import create_app

    uvicorn.run(
        create_app(config), host=config.listen_host, port=config.listen_port,
        log_level="warning",
    )


# ---------------------------------------------------------------------- profile


def _class_tree(g: Graph, chart: Chart, depth: int) -> Dict[str, object]:
    tree: Dict[str, object] = {}
    for label in chart.labels():
        metrics = chart.metrics[label]
        name = g.label_of(label)
        if depth > 1 and metrics.direct_subclass_count:
            from .expansion import subclass_expansion

            child = subclass_expansion(g, chart[label])
            tree[name] = {
                "count": metrics.instance_count,
                "subclasses": _class_tree(g, child, depth - 1),
            }
        else:
            tree[name] = metrics.instance_count
    return tree


def _property_report(g: Graph, chart: Chart, threshold: float) -> Dict[str, Dict[str, float]]:
    report: Dict[str, Dict[str, float]] = {}
    for label in chart.labels():
        bar = chart[label]
        if not bar.members:
            continue
        props = property_expansion(g, bar)
        covered = {
            g.label_of(p): props.metrics[p].coverage
            for p in props.labels()
            if props.metrics[p].coverage >= threshold
        }
        if covered:
            report[g.label_of(label)] = covered
    return report


def _flatten_tree(tree: Dict[str, object], parent: str, out: List[Tuple[str, str, int]]):
    for name, value in tree.items():
        if isinstance(value, dict):
            out.append((parent, name, value["count"]))
            _flatten_tree(value["subclasses"], name, out)
        else:
            out.append((parent, name, value))


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--depth", default=1, type=int)
@click.option("--threshold", default=0.0, type=float)
@click.option("--root", default=None)
@click.option("--format", "fmt", default="json", type=click.Choice(["json", "csv"]))
def profile(data, depth, threshold, root, fmt) -> None:
    """Class distribution and property coverage report for a dataset file."""
    g = _load_graph((data,))
    chart = initial_chart(g, root)
    root_label = g.label_of(root) if root else "root"
    classes = {root_label: _class_tree(g, chart, depth)} if len(chart) else {}
    properties = _property_report(g, chart, threshold)
    if fmt == "json":
        click.echo(json.dumps({"classes": classes, "properties": properties}, indent=2))
        return
    buf = io.StringIO()
    writer = csv.writer(buf)
    rows: List[Tuple[str, str, int]] = []
    for root_name, tree in classes.items():
        _flatten_tree(tree, root_name, rows)
    for parent, name, count in rows:
        writer.writerow(["class", parent, name, count])
    for class_name, props in properties.items():
        for prop, coverage in props.items():
            writer.writerow(["property", class_name, prop, f"{coverage:g}"])
    click.echo(buf.getvalue(), nl=False)


# ---------------------------------------------------------------------- explore

_KINDS = {op.value: op for op in ExpansionOp}


def _parse_value(token: str):
    if token.startswith("<") and token.endswith(">"):
        return uri(token[1:-1])
    if token.startswith("http://") or token.startswith("https://"):
        return uri(token)
    return literal(token.strip('"'))


def _parse_script_line(line: str, lineno: int):
    tokens = line.split()
    if len(tokens) < 4 or tokens[0] != "select" or tokens[2] != "expand":
        _fail(EXIT_PARSE, f"script line {lineno}: expected "
                          f"'select <label> expand <kind> [filter p op v]'")
    label, kind_name = tokens[1], tokens[3]
    kind = _KINDS.get(kind_name)
    if kind is None:
        _fail(EXIT_PARSE, f"script line {lineno}: unknown expansion {kind_name!r}")
    conditions = ()
    rest = tokens[4:]
    if rest:
        if len(rest) != 4 or rest[0] != "filter":
            _fail(EXIT_PARSE, f"script line {lineno}: bad filter clause")
        try:
            comparator = Comparator(rest[2])
        except ValueError:
            _fail(EXIT_PARSE, f"script line {lineno}: unknown comparator {rest[2]!r}")
        try:
            conditions = (
                FilterCondition(rest[1], comparator, _parse_value(rest[3])),
            )
        except InvalidComparator as exc:
            _fail(EXIT_PARSE, f"script line {lineno}: {exc}")
    return label, ExpansionKind(kind, conditions)


def _resolve_label(chart: Chart, token: str, own_label: str) -> str:
    if token in chart or token == own_label:
        return token
    for candidate in list(chart.labels()) + [own_label]:
        if local_name(candidate) == token:
            return candidate
    return token  # let the engine report the violation


def _print_chart(g: Graph, chart: Chart) -> None:
    for label in chart.labels():
        m = chart.metrics[label]
        click.echo(
            f"  {g.label_of(label)}\t{m.instance_count}\t{m.coverage:.3f}"
        )


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--script", "script_path", type=click.Path(), default=None)
@click.option("--root", default=None)
def explore(data, script_path, root) -> None:
    """Replay a scripted exploration sequence, printing each chart."""
    g = _load_graph((data,))
    session = ExplorationSession(g, root)
    pane = session.root_pane
    click.echo(f"chart 0 ({g.label_of(pane.bar.label)}):")
    _print_chart(g, pane.step.result_chart)
    if not script_path:
        return
    try:
        with open(script_path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot read {script_path}: {exc}")
    step = 0
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        token, expansion = _parse_script_line(line, lineno)
        label = _resolve_label(pane.step.result_chart, token, pane.bar.label)
        try:
            pane = session.expand_step(pane.id, label, expansion)
        except UnknownLabel as exc:
            _fail(EXIT_EXPLORATION, f"step {lineno}: condition (a) violated: {exc}")
        except TypeMismatch as exc:
            _fail(EXIT_EXPLORATION, f"step {lineno}: condition (b) violated: {exc}")
        step += 1
        click.echo(f"chart {step} ({g.label_of(label)} / {expansion.op.value}):")
        _print_chart(g, pane.step.result_chart)


if __name__ == "__main__":
    main()
