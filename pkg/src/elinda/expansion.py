"""Bar expansions, filters, tables and exploration sessions over an embedded graph."""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import TypeMismatch, UnknownClass, UnknownLabel, UnknownPane
from .graph import Graph
from .model import (
    Bar,
    BarMetrics,
    BarType,
    Chart,
    ExpansionKind,
    ExpansionOp,
    FilterCondition,
    FilterStep,
    INCOMING,
    ObjectStep,
    OUTGOING,
    PSEUDO_LITERAL,
    PSEUDO_UNTYPED,
    PropertyStep,
    PseudoStep,
    RootStep,
    SubclassStep,
    sort_chart_by_coverage,
    sort_chart_by_size,
)
from .terms import OWL_THING, Term

DEFAULT_COVERAGE_THRESHOLD = 0.2
DEFAULT_PAGE_LIMIT = 50


def _class_metrics(g: Graph, members: int, parent_size: int, class_uri: str) -> BarMetrics:
    return BarMetrics(
        instance_count=members,
        coverage=(members / parent_size) if parent_size else 0.0,
        average_per_instance=1.0 if members else 0.0,
        direct_subclass_count=len(g.direct_subclasses(class_uri)),
        total_subclass_count=g.total_subclass_count(class_uri),
    )


def root_bar(g: Graph, root: str) -> Bar:
    closure = tuple(sorted(g.subclass_closure(root)))
    return Bar(
        members=g.transitive_instances(root),
        label=root,
        bar_type=BarType.CLASS,
        path=(RootStep(closure),),
    )


def initial_chart(g: Graph, root: Optional[str] = None) -> Chart:
    """Initial chart: subclass chart of the root class, or a synthesized
    top-level-class chart when the dataset has no usable root."""
    root_uri = root or OWL_THING
    if g.transitive_instances(root_uri) or g.direct_subclasses(root_uri):
        return subclass_expansion(g, root_bar(g, root_uri))
    total = len(g.instance_uris())
    entries = []
    for c in g.top_level_classes():
        members = g.instances_of(c)
        bar = Bar(members, c, BarType.CLASS, path=(RootStep((c,)),))
        entries.append((c, bar, _class_metrics(g, len(members), total, c)))
    return sort_chart_by_size(entries)


def subclass_expansion(g: Graph, b: Bar) -> Chart:
    if b.bar_type is not BarType.CLASS:
        raise TypeMismatch("subclass expansion requires a class bar")
    parent_size = len(b.members)
    entries = []
    for tau in g.direct_subclasses(b.label):
        members = b.members & g.instances_of(tau)
        bar = Bar(members, tau, BarType.CLASS, path=b.path + (SubclassStep(tau),))
        entries.append((tau, bar, _class_metrics(g, len(members), parent_size, tau)))
    return sort_chart_by_size(entries)


def property_expansion(g: Graph, b: Bar, direction: str = OUTGOING) -> Chart:
    if b.bar_type is not BarType.CLASS:
        raise TypeMismatch("property expansion requires a class bar")
    members: Dict[str, set] = {}
    occurrences: Dict[str, int] = {}
    if direction == OUTGOING:
        for s in b.members:
            for p, _ in g.out_edges(s):
                members.setdefault(p, set()).add(s)
                occurrences[p] = occurrences.get(p, 0) + 1
    else:
        for s in b.members:
            for _, p in g.in_edges(s):
                members.setdefault(p, set()).add(s)
                occurrences[p] = occurrences.get(p, 0) + 1
    parent_size = len(b.members)
    entries = []
    for p, member_set in members.items():
        bar = Bar(
            frozenset(member_set),
            p,
            BarType.PROPERTY,
            path=b.path + (PropertyStep(p, direction),),
        )
        metrics = BarMetrics(
            instance_count=len(member_set),
            coverage=len(member_set) / parent_size if parent_size else 0.0,
            average_per_instance=occurrences[p] / len(member_set),
        )
        entries.append((p, bar, metrics))
    return sort_chart_by_coverage(entries)


def object_expansion(g: Graph, b: Bar, direction: str = OUTGOING) -> Chart:
    if b.bar_type is not BarType.PROPERTY:
        raise TypeMismatch("object expansion requires a property bar")
    by_class: Dict[str, set] = {}
    edge_counts: Dict[str, int] = {}
    untyped: set = set()
    untyped_edges = 0
    literals: set = set()
    literal_edges = 0
    for s in b.members:
        if direction == OUTGOING:
            reached: Iterable[Term] = g.objects_of(s, b.label)
        else:
            reached = [
                Term("uri", x) for x, p in g.in_edges(s) if p == b.label
            ]
        for o in reached:
            if o.is_literal:
                literals.add(o)
                literal_edges += 1
                continue
            classes = g.classes_of(o.lexical)
            if not classes:
                untyped.add(o.lexical)
                untyped_edges += 1
                continue
            for tau in classes:
                by_class.setdefault(tau, set()).add(o.lexical)
                edge_counts[tau] = edge_counts.get(tau, 0) + 1

    total_reached = (
        sum(len(v) for v in by_class.values()) + len(untyped) + len(literals)
    )
    entries = []
    for tau, member_set in by_class.items():
        bar = Bar(
            frozenset(member_set),
            tau,
            BarType.CLASS,
            path=b.path + (ObjectStep(b.label, direction, tau),),
        )
        metrics = BarMetrics(
            instance_count=len(member_set),
            coverage=len(member_set) / total_reached if total_reached else 0.0,
            average_per_instance=edge_counts[tau] / len(member_set),
            direct_subclass_count=len(g.direct_subclasses(tau)),
            total_subclass_count=g.total_subclass_count(tau),
        )
        entries.append((tau, bar, metrics))
    if untyped:
        bar = Bar(
            frozenset(untyped),
            PSEUDO_UNTYPED,
            BarType.CLASS,
            path=b.path + (PseudoStep(PSEUDO_UNTYPED),),
        )
        metrics = BarMetrics(
            instance_count=len(untyped),
            coverage=len(untyped) / total_reached,
            average_per_instance=untyped_edges / len(untyped),
        )
        entries.append((PSEUDO_UNTYPED, bar, metrics))
    if literals:
        bar = Bar(
            frozenset(),
            PSEUDO_LITERAL,
            BarType.CLASS,
            path=b.path + (PseudoStep(PSEUDO_LITERAL),),
        )
        metrics = BarMetrics(
            instance_count=len(literals),
            coverage=len(literals) / total_reached,
            average_per_instance=literal_edges / len(literals),
        )
        entries.append((PSEUDO_LITERAL, bar, metrics))
    return sort_chart_by_size(entries)


def apply_filter(g: Graph, b: Bar, conditions: Sequence[FilterCondition]) -> Bar:
    if b.bar_type is not BarType.CLASS:
        raise TypeMismatch("filters apply to class bars")
    if not conditions:
        return b
    kept = frozenset(
        s
        for s in b.members
        if all(
            any(cond.matches(v) for v in g.objects_of(s, cond.property))
            for cond in conditions
        )
    )
    return Bar(
        kept, b.label, BarType.CLASS, path=b.path + (FilterStep(tuple(conditions)),)
    )


@dataclass
class ThresholdView:
    visible: Chart
    hidden_count: int


def threshold_view(c: Chart, threshold: float) -> ThresholdView:
    visible = Chart()
    for label, bar in c.bars.items():
        if c.metrics[label].coverage >= threshold:
            visible.bars[label] = bar
            visible.metrics[label] = c.metrics[label]
    return ThresholdView(visible=visible, hidden_count=len(c) - len(visible))


@dataclass
class TableResult:
    columns: List[str]
    rows: List[Dict[str, object]]
    total: int
    sparql_text: str


def instance_table(
    g: Graph,
    b: Bar,
    columns: Sequence[str],
    filters: Sequence[FilterCondition] = (),
    limit: int = DEFAULT_PAGE_LIMIT,
    offset: int = 0,
) -> TableResult:
    from .sparqlgen import table_query  # local import to avoid a cycle

    filtered = apply_filter(g, b, filters)
    subjects = sorted(filtered.members)
    page = subjects[offset : offset + limit]
    rows = []
    for s in page:
        cells = {}
        for col in columns:
            values = sorted(v.display() for v in g.objects_of(s, col))
            cells[col] = values
        rows.append({"subject": s, "cells": cells})
    plan = table_query(b, columns, filters, limit, offset)
    return TableResult(
        columns=list(columns), rows=rows, total=len(subjects), sparql_text=plan.text
    )


def render_cell(values: List[str]) -> str:
    """Display form of a multi-valued cell."""
    return "; ".join(values)


# ---------------------------------------------------------------------------
# Exploration sessions

ROOT_PANE_MARKER = None


@dataclass
class ExplorationStep:
    parent_pane: Optional[str]
    selected_label: Optional[str]
    expansion: Optional[ExpansionKind]
    result_chart: Chart


@dataclass
class Pane:
    id: str
    step: ExplorationStep
    bar: Bar
    breadcrumb: List[str]
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD
    active_filters: List[FilterCondition] = field(default_factory=list)
    views: Dict[str, Chart] = field(default_factory=dict)


class ExplorationSession:
    """Pane sequence over one graph; mutations are serialized per session."""

    def __init__(
        self,
        graph: Graph,
        root: Optional[str] = None,
        coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
    ):
        self.graph = graph
        self.root = root or OWL_THING
        self.coverage_threshold = coverage_threshold
        self.panes: Dict[str, Pane] = {}
        self._lock = threading.Lock()
        self._counter = itertools.count()
        chart = initial_chart(graph, root)
        bar = root_bar(graph, self.root)
        pane = Pane(
            id=self._next_id(),
            step=ExplorationStep(ROOT_PANE_MARKER, None, None, chart),
            bar=bar,
            breadcrumb=[self.root],
            coverage_threshold=coverage_threshold,
        )
        self.panes[pane.id] = pane

    def _next_id(self) -> str:
        return f"p{next(self._counter)}"

    @property
    def root_pane(self) -> Pane:
        return next(iter(self.panes.values()))

    def pane(self, pane_id: str) -> Pane:
        try:
            return self.panes[pane_id]
        except KeyError:
            raise UnknownPane(f"no pane {pane_id!r}")

    def compute_expansion(self, bar: Bar, expansion: ExpansionKind) -> Chart:
        g = self.graph
        op = expansion.op
        if op is ExpansionOp.SUBCLASS:
            return subclass_expansion(g, bar)
        if op is ExpansionOp.PROPERTY_OUT:
            return property_expansion(g, bar, OUTGOING)
        if op is ExpansionOp.PROPERTY_IN:
            return property_expansion(g, bar, INCOMING)
        if op is ExpansionOp.OBJECT_OUT:
            return object_expansion(g, bar, OUTGOING)
        if op is ExpansionOp.OBJECT_IN:
            return object_expansion(g, bar, INCOMING)
        if op is ExpansionOp.FILTER:
            return subclass_expansion(g, apply_filter(g, bar, expansion.conditions))
        raise TypeMismatch(f"unknown expansion {op}")

    def select_bar(self, parent: Pane, selected_label: str, expansion: ExpansionKind) -> Bar:
        """Resolve the selected bar and enforce conditions (a) and (b)."""
        if expansion.op is ExpansionOp.FILTER:
            if selected_label != parent.bar.label:
                raise UnknownLabel(
                    f"filter expansion applies to the pane's own bar "
                    f"({parent.bar.label!r}), not {selected_label!r}"
                )
            return parent.bar
        chart = parent.step.result_chart
        if selected_label not in chart:
            raise UnknownLabel(f"label {selected_label!r} not in parent chart")
        bar = chart[selected_label]
        if bar.is_pseudo:
            raise TypeMismatch(f"pseudo-bar {selected_label!r} cannot be expanded")
        if expansion.requires is not bar.bar_type:
            raise TypeMismatch(
                f"{expansion.op.value} requires a {expansion.requires.value} bar, "
                f"{selected_label!r} is a {bar.bar_type.value} bar"
            )
        return bar

    def expand_step(
        self, parent_pane_id: str, selected_label: str, expansion: ExpansionKind
    ) -> Pane:
        with self._lock:
            parent = self.pane(parent_pane_id)
            bar = self.select_bar(parent, selected_label, expansion)
            chart = self.compute_expansion(bar, expansion)
            if expansion.op is ExpansionOp.FILTER:
                pane_bar = apply_filter(self.graph, bar, expansion.conditions)
                filters = parent.active_filters + list(expansion.conditions)
            else:
                pane_bar = bar
                filters = []
            pane = Pane(
                id=self._next_id(),
                step=ExplorationStep(parent.id, selected_label, expansion, chart),
                bar=pane_bar,
                breadcrumb=parent.breadcrumb + [selected_label],
                coverage_threshold=parent.coverage_threshold,
                active_filters=filters,
            )
            self.panes[pane.id] = pane
            return pane

    def open_class_pane(self, class_uri: str) -> Pane:
        if class_uri not in self.graph.declared_classes():
            raise UnknownClass(f"{class_uri!r} is not a declared class")
        with self._lock:
            bar = root_bar(self.graph, class_uri)
            pane = Pane(
                id=self._next_id(),
                step=ExplorationStep(
                    ROOT_PANE_MARKER, None, None, subclass_expansion(self.graph, bar)
                ),
                bar=bar,
                breadcrumb=[class_uri],
                coverage_threshold=self.coverage_threshold,
            )
            self.panes[pane.id] = pane
            return pane

    def close_pane(self, pane_id: str) -> None:
        with self._lock:
            if pane_id not in self.panes:
                raise UnknownPane(f"no pane {pane_id!r}")
            del self.panes[pane_id]


def validate_session(session: ExplorationSession) -> None:
    """Re-check exploration conditions (a)-(c) on every stored pane."""
    for pane in list(session.panes.values()):
        step = pane.step
        if step.parent_pane is ROOT_PANE_MARKER:
            continue
        parent = session.panes.get(step.parent_pane)
        assert parent is not None, f"pane {pane.id} has a missing parent"
        bar = session.select_bar(parent, step.selected_label, step.expansion)
        recomputed = session.compute_expansion(bar, step.expansion)
        assert recomputed == step.result_chart, f"pane {pane.id} chart drifted"
        assert pane.breadcrumb == parent.breadcrumb + [step.selected_label]
