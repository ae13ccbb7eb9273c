"""Exploration over a remote SPARQL endpoint.

Mirrors the embedded exploration session, but every chart is computed by
running generated chart queries through the query manager, so caching,
deduplication and retries apply. Bars carry empty member sets; their ancestry
paths fully determine the sets on the endpoint side.
"""

from __future__ import annotations

import itertools
import threading
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import TypeMismatch, UnknownClass, UnknownLabel, UnknownPane
from .expansion import (
    DEFAULT_COVERAGE_THRESHOLD,
    ExplorationStep,
    Pane,
    ROOT_PANE_MARKER,
    TableResult,
)
from .manager import DatasetHandle, QueryManager
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
    PropertyStep,
    RootStep,
    SubclassStep,
)
from .terms import OWL_THING, local_name
from .sparqlgen import (
    chart_query,
    class_instance_counts_query,
    member_count_query,
    subclass_labels_query,
    table_query,
)

_VIEW_OPS = {
    OUTGOING: (ExpansionOp.PROPERTY_OUT, ExpansionOp.OBJECT_OUT),
    INCOMING: (ExpansionOp.PROPERTY_IN, ExpansionOp.OBJECT_IN),
}


def _as_int(cell) -> int:
    return int(float(cell.lexical)) if cell is not None else 0


class RemoteExplorer:
    """Pane sequence over a remote dataset; mutations serialized per session."""

    def __init__(
        self,
        dataset: DatasetHandle,
        manager: QueryManager,
        root: Optional[str] = None,
        coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
    ):
        self.dataset = dataset
        self.manager = manager
        self.root = root or OWL_THING
        self.coverage_threshold = coverage_threshold
        self.panes: Dict[str, Pane] = {}
        self.sizes: Dict[str, int] = {}
        self._lock = threading.Lock()
        self._counter = itertools.count()
        bar = self._root_bar(self.root)
        chart = self._subclass_chart(bar)
        if not chart and not self._member_count(bar):
            bar, chart = self._fallback_root()
        pane = Pane(
            id=self._next_id(),
            step=ExplorationStep(ROOT_PANE_MARKER, None, None, chart),
            bar=bar,
            breadcrumb=[bar.label],
            coverage_threshold=coverage_threshold,
        )
        self.panes[pane.id] = pane
        self.sizes[pane.id] = self._member_count(bar)

    # ------------------------------------------------------------- internals

    def _next_id(self) -> str:
        return f"p{next(self._counter)}"

    def _run(self, plan):
        return self.manager.execute(plan, self.dataset)

    def _member_count(self, bar: Bar) -> int:
        result = self._run(member_count_query(bar))
        return _as_int(result.rows[0][0]) if result.rows else 0

    def _subclass_closure(self, root: str) -> Tuple[str, ...]:
        seen = {root}
        frontier = [root]
        while frontier:
            current = frontier.pop()
            for row in self._run(subclass_labels_query(current)).rows:
                child = row[0].lexical
                if child not in seen:
                    seen.add(child)
                    frontier.append(child)
        return tuple(sorted(seen))

    def _root_bar(self, root: str) -> Bar:
        return Bar(
            members=frozenset(),
            label=root,
            bar_type=BarType.CLASS,
            path=(RootStep(self._subclass_closure(root)),),
        )

    def _fallback_root(self) -> Tuple[Bar, Chart]:
        """No usable root class: chart every declared class by instance count."""
        bar = Bar(frozenset(), OWL_THING, BarType.CLASS, path=(RootStep(None),))
        counts = self._run(class_instance_counts_query())
        total = self._member_count(bar)
        chart = Chart()
        for row in counts.rows:
            c, n = row[0].lexical, _as_int(row[1])
            chart.bars[c] = Bar(frozenset(), c, BarType.CLASS, path=(RootStep((c,)),))
            chart.metrics[c] = BarMetrics(
                instance_count=n,
                coverage=(n / total) if total else 0.0,
                average_per_instance=1.0 if n else 0.0,
            )
        return bar, chart

    # ----------------------------------------------------- chart computation

    def _subclass_chart(
        self, bar: Bar, conditions: Sequence[FilterCondition] = ()
    ) -> Chart:
        if bar.bar_type is not BarType.CLASS:
            raise TypeMismatch("subclass expansion requires a class bar")
        op = ExpansionOp.FILTER if conditions else ExpansionOp.SUBCLASS
        result = self._run(chart_query(bar, ExpansionKind(op, tuple(conditions))))
        base = bar.path
        if conditions:
            base = base + (FilterStep(tuple(conditions)),)
        parent_size = self._member_count(
            Bar(frozenset(), bar.label, bar.bar_type, base)
        )
        chart = Chart()
        for row in result.rows:
            c, n = row[0].lexical, _as_int(row[1])
            chart.bars[c] = Bar(
                frozenset(), c, BarType.CLASS, path=base + (SubclassStep(c),)
            )
            chart.metrics[c] = BarMetrics(
                instance_count=n,
                coverage=(n / parent_size) if parent_size else 0.0,
                average_per_instance=1.0 if n else 0.0,
            )
        return chart

    def _property_chart(self, bar: Bar, direction: str) -> Chart:
        if bar.bar_type is not BarType.CLASS:
            raise TypeMismatch("property expansion requires a class bar")
        op = _VIEW_OPS[direction][0]
        result = self._run(chart_query(bar, ExpansionKind(op)))
        parent_size = self._member_count(bar)
        chart = Chart()
        for row in result.rows:
            p, n, occ = row[0].lexical, _as_int(row[1]), _as_int(row[2])
            if not n:
                continue
            chart.bars[p] = Bar(
                frozenset(),
                p,
                BarType.PROPERTY,
                path=bar.path + (PropertyStep(p, direction),),
            )
            chart.metrics[p] = BarMetrics(
                instance_count=n,
                coverage=(n / parent_size) if parent_size else 0.0,
                average_per_instance=occ / n,
            )
        return chart

    def _object_chart(self, bar: Bar, direction: str) -> Chart:
        if bar.bar_type is not BarType.PROPERTY:
            raise TypeMismatch("object expansion requires a property bar")
        op = _VIEW_OPS[direction][1]
        result = self._run(chart_query(bar, ExpansionKind(op)))
        total = sum(_as_int(row[1]) for row in result.rows)
        chart = Chart()
        for row in result.rows:
            c, n = row[0].lexical, _as_int(row[1])
            chart.bars[c] = Bar(
                frozenset(),
                c,
                BarType.CLASS,
                path=bar.path + (ObjectStep(bar.label, direction, c),),
            )
            chart.metrics[c] = BarMetrics(
                instance_count=n,
                coverage=(n / total) if total else 0.0,
                average_per_instance=1.0 if n else 0.0,
            )
        return chart

    def compute_expansion(self, bar: Bar, expansion: ExpansionKind) -> Chart:
        op = expansion.op
        if op is ExpansionOp.SUBCLASS:
            return self._subclass_chart(bar)
        if op is ExpansionOp.FILTER:
            return self._subclass_chart(bar, expansion.conditions)
        if op in (ExpansionOp.PROPERTY_OUT, ExpansionOp.PROPERTY_IN):
            direction = OUTGOING if op is ExpansionOp.PROPERTY_OUT else INCOMING
            return self._property_chart(bar, direction)
        direction = OUTGOING if op is ExpansionOp.OBJECT_OUT else INCOMING
        return self._object_chart(bar, direction)

    # ------------------------------------------------------------- expansion

    def pane(self, pane_id: str) -> Pane:
        try:
            return self.panes[pane_id]
        except KeyError:
            raise UnknownPane(f"no pane {pane_id!r}")

    def select_bar(
        self, parent: Pane, selected_label: str, expansion: ExpansionKind
    ) -> Bar:
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
                pane_bar = Bar(
                    frozenset(),
                    bar.label,
                    bar.bar_type,
                    bar.path + (FilterStep(tuple(expansion.conditions)),),
                )
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
            self.sizes[pane.id] = self._member_count(pane_bar)
            return pane

    def open_class_pane(self, class_uri: str) -> Pane:
        declared = {
            row[0].lexical for row in self._run(class_instance_counts_query()).rows
        }
        if class_uri not in declared:
            raise UnknownClass(f"{class_uri!r} is not a declared class")
        with self._lock:
            bar = self._root_bar(class_uri)
            pane = Pane(
                id=self._next_id(),
                step=ExplorationStep(
                    ROOT_PANE_MARKER, None, None, self._subclass_chart(bar)
                ),
                bar=bar,
                breadcrumb=[class_uri],
                coverage_threshold=self.coverage_threshold,
            )
            self.panes[pane.id] = pane
            self.sizes[pane.id] = self._member_count(bar)
            return pane

    def close_pane(self, pane_id: str) -> None:
        with self._lock:
            if pane_id not in self.panes:
                raise UnknownPane(f"no pane {pane_id!r}")
            del self.panes[pane_id]
            self.sizes.pop(pane_id, None)

    # ------------------------------------------------------- service surface

    def bar_size(self, pane: Pane) -> int:
        return self.sizes.get(pane.id, 0)

    def display_label(self, u: str) -> str:
        return local_name(u)

    def search(self, q: str) -> List[dict]:
        needle = q.lower()
        hits = []
        for row in self._run(class_instance_counts_query()).rows:
            c, n = row[0].lexical, _as_int(row[1])
            label = local_name(c)
            if label.lower().startswith(needle):
                hits.append({"uri": c, "label": label, "instance_count": n})
        hits.sort(key=lambda h: (-h["instance_count"], h["label"]))
        return hits[:20]

    def table(
        self,
        pane: Pane,
        columns: Sequence[str],
        filters: Sequence[FilterCondition],
        limit: int,
        offset: int,
    ) -> TableResult:
        plan = table_query(pane.bar, columns, filters, limit, offset)
        result = self._run(plan)
        rows: List[dict] = []
        by_subject: Dict[str, dict] = {}
        for row in result.rows:
            if row[0] is None:
                continue
            subject = row[0].lexical
            entry = by_subject.get(subject)
            if entry is None:
                entry = {"subject": subject, "cells": {c: set() for c in columns}}
                by_subject[subject] = entry
                rows.append(entry)
            for col, cell in zip(columns, row[1:]):
                if cell is not None:
                    entry["cells"][col].add(cell.display())
        for entry in rows:
            entry["cells"] = {c: sorted(v) for c, v in entry["cells"].items()}
        total_path = pane.bar.path
        if filters:
            total_path = total_path + (FilterStep(tuple(filters)),)
        total = self._member_count(
            Bar(frozenset(), pane.bar.label, pane.bar.bar_type, total_path)
        )
        return TableResult(
            columns=list(columns), rows=rows, total=total, sparql_text=plan.text
        )
