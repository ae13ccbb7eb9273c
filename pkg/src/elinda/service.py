"""HTTP JSON API: sessions, panes, charts, tables, class search, SPARQL export.

All exploration state lives server-side; clients are stateless and can restore
a pane stack from GET /sessions/{id}. Pane ids are globally unique tokens of
the form "<session>.<pane>".
"""

from __future__ import annotations

import json
import queue
import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .config import ServiceConfig
from .endpoint import EndpointConfig
from .errors import (
    ElindaError,
    EndpointError,
    InvalidComparator,
    NTriplesSyntaxError,
    TypeMismatch,
    UnknownClass,
    UnknownLabel,
    UnknownPane,
    UnsupportedPath,
)
from .expansion import ExplorationSession, Pane, TableResult, instance_table
from .graph import Graph, build_graph, dataset_stats
from .manager import DatasetHandle, ManagerConfig, QueryManager
from .model import (
    Bar,
    BarType,
    Chart,
    Comparator,
    ExpansionKind,
    ExpansionOp,
    FilterCondition,
    INCOMING,
    OUTGOING,
)
from .ntriples import parse_ntriples
from .results import QueryResult
from .sparqlgen import bar_query, chart_query
from .remote import RemoteExplorer
from .terms import Term, literal, uri

VIEW_EXPANSIONS = {
    "subclass": ExpansionOp.SUBCLASS,
    "prop_out": ExpansionOp.PROPERTY_OUT,
    "prop_in": ExpansionOp.PROPERTY_IN,
}


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _bad(message: str) -> ApiError:
    return ApiError(400, message)


class EmbeddedExplorer(ExplorationSession):
    """Embedded-mode session: the graph-backed engine plus service helpers."""

    def bar_size(self, pane: Pane) -> int:
        return len(pane.bar.members)

    def display_label(self, u: str) -> str:
        return self.graph.label_of(u)

    def search(self, q: str) -> List[dict]:
        needle = q.lower()
        hits = []
        for c in self.graph.declared_classes():
            label = self.graph.label_of(c)
            if label.lower().startswith(needle):
                hits.append(
                    {
                        "uri": c,
                        "label": label,
                        "instance_count": len(self.graph.transitive_instances(c)),
                    }
                )
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
        return instance_table(self.graph, pane.bar, columns, filters, limit, offset)


Explorer = Union[EmbeddedExplorer, RemoteExplorer]


@dataclass
class SessionRecord:
    id: str
    dataset: DatasetHandle
    session: Explorer
    stats: Dict[str, int]
    created_at: float = field(default_factory=time.time)
    last_used: float = field(default_factory=time.time)


@dataclass
class AppState:
    config: ServiceConfig
    manager: QueryManager
    sessions: Dict[str, SessionRecord] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


# --------------------------------------------------------------- serialization


def _bar_json(session: Explorer, chart: Chart, label: str) -> dict:
    bar = chart.bars[label]
    m = chart.metrics[label]
    return {
        "label": label,
        "display_label": label if bar.is_pseudo else session.display_label(label),
        "bar_type": bar.bar_type.value,
        "pseudo": bar.is_pseudo,
        "instance_count": m.instance_count,
        "coverage": m.coverage,
        "average_per_instance": m.average_per_instance,
        "direct_subclass_count": m.direct_subclass_count,
        "total_subclass_count": m.total_subclass_count,
    }


def _chart_json(
    session: Explorer,
    chart: Chart,
    threshold: Optional[float] = None,
    window_start: int = 0,
    window_len: Optional[int] = None,
) -> dict:
    labels = chart.labels()
    hidden = 0
    if threshold is not None:
        visible = [l for l in labels if chart.metrics[l].coverage >= threshold]
        hidden = len(labels) - len(visible)
        labels = visible
    total_visible = len(labels)
    if window_len is not None:
        labels = labels[window_start : window_start + window_len]
    elif window_start:
        labels = labels[window_start:]
    return {
        "bars": [_bar_json(session, chart, l) for l in labels],
        "total_bars": len(chart),
        "visible_bars": total_visible,
        "hidden_count": hidden,
        "window_start": window_start,
    }


def _filter_json(cond: FilterCondition) -> dict:
    value: dict = {"type": cond.value.kind, "value": cond.value.lexical}
    if cond.value.language:
        value["language"] = cond.value.language
    if cond.value.datatype:
        value["datatype"] = cond.value.datatype
    return {
        "property": cond.property,
        "comparator": cond.comparator.value,
        "value": value,
    }


def _pane_json(
    record: SessionRecord,
    pane: Pane,
    threshold: Optional[float] = None,
) -> dict:
    session = record.session
    step = pane.step
    chart = step.result_chart
    chart_is_property = bool(chart.bars) and all(
        b.bar_type is BarType.PROPERTY for b in chart.bars.values()
    )
    applied = threshold if (threshold is not None and chart_is_property) else None
    return {
        "id": f"{record.id}.{pane.id}",
        "session_id": record.id,
        "parent_pane": (
            f"{record.id}.{step.parent_pane}" if step.parent_pane else None
        ),
        "selected_label": step.selected_label,
        "expansion": step.expansion.op.value if step.expansion else None,
        "breadcrumb": list(pane.breadcrumb),
        "coverage_threshold": pane.coverage_threshold,
        "active_filters": [_filter_json(f) for f in pane.active_filters],
        "bar": {
            "label": pane.bar.label,
            "display_label": session.display_label(pane.bar.label),
            "bar_type": pane.bar.bar_type.value,
            "size": session.bar_size(pane),
        },
        "chart": _chart_json(session, chart, threshold=applied),
    }


# --------------------------------------------------------------- body parsing


def _parse_term(raw) -> Term:
    if isinstance(raw, str):
        return literal(raw)
    if isinstance(raw, (int, float)):
        return literal(str(raw))
    if isinstance(raw, dict):
        kind = raw.get("type", "literal")
        value = raw.get("value")
        if not isinstance(value, str):
            raise _bad("filter value must carry a string 'value'")
        if kind == "uri":
            return uri(value)
        if kind == "literal":
            return literal(value, raw.get("language"), raw.get("datatype"))
        raise _bad(f"unknown value type {kind!r}")
    raise _bad(f"cannot interpret filter value {raw!r}")


def _parse_filters(raw) -> Tuple[FilterCondition, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise _bad("filters must be a list")
    conditions = []
    for item in raw:
        if not isinstance(item, dict) or "property" not in item:
            raise _bad("each filter needs a 'property'")
        try:
            comparator = Comparator(item.get("comparator", "equals"))
        except ValueError:
            raise _bad(f"unknown comparator {item.get('comparator')!r}")
        try:
            conditions.append(
                FilterCondition(
                    property=item["property"],
                    comparator=comparator,
                    value=_parse_term(item.get("value")),
                )
            )
        except InvalidComparator as exc:
            raise _bad(str(exc))
    return tuple(conditions)


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception:
        raise _bad("request body must be JSON")
    if not isinstance(body, dict):
        raise _bad("request body must be a JSON object")
    return body


# ------------------------------------------------------------------- the app


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    manager = QueryManager(
        ManagerConfig(
            heavy_threshold=config.heavy_threshold,
            chunk_size=config.chunk_size,
            max_chunks=config.max_chunks,
            query_timeout=config.query_timeout,
            max_resubmissions=config.max_resubmissions,
            hvs_path=config.hvs_path,
        )
    )
    state = AppState(config=config, manager=manager)
    app = FastAPI(title="elinda", docs_url=None, redoc_url=None)
    app.state.elinda = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[config.cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    def _sweep() -> None:
        deadline = time.time() - config.session_ttl
        with state.lock:
            stale = [
                sid for sid, r in state.sessions.items() if r.last_used < deadline
            ]
            for sid in stale:
                del state.sessions[sid]

    def _session(session_id: str) -> SessionRecord:
        _sweep()
        with state.lock:
            record = state.sessions.get(session_id)
        if record is None:
            raise ApiError(404, f"no session {session_id!r}")
        record.last_used = time.time()
        return record

    def _pane(pane_ref: str) -> Tuple[SessionRecord, Pane]:
        session_id, _, local = pane_ref.rpartition(".")
        if not session_id:
            raise ApiError(404, f"no pane {pane_ref!r}")
        record = _session(session_id)
        try:
            return record, record.session.pane(local)
        except UnknownPane as exc:
            raise ApiError(404, str(exc))

    def _load_embedded(source: str) -> Graph:
        try:
            with open(source, "rb") as fh:
                return build_graph(parse_ntriples(fh))
        except (OSError, NTriplesSyntaxError, ElindaError) as exc:
            raise ApiError(422, f"cannot load {source!r}: {exc}")

    # ------------------------------------------------------------- sessions

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await _json_body(request)
        mode = body.get("mode")
        source = body.get("source")
        root_class = body.get("root_class") or config.root_class
        if mode not in ("embedded", "remote"):
            raise _bad("mode must be 'embedded' or 'remote'")
        if not source and mode == "embedded" and config.data:
            source = config.data[0]
        if not isinstance(source, str) or not source:
            raise _bad("source is required")
        threshold = float(body.get("coverage_threshold", config.coverage_threshold))
        if mode == "embedded":
            graph = _load_embedded(source)
            dataset = DatasetHandle.embedded(graph, source_id=source)
            stats = dataset_stats(graph)
            session: Explorer = EmbeddedExplorer(
                graph, root_class, coverage_threshold=threshold
            )
        else:
            dataset = DatasetHandle.remote(
                EndpointConfig(url=source, timeout=config.query_timeout)
            )
            try:
                stats = dataset.endpoint.probe()
                session = RemoteExplorer(
                    dataset, manager, root_class, coverage_threshold=threshold
                )
            except EndpointError as exc:
                raise ApiError(422, f"endpoint unusable: {exc}")
        record = SessionRecord(
            id=secrets.token_hex(8), dataset=dataset, session=session, stats=stats
        )
        with state.lock:
            state.sessions[record.id] = record
        root_pane = next(iter(session.panes.values()))
        return {
            "session_id": record.id,
            "stats": record.stats,
            "initial_pane": _pane_json(record, root_pane),
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        record = _session(session_id)
        return {
            "session_id": record.id,
            "stats": record.stats,
            "panes": [
                _pane_json(record, p) for p in record.session.panes.values()
            ],
        }

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        _session(session_id)
        with state.lock:
            state.sessions.pop(session_id, None)
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/expand")
    async def expand(session_id: str, request: Request, threshold: Optional[float] = None):
        record = _session(session_id)
        body = await _json_body(request)
        parent_ref = body.get("parent_pane")
        label = body.get("label")
        op_name = body.get("expansion")
        if not isinstance(parent_ref, str) or not isinstance(label, str):
            raise _bad("parent_pane and label are required")
        try:
            op = ExpansionOp(op_name)
        except ValueError:
            raise _bad(f"unknown expansion {op_name!r}")
        conditions = _parse_filters(body.get("filters"))
        if op is ExpansionOp.FILTER and not conditions:
            raise _bad("filter expansion requires at least one condition")
        local = parent_ref.rpartition(".")[2]
        try:
            pane = record.session.expand_step(local, label, ExpansionKind(op, conditions))
        except UnknownPane as exc:
            raise ApiError(404, str(exc))
        except (UnknownLabel, TypeMismatch) as exc:
            raise ApiError(409, str(exc))
        return _pane_json(record, pane, threshold=threshold)

    @app.post("/sessions/{session_id}/panes")
    async def open_class_pane(session_id: str, request: Request):
        record = _session(session_id)
        body = await _json_body(request)
        class_uri = body.get("class")
        if not isinstance(class_uri, str):
            raise _bad("'class' is required")
        try:
            pane = record.session.open_class_pane(class_uri)
        except UnknownClass as exc:
            raise ApiError(404, str(exc))
        return _pane_json(record, pane)

    @app.get("/sessions/{session_id}/classes")
    def search_classes(session_id: str, q: str = ""):
        record = _session(session_id)
        return {"classes": record.session.search(q)}

    # ---------------------------------------------------------------- panes

    def _compute_view(
        record: SessionRecord,
        pane: Pane,
        view: str,
        prop: Optional[str],
        direction: str,
    ) -> Chart:
        session = record.session
        key = f"{view}|{prop}|{direction}"
        cached = pane.views.get(key)
        if cached is not None:
            return cached
        if view in VIEW_EXPANSIONS:
            chart = session.compute_expansion(
                pane.bar, ExpansionKind(VIEW_EXPANSIONS[view])
            )
        elif view == "connections":
            if not prop:
                raise _bad("connections view requires a 'property' parameter")
            prop_op = (
                ExpansionOp.PROPERTY_OUT
                if direction == OUTGOING
                else ExpansionOp.PROPERTY_IN
            )
            prop_chart = session.compute_expansion(pane.bar, ExpansionKind(prop_op))
            if prop not in prop_chart:
                raise _bad(f"property {prop!r} not present on this bar")
            obj_op = (
                ExpansionOp.OBJECT_OUT
                if direction == OUTGOING
                else ExpansionOp.OBJECT_IN
            )
            chart = session.compute_expansion(
                prop_chart[prop], ExpansionKind(obj_op)
            )
        else:
            raise _bad(f"unknown view {view!r}")
        pane.views[key] = chart
        return chart

    @app.get("/panes/{pane_ref}/chart")
    def get_chart(
        pane_ref: str,
        view: str = "subclass",
        threshold: Optional[float] = None,
        window_start: int = 0,
        window_len: Optional[int] = None,
        property: Optional[str] = None,
        direction: str = OUTGOING,
    ):
        if direction not in (OUTGOING, INCOMING):
            raise _bad(f"unknown direction {direction!r}")
        if window_start < 0 or (window_len is not None and window_len < 0):
            raise _bad("window parameters must be non-negative")
        record, pane = _pane(pane_ref)
        try:
            chart = _compute_view(record, pane, view, property, direction)
        except TypeMismatch as exc:
            raise _bad(str(exc))
        applied = None
        if view in ("prop_out", "prop_in"):
            applied = threshold if threshold is not None else pane.coverage_threshold
        payload = _chart_json(
            record.session, chart, applied, window_start, window_len
        )
        payload["view"] = view
        return payload

    @app.get("/panes/{pane_ref}/chart/stream")
    def stream_chart(
        pane_ref: str, view: str = "subclass", chunk_size: Optional[int] = None
    ):
        record, pane = _pane(pane_ref)
        op = VIEW_EXPANSIONS.get(view)
        if op is None:
            raise _bad(f"streaming supports views {sorted(VIEW_EXPANSIONS)}")
        try:
            plan = chart_query(pane.bar, ExpansionKind(op))
        except (TypeMismatch, UnsupportedPath) as exc:
            raise _bad(str(exc))

        def snapshot(result: QueryResult) -> str:
            if result.columns == ["p", "n", "occ"]:
                rows = [
                    {
                        "label": r[0].lexical,
                        "count": int(r[1].lexical),
                        "occurrences": int(r[2].lexical),
                    }
                    for r in result.rows
                ]
            else:
                rows = [
                    {"label": r[0].lexical, "count": int(r[1].lexical)}
                    for r in result.rows
                ]
            return json.dumps(
                {
                    "rows": rows,
                    "complete": result.complete,
                    "fraction": result.fraction,
                }
            ) + "\n"

        updates: "queue.Queue" = queue.Queue()

        def run():
            try:
                manager.execute_incremental(
                    plan,
                    record.dataset,
                    on_partial=lambda r: updates.put(r),
                    chunk_size=chunk_size,
                    max_chunks=10**9,
                )
            except Exception as exc:
                updates.put(exc)
            finally:
                updates.put(None)

        threading.Thread(target=run, daemon=True).start()

        def body():
            while True:
                item = updates.get()
                if item is None:
                    return
                if isinstance(item, Exception):
                    yield json.dumps({"error": str(item)}) + "\n"
                    return
                yield snapshot(item)

        return StreamingResponse(body(), media_type="application/x-ndjson")

    @app.post("/panes/{pane_ref}/table")
    async def get_table(pane_ref: str, request: Request):
        record, pane = _pane(pane_ref)
        body = await _json_body(request)
        columns = body.get("columns")
        if not isinstance(columns, list) or not all(
            isinstance(c, str) for c in columns
        ):
            raise _bad("columns must be a list of property URIs")
        filters = _parse_filters(body.get("filters"))
        limit = int(body.get("limit", 50))
        offset = int(body.get("offset", 0))
        if limit <= 0 or offset < 0:
            raise _bad("limit must be positive and offset non-negative")
        try:
            table = record.session.table(pane, columns, filters, limit, offset)
        except (InvalidComparator, UnsupportedPath) as exc:
            raise _bad(str(exc))
        return {
            "columns": table.columns,
            "rows": table.rows,
            "total": table.total,
            "sparql": table.sparql_text,
        }

    @app.delete("/panes/{pane_ref}")
    def close_pane(pane_ref: str):
        record, pane = _pane(pane_ref)
        record.session.close_pane(pane.id)
        return {"closed": pane_ref}

    # ------------------------------------------------------------- plumbing

    @app.get("/bar-sparql")
    def bar_sparql(pane_id: str, label: Optional[str] = None):
        record, pane = _pane(pane_id)
        bar = pane.bar
        if label is not None:
            chart = pane.step.result_chart
            if label not in chart:
                raise ApiError(404, f"label {label!r} not in pane chart")
            bar = chart[label]
        try:
            plan = bar_query(bar)
        except UnsupportedPath as exc:
            raise _bad(str(exc))
        return {"sparql": plan.text}

    @app.get("/metrics")
    def metrics():
        return manager.metrics()

    @app.get("/health")
    def health():
        with state.lock:
            count = len(state.sessions)
        return {"status": "ok", "sessions": count}

    if config.frontend_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/ui",
            StaticFiles(directory=config.frontend_dir, html=True),
            name="ui",
        )

    return app
