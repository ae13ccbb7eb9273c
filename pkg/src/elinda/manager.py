"""Query management: routing, heavy-query caching (HVS), in-flight
deduplication, incremental chart evaluation and the precomputed fast path
for level-zero property charts."""

from __future__ import annotations

import os
import struct
import threading
import time
from concurrent.futures import Future
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from .errors import (
    CancelledByShutdown,
    EndpointTimeout,
    HttpError,
    NotDistributive,
    TooManyRetries,
)
from .endpoint import EndpointClient, EndpointConfig
from .evaluator import evaluate_embedded
from .expansion import apply_filter
from .graph import Graph
from .model import Bar, ExpansionOp, FilterStep, RootStep
from .results import (
    ORIGIN_CACHE,
    ORIGIN_EMBEDDED,
    ORIGIN_FAST_PATH,
    ORIGIN_REMOTE,
    QueryResult,
)
from .sparqlgen import ChartSpec, PlanShape, QueryPlan
from .terms import (
    CLASS_DECL_URIS,
    RDF_TYPE,
    RDFS_SUBCLASSOF,
    Term,
    integer_literal,
    uri,
)


@dataclass
class ManagerConfig:
    heavy_threshold: float = 1.0  # seconds; the paper's heaviness cutoff
    chunk_size: int = 100_000
    max_chunks: int = 10
    query_timeout: float = 30.0
    max_resubmissions: int = 2
    hvs_path: Optional[str] = None

    def __post_init__(self):
        if self.heavy_threshold <= 0 or self.chunk_size <= 0 or self.max_chunks <= 0:
            raise ValueError("heavy_threshold, chunk_size and max_chunks must be positive")


class DatasetHandle:
    """Either an embedded graph or a remote endpoint, with a monotone data
    version that keys cache entries."""

    def __init__(
        self,
        graph: Optional[Graph] = None,
        endpoint: Optional[EndpointClient] = None,
        source_id: str = "embedded",
    ):
        if (graph is None) == (endpoint is None):
            raise ValueError("exactly one of graph/endpoint must be given")
        self.graph = graph
        self.endpoint = endpoint
        self.source_id = source_id
        self._remote_version = 1
        self._lock = threading.Lock()

    @classmethod
    def embedded(cls, graph: Graph, source_id: str = "embedded") -> "DatasetHandle":
        return cls(graph=graph, source_id=source_id)

    @classmethod
    def remote(cls, config: EndpointConfig) -> "DatasetHandle":
        return cls(endpoint=EndpointClient(config), source_id=config.url)

    @property
    def is_remote(self) -> bool:
        return self.endpoint is not None

    @property
    def version(self) -> int:
        return self.graph.version if self.graph is not None else self._remote_version

    def replace_graph(self, graph: Graph) -> None:
        with self._lock:
            self.graph = graph

    def bump_remote_version(self) -> None:
        with self._lock:
            self._remote_version += 1


@dataclass
class HvsEntry:
    key: Tuple[str, int, str]
    result: QueryResult
    measured_runtime: Optional[float]  # None for entries restored from disk
    stored_at: float


class FastPathIndex:
    """Per-predicate aggregates answering level-zero property charts.

    outgoing: predicate -> (distinct subjects in S, occurrences)
    incoming: predicate -> (distinct objects in S, occurrences)
    where S is the level-zero instance set (root classes, or every typed
    instance subject when the dataset has no root).
    """

    def __init__(self, g: Graph, root_classes: Optional[Tuple[str, ...]] = None):
        self.version = g.version
        self.root_classes = root_classes
        if root_classes is None:
            allowed: Set[str] = set(g.instance_uris())
        else:
            allowed = set()
            for c in root_classes:
                allowed |= g.instances_of(c)
        out_members: Dict[str, Set[str]] = {}
        out_occ: Dict[str, int] = {}
        in_members: Dict[str, Set[str]] = {}
        in_occ: Dict[str, int] = {}
        for s, p, o in g.triples():
            pred = p.lexical
            if s.lexical in allowed:
                out_members.setdefault(pred, set()).add(s.lexical)
                out_occ[pred] = out_occ.get(pred, 0) + 1
            if o.is_uri and o.lexical in allowed:
                in_members.setdefault(pred, set()).add(o.lexical)
                in_occ[pred] = in_occ.get(pred, 0) + 1
        self.outgoing = {
            p: (len(m), out_occ[p]) for p, m in out_members.items()
        }
        self.incoming = {
            p: (len(m), in_occ[p]) for p, m in in_members.items()
        }

    def answer(self, op: ExpansionOp) -> QueryResult:
        table = self.outgoing if op is ExpansionOp.PROPERTY_OUT else self.incoming
        rows = [
            (uri(p), integer_literal(n), integer_literal(occ))
            for p, (n, occ) in table.items()
        ]
        rows.sort(key=lambda r: (-int(r[1].lexical), r[0].lexical))
        return QueryResult(columns=["p", "n", "occ"], rows=rows, origin=ORIGIN_FAST_PATH)


def _chart_members(g: Graph, spec: ChartSpec) -> Set[str]:
    parent = spec.parent
    if spec.op is ExpansionOp.FILTER and spec.conditions:
        return set(apply_filter(g, parent, spec.conditions).members)
    return set(parent.members)


def _partial_to_rows(
    op: ExpansionOp,
    groups: Dict[str, Set[str]],
    occurrences: Dict[str, int],
    all_labels: Optional[Sequence[str]] = None,
) -> Tuple[List[str], List[Tuple[Term, ...]]]:
    if op in (ExpansionOp.PROPERTY_OUT, ExpansionOp.PROPERTY_IN):
        rows = [
            (uri(p), integer_literal(len(m)), integer_literal(occurrences[p]))
            for p, m in groups.items()
        ]
        rows.sort(key=lambda r: (-int(r[1].lexical), r[0].lexical))
        return ["p", "n", "occ"], rows
    labels = set(groups)
    if all_labels is not None:
        labels |= set(all_labels)
    rows = [
        (uri(c), integer_literal(len(groups.get(c, ())))) for c in labels
    ]
    rows.sort(key=lambda r: (-int(r[1].lexical), r[0].lexical))
    return ["c", "n"], rows


class QueryManager:
    """Shared, thread-safe execution front end over embedded and remote backends."""

    def __init__(self, config: Optional[ManagerConfig] = None):
        self.config = config or ManagerConfig()
        self._hvs: Dict[Tuple[str, int, str], HvsEntry] = {}
        self._inflight: Dict[Tuple[str, int, str], Future] = {}
        self._fast_path: Dict[Tuple[str, int, Optional[Tuple[str, ...]]], FastPathIndex] = {}
        self._lock = threading.Lock()
        self._shutdown = False
        self.counters = {
            "cache_hits": 0,
            "cache_misses": 0,
            "heavy_insertions": 0,
            "dedup_coalesced": 0,
            "fast_path_hits": 0,
        }
        self.backend_ms: List[float] = []
        if self.config.hvs_path and os.path.exists(self.config.hvs_path):
            self.load_hvs(self.config.hvs_path)

    # ------------------------------------------------------------------ HVS

    def _bump(self, counter: str, amount: int = 1) -> None:
        with self._lock:
            self.counters[counter] += amount

    def metrics(self) -> dict:
        with self._lock:
            data = dict(self.counters)
            samples = list(self.backend_ms)
        data["backend_ms"] = {
            "count": len(samples),
            "total": sum(samples),
            "max": max(samples) if samples else 0.0,
        }
        data["hvs_entries"] = len(self._hvs)
        return data

    def hvs_entries(self) -> List[HvsEntry]:
        with self._lock:
            return list(self._hvs.values())

    def clear_stale(self, dataset: DatasetHandle) -> None:
        """Drop HVS entries from older versions of this dataset."""
        with self._lock:
            self._hvs = {
                k: v
                for k, v in self._hvs.items()
                if not (k[0] == dataset.source_id and k[1] < dataset.version)
            }

    # -------------------------------------------------------------- execute

    def execute(self, plan: QueryPlan, dataset: DatasetHandle) -> QueryResult:
        if self._shutdown:
            raise CancelledByShutdown("manager is shut down")
        key = (dataset.source_id, dataset.version, plan.canonical_key)
        owner = False
        with self._lock:
            entry = self._hvs.get(key)
            if entry is not None:
                self.counters["cache_hits"] += 1
                return entry.result.with_origin(ORIGIN_CACHE)
            self.counters["cache_misses"] += 1
            pending = self._inflight.get(key)
            if pending is not None:
                self.counters["dedup_coalesced"] += 1
            else:
                pending = Future()
                self._inflight[key] = pending
                owner = True
        if not owner:
            return pending.result(timeout=self.config.query_timeout * 4)
        try:
            result = self._execute_with_resubmission(plan, dataset, key)
            pending.set_result(result)
            return result
        except BaseException as exc:
            pending.set_exception(exc)
            raise
        finally:
            with self._lock:
                self._inflight.pop(key, None)

    def _execute_with_resubmission(
        self, plan: QueryPlan, dataset: DatasetHandle, key
    ) -> QueryResult:
        attempts = self.config.max_resubmissions + 1
        last: Optional[Exception] = None
        for _ in range(attempts):
            try:
                return self._run_and_classify(plan, dataset, key)
            except (EndpointTimeout, TooManyRetries) as exc:
                last = exc
            except HttpError as exc:
                if 500 <= exc.status < 600:
                    last = exc
                else:
                    raise
        raise last

    def _run_and_classify(self, plan: QueryPlan, dataset: DatasetHandle, key) -> QueryResult:
        started = time.monotonic()
        result = self._run_backend(plan, dataset)
        runtime = time.monotonic() - started
        with self._lock:
            self.backend_ms.append(runtime * 1000.0)
            if len(self.backend_ms) > 1000:
                del self.backend_ms[: len(self.backend_ms) - 1000]
        result.elapsed = runtime
        if runtime > self.config.heavy_threshold:
            entry = HvsEntry(
                key=key, result=result, measured_runtime=runtime, stored_at=time.time()
            )
            with self._lock:
                self._hvs[key] = entry
                self.counters["heavy_insertions"] += 1
            if self.config.hvs_path:
                self._append_record(self.config.hvs_path, entry)
        return result

    def _run_backend(self, plan: QueryPlan, dataset: DatasetHandle) -> QueryResult:
        if (
            not dataset.is_remote
            and plan.shape is PlanShape.CHART_AGGREGATE
            and plan.chart is not None
            and plan.chart.level_zero
            and plan.chart.op in (ExpansionOp.PROPERTY_OUT, ExpansionOp.PROPERTY_IN)
        ):
            index = self._fast_path_for(dataset, plan.chart)
            self._bump("fast_path_hits")
            return index.answer(plan.chart.op)
        if dataset.is_remote:
            return dataset.endpoint.execute_remote(plan)
        return evaluate_embedded(plan, dataset.graph)

    def evaluate_embedded(self, plan: QueryPlan, g: Graph) -> QueryResult:
        return evaluate_embedded(plan, g)

    # ------------------------------------------------------------ fast path

    def _root_classes_of(self, spec: ChartSpec) -> Optional[Tuple[str, ...]]:
        step = spec.parent.path[0]
        assert isinstance(step, RootStep)
        return step.classes

    def _fast_path_for(self, dataset: DatasetHandle, spec: ChartSpec) -> FastPathIndex:
        classes = self._root_classes_of(spec)
        key = (dataset.source_id, dataset.version, classes)
        with self._lock:
            index = self._fast_path.get(key)
        if index is None:
            index = FastPathIndex(dataset.graph, classes)
            with self._lock:
                self._fast_path[key] = index
        return index

    def rebuild_fast_path(
        self, g: Graph, root_classes: Optional[Tuple[str, ...]] = None
    ) -> FastPathIndex:
        return FastPathIndex(g, root_classes)

    # ---------------------------------------------------------- incremental

    def execute_incremental(
        self,
        plan: QueryPlan,
        dataset: DatasetHandle,
        on_partial: Optional[Callable[[QueryResult], None]] = None,
        chunk_size: Optional[int] = None,
        max_chunks: Optional[int] = None,
    ) -> QueryResult:
        if plan.shape is not PlanShape.CHART_AGGREGATE or plan.chart is None:
            raise NotDistributive(f"plan shape {plan.shape} cannot run incrementally")
        n = chunk_size or self.config.chunk_size
        k = max_chunks or self.config.max_chunks
        if dataset.is_remote:
            return self._incremental_remote(plan, dataset, on_partial, n, k)
        return self._incremental_embedded(plan, dataset.graph, on_partial, n, k)

    def _incremental_embedded(
        self,
        plan: QueryPlan,
        g: Graph,
        on_partial,
        n: int,
        k: int,
    ) -> QueryResult:
        spec = plan.chart
        op = spec.op
        members = _chart_members(g, spec)
        groups: Dict[str, Set[str]] = {}
        occurrences: Dict[str, int] = {}
        all_labels: Optional[List[str]] = None
        label_set: Optional[Set[str]] = None
        if op in (ExpansionOp.SUBCLASS, ExpansionOp.FILTER):
            all_labels = sorted(g.direct_subclasses(spec.parent.label))
            label_set = set(all_labels)
        total = len(g)
        chunks = (total + n - 1) // n if total else 1
        done_chunks = 0
        for i in range(min(chunks, k)):
            for s, p, o in g.triple_slice(i * n, (i + 1) * n):
                self._accumulate(g, spec, members, label_set, groups, occurrences, s, p, o)
            done_chunks += 1
            if on_partial is not None:
                cols, rows = _partial_to_rows(op, groups, occurrences, all_labels)
                fraction = min(1.0, done_chunks * n / total) if total else 1.0
                on_partial(
                    QueryResult(
                        columns=cols,
                        rows=rows,
                        origin=ORIGIN_EMBEDDED,
                        complete=done_chunks >= chunks,
                        fraction=fraction,
                    )
                )
        cols, rows = _partial_to_rows(op, groups, occurrences, all_labels)
        complete = done_chunks >= chunks
        fraction = min(1.0, done_chunks * n / total) if total else 1.0
        return QueryResult(
            columns=cols,
            rows=rows,
            origin=ORIGIN_EMBEDDED,
            complete=complete,
            fraction=fraction,
        )

    def _accumulate(self, g, spec, members, label_set, groups, occurrences, s, p, o):
        op = spec.op
        if op in (ExpansionOp.SUBCLASS, ExpansionOp.FILTER):
            if (
                p.lexical == RDF_TYPE
                and o.is_uri
                and o.lexical in label_set
                and s.lexical in members
            ):
                groups.setdefault(o.lexical, set()).add(s.lexical)
        elif op is ExpansionOp.PROPERTY_OUT:
            if s.lexical in members:
                groups.setdefault(p.lexical, set()).add(s.lexical)
                occurrences[p.lexical] = occurrences.get(p.lexical, 0) + 1
        elif op is ExpansionOp.PROPERTY_IN:
            if o.is_uri and o.lexical in members:
                groups.setdefault(p.lexical, set()).add(o.lexical)
                occurrences[p.lexical] = occurrences.get(p.lexical, 0) + 1
        elif op is ExpansionOp.OBJECT_OUT:
            if p.lexical == spec.parent.label and s.lexical in members and o.is_uri:
                for tau in g.classes_of(o.lexical):
                    groups.setdefault(tau, set()).add(o.lexical)
        elif op is ExpansionOp.OBJECT_IN:
            if p.lexical == spec.parent.label and o.is_uri and o.lexical in members:
                for tau in g.classes_of(s.lexical):
                    groups.setdefault(tau, set()).add(s.lexical)
        else:
            raise NotDistributive(f"expansion {op} is not distributive")

    def _incremental_remote(
        self, plan: QueryPlan, dataset: DatasetHandle, on_partial, n: int, k: int
    ) -> QueryResult:
        # Chunk by pages of the member subquery ordered by subject. Approximate
        # when the remote store's ordering is unstable; exact on stable stores.
        from .sparqlgen import (
            member_count_query,
            paged_members_query,
            paged_pair_query,
            subclass_labels_query,
        )

        spec = plan.chart
        paging_bar = spec.parent
        if spec.op is ExpansionOp.FILTER and spec.conditions:
            paging_bar = Bar(
                paging_bar.members,
                paging_bar.label,
                paging_bar.bar_type,
                paging_bar.path + (FilterStep(spec.conditions),),
            )
        total_result = self.execute(member_count_query(paging_bar), dataset)
        total = int(float(total_result.rows[0][0].lexical)) if total_result.rows else 0
        groups: Dict[str, Set[str]] = {}
        occurrences: Dict[str, int] = {}
        all_labels: Optional[List[str]] = None
        if spec.op in (ExpansionOp.SUBCLASS, ExpansionOp.FILTER):
            label_rows = self.execute(subclass_labels_query(spec.parent.label), dataset)
            all_labels = sorted(r[0].lexical for r in label_rows.rows if r[0] is not None)
        chunks = (total + n - 1) // n if total else 1
        done = 0
        for i in range(min(chunks, k)):
            page_plan = paged_members_query(paging_bar, n, i * n)
            page = self.execute(page_plan, dataset)
            subjects = [row[0].lexical for row in page.rows if row[0] is not None]
            if subjects:
                pair_plan = paged_pair_query(spec, subjects)
                pairs = self.execute(pair_plan, dataset)
                self._merge_remote_pairs(spec.op, pairs, groups, occurrences)
            done += 1
            if on_partial is not None:
                cols, rows = _partial_to_rows(spec.op, groups, occurrences, all_labels)
                on_partial(
                    QueryResult(
                        columns=cols,
                        rows=rows,
                        origin=ORIGIN_REMOTE,
                        complete=done >= chunks,
                        fraction=min(1.0, done * n / total) if total else 1.0,
                    )
                )
        cols, rows = _partial_to_rows(spec.op, groups, occurrences, all_labels)
        return QueryResult(
            columns=cols,
            rows=rows,
            origin=ORIGIN_REMOTE,
            complete=done >= chunks,
            fraction=min(1.0, done * n / total) if total else 1.0,
        )

    def _merge_remote_pairs(self, op, pairs: QueryResult, groups, occurrences) -> None:
        for row in pairs.rows:
            if any(cell is None for cell in row):
                continue
            if op in (ExpansionOp.PROPERTY_OUT, ExpansionOp.PROPERTY_IN):
                member, pred, count = row[0].lexical, row[1].lexical, row[2]
                groups.setdefault(pred, set()).add(member)
                occurrences[pred] = occurrences.get(pred, 0) + int(float(count.lexical))
            else:
                label, member = row[0].lexical, row[1].lexical
                groups.setdefault(label, set()).add(member)

    # ---------------------------------------------------------- persistence

    def _append_record(self, path: str, entry: HvsEntry) -> None:
        with self._lock:
            with open(path, "ab") as fh:
                fh.write(_encode_record(entry))

    def save_hvs(self, path: str) -> None:
        with self._lock:
            entries = list(self._hvs.values())
        with open(path, "wb") as fh:
            for entry in entries:
                fh.write(_encode_record(entry))

    def load_hvs(self, path: str, source_id: str = "embedded") -> int:
        loaded = 0
        with open(path, "rb") as fh:
            blob = fh.read()
        pos = 0
        while pos < len(blob):
            entry, pos = _decode_record(blob, pos, source_id)
            with self._lock:
                self._hvs[entry.key] = entry
            loaded += 1
        return loaded

    def shutdown(self) -> None:
        with self._lock:
            self._shutdown = True
            pending = list(self._inflight.values())
            self._inflight.clear()
        for fut in pending:
            if not fut.done():
                fut.set_exception(CancelledByShutdown("manager is shut down"))


# HVS file format: length-prefixed records, little-endian u32 lengths.
# Record = key(canonical query) | u32 version | columns | rows of tagged terms.

def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _unpack_str(blob: bytes, pos: int) -> Tuple[str, int]:
    (length,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    return blob[pos : pos + length].decode("utf-8"), pos + length


def _pack_term(t: Optional[Term]) -> bytes:
    if t is None:
        return struct.pack("<B", 0)
    if t.is_uri:
        return struct.pack("<B", 1) + _pack_str(t.lexical)
    return (
        struct.pack("<B", 2)
        + _pack_str(t.lexical)
        + _pack_str(t.language or "")
        + _pack_str(t.datatype or "")
    )


def _unpack_term(blob: bytes, pos: int) -> Tuple[Optional[Term], int]:
    (tag,) = struct.unpack_from("<B", blob, pos)
    pos += 1
    if tag == 0:
        return None, pos
    lexical, pos = _unpack_str(blob, pos)
    if tag == 1:
        return uri(lexical), pos
    language, pos = _unpack_str(blob, pos)
    datatype, pos = _unpack_str(blob, pos)
    return Term("literal", lexical, language or None, datatype or None), pos


def _encode_record(entry: HvsEntry) -> bytes:
    _, version, canonical = entry.key
    result = entry.result
    parts = [_pack_str(canonical), struct.pack("<I", version)]
    parts.append(struct.pack("<I", len(result.columns)))
    for c in result.columns:
        parts.append(_pack_str(c))
    parts.append(struct.pack("<I", len(result.rows)))
    for row in result.rows:
        parts.append(struct.pack("<I", len(row)))
        for cell in row:
            parts.append(_pack_term(cell))
    return b"".join(parts)


def _decode_record(blob: bytes, pos: int, source_id: str) -> Tuple[HvsEntry, int]:
    canonical, pos = _unpack_str(blob, pos)
    (version,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    (ncols,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    columns = []
    for _ in range(ncols):
        c, pos = _unpack_str(blob, pos)
        columns.append(c)
    (nrows,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    rows = []
    for _ in range(nrows):
        (ncells,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        row = []
        for _ in range(ncells):
            cell, pos = _unpack_term(blob, pos)
            row.append(cell)
        rows.append(tuple(row))
    result = QueryResult(columns=columns, rows=rows, origin=ORIGIN_CACHE)
    entry = HvsEntry(
        key=(source_id, version, canonical),
        result=result,
        measured_runtime=None,
        stored_at=time.time(),
    )
    return entry, pos
