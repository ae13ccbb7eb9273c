"""Query manager: HVS caching, dedup, incremental evaluation, fast path."""

import random
import threading
import time
from dataclasses import replace

import pytest

from elinda.errors import CancelledByShutdown, NotDistributive, TooManyRetries
from elinda.evaluator import evaluate_embedded
from elinda.expansion import ExplorationSession, root_bar
from elinda.graph import build_graph
from elinda.manager import (
    DatasetHandle,
    FastPathIndex,
    ManagerConfig,
    QueryManager,
)
from elinda.model import Bar, BarType, ExpansionKind, ExpansionOp, RootStep
from elinda.ntriples import parse_ntriples
from elinda.sparqlgen import QueryPlan, bar_query, chart_query, table_query
from elinda.testing import MockSparqlEndpoint
from elinda.endpoint import EndpointConfig
from elinda.terms import RDF_TYPE, uri

import oracle
from conftest import ALBUM, ARTIST, NAME, WORK


def manager(**overrides):
    cfg = dict(heavy_threshold=1.0, chunk_size=100_000, max_chunks=10)
    cfg.update(overrides)
    return QueryManager(ManagerConfig(**cfg))


def remote_handle(mock, **cfg):
    params = dict(url=mock.url, timeout=5.0, max_retries=1)
    params.update(cfg)
    return DatasetHandle.remote(EndpointConfig(**params))


def work_chart_plan(g, op="subclass"):
    bar = root_bar(g, WORK)
    return chart_query(bar, ExpansionKind(ExpansionOp(op)))


def as_rows(result):
    return [
        tuple(None if c is None else c.lexical for c in row) for row in result.rows
    ]


# -------------------------------------------------------------------- HVS


def test_cached_equals_fresh_and_no_light_entries(g_music):
    qm = manager(heavy_threshold=0.0001)  # everything is heavy
    handle = DatasetHandle.embedded(g_music)
    plan = work_chart_plan(g_music)
    fresh = qm.execute(plan, handle)
    cached = qm.execute(plan, handle)
    assert as_rows(cached) == as_rows(fresh)
    assert cached.origin == "cache"
    assert qm.counters["cache_hits"] == 1
    assert qm.counters["heavy_insertions"] == 1

    light = manager(heavy_threshold=10.0)
    light.execute(plan, handle)
    light.execute(plan, handle)
    assert light.hvs_entries() == []
    assert light.counters["cache_hits"] == 0


def test_version_bump_invalidates(g_music):
    qm = manager(heavy_threshold=0.0001)
    handle = DatasetHandle.embedded(g_music)
    plan = work_chart_plan(g_music)
    qm.execute(plan, handle)
    assert qm.execute(plan, handle).origin == "cache"

    g2 = g_music.extend(parse_ntriples(
        "<http://x/s2> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Single> .\n"
    ))
    handle.replace_graph(g2)
    result = qm.execute(plan, handle)
    assert result.origin != "cache"
    assert ("http://x/Single", "2") in as_rows(result)
    qm.clear_stale(handle)
    assert all(e.key[1] == handle.version for e in qm.hvs_entries())


def test_injected_delay_cache_speedup(g_music):
    """Cold call pays the 200 ms backend; the cache answers in under 10 ms."""
    def before(query):
        time.sleep(0.2)
        return None

    with MockSparqlEndpoint(g_music, before_query=before) as mock:
        qm = manager(heavy_threshold=0.1)
        handle = remote_handle(mock)
        plan = work_chart_plan(g_music)
        t0 = time.monotonic()
        cold = qm.execute(plan, handle)
        cold_ms = (time.monotonic() - t0) * 1000
        t0 = time.monotonic()
        warm = qm.execute(plan, handle)
        warm_ms = (time.monotonic() - t0) * 1000
        assert cold_ms > 200
        assert warm_ms < 10
        assert as_rows(warm) == as_rows(cold)


def test_remote_version_bump(g_music):
    with MockSparqlEndpoint(g_music) as mock:
        qm = manager(heavy_threshold=1e-9)
        handle = remote_handle(mock)
        plan = work_chart_plan(g_music)
        qm.execute(plan, handle)
        assert qm.execute(plan, handle).origin == "cache"
        handle.bump_remote_version()
        assert qm.execute(plan, handle).origin != "cache"


def test_hvs_persistence(tmp_path, g_music):
    path = str(tmp_path / "hvs.bin")
    qm = manager(heavy_threshold=1e-9, hvs_path=path)
    handle = DatasetHandle.embedded(g_music)
    plan = work_chart_plan(g_music)
    original = qm.execute(plan, handle)

    restored = manager(heavy_threshold=1e-9, hvs_path=path)
    hit = restored.execute(plan, handle)
    assert hit.origin == "cache"
    assert as_rows(hit) == as_rows(original)
    assert restored.hvs_entries()[0].measured_runtime is None


# ------------------------------------------------------------------- dedup


def test_concurrent_identical_queries_coalesce(g_music):
    """8 concurrent identical queries -> one backend execution, equal results."""
    release = threading.Event()

    def before(query):
        release.wait(timeout=5)
        return None

    with MockSparqlEndpoint(g_music, before_query=before) as mock:
        qm = manager(heavy_threshold=10.0)
        handle = remote_handle(mock)
        plan = work_chart_plan(g_music)
        results = [None] * 8
        errors = []

        def worker(i):
            try:
                results[i] = qm.execute(plan, handle)
            except Exception as exc:  # pragma: no cover - diagnostic
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        time.sleep(0.3)  # let all eight reach the manager
        release.set()
        for t in threads:
            t.join(timeout=10)
        assert not errors
        assert mock.request_count == 1
        assert qm.counters["dedup_coalesced"] == 7
        first = as_rows(results[0])
        assert all(as_rows(r) == first for r in results)


def test_shutdown_cancels(g_music):
    qm = manager()
    qm.shutdown()
    with pytest.raises(CancelledByShutdown):
        qm.execute(work_chart_plan(g_music), DatasetHandle.embedded(g_music))


def test_resubmission_on_5xx(g_music):
    failures = [500, 500]  # two failed submissions, third succeeds

    def before(query):
        return failures.pop(0) if failures else None

    with MockSparqlEndpoint(g_music, before_query=before) as mock:
        qm = manager(max_resubmissions=2)
        handle = remote_handle(mock, max_retries=0)
        result = qm.execute(work_chart_plan(g_music), handle)
        assert ("http://x/Album", "2") in as_rows(result)

    with MockSparqlEndpoint(g_music, before_query=lambda q: 500) as mock:
        qm = manager(max_resubmissions=1)
        with pytest.raises(TooManyRetries):
            qm.execute(work_chart_plan(g_music), remote_handle(mock, max_retries=0))


# ------------------------------------------------------------- incremental


@pytest.mark.parametrize("op", ["subclass", "prop_out", "prop_in"])
@pytest.mark.parametrize("chunk", [1, 3, 1000])
def test_incremental_equals_batch_fixture(g_music, op, chunk):
    qm = manager()
    handle = DatasetHandle.embedded(g_music)
    plan = work_chart_plan(g_music, op)
    batch = qm.evaluate_embedded(plan, g_music)
    partials = []
    merged = qm.execute_incremental(
        plan, handle, on_partial=partials.append, chunk_size=chunk
    )
    assert merged.complete
    assert as_rows(merged) == as_rows(batch)
    assert partials[-1].complete
    assert as_rows(partials[-1]) == as_rows(batch)
    fractions = [p.fraction for p in partials]
    assert fractions == sorted(fractions)


def test_incremental_early_stop_fraction(g_music):
    qm = manager()
    handle = DatasetHandle.embedded(g_music)
    plan = work_chart_plan(g_music)
    result = qm.execute_incremental(plan, handle, chunk_size=3, max_chunks=2)
    assert not result.complete
    assert result.fraction == pytest.approx(min(1.0, 2 * 3 / 10))


def test_incremental_rejects_non_distributive(g_music):
    qm = manager()
    handle = DatasetHandle.embedded(g_music)
    with pytest.raises(NotDistributive):
        qm.execute_incremental(bar_query(root_bar(g_music, WORK)), handle)
    with pytest.raises(NotDistributive):
        qm.execute_incremental(
            table_query(root_bar(g_music, WORK), [NAME]), handle
        )


def test_incremental_remote_matches_embedded(g_music):
    qm = manager()
    embedded = DatasetHandle.embedded(g_music)
    with MockSparqlEndpoint(g_music) as mock:
        remote = remote_handle(mock)
        for op in ("subclass", "prop_out", "prop_in"):
            plan = work_chart_plan(g_music, op)
            local = qm.execute_incremental(plan, embedded, chunk_size=3)
            far = qm.execute_incremental(plan, remote, chunk_size=2)
            assert as_rows(far) == as_rows(local)


# --------------------------------------------------------------- fast path


def level_zero_plan(g, root_classes, op):
    path = (RootStep(root_classes),)
    members = (
        g.instance_uris()
        if root_classes is None
        else frozenset().union(*(g.instances_of(c) for c in root_classes))
    )
    label = root_classes[0] if root_classes else "http://www.w3.org/2002/07/owl#Thing"
    bar = Bar(frozenset(members), label, BarType.CLASS, path)
    return chart_query(bar, ExpansionKind(ExpansionOp(op)))


def test_fast_path_fixture_counts(g_music):
    index = FastPathIndex(g_music)  # no root: every typed instance subject
    assert index.outgoing[RDF_TYPE] == (4, 4)
    assert index.outgoing[ARTIST] == (2, 2)
    assert index.outgoing[NAME] == (1, 1)
    assert index.incoming[ARTIST] == (1, 2)


def test_fast_path_equals_general_evaluation(g_music):
    qm = manager()
    handle = DatasetHandle.embedded(g_music)
    for op in ("prop_out", "prop_in"):
        plan = level_zero_plan(g_music, None, op)
        fast = qm.execute(plan, handle)
        assert fast.origin == "fast_path"
        general = evaluate_embedded(
            QueryPlan(plan.text, plan.shape, None), g_music
        )
        assert as_rows(fast) == as_rows(general)
    assert qm.counters["fast_path_hits"] == 2


@pytest.mark.parametrize("seed", range(10))
def test_fast_path_random_graphs(seed):
    rng = random.Random(3000 + seed)
    triples = oracle.random_graph_triples(rng)
    g = build_graph(triples)
    qm = manager()
    handle = DatasetHandle.embedded(g)
    for root_classes in (None, ("http://g/C0",)):
        for op in ("prop_out", "prop_in"):
            plan = level_zero_plan(g, root_classes, op)
            fast = qm.execute(plan, handle)
            general = evaluate_embedded(QueryPlan(plan.text, plan.shape, None), g)
            assert as_rows(fast) == as_rows(general), f"seed={seed} {root_classes} {op}"


def test_non_level_zero_skips_fast_path(g_music):
    qm = manager()
    handle = DatasetHandle.embedded(g_music)
    session = ExplorationSession(g_music, WORK)
    album = session.root_pane.step.result_chart[ALBUM]
    plan = chart_query(album, ExpansionKind(ExpansionOp.PROPERTY_OUT))
    result = qm.execute(plan, handle)
    assert result.origin != "fast_path"
    assert qm.counters["fast_path_hits"] == 0


def test_metrics_shape(g_music):
    qm = manager()
    qm.execute(work_chart_plan(g_music), DatasetHandle.embedded(g_music))
    data = qm.metrics()
    assert data["backend_ms"]["count"] == 1
    assert set(data) >= {
        "cache_hits",
        "cache_misses",
        "heavy_insertions",
        "dedup_coalesced",
        "fast_path_hits",
        "hvs_entries",
    }
