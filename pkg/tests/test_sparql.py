"""SPARQL generation: canonical keys, and round trips through the evaluator.

Round trip: for random exploration paths, every generated bar/chart/table
query executed on the embedded evaluator must reproduce the engine's sets
and counts exactly.
"""

import random

import pytest

from elinda.errors import UnsupportedPath
from elinda.evaluator import evaluate_embedded
from elinda.expansion import (
    ExplorationSession,
    apply_filter,
    instance_table,
    subclass_expansion,
)
from elinda.graph import build_graph
from elinda.model import (
    BarType,
    Comparator,
    ExpansionKind,
    ExpansionOp,
    FilterCondition,
    PSEUDO_LABELS,
    PseudoStep,
)
from elinda.sparqlgen import (
    MAX_PATH_DEPTH,
    bar_query,
    canonicalize,
    chart_query,
    class_count_query,
    member_count_query,
    table_query,
    triple_count_query,
)
from elinda.terms import literal, uri

import oracle
from conftest import A1, A2, ALBUM, ARTIST, NAME, WORK

# ------------------------------------------------------------ canonical keys


def test_canonicalize_ignores_whitespace_and_prefixes():
    a = "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\nSELECT ?s WHERE {\n  ?s rdf:type ?c .\n}"
    b = "SELECT ?s   WHERE { ?s <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> ?c . }"
    assert canonicalize(a) == canonicalize(b)
    c = "SELECT ?s WHERE { ?s <http://x/p> ?c . }"
    assert canonicalize(a) != canonicalize(c)


def test_plans_with_same_meaning_share_keys(g_music):
    session = ExplorationSession(g_music, WORK)
    bar = session.root_pane.step.result_chart[ALBUM]
    assert bar_query(bar).canonical_key == bar_query(bar).canonical_key
    assert bar_query(bar).canonical_key != member_count_query(bar).canonical_key


def test_pseudo_and_deep_paths_rejected(g_music):
    session = ExplorationSession(g_music, WORK)
    bar = session.root_pane.step.result_chart[ALBUM]
    pseudo = bar.__class__(
        frozenset(), "«untyped»", bar.bar_type, bar.path + (PseudoStep("«untyped»"),)
    )
    with pytest.raises(UnsupportedPath):
        bar_query(pseudo)
    deep = bar.__class__(
        frozenset(), bar.label, bar.bar_type, bar.path * (MAX_PATH_DEPTH + 1)
    )
    with pytest.raises(UnsupportedPath):
        bar_query(deep)


# ---------------------------------------------------------------- round trip


def members_via_query(g, bar):
    result = evaluate_embedded(bar_query(bar), g)
    return {row[0].lexical for row in result.rows}


def chart_rows(g, bar, op, conditions=()):
    plan = chart_query(bar, ExpansionKind(ExpansionOp(op), tuple(conditions)))
    result = evaluate_embedded(plan, g)
    return [
        tuple(int(c.lexical) if i else c.lexical for i, c in enumerate(row))
        for row in result.rows
    ]


def check_bar_round_trip(g, bar):
    assert members_via_query(g, bar) == set(bar.members)
    count = evaluate_embedded(member_count_query(bar), g)
    assert int(count.rows[0][0].lexical) == len(bar.members)


def check_chart_round_trips(g, session, bar):
    if bar.bar_type is BarType.CLASS:
        engine = session.compute_expansion(bar, ExpansionKind(ExpansionOp.SUBCLASS))
        assert chart_rows(g, bar, "subclass") == [
            (l, engine.metrics[l].instance_count) for l in engine.labels()
        ]
        for op in ("prop_out", "prop_in"):
            engine = session.compute_expansion(bar, ExpansionKind(ExpansionOp(op)))
            rows = chart_rows(g, bar, op)
            assert [(p, n) for p, n, _ in rows] == [
                (l, engine.metrics[l].instance_count) for l in engine.labels()
            ]
            for p, n, occ in rows:
                metrics = engine.metrics[p]
                assert occ == round(metrics.average_per_instance * n)
    else:
        for op in ("object_out", "object_in"):
            direction = "outgoing" if op == "object_out" else "incoming"
            if bar.path and getattr(bar.path[-1], "direction", direction) != direction:
                continue
            engine = session.compute_expansion(bar, ExpansionKind(ExpansionOp(op)))
            expected = [
                (l, engine.metrics[l].instance_count)
                for l in engine.labels()
                if l not in PSEUDO_LABELS
            ]
            assert chart_rows(g, bar, op) == expected


def check_table_round_trip(g, bar, columns):
    engine = instance_table(g, bar, columns)
    result = evaluate_embedded(table_query(bar, columns), g)
    got = {}
    order = []
    for row in result.rows:
        subject = row[0].lexical
        if subject not in got:
            got[subject] = {c: set() for c in columns}
            order.append(subject)
        for col, cell in zip(columns, row[1:]):
            if cell is not None:
                got[subject][col].add(cell.lexical)
    assert order == [r["subject"] for r in engine.rows]
    for row in engine.rows:
        assert got[row["subject"]] == {
            c: set(v) for c, v in row["cells"].items()
        }


def test_fixture_round_trips(g_music):
    session = ExplorationSession(g_music, WORK)
    p0 = session.root_pane
    album = p0.step.result_chart[ALBUM]
    check_bar_round_trip(g_music, p0.bar)
    check_bar_round_trip(g_music, album)
    check_chart_round_trips(g_music, session, album)
    check_table_round_trip(g_music, album, [NAME, ARTIST])
    cond = FilterCondition(NAME, Comparator.EQUALS, literal("A1"))
    filtered = apply_filter(g_music, album, [cond])
    check_bar_round_trip(g_music, filtered)
    assert members_via_query(g_music, filtered) == {A1}


def test_counting_queries(g_music):
    assert int(evaluate_embedded(triple_count_query(), g_music).rows[0][0].lexical) == 10
    assert int(evaluate_embedded(class_count_query(), g_music).rows[0][0].lexical) == 1


OPS = ["subclass", "prop_out", "prop_in", "object_out", "object_in", "filter"]


def random_walk(session, rng, depth):
    pane = session.root_pane
    for _ in range(depth):
        chart = pane.step.result_chart
        moves = []
        for label in chart.labels():
            bar = chart[label]
            if bar.is_pseudo:
                continue
            if bar.bar_type is BarType.CLASS:
                moves += [(label, op) for op in ("subclass", "prop_out", "prop_in")]
            else:
                moves += [(label, op) for op in ("object_out", "object_in")]
        if pane.bar.bar_type is BarType.CLASS:
            moves.append((pane.bar.label, "filter"))
        if not moves:
            break
        label, op = rng.choice(moves)
        conditions = ()
        if op == "filter":
            conditions = (
                FilterCondition(
                    "http://g/p0",
                    rng.choice([Comparator.CONTAINS, Comparator.EQUALS]),
                    literal(rng.choice(["alpha", "beta", "a"])),
                ),
            )
        pane = session.expand_step(
            pane.id, label, ExpansionKind(ExpansionOp(op), conditions)
        )
    return pane


@pytest.mark.parametrize("seed", range(30))
def test_random_path_round_trips(seed):
    rng = random.Random(2000 + seed)
    triples = oracle.random_graph_triples(rng, max_instances=20, max_edges=60)
    g = build_graph(triples)
    session = ExplorationSession(g, "http://g/C0")
    pane = random_walk(session, rng, depth=rng.randint(1, 5))
    for stored in session.panes.values():
        check_bar_round_trip(g, stored.bar)
        check_chart_round_trips(g, session, stored.bar)
    check_table_round_trip(g, pane.bar if pane.bar.bar_type is BarType.CLASS
                           else session.root_pane.bar, ["http://g/p0"])
