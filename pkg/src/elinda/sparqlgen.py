"""SPARQL 1.1 SELECT synthesis for bars, charts and instance tables.

Every generated query reconstructs a bar's member set from its ancestry path,
so executing the text against the same data reproduces what the engine shows.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .errors import UnsupportedPath
from .model import (
    Bar,
    Comparator,
    ExpansionKind,
    ExpansionOp,
    FilterCondition,
    FilterStep,
    INCOMING,
    ObjectStep,
    OUTGOING,
    PathStep,
    PropertyStep,
    PseudoStep,
    RootStep,
    SubclassStep,
)
from .terms import OWL_CLASS, RDF_TYPE, RDFS_CLASS, RDFS_SUBCLASSOF

MAX_PATH_DEPTH = 16

PREFIX_HEADER = (
    "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"
    "PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>\n"
    "PREFIX owl: <http://www.w3.org/2002/07/owl#>\n"
    "PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>\n"
)

_PREFIXES = {
    "rdf:": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs:": "http://www.w3.org/2000/01/rdf-schema#",
    "owl:": "http://www.w3.org/2002/07/owl#",
    "xsd:": "http://www.w3.org/2001/XMLSchema#",
}


class PlanShape(enum.Enum):
    CHART_AGGREGATE = "chart_aggregate"
    BAR_MEMBERS = "bar_members"
    TABLE_ROWS = "table_rows"


@dataclass(frozen=True)
class ChartSpec:
    """Structured description of a chart aggregate, used by the query manager
    for the precomputed fast path and for incremental evaluation."""

    op: ExpansionOp
    parent: Bar
    level_zero: bool
    conditions: Tuple[FilterCondition, ...] = ()


@dataclass(frozen=True)
class QueryPlan:
    text: str
    shape: PlanShape
    chart: Optional[ChartSpec] = None

    @property
    def canonical_key(self) -> str:
        return canonicalize(self.text)


def canonicalize(text: str) -> str:
    """Whitespace-collapsed, prefix-expanded form used as a cache key."""
    lines = [
        ln for ln in text.splitlines() if not ln.strip().upper().startswith("PREFIX ")
    ]
    body = " ".join(lines)
    for prefix, expansion in _PREFIXES.items():
        body = re.sub(
            re.escape(prefix) + r"([A-Za-z_][A-Za-z0-9_-]*)",
            lambda m, e=expansion: f"<{e}{m.group(1)}>",
            body,
        )
    return " ".join(body.split())


def _escape_string(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _iri(u: str) -> str:
    return f"<{u}>"


class _VarGen:
    def __init__(self):
        self._n = 0

    def fresh(self, stem: str) -> str:
        v = f"?{stem}{self._n}"
        self._n += 1
        return v


def _condition_pattern(var: str, cond: FilterCondition, gen: _VarGen) -> str:
    prop = _iri(cond.property)
    if cond.comparator is Comparator.EQUALS and cond.value.is_uri:
        return f"FILTER EXISTS {{ {var} {prop} {_iri(cond.value.lexical)} . }}"
    v = gen.fresh("f")
    if cond.comparator is Comparator.EQUALS:
        test = f'STR({v}) = "{_escape_string(cond.value.lexical)}"'
    elif cond.comparator is Comparator.CONTAINS:
        test = f'CONTAINS(STR({v}), "{_escape_string(cond.value.lexical)}")'
    elif cond.comparator is Comparator.LT:
        test = f"{v} < {cond.value.lexical}"
    else:
        test = f"{v} > {cond.value.lexical}"
    return f"FILTER EXISTS {{ {var} {prop} {v} . FILTER({test}) }}"


def path_patterns(path: Sequence[PathStep], final_var: str = "?s") -> List[str]:
    """Graph patterns whose solutions for `final_var` are the bar's members."""
    if len(path) > MAX_PATH_DEPTH:
        raise UnsupportedPath(f"ancestry deeper than {MAX_PATH_DEPTH} steps")
    segments = 1 + sum(1 for s in path if isinstance(s, ObjectStep))
    seg_vars = [f"?x{i}" for i in range(segments - 1)] + [final_var]
    gen = _VarGen()
    patterns: List[str] = []
    seg = 0
    var = seg_vars[0]
    for step in path:
        if isinstance(step, PseudoStep):
            raise UnsupportedPath(f"pseudo-bar {step.label!r} has no query form")
        if isinstance(step, RootStep):
            if step.classes is None:
                t = gen.fresh("t")
                patterns.append(f"{var} {_iri(RDF_TYPE)} {t} .")
                patterns.append(
                    f"FILTER({t} != {_iri(OWL_CLASS)} && {t} != {_iri(RDFS_CLASS)})"
                )
            elif len(step.classes) == 1:
                patterns.append(f"{var} {_iri(RDF_TYPE)} {_iri(step.classes[0])} .")
            else:
                t = gen.fresh("t")
                values = " ".join(_iri(c) for c in step.classes)
                patterns.append(f"VALUES {t} {{ {values} }}")
                patterns.append(f"{var} {_iri(RDF_TYPE)} {t} .")
        elif isinstance(step, SubclassStep):
            patterns.append(f"{var} {_iri(RDF_TYPE)} {_iri(step.class_uri)} .")
        elif isinstance(step, PropertyStep):
            o = gen.fresh("v")
            if step.direction == OUTGOING:
                patterns.append(f"{var} {_iri(step.predicate)} {o} .")
            else:
                patterns.append(f"{o} {_iri(step.predicate)} {var} .")
        elif isinstance(step, ObjectStep):
            prev = var
            seg += 1
            var = seg_vars[seg]
            if step.direction == OUTGOING:
                patterns.append(f"{prev} {_iri(step.predicate)} {var} .")
            else:
                patterns.append(f"{var} {_iri(step.predicate)} {prev} .")
            patterns.append(f"{var} {_iri(RDF_TYPE)} {_iri(step.class_uri)} .")
        elif isinstance(step, FilterStep):
            for cond in step.conditions:
                patterns.append(_condition_pattern(var, cond, gen))
        else:
            raise UnsupportedPath(f"unknown path step {step!r}")
    return patterns


def _member_block(path: Sequence[PathStep], var: str = "?s", indent: str = "  ") -> str:
    patterns = path_patterns(path, var)
    inner = f"\n{indent}  ".join(patterns)
    return f"{indent}{{ SELECT DISTINCT {var} WHERE {{\n{indent}  {inner}\n{indent}}} }}"


def _is_level_zero(bar: Bar) -> bool:
    return len(bar.path) == 1 and isinstance(bar.path[0], RootStep)


def bar_query(b: Bar, ancestry: Optional[Sequence[PathStep]] = None) -> QueryPlan:
    path = tuple(ancestry) if ancestry is not None else b.path
    patterns = path_patterns(path)
    body = "\n  ".join(patterns)
    text = f"{PREFIX_HEADER}SELECT DISTINCT ?s WHERE {{\n  {body}\n}}"
    return QueryPlan(text=text, shape=PlanShape.BAR_MEMBERS)


def member_count_query(b: Bar) -> QueryPlan:
    patterns = path_patterns(b.path)
    body = "\n  ".join(patterns)
    text = f"{PREFIX_HEADER}SELECT (COUNT(DISTINCT ?s) AS ?n) WHERE {{\n  {body}\n}}"
    return QueryPlan(text=text, shape=PlanShape.BAR_MEMBERS)


def chart_query(parent: Bar, expansion: ExpansionKind) -> QueryPlan:
    op = expansion.op
    spec = ChartSpec(
        op=op,
        parent=parent,
        level_zero=_is_level_zero(parent),
        conditions=tuple(expansion.conditions),
    )
    if op is ExpansionOp.SUBCLASS or op is ExpansionOp.FILTER:
        path = parent.path
        if op is ExpansionOp.FILTER:
            path = path + (FilterStep(tuple(expansion.conditions)),)
        block = _member_block(path, indent="    ")
        text = (
            f"{PREFIX_HEADER}"
            f"SELECT ?c (COUNT(DISTINCT ?s) AS ?n) WHERE {{\n"
            f"  ?c {_iri(RDFS_SUBCLASSOF)} {_iri(parent.label)} .\n"
            f"  OPTIONAL {{\n{block}\n"
            f"    ?s {_iri(RDF_TYPE)} ?c .\n"
            f"  }}\n"
            f"}} GROUP BY ?c ORDER BY DESC(?n) ?c"
        )
        return QueryPlan(text, PlanShape.CHART_AGGREGATE, spec)
    if op in (ExpansionOp.PROPERTY_OUT, ExpansionOp.PROPERTY_IN):
        block = _member_block(parent.path, indent="      ")
        edge = "?s ?p ?o ." if op is ExpansionOp.PROPERTY_OUT else "?o ?p ?s ."
        text = (
            f"{PREFIX_HEADER}"
            f"SELECT ?p (COUNT(DISTINCT ?s) AS ?n) (SUM(?k) AS ?occ) WHERE {{\n"
            f"  {{ SELECT ?s ?p (COUNT(*) AS ?k) WHERE {{\n"
            f"{block}\n"
            f"      {edge}\n"
            f"    }} GROUP BY ?s ?p }}\n"
            f"}} GROUP BY ?p ORDER BY DESC(?n) ?p"
        )
        return QueryPlan(text, PlanShape.CHART_AGGREGATE, spec)
    if op in (ExpansionOp.OBJECT_OUT, ExpansionOp.OBJECT_IN):
        block = _member_block(parent.path, var="?x", indent="  ")
        edge = (
            f"?x {_iri(parent.label)} ?o ."
            if op is ExpansionOp.OBJECT_OUT
            else f"?o {_iri(parent.label)} ?x ."
        )
        text = (
            f"{PREFIX_HEADER}"
            f"SELECT ?c (COUNT(DISTINCT ?o) AS ?n) WHERE {{\n"
            f"{block}\n"
            f"  {edge}\n"
            f"  ?o {_iri(RDF_TYPE)} ?c .\n"
            f"}} GROUP BY ?c ORDER BY DESC(?n) ?c"
        )
        return QueryPlan(text, PlanShape.CHART_AGGREGATE, spec)
    raise UnsupportedPath(f"no chart query for expansion {op}")


def table_query(
    b: Bar,
    columns: Sequence[str],
    filters: Sequence[FilterCondition] = (),
    limit: int = 50,
    offset: int = 0,
) -> QueryPlan:
    path = b.path
    if filters:
        path = path + (FilterStep(tuple(filters)),)
    patterns = path_patterns(path)
    inner = "\n    ".join(patterns)
    col_vars = [f"?c{i}" for i in range(len(columns))]
    optionals = "".join(
        f"  OPTIONAL {{ ?s {_iri(col)} {v} . }}\n"
        for col, v in zip(columns, col_vars)
    )
    select_vars = " ".join(["?s"] + col_vars)
    text = (
        f"{PREFIX_HEADER}"
        f"SELECT {select_vars} WHERE {{\n"
        f"  {{ SELECT DISTINCT ?s WHERE {{\n"
        f"    {inner}\n"
        f"  }} ORDER BY ?s LIMIT {limit} OFFSET {offset} }}\n"
        f"{optionals}"
        f"}} ORDER BY ?s"
    )
    return QueryPlan(text, PlanShape.TABLE_ROWS)


def paged_members_query(b: Bar, limit: int, offset: int) -> QueryPlan:
    """One page of a bar's members, ordered by subject for stable chunking."""
    patterns = path_patterns(b.path)
    body = "\n  ".join(patterns)
    text = (
        f"{PREFIX_HEADER}SELECT DISTINCT ?s WHERE {{\n  {body}\n}} "
        f"ORDER BY ?s LIMIT {limit} OFFSET {offset}"
    )
    return QueryPlan(text=text, shape=PlanShape.BAR_MEMBERS)


def paged_pair_query(spec: ChartSpec, subjects: Sequence[str]) -> QueryPlan:
    """(group, member) rows for an explicit member page; used by remote
    incremental evaluation so partial group sets can be merged client-side."""
    values = " ".join(_iri(s) for s in subjects)
    op = spec.op
    if op in (ExpansionOp.PROPERTY_OUT, ExpansionOp.PROPERTY_IN):
        edge = "?s ?p ?o ." if op is ExpansionOp.PROPERTY_OUT else "?o ?p ?s ."
        text = (
            f"{PREFIX_HEADER}"
            f"SELECT ?s ?p (COUNT(*) AS ?k) WHERE {{\n"
            f"  VALUES ?s {{ {values} }}\n"
            f"  {edge}\n"
            f"}} GROUP BY ?s ?p"
        )
        return QueryPlan(text, PlanShape.CHART_AGGREGATE, spec)
    if op in (ExpansionOp.SUBCLASS, ExpansionOp.FILTER):
        text = (
            f"{PREFIX_HEADER}"
            f"SELECT DISTINCT ?c ?s WHERE {{\n"
            f"  VALUES ?s {{ {values} }}\n"
            f"  ?c {_iri(RDFS_SUBCLASSOF)} {_iri(spec.parent.label)} .\n"
            f"  ?s {_iri(RDF_TYPE)} ?c .\n"
            f"}}"
        )
        return QueryPlan(text, PlanShape.CHART_AGGREGATE, spec)
    edge = (
        f"?x {_iri(spec.parent.label)} ?o ."
        if op is ExpansionOp.OBJECT_OUT
        else f"?o {_iri(spec.parent.label)} ?x ."
    )
    text = (
        f"{PREFIX_HEADER}"
        f"SELECT DISTINCT ?c ?o WHERE {{\n"
        f"  VALUES ?x {{ {values} }}\n"
        f"  {edge}\n"
        f"  ?o {_iri(RDF_TYPE)} ?c .\n"
        f"}}"
    )
    return QueryPlan(text, PlanShape.CHART_AGGREGATE, spec)


def subclass_labels_query(parent_label: str) -> QueryPlan:
    text = (
        f"{PREFIX_HEADER}SELECT DISTINCT ?c WHERE {{\n"
        f"  ?c {_iri(RDFS_SUBCLASSOF)} {_iri(parent_label)} .\n}}"
    )
    return QueryPlan(text, PlanShape.BAR_MEMBERS)


def class_instance_counts_query() -> QueryPlan:
    """Declared classes with their direct-instance counts, largest first."""
    text = (
        f"{PREFIX_HEADER}"
        f"SELECT ?c (COUNT(DISTINCT ?s) AS ?n) WHERE {{\n"
        f"  VALUES ?t {{ {_iri(OWL_CLASS)} {_iri(RDFS_CLASS)} }}\n"
        f"  ?c {_iri(RDF_TYPE)} ?t .\n"
        f"  OPTIONAL {{ ?s {_iri(RDF_TYPE)} ?c . }}\n"
        f"}} GROUP BY ?c ORDER BY DESC(?n) ?c"
    )
    return QueryPlan(text, PlanShape.BAR_MEMBERS)


def triple_count_query() -> QueryPlan:
    text = f"{PREFIX_HEADER}SELECT (COUNT(*) AS ?n) WHERE {{\n  ?s ?p ?o .\n}}"
    return QueryPlan(text, PlanShape.BAR_MEMBERS)


def class_count_query() -> QueryPlan:
    text = (
        f"{PREFIX_HEADER}"
        f"SELECT (COUNT(DISTINCT ?c) AS ?n) WHERE {{\n"
        f"  VALUES ?t {{ {_iri(OWL_CLASS)} {_iri(RDFS_CLASS)} }}\n"
        f"  ?c {_iri(RDF_TYPE)} ?t .\n"
        f"}}"
    )
    return QueryPlan(text, PlanShape.BAR_MEMBERS)
