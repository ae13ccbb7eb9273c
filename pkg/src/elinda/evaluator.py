"""Embedded evaluator for the generated SPARQL SELECT fragment.

Supported: conjunctive triple patterns, OPTIONAL, FILTER (comparisons, STR,
CONTAINS, IN, &&, ||), FILTER EXISTS, VALUES, nested SELECT subqueries,
DISTINCT, GROUP BY with COUNT/SUM, ORDER BY, LIMIT/OFFSET. Anything outside
this fragment (UNION, property paths, CONSTRUCT, ...) raises UnsupportedQuery.
"""

from __future__ import annotations

import functools
import re
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import UnsupportedQuery
from .graph import Graph
from .results import ORIGIN_EMBEDDED, QueryResult
from .terms import Term, integer_literal, literal, uri

# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>[0-9]+(?:\.[0-9]+)?)
  | (?P<pname>[A-Za-z_][A-Za-z0-9_-]*:[A-Za-z_][A-Za-z0-9_.-]*)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>&&|\|\||!=|<=|>=|[{}().,;*=<>@^:])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    value: str


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise UnsupportedQuery(f"cannot tokenize near {text[pos:pos+30]!r}")
        pos = m.end()
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        tokens.append(_Token(kind, m.group()))
    return tokens


# ---------------------------------------------------------------------------
# AST

Var = str  # "?name"


@dataclass(frozen=True)
class TriplePattern:
    s: Union[Var, Term]
    p: Union[Var, Term]
    o: Union[Var, Term]


@dataclass
class OptionalPattern:
    inner: "GroupPattern"


@dataclass
class FilterPattern:
    expr: "Expr"


@dataclass
class ExistsPattern:
    inner: "GroupPattern"


@dataclass
class ValuesPattern:
    var: Var
    terms: List[Term]


@dataclass
class SubSelect:
    query: "Query"


@dataclass
class GroupPattern:
    elements: List[object] = field(default_factory=list)


@dataclass(frozen=True)
class Aggregate:
    func: str  # COUNT | SUM
    arg: Optional[Var]  # None means '*'
    distinct: bool = False


@dataclass(frozen=True)
class SelectItem:
    var: Var
    agg: Optional[Aggregate] = None  # plain variable when None


@dataclass
class OrderKey:
    var: Var
    descending: bool = False


@dataclass
class Query:
    distinct: bool
    items: List[SelectItem]
    where: GroupPattern
    group_by: List[Var]
    order_by: List[OrderKey]
    limit: Optional[int]
    offset: int


# expressions -----------------------------------------------------------------

@dataclass(frozen=True)
class EVar:
    name: Var


@dataclass(frozen=True)
class EConst:
    value: object  # Term | str | float


@dataclass(frozen=True)
class ECall:
    func: str  # STR | CONTAINS
    args: Tuple["Expr", ...]


@dataclass(frozen=True)
class EBinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class EIn:
    operand: "Expr"
    options: Tuple[object, ...]
    negated: bool


@dataclass(frozen=True)
class EExists:
    inner: GroupPattern


Expr = Union[EVar, EConst, ECall, EBinOp, EIn, EExists]


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, tokens: List[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.prefixes: Dict[str, str] = {}

    def error(self, message: str) -> UnsupportedQuery:
        near = " ".join(t.value for t in self.tokens[self.pos : self.pos + 5])
        return UnsupportedQuery(f"{message} near {near!r}")

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def peek_word(self) -> str:
        t = self.peek()
        return t.value.upper() if t and t.kind == "word" else ""

    def next(self) -> _Token:
        if self.pos >= len(self.tokens):
            raise self.error("unexpected end of query")
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def accept_word(self, *words: str) -> Optional[str]:
        t = self.peek()
        if t and t.kind == "word" and t.value.upper() in words:
            self.pos += 1
            return t.value.upper()
        return None

    def expect_word(self, word: str) -> None:
        if not self.accept_word(word):
            raise self.error(f"expected {word}")

    def accept_punct(self, value: str) -> bool:
        t = self.peek()
        if t and t.kind == "punct" and t.value == value:
            self.pos += 1
            return True
        return False

    def expect_punct(self, value: str) -> None:
        if not self.accept_punct(value):
            raise self.error(f"expected {value!r}")

    # terms -----------------------------------------------------------------

    def _resolve_pname(self, pname: str) -> Term:
        prefix, local = pname.split(":", 1)
        base = self.prefixes.get(prefix)
        if base is None:
            raise self.error(f"unknown prefix {prefix!r}")
        return uri(base + local)

    def parse_term(self) -> Union[Var, Term]:
        t = self.next()
        if t.kind == "var":
            return t.value
        if t.kind == "iri":
            return uri(t.value[1:-1])
        if t.kind == "pname":
            return self._resolve_pname(t.value)
        if t.kind == "word" and t.value == "a":
            return uri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
        if t.kind == "string":
            lex = _decode_string(t.value)
            if self.accept_punct("@"):
                lang = self.next().value
                return literal(lex, language=lang)
            if self.accept_punct("^"):
                self.expect_punct("^")
                dt = self.next()
                if dt.kind == "iri":
                    return literal(lex, datatype=dt.value[1:-1])
                if dt.kind == "pname":
                    return literal(lex, datatype=self._resolve_pname(dt.value).lexical)
                raise self.error("expected datatype IRI")
            return literal(lex)
        if t.kind == "number":
            return literal(t.value)
        raise self.error(f"unexpected token {t.value!r}")

    # query -----------------------------------------------------------------

    def parse_query(self) -> Query:
        while self.accept_word("PREFIX"):
            name = self.next()
            if name.kind == "pname":
                prefix = name.value.split(":", 1)[0]
            elif name.kind == "word":
                prefix = name.value
                self.expect_punct(":")
            else:
                raise self.error("bad PREFIX declaration")
            iri_tok = self.next()
            if iri_tok.kind != "iri":
                raise self.error("PREFIX requires an IRI")
            self.prefixes[prefix] = iri_tok.value[1:-1]
        query = self.parse_select()
        if self.pos != len(self.tokens):
            raise self.error("trailing content after query")
        return query

    def parse_select(self) -> Query:
        self.expect_word("SELECT")
        distinct = bool(self.accept_word("DISTINCT"))
        if self.accept_word("REDUCED"):
            raise self.error("REDUCED is not supported")
        items: List[SelectItem] = []
        while True:
            t = self.peek()
            if t is None:
                raise self.error("unexpected end in SELECT clause")
            if t.kind == "var":
                items.append(SelectItem(var=self.next().value))
                continue
            if t.kind == "punct" and t.value == "(":
                self.next()
                agg = self.parse_aggregate()
                self.expect_word("AS")
                var_tok = self.next()
                if var_tok.kind != "var":
                    raise self.error("expected variable after AS")
                self.expect_punct(")")
                items.append(SelectItem(var=var_tok.value, agg=agg))
                continue
            if t.kind == "punct" and t.value == "*":
                raise self.error("SELECT * is not supported")
            break
        if not items:
            raise self.error("empty SELECT clause")
        self.expect_word("WHERE")
        where = self.parse_group()
        group_by: List[Var] = []
        order_by: List[OrderKey] = []
        limit: Optional[int] = None
        offset = 0
        while True:
            if self.accept_word("GROUP"):
                self.expect_word("BY")
                while self.peek() and self.peek().kind == "var":
                    group_by.append(self.next().value)
                if not group_by:
                    raise self.error("GROUP BY needs at least one variable")
                continue
            if self.accept_word("ORDER"):
                self.expect_word("BY")
                while True:
                    t = self.peek()
                    if t is None:
                        break
                    if t.kind == "var":
                        order_by.append(OrderKey(self.next().value))
                    elif t.kind == "word" and t.value.upper() in ("ASC", "DESC"):
                        direction = self.next().value.upper()
                        self.expect_punct("(")
                        v = self.next()
                        if v.kind != "var":
                            raise self.error("ORDER BY DESC(...) needs a variable")
                        self.expect_punct(")")
                        order_by.append(OrderKey(v.value, direction == "DESC"))
                    else:
                        break
                if not order_by:
                    raise self.error("empty ORDER BY")
                continue
            if self.accept_word("LIMIT"):
                limit = int(self.next().value)
                continue
            if self.accept_word("OFFSET"):
                offset = int(self.next().value)
                continue
            break
        return Query(distinct, items, where, group_by, order_by, limit, offset)

    def parse_aggregate(self) -> Aggregate:
        func = self.accept_word("COUNT", "SUM", "AVG", "MIN", "MAX")
        if func is None:
            raise self.error("expected aggregate function")
        if func not in ("COUNT", "SUM"):
            raise self.error(f"aggregate {func} is not supported")
        self.expect_punct("(")
        distinct = bool(self.accept_word("DISTINCT"))
        t = self.next()
        if t.kind == "punct" and t.value == "*":
            arg: Optional[Var] = None
        elif t.kind == "var":
            arg = t.value
        else:
            raise self.error("aggregate argument must be a variable or *")
        self.expect_punct(")")
        return Aggregate(func, arg, distinct)

    def parse_group(self) -> GroupPattern:
        self.expect_punct("{")
        group = GroupPattern()
        while True:
            t = self.peek()
            if t is None:
                raise self.error("unterminated group pattern")
            if t.kind == "punct" and t.value == "}":
                self.next()
                break
            if t.kind == "word":
                word = t.value.upper()
                if word == "OPTIONAL":
                    self.next()
                    group.elements.append(OptionalPattern(self.parse_group()))
                    continue
                if word == "FILTER":
                    self.next()
                    if self.accept_word("EXISTS"):
                        group.elements.append(ExistsPattern(self.parse_group()))
                    else:
                        self.expect_punct("(")
                        expr = self.parse_expr()
                        self.expect_punct(")")
                        group.elements.append(FilterPattern(expr))
                    continue
                if word == "VALUES":
                    self.next()
                    v = self.next()
                    if v.kind != "var":
                        raise self.error("VALUES needs a single variable")
                    self.expect_punct("{")
                    terms: List[Term] = []
                    while not self.accept_punct("}"):
                        term = self.parse_term()
                        if isinstance(term, str):
                            raise self.error("VALUES data must be constant terms")
                        terms.append(term)
                    group.elements.append(ValuesPattern(v.value, terms))
                    continue
                if word in ("UNION", "MINUS", "GRAPH", "SERVICE", "BIND"):
                    raise self.error(f"{word} is outside the supported fragment")
            if t.kind == "punct" and t.value == "{":
                # nested group: subselect or plain group
                save = self.pos
                self.next()
                if self.peek_word() == "SELECT":
                    sub = self.parse_select()
                    self.expect_punct("}")
                    group.elements.append(SubSelect(sub))
                else:
                    self.pos = save
                    inner = self.parse_group()
                    if self.peek_word() == "UNION":
                        raise self.error("UNION is outside the supported fragment")
                    group.elements.extend(inner.elements)
                continue
            # triple pattern
            s = self.parse_term()
            p = self.parse_term()
            o = self.parse_term()
            group.elements.append(TriplePattern(s, p, o))
            self.accept_punct(".")
        return group

    # expressions -----------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.accept_punct("||"):
            left = EBinOp("||", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_relational()
        while self.accept_punct("&&"):
            left = EBinOp("&&", left, self.parse_relational())
        return left

    def parse_relational(self) -> Expr:
        left = self.parse_primary()
        t = self.peek()
        if t and t.kind == "punct" and t.value in ("=", "!=", "<", ">", "<=", ">="):
            op = self.next().value
            return EBinOp(op, left, self.parse_primary())
        if t and t.kind == "word" and t.value.upper() in ("IN", "NOT"):
            negated = self.next().value.upper() == "NOT"
            if negated:
                self.expect_word("IN")
            self.expect_punct("(")
            options: List[object] = []
            while not self.accept_punct(")"):
                term = self.parse_term()
                options.append(term)
                self.accept_punct(",")
            return EIn(left, tuple(options), negated)
        return left

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of expression")
        if t.kind == "var":
            return EVar(self.next().value)
        if t.kind == "word" and t.value.upper() in ("STR", "CONTAINS"):
            func = self.next().value.upper()
            self.expect_punct("(")
            args = [self.parse_expr()]
            while self.accept_punct(","):
                args.append(self.parse_expr())
            self.expect_punct(")")
            return ECall(func, tuple(args))
        if t.kind == "punct" and t.value == "(":
            self.next()
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        if t.kind == "number":
            return EConst(float(self.next().value))
        if t.kind in ("string", "iri", "pname"):
            term = self.parse_term()
            if isinstance(term, Term) and term.is_literal and term.datatype is None \
                    and term.language is None:
                return EConst(term.lexical)
            return EConst(term)
        raise self.error(f"unsupported expression token {t.value!r}")


def _decode_string(raw: str) -> str:
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            mapping = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}
            if nxt in mapping:
                out.append(mapping[nxt])
                i += 2
                continue
            if nxt == "u":
                out.append(chr(int(body[i + 2 : i + 6], 16)))
                i += 6
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def parse_query(text: str) -> Query:
    return _Parser(_tokenize(text)).parse_query()


# ---------------------------------------------------------------------------
# Evaluation

Binding = Dict[Var, Term]


class _TypeError(Exception):
    pass


def _match_pattern(g: Graph, pattern: TriplePattern, binding: Binding):
    def resolve(x):
        if isinstance(x, str):
            return binding.get(x)
        return x

    s, p, o = resolve(pattern.s), resolve(pattern.p), resolve(pattern.o)
    for ts, tp, to in g.match(s, p, o):
        new = dict(binding)
        ok = True
        for slot, value in ((pattern.s, ts), (pattern.p, tp), (pattern.o, to)):
            if isinstance(slot, str):
                bound = new.get(slot)
                if bound is None:
                    new[slot] = value
                elif bound != value:
                    ok = False
                    break
        if ok:
            yield new


def _eval_group(g: Graph, group: GroupPattern, bindings: List[Binding]) -> List[Binding]:
    current = bindings
    for element in group.elements:
        if isinstance(element, TriplePattern):
            current = [
                nb for b in current for nb in _match_pattern(g, element, b)
            ]
        elif isinstance(element, ValuesPattern):
            nxt = []
            for b in current:
                bound = b.get(element.var)
                if bound is not None:
                    if bound in element.terms:
                        nxt.append(b)
                else:
                    for term in element.terms:
                        nb = dict(b)
                        nb[element.var] = term
                        nxt.append(nb)
            current = nxt
        elif isinstance(element, OptionalPattern):
            nxt = []
            for b in current:
                extended = _eval_group(g, element.inner, [b])
                nxt.extend(extended if extended else [b])
            current = nxt
        elif isinstance(element, FilterPattern):
            current = [b for b in current if _expr_bool(g, element.expr, b)]
        elif isinstance(element, ExistsPattern):
            current = [b for b in current if _eval_group(g, element.inner, [b])]
        elif isinstance(element, SubSelect):
            rows = _eval_query(g, element.query)
            sub_vars = ["?" + c for c in rows.columns]
            sub_bindings = [
                {v: t for v, t in zip(sub_vars, row) if t is not None}
                for row in rows.rows
            ]
            nxt = []
            for b in current:
                for sb in sub_bindings:
                    shared = set(b) & set(sb)
                    if all(b[v] == sb[v] for v in shared):
                        merged = dict(b)
                        merged.update(sb)
                        nxt.append(merged)
            current = nxt
        else:
            raise UnsupportedQuery(f"unknown pattern element {element!r}")
        if not current:
            return []
    return current


def _expr_value(g: Graph, expr: Expr, binding: Binding):
    if isinstance(expr, EVar):
        value = binding.get(expr.name)
        if value is None:
            raise _TypeError(f"unbound variable {expr.name}")
        return value
    if isinstance(expr, EConst):
        return expr.value
    if isinstance(expr, ECall):
        if expr.func == "STR":
            v = _expr_value(g, expr.args[0], binding)
            if isinstance(v, Term):
                return v.lexical
            return str(v)
        if expr.func == "CONTAINS":
            hay = _expr_value(g, expr.args[0], binding)
            needle = _expr_value(g, expr.args[1], binding)
            if not isinstance(hay, str) or not isinstance(needle, str):
                raise _TypeError("CONTAINS needs strings")
            return needle in hay
        raise UnsupportedQuery(f"function {expr.func} is not supported")
    if isinstance(expr, EBinOp):
        if expr.op in ("&&", "||"):
            left = _expr_bool(g, expr.left, binding)
            right = _expr_bool(g, expr.right, binding)
            return (left and right) if expr.op == "&&" else (left or right)
        left = _expr_value(g, expr.left, binding)
        right = _expr_value(g, expr.right, binding)
        return _compare(expr.op, left, right)
    if isinstance(expr, EIn):
        value = _expr_value(g, expr.operand, binding)
        hit = any(_loose_equal(value, opt) for opt in expr.options)
        return hit != expr.negated
    if isinstance(expr, EExists):
        return bool(_eval_group(g, expr.inner, [binding]))
    raise UnsupportedQuery(f"unknown expression {expr!r}")


def _as_number(value) -> float:
    if isinstance(value, float):
        return value
    if isinstance(value, Term):
        n = value.numeric_value()
        if n is not None:
            return n
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    raise _TypeError(f"not numeric: {value!r}")


def _loose_equal(a, b) -> bool:
    try:
        return _compare("=", a, b)
    except _TypeError:
        return False


def _compare(op: str, left, right) -> bool:
    if op in ("<", ">", "<=", ">="):
        ln, rn = _as_number(left), _as_number(right)
        return {"<": ln < rn, ">": ln > rn, "<=": ln <= rn, ">=": ln >= rn}[op]
    # equality
    if isinstance(left, float) or isinstance(right, float):
        try:
            equal = _as_number(left) == _as_number(right)
        except _TypeError:
            equal = False
    elif isinstance(left, str) and isinstance(right, str):
        equal = left == right
    elif isinstance(left, Term) and isinstance(right, Term):
        equal = left == right
    elif isinstance(left, str) and isinstance(right, Term):
        equal = left == right.lexical
    elif isinstance(left, Term) and isinstance(right, str):
        equal = left.lexical == right
    else:
        raise _TypeError(f"incomparable: {left!r} vs {right!r}")
    return equal if op == "=" else not equal


def _expr_bool(g: Graph, expr: Expr, binding: Binding) -> bool:
    try:
        value = _expr_value(g, expr, binding)
    except _TypeError:
        return False
    if isinstance(value, bool):
        return value
    raise UnsupportedQuery(f"filter expression is not boolean: {expr!r}")


def _aggregate(agg: Aggregate, rows: List[Binding]) -> Term:
    if agg.func == "COUNT":
        if agg.arg is None:
            return integer_literal(len(rows))
        values = [b[agg.arg] for b in rows if agg.arg in b]
        if agg.distinct:
            return integer_literal(len(set(values)))
        return integer_literal(len(values))
    # SUM
    total = 0.0
    for b in rows:
        if agg.arg in b:
            n = b[agg.arg].numeric_value() if isinstance(b[agg.arg], Term) else None
            if n is not None:
                total += n
    if total == int(total):
        return integer_literal(int(total))
    return Term("literal", repr(total), datatype="http://www.w3.org/2001/XMLSchema#double")


def _order_rows(rows: List[Tuple], columns: List[str], order_by: List[OrderKey]) -> List[Tuple]:
    col_index = {c: i for i, c in enumerate(columns)}

    def key_for(row, key: OrderKey):
        idx = col_index.get(key.var)
        value = row[idx] if idx is not None else None
        if value is None:
            return (0, 0, "")
        sk = value.sort_key()
        return (1,) + sk

    def compare(a, b):
        for key in order_by:
            ka, kb = key_for(a, key), key_for(b, key)
            if ka == kb:
                continue
            result = -1 if ka < kb else 1
            return -result if key.descending else result
        return 0

    return sorted(rows, key=functools.cmp_to_key(compare))


def _eval_query(g: Graph, query: Query) -> QueryResult:
    bindings = _eval_group(g, query.where, [{}])
    columns = [item.var.lstrip("?") for item in query.items]
    has_agg = any(item.agg for item in query.items)
    if has_agg or query.group_by:
        groups: Dict[Tuple, List[Binding]] = {}
        for b in bindings:
            key = tuple(b.get(v) for v in query.group_by)
            groups.setdefault(key, []).append(b)
        if not query.group_by and not groups:
            groups[()] = []
        rows = []
        for key, members in groups.items():
            key_by_var = dict(zip(query.group_by, key))
            row = []
            for item in query.items:
                if item.agg is not None:
                    row.append(_aggregate(item.agg, members))
                else:
                    if item.var not in query.group_by:
                        raise UnsupportedQuery(
                            f"projected variable {item.var} is not grouped"
                        )
                    row.append(key_by_var.get(item.var))
            rows.append(tuple(row))
    else:
        rows = [tuple(b.get(item.var) for item in query.items) for b in bindings]
        if query.distinct:
            seen = set()
            unique = []
            for row in rows:
                if row not in seen:
                    seen.add(row)
                    unique.append(row)
            rows = unique
    if query.order_by:
        var_columns = [item.var for item in query.items]
        rows = _order_rows(rows, var_columns, query.order_by)
    if query.offset:
        rows = rows[query.offset :]
    if query.limit is not None:
        rows = rows[: query.limit]
    return QueryResult(columns=columns, rows=rows, origin=ORIGIN_EMBEDDED)


def evaluate_embedded(plan, g: Graph) -> QueryResult:
    """Execute a generated plan (or raw query text) against the graph."""
    text = plan if isinstance(plan, str) else plan.text
    started = time.monotonic()
    query = parse_query(text)
    result = _eval_query(g, query)
    result.elapsed = time.monotonic() - started
    return result
