"""SPARQL protocol client: execute generated plans against a remote endpoint."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Dict, Optional

import requests

from .errors import EndpointTimeout, HttpError, MalformedResponse, TooManyRetries
from .results import ORIGIN_REMOTE, QueryResult
from .sparqlgen import QueryPlan, class_count_query, triple_count_query
from .terms import Term, literal, uri

RESULTS_JSON = "application/sparql-results+json"


@dataclass
class EndpointConfig:
    url: str
    timeout: float = 30.0
    max_retries: int = 2
    default_graph: Optional[str] = None
    max_concurrent: int = 4

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def _decode_binding(cell: Dict[str, str]) -> Term:
    try:
        kind = cell["type"]
        value = cell["value"]
    except (KeyError, TypeError):
        raise MalformedResponse(f"binding cell missing type/value: {cell!r}")
    if kind == "uri":
        return uri(value)
    if kind in ("literal", "typed-literal"):
        return literal(value, cell.get("xml:lang"), cell.get("datatype"))
    if kind == "bnode":
        return uri(f"_:{value}")
    raise MalformedResponse(f"unknown binding type {kind!r}")


def decode_results_json(doc: dict) -> QueryResult:
    try:
        columns = list(doc["head"]["vars"])
        bindings = doc["results"]["bindings"]
    except (KeyError, TypeError):
        raise MalformedResponse("document is not in SPARQL results-JSON shape")
    rows = []
    for binding in bindings:
        rows.append(tuple(
            _decode_binding(binding[c]) if c in binding else None for c in columns
        ))
    return QueryResult(columns=columns, rows=rows, origin=ORIGIN_REMOTE)


class EndpointClient:
    """Thread-safe client; concurrent in-flight requests are capped to stay polite."""

    def __init__(self, config: EndpointConfig):
        self.config = config
        self._session = requests.Session()
        self._slots = threading.BoundedSemaphore(config.max_concurrent)

    def execute_remote(self, plan: QueryPlan) -> QueryResult:
        cfg = self.config
        data = {"query": plan.text}
        if cfg.default_graph:
            data["default-graph-uri"] = cfg.default_graph
        last_error: Optional[Exception] = None
        for _ in range(cfg.max_retries + 1):
            try:
                with self._slots:
                    response = self._session.post(
                        cfg.url,
                        data=data,
                        headers={"Accept": RESULTS_JSON},
                        timeout=cfg.timeout,
                    )
            except requests.exceptions.Timeout:
                last_error = EndpointTimeout(f"no response within {cfg.timeout}s")
                continue
            except requests.exceptions.RequestException as exc:
                raise HttpError(0, f"endpoint unreachable: {exc}")
            if 500 <= response.status_code < 600:
                last_error = HttpError(response.status_code)
                continue
            if response.status_code != 200:
                raise HttpError(response.status_code)
            try:
                doc = response.json()
            except ValueError:
                raise MalformedResponse("response body is not JSON")
            return decode_results_json(doc)
        if isinstance(last_error, EndpointTimeout):
            raise last_error
        raise TooManyRetries(str(last_error))

    def probe(self) -> Dict[str, int]:
        def scalar(plan: QueryPlan) -> int:
            result = self.execute_remote(plan)
            if not result.rows or result.rows[0][0] is None:
                raise MalformedResponse("count query returned no rows")
            try:
                return int(float(result.rows[0][0].lexical))
            except ValueError:
                raise MalformedResponse(
                    f"count is not numeric: {result.rows[0][0].lexical!r}"
                )

        return {
            "triple_count": scalar(triple_count_query()),
            "class_count": scalar(class_count_query()),
        }
