"""A local SPARQL endpoint backed by the embedded evaluator.

Used by tests and demos to exercise remote compatibility mode without a live
triplestore. Speaks the standard protocol: query via GET/POST `query=`,
responses in application/sparql-results+json.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Optional
from urllib.parse import parse_qs, urlparse

from .errors import ElindaError
from .evaluator import evaluate_embedded
from .graph import Graph
from .results import QueryResult
from .terms import Term


def term_to_json(t: Term) -> dict:
    if t.is_uri:
        return {"type": "uri", "value": t.lexical}
    cell = {"type": "literal", "value": t.lexical}
    if t.language:
        cell["xml:lang"] = t.language
    if t.datatype:
        cell["datatype"] = t.datatype
    return cell


def result_to_json(result: QueryResult) -> dict:
    bindings = []
    for row in result.rows:
        bindings.append(
            {c: term_to_json(t) for c, t in zip(result.columns, row) if t is not None}
        )
    return {"head": {"vars": result.columns}, "results": {"bindings": bindings}}


class MockSparqlEndpoint:
    """HTTP server answering SPARQL queries from an in-memory graph.

    `before_query` lets tests inject failures or delays per request.
    """

    def __init__(
        self,
        graph: Graph,
        before_query: Optional[Callable[[str], Optional[int]]] = None,
    ):
        self.graph = graph
        self.before_query = before_query
        self.request_count = 0
        endpoint = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _handle(self, query: Optional[str]):
                endpoint.request_count += 1
                if query is None:
                    self.send_error(400, "missing query parameter")
                    return
                if endpoint.before_query is not None:
                    forced_status = endpoint.before_query(query)
                    if forced_status:
                        self.send_error(forced_status)
                        return
                try:
                    result = evaluate_embedded(query, endpoint.graph)
                except ElindaError as exc:
                    self.send_error(400, str(exc))
                    return
                body = json.dumps(result_to_json(result)).encode("utf-8")
                try:
                    self.send_response(200)
                    self.send_header(
                        "Content-Type", "application/sparql-results+json"
                    )
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (e.g. timeout tests)

            def do_GET(self):
                params = parse_qs(urlparse(self.path).query)
                self._handle(params.get("query", [None])[0])

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                params = parse_qs(self.rfile.read(length).decode("utf-8"))
                self._handle(params.get("query", [None])[0])

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/sparql"

    def start(self) -> "MockSparqlEndpoint":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockSparqlEndpoint":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
