"""Tabular query results shared by the evaluator, endpoint client and manager."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .terms import Term

ORIGIN_EMBEDDED = "embedded"
ORIGIN_REMOTE = "remote"
ORIGIN_CACHE = "cache"
ORIGIN_FAST_PATH = "fast_path"

Row = Tuple[Optional[Term], ...]


@dataclass
class QueryResult:
    columns: List[str]
    rows: List[Row]
    origin: str = ORIGIN_EMBEDDED
    elapsed: float = 0.0
    complete: bool = True
    fraction: float = 1.0

    def with_origin(self, origin: str) -> "QueryResult":
        return QueryResult(
            columns=list(self.columns),
            rows=list(self.rows),
            origin=origin,
            elapsed=self.elapsed,
            complete=self.complete,
            fraction=self.fraction,
        )

    def same_rows(self, other: "QueryResult") -> bool:
        return self.columns == other.columns and sorted(
            map(repr, self.rows)
        ) == sorted(map(repr, other.rows))
