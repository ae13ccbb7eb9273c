"""Service configuration: key=value file, overridable via ELINDA_* env vars."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

ENV_PREFIX = "ELINDA_"


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8321
    data: List[str] = field(default_factory=list)  # N-Triples file paths
    endpoint: Optional[str] = None
    root_class: Optional[str] = None
    coverage_threshold: float = 0.2
    label_preference: Tuple[str, ...] = ("en", "", "*")
    cors_origin: str = "*"
    session_ttl: float = 3600.0
    heavy_threshold: float = 1.0
    chunk_size: int = 100_000
    max_chunks: int = 10
    query_timeout: float = 30.0
    max_resubmissions: int = 2
    hvs_path: Optional[str] = None
    frontend_dir: Optional[str] = None


_FIELD_PARSERS = {
    "listen_host": str,
    "listen_port": int,
    "data": lambda v: [p.strip() for p in v.split(",") if p.strip()],
    "endpoint": str,
    "root_class": str,
    "coverage_threshold": float,
    "label_preference": lambda v: tuple(p.strip() for p in v.split(",")),
    "cors_origin": str,
    "session_ttl": float,
    "heavy_threshold": float,
    "chunk_size": int,
    "max_chunks": int,
    "query_timeout": float,
    "max_resubmissions": int,
    "hvs_path": str,
    "frontend_dir": str,
}


def load_config(path: Optional[str] = None, environ=None) -> ServiceConfig:
    """File values first, then ELINDA_<KEY> env overrides."""
    config = ServiceConfig()
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                _apply(config, key.strip(), value.strip(), f"{path}:{lineno}")
    environ = environ if environ is not None else os.environ
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            field_name = key[len(ENV_PREFIX) :].lower()
            if field_name in _FIELD_PARSERS:
                _apply(config, field_name, value, key)
    return config


def _apply(config: ServiceConfig, key: str, value: str, where: str) -> None:
    parser = _FIELD_PARSERS.get(key)
    if parser is None:
        raise ValueError(f"{where}: unknown config key {key!r}")
    setattr(config, key, parser(value))
