"""doc2edag.observability: optional OpenTelemetry tracing of pipeline stages.

Public API:
    configure()      install a tracer provider (console or in-memory export)
    flush()          force-flush pending spans
    shutdown()       release the provider
    is_configured()  check if tracing is active
    get_tracer()     OTel Tracer (or no-op)
    finished_spans() spans held by the in-memory exporter
    track            decorator wrapping a function in a span
"""

from __future__ import annotations

import logging
from typing import Any

from doc2edag.observability._config import ObservabilityConfig, SpanExport
from doc2edag.observability._noop import _check_otel_available
from doc2edag.observability._state import _state
from doc2edag.observability._track import track

logger = logging.getLogger("doc2edag.observability")


def configure(
    *,
    config: ObservabilityConfig | None = None,
    export: SpanExport | str | None = None,
    service_name: str | None = None,
    enabled: bool = True,
) -> None:
    """Configure tracing. Safe to call even if the OTel SDK is missing.

    Precedence (highest to lowest):
        1. Explicit kwargs (``export``, ``service_name``)
        2. ``config``, else the DOC2EDAG_TRACE / DOC2EDAG_SERVICE_NAME environment
    """
    try:
        if not _check_otel_available():
            logger.warning("OpenTelemetry SDK not found; tracing stays disabled")
            return

        if config is None:
            config = ObservabilityConfig._resolve_from_env()
        if export is not None:
            config.export = SpanExport(export)
        if service_name is not None:
            config.service_name = service_name
        config.enabled = enabled

        _state.configure(config)
    except Exception:
        logger.warning("Observability configuration failed", exc_info=True)


def flush(timeout_millis: int = 30000) -> bool:
    """Force-flush pending spans."""
    return _state.flush(timeout_millis)


def shutdown() -> None:
    """Flush and release the tracer provider."""
    _state.shutdown()


def is_configured() -> bool:
    return _state.is_configured


def get_tracer(name: str = "doc2edag") -> Any:
    """Return an OTel Tracer, or a no-op tracer when tracing is off."""
    return _state.get_tracer(name)


def finished_spans() -> list[Any]:
    """Spans captured so far by the in-memory exporter (empty otherwise)."""
    exporter = _state.memory_exporter
    return list(exporter.get_finished_spans()) if exporter is not None else []


__all__ = [
    "ObservabilityConfig",
    "SpanExport",
    "configure",
    "finished_spans",
    "flush",
    "get_tracer",
    "is_configured",
    "shutdown",
    "track",
]
