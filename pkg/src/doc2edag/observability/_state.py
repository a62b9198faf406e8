"""Process-wide tracer provider, installed at most once per ``shutdown()``."""

from __future__ import annotations

import logging
import threading
from typing import Any

from doc2edag.observability._config import ObservabilityConfig, SpanExport
from doc2edag.observability._noop import _NoOpTracer

logger = logging.getLogger("doc2edag.observability")


def _build_provider(config: ObservabilityConfig) -> tuple[Any, Any]:
    """SDK provider exporting through one simple processor, plus the memory exporter if any."""
    from opentelemetry.sdk.resources import Resource
    from opentelemetry.sdk.trace import TracerProvider
    from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor
    from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter

    provider = TracerProvider(resource=Resource.create({"service.name": config.service_name}))
    memory = InMemorySpanExporter() if config.export == SpanExport.MEMORY else None
    provider.add_span_processor(SimpleSpanProcessor(memory or ConsoleSpanExporter()))
    return provider, memory


class _TracingState:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._provider: Any = None
        self._memory: Any = None
        self.config: ObservabilityConfig | None = None

    @property
    def is_configured(self) -> bool:
        return self._provider is not None

    @property
    def memory_exporter(self) -> Any:
        return self._memory

    def configure(self, config: ObservabilityConfig) -> None:
        with self._lock:
            if self._provider is not None:
                logger.warning("tracing already configured; ignoring %s export", config.export.value)
                return
            self.config = config
            if not config.enabled or config.export == SpanExport.DISABLED:
                logger.info("tracing disabled")
                return
            self._provider, self._memory = _build_provider(config)
            logger.info("tracing to %s", config.export.value)

    def flush(self, timeout_millis: int = 30000) -> bool:
        provider = self._provider
        if provider is None:
            return True
        try:
            return bool(provider.force_flush(timeout_millis))
        except Exception:
            logger.debug("span flush failed", exc_info=True)
            return False

    def shutdown(self) -> None:
        with self._lock:
            provider, self._provider, self._memory, self.config = self._provider, None, None, None
        if provider is None:
            return
        try:
            provider.shutdown()
        except Exception:
            logger.debug("provider shutdown failed", exc_info=True)

    def get_tracer(self, name: str = "doc2edag") -> Any:
        provider = self._provider
        return provider.get_tracer(name) if provider is not None else _NoOpTracer()


_state = _TracingState()
