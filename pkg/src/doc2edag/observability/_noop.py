"""Stand-ins returned by ``get_tracer()`` while tracing is off.

Pipeline stages call the tracer unconditionally; these objects accept the
subset of the OTel tracer and span API that ``@track`` and the CLI use and
drop everything.
"""

from __future__ import annotations

import importlib.util
from contextlib import nullcontext
from typing import Any


def _check_otel_available() -> bool:
    """True when ``opentelemetry.sdk`` can be imported."""
    try:
        return importlib.util.find_spec("opentelemetry.sdk.trace") is not None
    except ModuleNotFoundError:
        return False


class _NoOpSpan:
    """Span whose recording methods all discard their arguments."""

    __slots__ = ()

    def is_recording(self) -> bool:
        return False

    def _discard(self, *args: Any, **kwargs: Any) -> None:  # noqa: ARG002
        return None

    end = set_attribute = set_attributes = add_event = _discard
    set_status = record_exception = update_name = _discard

    def __enter__(self) -> _NoOpSpan:
        return self

    def __exit__(self, *exc: Any) -> None:
        return None


_SPAN = _NoOpSpan()


class _NoOpTracer:
    """Tracer handing out the shared no-op span."""

    def start_span(self, name: str, **kwargs: Any) -> _NoOpSpan:  # noqa: ARG002
        return _SPAN

    def start_as_current_span(self, name: str, **kwargs: Any) -> nullcontext[_NoOpSpan]:  # noqa: ARG002
        return nullcontext(_SPAN)
