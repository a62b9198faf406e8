"""``@track``: run a pipeline stage inside an OTel span.

Arguments and return values become ``doc2edag.track.*`` span attributes.
Arrays are summarized by shape and dtype instead of printed. While tracing
is off the wrapper only checks one flag.

    @track(name="train.epoch", ignore_arguments=["model", "train_set"])
    def run_epoch(model, train_set, config, epoch, ...): ...
"""

from __future__ import annotations

import functools
import inspect
import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from typing import Any, TypeVar, overload

import numpy as np
from opentelemetry.trace import StatusCode

from doc2edag.observability._state import _state

logger = logging.getLogger("doc2edag.observability")

F = TypeVar("F", bound=Callable[..., Any])

_MAX_ATTR_LENGTH = 1000
_PREFIX = "doc2edag.track"


def _safe_repr(value: Any) -> str:
    """``repr`` clipped to the attribute limit; arrays as shape and dtype."""
    if isinstance(value, np.ndarray):
        return f"ndarray(shape={value.shape}, dtype={value.dtype})"
    try:
        text = repr(value)
    except Exception:
        return f"<unrepresentable {type(value).__name__}>"
    if len(text) <= _MAX_ATTR_LENGTH:
        return text
    return text[: _MAX_ATTR_LENGTH - 3] + "..."


def _is_noop() -> bool:
    return not _state.is_configured


def _capture_inputs(
    fn: Callable[..., Any],
    args: tuple[Any, ...],
    kwargs: dict[str, Any],
    ignore: Iterable[str] | None = None,
) -> dict[str, str]:
    """Bound arguments (minus ``self``/``cls`` and ``ignore``) as attributes."""
    try:
        bound = inspect.signature(fn).bind(*args, **kwargs)
    except (TypeError, ValueError):
        logger.debug("cannot bind arguments of %s", getattr(fn, "__qualname__", fn))
        return {}
    bound.apply_defaults()
    skip = {"self", "cls", *(ignore or ())}
    return {
        f"{_PREFIX}.input.{name}": _safe_repr(value)
        for name, value in bound.arguments.items()
        if name not in skip
    }


def _capture_output(result: Any) -> dict[str, str]:
    if isinstance(result, dict):
        return {f"{_PREFIX}.output.{key}": _safe_repr(value) for key, value in result.items()}
    return {f"{_PREFIX}.output": _safe_repr(result)}


@dataclass(frozen=True)
class _SpanOptions:
    name: str
    capture_input: bool = True
    capture_output: bool = True
    ignore_arguments: tuple[str, ...] = ()
    attributes: dict[str, Any] = field(default_factory=dict)


def _traced(fn: Callable[..., Any], options: _SpanOptions) -> Callable[..., Any]:
    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        if _is_noop():
            return fn(*args, **kwargs)

        from doc2edag.observability import get_tracer

        attributes = dict(options.attributes)
        if options.capture_input:
            attributes.update(_capture_inputs(fn, args, kwargs, options.ignore_arguments))
        with get_tracer().start_as_current_span(
            options.name, attributes=attributes, record_exception=False, set_status_on_exception=False
        ) as span:
            try:
                result = fn(*args, **kwargs)
            except Exception as exc:
                span.record_exception(exc)
                span.set_status(StatusCode.ERROR, str(exc))
                raise
            if options.capture_output:
                span.set_attributes(_capture_output(result))
            span.set_status(StatusCode.OK)
            return result

    return wrapper


@overload
def track(fn: F) -> F: ...


@overload
def track(
    fn: None = None,
    *,
    name: str | None = None,
    capture_input: bool = True,
    ignore_arguments: list[str] | None = None,
    capture_output: bool = True,
    attributes: dict[str, Any] | None = None,
) -> Callable[[F], F]: ...


def track(
    fn: F | None = None,
    *,
    name: str | None = None,
    capture_input: bool = True,
    ignore_arguments: list[str] | None = None,
    capture_output: bool = True,
    attributes: dict[str, Any] | None = None,
) -> F | Callable[[F], F]:
    """Trace a pipeline stage; usable bare (``@track``) or with options.

    Args:
        fn: Set automatically for bare ``@track``.
        name: Span name, ``fn.__qualname__`` by default.
        capture_input: Record bound arguments.
        ignore_arguments: Arguments left out, typically models and corpora.
        capture_output: Record the return value (per key for dicts).
        attributes: Static attributes on every span.
    """

    def decorator(func: F) -> F:
        options = _SpanOptions(
            name=name or func.__qualname__,
            capture_input=capture_input,
            capture_output=capture_output,
            ignore_arguments=tuple(ignore_arguments or ()),
            attributes=dict(attributes or {}),
        )
        return _traced(func, options)  # type: ignore[return-value]

    return decorator(fn) if fn is not None else decorator
