"""doc2edag exceptions.

All exceptions inherit from Doc2EdagError for easy catching.
"""

from __future__ import annotations

from typing import Any


class Doc2EdagError(Exception):
    """Base exception for all doc2edag errors."""

    #: Short category shown by the CLI in front of the message.
    category = "error"

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.message!r})"


class ConfigError(Doc2EdagError):
    """Configuration could not be resolved.

    Raised for unknown keys (with a spelling suggestion when one is close)
    and for values that fail validation.
    """

    category = "config"

    def __init__(self, message: str, *, key: str | None = None, suggestion: str | None = None) -> None:
        super().__init__(message)
        self.key = key
        self.suggestion = suggestion


class SchemaMismatchError(Doc2EdagError):
    """A record, checkpoint or document disagrees with the event schema."""

    category = "schema"

    def __init__(
        self, message: str, *, event_type: str | None = None, role: str | None = None
    ) -> None:
        super().__init__(message)
        self.event_type = event_type
        self.role = role


class InsufficientStatisticsError(Doc2EdagError):
    """No labeled records of an event type to estimate role statistics from."""

    category = "statistics"

    def __init__(self, message: str, *, event_type: str) -> None:
        super().__init__(message)
        self.event_type = event_type


class GenerationError(Doc2EdagError):
    """The synthetic corpus generator was configured inconsistently."""

    category = "generator"


class ShapeError(Doc2EdagError):
    """Tensor shapes are incompatible for a primitive."""

    category = "shape"

    def __init__(self, message: str, *, primitive: str, shapes: tuple[Any, ...] = ()) -> None:
        super().__init__(message)
        self.primitive = primitive
        self.shapes = shapes


class TapeError(Doc2EdagError):
    """Backward pass requested on an invalid or already-consumed tape."""

    category = "autograd"


class NonDeterminismError(Doc2EdagError):
    """A function expected to be deterministic returned differing values."""

    category = "autograd"


class GradientError(Doc2EdagError):
    """A parameter received a non-finite gradient."""

    category = "optimizer"

    def __init__(self, message: str, *, parameter: str) -> None:
        super().__init__(message)
        self.parameter = parameter


class EdagStructureError(Doc2EdagError):
    """An EDAG violates its structural invariants."""

    category = "edag"

    def __init__(self, message: str, *, node_id: int | None = None) -> None:
        super().__init__(message)
        self.node_id = node_id


class CheckpointError(Doc2EdagError):
    """A checkpoint file is truncated, corrupt or incompatible."""

    category = "checkpoint"

    def __init__(self, message: str, *, path: str | None = None) -> None:
        super().__init__(message)
        self.path = path


class TrainingError(Doc2EdagError):
    """Training diverged.

    Check epoch and batch for where the loss stopped being finite.
    """

    category = "training"

    def __init__(self, message: str, *, epoch: int | None = None, batch: int | None = None) -> None:
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class EvaluationError(Doc2EdagError):
    """Predictions and gold documents cannot be aligned."""

    category = "eval"

    def __init__(self, message: str, *, doc_id: str | None = None) -> None:
        super().__init__(message)
        self.doc_id = doc_id


class InputError(Doc2EdagError):
    """An input file is missing or is not the expected JSONL."""

    category = "input"

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None) -> None:
        super().__init__(message)
        self.path = path
        self.line = line
