"""ObservabilityConfig dataclass and SpanExport enum.

Configuration precedence:
1. Explicit ``configure()`` arguments (highest)
2. DOC2EDAG_TRACE / DOC2EDAG_SERVICE_NAME environment variables
3. Defaults (lowest)
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum


class SpanExport(str, Enum):
    """Where finished spans go."""

    CONSOLE = "console"
    MEMORY = "memory"
    DISABLED = "disabled"


@dataclass
class ObservabilityConfig:
    """Configuration of the local tracing setup."""

    export: SpanExport = SpanExport.CONSOLE
    service_name: str = "doc2edag"
    enabled: bool = True

    @classmethod
    def _resolve_from_env(cls) -> ObservabilityConfig:
        """Create a config resolved from environment variables."""
        export_str = os.environ.get("DOC2EDAG_TRACE", "console")
        try:
            export = SpanExport(export_str.lower())
        except ValueError:
            export = SpanExport.CONSOLE
        return cls(
            export=export,
            service_name=os.environ.get("DOC2EDAG_SERVICE_NAME", "doc2edag"),
            enabled=export != SpanExport.DISABLED,
        )
