"""Common models shared across the pipeline stages."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict


class DataModel(BaseModel):
    """Base model for all doc2edag data objects."""

    model_config = ConfigDict(
        from_attributes=True,
        populate_by_name=True,
        use_enum_values=True,
    )

    def to_json_dict(self) -> dict[str, Any]:
        """Dump to a JSON-compatible dict (the JSONL line payload)."""
        return self.model_dump(mode="json")


class FrozenModel(DataModel):
    """Immutable value object; safe to share across workers."""

    # merged with the parent config
    model_config = ConfigDict(frozen=True)
