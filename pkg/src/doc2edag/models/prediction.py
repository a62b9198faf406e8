"""Prediction output models."""

from __future__ import annotations

from typing import Any

from pydantic import Field

from doc2edag.models.common import DataModel
from doc2edag.models.corpus import EntityMention, EventRecord


class PredictionDiagnostics(DataModel):
    """Deterministic-resolution events counted while decoding one document."""

    frontier_truncations: int = 0
    mention_mismatches: int = 0


class DocumentPrediction(DataModel):
    """Event tables predicted for one document (one prediction JSONL line)."""

    doc_id: str
    triggered: dict[str, float] = Field(default_factory=dict)
    tables: dict[str, list[EventRecord]] = Field(default_factory=dict)
    diagnostics: PredictionDiagnostics = Field(default_factory=PredictionDiagnostics)
    decoder: str = "doc2edag"
    mentions: list[EntityMention] = Field(default_factory=list)

    def to_jsonl_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "triggered": self.triggered,
            "tables": {
                code: [r.to_json_dict() for r in records] for code, records in self.tables.items()
            },
            "diagnostics": self.diagnostics.to_json_dict(),
            "decoder": self.decoder,
            "mentions": [m.to_json_dict() for m in self.mentions],
        }
