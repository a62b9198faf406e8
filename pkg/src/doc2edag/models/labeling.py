"""Distant-supervision labeling models."""

from __future__ import annotations

from typing import Any

from pydantic import Field, model_validator

from doc2edag.models.common import DataModel
from doc2edag.models.corpus import Document, EntityMention, EventRecord
from doc2edag.models.schema import OUTSIDE_TAG


class MatchResult(DataModel):
    """Where each argument of one KB record occurs in a document."""

    record: EventRecord
    arg_spans: dict[str, list[EntityMention]] = Field(default_factory=dict)
    matched_count: int = 0

    @model_validator(mode="after")
    def _check_counts(self) -> MatchResult:
        matched = sum(1 for spans in self.arg_spans.values() if spans)
        if matched != self.matched_count:
            raise ValueError(f"matched_count {self.matched_count} != {matched} matched roles")
        for role, spans in self.arg_spans.items():
            expected = self.record.args.get(role)
            if any(m.surface != expected for m in spans):
                raise ValueError(f"span surface differs from argument of role {role!r}")
        return self

    @property
    def matched_roles(self) -> list[str]:
        return [role for role, spans in self.arg_spans.items() if spans]


class LabelingDiagnostics(DataModel):
    """Per-document bookkeeping of the labeling pass."""

    candidate_records: int = 0
    dropped_records: int = 0
    tag_conflicts: int = 0
    lost_to_truncation: int = 0


class LabeledDoc(DataModel):
    """A document with token-level BIO tags and document-level event tables."""

    doc: Document
    tags: list[list[str]]
    tables: dict[str, list[EventRecord]] = Field(default_factory=dict)
    triggered: dict[str, bool] = Field(default_factory=dict)
    diagnostics: LabelingDiagnostics = Field(default_factory=LabelingDiagnostics)

    @model_validator(mode="after")
    def _check_alignment(self) -> LabeledDoc:
        if len(self.tags) != self.doc.num_sentences:
            raise ValueError(f"{self.doc.doc_id}: tag rows do not match sentence count")
        for i, (tags, tokens) in enumerate(zip(self.tags, self.doc.sentences)):
            if len(tags) != len(tokens):
                raise ValueError(f"{self.doc.doc_id}: sentence {i} tag/token length mismatch")
            previous = OUTSIDE_TAG
            for tag in tags:
                if tag.startswith("I-") and previous[2:] != tag[2:]:
                    raise ValueError(f"{self.doc.doc_id}: sentence {i} has an orphan {tag}")
                previous = tag
        for code, is_triggered in self.triggered.items():
            if is_triggered != bool(self.tables.get(code)):
                raise ValueError(f"{self.doc.doc_id}: triggered[{code}] disagrees with tables")
        return self

    @property
    def doc_id(self) -> str:
        return self.doc.doc_id

    @property
    def num_records(self) -> int:
        return sum(len(records) for records in self.tables.values())

    def mentions(self) -> list[EntityMention]:
        """Gold mentions as maximal B..I runs, in document order."""
        mentions = []
        for sent_idx, (tags, raw) in enumerate(zip(self.tags, self.doc.raw_sentences)):
            for start, end, label in spans_from_tags(tags):
                mentions.append(
                    EntityMention(
                        sent_idx=sent_idx, span=(start, end), surface=raw[start:end], label=label
                    )
                )
        return mentions

    def to_jsonl_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "tags": self.tags,
            "tables": {
                code: [r.to_json_dict() for r in records] for code, records in self.tables.items()
            },
            "triggered": self.triggered,
        }


def spans_from_tags(tags: list[str]) -> list[tuple[int, int, str]]:
    """Maximal ``B-x I-x ...`` runs as ``(start, end, label)``; stray I- tags start a span."""
    spans = []
    start: int | None = None
    label: str | None = None
    for i, tag in enumerate([*tags, OUTSIDE_TAG]):
        continues = tag.startswith("I-") and label == tag[2:]
        if start is not None and not continues:
            spans.append((start, i, label or ""))
            start, label = None, None
        if tag.startswith("B-") or (tag.startswith("I-") and not continues):
            start, label = i, tag[2:]
    return spans


class TypeLabelingStats(DataModel):
    """Record counts of one event type over a labeled corpus."""

    candidates: int = 0
    retained: int = 0
    dropped: int = 0
    documents: int = 0
    multi_event_documents: int = 0


class LabelingStats(DataModel):
    """Corpus-level statistics of a labeling pass."""

    documents: int = 0
    multi_event_documents: int = 0
    per_type: dict[str, TypeLabelingStats] = Field(default_factory=dict)
    tag_conflicts: int = 0
    lost_to_truncation: int = 0

    @property
    def multi_event_ratio(self) -> float:
        """Fraction of documents with more than one retained record of some type."""
        if not self.documents:
            return 0.0
        return self.multi_event_documents / self.documents
