"""Corpus models: documents, mentions, records and generator settings."""

from __future__ import annotations

from typing import Any

from pydantic import Field, field_validator, model_validator

from doc2edag.models.common import DataModel, FrozenModel


class Document(FrozenModel):
    """A document as a sequence of character-tokenized sentences."""

    doc_id: str
    sentences: list[list[str]]
    raw_sentences: list[str]

    @model_validator(mode="after")
    def _check_tokens(self) -> Document:
        if not self.sentences:
            raise ValueError(f"document {self.doc_id} has no sentences")
        if len(self.sentences) != len(self.raw_sentences):
            raise ValueError(f"document {self.doc_id}: token/raw sentence count mismatch")
        for i, (tokens, raw) in enumerate(zip(self.sentences, self.raw_sentences)):
            if not tokens:
                raise ValueError(f"document {self.doc_id}: sentence {i} is empty")
            if "".join(tokens) != raw:
                raise ValueError(f"document {self.doc_id}: sentence {i} tokens do not join to text")
        return self

    @classmethod
    def from_text(cls, doc_id: str, sentences: list[str]) -> Document:
        """Build a document from raw sentence strings; empty strings are dropped."""
        raw = [s for s in sentences if s]
        return cls(doc_id=doc_id, sentences=[list(s) for s in raw], raw_sentences=raw)

    @property
    def num_sentences(self) -> int:
        return len(self.sentences)

    def to_jsonl_dict(self) -> dict[str, Any]:
        return {"doc_id": self.doc_id, "sentences": list(self.raw_sentences)}


class EntityMention(FrozenModel):
    """A text span inside one sentence that refers to an entity.

    ``label`` carries the role label (``EP.Pledger``) for recognized mentions.
    """

    sent_idx: int
    span: tuple[int, int]
    surface: str
    label: str | None = None

    @model_validator(mode="after")
    def _check_span(self) -> EntityMention:
        start, end = self.span
        if not 0 <= start < end:
            raise ValueError(f"invalid mention span {self.span}")
        if end - start != len(self.surface):
            raise ValueError(f"span {self.span} does not cover surface {self.surface!r}")
        return self

    @property
    def start(self) -> int:
        return self.span[0]

    @property
    def end(self) -> int:
        return self.span[1]

    def covered_by(self, doc: Document) -> bool:
        """True when the span lies inside the document and matches its text."""
        if self.sent_idx >= doc.num_sentences:
            return False
        sentence = doc.raw_sentences[self.sent_idx]
        return self.end <= len(sentence) and sentence[self.start : self.end] == self.surface


class EventRecord(FrozenModel):
    """One row of an event table; ``None`` marks the empty (NA) argument."""

    event_type: str
    args: dict[str, str | None]

    @field_validator("args")
    @classmethod
    def _empty_is_none(cls, value: dict[str, str | None]) -> dict[str, str | None]:
        return {role: (arg if arg else None) for role, arg in value.items()}

    def key(self, role_order: list[str]) -> tuple[str | None, ...]:
        return tuple(self.args.get(role) for role in role_order)

    @property
    def filled_roles(self) -> list[str]:
        return [role for role, arg in self.args.items() if arg is not None]

    @property
    def non_empty_count(self) -> int:
        return len(self.filled_roles)

    def __hash__(self) -> int:
        return hash((self.event_type, tuple(sorted(self.args.items(), key=lambda kv: kv[0]))))


class KnowledgeBase(DataModel):
    """Ground-truth event records per document."""

    records: dict[str, list[EventRecord]] = Field(default_factory=dict)

    def for_doc(self, doc_id: str) -> list[EventRecord]:
        return self.records.get(doc_id, [])


class Lexicons(DataModel):
    """Entity lexicons for the name-like argument kinds.

    Numeric kinds (shares, amounts, prices, ratios, dates) are rendered from
    the generator's random stream and need no lexicon.
    """

    persons: list[str] = Field(
        default_factory=lambda: [
            f"{family} {given}"
            for family in (
                "ZHANG", "WANG", "LIU", "CHEN", "YANG", "HUANG", "ZHAO", "ZHOU",
                "SUN", "MA", "ZHU", "XU", "GUO", "HE", "LIN", "LUO",
            )
            for given in ("WEI", "FANG", "JUN", "LEI", "TAO", "MIN", "QIANG", "YAN")
        ]
    )
    companies: list[str] = Field(
        default_factory=lambda: [
            f"{stem} {suffix}"
            for stem in (
                "Apex", "Birch", "Cobalt", "Delta", "Ember", "Falcon", "Granite",
                "Harbor", "Ivory", "Juniper", "Kestrel", "Lumen",
            )
            for suffix in ("Holdings", "Industrial", "Tech", "Energy")
        ]
    )
    institutions: list[str] = Field(
        default_factory=lambda: [
            f"{stem} {suffix}"
            for stem in ("North", "South", "East", "West", "Central", "Coastal", "Pacific", "Summit")
            for suffix in ("Securities", "Trust Bank", "Court", "Capital")
        ]
    )


class GeneratorConfig(DataModel):
    """Settings of the synthetic announcement generator."""

    seed: int = 0
    num_docs: int = Field(default=1000, ge=1)
    multi_event_ratio: float = Field(default=0.29, ge=0.0, le=1.0)
    scatter_degree: int = Field(default=3, ge=1)
    vocabulary: Lexicons = Field(default_factory=Lexicons)
    noise: float = Field(default=0.1, ge=0.0, le=1.0)
    stale_rate: float = Field(default=0.1, ge=0.0, le=1.0)
    summary_rate: float = Field(default=0.5, ge=0.0, le=1.0)
    empty_role_rate: float = Field(default=0.15, ge=0.0, le=1.0)
    shared_key_rate: float = Field(default=0.5, ge=0.0, le=1.0)
    max_records: int = Field(default=3, ge=2)
    max_sentence_chars: int = Field(default=48, ge=16)
    event_type_mix: dict[str, float] = Field(default_factory=dict)
