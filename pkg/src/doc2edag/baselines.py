"""Comparison decoders over recognized entities.

``greedy_decode`` fills one record per triggered type from first
occurrences. The key-sentence decoders fill records around sentences a
key-sentence head flagged: ``dcfee_o_decode`` one record per key sentence,
``dcfee_m_decode`` several when the key sentence names several entities of
one role. All of them take the same mention interface as the main decoder.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence

import numpy as np

from doc2edag.edag import unique_records
from doc2edag.models.corpus import Document, EntityMention, EventRecord
from doc2edag.models.labeling import LabeledDoc, spans_from_tags
from doc2edag.models.schema import EventTypeSpec, SchemaRegistry

logger = logging.getLogger("doc2edag.baselines")

Tables = dict[str, list[EventRecord]]


def derive_key_sentence_labels(labeled: LabeledDoc) -> dict[str, int]:
    """Index of the sentence holding most argument spans, per triggered type.

    Ties go to the smallest index. Types without any tagged span get no label.
    """
    labels: dict[str, int] = {}
    for code, records in labeled.tables.items():
        if not records:
            continue
        prefix = f"{code}."
        counts = np.array(
            [
                sum(1 for _, _, label in spans_from_tags(row) if label.startswith(prefix))
                for row in labeled.tags
            ]
        )
        if counts.size and counts.max() > 0:
            labels[code] = int(np.argmax(counts))
    return labels


def select_key_sentences(
    sentence_probs: Mapping[str, np.ndarray],
    triggered: Iterable[str],
    threshold: float = 0.5,
) -> dict[str, list[int]]:
    """Sentences at or above ``threshold`` for each triggered type.

    A triggered type with no sentence above the threshold keeps its single
    most probable sentence.
    """
    chosen: dict[str, list[int]] = {}
    for code in triggered:
        probs = np.asarray(sentence_probs[code])
        if probs.size == 0:
            continue
        above = [int(i) for i in np.flatnonzero(probs >= threshold)]
        chosen[code] = above or [int(np.argmax(probs))]
    return chosen


def _empty_tables(registry: SchemaRegistry) -> Tables:
    return {code: [] for code in registry.codes}


def _document_order(mentions: Iterable[EntityMention]) -> list[EntityMention]:
    return sorted(mentions, key=lambda m: (m.sent_idx, m.start, m.end))


def greedy_decode(
    mentions: Sequence[EntityMention],
    triggered: Iterable[str],
    registry: SchemaRegistry,
) -> Tables:
    """Exactly one record per triggered type from first-occurring role mentions."""
    tables = _empty_tables(registry)
    ordered = _document_order(mentions)
    for code in triggered:
        spec = registry.get(code)
        args: dict[str, str | None] = {}
        for role in spec.role_names:
            label = spec.role_label(role)
            first = next((m for m in ordered if m.label == label), None)
            args[role] = first.surface if first is not None else None
        tables[code] = [EventRecord(event_type=code, args=args)]
    return tables


def _sentence_midpoints(doc: Document) -> np.ndarray:
    lengths = np.array([len(s) for s in doc.sentences], dtype=np.float64)
    offsets = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    return offsets + lengths / 2.0


def _role_candidates(
    role_label: str,
    key_sent: int,
    mentions: Sequence[EntityMention],
    midpoints: np.ndarray,
) -> list[str]:
    """Distinct surfaces filling a role, nearest first.

    Mentions inside the key sentence come first in text order; otherwise
    the nearest sentence wins, the earlier one on ties.
    """
    inside = [m for m in mentions if m.label == role_label and m.sent_idx == key_sent]
    if inside:
        pool = sorted(inside, key=lambda m: (m.start, m.end))
    else:
        outside = [m for m in mentions if m.label == role_label and m.sent_idx != key_sent]
        pool = sorted(
            outside,
            key=lambda m: (
                abs(midpoints[m.sent_idx] - midpoints[key_sent]),
                m.sent_idx,
                m.start,
            ),
        )
    surfaces: list[str] = []
    for m in pool:
        if m.surface not in surfaces:
            surfaces.append(m.surface)
    return surfaces


def _key_sentence_records(
    doc: Document,
    spec: EventTypeSpec,
    key_sent: int,
    mentions: Sequence[EntityMention],
    multi: bool,
) -> list[EventRecord]:
    midpoints = _sentence_midpoints(doc)
    candidates = {
        role: _role_candidates(spec.role_label(role), key_sent, mentions, midpoints)
        for role in spec.role_names
    }
    k = 1
    if multi:
        in_sentence = [
            len({m.surface for m in mentions if m.sent_idx == key_sent and m.label == spec.role_label(r)})
            for r in spec.role_names
        ]
        k = max([1, *in_sentence])
    records = []
    for i in range(k):
        args: dict[str, str | None] = {}
        for role, surfaces in candidates.items():
            if len(surfaces) == 1:
                args[role] = surfaces[0]
            else:
                args[role] = surfaces[i] if i < len(surfaces) else None
        records.append(EventRecord(event_type=spec.code, args=args))
    if k > 1:
        logger.debug("%s: key sentence %d of %s yields %d records", doc.doc_id, key_sent, spec.code, k)
    return records


def dcfee_o_decode(
    doc: Document,
    key_sentences: Mapping[str, Sequence[int]],
    mentions: Sequence[EntityMention],
    registry: SchemaRegistry,
) -> Tables:
    """One record per key sentence, missing roles completed from the nearest sentence."""
    tables = _empty_tables(registry)
    for code, sentences in key_sentences.items():
        spec = registry.get(code)
        records: list[EventRecord] = []
        for key_sent in sentences:
            records.extend(_key_sentence_records(doc, spec, key_sent, mentions, multi=False))
        tables[code] = unique_records(records)
    return tables


def dcfee_m_decode(
    doc: Document,
    key_sentences: Mapping[str, Sequence[int]],
    mentions: Sequence[EntityMention],
    registry: SchemaRegistry,
) -> Tables:
    """Like :func:`dcfee_o_decode`, but a key sentence yields ``k`` records.

    ``k`` is the largest number of distinct entities any role has inside the
    key sentence. Roles with a single candidate share it across all ``k``
    records; others are aligned nearest first and padded with NA.
    """
    tables = _empty_tables(registry)
    for code, sentences in key_sentences.items():
        spec = registry.get(code)
        records: list[EventRecord] = []
        for key_sent in sentences:
            records.extend(_key_sentence_records(doc, spec, key_sent, mentions, multi=True))
        tables[code] = unique_records(records)
    return tables


DECODERS = ("doc2edag", "greedy", "dcfee-o", "dcfee-m")
