"""Distant-supervision event labeling.

KB records are matched against document text by exact substring search.
Records that keep every key role and enough matched roles become table rows
and their matched spans become BIO tags. No trigger words are labeled.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from doc2edag.corpus import parse_rows, truncate, write_jsonl
from doc2edag.edag import unique_records
from doc2edag.evaluation import report
from doc2edag.exceptions import SchemaMismatchError
from doc2edag.models.corpus import Document, EntityMention, EventRecord, KnowledgeBase
from doc2edag.models.evaluation import EvalReport
from doc2edag.models.labeling import (
    LabeledDoc,
    LabelingDiagnostics,
    LabelingStats,
    MatchResult,
    TypeLabelingStats,
)
from doc2edag.models.schema import OUTSIDE_TAG, EventTypeSpec, SchemaRegistry
from doc2edag.observability import track
from doc2edag.schema import check_record_schema

logger = logging.getLogger("doc2edag.labeling")


def find_occurrences(text: str, needle: str) -> list[int]:
    """Start offsets of every occurrence of ``needle``, overlapping ones included."""
    starts = []
    i = text.find(needle)
    while i != -1:
        starts.append(i)
        i = text.find(needle, i + 1)
    return starts


def match_record(doc: Document, record: EventRecord, spec: EventTypeSpec) -> MatchResult:
    """Find every exact occurrence of each non-empty argument of ``record``."""
    check_record_schema(record, spec)
    arg_spans: dict[str, list[EntityMention]] = {}
    for role in spec.role_names:
        value = record.args.get(role)
        if value is None:
            continue
        spans = [
            EntityMention(
                sent_idx=sent_idx,
                span=(start, start + len(value)),
                surface=value,
                label=spec.role_label(role),
            )
            for sent_idx, sentence in enumerate(doc.raw_sentences)
            for start in find_occurrences(sentence, value)
        ]
        arg_spans[role] = spans
    matched = sum(1 for spans in arg_spans.values() if spans)
    return MatchResult(record=record, arg_spans=arg_spans, matched_count=matched)


def is_well_matched(match: MatchResult, spec: EventTypeSpec) -> bool:
    """Every key role matched and at least ``min_matched_roles`` roles matched."""
    matched = set(match.matched_roles)
    if any(name not in matched for name in spec.key_role_names):
        return False
    return match.matched_count >= spec.min_matched_roles


@dataclass(frozen=True)
class _Claim:
    sent_idx: int
    start: int
    end: int
    label: str
    order: int

    def overlaps(self, other: _Claim) -> bool:
        return (
            self.sent_idx == other.sent_idx
            and self.start < other.end
            and other.start < self.end
        )


def _resolve_claims(claims: list[_Claim]) -> tuple[list[_Claim], int]:
    """Longest span wins; equal lengths go to the earlier KB record."""
    unique: dict[tuple[int, int, int, str], _Claim] = {}
    for claim in claims:
        key = (claim.sent_idx, claim.start, claim.end, claim.label)
        if key not in unique or claim.order < unique[key].order:
            unique[key] = claim
    ranked = sorted(
        unique.values(),
        key=lambda c: (-(c.end - c.start), c.order, c.sent_idx, c.start),
    )
    accepted: list[_Claim] = []
    conflicts = 0
    for claim in ranked:
        if any(claim.overlaps(other) for other in accepted):
            conflicts += 1
            continue
        accepted.append(claim)
    return accepted, conflicts


def label_document(
    doc: Document, kb_records: Sequence[EventRecord], registry: SchemaRegistry
) -> LabeledDoc:
    """Label one (already truncated) document against its KB records.

    Retained records keep only the arguments found in the text. Tag
    conflicts are resolved deterministically and counted, never raised.

    Raises:
        SchemaMismatchError: A record names an unknown event type or role.
    """
    tables: dict[str, list[EventRecord]] = {code: [] for code in registry.codes}
    claims: list[_Claim] = []
    dropped = 0
    for order, record in enumerate(kb_records):
        try:
            spec = registry.get(record.event_type)
        except KeyError:
            raise SchemaMismatchError(
                f"{doc.doc_id}: unknown event type {record.event_type}",
                event_type=record.event_type,
            ) from None
        match = match_record(doc, record, spec)
        if not is_well_matched(match, spec):
            dropped += 1
            logger.debug(
                "%s: dropped %s record (%d/%d roles matched)",
                doc.doc_id,
                spec.code,
                match.matched_count,
                len(spec.roles),
            )
            continue
        matched = set(match.matched_roles)
        tables[spec.code].append(
            EventRecord(
                event_type=spec.code,
                args={
                    name: (record.args.get(name) if name in matched else None)
                    for name in spec.role_names
                },
            )
        )
        for spans in match.arg_spans.values():
            claims.extend(
                _Claim(m.sent_idx, m.start, m.end, m.label or "", order) for m in spans
            )

    accepted, conflicts = _resolve_claims(claims)
    if conflicts:
        logger.debug("%s: %d overlapping tag claim(s) discarded", doc.doc_id, conflicts)
    tags = [[OUTSIDE_TAG] * len(tokens) for tokens in doc.sentences]
    for claim in accepted:
        row = tags[claim.sent_idx]
        row[claim.start] = f"B-{claim.label}"
        for i in range(claim.start + 1, claim.end):
            row[i] = f"I-{claim.label}"

    for code in tables:
        tables[code] = unique_records(tables[code])
    return LabeledDoc(
        doc=doc,
        tags=tags,
        tables=tables,
        triggered={code: bool(records) for code, records in tables.items()},
        diagnostics=LabelingDiagnostics(
            candidate_records=len(kb_records),
            dropped_records=dropped,
            tag_conflicts=conflicts,
        ),
    )


@track(name="labeling.corpus", capture_input=False, capture_output=False)
def label_corpus(
    documents: Iterable[Document],
    kb: KnowledgeBase,
    registry: SchemaRegistry,
    *,
    max_sents: int | None = None,
    max_len: int | None = None,
    threads: int = 1,
) -> tuple[list[LabeledDoc], LabelingStats]:
    """Truncate and label every document, collecting corpus statistics.

    ``threads`` > 1 labels documents concurrently; output order and
    statistics do not depend on it.
    """

    def label_one(doc: Document) -> LabeledDoc:
        records = kb.for_doc(doc.doc_id)
        visible = doc
        if max_sents is not None and max_len is not None:
            visible = truncate(doc, max_sents, max_len).doc
        labeled_doc = label_document(visible, records, registry)
        if visible is not doc:
            labeled_doc.diagnostics.lost_to_truncation = _lost_arguments(
                doc, visible, records, registry
            )
        return labeled_doc

    if threads <= 1:
        labeled = [label_one(doc) for doc in documents]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            labeled = list(pool.map(label_one, documents))
    stats = LabelingStats(per_type={code: TypeLabelingStats() for code in registry.codes})
    for labeled_doc in labeled:
        _accumulate(stats, labeled_doc, kb.for_doc(labeled_doc.doc_id))
    logger.info(
        "labeled %d documents: %d record(s) retained, %d dropped",
        stats.documents,
        sum(s.retained for s in stats.per_type.values()),
        sum(s.dropped for s in stats.per_type.values()),
    )
    return labeled, stats


def _lost_arguments(
    original: Document,
    visible: Document,
    records: Sequence[EventRecord],
    registry: SchemaRegistry,
) -> int:
    lost = 0
    for record in records:
        spec = registry.get(record.event_type)
        before = match_record(original, record, spec)
        after = match_record(visible, record, spec)
        lost += len(set(before.matched_roles) - set(after.matched_roles))
    return lost


def _accumulate(
    stats: LabelingStats, labeled: LabeledDoc, records: Sequence[EventRecord]
) -> None:
    stats.documents += 1
    stats.tag_conflicts += labeled.diagnostics.tag_conflicts
    stats.lost_to_truncation += labeled.diagnostics.lost_to_truncation
    multi = False
    for code, type_stats in stats.per_type.items():
        candidates = sum(1 for r in records if r.event_type == code)
        retained = len(labeled.tables.get(code, []))
        type_stats.candidates += candidates
        type_stats.retained += retained
        type_stats.dropped += candidates - retained
        type_stats.documents += int(retained > 0)
        type_stats.multi_event_documents += int(retained > 1)
        multi = multi or retained > 1
    stats.multi_event_documents += int(multi)


def labeling_quality(
    labeled: Iterable[LabeledDoc], truth: KnowledgeBase, registry: SchemaRegistry
) -> EvalReport:
    """Score DS tables (as predictions) against KB records (as gold)."""
    predictions = {ld.doc_id: ld.tables for ld in labeled}
    gold = {doc_id: group_records(truth.for_doc(doc_id), registry) for doc_id in predictions}
    return report(predictions, gold, registry)


def group_records(
    records: Iterable[EventRecord], registry: SchemaRegistry
) -> dict[str, list[EventRecord]]:
    """Event tables keyed by every code of the registry."""
    tables: dict[str, list[EventRecord]] = {code: [] for code in registry.codes}
    for record in records:
        tables.setdefault(record.event_type, []).append(record)
    return tables


# ---------------------------------------------------------------------------
# JSONL
# ---------------------------------------------------------------------------


def write_labeled(path: Path, labeled: Iterable[LabeledDoc]) -> None:
    write_jsonl(path, (ld.to_jsonl_dict() for ld in labeled))


def read_labeled(path: Path, documents: Mapping[str, Document]) -> list[LabeledDoc]:
    """Read labeled rows, re-attaching each to its document clipped to the tag shape."""

    def parse(row: dict) -> LabeledDoc:
        doc_id = row["doc_id"]
        if doc_id not in documents:
            raise SchemaMismatchError(f"labels reference unknown document {doc_id}")
        tags: list[list[str]] = row["tags"]
        source = documents[doc_id]
        doc = Document.from_text(
            doc_id, [raw[: len(t)] for raw, t in zip(source.raw_sentences, tags)]
        )
        return LabeledDoc(
            doc=doc,
            tags=tags,
            tables={
                code: [EventRecord.model_validate(r) for r in records]
                for code, records in row["tables"].items()
            },
            triggered=row["triggered"],
        )

    return parse_rows(path, parse)
