"""Documents, tokenization, truncation and the synthetic announcement generator.

The generator renders event records into short announcement-style sentences.
Arguments of one record are spread over several sentences, multi-event
documents optionally get a summary sentence listing values of several
records, stale values are "corrected" later in the text, and distractor
sentences carry plausible entities that belong to no record.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import TypeVar

import numpy as np

from doc2edag.exceptions import GenerationError, InputError
from doc2edag.models.corpus import (
    Document,
    EntityMention,
    EventRecord,
    GeneratorConfig,
    KnowledgeBase,
)
from doc2edag.models.schema import EventTypeSpec, SchemaRegistry
from doc2edag.observability import track

logger = logging.getLogger("doc2edag.corpus")

T = TypeVar("T")

_NAME_KINDS = ("person", "company", "institution")

_DISTRACTOR_FRAMES = (
    "Unrelated: {value}.",
    "Another filing cites {value}.",
    "{value} is not involved.",
)


def tokenize(text: str) -> list[str]:
    """Character-level tokenization: one token per unicode scalar value."""
    if not text:
        raise ValueError("cannot tokenize an empty string")
    return list(text)


def detokenize(tokens: Sequence[str]) -> str:
    return "".join(tokens)


@dataclass
class TruncationResult:
    """A truncated document plus what the truncation removed."""

    doc: Document
    dropped_sentences: int = 0
    clipped_sentences: list[int] = field(default_factory=list)
    lost_mentions: list[EntityMention] = field(default_factory=list)


def truncate(
    doc: Document,
    max_sents: int,
    max_len: int,
    mentions: Sequence[EntityMention] = (),
) -> TruncationResult:
    """Keep the first ``max_sents`` sentences, each clipped to ``max_len`` tokens.

    Mentions given in ``mentions`` that do not survive intact are reported
    in ``lost_mentions``.
    """
    if max_sents < 1 or max_len < 1:
        raise ValueError("max_sents and max_len must be positive")
    if doc.num_sentences <= max_sents and all(len(s) <= max_len for s in doc.sentences):
        return TruncationResult(doc=doc)

    kept = doc.raw_sentences[:max_sents]
    clipped = [i for i, s in enumerate(kept) if len(s) > max_len]
    truncated = Document.from_text(doc.doc_id, [s[:max_len] for s in kept])
    lost = [m for m in mentions if m.sent_idx >= max_sents or m.end > max_len]
    if lost:
        logger.debug("%s: truncation lost %d mention(s)", doc.doc_id, len(lost))
    return TruncationResult(
        doc=truncated,
        dropped_sentences=max(0, doc.num_sentences - max_sents),
        clipped_sentences=clipped,
        lost_mentions=lost,
    )


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------


def role_kind(role_name: str) -> str:
    """Entity kind that fills a role, inferred from its name."""
    name = role_name.lower()
    for keyword, kind in (
        ("date", "date"),
        ("ratio", "ratio"),
        ("price", "price"),
        ("amount", "amount"),
        ("shares", "shares"),
        ("institution", "institution"),
        ("pledgee", "institution"),
        ("company", "company"),
    ):
        if keyword in name:
            return kind
    return "person"


class _ValueSampler:
    """Draws entity strings of a kind; name kinds avoid repeats within a document."""

    def __init__(self, cfg: GeneratorConfig, rng: np.random.Generator) -> None:
        self._rng = rng
        self._lexicons = {
            "person": cfg.vocabulary.persons,
            "company": cfg.vocabulary.companies,
            "institution": cfg.vocabulary.institutions,
        }
        self._used: set[str] = set()

    def reset(self) -> None:
        self._used.clear()

    def draw(self, kind: str) -> str:
        for _ in range(32):
            value = self._render(kind)
            if value not in self._used:
                self._used.add(value)
                return value
        return value

    def _render(self, kind: str) -> str:
        rng = self._rng
        if kind in self._lexicons:
            lexicon = self._lexicons[kind]
            return lexicon[int(rng.integers(len(lexicon)))]
        if kind == "date":
            year, month, day = rng.integers(2010, 2020), rng.integers(1, 13), rng.integers(1, 29)
            return f"{year:04d}-{month:02d}-{day:02d}"
        if kind == "ratio":
            return f"{rng.integers(1, 100):02d}.{rng.integers(0, 100):02d}%"
        if kind == "price":
            return f"{rng.integers(100, 1000)}.{rng.integers(0, 100):02d}"
        if kind == "amount":
            return f"{int(rng.integers(100_000_000, 1_000_000_000)):,}"
        return f"{int(rng.integers(10_000_000, 100_000_000)):,}"


def _check_lexicons(cfg: GeneratorConfig, specs: Sequence[EventTypeSpec]) -> None:
    lexicons = {
        "person": cfg.vocabulary.persons,
        "company": cfg.vocabulary.companies,
        "institution": cfg.vocabulary.institutions,
    }
    for spec in specs:
        for role in spec.roles:
            kind = role_kind(role.name)
            if kind in _NAME_KINDS and not lexicons[kind]:
                raise GenerationError(
                    f"empty {kind} lexicon but role {spec.code}.{role.name} requires it"
                )


def _mix_weights(cfg: GeneratorConfig, registry: SchemaRegistry) -> tuple[list[str], np.ndarray]:
    if not cfg.event_type_mix:
        codes = registry.codes
        return codes, np.full(len(codes), 1.0 / len(codes))
    unknown = set(cfg.event_type_mix) - set(registry.codes)
    if unknown:
        raise GenerationError(f"event_type_mix names unknown event types: {sorted(unknown)}")
    codes = [c for c in registry.codes if cfg.event_type_mix.get(c, 0.0) > 0]
    if not codes:
        raise GenerationError("event_type_mix has no positive weight")
    weights = np.array([cfg.event_type_mix[c] for c in codes], dtype=np.float64)
    return codes, weights / weights.sum()


def _sample_records(
    spec: EventTypeSpec,
    num_records: int,
    cfg: GeneratorConfig,
    sampler: _ValueSampler,
    rng: np.random.Generator,
) -> list[EventRecord]:
    first_key = spec.key_role_names[0]
    share_key = num_records > 1 and rng.random() < cfg.shared_key_rate
    records: list[EventRecord] = []
    for k in range(num_records):
        args: dict[str, str | None] = {}
        for role in spec.roles:
            kind = role_kind(role.name)
            if k > 0 and role.name == first_key and share_key:
                args[role.name] = records[0].args[role.name]
            elif k > 0 and not role.is_key and rng.random() < 0.3:
                args[role.name] = records[0].args[role.name]
            elif not role.is_key and rng.random() < cfg.empty_role_rate:
                args[role.name] = None
            else:
                args[role.name] = sampler.draw(kind)
        # refill optional roles until the labeling threshold can be met
        for role in spec.roles:
            if sum(v is not None for v in args.values()) >= spec.min_matched_roles:
                break
            if args[role.name] is None:
                args[role.name] = sampler.draw(role_kind(role.name))
        records.append(EventRecord(event_type=spec.code, args=args))
    return records


def _pack_clauses(prefix: str, clauses: list[str], limit: int, scatter: int) -> list[str]:
    """Greedily pack clauses into sentences no longer than ``limit`` characters.

    At least ``min(scatter, len(clauses))`` sentences are produced.
    """
    budget = max(1, len(clauses) // max(1, scatter))
    sentences: list[str] = []
    current: list[str] = []
    for clause in clauses:
        candidate = prefix + "; ".join([*current, clause]) + "."
        if current and (len(candidate) > limit or len(current) >= budget):
            sentences.append(prefix + "; ".join(current) + ".")
            current = []
        current.append(clause)
    if current:
        sentences.append(prefix + "; ".join(current) + ".")
    return [s[0].upper() + s[1:] for s in sentences]


def _render_document(
    doc_id: str,
    spec: EventTypeSpec,
    records: list[EventRecord],
    cfg: GeneratorConfig,
    sampler: _ValueSampler,
    rng: np.random.Generator,
) -> list[str]:
    sentences = [f"Announcement {doc_id}: {spec.name or spec.code}."]
    first_key = spec.key_role_names[0]
    anchors = [r.args[first_key] for r in records]

    for k, record in enumerate(records):
        anchor = anchors[k]
        unique_anchor = anchors.count(anchor) == 1
        prefix = f"For {anchor}, " if unique_anchor else f"In item {k + 1}, "
        clauses = []
        for role in spec.roles:
            value = record.args[role.name]
            if value is None or (unique_anchor and role.name == first_key):
                continue
            clauses.append(f"{role.name.lower()} is {value}")
        block = _pack_clauses(prefix, clauses, cfg.max_sentence_chars, cfg.scatter_degree)
        if unique_anchor:
            block.insert(0, f"{anchor} is a party to this event.")

        if rng.random() < cfg.stale_rate:
            stale_roles = [
                r.name for r in spec.roles
                if record.args[r.name] is not None and role_kind(r.name) in ("shares", "amount")
            ]
            if stale_roles:
                stale = sampler.draw(role_kind(stale_roles[0]))
                block.insert(max(1, len(block) // 2), f"Correction: {stale} is void.")

        for sentence in block:
            sentences.append(sentence)
            if rng.random() < cfg.noise:
                kind = role_kind(spec.roles[int(rng.integers(len(spec.roles)))].name)
                frame = _DISTRACTOR_FRAMES[int(rng.integers(len(_DISTRACTOR_FRAMES)))]
                sentences.append(frame.format(value=sampler.draw(kind)))

    if len(records) > 1 and rng.random() < cfg.summary_rate:
        for role in spec.roles:
            values = [r.args[role.name] for r in records]
            if role.name != first_key and all(values) and len(set(values)) == len(values):
                sentences.append("Totals: " + " and ".join(v for v in values if v) + ".")
                break
    return sentences


@track(name="corpus.generate", capture_input=False, capture_output=False)
def generate_corpus(
    cfg: GeneratorConfig, registry: SchemaRegistry
) -> tuple[list[Document], KnowledgeBase]:
    """Render ``cfg.num_docs`` documents and their ground-truth records.

    The output is fully determined by ``cfg`` and ``registry``. Exactly
    ``round(multi_event_ratio * num_docs)`` documents hold more than one record.

    Raises:
        GenerationError: Empty lexicon for a required role kind, or an
            event type mix naming unknown types.
    """
    if not registry.specs:
        raise GenerationError("registry has no event types")
    codes, weights = _mix_weights(cfg, registry)
    specs = [registry.get(c) for c in codes]
    _check_lexicons(cfg, specs)

    rng = np.random.default_rng(cfg.seed)
    sampler = _ValueSampler(cfg, rng)
    num_multi = int(round(cfg.multi_event_ratio * cfg.num_docs))
    multi_docs = set(int(i) for i in rng.permutation(cfg.num_docs)[:num_multi])

    documents: list[Document] = []
    kb = KnowledgeBase()
    for i in range(cfg.num_docs):
        doc_id = f"doc-{i:06d}"
        spec = specs[int(rng.choice(len(specs), p=weights))]
        num_records = int(rng.integers(2, cfg.max_records + 1)) if i in multi_docs else 1
        sampler.reset()
        records = _sample_records(spec, num_records, cfg, sampler, rng)
        sentences = _render_document(doc_id, spec, records, cfg, sampler, rng)
        documents.append(Document.from_text(doc_id, sentences))
        kb.records[doc_id] = records
    logger.info(
        "generated %d documents (%d multi-event) over %s", cfg.num_docs, num_multi, codes
    )
    return documents, kb


def multi_event_ratio(kb: KnowledgeBase) -> float:
    """Fraction of documents holding more than one record."""
    if not kb.records:
        return 0.0
    return sum(len(r) > 1 for r in kb.records.values()) / len(kb.records)


# ---------------------------------------------------------------------------
# JSONL
# ---------------------------------------------------------------------------


def _dump_line(obj: object) -> str:
    return json.dumps(obj, ensure_ascii=False) + "\n"


def write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(_dump_line(row))


def read_jsonl(path: Path) -> Iterator[dict]:
    """Yield one dict per non-blank line.

    Raises:
        InputError: The file cannot be opened or a line is not a JSON object.
    """
    try:
        f = open(path, encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}", path=str(path)) from e
    with f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise InputError(f"{path}:{lineno}: invalid JSON ({e.msg})", path=str(path), line=lineno) from e
            if not isinstance(row, dict):
                raise InputError(f"{path}:{lineno}: expected a JSON object", path=str(path), line=lineno)
            yield row


def parse_rows(path: Path, parse: Callable[[dict], T]) -> list[T]:
    """Parse every row of a JSONL file, reporting the first malformed row."""
    parsed = []
    for index, row in enumerate(read_jsonl(path), start=1):
        try:
            parsed.append(parse(row))
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"{path}: row {index} is malformed ({e})", path=str(path), line=index) from e
    return parsed


def write_documents(path: Path, documents: Iterable[Document]) -> None:
    write_jsonl(path, (d.to_jsonl_dict() for d in documents))


def read_documents(path: Path) -> list[Document]:
    return parse_rows(path, lambda row: Document.from_text(row["doc_id"], row["sentences"]))


def write_knowledge_base(path: Path, kb: KnowledgeBase) -> None:
    write_jsonl(
        path,
        (
            {"doc_id": doc_id, "records": [r.to_json_dict() for r in records]}
            for doc_id, records in kb.records.items()
        ),
    )


def read_knowledge_base(path: Path) -> KnowledgeBase:
    rows = parse_rows(
        path, lambda row: (row["doc_id"], [EventRecord.model_validate(r) for r in row["records"]])
    )
    return KnowledgeBase(records=dict(rows))
