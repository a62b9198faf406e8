"""Tests for documents, truncation and the synthetic generator."""

from __future__ import annotations

from pathlib import Path

import pytest

from doc2edag.corpus import (
    generate_corpus,
    multi_event_ratio,
    read_documents,
    read_knowledge_base,
    role_kind,
    tokenize,
    truncate,
    write_documents,
    write_knowledge_base,
)
from doc2edag.exceptions import GenerationError, InputError
from doc2edag.labeling import match_record
from doc2edag.models.corpus import Document, EntityMention, GeneratorConfig, Lexicons
from doc2edag.models.schema import SchemaRegistry


class TestDocument:
    """Test document construction and tokenization."""

    def test_character_tokens(self) -> None:
        assert tokenize("A股") == ["A", "股"]

    def test_tokenize_empty(self) -> None:
        with pytest.raises(ValueError):
            tokenize("")

    def test_from_text_drops_empty_sentences(self) -> None:
        doc = Document.from_text("d", ["ab", "", "c"])
        assert doc.num_sentences == 2
        assert doc.sentences[1] == ["c"]

    def test_document_needs_a_sentence(self) -> None:
        with pytest.raises(ValueError):
            Document.from_text("d", [])

    def test_mention_span_must_cover_surface(self) -> None:
        with pytest.raises(ValueError):
            EntityMention(sent_idx=0, span=(0, 3), surface="ab")


class TestTruncate:
    """Test sentence and length truncation."""

    def test_untouched_when_within_limits(self, pledge_doc: Document) -> None:
        result = truncate(pledge_doc, 10, 100)
        assert result.doc is pledge_doc
        assert result.dropped_sentences == 0

    def test_drops_and_clips(self, pledge_doc: Document) -> None:
        mentions = [
            EntityMention(sent_idx=1, span=(0, 9), surface="ZHANG WEI"),
            EntityMention(sent_idx=1, span=(34, 44), surface="North Bank"),
            EntityMention(sent_idx=3, span=(22, 32), surface="2019-01-02"),
        ]

        result = truncate(pledge_doc, 2, 20, mentions)

        assert result.doc.num_sentences == 2
        assert all(len(s) <= 20 for s in result.doc.sentences)
        assert result.dropped_sentences == 2
        assert result.clipped_sentences == [0, 1]
        assert [m.surface for m in result.lost_mentions] == ["North Bank", "2019-01-02"]

    def test_invalid_limits(self, pledge_doc: Document) -> None:
        with pytest.raises(ValueError):
            truncate(pledge_doc, 0, 10)


class TestGenerator:
    """Test the synthetic announcement generator."""

    def test_deterministic(self, registry: SchemaRegistry) -> None:
        cfg = GeneratorConfig(seed=3, num_docs=6)
        docs_a, kb_a = generate_corpus(cfg, registry)
        docs_b, kb_b = generate_corpus(cfg, registry)

        assert [d.raw_sentences for d in docs_a] == [d.raw_sentences for d in docs_b]
        assert kb_a.records == kb_b.records

    def test_seed_changes_output(self, registry: SchemaRegistry) -> None:
        docs_a, _ = generate_corpus(GeneratorConfig(seed=1, num_docs=4), registry)
        docs_b, _ = generate_corpus(GeneratorConfig(seed=2, num_docs=4), registry)
        assert [d.raw_sentences for d in docs_a] != [d.raw_sentences for d in docs_b]

    def test_exact_multi_event_ratio(self, registry: SchemaRegistry) -> None:
        _, kb = generate_corpus(GeneratorConfig(seed=0, num_docs=20, multi_event_ratio=0.25), registry)
        assert multi_event_ratio(kb) == pytest.approx(0.25)

    def test_multi_event_ratio_at_scale(self, registry: SchemaRegistry) -> None:
        cfg = GeneratorConfig(seed=5, num_docs=1000, multi_event_ratio=0.29)

        _, kb = generate_corpus(cfg, registry)

        assert abs(multi_event_ratio(kb) - 0.29) <= 0.05

    def test_records_fit_schema_and_appear_in_text(self, small_corpus, registry: SchemaRegistry) -> None:
        documents, kb = small_corpus
        for doc in documents:
            for record in kb.for_doc(doc.doc_id):
                spec = registry.get(record.event_type)
                match = match_record(doc, record, spec)
                assert set(match.matched_roles) == set(record.filled_roles)
                assert record.non_empty_count >= spec.min_matched_roles

    def test_sentence_length_bound(self, registry: SchemaRegistry) -> None:
        documents, _ = generate_corpus(
            GeneratorConfig(seed=0, num_docs=10, max_sentence_chars=60, scatter_degree=1), registry
        )
        # a single clause may exceed the bound, packed clauses never do
        assert max(len(s) for d in documents for s in d.raw_sentences) < 120

    def test_event_type_mix(self, registry: SchemaRegistry) -> None:
        _, kb = generate_corpus(
            GeneratorConfig(seed=0, num_docs=8, event_type_mix={"EU": 1.0}), registry
        )
        assert {r.event_type for records in kb.records.values() for r in records} == {"EU"}

    def test_unknown_type_in_mix(self, registry: SchemaRegistry) -> None:
        with pytest.raises(GenerationError, match="unknown"):
            generate_corpus(GeneratorConfig(num_docs=2, event_type_mix={"ZZ": 1.0}), registry)

    def test_empty_lexicon(self, registry: SchemaRegistry) -> None:
        cfg = GeneratorConfig(num_docs=2, vocabulary=Lexicons(persons=[]))
        with pytest.raises(GenerationError, match="person"):
            generate_corpus(cfg, registry)

    def test_role_kinds(self) -> None:
        assert role_kind("Start Date") == "date"
        assert role_kind("Pledgee") == "institution"
        assert role_kind("Total Holding Ratio") == "ratio"
        assert role_kind("Pledger") == "person"


class TestCorpusFiles:
    """Test JSONL round trips and input errors."""

    def test_documents_and_kb(self, small_corpus, tmp_path: Path) -> None:
        documents, kb = small_corpus
        write_documents(tmp_path / "documents.jsonl", documents)
        write_knowledge_base(tmp_path / "kb.jsonl", kb)

        assert read_documents(tmp_path / "documents.jsonl") == documents
        assert read_knowledge_base(tmp_path / "kb.jsonl").records == kb.records

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(InputError, match="cannot read"):
            read_documents(tmp_path / "missing.jsonl")

    def test_bad_json_line(self, tmp_path: Path) -> None:
        path = tmp_path / "documents.jsonl"
        path.write_text('{"doc_id": "a", "sentences": ["x"]}\n{oops\n')
        with pytest.raises(InputError) as exc_info:
            read_documents(path)
        assert exc_info.value.line == 2

    def test_missing_field(self, tmp_path: Path) -> None:
        path = tmp_path / "documents.jsonl"
        path.write_text('{"doc_id": "a"}\n')
        with pytest.raises(InputError, match="malformed"):
            read_documents(path)
