"""Tests for the greedy and key-sentence decoders."""

from __future__ import annotations

import numpy as np
import pytest

from doc2edag.baselines import (
    dcfee_m_decode,
    dcfee_o_decode,
    derive_key_sentence_labels,
    greedy_decode,
    select_key_sentences,
)
from doc2edag.edag import canonicalize
from doc2edag.labeling import label_document
from doc2edag.models.corpus import Document, EntityMention, EventRecord
from doc2edag.models.schema import SchemaRegistry


@pytest.fixture
def shared_sentence_doc() -> Document:
    return Document.from_text(
        "doc-shared",
        [
            "Notice.",
            "ZHANG WEI and LIU FANG pledged 1,000 shares to North Bank.",
            "The pledge started on 2019-01-02.",
        ],
    )


@pytest.fixture
def shared_records() -> list[EventRecord]:
    base = {"Pledged Shares": "1,000", "Pledgee": "North Bank", "Start Date": "2019-01-02"}
    return [
        EventRecord(event_type="EP", args={"Pledger": "ZHANG WEI", **base}),
        EventRecord(event_type="EP", args={"Pledger": "LIU FANG", **base}),
    ]


def _mention(
    sent_idx: int, surface: str, label: str = "EP.Pledgee", start: int = 0
) -> EntityMention:
    span = (start, start + len(surface))
    return EntityMention(sent_idx=sent_idx, span=span, surface=surface, label=label)


class TestKeySentences:
    """Key-sentence labels and selection."""

    def test_labels_pick_densest_sentence(
        self, pledge_doc: Document, pledge_records: list[EventRecord], registry: SchemaRegistry
    ) -> None:
        labeled = label_document(pledge_doc, pledge_records, registry)

        # sentences 1 and 2 tie with three spans each
        assert derive_key_sentence_labels(labeled) == {"EP": 1}

    def test_selection_threshold_and_fallback(self) -> None:
        probs = {"EP": np.array([0.2, 0.7, 0.6]), "EU": np.array([0.1, 0.3])}

        assert select_key_sentences(probs, ["EP", "EU"]) == {"EP": [1, 2], "EU": [1]}
        assert select_key_sentences(probs, ["EU"]) == {"EU": [1]}


class TestGreedy:
    """One record per triggered type."""

    def test_first_occurrences(
        self, pledge_doc: Document, pledge_records: list[EventRecord], registry: SchemaRegistry
    ) -> None:
        mentions = label_document(pledge_doc, pledge_records, registry).mentions()

        tables = greedy_decode(list(reversed(mentions)), ["EP"], registry)

        assert tables["EU"] == []
        assert tables["EP"] == [pledge_records[0]]


class TestKeySentenceDecoders:
    """Record filling around key sentences."""

    def test_one_record_per_key_sentence(
        self, pledge_doc: Document, pledge_records: list[EventRecord], registry: SchemaRegistry
    ) -> None:
        mentions = label_document(pledge_doc, pledge_records, registry).mentions()

        tables = dcfee_o_decode(pledge_doc, {"EP": [1, 2]}, mentions, registry)

        assert canonicalize(tables["EP"], registry.get("EP")) == canonicalize(
            pledge_records, registry.get("EP")
        )

    def test_multi_record_key_sentence(
        self,
        shared_sentence_doc: Document,
        shared_records: list[EventRecord],
        registry: SchemaRegistry,
    ) -> None:
        spec = registry.get("EP")
        mentions = label_document(shared_sentence_doc, shared_records, registry).mentions()

        single = dcfee_o_decode(shared_sentence_doc, {"EP": [1]}, mentions, registry)
        multi = dcfee_m_decode(shared_sentence_doc, {"EP": [1]}, mentions, registry)

        assert [r.args["Pledger"] for r in single["EP"]] == ["ZHANG WEI"]
        assert canonicalize(multi["EP"], spec) == canonicalize(shared_records, spec)

    def test_nearest_sentence_fills_missing_role(self, registry: SchemaRegistry) -> None:
        doc = Document.from_text("d", ["aaaa", "bbbb", "cccc", "dddd", "eeee"])
        mentions = [_mention(0, "aa"), _mention(3, "dd"), _mention(1, "bb", "EP.Pledger")]

        tables = dcfee_o_decode(doc, {"EP": [1]}, mentions, registry)

        assert tables["EP"][0].args["Pledgee"] == "aa"
        assert tables["EP"][0].args["Start Date"] is None

    def test_ties_prefer_earlier_sentence(self, registry: SchemaRegistry) -> None:
        doc = Document.from_text("d", ["aaaa", "bbbb", "cccc"])
        mentions = [_mention(2, "cc"), _mention(0, "aa")]

        tables = dcfee_o_decode(doc, {"EP": [1]}, mentions, registry)

        assert tables["EP"][0].args["Pledgee"] == "aa"

    def test_duplicate_records_collapse(
        self, pledge_doc: Document, pledge_records: list[EventRecord], registry: SchemaRegistry
    ) -> None:
        mentions = label_document(pledge_doc, pledge_records, registry).mentions()

        tables = dcfee_m_decode(pledge_doc, {"EP": [1, 1]}, mentions, registry)

        assert len(tables["EP"]) == 1

    def test_single_entity_key_sentences_match_one_record_decoder(
        self, pledge_doc: Document, pledge_records: list[EventRecord], registry: SchemaRegistry
    ) -> None:
        mentions = label_document(pledge_doc, pledge_records, registry).mentions()
        scattered = [_mention(1, "aa"), _mention(3, "dd"), _mention(2, "cc", "EP.Pledger")]
        doc = Document.from_text("d", ["aaaa", "bbbb", "cccc", "dddd"])

        for key_sentences in ({"EP": [1]}, {"EP": [2]}, {"EP": [1, 2]}):
            assert dcfee_m_decode(pledge_doc, key_sentences, mentions, registry) == dcfee_o_decode(
                pledge_doc, key_sentences, mentions, registry
            )
        for key_sentences in ({"EP": [0]}, {"EP": [2]}, {"EP": [0, 3]}):
            assert dcfee_m_decode(doc, key_sentences, scattered, registry) == dcfee_o_decode(
                doc, key_sentences, scattered, registry
            )

    def test_in_sentence_value_shared_over_outside_mentions(self, registry: SchemaRegistry) -> None:
        doc = Document.from_text("d", ["aaaa", "bbbb", "cccc"])
        mentions = [
            _mention(1, "ZHANG WEI", "EP.Pledger"),
            _mention(1, "LIU FANG", "EP.Pledger", start=14),
            _mention(1, "North Bank", start=40),
            _mention(0, "South Bank"),
            _mention(2, "East Bank"),
        ]

        tables = dcfee_m_decode(doc, {"EP": [1]}, mentions, registry)

        assert [r.args["Pledger"] for r in tables["EP"]] == ["ZHANG WEI", "LIU FANG"]
        assert [r.args["Pledgee"] for r in tables["EP"]] == ["North Bank", "North Bank"]

    def test_outside_candidates_align_and_pad(self, registry: SchemaRegistry) -> None:
        doc = Document.from_text("d", ["aaaa", "bbbb", "cccc", "dddd"])
        mentions = [
            _mention(1, "ZHANG WEI", "EP.Pledger"),
            _mention(1, "LIU FANG", "EP.Pledger", start=14),
            _mention(1, "WANG LEI", "EP.Pledger", start=28),
            _mention(3, "South Bank"),
            _mention(2, "North Bank"),
        ]

        tables = dcfee_m_decode(doc, {"EP": [1]}, mentions, registry)

        assert [r.args["Pledgee"] for r in tables["EP"]] == ["North Bank", "South Bank", None]
