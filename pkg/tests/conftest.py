"""Pytest configuration and fixtures."""

from __future__ import annotations

import logging

import pytest

from doc2edag.corpus import generate_corpus
from doc2edag.labeling import label_corpus
from doc2edag.models.corpus import Document, EventRecord, GeneratorConfig, KnowledgeBase
from doc2edag.models.labeling import LabeledDoc
from doc2edag.models.run import ModelConfig, TrainConfig
from doc2edag.models.schema import SchemaRegistry
from doc2edag.network import CharVocabulary, Doc2EdagModel
from doc2edag.schema import desk_registry


@pytest.fixture(autouse=True)
def _restore_logging():
    """CLI runs reroute the package logger; put it back after each test."""
    yield
    logger = logging.getLogger("doc2edag")
    logger.handlers.clear()
    logger.setLevel(logging.NOTSET)
    logger.propagate = True


@pytest.fixture
def registry() -> SchemaRegistry:
    """Two-type desk schema (EP, EU)."""
    return desk_registry()


@pytest.fixture
def tiny_config() -> ModelConfig:
    """Network small enough for finite-difference checks."""
    return ModelConfig(
        d_w=8,
        num_layers=1,
        num_heads=2,
        ff_dim=16,
        max_sents=8,
        max_sent_len=40,
        dropout=0.0,
        ss_start_epoch=0,
        ss_end_epoch=0,
        frontier_cap=8,
    )


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(learning_rate=1e-2, batch_size=2, max_epochs=2, seed=0)


@pytest.fixture
def pledge_doc() -> Document:
    """Hand-written two-record pledge announcement."""
    return Document.from_text(
        "doc-pledge",
        [
            "Announcement: Equity Pledge.",
            "ZHANG WEI pledged 1,000 shares to North Bank.",
            "LIU FANG pledged 2,000 shares to North Bank.",
            "The pledge started on 2019-01-02.",
        ],
    )


@pytest.fixture
def pledge_records() -> list[EventRecord]:
    return [
        EventRecord(
            event_type="EP",
            args={
                "Pledger": "ZHANG WEI",
                "Pledged Shares": "1,000",
                "Pledgee": "North Bank",
                "Start Date": "2019-01-02",
                "End Date": None,
            },
        ),
        EventRecord(
            event_type="EP",
            args={
                "Pledger": "LIU FANG",
                "Pledged Shares": "2,000",
                "Pledgee": "North Bank",
                "Start Date": "2019-01-02",
                "End Date": None,
            },
        ),
    ]


@pytest.fixture
def small_corpus(registry: SchemaRegistry) -> tuple[list[Document], KnowledgeBase]:
    """Twelve generated desk documents."""
    cfg = GeneratorConfig(seed=7, num_docs=12, multi_event_ratio=0.5, max_sentence_chars=40)
    return generate_corpus(cfg, registry)


@pytest.fixture
def labeled_corpus(
    small_corpus: tuple[list[Document], KnowledgeBase],
    registry: SchemaRegistry,
    tiny_config: ModelConfig,
) -> list[LabeledDoc]:
    documents, kb = small_corpus
    labeled, _ = label_corpus(
        documents, kb, registry, max_sents=tiny_config.max_sents, max_len=tiny_config.max_sent_len
    )
    return labeled


@pytest.fixture
def tiny_model(
    tiny_config: ModelConfig, registry: SchemaRegistry, labeled_corpus: list[LabeledDoc]
) -> Doc2EdagModel:
    vocab = CharVocabulary.build(ld.doc for ld in labeled_corpus)
    return Doc2EdagModel(tiny_config, registry, vocab, seed=0)
