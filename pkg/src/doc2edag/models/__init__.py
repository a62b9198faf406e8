"""Pydantic models for doc2edag."""

from doc2edag.models.common import DataModel, FrozenModel
from doc2edag.models.corpus import (
    Document,
    EntityMention,
    EventRecord,
    GeneratorConfig,
    KnowledgeBase,
    Lexicons,
)
from doc2edag.models.edag import Edag, EdagNode
from doc2edag.models.evaluation import (
    EvalReport,
    MentionReport,
    RoleStats,
    ScoreLine,
    SlotCounts,
    SubsetReport,
    TypeReport,
)
from doc2edag.models.labeling import (
    LabeledDoc,
    LabelingDiagnostics,
    LabelingStats,
    MatchResult,
    TypeLabelingStats,
)
from doc2edag.models.prediction import DocumentPrediction, PredictionDiagnostics
from doc2edag.models.run import ModelConfig, RunConfig, RunManifest, TrainConfig
from doc2edag.models.schema import EventRole, EventTypeSpec, SchemaRegistry

__all__ = [
    "DataModel",
    "FrozenModel",
    # Schema
    "EventRole",
    "EventTypeSpec",
    "SchemaRegistry",
    # Corpus
    "Document",
    "EntityMention",
    "EventRecord",
    "GeneratorConfig",
    "KnowledgeBase",
    "Lexicons",
    # Labeling
    "LabeledDoc",
    "LabelingDiagnostics",
    "LabelingStats",
    "MatchResult",
    "TypeLabelingStats",
    # EDAG
    "Edag",
    "EdagNode",
    # Evaluation
    "EvalReport",
    "MentionReport",
    "RoleStats",
    "ScoreLine",
    "SlotCounts",
    "SubsetReport",
    "TypeReport",
    # Predictions
    "DocumentPrediction",
    "PredictionDiagnostics",
    # Runs
    "ModelConfig",
    "RunConfig",
    "RunManifest",
    "TrainConfig",
]
