"""
doc2edag - document-level event extraction.

Distant labeling, entity-based DAG decoding and table-filling evaluation.
"""

from doc2edag._config import load_config
from doc2edag._version import __version__
from doc2edag.checkpoint import load_checkpoint, save_checkpoint
from doc2edag.corpus import generate_corpus, read_documents
from doc2edag.edag import edag_to_records, records_to_edag, render_tree
from doc2edag.evaluation import report
from doc2edag.exceptions import (
    CheckpointError,
    ConfigError,
    Doc2EdagError,
    EdagStructureError,
    EvaluationError,
    GenerationError,
    GradientError,
    InputError,
    InsufficientStatisticsError,
    NonDeterminismError,
    SchemaMismatchError,
    ShapeError,
    TapeError,
    TrainingError,
)
from doc2edag.labeling import label_corpus, label_document, read_labeled
from doc2edag.models.corpus import Document, EntityMention, EventRecord, KnowledgeBase
from doc2edag.models.edag import Edag, EdagNode
from doc2edag.models.evaluation import EvalReport
from doc2edag.models.labeling import LabeledDoc
from doc2edag.models.prediction import DocumentPrediction
from doc2edag.models.run import ModelConfig, RunConfig, TrainConfig
from doc2edag.models.schema import EventRole, EventTypeSpec, SchemaRegistry
from doc2edag.network import CharVocabulary, Doc2EdagModel
from doc2edag.schema import builtin_registry, desk_registry, load_registry
from doc2edag.training import predict_corpus, train

__all__ = [
    # Version
    "__version__",
    # Schema
    "EventRole",
    "EventTypeSpec",
    "SchemaRegistry",
    "builtin_registry",
    "desk_registry",
    "load_registry",
    # Corpus and labeling
    "Document",
    "EntityMention",
    "EventRecord",
    "KnowledgeBase",
    "LabeledDoc",
    "generate_corpus",
    "read_documents",
    "label_corpus",
    "label_document",
    "read_labeled",
    # EDAG
    "Edag",
    "EdagNode",
    "records_to_edag",
    "edag_to_records",
    "render_tree",
    # Model
    "CharVocabulary",
    "Doc2EdagModel",
    "DocumentPrediction",
    "ModelConfig",
    "TrainConfig",
    "RunConfig",
    "load_config",
    "train",
    "predict_corpus",
    "save_checkpoint",
    "load_checkpoint",
    # Evaluation
    "EvalReport",
    "report",
    # Exceptions
    "Doc2EdagError",
    "ConfigError",
    "SchemaMismatchError",
    "InsufficientStatisticsError",
    "GenerationError",
    "InputError",
    "ShapeError",
    "TapeError",
    "NonDeterminismError",
    "GradientError",
    "EdagStructureError",
    "CheckpointError",
    "TrainingError",
    "EvaluationError",
]
