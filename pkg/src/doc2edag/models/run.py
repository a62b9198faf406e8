"""Run configuration and manifest models."""

from __future__ import annotations

from datetime import datetime
from typing import Any, Literal

from pydantic import Field, PositiveFloat, PositiveInt, model_validator

from doc2edag.models.common import DataModel
from doc2edag.models.corpus import GeneratorConfig


class ModelConfig(DataModel):
    """Network sizes, loss weights and decoding thresholds.

    Defaults are the full-scale hyper-parameters; the desk profile shrinks
    the sizes.
    """

    d_w: PositiveInt = 768
    vocab_size: int = Field(default=0, ge=0)
    max_sents: PositiveInt = 64
    max_sent_len: PositiveInt = 128
    num_layers: PositiveInt = 4
    ff_dim: PositiveInt = 1024
    num_heads: PositiveInt = 8
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    lambda_er: PositiveFloat = 0.05
    lambda_tr: PositiveFloat = 0.95
    lambda_dag: PositiveFloat = 0.95
    gamma: float = Field(default=3.0, ge=1.0)
    ss_start_epoch: int = Field(default=10, ge=0)
    ss_end_epoch: int = Field(default=20, ge=0)
    ss_start_prob: float = Field(default=1.0, ge=0.0, le=1.0)
    ss_end_prob: float = Field(default=0.1, ge=0.0, le=1.0)
    trigger_threshold: float = Field(default=0.5, gt=0.0, lt=1.0)
    type_thresholds: dict[str, float] = Field(default_factory=dict)
    expand_threshold: float = Field(default=0.5, gt=0.0, lt=1.0)
    frontier_cap: PositiveInt = 64
    use_doc_encoder: bool = True
    use_path_memory: bool = True

    @model_validator(mode="after")
    def _check_shapes(self) -> ModelConfig:
        if self.d_w % self.num_heads:
            raise ValueError(f"d_w {self.d_w} is not divisible by num_heads {self.num_heads}")
        if self.ss_end_epoch < self.ss_start_epoch:
            raise ValueError("ss_end_epoch must not precede ss_start_epoch")
        return self

    def trigger_threshold_for(self, code: str) -> float:
        return self.type_thresholds.get(code, self.trigger_threshold)


class TrainConfig(DataModel):
    """Optimizer, schedule and run-management settings."""

    learning_rate: PositiveFloat = 1e-4
    batch_size: PositiveInt = 4
    accumulation_steps: PositiveInt = 1
    max_epochs: PositiveInt = 100
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: PositiveFloat = 1e-8
    seed: int = 0
    loss_reduction: Literal["sum"] = "sum"
    validate_every: PositiveInt = 1
    max_grad_norm: PositiveFloat | None = None
    role_order: Literal["ratio", "declaration", "random"] = "ratio"
    key_sentence_loss: bool = True


class RunConfig(DataModel):
    """The resolved configuration of one command."""

    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)


class RunManifest(DataModel):
    """What a command ran with: enough to re-run it."""

    command: str
    arguments: dict[str, Any] = Field(default_factory=dict)
    config: dict[str, Any] = Field(default_factory=dict)
    input_digests: dict[str, str] = Field(default_factory=dict)
    seed: int | None = None
    version: str
    started_at: datetime
    finished_at: datetime | None = None
    timings: dict[str, float] = Field(default_factory=dict)
    notes: dict[str, Any] = Field(default_factory=dict)
