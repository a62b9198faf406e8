"""Optimization loop and corpus-level prediction.

Adam over summed per-document losses, seeded batch order, validation by
the mean per-type event F1 and best-epoch selection.
"""

from __future__ import annotations

import json
import logging
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from doc2edag.checkpoint import save_checkpoint
from doc2edag.corpus import parse_rows, write_jsonl
from doc2edag.evaluation import mention_counts, report
from doc2edag.exceptions import GradientError, TrainingError
from doc2edag.layers import ForwardContext
from doc2edag.models.corpus import Document
from doc2edag.models.evaluation import EvalReport, SlotCounts
from doc2edag.models.labeling import LabeledDoc
from doc2edag.models.prediction import DocumentPrediction
from doc2edag.models.run import TrainConfig
from doc2edag.models.schema import SchemaRegistry
from doc2edag.network import Doc2EdagModel, LossBreakdown, scheduled_sampling_prob
from doc2edag.observability import track
from doc2edag.tensor import Tape, Tensor, add_scalars, backward

logger = logging.getLogger("doc2edag.training")

NamedParams = Sequence[tuple[str, Tensor]]


def split_seeds(seed: int) -> tuple[int, np.random.Generator]:
    """Independent streams for parameter init and for training randomness."""
    init, train = np.random.SeedSequence(seed).spawn(2)
    return int(init.generate_state(1)[0]), np.random.default_rng(train)


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First and second moments per parameter name, plus the step count."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def check_gradients(params: NamedParams) -> None:
    for name, tensor in params:
        if tensor.grad is not None and not np.isfinite(tensor.grad).all():
            raise GradientError(f"non-finite gradient for {name}", parameter=name)


def grad_norm(params: NamedParams) -> float:
    total = sum(float(np.sum(t.grad.astype(np.float64) ** 2)) for _, t in params if t.grad is not None)
    return math.sqrt(total)


def clip_gradients(params: NamedParams, max_norm: float) -> float:
    """Scale gradients so their global L2 norm is at most ``max_norm``; returns the prior norm."""
    norm = grad_norm(params)
    if norm > max_norm:
        factor = max_norm / (norm + 1e-12)
        for _, tensor in params:
            if tensor.grad is not None:
                tensor.grad = tensor.grad * factor
    return norm


def adam_step(
    params: NamedParams,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """One bias-corrected Adam update in place; parameters without a gradient are skipped.

    Raises:
        GradientError: A gradient holds NaN or infinity; nothing is updated.
    """
    check_gradients(params)
    state.step += 1
    t = state.step
    for name, tensor in params:
        if tensor.grad is None:
            continue
        g = tensor.grad.astype(np.float64)
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1 - beta1) * g if m is None else beta1 * m + (1 - beta1) * g
        v = (1 - beta2) * g * g if v is None else beta2 * v + (1 - beta2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        update = lr * m_hat / (np.sqrt(v_hat) + eps)
        tensor.data = (tensor.data - update).astype(tensor.data.dtype)
    return state


# ---------------------------------------------------------------------------
# Prediction and validation
# ---------------------------------------------------------------------------


@track(name="predict.corpus", ignore_arguments=["model", "documents"], capture_output=False)
def predict_corpus(
    model: Doc2EdagModel,
    documents: Sequence[Document],
    decoder: str = "doc2edag",
    threads: int = 1,
) -> list[DocumentPrediction]:
    """Predictions in input order; ``threads`` > 1 decodes documents concurrently."""
    if threads <= 1:
        return [model.predict(doc, decoder) for doc in documents]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda doc: model.predict(doc, decoder), documents))


def evaluate_predictions(
    predictions: Sequence[DocumentPrediction],
    gold: Sequence[LabeledDoc],
    registry: SchemaRegistry,
) -> EvalReport:
    """Table metric plus entity-mention counts for predictions against labeled gold."""
    mentions = SlotCounts()
    by_id = {ld.doc_id: ld for ld in gold}
    for pred in predictions:
        if pred.doc_id in by_id:
            mentions.add(mention_counts(pred.mentions, by_id[pred.doc_id].mentions()))
    decoder = predictions[0].decoder if predictions else None
    return report(
        {p.doc_id: p.tables for p in predictions},
        {ld.doc_id: ld.tables for ld in gold},
        registry,
        mentions=mentions,
        decoder=decoder,
    )


def evaluate_model(
    model: Doc2EdagModel, gold: Sequence[LabeledDoc], decoder: str = "doc2edag", threads: int = 1
) -> EvalReport:
    predictions = predict_corpus(model, [ld.doc for ld in gold], decoder, threads)
    return evaluate_predictions(predictions, gold, model.registry)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass
class RunState:
    """Progress of a training run."""

    epoch: int = 0
    step: int = 0
    best_score: float = -math.inf
    best_epoch: int | None = None
    best_checkpoint: Path | None = None
    best_params: dict[str, np.ndarray] = field(default_factory=dict)
    history: list[dict[str, Any]] = field(default_factory=list)


class MetricsLog:
    """Append-only JSONL metrics file; a no-op without a path."""

    def __init__(self, path: Path | None) -> None:
        self.path = path
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("")

    def write(self, row: dict[str, Any]) -> None:
        if self.path is None:
            return
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(row, sort_keys=True) + "\n")


def _snapshot(model: Doc2EdagModel) -> dict[str, np.ndarray]:
    return {name: t.data.copy() for name, t in model.named_parameters()}


def _restore(model: Doc2EdagModel, params: dict[str, np.ndarray]) -> None:
    for name, tensor in model.named_parameters():
        tensor.data = params[name].copy()


@track(name="train.epoch", ignore_arguments=["model", "train_set", "rng", "optimizer", "state", "metrics"])
def run_epoch(
    model: Doc2EdagModel,
    train_set: Sequence[LabeledDoc],
    config: TrainConfig,
    epoch: int,
    rng: np.random.Generator,
    optimizer: AdamState,
    state: RunState,
    metrics: MetricsLog,
) -> float:
    """One pass over shuffled batches; returns the summed logged loss."""
    params = list(model.named_parameters())
    order = rng.permutation(len(train_set))
    batches = [order[i : i + config.batch_size] for i in range(0, len(order), config.batch_size)]
    ctx = ForwardContext(train=True, rng=rng)
    ss_prob = scheduled_sampling_prob(epoch, model.config)
    epoch_loss = 0.0
    pending = 0
    step_parts: list[LossBreakdown] = []
    model.zero_grad()
    for batch_idx, batch in enumerate(batches):
        with Tape():
            parts = [
                model.compute_loss(
                    train_set[int(i)], epoch, ctx, use_key_sentence=config.key_sentence_loss
                )
                for i in batch
            ]
            objective = add_scalars([p.objective for p in parts])
        total = sum(p.total for p in parts)
        if not (math.isfinite(total) and math.isfinite(objective.item())):
            raise TrainingError(
                f"non-finite loss {total} at epoch {epoch}, batch {batch_idx}",
                epoch=epoch,
                batch=batch_idx,
            )
        backward(objective)
        pending += 1
        step_parts.extend(parts)
        if pending < config.accumulation_steps and batch_idx < len(batches) - 1:
            continue
        try:
            check_gradients(params)
        except GradientError as e:
            raise TrainingError(
                f"{e.message} at epoch {epoch}, batch {batch_idx}", epoch=epoch, batch=batch_idx
            ) from e
        norm = (
            clip_gradients(params, config.max_grad_norm)
            if config.max_grad_norm is not None
            else grad_norm(params)
        )
        adam_step(
            params,
            optimizer,
            config.learning_rate,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_eps,
        )
        model.zero_grad()
        pending = 0
        state.step += 1
        parts, step_parts = step_parts, []
        total = sum(p.total for p in parts)
        epoch_loss += total
        metrics.write(
            {
                "kind": "step",
                "epoch": epoch,
                "step": state.step,
                "batch": batch_idx,
                "documents": len(parts),
                "loss": total,
                "l_er": sum(p.er for p in parts),
                "l_tr": sum(p.tr for p in parts),
                "l_dag": sum(p.dag for p in parts),
                "l_key": sum(p.key for p in parts),
                "grad_norm": norm,
                "ss_prob": ss_prob,
                "gold_mentions": sum(p.used_gold_mentions for p in parts),
                "mention_mismatches": sum(p.mention_mismatches for p in parts),
            }
        )
    return epoch_loss


def train(
    model: Doc2EdagModel,
    train_set: Sequence[LabeledDoc],
    dev_set: Sequence[LabeledDoc],
    config: TrainConfig,
    *,
    out_dir: Path | None = None,
    rng: np.random.Generator | None = None,
    on_epoch: Callable[[int, float, float | None], None] | None = None,
) -> RunState:
    """Train ``model`` in place and leave it holding the best validated parameters.

    Writes ``metrics.jsonl``, ``best.ckpt`` and ``last.ckpt`` under
    ``out_dir`` when given.

    Raises:
        TrainingError: Empty splits, or a non-finite loss or gradient.
    """
    if not train_set:
        raise TrainingError("training set is empty")
    if not dev_set:
        raise TrainingError("development set is empty")
    if rng is None:
        rng = split_seeds(config.seed)[1]
    metrics = MetricsLog(out_dir / "metrics.jsonl" if out_dir is not None else None)
    optimizer = AdamState()
    state = RunState()
    logger.info(
        "training on %d documents (%d dev) for up to %d epochs",
        len(train_set),
        len(dev_set),
        config.max_epochs,
    )
    if config.max_grad_norm is None:
        logger.info("gradient clipping disabled; no learning-rate schedule")

    for epoch in range(config.max_epochs):
        started = time.perf_counter()
        state.epoch = epoch
        epoch_loss = run_epoch(model, train_set, config, epoch, rng, optimizer, state, metrics)
        score: float | None = None
        if (epoch + 1) % config.validate_every == 0 or epoch == config.max_epochs - 1:
            dev_report = evaluate_model(model, dev_set)
            score = dev_report.mean_f1
            improved = score > state.best_score
            if improved:
                state.best_score, state.best_epoch = score, epoch
                state.best_params = _snapshot(model)
                if out_dir is not None:
                    state.best_checkpoint = out_dir / "best.ckpt"
                    save_checkpoint(model, state.best_checkpoint, {"epoch": epoch, "dev_mean_f1": score})
            metrics.write(
                {
                    "kind": "validation",
                    "epoch": epoch,
                    "dev_mean_f1": score,
                    "dev_micro_f1": dev_report.overall.f1,
                    "best": improved,
                }
            )
        elapsed = time.perf_counter() - started
        state.history.append({"epoch": epoch, "loss": epoch_loss, "dev_mean_f1": score, "seconds": elapsed})
        logger.info(
            "epoch %d: loss %.4f%s (%.1fs)",
            epoch,
            epoch_loss,
            f", dev mean F1 {score:.4f}" if score is not None else "",
            elapsed,
        )
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss, score)

    if out_dir is not None:
        save_checkpoint(model, out_dir / "last.ckpt", {"epoch": state.epoch})
    if state.best_params:
        _restore(model, state.best_params)
    logger.info("best epoch %s with dev mean F1 %.4f", state.best_epoch, state.best_score)
    return state


def write_predictions(path: Path, predictions: Sequence[DocumentPrediction]) -> None:
    write_jsonl(path, (p.to_jsonl_dict() for p in predictions))


def read_predictions(path: Path) -> list[DocumentPrediction]:
    return parse_rows(path, DocumentPrediction.model_validate)
