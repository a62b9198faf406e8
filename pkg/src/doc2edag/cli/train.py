"""Training CLI command."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import typer

from doc2edag._config import load_config, save_config
from doc2edag.cli._utils import (
    ManifestRecorder,
    console,
    get_json_flag,
    handle_error,
    manifest_path,
    output_json,
)
from doc2edag.corpus import read_documents
from doc2edag.exceptions import Doc2EdagError, TrainingError
from doc2edag.labeling import read_labeled
from doc2edag.models.labeling import LabeledDoc
from doc2edag.network import CharVocabulary, Doc2EdagModel
from doc2edag.schema import apply_role_order, load_registry
from doc2edag.training import evaluate_model, split_seeds, train


def split_dev(
    labeled: list[LabeledDoc], fraction: float, seed: int
) -> tuple[list[LabeledDoc], list[LabeledDoc]]:
    """Seeded train/dev split; the dev side gets at least one document."""
    if len(labeled) < 2:
        raise TrainingError("need at least two labeled documents to hold out a dev split")
    order = np.random.default_rng(seed).permutation(len(labeled))
    n_dev = min(len(labeled) - 1, max(1, int(round(fraction * len(labeled)))))
    dev_idx = set(int(i) for i in order[:n_dev])
    train_set = [ld for i, ld in enumerate(labeled) if i not in dev_idx]
    dev_set = [ld for i, ld in enumerate(labeled) if i in dev_idx]
    return train_set, dev_set


def train_command(
    ctx: typer.Context,
    corpus: Path = typer.Option(..., "--corpus", help="documents.jsonl"),
    labels: Path = typer.Option(..., "--labels", help="Labeled training corpus JSONL"),
    out_dir: Path = typer.Option(..., "--out-dir", "-o", help="Run directory"),
    dev_labels: Path | None = typer.Option(None, "--dev-labels", help="Labeled dev corpus JSONL"),
    dev_fraction: float = typer.Option(0.1, "--dev-fraction", help="Held-out share when --dev-labels is absent"),
    schema: Path | None = typer.Option(None, "--schema", help="Schema TOML (default: built-in types)"),
    config: Path | None = typer.Option(None, "--config", "-c", help="Run config TOML"),
    overrides: list[str] | None = typer.Option(None, "--set", help="Override as key=value"),
) -> None:
    """Train a model and keep the checkpoint with the best dev score.

    Example:
        doc2edag train --corpus data/documents.jsonl --labels data/labels.jsonl \\
            -o runs/desk --schema profiles/desk_schema.toml -c profiles/desk.toml
    """
    recorder = ManifestRecorder(
        "train",
        {
            "corpus": corpus,
            "labels": labels,
            "out_dir": out_dir,
            "dev_labels": dev_labels,
            "dev_fraction": dev_fraction,
            "schema": schema,
            "config": config,
            "set": overrides,
        },
    )
    try:
        run_config = load_config(config, overrides)
        registry = load_registry(schema)
        recorder.config(run_config)
        recorder.inputs(corpus, labels, dev_labels, schema, config)
        documents = {doc.doc_id: doc for doc in read_documents(corpus)}
        labeled = read_labeled(labels, documents)
        seed = run_config.train.seed
        if dev_labels is not None:
            train_set, dev_set = labeled, read_labeled(dev_labels, documents)
        else:
            train_set, dev_set = split_dev(labeled, dev_fraction, seed)

        apply_role_order(registry, train_set, run_config.train.role_order, seed)
        init_seed, rng = split_seeds(seed)
        model = Doc2EdagModel(
            run_config.model, registry, CharVocabulary.build(ld.doc for ld in train_set), init_seed
        )
        save_config(run_config, out_dir / "config.toml")

        def progress(epoch: int, loss: float, score: float | None) -> None:
            if not get_json_flag(ctx):
                suffix = f"  dev mean F1 {score:.4f}" if score is not None else ""
                console.print(f"epoch {epoch:3d}  loss {loss:10.4f}{suffix}")

        with recorder.timed("train"):
            state = train(
                model, train_set, dev_set, run_config.train, out_dir=out_dir, rng=rng, on_epoch=progress
            )
        with recorder.timed("final_eval"):
            report = evaluate_model(model, dev_set)
        (out_dir / "report.json").write_text(report.model_dump_json(indent=2) + "\n")
        recorder.manifest.notes = {
            "best_epoch": state.best_epoch,
            "best_dev_mean_f1": state.best_score,
            "train_documents": len(train_set),
            "dev_documents": len(dev_set),
            "max_grad_norm": run_config.train.max_grad_norm,
            "lr_schedule": None,
        }
        recorder.write(manifest_path(out_dir, "train"))
    except Doc2EdagError as e:
        handle_error(e)
        return

    if get_json_flag(ctx):
        output_json({"best_epoch": state.best_epoch, "best_dev_mean_f1": state.best_score, "out_dir": str(out_dir)})
    else:
        console.print(
            f"[green]Best epoch {state.best_epoch}[/green] with dev mean F1 {state.best_score:.4f}; "
            f"checkpoint {state.best_checkpoint}"
        )
