"""Prediction and evaluation CLI commands."""

from __future__ import annotations

from enum import Enum
from pathlib import Path

import typer

from doc2edag.checkpoint import load_checkpoint
from doc2edag.cli._utils import (
    ManifestRecorder,
    console,
    get_json_flag,
    handle_error,
    manifest_path,
    output_json,
    output_table,
)
from doc2edag.corpus import read_documents
from doc2edag.exceptions import Doc2EdagError
from doc2edag.labeling import read_labeled
from doc2edag.models.evaluation import EvalReport, SubsetReport
from doc2edag.schema import load_registry
from doc2edag.training import evaluate_predictions, predict_corpus, read_predictions, write_predictions


class Decoder(str, Enum):
    doc2edag = "doc2edag"
    greedy = "greedy"
    dcfee_o = "dcfee-o"
    dcfee_m = "dcfee-m"


def predict(
    ctx: typer.Context,
    checkpoint: Path = typer.Option(..., "--checkpoint", help="Model checkpoint"),
    corpus: Path = typer.Option(..., "--corpus", help="documents.jsonl"),
    out: Path = typer.Option(..., "--out", "-o", help="Predictions JSONL"),
    decoder: Decoder = typer.Option(Decoder.doc2edag, "--decoder", help="Table decoder"),
    threads: int = typer.Option(1, "--threads", min=1, help="Documents decoded in parallel"),
    schema: Path | None = typer.Option(
        None, "--schema", help="Schema TOML that must match the checkpoint's"
    ),
) -> None:
    """Fill event tables for every document of a corpus.

    Example:
        doc2edag predict --checkpoint runs/desk/best.ckpt --corpus data/test.jsonl -o preds.jsonl
    """
    recorder = ManifestRecorder(
        "predict",
        {
            "checkpoint": checkpoint,
            "corpus": corpus,
            "out": out,
            "decoder": decoder.value,
            "threads": threads,
            "schema": schema,
        },
    )
    try:
        registry = load_registry(schema) if schema is not None else None
        recorder.inputs(checkpoint, corpus, schema)
        model = load_checkpoint(checkpoint, registry)
        model.freeze()
        recorder.manifest.config = {"model": model.config.model_dump(mode="json")}
        documents = read_documents(corpus)
        with recorder.timed("predict"):
            predictions = predict_corpus(model, documents, decoder.value, threads)
        write_predictions(out, predictions)
        summary = {
            "documents": len(predictions),
            "records": sum(sum(len(r) for r in p.tables.values()) for p in predictions),
            "frontier_truncations": sum(p.diagnostics.frontier_truncations for p in predictions),
        }
        recorder.manifest.notes = summary
        recorder.write(manifest_path(out, "predict"))
    except Doc2EdagError as e:
        handle_error(e)
        return

    if get_json_flag(ctx):
        output_json(summary)
    else:
        console.print(
            f"[green]Predicted {summary['records']} records[/green] for "
            f"{summary['documents']} documents ({decoder.value}) -> {out}"
        )


def _subset_rows(subset: SubsetReport) -> list[dict[str, object]]:
    rows: list[dict[str, object]] = [
        {"type": code, "precision": t.precision, "recall": t.recall, "f1": t.f1, "tp": t.tp, "fp": t.fp, "fn": t.fn}
        for code, t in subset.types.items()
    ]
    o = subset.overall
    rows.append(
        {"type": "micro", "precision": o.precision, "recall": o.recall, "f1": o.f1, "tp": o.tp, "fp": o.fp, "fn": o.fn}
    )
    rows.append({"type": "mean F1", "f1": subset.mean_f1})
    return rows


def print_report(result: EvalReport) -> None:
    columns = [
        ("type", "Type"),
        ("precision", "P"),
        ("recall", "R"),
        ("f1", "F1"),
        ("tp", "TP"),
        ("fp", "FP"),
        ("fn", "FN"),
    ]
    output_table(_subset_rows(result), columns, title=f"All documents ({result.documents})")
    output_table(_subset_rows(result.single), columns, title=f"Single-event ({result.single.documents})")
    output_table(_subset_rows(result.multi), columns, title=f"Multi-event ({result.multi.documents})")
    if result.mentions is not None:
        m = result.mentions
        console.print(f"Entity mentions: P {m.precision:.4f} R {m.recall:.4f} F1 {m.f1:.4f}")


def eval_command(
    ctx: typer.Context,
    pred: Path = typer.Option(..., "--pred", help="Predictions JSONL"),
    gold: Path = typer.Option(..., "--gold", help="Labeled gold corpus JSONL"),
    corpus: Path = typer.Option(..., "--corpus", help="documents.jsonl the labels refer to"),
    schema: Path | None = typer.Option(None, "--schema", help="Schema TOML (default: built-in types)"),
    out: Path | None = typer.Option(None, "--out", "-o", help="Write the report as JSON"),
) -> None:
    """Score predictions with the event-table-filling metric.

    Example:
        doc2edag eval --pred preds.jsonl --gold data/labels.jsonl --corpus data/documents.jsonl
    """
    recorder = ManifestRecorder(
        "eval", {"pred": pred, "gold": gold, "corpus": corpus, "schema": schema, "out": out}
    )
    try:
        registry = load_registry(schema)
        recorder.inputs(pred, gold, corpus, schema)
        documents = {doc.doc_id: doc for doc in read_documents(corpus)}
        gold_docs = read_labeled(gold, documents)
        predictions = read_predictions(pred)
        with recorder.timed("eval"):
            result = evaluate_predictions(predictions, gold_docs, registry)
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(result.model_dump_json(indent=2) + "\n")
        recorder.manifest.notes = {"mean_f1": result.mean_f1, "micro_f1": result.overall.f1}
        recorder.write(manifest_path(out if out is not None else pred, "eval"))
    except Doc2EdagError as e:
        handle_error(e)
        return

    if get_json_flag(ctx):
        output_json(result)
    else:
        print_report(result)
