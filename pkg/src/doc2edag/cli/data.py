"""Corpus CLI commands: generation and labeling."""

from __future__ import annotations

from pathlib import Path

import typer

from doc2edag._config import load_config
from doc2edag.cli._utils import (
    ManifestRecorder,
    console,
    get_json_flag,
    handle_error,
    manifest_path,
    output_json,
    output_table,
)
from doc2edag.corpus import (
    generate_corpus,
    multi_event_ratio,
    read_documents,
    read_knowledge_base,
    write_documents,
    write_knowledge_base,
)
from doc2edag.exceptions import Doc2EdagError
from doc2edag.labeling import label_corpus, labeling_quality, write_labeled
from doc2edag.schema import load_registry


def _generator_flags(seed: int | None, num_docs: int | None, mer: float | None) -> list[str]:
    """Dedicated generator flags as overrides; applied after ``--set`` so they win."""
    flags = {"seed": seed, "num_docs": num_docs, "multi_event_ratio": mer}
    return [f"generator.{key}={value}" for key, value in flags.items() if value is not None]


def gen(
    ctx: typer.Context,
    out_dir: Path = typer.Option(..., "--out-dir", "-o", help="Directory for documents.jsonl and kb.jsonl"),
    schema: Path | None = typer.Option(None, "--schema", help="Schema TOML (default: built-in types)"),
    config: Path | None = typer.Option(None, "--config", "-c", help="Run config TOML"),
    overrides: list[str] | None = typer.Option(None, "--set", help="Override as key=value"),
    seed: int | None = typer.Option(None, "--seed", help="Generator seed"),
    num_docs: int | None = typer.Option(None, "--num-docs", min=1, help="Number of documents"),
    mer: float | None = typer.Option(
        None, "--mer", min=0.0, max=1.0, help="Target share of multi-event documents"
    ),
) -> None:
    """Generate a synthetic announcement corpus with its knowledge base.

    ``--seed``, ``--num-docs`` and ``--mer`` take precedence over ``--set``
    and the config file.

    Example:
        doc2edag gen --seed 3 --num-docs 50 --mer 0.3 -o data --schema profiles/desk_schema.toml
    """
    recorder = ManifestRecorder(
        "gen",
        {
            "out_dir": out_dir,
            "schema": schema,
            "config": config,
            "set": overrides,
            "seed": seed,
            "num_docs": num_docs,
            "mer": mer,
        },
    )
    try:
        run_config = load_config(config, [*(overrides or []), *_generator_flags(seed, num_docs, mer)])
        registry = load_registry(schema)
        recorder.config(run_config)
        recorder.inputs(schema, config)
        with recorder.timed("generate"):
            documents, kb = generate_corpus(run_config.generator, registry)
        write_documents(out_dir / "documents.jsonl", documents)
        write_knowledge_base(out_dir / "kb.jsonl", kb)
        summary = {
            "documents": len(documents),
            "records": sum(len(r) for r in kb.records.values()),
            "multi_event_documents": sum(len(r) > 1 for r in kb.records.values()),
            "multi_event_ratio": multi_event_ratio(kb),
        }
        recorder.manifest.seed = run_config.generator.seed
        recorder.manifest.notes = summary
        recorder.write(manifest_path(out_dir, "gen"))
    except Doc2EdagError as e:
        handle_error(e)
        return

    if get_json_flag(ctx):
        output_json(summary)
    else:
        console.print(
            f"[green]Generated {summary['documents']} documents[/green] "
            f"({summary['records']} records, MER {summary['multi_event_ratio']:.2f}) in {out_dir}"
        )


def label(
    ctx: typer.Context,
    corpus: Path = typer.Option(..., "--corpus", help="documents.jsonl"),
    kb: Path = typer.Option(..., "--kb", help="Knowledge base JSONL"),
    out: Path = typer.Option(..., "--out", "-o", help="Labeled corpus JSONL"),
    schema: Path | None = typer.Option(None, "--schema", help="Schema TOML (default: built-in types)"),
    config: Path | None = typer.Option(None, "--config", "-c", help="Run config TOML"),
    overrides: list[str] | None = typer.Option(None, "--set", help="Override as key=value"),
    truth: Path | None = typer.Option(None, "--truth", help="Reference KB to score the labels against"),
    threads: int = typer.Option(1, "--threads", min=1, help="Documents labeled in parallel"),
) -> None:
    """Distantly label a corpus against a knowledge base.

    Documents are truncated to the configured sentence limits first.

    Example:
        doc2edag label --corpus data/documents.jsonl --kb data/kb.jsonl -o data/labels.jsonl
    """
    recorder = ManifestRecorder(
        "label",
        {
            "corpus": corpus,
            "kb": kb,
            "out": out,
            "schema": schema,
            "config": config,
            "set": overrides,
            "threads": threads,
        },
    )
    try:
        run_config = load_config(config, overrides)
        registry = load_registry(schema)
        recorder.config(run_config)
        recorder.inputs(corpus, kb, schema, config, truth)
        documents = read_documents(corpus)
        knowledge = read_knowledge_base(kb)
        with recorder.timed("label"):
            labeled, stats = label_corpus(
                documents,
                knowledge,
                registry,
                max_sents=run_config.model.max_sents,
                max_len=run_config.model.max_sent_len,
                threads=threads,
            )
        write_labeled(out, labeled)
        quality = labeling_quality(labeled, read_knowledge_base(truth), registry) if truth else None
        recorder.manifest.notes = {"stats": stats.to_json_dict()}
        recorder.write(manifest_path(out, "label"))
    except Doc2EdagError as e:
        handle_error(e)
        return

    if get_json_flag(ctx):
        output_json({"stats": stats.to_json_dict(), "multi_event_ratio": stats.multi_event_ratio,
                     "quality": quality.to_json_dict() if quality else None})
        return
    rows = [{"type": code, **s.to_json_dict()} for code, s in stats.per_type.items()]
    output_table(
        rows,
        [
            ("type", "Type"),
            ("candidates", "Candidates"),
            ("retained", "Retained"),
            ("dropped", "Dropped"),
            ("documents", "Docs"),
            ("multi_event_documents", "Multi-event docs"),
        ],
        title=f"Labeled {stats.documents} documents",
    )
    console.print(
        f"MER {stats.multi_event_ratio:.3f}; {stats.tag_conflicts} tag conflict(s); "
        f"{stats.lost_to_truncation} argument(s) lost to truncation"
    )
    if quality is not None:
        console.print(
            f"Label quality vs truth: P {quality.overall.precision:.4f} "
            f"R {quality.overall.recall:.4f} F1 {quality.overall.f1:.4f}"
        )
