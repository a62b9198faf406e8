"""EDAG inspection CLI command."""

from __future__ import annotations

from pathlib import Path

import typer

from doc2edag.cli._utils import console, get_json_flag, handle_error, output_json
from doc2edag.corpus import read_documents
from doc2edag.edag import load_edag, records_to_edag, render_tree
from doc2edag.exceptions import ConfigError, Doc2EdagError
from doc2edag.labeling import read_labeled
from doc2edag.models.edag import Edag
from doc2edag.models.schema import EventTypeSpec, SchemaRegistry
from doc2edag.schema import load_registry


def _spec(registry: SchemaRegistry, code: str) -> EventTypeSpec:
    try:
        return registry.get(code)
    except KeyError:
        raise ConfigError(f"event type {code} is not in the schema", key="schema") from None


def inspect_edag(
    ctx: typer.Context,
    path: Path = typer.Argument(..., help="EDAG JSON file, or a labeled corpus JSONL"),
    doc_id: str | None = typer.Option(None, "--doc-id", help="Document to show (labeled corpus only)"),
    corpus: Path | None = typer.Option(None, "--corpus", help="documents.jsonl (labeled corpus only)"),
    schema: Path | None = typer.Option(None, "--schema", help="Schema TOML (default: built-in types)"),
) -> None:
    """Render an EDAG as an indented tree.

    Examples:
        doc2edag inspect-edag edag.json
        doc2edag inspect-edag data/labels.jsonl --doc-id doc-000003 --corpus data/documents.jsonl
    """
    try:
        registry = load_registry(schema)
        edags: list[Edag]
        if path.suffix == ".jsonl":
            if doc_id is None or corpus is None:
                raise ConfigError("a labeled corpus needs --doc-id and --corpus", key="doc_id")
            documents = {doc.doc_id: doc for doc in read_documents(corpus)}
            labeled = next((ld for ld in read_labeled(path, documents) if ld.doc_id == doc_id), None)
            if labeled is None:
                raise ConfigError(f"document {doc_id} is not in {path}", key="doc_id")
            edags = [
                records_to_edag(records, _spec(registry, code))
                for code, records in labeled.tables.items()
                if records
            ]
        else:
            edags = [load_edag(path)]
        specs = [_spec(registry, edag.event_type) for edag in edags]
        for edag, spec in zip(edags, specs):
            if sorted(edag.role_order) != list(range(len(spec.roles))):
                raise ConfigError(
                    f"EDAG role order {edag.role_order} does not fit the {spec.code} roles",
                    key="schema",
                )
    except Doc2EdagError as e:
        handle_error(e)
        return

    if get_json_flag(ctx):
        output_json([edag.to_json_dict() for edag in edags])
        return
    if not edags:
        console.print("[dim]No event records[/dim]")
    for edag, spec in zip(edags, specs):
        console.print(render_tree(edag, spec), markup=False, highlight=False)
