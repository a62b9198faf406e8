"""CLI utilities."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from doc2edag._version import __version__
from doc2edag.exceptions import Doc2EdagError
from doc2edag.models.run import RunConfig, RunManifest

console = Console()
error_console = Console(stderr=True)


def setup_logging(verbose: bool) -> None:
    """Route the ``doc2edag`` loggers to stderr through rich."""
    logger = logging.getLogger("doc2edag")
    logger.handlers.clear()
    handler = RichHandler(console=error_console, show_path=False, rich_tracebacks=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False


def output_json(data: Any) -> None:
    """Output data as JSON."""
    if hasattr(data, "model_dump"):
        data = data.model_dump(mode="json")
    elif isinstance(data, list) and data and hasattr(data[0], "model_dump"):
        data = [item.model_dump(mode="json") for item in data]

    console.print_json(json.dumps(data, default=str))


def output_table(
    rows: list[dict[str, Any]],
    columns: list[tuple[str, str]],
    title: str | None = None,
) -> None:
    """Output rows as a Rich table.

    Args:
        rows: One dict per row
        columns: List of (key, header) tuples
        title: Optional table title
    """
    table = Table(title=title, show_header=True, header_style="bold")
    for _, header in columns:
        table.add_column(header)
    for row in rows:
        cells = []
        for key, _ in columns:
            value = row.get(key)
            if value is None:
                cells.append("-")
            elif isinstance(value, float):
                cells.append(f"{value:.4f}")
            else:
                cells.append(str(value))
        table.add_row(*cells)
    console.print(table)


def handle_error(e: Exception) -> None:
    """Print a categorized error line and exit with status 1."""
    if isinstance(e, Doc2EdagError):
        error_console.print(f"[red]Error ({e.category}):[/red] {e.message}")
    else:
        error_console.print(f"[red]Error:[/red] {e}")

    raise typer.Exit(1)


def get_json_flag(ctx: typer.Context) -> bool:
    """Get JSON output flag from context."""
    return ctx.obj.get("json", False) if ctx.obj else False


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class ManifestRecorder:
    """Collects what one command ran with and writes it as a RunManifest."""

    def __init__(self, command: str, arguments: dict[str, Any]) -> None:
        self.manifest = RunManifest(
            command=command,
            arguments={k: (str(v) if isinstance(v, Path) else v) for k, v in arguments.items()},
            version=__version__,
            started_at=datetime.now(timezone.utc),
        )

    def config(self, config: RunConfig) -> None:
        self.manifest.config = config.model_dump(mode="json")
        self.manifest.seed = config.train.seed

    def inputs(self, *paths: Path | None) -> None:
        # missing files are left for the readers to report
        for path in paths:
            if path is not None and path.is_file():
                self.manifest.input_digests[str(path)] = file_digest(path)

    @contextmanager
    def timed(self, stage: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        finally:
            self.manifest.timings[stage] = round(time.perf_counter() - started, 6)

    def write(self, path: Path) -> None:
        self.manifest.finished_at = datetime.now(timezone.utc)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.manifest.to_json_dict(), indent=2, sort_keys=True) + "\n")


def manifest_path(output: Path, command: str) -> Path:
    """``<dir>/manifest.<command>.json`` for a directory, else beside the file."""
    if output.suffix == "" or output.is_dir():
        return output / f"manifest.{command}.json"
    return output.with_name(f"{output.name}.manifest.json")
