"""Main CLI entry point."""

from __future__ import annotations

import typer
from rich.console import Console

from doc2edag import observability
from doc2edag._version import __version__
from doc2edag.cli import config, data, inspect, predict, train
from doc2edag.cli._utils import setup_logging

app = typer.Typer(
    name="doc2edag",
    help="doc2edag - document-level event extraction to event tables.",
    no_args_is_help=True,
    rich_markup_mode="rich",
)

console = Console()

# Register sub-commands
app.command("gen")(data.gen)
app.command("label")(data.label)
app.command("train")(train.train_command)
app.command("predict")(predict.predict)
app.command("eval")(predict.eval_command)
app.command("inspect-edag")(inspect.inspect_edag)
app.add_typer(config.app, name="config", help="Configuration management")


@app.command()
def version() -> None:
    """Show version information."""
    console.print(f"doc2edag version {__version__}")


@app.callback()
def main(
    ctx: typer.Context,
    json_output: bool = typer.Option(
        False,
        "--json",
        "-j",
        help="Output in JSON format",
        is_eager=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress to stderr"),
    trace: bool = typer.Option(False, "--trace", help="Print OpenTelemetry spans of each stage"),
) -> None:
    """doc2edag - document-level event extraction to event tables."""
    ctx.ensure_object(dict)
    ctx.obj["json"] = json_output
    setup_logging(verbose)
    if trace:
        observability.configure(export="console")
        ctx.call_on_close(observability.shutdown)


if __name__ == "__main__":
    app()
