"""Configuration CLI commands."""

from __future__ import annotations

from pathlib import Path

import typer

from doc2edag._config import config_to_dict, config_to_toml, load_config
from doc2edag.cli._utils import console, get_json_flag, handle_error, output_json
from doc2edag.exceptions import Doc2EdagError

app = typer.Typer(help="Configuration management.")


@app.command("show")
def show(
    ctx: typer.Context,
    config: Path | None = typer.Option(None, "--config", "-c", help="Run config TOML"),
    overrides: list[str] | None = typer.Option(None, "--set", help="Override as key=value"),
) -> None:
    """Print the resolved configuration (overrides > file > EDAG_SEED > defaults).

    Example:
        doc2edag config show -c profiles/desk.toml --set d_w=16
    """
    try:
        resolved = load_config(config, overrides)
    except Doc2EdagError as e:
        handle_error(e)
        return

    if get_json_flag(ctx):
        output_json(config_to_dict(resolved))
    else:
        console.print(config_to_toml(resolved), markup=False, highlight=False)
