"""doc2edag command-line interface."""

from doc2edag.cli.main import app

__all__ = ["app"]
