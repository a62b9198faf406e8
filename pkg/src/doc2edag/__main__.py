"""Entry point for python -m doc2edag."""

from doc2edag.cli import app

if __name__ == "__main__":
    app()
