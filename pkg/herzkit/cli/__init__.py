"""Command-line interface."""

from herzkit.cli.commands import build_parser, main

__all__ = ["build_parser", "main"]
