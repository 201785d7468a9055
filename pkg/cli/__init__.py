"""Command-line interface for generating tags, sifting, curves and comparisons."""

from .commands import cli

__all__ = ["cli"]
