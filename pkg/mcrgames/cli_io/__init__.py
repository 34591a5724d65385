"""
Artifact files and the command-line interface.

Usage:
    from mcrgames.cli_io import cli, formats
"""
from mcrgames.cli_io import formats
from mcrgames.cli_io.commands import cli

__all__ = ["cli", "formats"]
