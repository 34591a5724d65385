"""
Entry point for the mcrgames command-line interface.

This script exposes the click command group defined in mcrgames.cli_io, so the
solver can be driven without installing the package.

Usage:
    python run.py validate tests/fixtures/pennies.json
    python run.py --threads 4 grid bench --houses 3 --tasks 2 --cases 10 --seed 7
"""
from mcrgames.cli_io import cli

if __name__ == "__main__":
    cli()
