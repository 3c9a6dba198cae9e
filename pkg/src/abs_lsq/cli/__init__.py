"""Command-line interface for abs-lsq.

Runs benchmark suites of ABS least-squares solvers against the dense
baselines, checks invariants and archives generated problems.
"""

import logging
import sys

import click

from .commands import generate, run, verify

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


@click.group()
@click.version_option(package_name="abs-lsq")
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default="WARNING",
    help="Logging verbosity (default: WARNING)",
)
def cli(log_level: str):
    """abs-lsq - compare ABS least-squares solvers with QR and SVD baselines."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


cli.add_command(run)
cli.add_command(verify)
cli.add_command(generate)


def main():
    """Entry point for the abs-lsq command."""
    try:
        cli()
    except KeyboardInterrupt:
        click.echo("\n\nInterrupted by user", err=True)
        sys.exit(130)
    except Exception as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)


__all__ = ["cli", "main"]
