"""Click commands for the abs-lsq CLI."""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional, Tuple

import click

from ..bench import SuiteConfig, SuiteConfigError, SuiteRunner, write_outputs
from ..checks import all_passed, check_suite
from ..constants import OUTPUT_DIR_ENV_VAR
from ..testgen import InstanceFormatError, ProblemInstance, dump_instance, load_instance
from .output import OutputFormatter

logger = logging.getLogger(__name__)

FORMAT_CHOICES = ["table", "text", "json"]


def _suite_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every command that works on a suite."""
    fn = click.option(
        "--seed-offset",
        type=int,
        default=None,
        help="Add K to every problem seed (default: from config, else 0)",
    )(fn)
    fn = click.option(
        "--out",
        "out_dir",
        type=click.Path(file_okay=False, path_type=Path),
        default=None,
        help=f"Output directory (overrides the config file and ${OUTPUT_DIR_ENV_VAR})",
    )(fn)
    fn = click.option(
        "--workers",
        type=click.IntRange(min=1),
        default=None,
        help="Problems solved in parallel (default: from config, else 1)",
    )(fn)
    fn = click.option(
        "--default-suite",
        is_flag=True,
        help="Use the built-in 21-problem desk suite instead of CONFIG",
    )(fn)
    return fn


def _format_option(fn: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--format",
        "output_format",
        type=click.Choice(FORMAT_CHOICES, case_sensitive=False),
        default="table",
        help="Output format (default: table)",
    )(fn)


@click.command()
@click.argument("config_file", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_suite_options
@_format_option
def run(
    config_file: Optional[Path],
    default_suite: bool,
    workers: Optional[int],
    out_dir: Optional[Path],
    seed_offset: Optional[int],
    output_format: str,
) -> None:
    """Run every roster method on every problem of a suite.

    Writes RESULTS.txt (result table and scoreboards), RESULTS.csv and
    RESULTS.json into the output directory. Breakdowns are reported as data;
    the exit code is 1 only if a solver raised.

    Examples:

    \b
    # The built-in 21-problem grid
    abs-lsq run --default-suite --out results/

    \b
    # A YAML suite with four parallel workers
    abs-lsq run abs-suite.yaml --workers 4 --format json
    """
    config = _resolve_config(config_file, default_suite, workers, out_dir, seed_offset)
    report = SuiteRunner(config).run_sync()

    try:
        paths = write_outputs(report)
    except OSError as exc:
        raise click.ClickException(f"Cannot write results to {config.output_dir}: {exc}") from exc

    click.echo(OutputFormatter.format_report(report, output_format.lower()))
    for path in paths:
        click.echo(f"Wrote {path}", err=True)
    for failure in report.failures:
        click.echo(f"Solver failure: {failure['method']} on problem {failure['problem_index']}: {failure['error']}", err=True)
    sys.exit(report.exit_code)


@click.command()
@click.argument("config_file", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_suite_options
@_format_option
@click.option(
    "--instance",
    "instance_files",
    multiple=True,
    type=click.Path(path_type=Path),
    help="Check an archived instance file (can be used multiple times)",
)
def verify(
    config_file: Optional[Path],
    default_suite: bool,
    workers: Optional[int],
    out_dir: Optional[Path],
    seed_offset: Optional[int],
    output_format: str,
    instance_files: Tuple[Path, ...],
) -> None:
    """Check solver and generator invariants on a suite or archived instances.

    Implicit QR breakdowns on exactly low-rank families are reported as
    expected, not as failures. Exits with 1 if any check fails.
    """
    tolerance: Optional[float] = None
    check_workers = workers or 1
    if instance_files and not (config_file or default_suite):
        instances = [_load_instance_file(path) for path in instance_files]
    else:
        config = _resolve_config(config_file, default_suite, workers, out_dir, seed_offset)
        tolerance = config.tolerance
        check_workers = config.workers
        instances = SuiteRunner(config).build_instances()
        instances.extend(_load_instance_file(path) for path in instance_files)

    results = check_suite(instances, tolerance, workers=check_workers)
    click.echo(OutputFormatter.format_checks([r.to_dict() for r in results], output_format.lower()))
    sys.exit(0 if all_passed(results) else 1)


@click.command()
@click.argument("config_file", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_suite_options
def generate(
    config_file: Optional[Path],
    default_suite: bool,
    workers: Optional[int],
    out_dir: Optional[Path],
    seed_offset: Optional[int],
) -> None:
    """Write every problem of a suite to the instance archive format."""
    config = _resolve_config(config_file, default_suite, workers, out_dir, seed_offset)
    runner = SuiteRunner(config)
    written: List[Path] = []
    try:
        for index, instance in enumerate(runner.build_instances()):
            name = f"{index:02d}_{instance.label.replace(' ', '_')}_s{instance.seed}.txt"
            written.append(dump_instance(instance, config.output_dir / name))
    except OSError as exc:
        raise click.ClickException(f"Cannot write instances to {config.output_dir}: {exc}") from exc
    for path in written:
        click.echo(str(path))


def _load_instance_file(path: Path) -> ProblemInstance:
    try:
        return load_instance(path)
    except InstanceFormatError as exc:
        raise click.ClickException(f"Failed to load instance: {exc}") from exc


def _load_config(config_path: Path) -> dict:
    """Load a suite configuration from a YAML file.

    Args:
        config_path: Path to config file

    Returns:
        Configuration dictionary
    """
    try:
        import yaml
    except ImportError:
        raise click.ClickException("PyYAML not installed. Install with: pip install 'abs-lsq[cli]'") from None

    try:
        with config_path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{config_path}:{mark.line + 1}" if mark is not None else str(config_path)
        problem = getattr(exc, "problem", None) or str(exc)
        raise click.ClickException(f"Invalid YAML in {where}: {problem}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise click.ClickException(f"{config_path}: the top level must be a mapping")
    return data


def _resolve_config(
    config_file: Optional[Path],
    default_suite: bool,
    workers: Optional[int],
    out_dir: Optional[Path],
    seed_offset: Optional[int],
) -> SuiteConfig:
    """Merge file config with CLI options (CLI takes precedence).

    Precedence is built-in defaults < config file < ``$ABS_LSQ_OUT_DIR``
    (output directory only) < command-line flags.
    """
    if config_file is not None and default_suite:
        raise click.UsageError("Give either CONFIG or --default-suite, not both")
    if config_file is None and not default_suite:
        raise click.UsageError("Missing CONFIG (or pass --default-suite)")

    try:
        if default_suite:
            config = SuiteConfig.default_suite()
        else:
            assert config_file is not None
            config = SuiteConfig.from_mapping(_load_config(config_file))

        env_dir = os.environ.get(OUTPUT_DIR_ENV_VAR)
        if env_dir:
            config = config.with_overrides(output_dir=Path(env_dir))
        config = config.with_overrides(workers=workers, output_dir=out_dir, seed_offset=seed_offset)
        config.validate()
    except SuiteConfigError as exc:
        source = config_file if config_file is not None else "default suite"
        raise click.ClickException(f"Invalid suite configuration ({source}): {exc}") from exc
    logger.info("Suite has %d problems and %d methods", len(config.problems), len(config.methods))
    return config


__all__ = ["run", "verify", "generate"]
