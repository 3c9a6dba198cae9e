"""Unit tests for internal helpers in abs_lsq.cli.commands."""

from __future__ import annotations

from pathlib import Path

import click
import pytest

from abs_lsq.cli import commands
from abs_lsq.constants import OUTPUT_DIR_ENV_VAR
from abs_lsq.testgen import MatrixFamily, ProblemSpec, build_problem, dump_instance


def _write_suite(tmp_path: Path) -> Path:
    cfg = tmp_path / "suite.yaml"
    cfg.write_text(
        """
workers: 2
repetitions: 1
methods: [huang7, qr lapack]
output:
  dir: from-file
problems:
  - family: RR100
    shape: 20x10
    seed: 3
"""
    )
    return cfg


def test_load_config_success(tmp_path: Path):
    data = commands._load_config(_write_suite(tmp_path))
    assert data["workers"] == 2
    assert data["methods"] == ["huang7", "qr lapack"]
    assert data["output"]["dir"] == "from-file"
    assert data["problems"][0]["shape"] == "20x10"


def test_load_config_empty_file(tmp_path: Path):
    cfg = tmp_path / "empty.yaml"
    cfg.write_text("")
    assert commands._load_config(cfg) == {}


def test_load_config_reports_yaml_line(tmp_path: Path):
    cfg = tmp_path / "broken.yaml"
    cfg.write_text("workers: 2\nmethods: [huang7\nproblems: []\n")
    with pytest.raises(click.ClickException) as excinfo:
        commands._load_config(cfg)
    assert f"Invalid YAML in {cfg}:" in excinfo.value.message


def test_load_config_rejects_non_mapping(tmp_path: Path):
    cfg = tmp_path / "list.yaml"
    cfg.write_text("- huang6\n- huang7\n")
    with pytest.raises(click.ClickException, match="must be a mapping"):
        commands._load_config(cfg)


def test_resolve_config_precedence(tmp_path: Path, monkeypatch):
    cfg = _write_suite(tmp_path)
    monkeypatch.delenv(OUTPUT_DIR_ENV_VAR, raising=False)

    config = commands._resolve_config(cfg, False, None, None, None)
    assert config.output_dir == Path("from-file")
    assert config.workers == 2

    monkeypatch.setenv(OUTPUT_DIR_ENV_VAR, str(tmp_path / "from-env"))
    config = commands._resolve_config(cfg, False, None, None, None)
    assert config.output_dir == tmp_path / "from-env"

    config = commands._resolve_config(cfg, False, 5, tmp_path / "from-cli", 7)
    assert config.output_dir == tmp_path / "from-cli"
    assert config.workers == 5
    assert config.seed_offset == 7


def test_resolve_config_needs_exactly_one_source(tmp_path: Path):
    with pytest.raises(click.UsageError, match="Missing CONFIG"):
        commands._resolve_config(None, False, None, None, None)
    with pytest.raises(click.UsageError, match="not both"):
        commands._resolve_config(_write_suite(tmp_path), True, None, None, None)


def test_resolve_config_default_suite(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV_VAR, raising=False)
    config = commands._resolve_config(None, True, 3, None, None)
    assert len(config.problems) == 21
    assert config.workers == 3


def test_resolve_config_wraps_validation_errors(tmp_path: Path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("methods: [huang6, lu lapack]\nproblems:\n  - {family: IR50, m: 6, n: 3}\n")
    with pytest.raises(click.ClickException) as excinfo:
        commands._resolve_config(cfg, False, None, None, None)
    assert "Invalid suite configuration" in excinfo.value.message
    assert "lu lapack" in excinfo.value.message


def test_load_instance_file_wraps_format_errors(tmp_path: Path):
    path = tmp_path / "bad.txt"
    path.write_text("family = IR50\n")
    with pytest.raises(click.ClickException, match="Failed to load instance"):
        commands._load_instance_file(path)


def test_load_instance_file_reads_archived_instances(tmp_path: Path):
    instance = build_problem(ProblemSpec(MatrixFamily.IR50, 15, 6, seed=2))
    loaded = commands._load_instance_file(dump_instance(instance, tmp_path / "a.txt"))
    assert loaded.label == instance.label
    assert loaded.A.array.tolist() == instance.A.array.tolist()
