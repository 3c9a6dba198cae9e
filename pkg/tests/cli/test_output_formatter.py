"""Coverage for CLI output formatters."""

from __future__ import annotations

import json

import pytest

from abs_lsq.bench import SuiteConfig, SuiteRunner
from abs_lsq.cli import output
from abs_lsq.constants import BREAKDOWN_MARKER
from abs_lsq.testgen import MatrixFamily, ProblemSpec


@pytest.fixture(scope="module")
def report():
    config = SuiteConfig(
        problems=[ProblemSpec(MatrixFamily.RR100, 12, 5, seed=2), ProblemSpec(MatrixFamily.IR50, 10, 4)],
        methods=("huang6", "impl.qr5", "qr lapack"),
        repetitions=1,
    )
    return SuiteRunner(config).run_sync()


def sample_checks():
    return [
        {"name": "construction certificate", "problem": "IR50 6x3", "outcome": "pass", "value": 0.0, "limit": 1e-13, "detail": ""},
        {"name": "exact rank (svd)", "problem": "IDF2 12x8", "outcome": "FAIL", "value": 4, "limit": 3, "detail": ""},
        {"name": "implicit qr on low-rank matrix", "problem": "IDF2 12x8", "outcome": "expected", "value": None, "limit": None, "detail": "breakdown at step 4"},
        {"name": "structural checks", "problem": "IR500C 6x3", "outcome": "skipped", "value": 1e20, "limit": 1e6, "detail": ""},
    ]


def test_json_report_has_summary(report):
    payload = json.loads(output.OutputFormatter.format_report(report, "json"))
    assert payload["summary"]["problems"] == 2
    assert payload["summary"]["rows"] == 6
    assert payload["summary"]["breakdowns"] == 0
    assert payload["scoreboards"]["solution"]["methods"] == ["huang6", "impl.qr5", "qr lapack"]


def test_text_report_is_plain_table(report):
    text = output.OutputFormatter.format_report(report, "text")
    assert text == report.text()


def test_table_report_without_rich(monkeypatch, report):
    monkeypatch.setattr(output, "RICH_AVAILABLE", False, raising=False)
    text = output.TableFormatter.format_report(report)
    assert "condition number" in text
    assert "Summary: 2 problems x 3 methods" in text


def test_table_report_with_rich(monkeypatch, report):
    monkeypatch.setattr(output, "RICH_AVAILABLE", True, raising=False)
    text = output.TableFormatter.format_report(report)
    assert "Least-squares comparison" in text
    assert "impl.qr5" in text
    assert "Summary:" in text


def test_breakdown_row_uses_marker(monkeypatch, report):
    monkeypatch.setattr(output, "RICH_AVAILABLE", True, raising=False)
    report.rows[1].errors, saved = None, report.rows[1].errors
    try:
        assert BREAKDOWN_MARKER in output.TableFormatter.format_report(report)
    finally:
        report.rows[1].errors = saved


def test_json_checks_summary():
    payload = json.loads(output.OutputFormatter.format_checks(sample_checks(), "json"))
    assert payload["summary"] == {"total": 4, "pass": 1, "FAIL": 1, "expected": 1, "skipped": 1}
    assert len(payload["checks"]) == 4


def test_checks_text_fallback(monkeypatch):
    monkeypatch.setattr(output, "RICH_AVAILABLE", False, raising=False)
    text = output.OutputFormatter.format_checks(sample_checks(), "table")
    assert "exact rank (svd)" in text
    assert "Checks: 1 passed, 1 failed, 1 expected breakdowns, 1 skipped" in text


def test_checks_with_rich(monkeypatch):
    monkeypatch.setattr(output, "RICH_AVAILABLE", True, raising=False)
    text = output.OutputFormatter.format_checks(sample_checks(), "table")
    assert "Invariant checks" in text
    assert "Checks: 1 passed" in text
