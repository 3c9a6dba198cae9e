"""Output formatters for the abs-lsq CLI."""

from __future__ import annotations

import json
from typing import Any, Dict, List

from ..bench import SuiteReport
from ..constants import BREAKDOWN_MARKER
from ..metrics import Scoreboard

try:
    from rich.console import Console
    from rich.table import Table
    from rich.text import Text

    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False


class OutputFormatter:
    """Dispatches suite reports and check results to a concrete formatter."""

    @staticmethod
    def format_report(report: SuiteReport, format_type: str = "table") -> str:
        """Format a finished suite.

        Args:
            report: Result of a suite run
            format_type: Output format ("json", "text", or "table")

        Returns:
            Formatted output string
        """
        if format_type == "json":
            return JSONFormatter.format_report(report)
        if format_type == "text":
            return report.text()
        return TableFormatter.format_report(report)

    @staticmethod
    def format_checks(results: List[Dict[str, Any]], format_type: str = "table") -> str:
        """Format invariant check results (dictionaries from ``CheckResult.to_dict``)."""
        if format_type == "json":
            return JSONFormatter.format_checks(results)
        if format_type == "text":
            return TableFormatter._format_checks_simple(results)
        return TableFormatter.format_checks(results)


class JSONFormatter:
    """JSON output formatter."""

    @staticmethod
    def format_report(report: SuiteReport) -> str:
        output = {"summary": _report_summary(report), **report.to_dict()}
        return json.dumps(output, indent=2)

    @staticmethod
    def format_checks(results: List[Dict[str, Any]]) -> str:
        output = {"summary": _check_summary(results), "checks": results}
        return json.dumps(output, indent=2)


class TableFormatter:
    """Table output formatter using the Rich library, with a plain-text fallback."""

    @staticmethod
    def format_report(report: SuiteReport) -> str:
        if not RICH_AVAILABLE:
            return report.text() + "\n" + _summary_line(_report_summary(report))

        console = Console(width=120)
        table = Table(title="Least-squares comparison", show_header=True)
        table.add_column("Matrix", style="cyan", no_wrap=True)
        table.add_column("Dimension")
        table.add_column("Method", style="bold")
        table.add_column("Solution error", justify="right")
        table.add_column("Residual error", justify="right")
        table.add_column("Rank", justify="right")
        table.add_column("Time (s)", justify="right")

        for row in report.rows:
            if row.errors is None:
                solution: Any = Text(BREAKDOWN_MARKER, style="red")
                residual = ""
            else:
                solution = f"{row.errors.solution_error:.1e}"
                residual = f"{row.errors.residual_error:.1e}"
            table.add_row(
                row.family,
                row.dimension,
                row.method,
                solution,
                residual,
                str(row.rank),
                f"{row.time_seconds:.4f}",
            )

        with console.capture() as capture:
            console.print(table)
            for metric, board in report.scoreboards.items():
                if board is not None:
                    console.print(_scoreboard_table(board, f"{metric.value} error: wins/near-ties"))
            console.print(_summary_line(_report_summary(report)))
        return capture.get()

    @staticmethod
    def format_checks(results: List[Dict[str, Any]]) -> str:
        if not RICH_AVAILABLE:
            return TableFormatter._format_checks_simple(results)

        console = Console(width=120)
        table = Table(title="Invariant checks", show_header=True)
        table.add_column("Problem", style="cyan", no_wrap=True)
        table.add_column("Check")
        table.add_column("Outcome", style="bold")
        table.add_column("Value", justify="right")
        table.add_column("Limit", justify="right")
        table.add_column("Detail", style="dim", max_width=40)

        styles = {"pass": "green", "FAIL": "red", "expected": "yellow", "skipped": "dim"}
        for result in results:
            outcome = result["outcome"]
            table.add_row(
                result["problem"],
                result["name"],
                Text(outcome, style=styles.get(outcome, "")),
                _number(result.get("value")),
                _number(result.get("limit")),
                result.get("detail") or "",
            )

        with console.capture() as capture:
            console.print(table)
            console.print(_check_line(_check_summary(results)))
        return capture.get()

    @staticmethod
    def _format_checks_simple(results: List[Dict[str, Any]]) -> str:
        lines = ["-" * 96, f"{'Problem':<16} {'Check':<40} {'Outcome':<9} {'Value':>12} {'Limit':>12}", "-" * 96]
        for result in results:
            lines.append(
                f"{result['problem']:<16} {result['name'][:40]:<40} {result['outcome']:<9} "
                f"{_number(result.get('value')):>12} {_number(result.get('limit')):>12}"
            )
        lines.append("-" * 96)
        lines.append(_check_line(_check_summary(results)))
        return "\n".join(lines)


def _scoreboard_table(board: Scoreboard, title: str) -> Any:
    table = Table(title=title, show_header=True)
    table.add_column("", style="cyan", no_wrap=True)
    for name in board.methods:
        table.add_column(name, justify="right")
    table.add_column("total", justify="right", style="bold")
    for i, name in enumerate(board.methods):
        table.add_row(name, *(board.cell(i, k) for k in range(len(board.methods))), board.total(i))
    return table


def _number(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, int):
        return str(value)
    return f"{value:.2e}"


def _report_summary(report: SuiteReport) -> Dict[str, Any]:
    statuses: Dict[str, int] = {}
    for row in report.rows:
        statuses[row.status] = statuses.get(row.status, 0) + 1
    return {
        "problems": len(report.instances),
        "methods": len(report.config.methods),
        "rows": len(report.rows),
        "breakdowns": statuses.get("breakdown", 0),
        "failures": len(report.failures),
        "statuses": statuses,
    }


def _summary_line(summary: Dict[str, Any]) -> str:
    return (
        f"Summary: {summary['problems']} problems x {summary['methods']} methods, "
        f"{summary['breakdowns']} breakdowns, {summary['failures']} failures"
    )


def _check_summary(results: List[Dict[str, Any]]) -> Dict[str, int]:
    summary = {"total": len(results), "pass": 0, "FAIL": 0, "expected": 0, "skipped": 0}
    for result in results:
        summary[result["outcome"]] = summary.get(result["outcome"], 0) + 1
    return summary


def _check_line(summary: Dict[str, int]) -> str:
    return (
        f"Checks: {summary['pass']} passed, {summary['FAIL']} failed, "
        f"{summary['expected']} expected breakdowns, {summary['skipped']} skipped"
    )


__all__ = ["OutputFormatter", "JSONFormatter", "TableFormatter", "RICH_AVAILABLE"]
