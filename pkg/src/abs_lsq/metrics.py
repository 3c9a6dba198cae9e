"""Error metrics, pairwise scoreboards and result tables for solver comparisons."""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .constants import BREAKDOWN_MARKER, CSV_COLUMNS, DEFAULT_TIE_FRACTION
from .solvers import SolveResult, SolveStatus
from .testgen import ProblemInstance

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class ErrorPair:
    """Solution error ``||x - x*||_inf`` and scaled normal-equation residual."""

    solution_error: float
    residual_error: float
    solution_error_2: float = 0.0

    def get(self, metric: "ErrorMetric") -> float:
        if metric is ErrorMetric.SOLUTION:
            return self.solution_error
        return self.residual_error


class ErrorMetric(str, Enum):
    SOLUTION = "solution"
    RESIDUAL = "residual"


def compute_errors(instance: ProblemInstance, result: SolveResult) -> Optional[ErrorPair]:
    """Return the error pair, or ``None`` when the run broke down.

    The residual error is ``||A^T (A x - b)||_2 / (||A||_F ||b||_2)``, small
    exactly when ``x`` is a least-squares stationary point.
    """
    if result.status is SolveStatus.BREAKDOWN:
        return None
    x = result.x
    if x.size != instance.n or not np.all(np.isfinite(x)):
        return None
    A = instance.A.array
    diff = x - instance.x_star
    scale = instance.A.frobenius_norm() * float(np.linalg.norm(instance.b))
    normal = float(np.linalg.norm(A.T @ (A @ x - instance.b)))
    residual = normal / scale if scale > 0.0 else normal
    pair = ErrorPair(
        solution_error=float(np.max(np.abs(diff))),
        residual_error=residual,
        solution_error_2=float(np.linalg.norm(diff)),
    )
    if not (math.isfinite(pair.solution_error) and math.isfinite(pair.residual_error)):
        return None
    return pair


@dataclass
class Scoreboard:
    """Pairwise win / near-tie counts over a set of problems.

    ``wins[i, k]`` counts problems where method ``i`` had the lower error
    against method ``k``; ``near_ties`` is symmetric.
    """

    methods: Tuple[str, ...]
    wins: np.ndarray
    near_ties: np.ndarray
    problem_count: int

    def total_wins(self, i: int) -> int:
        return int(self.wins[i].sum())

    def total_ties(self, i: int) -> int:
        return int(self.near_ties[i].sum())

    def total(self, i: int) -> str:
        return f"{self.total_wins(i)}/{self.total_ties(i)}"

    def cell(self, i: int, k: int) -> str:
        if i == k:
            return ""
        wins, ties = int(self.wins[i, k]), int(self.near_ties[i, k])
        return f"{wins}/{ties}" if ties else str(wins)

    def compared(self, i: int, k: int) -> int:
        return int(self.wins[i, k] + self.wins[k, i] + self.near_ties[i, k])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "methods": list(self.methods),
            "problem_count": self.problem_count,
            "wins": self.wins.tolist(),
            "near_ties": self.near_ties.tolist(),
            "totals": {name: self.total(i) for i, name in enumerate(self.methods)},
        }


def build_scoreboard(
    errors: Sequence[Mapping[str, Optional[float]]],
    methods: Optional[Sequence[str]] = None,
    tie_fraction: float = DEFAULT_TIE_FRACTION,
) -> Scoreboard:
    """Count wins and near-ties for every ordered pair of methods.

    ``errors`` holds one mapping per problem from method name to its error
    (``None`` for a breakdown, which leaves the pair uncounted on that problem).
    Two errors are a near-tie when ``|e_i - e_k| <= tie_fraction * max(e_i, e_k)``.
    """
    if methods is None:
        seen: Dict[str, None] = {}
        for table in errors:
            seen.update(dict.fromkeys(table))
        methods = list(seen)
    names = tuple(methods)
    if len(names) < 2:
        raise ValueError(f"A scoreboard needs at least 2 methods, got {len(names)}")
    if not errors:
        raise ValueError("A scoreboard needs at least one problem")
    if tie_fraction < 0:
        raise ValueError(f"tie_fraction must be nonnegative, got {tie_fraction}")

    size = len(names)
    wins = np.zeros((size, size), dtype=int)
    ties = np.zeros((size, size), dtype=int)
    for table in errors:
        values = [table.get(name) for name in names]
        for i in range(size):
            ei = values[i]
            if ei is None:
                continue
            for k in range(i + 1, size):
                ek = values[k]
                if ek is None:
                    continue
                if abs(ei - ek) <= tie_fraction * max(ei, ek):
                    ties[i, k] += 1
                    ties[k, i] += 1
                elif ei < ek:
                    wins[i, k] += 1
                else:
                    wins[k, i] += 1
    return Scoreboard(methods=names, wins=wins, near_ties=ties, problem_count=len(errors))


def format_scoreboard(scoreboard: Scoreboard, title: str = "") -> str:
    """Render the scoreboard as a fixed-width text table with a ``W/T`` total column."""
    width = max(10, max(len(name) for name in scoreboard.methods) + 2)
    lines: List[str] = []
    if title:
        lines.append(title)
    header = " " * width + "".join(f"{name:>{width}}" for name in scoreboard.methods) + f"{'total':>{width}}"
    lines.append(header)
    for i, name in enumerate(scoreboard.methods):
        cells = "".join(f"{scoreboard.cell(i, k):>{width}}" for k in range(len(scoreboard.methods)))
        lines.append(f"{name:<{width}}{cells}{scoreboard.total(i):>{width}}")
    return "\n".join(lines)


@dataclass
class ResultRow:
    """One (problem, method) outcome as it appears in the result table."""

    problem_index: int
    family: str
    m: int
    n: int
    seed: int
    method: str
    errors: Optional[ErrorPair]
    rank: int
    time_seconds: float
    status: str

    @property
    def dimension(self) -> str:
        return f"{self.m}x{self.n}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "m": self.m,
            "n": self.n,
            "seed": self.seed,
            "method": self.method,
            "solution_error": None if self.errors is None else self.errors.solution_error,
            "residual_error": None if self.errors is None else self.errors.residual_error,
            "rank": self.rank,
            "time_seconds": self.time_seconds,
            "status": self.status,
        }


def error_table(rows: Sequence[ResultRow], metric: ErrorMetric) -> List[Dict[str, Optional[float]]]:
    """Group result rows into per-problem ``{method: error}`` maps in problem order."""
    grouped: Dict[int, Dict[str, Optional[float]]] = defaultdict(dict)
    for row in rows:
        grouped[row.problem_index][row.method] = None if row.errors is None else row.errors.get(metric)
    return [grouped[index] for index in sorted(grouped)]


RESULT_TABLE_HEADER = (
    f"{'matrix':<8}{'dimension':<11}{'method':<12}{'solution':>10}{'residual':>10}{'rank':>6}{'time':>11}\n"
    f"{'':<31}{'error':>10}{'error':>10}"
)


def _sci(value: float) -> str:
    return f"{value:.1e}"


def format_result_table(rows: Sequence[ResultRow], conditions: Optional[Mapping[int, float]] = None) -> str:
    """Fixed-width result table, one line per (problem, method).

    ``conditions`` maps a problem index to its condition number, printed
    once above that problem's lines.
    """
    lines = [RESULT_TABLE_HEADER]
    current: Optional[int] = None
    for row in rows:
        if row.problem_index != current:
            current = row.problem_index
            if conditions is not None and current in conditions:
                lines.append(f"{row.family} {row.dimension}  condition number: {_sci(conditions[current])}")
        lead = f"{row.family:<8}{row.dimension:<11}{row.method:<12}"
        if row.errors is None:
            errors = f"{BREAKDOWN_MARKER:>20}"
        else:
            errors = f"{_sci(row.errors.solution_error):>10}{_sci(row.errors.residual_error):>10}"
        lines.append(f"{lead}{errors}{row.rank:>6}{row.time_seconds:>11.4f}")
    return "\n".join(lines)


def to_csv(rows: Sequence[ResultRow], include_time: bool = True) -> str:
    """CSV twin of the result table; errors use 17 significant digits."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        record = row.to_dict()
        for key in ("solution_error", "residual_error"):
            record[key] = "" if record[key] is None else "%.17g" % record[key]
        record["time_seconds"] = "%.6f" % row.time_seconds if include_time else ""
        writer.writerow([record[column] for column in CSV_COLUMNS])
    return buffer.getvalue()


def time_solver(fn: Callable[[], T], repetitions: int = 1) -> Tuple[T, float]:
    """Run ``fn`` ``repetitions`` times; return the last result and the median wall time."""
    if repetitions < 1:
        raise ValueError(f"repetitions must be at least 1, got {repetitions}")
    timings: List[float] = []
    result: Any = None
    for _ in range(repetitions):
        start = time.perf_counter()
        result = fn()
        timings.append(time.perf_counter() - start)
    return result, float(statistics.median(timings))


@dataclass
class _Failure:
    problem_index: int
    method: str
    error: str


class BenchmarkRecorder:
    """Thread-safe collector of result rows from concurrent solver runs."""

    def __init__(self, methods: Sequence[str]) -> None:
        self._lock = threading.Lock()
        self._order = {name: i for i, name in enumerate(methods)}
        self._rows: List[ResultRow] = []
        self._failures: List[_Failure] = []
        self.status_counts: Dict[str, Dict[str, int]] = defaultdict(lambda: defaultdict(int))

    def record(self, row: ResultRow) -> None:
        with self._lock:
            self._rows.append(row)
            self.status_counts[row.method][row.status] += 1
            if row.status == SolveStatus.BREAKDOWN.value:
                logger.warning("%s broke down on %s %s", row.method, row.family, row.dimension)

    def record_failure(self, problem_index: int, method: str, error: BaseException) -> None:
        with self._lock:
            self._failures.append(_Failure(problem_index, method, f"{type(error).__name__}: {error}"))

    def rows(self) -> List[ResultRow]:
        """Rows ordered by problem index, then by roster position."""
        with self._lock:
            return sorted(self._rows, key=lambda r: (r.problem_index, self._order.get(r.method, len(self._order))))

    def failures(self) -> List[Dict[str, Any]]:
        with self._lock:
            return [vars(f).copy() for f in sorted(self._failures, key=lambda f: f.problem_index)]

    def get_summary(self) -> Dict[str, Any]:
        with self._lock:
            return {
                "rows": len(self._rows),
                "failures": len(self._failures),
                "status_counts": {method: dict(counts) for method, counts in self.status_counts.items()},
            }


__all__ = [
    "ErrorPair",
    "ErrorMetric",
    "compute_errors",
    "Scoreboard",
    "build_scoreboard",
    "format_scoreboard",
    "ResultRow",
    "error_table",
    "RESULT_TABLE_HEADER",
    "format_result_table",
    "to_csv",
    "time_solver",
    "BenchmarkRecorder",
]
