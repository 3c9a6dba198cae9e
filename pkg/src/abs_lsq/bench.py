"""Suite configuration and the concurrent solver x problem runner."""

from __future__ import annotations

import asyncio
import json
import logging
import math
import statistics
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .baselines import SvdConvergenceError, condition_number
from .constants import (
    DEFAULT_OUTPUT_BASENAME,
    DEFAULT_REPETITIONS,
    DEFAULT_ROSTER,
    DEFAULT_WORKERS,
)
from .metrics import (
    BenchmarkRecorder,
    ErrorMetric,
    ResultRow,
    Scoreboard,
    build_scoreboard,
    compute_errors,
    error_table,
    format_result_table,
    format_scoreboard,
    to_csv,
)
from .solvers import SolveResult, SolverKind, solve
from .testgen import MatrixFamily, ProblemInstance, ProblemSpec, build_problem

logger = logging.getLogger(__name__)

DEFAULT_SHAPES: Tuple[Tuple[int, int], ...] = ((105, 95), (140, 70), (200, 40))
DEFAULT_FAMILIES: Tuple[MatrixFamily, ...] = (
    MatrixFamily.IR500,
    MatrixFamily.IR500C,
    MatrixFamily.RR100,
    MatrixFamily.IDF1,
    MatrixFamily.IDF2,
    MatrixFamily.IDF3,
    MatrixFamily.IR50,
)

_BASELINES = frozenset({SolverKind.QR, SolverKind.SVD, SolverKind.PIVOTED_QR})
_KNOWN_KEYS = frozenset(
    {
        "workers",
        "repetitions",
        "seed_offset",
        "tolerance",
        "rcond",
        "output",
        "methods",
        "problems",
        "families",
        "shapes",
        "seeds",
    }
)


class SuiteConfigError(ValueError):
    """A suite configuration is malformed or fails validation."""


def _parse_shape(value: Any, where: str) -> Tuple[int, int]:
    if isinstance(value, str):
        m_text, sep, n_text = value.lower().partition("x")
        if not sep:
            raise SuiteConfigError(f"{where}: shape {value!r} must look like '140x70'")
        value = (m_text, n_text)
    try:
        m, n = (int(v) for v in value)
    except (TypeError, ValueError):
        raise SuiteConfigError(f"{where}: shape {value!r} must be two integers") from None
    return m, n


def _parse_problem(entry: Any, where: str) -> ProblemSpec:
    if not isinstance(entry, Mapping):
        raise SuiteConfigError(f"{where}: expected a mapping, got {type(entry).__name__}")
    unknown = set(entry) - {"family", "m", "n", "shape", "seed", "perturbation"}
    if unknown:
        raise SuiteConfigError(f"{where}: unknown keys {', '.join(sorted(unknown))}")
    try:
        family = MatrixFamily(str(entry["family"]).upper())
    except KeyError:
        raise SuiteConfigError(f"{where}: missing 'family'") from None
    except ValueError:
        choices = ", ".join(f.value for f in MatrixFamily)
        raise SuiteConfigError(f"{where}: unknown family {entry['family']!r} (choose from {choices})") from None
    if "shape" in entry:
        m, n = _parse_shape(entry["shape"], where)
    else:
        try:
            m, n = int(entry["m"]), int(entry["n"])
        except KeyError as exc:
            raise SuiteConfigError(f"{where}: missing {exc.args[0]!r}") from None
        except (TypeError, ValueError):
            raise SuiteConfigError(f"{where}: m and n must be integers") from None
    perturbation = entry.get("perturbation")
    if perturbation is not None:
        try:
            perturbation = tuple(int(v) for v in perturbation)
        except (TypeError, ValueError):
            raise SuiteConfigError(f"{where}: perturbation must be four integers") from None
    try:
        seed = int(entry.get("seed", 1))
    except (TypeError, ValueError):
        raise SuiteConfigError(f"{where}: seed must be an integer") from None
    return ProblemSpec(family=family, m=m, n=n, seed=seed, perturbation=perturbation)


@dataclass
class SuiteConfig:
    """Problems, roster and run settings of one benchmark suite."""

    problems: List[ProblemSpec]
    methods: Tuple[str, ...] = DEFAULT_ROSTER
    workers: int = DEFAULT_WORKERS
    repetitions: int = DEFAULT_REPETITIONS
    seed_offset: int = 0
    tolerance: Optional[float] = None
    rcond: Optional[float] = None
    output_dir: Path = field(default_factory=lambda: Path("."))
    basename: str = DEFAULT_OUTPUT_BASENAME

    @classmethod
    def default_suite(cls) -> "SuiteConfig":
        """The 21-problem desk grid (7 families x 3 shapes, seed 1) with the full roster."""
        problems = [ProblemSpec(family, m, n, 1) for family, (m, n) in product(DEFAULT_FAMILIES, DEFAULT_SHAPES)]
        return cls(problems=problems)

    @classmethod
    def from_mapping(cls, data: Optional[Mapping[str, Any]]) -> "SuiteConfig":
        """Build a config from a parsed YAML document; missing keys keep their defaults."""
        if data is None:
            data = {}
        if not isinstance(data, Mapping):
            raise SuiteConfigError("Suite configuration must be a mapping at the top level")
        unknown = set(data) - _KNOWN_KEYS
        if unknown:
            raise SuiteConfigError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")

        problems_raw = data.get("problems") or []
        if not isinstance(problems_raw, list):
            raise SuiteConfigError("'problems' must be a list")
        problems = [_parse_problem(entry, f"problems[{i}]") for i, entry in enumerate(problems_raw)]
        problems.extend(cls._expand_grid(data))

        kwargs: Dict[str, Any] = {"problems": problems}
        if "methods" in data:
            methods = data["methods"]
            if not isinstance(methods, list):
                raise SuiteConfigError("'methods' must be a list")
            kwargs["methods"] = tuple(str(m) for m in methods)
        for key in ("workers", "repetitions", "seed_offset"):
            if key in data:
                try:
                    kwargs[key] = int(data[key])
                except (TypeError, ValueError):
                    raise SuiteConfigError(f"'{key}' must be an integer") from None
        for key in ("tolerance", "rcond"):
            if data.get(key) is not None:
                try:
                    kwargs[key] = float(data[key])
                except (TypeError, ValueError):
                    raise SuiteConfigError(f"'{key}' must be a number") from None
        output = data.get("output") or {}
        if not isinstance(output, Mapping):
            raise SuiteConfigError("'output' must be a mapping")
        if output.get("dir"):
            kwargs["output_dir"] = Path(str(output["dir"]))
        if output.get("basename"):
            kwargs["basename"] = str(output["basename"])
        return cls(**kwargs)

    @staticmethod
    def _expand_grid(data: Mapping[str, Any]) -> List[ProblemSpec]:
        families = data.get("families")
        shapes = data.get("shapes")
        if families is None and shapes is None:
            return []
        if not families or not shapes:
            raise SuiteConfigError("Grid shorthand needs both 'families' and 'shapes'")
        seeds = data.get("seeds") or [1]
        specs: List[ProblemSpec] = []
        for family, shape, seed in product(families, shapes, seeds):
            where = f"grid {family} {shape}"
            m, n = _parse_shape(shape, where)
            specs.append(_parse_problem({"family": family, "m": m, "n": n, "seed": seed}, where))
        return specs

    def with_overrides(
        self,
        workers: Optional[int] = None,
        output_dir: Optional[Path] = None,
        seed_offset: Optional[int] = None,
    ) -> "SuiteConfig":
        changes: Dict[str, Any] = {}
        if workers is not None:
            changes["workers"] = workers
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        if seed_offset is not None:
            changes["seed_offset"] = seed_offset
        return replace(self, **changes)

    def solver_kinds(self) -> List[SolverKind]:
        kinds = []
        for name in self.methods:
            try:
                kinds.append(SolverKind(name))
            except ValueError:
                choices = ", ".join(k.value for k in SolverKind)
                raise SuiteConfigError(f"Unknown method {name!r} (choose from {choices})") from None
        return kinds

    def validate(self) -> None:
        if not self.methods:
            raise SuiteConfigError("The method roster is empty")
        self.solver_kinds()
        if not self.problems:
            raise SuiteConfigError("The suite has no problems")
        if self.workers < 1:
            raise SuiteConfigError(f"workers must be at least 1, got {self.workers}")
        if self.repetitions < 1:
            raise SuiteConfigError(f"repetitions must be at least 1, got {self.repetitions}")
        for key in ("tolerance", "rcond"):
            value = getattr(self, key)
            if value is not None and value < 0:
                raise SuiteConfigError(f"{key} must be nonnegative, got {value}")
        for i, spec in enumerate(self.problems):
            try:
                spec.validate()
            except ValueError as exc:
                raise SuiteConfigError(f"problems[{i}]: {exc}") from None
            if spec.m < spec.n:
                raise SuiteConfigError(f"problems[{i}]: {spec.label} is underdetermined; least-squares suites need m >= n")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "workers": self.workers,
            "repetitions": self.repetitions,
            "seed_offset": self.seed_offset,
            "tolerance": self.tolerance,
            "rcond": self.rcond,
            "output": {"dir": str(self.output_dir), "basename": self.basename},
            "methods": list(self.methods),
            "problems": [
                {
                    "family": spec.family.value,
                    "m": spec.m,
                    "n": spec.n,
                    "seed": spec.seed,
                    "perturbation": None if spec.perturbation is None else list(spec.perturbation),
                }
                for spec in self.problems
            ],
        }


@dataclass
class SuiteReport:
    """Everything a finished suite produced, in config order."""

    config: SuiteConfig
    instances: List[ProblemInstance]
    rows: List[ResultRow]
    failures: List[Dict[str, Any]]
    conditions: Dict[int, float]
    scoreboards: Dict[ErrorMetric, Optional[Scoreboard]]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0

    def text(self) -> str:
        parts = [format_result_table(self.rows, self.conditions)]
        for metric, board in self.scoreboards.items():
            if board is not None:
                parts.append(format_scoreboard(board, f"{metric.value} error: wins/near-ties"))
        return "\n\n".join(parts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problems": len(self.instances),
            "methods": list(self.config.methods),
            "rows": [row.to_dict() for row in self.rows],
            "failures": self.failures,
            "conditions": {
                self.instances[i].label: (None if math.isinf(c) or math.isnan(c) else c)
                for i, c in self.conditions.items()
            },
            "scoreboards": {
                metric.value: None if board is None else board.to_dict() for metric, board in self.scoreboards.items()
            },
        }


class SuiteRunner:
    """Runs every roster method on every problem with bounded concurrency.

    Problems are dispatched to worker threads (``asyncio.to_thread``) under a
    semaphore of size ``config.workers``; rows come back ordered by problem and
    roster position regardless of completion order. Each :meth:`run` starts
    from a fresh recorder.
    """

    def __init__(self, config: SuiteConfig) -> None:
        config.validate()
        self.config = config
        self.kinds = config.solver_kinds()
        self.recorder = BenchmarkRecorder(config.methods)
        self._conditions: Dict[int, float] = {}

    def build_instances(self) -> List[ProblemInstance]:
        return [build_problem(spec, self.config.seed_offset) for spec in self.config.problems]

    def tolerance_for(self, kind: SolverKind) -> Optional[float]:
        if kind in _BASELINES and self.config.rcond is not None:
            return self.config.rcond
        return self.config.tolerance

    def solve_instance(self, kind: SolverKind, instance: ProblemInstance) -> SolveResult:
        """Solve once per repetition; ``wall_time`` becomes the median solver-body time."""
        tol = self.tolerance_for(kind)
        A, b = instance.A.array, instance.b
        results = [solve(kind, A, b, tol) for _ in range(self.config.repetitions)]
        result = results[-1]
        result.wall_time = float(statistics.median(r.wall_time for r in results))
        return result

    def _run_problem_sync(self, index: int, instance: ProblemInstance) -> None:
        try:
            self._conditions[index] = condition_number(instance.A)
        except SvdConvergenceError as exc:
            logger.warning("No condition number for %s: %s", instance.label, exc)
            self._conditions[index] = math.nan
        for kind in self.kinds:
            try:
                result = self.solve_instance(kind, instance)
            except Exception as exc:
                logger.error("%s failed on %s: %s", kind.value, instance.label, exc)
                self.recorder.record_failure(index, kind.value, exc)
                continue
            self.recorder.record(
                ResultRow(
                    problem_index=index,
                    family=instance.family.value if instance.family is not None else "custom",
                    m=instance.m,
                    n=instance.n,
                    seed=instance.seed,
                    method=kind.value,
                    errors=compute_errors(instance, result),
                    rank=result.rank_detected,
                    time_seconds=result.wall_time,
                    status=result.status.value,
                )
            )
        logger.info("Finished %s", instance.label)

    async def _run_problem(self, semaphore: asyncio.Semaphore, index: int, instance: ProblemInstance) -> None:
        async with semaphore:
            await asyncio.to_thread(self._run_problem_sync, index, instance)

    async def run(self) -> SuiteReport:
        instances = self.build_instances()
        self.recorder = BenchmarkRecorder(self.config.methods)
        self._conditions = {}
        semaphore = asyncio.Semaphore(max(1, self.config.workers))
        tasks = [self._run_problem(semaphore, i, instance) for i, instance in enumerate(instances)]
        await asyncio.gather(*tasks)
        rows = self.recorder.rows()
        return SuiteReport(
            config=self.config,
            instances=instances,
            rows=rows,
            failures=self.recorder.failures(),
            conditions=dict(sorted(self._conditions.items())),
            scoreboards=self._scoreboards(rows),
        )

    def run_sync(self) -> SuiteReport:
        return asyncio.run(self.run())

    def _scoreboards(self, rows: Sequence[ResultRow]) -> Dict[ErrorMetric, Optional[Scoreboard]]:
        boards: Dict[ErrorMetric, Optional[Scoreboard]] = {}
        if len(self.config.methods) < 2:
            logger.warning("Scoreboards need at least 2 methods; the roster has %d", len(self.config.methods))
            return {metric: None for metric in ErrorMetric}
        for metric in ErrorMetric:
            table = error_table(rows, metric)
            boards[metric] = build_scoreboard(table, self.config.methods) if table else None
        return boards


def write_outputs(report: SuiteReport, out_dir: Optional[Path] = None, basename: Optional[str] = None) -> List[Path]:
    """Write ``<basename>.txt``, ``.csv`` and ``.json`` and return their paths.

    Raises:
        OSError: if the directory cannot be created or a file cannot be written.
    """
    directory = Path(out_dir if out_dir is not None else report.config.output_dir)
    stem = basename or report.config.basename
    directory.mkdir(parents=True, exist_ok=True)
    outputs = {
        directory / f"{stem}.txt": report.text() + "\n",
        directory / f"{stem}.csv": to_csv(report.rows),
        directory / f"{stem}.json": json.dumps(report.to_dict(), indent=2) + "\n",
    }
    for path, content in outputs.items():
        path.write_text(content, encoding="utf-8")
        logger.info("Wrote %s", path)
    return list(outputs)


__all__ = [
    "DEFAULT_SHAPES",
    "DEFAULT_FAMILIES",
    "SuiteConfigError",
    "SuiteConfig",
    "SuiteReport",
    "SuiteRunner",
    "write_outputs",
]
