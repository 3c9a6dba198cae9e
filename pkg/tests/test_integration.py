"""
Integration tests for abs-lsq.

These run the built-in desk suite end to end and check that generation,
the solver roster, the recorder and the scoreboards work together.
"""

import numpy as np
import pytest

from abs_lsq.bench import SuiteConfig, SuiteRunner
from abs_lsq.constants import DEFAULT_ROSTER
from abs_lsq.metrics import ErrorMetric, to_csv
from abs_lsq.solvers import SolveStatus
from abs_lsq.testgen import MatrixFamily, ProblemSpec


@pytest.fixture(scope="module")
def default_report():
    """The 21-problem suite with one repetition per solve."""
    config = SuiteConfig.default_suite()
    config.repetitions = 1
    config.workers = 4
    return SuiteRunner(config).run_sync()


def test_default_suite_covers_every_pair(default_report):
    assert len(default_report.instances) == 21
    assert len(default_report.rows) + len(default_report.failures) == 21 * len(DEFAULT_ROSTER)


def test_default_suite_scoreboards(default_report):
    for metric in ErrorMetric:
        board = default_report.scoreboards[metric]
        assert board.methods == DEFAULT_ROSTER
        assert board.problem_count == 21
        assert board.wins.shape == (8, 8)
        assert np.all(np.diag(board.wins) == 0)
        for i in range(8):
            for k in range(8):
                assert board.compared(i, k) <= 21


def test_default_suite_construction_certificates(default_report):
    for instance in default_report.instances:
        assert instance.certificate() <= instance.certificate_bound(), instance.label


def test_well_conditioned_rows_are_accurate(default_report):
    rows = [row for row in default_report.rows if row.family == MatrixFamily.RR100.value]
    assert len(rows) == 3 * len(DEFAULT_ROSTER)
    for row in rows:
        assert row.errors is not None, row.method
        assert row.errors.solution_error <= 1e-8, (row.method, row.dimension)


def test_breakdowns_never_carry_errors(default_report):
    for row in default_report.rows:
        if row.status == SolveStatus.BREAKDOWN.value:
            assert row.errors is None
    assert "condition number" in default_report.text()


@pytest.mark.asyncio
async def test_more_workers_than_problems_gives_identical_rows():
    config = SuiteConfig(
        problems=[ProblemSpec(MatrixFamily.IR500R, 24, 12, seed=s) for s in (1, 2)],
        methods=("huang6", "mod.huang6", "gqr lapack"),
        repetitions=1,
        workers=8,
    )
    parallel = await SuiteRunner(config).run()
    config.workers = 1
    serial = await SuiteRunner(config).run()

    assert to_csv(parallel.rows, include_time=False) == to_csv(serial.rows, include_time=False)
