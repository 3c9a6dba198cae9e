"""
Tests for the named ABS solvers and the roster dispatcher.
"""

import numpy as np
import pytest

from abs_lsq import solvers
from abs_lsq.linalg import DimensionError
from abs_lsq.metrics import compute_errors, time_solver
from abs_lsq.solvers import (
    PivotClass,
    SolverKind,
    SolveStatus,
    classify_implicit_qr_pivot,
    huang_solve,
    implicit_qr_solve,
    ls_huang_solve,
    solve,
)
from abs_lsq.testgen import MatrixFamily, ProblemSpec, build_problem

LS_KINDS = [
    SolverKind.IMPLICIT_QR,
    SolverKind.LS_HUANG_STORED_L,
    SolverKind.LS_HUANG_NO_L,
    SolverKind.MODIFIED_LS_HUANG_STORED_L,
    SolverKind.MODIFIED_LS_HUANG_NO_L,
    SolverKind.QR,
    SolverKind.SVD,
    SolverKind.PIVOTED_QR,
]


class TestHuang:
    @pytest.mark.parametrize("modified", [False, True])
    @pytest.mark.parametrize("representation", ["explicit", "projection"])
    def test_minimum_norm_on_underdetermined_systems(self, rng, modified, representation):
        for _ in range(10):
            A = rng.standard_normal((5, 12))
            b = rng.standard_normal(5)
            result = huang_solve(A, b, modified=modified, representation=representation)
            assert result.status is SolveStatus.CONVERGED
            assert result.rank_detected == 5
            np.testing.assert_allclose(result.x, np.linalg.pinv(A) @ b, rtol=1e-8, atol=1e-10)

    def test_identity_system(self):
        result = huang_solve(np.eye(2), [2.0, 3.0])
        np.testing.assert_allclose(result.x, [2.0, 3.0])
        assert result.steps_taken == 2

    def test_skipped_row_marks_rank_deficiency(self):
        A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        result = huang_solve(A, [1.0, 1.0, 1.0])
        assert result.status is SolveStatus.RANK_DEFICIENT
        assert result.rank_detected == 2
        np.testing.assert_allclose(result.x, [1.0, 1.0])

    def test_incompatible_row_is_reported(self):
        result = huang_solve(np.array([[1.0, 0.0], [1.0, 0.0]]), [1.0, 2.0])
        assert result.status is SolveStatus.INCOMPATIBLE
        assert result.steps_taken == 2
        assert result.rank_detected == 1

    def test_unknown_representation(self):
        with pytest.raises(ValueError, match="representation"):
            huang_solve(np.eye(2), [1.0, 1.0], representation="sparse")


class TestLeastSquares:
    @pytest.mark.parametrize("modified", [False, True])
    @pytest.mark.parametrize("store_L", [False, True])
    def test_ls_huang_matches_lstsq(self, rng, modified, store_L):
        A = rng.standard_normal((9, 4))
        b = rng.standard_normal(9)
        expected, *_ = np.linalg.lstsq(A, b, rcond=None)

        result = ls_huang_solve(A, b, modified=modified, store_L=store_L)

        assert result.status is SolveStatus.CONVERGED
        assert result.rank_detected == 4
        np.testing.assert_allclose(result.x, expected, rtol=1e-9, atol=1e-10)

    def test_implicit_qr_matches_lstsq(self, rng):
        A = rng.standard_normal((9, 4))
        b = rng.standard_normal(9)
        expected, *_ = np.linalg.lstsq(A, b, rcond=None)

        result = implicit_qr_solve(A, b)

        assert result.status is SolveStatus.CONVERGED
        assert result.steps_taken == 4
        np.testing.assert_allclose(result.x, expected, rtol=1e-9, atol=1e-10)

    def test_square_system_is_solved_exactly(self):
        A = np.array([[2.0, 1.0], [1.0, 3.0]])
        b = np.array([3.0, 4.0])
        for store_L in (False, True):
            np.testing.assert_allclose(ls_huang_solve(A, b, store_L=store_L).x, [1.0, 1.0])
        np.testing.assert_allclose(implicit_qr_solve(A, b).x, [1.0, 1.0])

    def test_stored_L_and_recurrence_agree(self, rng):
        A = rng.uniform(-100.0, 100.0, (30, 12))
        b = rng.uniform(-10.0, 10.0, 30)
        for modified in (False, True):
            stored = ls_huang_solve(A, b, modified=modified, store_L=True)
            recurrence = ls_huang_solve(A, b, modified=modified, store_L=False)
            gap = np.linalg.norm(stored.x - recurrence.x) / np.linalg.norm(stored.x)
            assert gap <= 1e-12

    def test_zero_column_is_skipped(self):
        A = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        b = np.array([1.0, 1.0, 2.0])
        expected = (A[:, 0] @ b) / 14.0

        for result in (implicit_qr_solve(A, b), ls_huang_solve(A, b), ls_huang_solve(A, b, store_L=False)):
            assert result.status is SolveStatus.RANK_DEFICIENT
            assert result.rank_detected == 1
            np.testing.assert_allclose(result.x, [expected, 0.0])

    def test_nearly_dependent_column_is_skipped_by_every_ls_variant(self, rng):
        A = rng.standard_normal((8, 3))
        A[:, 2] = A[:, 0] + 1e-9 * rng.standard_normal(8)
        b = rng.standard_normal(8)
        expected, *_ = np.linalg.lstsq(A[:, :2], b, rcond=None)

        results = [
            implicit_qr_solve(A, b),
            ls_huang_solve(A, b, modified=True),
            ls_huang_solve(A, b, modified=True, store_L=False),
        ]
        for result in results:
            assert result.status is SolveStatus.RANK_DEFICIENT
            assert result.rank_detected == 2
            assert result.x[2] == 0.0
            np.testing.assert_allclose(result.x[:2], expected, rtol=1e-8, atol=1e-10)

    @pytest.mark.parametrize(
        "vv, norm_s, rv, verdict",
        [
            (4.0, 2.0, 1.0, PivotClass.ACCEPT),
            (1e-20, 1e-12, 1e-12, PivotClass.SKIP),
            (1e-20, 1.0, 0.0, PivotClass.BREAKDOWN),
            (1e-20, 0.0, 1.0, PivotClass.BREAKDOWN),
        ],
    )
    def test_implicit_qr_pivot_classification(self, vv, norm_s, rv, verdict):
        assert classify_implicit_qr_pivot(vv, norm_s, rv, 1.0, 1.0, 1.0, 1e-14) is verdict

    def test_breakdown_verdict_ends_implicit_qr(self, rng, monkeypatch):
        A = rng.standard_normal((6, 3))
        b = rng.standard_normal(6)
        verdicts = iter([PivotClass.ACCEPT, PivotClass.BREAKDOWN])
        monkeypatch.setattr(solvers, "classify_implicit_qr_pivot", lambda *args: next(verdicts))

        result = implicit_qr_solve(A, b)

        assert result.status is SolveStatus.BREAKDOWN
        assert result.steps_taken == 2
        assert result.rank_detected == 1
        np.testing.assert_allclose(result.x, [A[:, 0] @ b / (A[:, 0] @ A[:, 0]), 0.0, 0.0])

    def test_underdetermined_input_is_rejected(self):
        A = np.ones((2, 3))
        with pytest.raises(DimensionError):
            implicit_qr_solve(A, [1.0, 1.0])
        with pytest.raises(DimensionError):
            ls_huang_solve(A, [1.0, 1.0])

    def test_rhs_length_is_checked(self):
        with pytest.raises(DimensionError):
            ls_huang_solve(np.eye(3), [1.0, 2.0])


class TestGeneratedProblems:
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_every_method_recovers_x_star_on_well_conditioned_problem(self, seed):
        instance = build_problem(ProblemSpec(MatrixFamily.RR100, 140, 70, seed=seed))
        for kind in LS_KINDS:
            result = solve(kind, instance.A.array, instance.b)
            errors = compute_errors(instance, result)
            assert errors is not None, kind
            assert errors.solution_error <= 1e-8, kind
            assert errors.residual_error <= 1e-10, kind

    @pytest.mark.parametrize("shape", [(40, 30), (105, 95)])
    def test_exactly_rank_three_family(self, shape):
        instance = build_problem(ProblemSpec(MatrixFamily.IDF2, *shape, seed=1))
        A, b = instance.A.array, instance.b

        for kind in (SolverKind.MODIFIED_LS_HUANG_STORED_L, SolverKind.MODIFIED_LS_HUANG_NO_L):
            result = solve(kind, A, b)
            assert result.status is SolveStatus.RANK_DEFICIENT
            assert result.rank_detected <= 5

        implicit = solve(SolverKind.IMPLICIT_QR, A, b)
        assert implicit.status is SolveStatus.RANK_DEFICIENT
        assert implicit.rank_detected == 3
        assert implicit.steps_taken == 4

    def test_rank_two_family_stops_early(self):
        instance = build_problem(ProblemSpec(MatrixFamily.IDF3L, 105, 95, seed=1))
        A, b = instance.A.array, instance.b

        for kind in (SolverKind.MODIFIED_LS_HUANG_STORED_L, SolverKind.MODIFIED_LS_HUANG_NO_L, SolverKind.IMPLICIT_QR):
            result = solve(kind, A, b)
            assert result.status is SolveStatus.RANK_DEFICIENT, kind
            assert result.rank_detected == 2, kind
            assert result.steps_taken <= 4, kind

    def test_rank_two_family_is_solved_in_a_fraction_of_plain_huang_time(self):
        instance = build_problem(ProblemSpec(MatrixFamily.IDF3L, 105, 95, seed=1))
        A, b = instance.A.array, instance.b
        plain, plain_time = time_solver(lambda: solve(SolverKind.LS_HUANG_NO_L, A, b), repetitions=7)

        for kind in (SolverKind.MODIFIED_LS_HUANG_NO_L, SolverKind.IMPLICIT_QR):
            result, elapsed = time_solver(lambda kind=kind: solve(kind, A, b), repetitions=7)
            assert 2 * result.steps_taken <= plain.steps_taken, kind
            assert elapsed <= 0.5 * plain_time, kind


class TestDispatcher:
    def test_labels_and_timing(self, rng):
        A = rng.standard_normal((8, 3))
        b = rng.standard_normal(8)
        for kind in LS_KINDS:
            result = solve(kind, A, b)
            assert result.method == kind.value
            assert result.wall_time >= 0.0
            assert result.to_dict()["status"] == result.status.value

    def test_accepts_method_label(self):
        result = solve("qr lapack", np.eye(2), [1.0, 2.0])
        assert result.method == "qr lapack"
        np.testing.assert_allclose(result.x, [1.0, 2.0])

    def test_exactly_singular_qr_is_a_breakdown(self):
        A = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        result = solve(SolverKind.QR, A, [1.0, 1.0, 1.0])
        assert result.status is SolveStatus.BREAKDOWN
        assert result.steps_taken == 2

    def test_huang_kinds_are_dispatched(self, rng):
        A = rng.standard_normal((3, 6))
        b = rng.standard_normal(3)
        expected = np.linalg.pinv(A) @ b
        for kind in (SolverKind.HUANG1, SolverKind.HUANG2, SolverKind.MODIFIED_HUANG1, SolverKind.MODIFIED_HUANG2):
            np.testing.assert_allclose(solve(kind, A, b).x, expected, rtol=1e-8, atol=1e-10)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve("lu lapack", np.eye(2), [1.0, 1.0])
