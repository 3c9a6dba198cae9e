"""
Tests for the dense matrix container and the packed triangular solves.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abs_lsq.linalg import (
    DenseMatrix,
    DimensionError,
    LowerTriangular,
    SingularTriangularError,
    as_vector,
    back_substitute,
    forward_substitute,
    matvec,
    matvec_transposed,
)


def test_dense_matrix_is_one_based_and_column_major():
    A = DenseMatrix.from_rows([[1, 2], [3, 4]])
    assert A.shape == (2, 2)
    assert A.get(1, 2) == 2.0
    assert A.get(2, 1) == 3.0
    assert A.data.tolist() == [1.0, 3.0, 2.0, 4.0]


def test_dense_matrix_data_is_a_copy():
    A = DenseMatrix.from_rows([[1, 2], [3, 4]])
    flat = A.data
    flat[0] = 99.0
    assert A.get(1, 1) == 1.0


def test_dense_matrix_set_and_copy_are_independent():
    A = DenseMatrix.zeros(2, 3)
    B = A.copy()
    A.set(2, 3, 7.5)
    assert A.get(2, 3) == 7.5
    assert B.get(2, 3) == 0.0


@pytest.mark.parametrize("i, j", [(0, 1), (3, 1), (1, 0), (1, 4)])
def test_dense_matrix_rejects_out_of_range_index(i, j):
    A = DenseMatrix.zeros(2, 3)
    with pytest.raises(IndexError):
        A.get(i, j)


def test_dense_matrix_rejects_empty_and_non_2d():
    with pytest.raises(DimensionError):
        DenseMatrix(np.zeros((0, 3)))
    with pytest.raises(DimensionError):
        DenseMatrix(np.zeros(3))


def test_array_view_is_read_only():
    A = DenseMatrix.identity(3)
    with pytest.raises(ValueError):
        A.array[0, 0] = 5.0


def test_row_column_and_norm():
    A = DenseMatrix.from_rows([[3, 0], [4, 0]])
    assert A.column(1).tolist() == [3.0, 4.0]
    assert A.row(2).tolist() == [4.0, 0.0]
    assert A.frobenius_norm() == pytest.approx(5.0)


def test_matvec_checks_dimensions():
    A = DenseMatrix.from_rows([[1, 2, 3], [4, 5, 6]])
    assert matvec(A, [1, 0, 1]).tolist() == [4.0, 10.0]
    assert matvec_transposed(A, [1, 1]).tolist() == [5.0, 7.0, 9.0]
    with pytest.raises(DimensionError):
        matvec(A, [1, 2])
    with pytest.raises(DimensionError):
        matvec_transposed(A, [1, 2, 3])


def test_as_vector_rejects_empty():
    with pytest.raises(DimensionError):
        as_vector([])


def test_lower_triangular_packed_offsets():
    L = LowerTriangular(3)
    L.set(3, 2, 5.0)
    L.set(2, 2, 1.5)
    assert L.data[4] == 5.0
    assert L.data[2] == 1.5
    assert L.get(2, 3) == 0.0
    with pytest.raises(IndexError):
        L.set(1, 2, 1.0)
    with pytest.raises(IndexError):
        L.get(4, 1)


def test_lower_triangular_dense_round_trip_and_leading_block():
    dense = np.array([[2.0, 0.0, 0.0], [1.0, 3.0, 0.0], [4.0, 5.0, 6.0]])
    L = LowerTriangular.from_dense(dense)
    np.testing.assert_array_equal(L.to_dense(), dense)
    np.testing.assert_array_equal(L.diagonal(), [2.0, 3.0, 6.0])
    np.testing.assert_array_equal(L.leading(2).to_dense(), dense[:2, :2])
    with pytest.raises(DimensionError):
        L.leading(4)


def test_back_substitute_solves_transposed_system():
    L = LowerTriangular.from_dense([[2.0, 0.0], [1.0, 1.0]])
    x = back_substitute(L, [3.0, 1.0])
    np.testing.assert_allclose(x, [1.0, 1.0])
    np.testing.assert_allclose(back_substitute(L, [4.0, 2.0]), [1.0, 2.0])
    np.testing.assert_allclose(back_substitute(LowerTriangular.from_dense(np.eye(3)), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_forward_substitute_solves_lower_system():
    L = LowerTriangular.from_dense([[2.0, 0.0], [1.0, 1.0]])
    y = forward_substitute(L, [4.0, 5.0])
    np.testing.assert_allclose(y, [2.0, 3.0])


def test_zero_diagonal_reports_its_index():
    L = LowerTriangular.from_dense([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    with pytest.raises(SingularTriangularError) as excinfo:
        back_substitute(L, [1.0, 1.0, 1.0])
    assert excinfo.value.index == 2


def test_triangular_solve_checks_rhs_length():
    L = LowerTriangular.from_dense(np.eye(3))
    with pytest.raises(DimensionError):
        back_substitute(L, [1.0, 2.0])


@settings(max_examples=50, deadline=None)
@given(
    order=st.integers(min_value=1, max_value=8),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_triangular_solves_match_dense_residual(order, seed):
    gen = np.random.default_rng(seed)
    dense = np.tril(gen.uniform(-1.0, 1.0, (order, order)), -1) + np.diag(gen.uniform(1.0, 2.0, order))
    c = gen.uniform(-5.0, 5.0, order)
    L = LowerTriangular.from_dense(dense)

    x = back_substitute(L, c)
    y = forward_substitute(L, c)

    np.testing.assert_allclose(dense.T @ x, c, atol=1e-8)
    np.testing.assert_allclose(dense @ y, c, atol=1e-8)


def test_adjoint_identity(rng):
    A = DenseMatrix(rng.standard_normal((5, 3)))
    x = rng.standard_normal(3)
    y = rng.standard_normal(5)
    bound = 10 * np.finfo(float).eps * A.frobenius_norm() * np.linalg.norm(x) * np.linalg.norm(y)
    assert abs(matvec(A, x) @ y - x @ matvec_transposed(A, y)) <= bound
