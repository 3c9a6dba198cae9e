"""Dense matrix containers and triangular solves shared by every solver.

Matrices are stored column-major (Fortran order) in double precision. The
public element accessors are 1-based to match the usual textbook indexing;
everything numpy sees internally is 0-based.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

Vector = npt.NDArray[np.float64]


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class SingularTriangularError(ValueError):
    """Raised when a triangular factor has a zero diagonal entry."""

    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"Triangular factor is singular: zero diagonal entry at index {index}")


def as_vector(values: Union[Sequence[float], npt.ArrayLike]) -> Vector:
    """Return ``values`` as a one-dimensional float64 array with at least one entry."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionError(f"Expected a non-empty vector, got shape {arr.shape}")
    return arr


class DenseMatrix:
    """Column-major dense real matrix with bounds-checked 1-based access."""

    __slots__ = ("_data",)

    def __init__(self, data: npt.ArrayLike) -> None:
        arr = np.array(data, dtype=np.float64, order="F", copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"Expected a two-dimensional array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"Matrix must have at least one row and column, got {arr.shape}")
        self._data = arr

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> "DenseMatrix":
        return cls([list(row) for row in rows])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "DenseMatrix":
        return cls(np.zeros((rows, cols)))

    @classmethod
    def identity(cls, order: int) -> "DenseMatrix":
        return cls(np.eye(order))

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self._data.shape  # type: ignore[return-value]

    @property
    def array(self) -> npt.NDArray[np.float64]:
        """Read-only 2-D view of the entries."""
        view = self._data.view()
        view.flags.writeable = False
        return view

    @property
    def data(self) -> Vector:
        """Copy of the entries flattened in storage (column-major) order."""
        return self._data.flatten(order="F")

    def to_array(self) -> npt.NDArray[np.float64]:
        return self._data.copy(order="F")

    def copy(self) -> "DenseMatrix":
        return DenseMatrix(self._data)

    def get(self, i: int, j: int) -> float:
        self._check_index(i, j)
        return float(self._data[i - 1, j - 1])

    def set(self, i: int, j: int, value: float) -> None:
        self._check_index(i, j)
        self._data[i - 1, j - 1] = value

    def row(self, i: int) -> Vector:
        self._check_index(i, 1)
        return self._data[i - 1, :].copy()

    def column(self, j: int) -> Vector:
        self._check_index(1, j)
        return self._data[:, j - 1].copy()

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self._data))

    def _check_index(self, i: int, j: int) -> None:
        if not (1 <= i <= self.rows and 1 <= j <= self.cols):
            raise IndexError(
                f"Index ({i}, {j}) out of range for a {self.rows}x{self.cols} matrix"
            )

    def __repr__(self) -> str:
        return f"DenseMatrix(rows={self.rows}, cols={self.cols})"


MatrixLike = Union[DenseMatrix, npt.ArrayLike]


def as_array(matrix: MatrixLike) -> npt.NDArray[np.float64]:
    """Return a 2-D float64 numpy view of a DenseMatrix or array-like."""
    if isinstance(matrix, DenseMatrix):
        return matrix.array
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"Expected a non-empty two-dimensional array, got shape {arr.shape}")
    return arr


def matvec(matrix: MatrixLike, x: npt.ArrayLike) -> Vector:
    """Return ``A @ x``."""
    A = as_array(matrix)
    vec = as_vector(x)
    if A.shape[1] != vec.size:
        raise DimensionError(f"Cannot multiply {A.shape[0]}x{A.shape[1]} matrix by vector of length {vec.size}")
    return A @ vec


def matvec_transposed(matrix: MatrixLike, y: npt.ArrayLike) -> Vector:
    """Return ``A.T @ y``."""
    A = as_array(matrix)
    vec = as_vector(y)
    if A.shape[0] != vec.size:
        raise DimensionError(
            f"Cannot multiply transpose of {A.shape[0]}x{A.shape[1]} matrix by vector of length {vec.size}"
        )
    return A.T @ vec


class LowerTriangular:
    """Lower-triangular matrix in packed row-wise storage.

    Entry (i, j) with ``j <= i`` lives at offset ``i*(i-1)/2 + j - 1``;
    strictly-upper entries are not stored and read back as zero.
    """

    __slots__ = ("order", "_packed")

    def __init__(self, order: int) -> None:
        if order < 1:
            raise DimensionError(f"Triangular order must be positive, got {order}")
        self.order = order
        self._packed = np.zeros(order * (order + 1) // 2)

    @classmethod
    def from_dense(cls, matrix: npt.ArrayLike) -> "LowerTriangular":
        """Pack the lower triangle (diagonal included) of a square array."""
        arr = np.asarray(matrix, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"Expected a square array, got shape {arr.shape}")
        tri = cls(arr.shape[0])
        rows, cols = np.tril_indices(tri.order)
        tri._packed[:] = arr[rows, cols]
        return tri

    @property
    def data(self) -> Vector:
        return self._packed.copy()

    def get(self, i: int, j: int) -> float:
        self._check_index(i, j)
        if j > i:
            return 0.0
        return float(self._packed[self._offset(i, j)])

    def set(self, i: int, j: int, value: float) -> None:
        self._check_index(i, j)
        if j > i:
            raise IndexError(f"Cannot set strictly-upper entry ({i}, {j}) of a lower-triangular matrix")
        self._packed[self._offset(i, j)] = value

    def diagonal(self) -> Vector:
        idx = np.arange(1, self.order + 1)
        return self._packed[idx * (idx + 1) // 2 - 1].copy()

    def leading(self, order: int) -> "LowerTriangular":
        """Return the leading ``order x order`` block."""
        if not 1 <= order <= self.order:
            raise DimensionError(f"Leading block order {order} out of range 1..{self.order}")
        block = LowerTriangular(order)
        block._packed[:] = self._packed[: order * (order + 1) // 2]
        return block

    def to_dense(self) -> npt.NDArray[np.float64]:
        dense = np.zeros((self.order, self.order))
        rows, cols = np.tril_indices(self.order)
        dense[rows, cols] = self._packed
        return dense

    @staticmethod
    def _offset(i: int, j: int) -> int:
        return i * (i - 1) // 2 + j - 1

    def _check_index(self, i: int, j: int) -> None:
        if not (1 <= i <= self.order and 1 <= j <= self.order):
            raise IndexError(f"Index ({i}, {j}) out of range for order {self.order}")

    def __repr__(self) -> str:
        return f"LowerTriangular(order={self.order})"


def _check_triangular_system(L: LowerTriangular, c: npt.ArrayLike) -> Tuple[npt.NDArray[np.float64], Vector]:
    rhs = as_vector(c)
    if rhs.size != L.order:
        raise DimensionError(f"Right-hand side of length {rhs.size} does not match order {L.order}")
    diag = L.diagonal()
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise SingularTriangularError(int(zero[0]) + 1)
    return L.to_dense(), rhs


def back_substitute(L: LowerTriangular, c: npt.ArrayLike) -> Vector:
    """Solve ``L.T @ x = c`` for lower-triangular ``L``."""
    dense, rhs = _check_triangular_system(L, c)
    n = L.order
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        # Column i of L below the diagonal is row i of L.T right of the diagonal.
        x[i] = (rhs[i] - dense[i + 1 :, i] @ x[i + 1 :]) / dense[i, i]
    return x


def forward_substitute(L: LowerTriangular, c: npt.ArrayLike) -> Vector:
    """Solve ``L @ y = c`` for lower-triangular ``L``."""
    dense, rhs = _check_triangular_system(L, c)
    n = L.order
    y = np.zeros(n)
    for i in range(n):
        y[i] = (rhs[i] - dense[i, :i] @ y[:i]) / dense[i, i]
    return y


__all__ = [
    "Vector",
    "DimensionError",
    "SingularTriangularError",
    "DenseMatrix",
    "MatrixLike",
    "LowerTriangular",
    "as_vector",
    "as_array",
    "matvec",
    "matvec_transposed",
    "back_substitute",
    "forward_substitute",
]
