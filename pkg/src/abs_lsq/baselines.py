"""Dense least-squares baselines the ABS solvers are compared against.

Three routines play the role of the usual LAPACK drivers:

* ``qr_least_squares``: Householder QR without pivoting, no rank detection.
* ``pivoted_qr_least_squares``: column-pivoted Householder QR with a
  relative ``rcond`` cut on the diagonal of R.
* ``svd_least_squares``: one-sided (Hestenes) Jacobi SVD, also used as the
  reference oracle and for condition numbers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from .constants import MACHINE_EPS, default_tolerance
from .linalg import DimensionError, LowerTriangular, MatrixLike, Vector, as_array, as_vector, back_substitute
from .solvers import SolveResult, SolveStatus

logger = logging.getLogger(__name__)

DEFAULT_MAX_SWEEPS = 60


class SingularMatrixError(ValueError):
    """R has an exactly zero diagonal entry."""

    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"Matrix is singular: R[{index}, {index}] is exactly zero")


class SvdConvergenceError(RuntimeError):
    """Jacobi sweeps did not converge within the sweep budget."""

    def __init__(self, sweeps: int, off: float) -> None:
        self.sweeps = sweeps
        self.off = off
        super().__init__(f"Jacobi SVD did not converge after {sweeps} sweeps (off-diagonal ratio {off:.3e})")


@dataclass
class QrFactorization:
    """Householder QR, ``A[:, perm] = Q R``.

    Column ``j`` of ``reflectors`` holds the Householder vector ``w_j``
    (``w_j[j] = 1``, zeros above) and ``tau[j]`` its scale, so that
    ``H_j = I - tau_j w_j w_j^T``.
    """

    reflectors: npt.NDArray[np.float64]
    tau: Vector
    R: npt.NDArray[np.float64]
    permutation: Optional[npt.NDArray[np.int_]] = None
    rank: int = 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.reflectors.shape[0], self.R.shape[1]

    def apply_qt(self, y: npt.ArrayLike) -> Vector:
        """Return ``Q^T y``."""
        out = np.array(y, dtype=np.float64)
        for j in range(self.tau.size):
            w = self.reflectors[j:, j]
            out[j:] -= self.tau[j] * w * (w @ out[j:])
        return out

    def explicit_q(self) -> npt.NDArray[np.float64]:
        """Thin Q with ``min(m, n)`` orthonormal columns."""
        m = self.reflectors.shape[0]
        k = self.tau.size
        Q = np.eye(m)[:, :k]
        for j in range(k - 1, -1, -1):
            w = self.reflectors[j:, j]
            Q[j:, :] -= self.tau[j] * np.outer(w, w @ Q[j:, :])
        return Q

    def numerical_rank(self, rcond: float) -> int:
        """Largest k with ``|R_kk| > rcond * |R_11|`` over a leading run of the diagonal."""
        diag = np.abs(np.diag(self.R))
        if diag.size == 0 or diag[0] == 0.0:
            return 0
        small = np.flatnonzero(diag <= rcond * diag[0])
        return int(small[0]) if small.size else int(diag.size)


def householder_qr(A: MatrixLike, pivoting: bool = False) -> QrFactorization:
    """Unblocked Householder QR, optionally with greedy column pivoting."""
    R = np.array(as_array(A), dtype=np.float64)
    m, n = R.shape
    k = min(m, n)
    reflectors = np.zeros((m, k))
    tau = np.zeros(k)
    perm = np.arange(n)

    for j in range(k):
        if pivoting:
            norms = np.linalg.norm(R[j:, j:], axis=0)
            best = int(np.argmax(norms)) + j
            if best != j:
                R[:, [j, best]] = R[:, [best, j]]
                perm[[j, best]] = perm[[best, j]]

        x = R[j:, j]
        norm_x = float(np.linalg.norm(x))
        reflectors[j, j] = 1.0
        if norm_x == 0.0:
            continue
        sign = -np.sign(x[0]) if x[0] != 0 else -1.0
        u1 = x[0] - sign * norm_x
        w = x / u1
        w[0] = 1.0
        tau[j] = -sign * u1 / norm_x
        R[j:, j:] -= np.outer(tau[j] * w, w @ R[j:, j:])
        reflectors[j:, j] = w

    return QrFactorization(
        reflectors=reflectors,
        tau=tau,
        R=np.triu(R[:k, :]),
        permutation=perm if pivoting else None,
        rank=k,
    )


def _upper_solve(R: npt.NDArray[np.float64], c: Vector) -> Vector:
    # R x = c is L^T x = c with L = R^T.
    return back_substitute(LowerTriangular.from_dense(R.T), c)


def _require_tall(A: npt.NDArray[np.float64], b: Vector, what: str) -> None:
    m, n = A.shape
    if m < n:
        raise DimensionError(f"{what} needs m >= n, got {m}x{n}")
    if b.size != m:
        raise DimensionError(f"Right-hand side has length {b.size}, expected {m}")


def qr_least_squares(A: MatrixLike, b: npt.ArrayLike) -> SolveResult:
    """Least squares through unpivoted QR; the rank is always reported as n."""
    A_arr = as_array(A)
    b_vec = as_vector(b)
    _require_tall(A_arr, b_vec, "QR least squares")
    n = A_arr.shape[1]
    fac = householder_qr(A_arr)
    zero = np.flatnonzero(np.diag(fac.R) == 0.0)
    if zero.size:
        raise SingularMatrixError(int(zero[0]) + 1)
    c = fac.apply_qt(b_vec)[:n]
    x = _upper_solve(fac.R[:n, :n], c)
    return SolveResult(x, n, n, SolveStatus.CONVERGED)


def pivoted_qr_least_squares(A: MatrixLike, b: npt.ArrayLike, rcond: Optional[float] = None) -> SolveResult:
    """Rank-revealing least squares through column-pivoted QR.

    Free variables of the truncated problem are set to zero (basic solution).
    """
    A_arr = as_array(A)
    b_vec = as_vector(b)
    _require_tall(A_arr, b_vec, "Pivoted QR least squares")
    m, n = A_arr.shape
    if rcond is None:
        rcond = default_tolerance(m, n)
    if rcond < 0:
        raise ValueError(f"rcond must be nonnegative, got {rcond}")

    fac = householder_qr(A_arr, pivoting=True)
    rank = fac.numerical_rank(rcond)
    fac.rank = rank
    x = np.zeros(n)
    if rank:
        c = fac.apply_qt(b_vec)[:rank]
        z = _upper_solve(fac.R[:rank, :rank], c)
        assert fac.permutation is not None
        x[fac.permutation[:rank]] = z
    status = SolveStatus.CONVERGED if rank == n else SolveStatus.RANK_DEFICIENT
    return SolveResult(x, rank, n, status)


@dataclass
class SvdFactorization:
    """Thin SVD ``A = U diag(s) V^T`` with ``s`` sorted descending."""

    U: npt.NDArray[np.float64]
    s: Vector
    V: npt.NDArray[np.float64]
    sweeps: int = 0

    def rank(self, rcond: float) -> int:
        if self.s.size == 0 or self.s[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.s > rcond * self.s[0]))

    def condition_number(self, rank: Optional[int] = None) -> float:
        """``s_1 / s_min``, or ``s_1 / s_rank`` when a rank is given."""
        last = self.s[-1] if rank is None else self.s[rank - 1]
        if last == 0.0:
            return float("inf")
        return float(self.s[0] / last)

    def reconstruct(self) -> npt.NDArray[np.float64]:
        return (self.U * self.s) @ self.V.T

    def solve(self, b: npt.ArrayLike, rcond: float) -> Tuple[Vector, int]:
        """Minimum-norm least-squares solution keeping ``s_k > rcond * s_1``."""
        b_vec = as_vector(b)
        r = self.rank(rcond)
        coeffs = (self.U[:, :r].T @ b_vec) / self.s[:r]
        return self.V[:, :r] @ coeffs, r


def _round_robin(n: int) -> Iterator[Tuple[npt.NDArray[np.int_], npt.NDArray[np.int_]]]:
    """Yield ``n - 1`` (or ``n``) rounds of disjoint column pairs covering every pair once."""
    players: List[int] = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    for _ in range(size - 1):
        left = players[: size // 2]
        right = players[size // 2 :][::-1]
        pairs = [(p, q) if p < q else (q, p) for p, q in zip(left, right) if p >= 0 and q >= 0]
        if pairs:
            arr = np.array(pairs, dtype=int)
            yield arr[:, 0], arr[:, 1]
        players = [players[0], players[-1]] + players[1:-1]


def _hestenes(M: npt.NDArray[np.float64], max_sweeps: int) -> SvdFactorization:
    m, n = M.shape
    U = M.copy()
    V = np.eye(n)
    threshold = m * MACHINE_EPS
    off = 0.0
    for sweep in range(1, max_sweeps + 1):
        off = 0.0
        rotated = False
        for p, q in _round_robin(n):
            alpha = np.sum(U[:, p] ** 2, axis=0)
            beta = np.sum(U[:, q] ** 2, axis=0)
            gamma = np.sum(U[:, p] * U[:, q], axis=0)
            scale = np.sqrt(alpha * beta)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(scale > 0.0, np.abs(gamma) / scale, 0.0)
            off = max(off, float(np.max(ratio, initial=0.0)))
            active = ratio > threshold
            if not np.any(active):
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0.0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta**2))
            c = 1.0 / np.sqrt(1.0 + t**2)
            s = c * t
            for X in (U, V):
                Xp = X[:, p].copy()
                Xq = X[:, q]
                X[:, p] = c * Xp - s * Xq
                X[:, q] = s * Xp + c * Xq
        if not rotated:
            logger.debug("Jacobi SVD converged after %d sweeps", sweep)
            sigma = np.linalg.norm(U, axis=0)
            order = np.argsort(-sigma, kind="stable")
            sigma = sigma[order]
            U = U[:, order]
            V = V[:, order]
            with np.errstate(divide="ignore", invalid="ignore"):
                U = np.where(sigma > 0.0, U / sigma, 0.0)
            return SvdFactorization(U=U, s=sigma, V=V, sweeps=sweep)
    raise SvdConvergenceError(max_sweeps, off)


def jacobi_svd(A: MatrixLike, max_sweeps: int = DEFAULT_MAX_SWEEPS) -> SvdFactorization:
    """One-sided Jacobi SVD of a dense matrix of any shape.

    Raises:
        SvdConvergenceError: if some column pair is still not orthogonal to
            ``m * eps`` after ``max_sweeps`` sweeps.
    """
    A_arr = as_array(A)
    m, n = A_arr.shape
    if m >= n:
        return _hestenes(np.array(A_arr, dtype=np.float64), max_sweeps)
    wide = _hestenes(np.array(A_arr.T, dtype=np.float64), max_sweeps)
    return SvdFactorization(U=wide.V, s=wide.s, V=wide.U, sweeps=wide.sweeps)


def svd_least_squares(A: MatrixLike, b: npt.ArrayLike, rcond: Optional[float] = None) -> SolveResult:
    A_arr = as_array(A)
    b_vec = as_vector(b)
    _require_tall(A_arr, b_vec, "SVD least squares")
    m, n = A_arr.shape
    if rcond is None:
        rcond = default_tolerance(m, n)
    if rcond < 0:
        raise ValueError(f"rcond must be nonnegative, got {rcond}")
    fac = jacobi_svd(A_arr)
    x, rank = fac.solve(b_vec, rcond)
    status = SolveStatus.CONVERGED if rank == n else SolveStatus.RANK_DEFICIENT
    return SolveResult(x, rank, fac.sweeps, status)


def minimum_norm_solution(A: MatrixLike, b: npt.ArrayLike, rcond: Optional[float] = None) -> Vector:
    """Pseudo-inverse solution ``A^+ b`` for a matrix of any shape."""
    A_arr = as_array(A)
    b_vec = as_vector(b)
    if b_vec.size != A_arr.shape[0]:
        raise DimensionError(f"Right-hand side has length {b_vec.size}, expected {A_arr.shape[0]}")
    if rcond is None:
        rcond = default_tolerance(*A_arr.shape)
    x, _ = jacobi_svd(A_arr).solve(b_vec, rcond)
    return x


def condition_number(A: MatrixLike) -> float:
    """``s_1 / s_min`` of ``A`` from the Jacobi SVD."""
    return jacobi_svd(A).condition_number()


__all__ = [
    "SingularMatrixError",
    "SvdConvergenceError",
    "QrFactorization",
    "SvdFactorization",
    "householder_qr",
    "jacobi_svd",
    "qr_least_squares",
    "pivoted_qr_least_squares",
    "svd_least_squares",
    "minimum_norm_solution",
    "condition_number",
]
