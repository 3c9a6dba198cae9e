"""Named ABS solvers: Huang, modified Huang, implicit QR and least-squares Huang.

Each solver is a self-contained specialisation of the scaled ABS iteration
with ``x_1 = 0`` and ``H_1 = I``. Rank deficiency is handled by skipping
dependent steps; when a skip shows that every remaining column is dependent
the solver stops instead of visiting them one by one.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import numpy.typing as npt

from .constants import (
    METHOD_HUANG6,
    METHOD_HUANG7,
    METHOD_IMPLICIT_QR,
    METHOD_MOD_HUANG6,
    METHOD_MOD_HUANG7,
    METHOD_PIVOTED_QR,
    METHOD_QR,
    METHOD_SVD,
    default_tolerance,
)
from .engine import ExplicitAbaffian, ProjectionAbaffian
from .linalg import DimensionError, LowerTriangular, MatrixLike, Vector, as_array, as_vector, back_substitute

logger = logging.getLogger(__name__)


class SolverKind(str, Enum):
    HUANG1 = "huang.explicit"
    HUANG2 = "huang.projection"
    MODIFIED_HUANG1 = "mod.huang.explicit"
    MODIFIED_HUANG2 = "mod.huang.projection"
    IMPLICIT_QR = METHOD_IMPLICIT_QR
    LS_HUANG_STORED_L = METHOD_HUANG6
    LS_HUANG_NO_L = METHOD_HUANG7
    MODIFIED_LS_HUANG_STORED_L = METHOD_MOD_HUANG6
    MODIFIED_LS_HUANG_NO_L = METHOD_MOD_HUANG7
    QR = METHOD_QR
    SVD = METHOD_SVD
    PIVOTED_QR = METHOD_PIVOTED_QR


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    RANK_DEFICIENT = "rank_deficient_completed"
    BREAKDOWN = "breakdown"
    INCOMPATIBLE = "incompatible"


@dataclass
class SolveResult:
    x: Vector
    rank_detected: int
    steps_taken: int
    status: SolveStatus
    wall_time: float = 0.0
    method: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "x": self.x.tolist(),
            "rank_detected": self.rank_detected,
            "steps_taken": self.steps_taken,
            "status": self.status.value,
            "wall_time": self.wall_time,
        }


def _prepare(A: MatrixLike, b: npt.ArrayLike) -> tuple:
    A_arr = as_array(A)
    b_vec = as_vector(b)
    if b_vec.size != A_arr.shape[0]:
        raise DimensionError(f"Right-hand side has length {b_vec.size}, expected {A_arr.shape[0]}")
    return A_arr, b_vec


def huang_solve(
    A: MatrixLike,
    b: npt.ArrayLike,
    modified: bool = False,
    representation: str = "explicit",
    tol: Optional[float] = None,
) -> SolveResult:
    """Huang / modified Huang on the rows of ``A`` from ``x_1 = 0``.

    For a compatible system the result is the minimum-norm solution.
    ``representation`` selects a dense H (``"explicit"``) or the projection
    form ``I - P D^{-1} P^T`` (``"projection"``).
    """
    A_arr, b_vec = _prepare(A, b)
    m, n = A_arr.shape
    if tol is None:
        tol = default_tolerance(m, n)
    if representation == "explicit":
        abaffian: Any = ExplicitAbaffian(np.eye(n))
    elif representation == "projection":
        abaffian = ProjectionAbaffian.identity(n)
    else:
        raise ValueError(f"Unknown Abaffian representation: {representation!r}")

    norm_b = float(np.linalg.norm(b_vec))
    x = np.zeros(n)
    rank = 0
    skipped = 0
    for i in range(m):
        a = A_arr[i]
        p = abaffian.apply(a)
        if modified:
            p = abaffian.apply(p)
        d = float(a @ p)
        residual = float(a @ x - b_vec[i])
        if abs(d) <= tol * float(a @ a):
            if abs(residual) <= tol * norm_b:
                skipped += 1
                logger.debug("Huang step %d skipped: row depends on earlier rows", i + 1)
                continue
            return SolveResult(x, rank, i + 1, SolveStatus.INCOMPATIBLE)
        x = x - (residual / d) * p
        if i < m - 1:
            if isinstance(abaffian, ProjectionAbaffian):
                abaffian = abaffian.appended(p, d)
            else:
                abaffian = ExplicitAbaffian(abaffian.H - np.outer(p, p) / d)
        rank += 1
    status = SolveStatus.RANK_DEFICIENT if skipped else SolveStatus.CONVERGED
    return SolveResult(x, rank, m, status)


class PivotClass(str, Enum):
    ACCEPT = "accept"
    SKIP = "skip"
    BREAKDOWN = "breakdown"


def classify_implicit_qr_pivot(
    vv: float,
    norm_s: float,
    rv: float,
    norm_r: float,
    norm_a: float,
    norm_p: float,
    tol: float,
) -> PivotClass:
    """Classify an implicit QR step from its pivot ``v_i^T v_i``.

    A pivot at or below ``tol * ||A||_F^2 * ||p_i||^2`` is numerically zero.
    Such a step is skipped as a dependent column when ``s_i = H_i A^T v_i``
    and ``r_i^T v_i`` are negligible on the same ``sqrt(tol)`` scale as ``v_i``
    itself; otherwise the step can neither be taken nor skipped.
    """
    if vv > tol * norm_a**2 * norm_p**2:
        return PivotClass.ACCEPT
    root = math.sqrt(tol)
    if norm_s <= root * norm_a**2 * norm_p and abs(rv) <= root * norm_a * norm_p * norm_r:
        return PivotClass.SKIP
    return PivotClass.BREAKDOWN


def _dependent_columns(
    A_rest: npt.NDArray[np.float64],
    project: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]],
    tol: float,
) -> bool:
    """True when every column of ``A_rest`` has a negligible projected pivot."""
    if A_rest.shape[1] == 0:
        return True
    projected = project(A_rest)
    pivots = np.abs(np.sum(A_rest * projected, axis=0))
    return bool(np.all(pivots <= tol * np.sum(A_rest * A_rest, axis=0)))


def implicit_qr_solve(A: MatrixLike, b: npt.ArrayLike, tol: Optional[float] = None) -> SolveResult:
    """Implicit QR (``v_i = A p_i, z_i = w_i = e_i``) for ``m >= n`` least squares.

    Steps are classified by :func:`classify_implicit_qr_pivot`: a numerically
    zero pivot ``v_i^T v_i`` skips the step (dependent column) unless the
    skip is impossible, which is a breakdown. Only the rows of H that can
    still be nonzero and the first ``i`` columns are touched at step ``i``.
    """
    A_arr, b_vec = _prepare(A, b)
    m, n = A_arr.shape
    if m < n:
        raise DimensionError(f"Implicit QR needs m >= n, got {m}x{n}")
    if tol is None:
        tol = default_tolerance(m, n)

    norm_a = float(np.linalg.norm(A_arr))
    H = np.eye(n)
    x = np.zeros(n)
    r = -b_vec.copy()
    skipped: List[int] = []
    rank = 0
    steps = 0
    for i in range(n):
        steps += 1
        p = H[i, : i + 1].copy()
        v = A_arr[:, : i + 1] @ p
        vv = float(v @ v)
        rv = float(r @ v)
        live = np.array(skipped + list(range(i + 1, n)), dtype=int)
        s = H[live] @ (A_arr.T @ v)
        norm_p = float(np.linalg.norm(p))
        verdict = classify_implicit_qr_pivot(
            vv, float(np.linalg.norm(s)), rv, float(np.linalg.norm(r)), norm_a, norm_p, tol
        )
        if verdict is PivotClass.BREAKDOWN:
            logger.debug("Implicit QR breakdown at step %d: pivot %.3e", i + 1, vv)
            return SolveResult(x, rank, steps, SolveStatus.BREAKDOWN)
        if verdict is PivotClass.SKIP:
            skipped.append(i)
            logger.debug("Implicit QR step %d skipped: pivot %.3e is numerically zero", i + 1, vv)
            rest = np.arange(i + 1, n)
            V_rest = A_arr @ H[rest].T
            limits = tol * norm_a**2 * np.sum(H[rest] ** 2, axis=1)
            if np.all(np.sum(V_rest**2, axis=0) <= limits):
                logger.debug("Implicit QR: remaining %d columns are dependent, stopping", rest.size)
                break
            continue
        alpha = rv / vv
        x[: i + 1] -= alpha * p
        r -= alpha * v
        if i < n - 1:
            H[np.ix_(live, np.arange(i + 1))] -= np.outer(s, p) / vv
            H[i, :] = 0.0
        rank += 1
    status = SolveStatus.CONVERGED if rank == n else SolveStatus.RANK_DEFICIENT
    return SolveResult(x, rank, steps, status)


def ls_huang_solve(
    A: MatrixLike,
    b: npt.ArrayLike,
    modified: bool = False,
    store_L: bool = True,
    tol: Optional[float] = None,
) -> SolveResult:
    """Least-squares Huang on the columns of ``A`` (``m >= n``).

    The forward sweep builds ``p_i`` from ``a~_i`` with ``g_i = P_{i-1}^T a~_i``
    and ``d_i = a~_i^T p_i``. With ``store_L`` the factor ``L = A^T P`` is
    assembled and ``L^T x = b~`` is back-substituted; otherwise x is recovered
    by the reverse recurrence ``x_i = p_i^T f_i / d_i``,
    ``f_{i-1} = f_i - x_i a~_i``. Dependent columns get ``x_i = 0``.
    """
    A_arr, b_vec = _prepare(A, b)
    m, n = A_arr.shape
    if m < n:
        raise DimensionError(f"Least-squares Huang needs m >= n, got {m}x{n}")
    if tol is None:
        tol = default_tolerance(m, n)

    P = np.zeros((m, n))
    d = np.zeros(n)
    accepted: List[int] = []
    L = LowerTriangular(n) if store_L else None
    b_tilde = np.zeros(n)
    steps = 0

    for i in range(n):
        steps += 1
        k = len(accepted)
        Pk = P[:, :k]
        a = A_arr[:, i]
        g = Pk.T @ a
        p = a - Pk @ (g / d[:k])
        if modified:
            p = p - Pk @ ((Pk.T @ p) / d[:k])
        d_i = float(a @ p)
        if abs(d_i) <= tol * float(a @ a):
            logger.debug("Least-squares Huang: column %d is dependent", i + 1)

            def project(block: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
                out = block - Pk @ ((Pk.T @ block) / d[:k, None])
                if modified:
                    out = out - Pk @ ((Pk.T @ out) / d[:k, None])
                return out

            if _dependent_columns(A_arr[:, i + 1 :], project, tol):
                logger.debug("Least-squares Huang: remaining %d columns are dependent, stopping", n - i - 1)
                break
            continue
        if L is not None:
            for j in range(k):
                L.set(k + 1, j + 1, g[j])
            L.set(k + 1, k + 1, d_i)
            b_tilde[k] = b_vec @ p
        P[:, k] = p
        d[k] = d_i
        accepted.append(i)

    rank = len(accepted)
    x = np.zeros(n)
    if rank:
        if L is not None:
            x[accepted] = back_substitute(L.leading(rank), b_tilde[:rank])
        else:
            f = b_vec.copy()
            for k in range(rank - 1, -1, -1):
                column = accepted[k]
                x[column] = float(P[:, k] @ f) / d[k]
                if k > 0:
                    f -= x[column] * A_arr[:, column]
    status = SolveStatus.CONVERGED if rank == n else SolveStatus.RANK_DEFICIENT
    return SolveResult(x, rank, steps, status)


def _registry() -> Dict[SolverKind, Callable[[npt.NDArray[np.float64], Vector, Optional[float]], SolveResult]]:
    from .baselines import pivoted_qr_least_squares, qr_least_squares, svd_least_squares

    return {
        SolverKind.HUANG1: lambda A, b, tol: huang_solve(A, b, False, "explicit", tol),
        SolverKind.HUANG2: lambda A, b, tol: huang_solve(A, b, False, "projection", tol),
        SolverKind.MODIFIED_HUANG1: lambda A, b, tol: huang_solve(A, b, True, "explicit", tol),
        SolverKind.MODIFIED_HUANG2: lambda A, b, tol: huang_solve(A, b, True, "projection", tol),
        SolverKind.IMPLICIT_QR: lambda A, b, tol: implicit_qr_solve(A, b, tol),
        SolverKind.LS_HUANG_STORED_L: lambda A, b, tol: ls_huang_solve(A, b, False, True, tol),
        SolverKind.LS_HUANG_NO_L: lambda A, b, tol: ls_huang_solve(A, b, False, False, tol),
        SolverKind.MODIFIED_LS_HUANG_STORED_L: lambda A, b, tol: ls_huang_solve(A, b, True, True, tol),
        SolverKind.MODIFIED_LS_HUANG_NO_L: lambda A, b, tol: ls_huang_solve(A, b, True, False, tol),
        SolverKind.QR: lambda A, b, tol: qr_least_squares(A, b),
        SolverKind.SVD: lambda A, b, tol: svd_least_squares(A, b, tol),
        SolverKind.PIVOTED_QR: lambda A, b, tol: pivoted_qr_least_squares(A, b, tol),
    }


def solve(kind: SolverKind, A: MatrixLike, b: npt.ArrayLike, tol: Optional[float] = None) -> SolveResult:
    """Run one roster method and time the solver body only.

    An exactly singular R in the unpivoted QR baseline is reported as a
    breakdown result, like an ABS breakdown, rather than raised.
    """
    from .baselines import SingularMatrixError

    kind = SolverKind(kind)
    A_arr, b_vec = _prepare(A, b)
    body = _registry()[kind]
    start = time.perf_counter()
    try:
        result = body(A_arr, b_vec, tol)
    except SingularMatrixError as exc:
        logger.debug("%s: %s", kind.value, exc)
        result = SolveResult(np.zeros(A_arr.shape[1]), exc.index - 1, exc.index, SolveStatus.BREAKDOWN)
    result.wall_time = time.perf_counter() - start
    result.method = kind.value
    return result


__all__ = [
    "SolverKind",
    "SolveStatus",
    "SolveResult",
    "PivotClass",
    "classify_implicit_qr_pivot",
    "huang_solve",
    "implicit_qr_solve",
    "ls_huang_solve",
    "solve",
]
