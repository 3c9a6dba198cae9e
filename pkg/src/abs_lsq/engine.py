"""Generic scaled ABS iteration.

One call to :func:`abs_step` performs a single scaled ABS step for the
parameter choices carried by :class:`AbsParameters`; :func:`run_abs`
repeats it until the system is solved, found incompatible, breaks down or the
step cap is reached. The Abaffian ``H_i`` is kept either as an explicit n x n
matrix or, for Huang-type choices, in the projection form
``H_{i+1} = I - P_i D_i^{-1} P_i^T``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt

from .constants import default_tolerance
from .linalg import DimensionError, MatrixLike, SingularTriangularError, Vector, as_array, as_vector

logger = logging.getLogger(__name__)


class AbsBreakdownError(RuntimeError):
    """The pivot ``w_i^T H_i A^T v_i`` vanished while ``s_i`` did not."""

    def __init__(self, step: int, pivot: float) -> None:
        self.step = step
        self.pivot = pivot
        super().__init__(f"ABS breakdown at step {step}: pivot {pivot:.3e} is numerically zero")


class MissingHistoryError(RuntimeError):
    """Raised when a check needs step history that was not retained."""


class StepKind(str, Enum):
    ACCEPTED = "accepted"
    SKIPPED = "skipped"
    INCOMPATIBLE = "incompatible"
    SOLVED = "solved"


class TerminationStatus(str, Enum):
    SOLVED = "solved"
    COMPLETED = "completed"
    INCOMPATIBLE = "incompatible"
    BREAKDOWN = "breakdown"


@dataclass(frozen=True)
class ExplicitAbaffian:
    """Abaffian stored as a dense n x n matrix."""

    H: npt.NDArray[np.float64]

    def apply(self, y: Vector) -> Vector:
        return self.H @ y

    def apply_transposed(self, z: Vector) -> Vector:
        return self.H.T @ z

    def to_dense(self) -> npt.NDArray[np.float64]:
        return self.H.copy()

    def updated(self, s: Vector, t: Vector, pivot: float) -> "ExplicitAbaffian":
        return ExplicitAbaffian(self.H - np.outer(s, t) / pivot)


@dataclass(frozen=True)
class ProjectionAbaffian:
    """Abaffian ``I - P D^{-1} P^T`` kept as the columns of P and the diagonal of D."""

    P: npt.NDArray[np.float64]
    d: Vector

    @classmethod
    def identity(cls, n: int) -> "ProjectionAbaffian":
        return cls(np.zeros((n, 0)), np.zeros(0))

    def apply(self, y: Vector) -> Vector:
        if self.d.size == 0:
            return y.copy()
        return y - self.P @ ((self.P.T @ y) / self.d)

    apply_transposed = apply

    def to_dense(self) -> npt.NDArray[np.float64]:
        n = self.P.shape[0]
        return np.eye(n) - (self.P / self.d) @ self.P.T

    def appended(self, p: Vector, d: float) -> "ProjectionAbaffian":
        return ProjectionAbaffian(np.column_stack([self.P, p]), np.append(self.d, d))


AbaffianRep = Union[ExplicitAbaffian, ProjectionAbaffian]


def expand_abaffian(rep: AbaffianRep) -> npt.NDArray[np.float64]:
    """Return the explicit matrix of either representation."""
    return rep.to_dense()


@dataclass(frozen=True)
class StepRecord:
    p: Vector
    v: Vector
    w: Vector
    d: float


@dataclass(frozen=True)
class AbsState:
    """Iteration state before step ``iter`` (1-based)."""

    iter: int
    x: Vector
    abaffian: AbaffianRep
    residual: Optional[Vector] = None
    rank_detected: int = 0
    history: Optional[Tuple[StepRecord, ...]] = None


ChooseV = Callable[[AbsState, npt.NDArray[np.float64], Vector], Vector]
ChooseZW = Callable[[AbsState, npt.NDArray[np.float64]], Vector]


@dataclass(frozen=True)
class AbsParameters:
    """Choice functions and starting point of one member of the scaled ABS class.

    ``basic_class`` marks ``v_i = e_i``: only the i-th residual component is
    formed and no full residual is carried. ``row_steps`` / ``column_steps``
    say which unit vectors the choices index (``e_i`` in R^m or in R^n), and
    so how many steps exist at all.
    """

    choose_v: ChooseV
    choose_z: ChooseZW
    choose_w: ChooseZW
    H1: Optional[npt.NDArray[np.float64]] = None
    x1: Optional[Vector] = None
    representation: str = "explicit"
    basic_class: bool = False
    row_steps: bool = True
    column_steps: bool = False

    def step_cap(self, m: int, n: int) -> int:
        """Number of steps the choice functions can supply for an m x n system."""
        cap = m if self.row_steps else n
        return min(cap, n) if self.column_steps else cap

    def initial_state(self, A: npt.NDArray[np.float64], b: Vector, keep_history: bool = False) -> AbsState:
        m, n = A.shape
        x1 = np.zeros(n) if self.x1 is None else as_vector(self.x1).copy()
        if x1.size != n:
            raise DimensionError(f"Initial iterate has length {x1.size}, expected {n}")
        if self.representation == "projection":
            if self.H1 is not None:
                raise ValueError("The projection representation requires H1 = I")
            abaffian: AbaffianRep = ProjectionAbaffian.identity(n)
        elif self.representation == "explicit":
            H1 = np.eye(n) if self.H1 is None else np.array(self.H1, dtype=np.float64)
            if H1.shape != (n, n):
                raise DimensionError(f"H1 must be {n}x{n}, got {H1.shape}")
            abaffian = ExplicitAbaffian(H1)
        else:
            raise ValueError(f"Unknown Abaffian representation: {self.representation!r}")
        residual = None if self.basic_class else A @ x1 - b
        return AbsState(
            iter=1,
            x=x1,
            abaffian=abaffian,
            residual=residual,
            history=() if keep_history else None,
        )


@dataclass(frozen=True)
class StepOutcome:
    kind: StepKind
    state: AbsState
    alpha: Optional[float] = None
    p: Optional[Vector] = None


def _unit(n: int, i: int) -> Vector:
    e = np.zeros(n)
    e[i - 1] = 1.0
    return e


def huang_parameters(modified: bool = False, representation: str = "explicit") -> AbsParameters:
    """``H_1 = I, v_i = e_i, z_i = w_i = a_i``; modified Huang reprojects ``z_i = H_i a_i``."""

    def choose_v(state: AbsState, A: npt.NDArray[np.float64], b: Vector) -> Vector:
        return _unit(A.shape[0], state.iter)

    def choose_z(state: AbsState, A: npt.NDArray[np.float64]) -> Vector:
        a = A[state.iter - 1]
        return state.abaffian.apply(a) if modified else a.copy()

    def choose_w(state: AbsState, A: npt.NDArray[np.float64]) -> Vector:
        return A[state.iter - 1].copy()

    return AbsParameters(
        choose_v=choose_v,
        choose_z=choose_z,
        choose_w=choose_w,
        representation=representation,
        basic_class=True,
    )


def implicit_qr_parameters() -> AbsParameters:
    """``H_1 = I, v_i = A p_i, z_i = w_i = e_i``."""

    def choose_v(state: AbsState, A: npt.NDArray[np.float64], b: Vector) -> Vector:
        p = state.abaffian.apply_transposed(_unit(A.shape[1], state.iter))
        return A @ p

    def choose_zw(state: AbsState, A: npt.NDArray[np.float64]) -> Vector:
        return _unit(A.shape[1], state.iter)

    return AbsParameters(choose_v=choose_v, choose_z=choose_zw, choose_w=choose_zw, row_steps=False, column_steps=True)


def implicit_lu_parameters() -> AbsParameters:
    """``H_1 = I, v_i = z_i = w_i = e_i``."""

    def choose_v(state: AbsState, A: npt.NDArray[np.float64], b: Vector) -> Vector:
        return _unit(A.shape[0], state.iter)

    def choose_zw(state: AbsState, A: npt.NDArray[np.float64]) -> Vector:
        return _unit(A.shape[1], state.iter)

    return AbsParameters(
        choose_v=choose_v,
        choose_z=choose_zw,
        choose_w=choose_zw,
        basic_class=True,
        column_steps=True,
    )


def abs_step(
    state: AbsState,
    A: MatrixLike,
    b: Vector,
    params: AbsParameters,
    tol: Optional[float] = None,
) -> StepOutcome:
    """Perform one scaled ABS step from ``state``.

    Raises:
        AbsBreakdownError: if ``|w_i^T H_i A^T v_i|`` is numerically zero while
            ``s_i = H_i A^T v_i`` is not.
        ValueError: if the parameters have no step ``state.iter`` for this system.
    """
    A_arr = as_array(A)
    b_vec = as_vector(b)
    m, _ = A_arr.shape
    if b_vec.size != m:
        raise DimensionError(f"Right-hand side has length {b_vec.size}, expected {m}")
    if tol is None:
        tol = default_tolerance(*A_arr.shape)
    if tol < 0:
        raise ValueError(f"Tolerance must be nonnegative, got {tol}")

    i = state.iter
    cap = params.step_cap(*A_arr.shape)
    if i > cap:
        raise ValueError(f"No step {i}: the parameter choices supply {cap} steps")
    norm_a = float(np.linalg.norm(A_arr))
    norm_b = float(np.linalg.norm(b_vec))

    if state.residual is not None and float(np.linalg.norm(state.residual)) <= tol * norm_b:
        return StepOutcome(StepKind.SOLVED, state)

    v = as_vector(params.choose_v(state, A_arr, b_vec))
    norm_v = float(np.linalg.norm(v))
    if params.basic_class:
        row = A_arr[i - 1]
        atv = row
        rv = float(row @ state.x - b_vec[i - 1])
    else:
        atv = A_arr.T @ v
        rv = float(state.residual @ v)

    s = state.abaffian.apply(atv)
    if float(np.linalg.norm(s)) <= tol * norm_a * norm_v:
        if abs(rv) <= tol * norm_b * norm_v:
            logger.debug("ABS step %d skipped: s_i and r_i^T v_i vanish", i)
            return StepOutcome(StepKind.SKIPPED, replace(state, iter=i + 1))
        logger.debug("ABS step %d: s_i vanishes but r_i^T v_i = %.3e", i, rv)
        return StepOutcome(StepKind.INCOMPATIBLE, state)

    z = as_vector(params.choose_z(state, A_arr))
    w = as_vector(params.choose_w(state, A_arr))
    p = state.abaffian.apply_transposed(z)
    norm_s = float(np.linalg.norm(s))
    pivot = float(w @ s)
    denominator = float(p @ atv)
    if abs(pivot) <= tol * float(np.linalg.norm(w)) * norm_s:
        raise AbsBreakdownError(i, pivot)
    if abs(denominator) <= tol * float(np.linalg.norm(z)) * norm_s:
        raise AbsBreakdownError(i, denominator)

    alpha = rv / denominator
    x_next = state.x - alpha * p
    residual = None if state.residual is None else state.residual - alpha * (A_arr @ p)

    if isinstance(state.abaffian, ProjectionAbaffian):
        abaffian: AbaffianRep = state.abaffian.appended(p, denominator)
    else:
        abaffian = state.abaffian.updated(s, state.abaffian.apply_transposed(w), pivot)

    history = state.history
    if history is not None:
        history = history + (StepRecord(p=p, v=v, w=w, d=denominator),)

    next_state = AbsState(
        iter=i + 1,
        x=x_next,
        abaffian=abaffian,
        residual=residual,
        rank_detected=state.rank_detected + 1,
        history=history,
    )
    return StepOutcome(StepKind.ACCEPTED, next_state, alpha=alpha, p=p)


def run_abs(
    A: MatrixLike,
    b: Vector,
    params: AbsParameters,
    tol: Optional[float] = None,
    max_steps: Optional[int] = None,
    keep_history: bool = False,
) -> Tuple[AbsState, TerminationStatus]:
    """Iterate :func:`abs_step` from the parameters' starting point.

    ``max_steps`` defaults to the number of equations and is clamped to the
    steps the parameter choices can supply (n for implicit QR); running out of
    steps ends the run as :attr:`TerminationStatus.COMPLETED`. A breakdown
    stops the run and is reported as :attr:`TerminationStatus.BREAKDOWN`
    together with the last consistent state.
    """
    A_arr = as_array(A)
    b_vec = as_vector(b)
    if max_steps is None:
        max_steps = A_arr.shape[0]
    if max_steps < 1:
        raise ValueError(f"max_steps must be at least 1, got {max_steps}")
    cap = params.step_cap(*A_arr.shape)
    if max_steps > cap:
        logger.debug("Step cap lowered from %d to %d", max_steps, cap)
        max_steps = cap

    state = params.initial_state(A_arr, b_vec, keep_history=keep_history)
    for _ in range(max_steps):
        try:
            outcome = abs_step(state, A_arr, b_vec, params, tol)
        except AbsBreakdownError as exc:
            logger.debug("%s", exc)
            return state, TerminationStatus.BREAKDOWN
        if outcome.kind is StepKind.SOLVED:
            return outcome.state, TerminationStatus.SOLVED
        if outcome.kind is StepKind.INCOMPATIBLE:
            return outcome.state, TerminationStatus.INCOMPATIBLE
        state = outcome.state
    return state, TerminationStatus.COMPLETED


def general_solution_point(state: AbsState, q: npt.ArrayLike) -> Vector:
    """Return ``x_i + H_i^T q``, a solution of the processed scaled subsystem."""
    q_vec = as_vector(q)
    if q_vec.size != state.x.size:
        raise DimensionError(f"q has length {q_vec.size}, expected {state.x.size}")
    return state.x + state.abaffian.apply_transposed(q_vec)


def implicit_factorization_check(state: AbsState, A: MatrixLike) -> float:
    """Largest strictly-upper entry of ``V_i^T A P_i``; ideally zero.

    Raises:
        MissingHistoryError: if the run did not keep its step history.
        SingularTriangularError: if an accepted step left a zero diagonal entry.
    """
    if state.history is None:
        raise MissingHistoryError("implicit_factorization_check needs a run with keep_history=True")
    if not state.history:
        return 0.0
    A_arr = as_array(A)
    V = np.column_stack([record.v for record in state.history])
    P = np.column_stack([record.p for record in state.history])
    L = V.T @ A_arr @ P
    zero = np.flatnonzero(np.diag(L) == 0.0)
    if zero.size:
        raise SingularTriangularError(int(zero[0]) + 1)
    return float(np.max(np.abs(np.triu(L, 1)), initial=0.0))


def abaffian_annihilation_check(state: AbsState) -> float:
    """``max|H_i^T W|`` over the processed ``w_j``, relative to ``max(1, max|H_i|) * max|W|``.

    Raises:
        MissingHistoryError: if the run did not keep its step history.
    """
    if state.history is None:
        raise MissingHistoryError("abaffian_annihilation_check needs a run with keep_history=True")
    if not state.history:
        return 0.0
    W = np.column_stack([record.w for record in state.history])
    H = state.abaffian.to_dense()
    scale = max(1.0, float(np.max(np.abs(H)))) * float(np.max(np.abs(W)))
    return float(np.max(np.abs(H.T @ W))) / scale


def modified_direction_excess(A: MatrixLike, b: Vector, tol: Optional[float] = None) -> float:
    """How far modified Huang directions leave the processed rows beyond plain ones.

    Along a modified Huang run, returns the largest
    ``(||A_{i-1} p_i|| - ||A_{i-1} p_i^plain||) / (||A||_F ||p_i||)`` where
    ``p_i^plain = H_i^T a_i`` is the direction plain Huang would take from
    the same Abaffian. Nonpositive values mean the reprojection never hurt.
    """
    A_arr = as_array(A)
    b_vec = as_vector(b)
    params = huang_parameters(modified=True)
    norm_a = float(np.linalg.norm(A_arr))
    state = params.initial_state(A_arr, b_vec)
    excess = -np.inf
    for i in range(1, A_arr.shape[0] + 1):
        if i > 1:
            a = A_arr[i - 1]
            plain = state.abaffian.apply_transposed(a)
            modified = state.abaffian.apply_transposed(state.abaffian.apply(a))
            norm_p = float(np.linalg.norm(modified))
            if norm_p > 0.0:
                processed = A_arr[: i - 1]
                gap = float(np.linalg.norm(processed @ modified)) - float(np.linalg.norm(processed @ plain))
                excess = max(excess, gap / (norm_a * norm_p))
        try:
            outcome = abs_step(state, A_arr, b_vec, params, tol)
        except AbsBreakdownError:
            break
        if outcome.kind not in (StepKind.ACCEPTED, StepKind.SKIPPED):
            break
        state = outcome.state
    return float(excess) if np.isfinite(excess) else 0.0


__all__ = [
    "AbsBreakdownError",
    "MissingHistoryError",
    "StepKind",
    "TerminationStatus",
    "ExplicitAbaffian",
    "ProjectionAbaffian",
    "AbaffianRep",
    "StepRecord",
    "AbsState",
    "AbsParameters",
    "StepOutcome",
    "expand_abaffian",
    "huang_parameters",
    "implicit_qr_parameters",
    "implicit_lu_parameters",
    "abs_step",
    "run_abs",
    "general_solution_point",
    "implicit_factorization_check",
    "abaffian_annihilation_check",
    "modified_direction_excess",
]
