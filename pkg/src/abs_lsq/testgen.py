"""Reproducible least-squares test problems.

Every random draw comes from a MINSTD Lehmer generator so that an instance is
fully determined by ``(family, m, n, seed, perturbation)``. Right-hand sides
are built as ``b = b~ + A x*`` with ``A^T b~ = 0``, which makes the system
incompatible while ``x*`` stays the exact least-squares solution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt

from .constants import MACHINE_EPS
from .linalg import DenseMatrix, DimensionError, Vector

logger = logging.getLogger(__name__)

MINSTD_MODULUS = 2_147_483_647
MINSTD_MULTIPLIER = 48_271

SOLUTION_RANGE = (-10, 10)

Perturbation = Tuple[int, int, int, int]

# (i1, i2, i3, i4): copy row/column 2 into 3, then plant 2**-52 at index 2.
DEFAULT_PERTURBATION: Perturbation = (2, 3, 2, 52)


class InstanceFormatError(ValueError):
    """An archived instance file could not be parsed."""

    def __init__(self, path: Union[str, Path], line: int, message: str) -> None:
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class MinstdRng:
    """Lehmer generator ``x_{k+1} = 48271 x_k mod (2^31 - 1)``."""

    __slots__ = ("seed", "state")

    def __init__(self, seed: int = 1) -> None:
        # Fold any integer into the valid state range [1, 2^31 - 2].
        self.seed = (int(seed) - 1) % (MINSTD_MODULUS - 1) + 1
        self.state = self.seed

    def next(self) -> int:
        self.state = (MINSTD_MULTIPLIER * self.state) % MINSTD_MODULUS
        return self.state

    def uniform_int(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise ValueError(f"Empty integer range [{lo}, {hi}]")
        return lo + self.next() % (hi - lo + 1)

    def uniform_real(self, lo: float, hi: float) -> float:
        if hi < lo:
            raise ValueError(f"Empty real range [{lo}, {hi}]")
        return lo + (hi - lo) * (self.next() - 1) / (MINSTD_MODULUS - 2)

    def integers(self, lo: int, hi: int, count: int) -> Vector:
        return np.array([self.uniform_int(lo, hi) for _ in range(count)], dtype=np.float64)

    def reals(self, lo: float, hi: float, count: int) -> Vector:
        return np.array([self.uniform_real(lo, hi) for _ in range(count)], dtype=np.float64)

    def spawn(self, offset: int) -> "MinstdRng":
        """Fresh generator seeded ``offset`` past this one's seed."""
        return MinstdRng(self.seed + offset)

    def __repr__(self) -> str:
        return f"MinstdRng(seed={self.seed}, state={self.state})"


class MatrixFamily(str, Enum):
    IR500 = "IR500"
    IR500R = "IR500R"
    IR500C = "IR500C"
    RR100 = "RR100"
    IDF1 = "IDF1"
    IDF2 = "IDF2"
    IDF3 = "IDF3"
    IDF3L = "IDF3L"
    IR50 = "IR50"

    @property
    def perturbation_axis(self) -> Optional[str]:
        if self is MatrixFamily.IR500R:
            return "rows"
        if self is MatrixFamily.IR500C:
            return "cols"
        return None

    @property
    def integer_valued(self) -> bool:
        return self is not MatrixFamily.RR100


_RANDOM_RANGES: Dict[MatrixFamily, Tuple[int, int]] = {
    MatrixFamily.IR500: (-500, 500),
    MatrixFamily.IR500R: (-500, 500),
    MatrixFamily.IR500C: (-500, 500),
    MatrixFamily.RR100: (-100, 100),
    MatrixFamily.IR50: (-50, 50),
}


def generate_matrix(
    family: Union[MatrixFamily, str],
    m: int,
    n: int,
    rng: MinstdRng,
    perturbation: Optional[Perturbation] = None,
) -> DenseMatrix:
    """Return the ``m x n`` matrix of ``family``; random entries are drawn row-major.

    IR500R / IR500C additionally get the row or column perturbation,
    ``DEFAULT_PERTURBATION`` when none is given.
    """
    family = MatrixFamily(family)
    if m < 1 or n < 1:
        raise DimensionError(f"Matrix dimensions must be positive, got {m}x{n}")

    if family in _RANDOM_RANGES:
        lo, hi = _RANDOM_RANGES[family]
        if family is MatrixFamily.RR100:
            values = rng.reals(lo, hi, m * n)
        else:
            values = rng.integers(lo, hi, m * n)
        A = DenseMatrix(values.reshape(m, n))
    else:
        i = np.arange(1, m + 1, dtype=np.float64)[:, None]
        j = np.arange(1, n + 1, dtype=np.float64)[None, :]
        if family is MatrixFamily.IDF1:
            data = np.abs(i - j)
        elif family is MatrixFamily.IDF2:
            data = (i - j) ** 2
        elif family is MatrixFamily.IDF3:
            data = np.abs(i + j - (m + n) / 2.0)
        else:
            data = i + j - (m + n) / 2.0
        A = DenseMatrix(data)

    axis = family.perturbation_axis
    if axis is not None:
        params = perturbation or DEFAULT_PERTURBATION
        A = perturb_rows(A, *params) if axis == "rows" else perturb_cols(A, *params)
    return A


def _check_perturbation(i1: int, i2: int, i3: int, i4: int, copied: int, other: int, what: str) -> None:
    if not (1 <= i1 <= copied and 1 <= i2 <= copied):
        raise ValueError(f"{what} indices ({i1}, {i2}) out of range 1..{copied}")
    if i1 == i2:
        raise ValueError(f"{what} perturbation needs distinct indices, got i1 = i2 = {i1}")
    if not 1 <= i3 <= other:
        raise ValueError(f"Perturbation index i3={i3} out of range 1..{other}")
    if i4 < 0:
        raise ValueError(f"Perturbation exponent must be nonnegative, got {i4}")


def perturb_rows(A: DenseMatrix, i1: int, i2: int, i3: int, i4: int) -> DenseMatrix:
    """Copy row ``i1`` into row ``i2``, zero ``a[i1,i3]`` and set ``a[i2,i3] = 2**-i4``."""
    _check_perturbation(i1, i2, i3, i4, A.rows, A.cols, "Row")
    data = A.to_array()
    data[i2 - 1, :] = data[i1 - 1, :]
    data[i1 - 1, i3 - 1] = 0.0
    data[i2 - 1, i3 - 1] = 2.0 ** -i4
    return DenseMatrix(data)


def perturb_cols(A: DenseMatrix, i1: int, i2: int, i3: int, i4: int) -> DenseMatrix:
    """Column analogue of :func:`perturb_rows`."""
    _check_perturbation(i1, i2, i3, i4, A.cols, A.rows, "Column")
    data = A.to_array()
    data[:, i2 - 1] = data[:, i1 - 1]
    data[i3 - 1, i1 - 1] = 0.0
    data[i3 - 1, i2 - 1] = 2.0 ** -i4
    return DenseMatrix(data)


@dataclass
class ProblemInstance:
    A: DenseMatrix
    b: Vector
    x_star: Vector
    b_tilde: Vector
    family: Optional[MatrixFamily] = None
    seed: int = 0
    perturbation: Optional[Perturbation] = None
    degenerate: bool = False

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def n(self) -> int:
        return self.A.cols

    @property
    def label(self) -> str:
        name = self.family.value if self.family is not None else "custom"
        return f"{name} {self.m}x{self.n}"

    def certificate(self) -> float:
        """``||A^T b~||_inf / (||A||_F ||b~||_2)``; zero in exact arithmetic."""
        A = self.A.array
        scale = self.A.frobenius_norm() * float(np.linalg.norm(self.b_tilde))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(A.T @ self.b_tilde)) / scale)

    def certificate_bound(self) -> float:
        return 100.0 * MACHINE_EPS * float(np.sqrt(self.m))


def build_ls_problem(A: DenseMatrix, rng: MinstdRng, integer_solution: bool = False) -> ProblemInstance:
    """Redefine row 1 of ``A`` so that ``A^T b~ = 0`` and return ``b = b~ + A x*``.

    ``x*`` is drawn before ``b~``; ``b~_1`` is drawn and then pinned to -1.
    """
    m, n = A.shape
    if m < 2:
        raise DimensionError(f"Least-squares problems need at least 2 rows, got {m}")
    lo, hi = SOLUTION_RANGE
    draw = rng.integers if integer_solution else rng.reals
    x_star = draw(lo, hi, n)
    b_tilde = draw(lo, hi, m)
    b_tilde[0] = -1.0

    data = A.to_array()
    data[0, :] = data[1:, :].T @ b_tilde[1:]
    b = b_tilde + data @ x_star

    degenerate = bool(np.any(np.all(data == 0.0, axis=0)))
    if degenerate:
        logger.warning("Generated %dx%d matrix has a zero column after the first-row redefinition", m, n)
    return ProblemInstance(A=DenseMatrix(data), b=b, x_star=x_star, b_tilde=b_tilde, degenerate=degenerate)


@dataclass(frozen=True)
class ProblemSpec:
    family: MatrixFamily
    m: int
    n: int
    seed: int = 1
    perturbation: Optional[Perturbation] = field(default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", MatrixFamily(self.family))
        if self.perturbation is not None:
            object.__setattr__(self, "perturbation", tuple(int(v) for v in self.perturbation))

    @property
    def label(self) -> str:
        return f"{self.family.value} {self.m}x{self.n}"

    def validate(self) -> None:
        if self.m < 2 or self.n < 1:
            raise DimensionError(f"{self.label}: need m >= 2 and n >= 1")
        if self.seed < 1:
            raise ValueError(f"{self.label}: seed must be positive, got {self.seed}")
        if self.perturbation is not None:
            if len(self.perturbation) != 4:
                raise ValueError(f"{self.label}: perturbation needs four integers (i1, i2, i3, i4)")
            axis = self.family.perturbation_axis
            if axis is None:
                raise ValueError(f"{self.label}: family {self.family.value} takes no perturbation")
            i1, i2, i3, i4 = self.perturbation
            if axis == "rows":
                _check_perturbation(i1, i2, i3, i4, self.m, self.n, "Row")
            else:
                _check_perturbation(i1, i2, i3, i4, self.n, self.m, "Column")


def build_problem(spec: ProblemSpec, seed_offset: int = 0) -> ProblemInstance:
    """Generate the instance described by ``spec``; bit-identical across runs."""
    spec.validate()
    rng = MinstdRng(spec.seed).spawn(seed_offset)
    perturbation = spec.perturbation
    if perturbation is None and spec.family.perturbation_axis is not None:
        perturbation = DEFAULT_PERTURBATION
    A = generate_matrix(spec.family, spec.m, spec.n, rng, perturbation)
    instance = build_ls_problem(A, rng, integer_solution=spec.family.integer_valued)
    instance.family = spec.family
    instance.seed = rng.seed
    instance.perturbation = perturbation
    logger.info("Generated %s (seed %d)", spec.label, rng.seed)
    return instance


# Archive format ------------------------------------------------------------

_HEADER_KEYS = ("family", "m", "n", "seed", "perturbation")


def _format_values(values: npt.ArrayLike) -> str:
    return " ".join("%.17g" % v for v in np.asarray(values).ravel())


def dump_instance(instance: ProblemInstance, path: Union[str, Path]) -> Path:
    """Write ``instance`` in the line-oriented archive format and return the path."""
    target = Path(path)
    perturbation = "none" if instance.perturbation is None else " ".join(str(v) for v in instance.perturbation)
    lines: List[str] = [
        "# abs-lsq instance",
        f"family = {instance.family.value if instance.family is not None else 'custom'}",
        f"m = {instance.m}",
        f"n = {instance.n}",
        f"seed = {instance.seed}",
        f"perturbation = {perturbation}",
        "A",
    ]
    lines.extend(_format_values(row) for row in instance.A.array)
    for name, values in (("b", instance.b), ("x_star", instance.x_star), ("b_tilde", instance.b_tilde)):
        lines.append(name)
        lines.append(_format_values(values))
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return target


class _LineReader:
    def __init__(self, path: Path, text: str) -> None:
        self.path = path
        self.lines = text.splitlines()
        self.index = 0

    def fail(self, message: str) -> InstanceFormatError:
        return InstanceFormatError(self.path, self.index, message)

    def take(self, what: str) -> str:
        while self.index < len(self.lines):
            line = self.lines[self.index].strip()
            self.index += 1
            if line and not line.startswith("#"):
                return line
        raise InstanceFormatError(self.path, self.index, f"unexpected end of file, expected {what}")

    def numbers(self, count: int, what: str) -> Vector:
        line = self.take(what)
        try:
            values = np.array([float(tok) for tok in line.split()], dtype=np.float64)
        except ValueError as exc:
            raise self.fail(f"{what}: {exc}") from None
        if values.size != count:
            raise self.fail(f"{what}: expected {count} values, found {values.size}")
        return values


def load_instance(path: Union[str, Path]) -> ProblemInstance:
    """Read an instance written by :func:`dump_instance`.

    Raises:
        InstanceFormatError: on any malformed or missing line, naming the path.
    """
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceFormatError(source, 0, f"cannot read file: {exc.strerror or exc}") from exc

    reader = _LineReader(source, text)
    header: Dict[str, str] = {}
    for key in _HEADER_KEYS:
        line = reader.take(key)
        name, sep, value = line.partition("=")
        if not sep or name.strip() != key:
            raise reader.fail(f"expected '{key} = ...', found {line!r}")
        header[key] = value.strip()

    try:
        family = None if header["family"] == "custom" else MatrixFamily(header["family"])
        m, n, seed = int(header["m"]), int(header["n"]), int(header["seed"])
        perturbation = None
        if header["perturbation"] != "none":
            parts = tuple(int(tok) for tok in header["perturbation"].split())
            if len(parts) != 4:
                raise ValueError("perturbation needs four integers")
            perturbation = parts
    except ValueError as exc:
        raise reader.fail(f"bad header: {exc}") from None
    if m < 1 or n < 1:
        raise reader.fail(f"bad dimensions {m}x{n}")

    if reader.take("A") != "A":
        raise reader.fail("expected section 'A'")
    A = np.vstack([reader.numbers(n, f"row {i + 1} of A") for i in range(m)])
    vectors: Dict[str, Vector] = {}
    for name, size in (("b", m), ("x_star", n), ("b_tilde", m)):
        if reader.take(name) != name:
            raise reader.fail(f"expected section '{name}'")
        vectors[name] = reader.numbers(size, name)

    return ProblemInstance(
        A=DenseMatrix(A),
        b=vectors["b"],
        x_star=vectors["x_star"],
        b_tilde=vectors["b_tilde"],
        family=family,
        seed=seed,
        perturbation=perturbation,  # type: ignore[arg-type]
        degenerate=bool(np.any(np.all(A == 0.0, axis=0))),
    )


__all__ = [
    "MINSTD_MODULUS",
    "MINSTD_MULTIPLIER",
    "DEFAULT_PERTURBATION",
    "InstanceFormatError",
    "MinstdRng",
    "MatrixFamily",
    "ProblemInstance",
    "ProblemSpec",
    "generate_matrix",
    "perturb_rows",
    "perturb_cols",
    "build_ls_problem",
    "build_problem",
    "dump_instance",
    "load_instance",
]
