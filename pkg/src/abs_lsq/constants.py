"""Shared constants for solver tolerances, method names and output schemas."""

import numpy as np

MACHINE_EPS = float(np.finfo(np.float64).eps)

# Relative tie band used by the pairwise scoreboards.
DEFAULT_TIE_FRACTION = 0.01

DEFAULT_REPETITIONS = 3
DEFAULT_WORKERS = 1
DEFAULT_OUTPUT_BASENAME = "results"
OUTPUT_DIR_ENV_VAR = "ABS_LSQ_OUT_DIR"

# Method labels in the order of the published comparison tables.
METHOD_HUANG6 = "huang6"
METHOD_MOD_HUANG6 = "mod.huang6"
METHOD_HUANG7 = "huang7"
METHOD_MOD_HUANG7 = "mod.huang7"
METHOD_IMPLICIT_QR = "impl.qr5"
METHOD_QR = "qr lapack"
METHOD_SVD = "svd lapack"
METHOD_PIVOTED_QR = "gqr lapack"

DEFAULT_ROSTER = (
    METHOD_HUANG6,
    METHOD_MOD_HUANG6,
    METHOD_HUANG7,
    METHOD_MOD_HUANG7,
    METHOD_IMPLICIT_QR,
    METHOD_QR,
    METHOD_SVD,
    METHOD_PIVOTED_QR,
)

CSV_COLUMNS = (
    "family",
    "m",
    "n",
    "seed",
    "method",
    "solution_error",
    "residual_error",
    "rank",
    "time_seconds",
    "status",
)

BREAKDOWN_MARKER = "--- break-down ---"


def default_tolerance(m: int, n: int) -> float:
    """LAPACK-style relative tolerance shared by the ABS zero tests and rcond."""
    return MACHINE_EPS * max(m, n)


__all__ = [
    "MACHINE_EPS",
    "DEFAULT_TIE_FRACTION",
    "DEFAULT_REPETITIONS",
    "DEFAULT_WORKERS",
    "DEFAULT_OUTPUT_BASENAME",
    "OUTPUT_DIR_ENV_VAR",
    "METHOD_HUANG6",
    "METHOD_MOD_HUANG6",
    "METHOD_HUANG7",
    "METHOD_MOD_HUANG7",
    "METHOD_IMPLICIT_QR",
    "METHOD_QR",
    "METHOD_SVD",
    "METHOD_PIVOTED_QR",
    "DEFAULT_ROSTER",
    "CSV_COLUMNS",
    "BREAKDOWN_MARKER",
    "default_tolerance",
]
