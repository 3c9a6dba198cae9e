"""Shared fixtures for the abs-lsq test suite."""

from __future__ import annotations

import numpy as np
import pytest

from abs_lsq.testgen import MatrixFamily, ProblemSpec, build_problem


@pytest.fixture
def rng():
    """Seeded numpy generator for random oracle comparisons."""
    return np.random.default_rng(20240607)


@pytest.fixture
def rr100_small():
    """Well-conditioned 40x20 least-squares instance."""
    return build_problem(ProblemSpec(MatrixFamily.RR100, 40, 20, seed=7))


@pytest.fixture
def idf2_small():
    """Exactly rank-3 40x30 instance."""
    return build_problem(ProblemSpec(MatrixFamily.IDF2, 40, 30, seed=1))
