"""Shared fixtures: published tables, typed in the order they are printed."""

from fractions import Fraction as F

import pytest

from unimargin.tables import ProbTable, TableShape, ZeroPattern, colex_permutation

SHAPE3 = TableShape.binary(3)
SHAPE4 = TableShape.binary(4)

# Extreme pmfs for 2x2x2, printed with the first variable varying fastest.
PRINTED_RAYS = {
    "r1": (F(1, 2), 0, 0, 0, 0, 0, 0, F(1, 2)),
    "r2": (0, F(1, 2), 0, 0, 0, 0, F(1, 2), 0),
    "r3": (0, 0, F(1, 2), 0, 0, F(1, 2), 0, 0),
    "r4": (0, 0, 0, F(1, 2), F(1, 2), 0, 0, 0),
    "r5": (F(1, 4), 0, 0, F(1, 4), 0, F(1, 4), F(1, 4), 0),
    "r6": (0, F(1, 4), F(1, 4), 0, F(1, 4), 0, 0, F(1, 4)),
}

# The four d=3 zero patterns, same printed order.
PRINTED_PATTERNS = {
    "Z1": (1, 0, 0, 0, 0, 0, 0, 0),
    "Z2": (1, 1, 0, 0, 0, 0, 0, 0),
    "Z3": (0, 1, 0, 1, 1, 1, 1, 1),
    "Z4": (0, 1, 0, 1, 1, 0, 1, 0),
}

SHEFFIELD_COUNTS = (274, 278, 200, 3951)

MARGINAL_P0 = (0.1, 0.05, 0.3, 0.2, 0.1, 0.05, 0.15, 0.05)
MARGINAL_P1 = (0.09, 0.09, 0.14, 0.18, 0.16, 0.16, 0.11, 0.07)

TWO_ZERO_P0 = (0.288, 0.106, 0, 0.106, 0, 0.106, 0.288, 0.106)
TWO_ZERO_P1 = (0.25, 0.125, 0, 0.125, 0, 0.125, 0.25, 0.125)
TWO_ZERO_P1_ALT = (0.240, 0.135, 0, 0.125, 0, 0.125, 0.260, 0.115)

THREE_ZERO_P0 = (0.40, 0.15, 0.15, 0, 0.15, 0, 0, 0.15)
THREE_ZERO_P1 = (0.225, 0.137, 0.137, 0, 0.137, 0, 0, 0.363)
THREE_ZERO_P1_ALT = (0.45, 0.025, 0.025, 0, 0.025, 0, 0, 0.475)


def from_printed(values, shape=SHAPE3):
    """Reorder a vector printed with axis 1 fastest into canonical order."""
    perm = colex_permutation(shape)
    out = [None] * len(values)
    for k, v in enumerate(values):
        out[perm[k]] = v
    return tuple(out)


@pytest.fixture
def sheffield() -> ProbTable:
    return ProbTable.from_counts(SHEFFIELD_COUNTS, (2, 2))


@pytest.fixture
def canonical_rays() -> dict:
    return {k: from_printed(v) for k, v in PRINTED_RAYS.items()}


@pytest.fixture
def case_patterns() -> dict:
    return {k: ZeroPattern(SHAPE3, from_printed(v)) for k, v in PRINTED_PATTERNS.items()}


def fig4_patterns() -> tuple[ZeroPattern, ZeroPattern]:
    """The two 2^4 patterns drawn as a pair of cubes (X4 = 0, X4 = 1).

    Upper panel: zeros on the face X2 = 0 of the X4 = 0 cube.
    Lower panel: zeros at (0,0,0,0), (0,1,0,0), (1,0,0,1), (1,0,1,1).
    """
    upper = ZeroPattern.from_zero_cells(
        [(a1, 0, a3, 0) for a1 in (0, 1) for a3 in (0, 1)], SHAPE4)
    lower = ZeroPattern.from_zero_cells(
        [(0, 0, 0, 0), (0, 1, 0, 0), (1, 0, 0, 1), (1, 0, 1, 1)], SHAPE4)
    return upper, lower


def kernel_perturbations(q, n: int, seed: int = 0):
    """``n`` random tables with q's support and margins, built from kernel moves."""
    import numpy as np

    from unimargin.polytope import kernel_basis
    from unimargin.tables import zero_pattern_of

    pat = zero_pattern_of(q)
    cols = pat.positives
    basis = [np.array(b, dtype=float) for b in kernel_basis(pat)]
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        step = sum(rng.normal() * b for b in basis)
        full = np.zeros(q.shape.total_cells)
        full[cols] = step
        # largest move keeping every positive cell positive, then a random fraction of it
        neg = full < 0
        t_max = np.min(q.p[neg] / -full[neg]) if neg.any() else 1.0
        cand = q.p + rng.uniform(0.05, 0.95) * t_max * full
        if np.all(cand[cols] > 0):
            out.append(ProbTable(q.shape, cand))
    return out
