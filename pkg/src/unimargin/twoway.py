"""
Two-way R x S tables: the null-rectangle existence classifier and discrete copulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tables import ProbTable, UnimarginError

MAX_SIDE = 12

CASES = ("unique_exists", "unique_exists_boundary", "reduced_support_only", "no_solution")


@dataclass(frozen=True)
class NullRectangle:
    rows: frozenset[int]  # 0-based
    cols: frozenset[int]
    weight: Fraction

    def as_dict(self) -> dict:
        return {"rows": sorted(self.rows), "cols": sorted(self.cols), "weight": str(self.weight)}


@dataclass(frozen=True)
class TwoWayVerdict:
    case: str
    rectangles: tuple[NullRectangle, ...]

    @property
    def same_support_exists(self) -> bool:
        return self.case in ("unique_exists", "unique_exists_boundary")

    def as_dict(self) -> dict:
        return {"case": self.case, "rectangles": [r.as_dict() for r in self.rectangles]}


def _zero_matrix(table: ProbTable, eps: float) -> np.ndarray:
    if table.shape.d != 2:
        raise UnimarginError(f"expected a two-way table, got shape {table.shape}")
    R, S = table.shape.levels
    if R > MAX_SIDE or S > MAX_SIDE:
        raise UnimarginError(f"exhaustive rectangle search is limited to {MAX_SIDE}x{MAX_SIDE}")
    return table.array <= eps


def null_rectangles(table: ProbTable, eps: float = 0.0) -> list[NullRectangle]:
    """Maximal null rectangles: row and column sets each closed w.r.t. the other.

    Every null rectangle (nonempty rows x nonempty cols summing to zero) is
    contained in one of these.
    """
    zero = _zero_matrix(table, eps)
    R, S = zero.shape
    row_masks = [sum(1 << j for j in range(S) if zero[i, j]) for i in range(R)]
    col_masks = [sum(1 << i for i in range(R) if zero[i, j]) for j in range(S)]
    full_cols = (1 << S) - 1
    out = []
    for rows in range(1, 1 << R):
        cols = full_cols
        for i in range(R):
            if (rows >> i) & 1:
                cols &= row_masks[i]
                if not cols:
                    break
        if not cols:
            continue
        closure = (1 << R) - 1
        for j in range(S):
            if (cols >> j) & 1:
                closure &= col_masks[j]
        if closure != rows:
            continue
        rs = frozenset(i for i in range(R) if (rows >> i) & 1)
        cs = frozenset(j for j in range(S) if (cols >> j) & 1)
        out.append(NullRectangle(rs, cs, Fraction(len(rs), R) + Fraction(len(cs), S)))
    return out


def classify_twoway(table: ProbTable, eps: float = 0.0) -> TwoWayVerdict:
    """Which existence case a two-way table falls in, with the deciding rectangles."""
    zero = _zero_matrix(table, eps)
    R, S = zero.shape
    rects = null_rectangles(table, eps)
    heavy = [r for r in rects if r.weight > 1]
    if heavy:
        return TwoWayVerdict("no_solution", tuple(heavy))
    tight = [r for r in rects if r.weight == 1]
    if not tight:
        return TwoWayVerdict("unique_exists", ())
    bad = []
    for r in tight:
        rows = [i for i in range(R) if i not in r.rows]
        cols = [j for j in range(S) if j not in r.cols]
        if not zero[np.ix_(rows, cols)].all():
            bad.append(r)
    if bad:
        return TwoWayVerdict("reduced_support_only", tuple(bad))
    return TwoWayVerdict("unique_exists_boundary", tuple(tight))


@dataclass(frozen=True)
class DiscreteCopula:
    u: tuple[Fraction, ...]
    v: tuple[Fraction, ...]
    c: tuple[tuple[Fraction, ...], ...]  # (R+1) x (S+1), first row and column zero

    def to_float(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        f = np.vectorize(float)
        return (f(np.array(self.u, dtype=object)), f(np.array(self.v, dtype=object)),
                f(np.array(self.c, dtype=object)))

    def is_valid(self) -> bool:
        c = self.c
        R, S = len(c) - 1, len(c[0]) - 1
        if any(c[0][j] != 0 for j in range(S + 1)) or any(c[i][0] != 0 for i in range(R + 1)):
            return False
        if c[R][S] != 1:
            return False
        for i in range(1, R + 1):
            for j in range(1, S + 1):
                if c[i][j] < c[i - 1][j] or c[i][j] < c[i][j - 1]:
                    return False
                if c[i][j] - c[i - 1][j] - c[i][j - 1] + c[i - 1][j - 1] < 0:
                    return False
        return True

    def as_dict(self) -> dict:
        u, v, c = self.to_float()
        return {"u": u.tolist(), "v": v.tolist(), "c": c.tolist()}


def discrete_copula(table: ProbTable) -> DiscreteCopula:
    """Cumulative, normalized sums of a two-way table on its margin grids.

    Entries are exact: floats are converted with :class:`Fraction` before
    accumulating, so the rectangle masses equal the normalized cells.
    """
    if table.shape.d != 2:
        raise UnimarginError(f"expected a two-way table, got shape {table.shape}")
    R, S = table.shape.levels
    x = [[Fraction(float(v)) for v in row] for row in table.array]
    n = sum(sum(row) for row in x)
    if n == 0:
        raise UnimarginError("table has zero total")
    c = [[Fraction(0)] * (S + 1) for _ in range(R + 1)]
    for i in range(1, R + 1):
        for j in range(1, S + 1):
            c[i][j] = x[i - 1][j - 1] / n + c[i - 1][j] + c[i][j - 1] - c[i - 1][j - 1]
    u = tuple(c[i][S] for i in range(R + 1))
    v = tuple(c[R][j] for j in range(S + 1))
    return DiscreteCopula(u, v, tuple(tuple(r) for r in c))
