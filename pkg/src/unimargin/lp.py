"""
Largest-minimum-cell feasibility LP.

Maximize ``delta`` subject to ``C(Z) p = b`` and ``p >= delta`` on the
pattern's positive cells, with the zero cells' columns dropped.  Writing
``p = s + delta`` with ``s, delta >= 0`` turns this into standard form,
solved by a dense two-phase simplex with Bland's rule.  The same code runs
on floats or, with ``exact=True``, on :class:`~fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .polytope import full_matrix
from .tables import ProbTable, TableShape, UnimarginError, ZeroPattern

FLOAT_EPS = 1e-11
POSITIVE_THRESHOLD = 1e-9


class LPError(UnimarginError):
    """The simplex hit a numerical failure it cannot recover from."""


@dataclass(frozen=True)
class LPVerdict:
    delta_star: float | Fraction
    status: str  # strictly_positive | boundary_only | infeasible_system
    witness: ProbTable | None = None
    exact_witness: tuple[Fraction, ...] | None = None

    @property
    def compatible(self) -> bool:
        return self.status == "strictly_positive"

    def as_dict(self) -> dict:
        out = {"delta_star": float(self.delta_star), "status": self.status}
        if self.exact_witness is not None:
            out["delta_star_exact"] = str(self.delta_star)
            out["witness"] = [str(v) for v in self.exact_witness]
        elif self.witness is not None:
            out["witness"] = [float(v) for v in self.witness.p]
        return out


class _Simplex:
    """Tableau simplex minimizing ``c x`` s.t. ``A x = b, x >= 0`` (``b >= 0``)."""

    def __init__(self, A, b, exact: bool):
        self.exact = exact
        self.eps = 0 if exact else FLOAT_EPS
        m, n = A.shape
        dtype = object if exact else float
        T = np.zeros((m + 1, n + m + 1), dtype=dtype)
        if exact:
            T[:] = Fraction(0)
        T[:m, :n] = A
        T[:m, n:n + m] = np.eye(m, dtype=int)
        T[:m, -1] = b
        self.T = T
        self.m, self.n = m, n
        self.basis = list(range(n, n + m))

    def _pivot(self, r: int, c: int):
        T = self.T
        T[r] = T[r] / T[r, c]
        col = T[:, c].copy()
        col[r] = 0
        T -= np.outer(col, T[r])
        if not self.exact:
            T[np.abs(T) < 1e-15] = 0.0
        self.basis[r] = c

    def _run(self, allowed: int, max_pivots: int = 50_000):
        T, eps = self.T, self.eps
        for _ in range(max_pivots):
            obj = T[-1, :allowed]
            enter = next((j for j in range(allowed) if obj[j] < -eps), None)
            if enter is None:
                return
            col = T[:-1, enter]
            best, leave = None, None
            for i in range(self.m):
                if col[i] > eps:
                    ratio = T[i, -1] / col[i]
                    if best is None or ratio < best - eps or (
                            abs(ratio - best) <= eps and self.basis[i] < self.basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                raise LPError("objective unbounded; the feasibility LP should be bounded")
            self._pivot(leave, enter)
        raise LPError("pivot limit reached")

    def _set_objective(self, c):
        T = self.T
        T[-1] = 0
        if self.exact:
            T[-1] = Fraction(0)
        T[-1, :len(c)] = c
        for i, j in enumerate(self.basis):
            if T[-1, j] != 0:
                T[-1] -= T[-1, j] * T[i]

    def solve(self, c):
        """Returns ``(x, value)`` or ``None`` if ``A x = b, x >= 0`` is infeasible."""
        m, n = self.m, self.n
        phase1 = [0] * n + [1] * m
        self._set_objective(phase1)
        self._run(n + m)
        if -self.T[-1, -1] > (0 if self.exact else 1e-9):
            return None
        # drive artificials out of the basis, dropping redundant rows
        i = 0
        while i < self.m:
            if self.basis[i] >= n:
                j = next((j for j in range(n) if abs(self.T[i, j]) > self.eps), None)
                if j is None:
                    self.T = np.delete(self.T, i, axis=0)
                    del self.basis[i]
                    self.m -= 1
                    continue
                self._pivot(i, j)
            i += 1
        self.T = np.delete(self.T, np.s_[n:n + m], axis=1)
        self._set_objective(c)
        self._run(n)
        x = [Fraction(0) if self.exact else 0.0] * n
        for i, j in enumerate(self.basis):
            x[j] = self.T[i, -1]
        return x, -self.T[-1, -1]


def lp_feasibility(pattern: ZeroPattern, shape: TableShape | None = None,
                   exact: bool = False, threshold: float = POSITIVE_THRESHOLD) -> LPVerdict:
    """Largest achievable minimum positive cell under uniform margins.

    ``delta_star > threshold`` (``> 0`` in exact mode) means a table with
    exactly the pattern's support and uniform margins exists.
    """
    shape = shape or pattern.shape
    if pattern.shape != shape:
        raise UnimarginError("pattern shape does not match")
    C, b = full_matrix(shape)
    cols = pattern.positives
    A = np.array(C.restrict(cols), dtype=int)
    A = np.hstack([A, A.sum(axis=1, keepdims=True)])
    if exact:
        A = A.astype(object)
        A[:] = [[Fraction(int(v)) for v in row] for row in A]
        bb = np.array([Fraction(v) for v in b], dtype=object)
    else:
        A = A.astype(float)
        bb = np.array(b, dtype=float)
    n = A.shape[1]
    cost = [0] * (n - 1) + [-1]
    res = _Simplex(A, bb, exact).solve(cost)
    if res is None:
        return LPVerdict(Fraction(0) if exact else 0.0, "infeasible_system")
    x, value = res
    delta = x[-1]
    if not exact:
        delta = max(float(delta), 0.0)
        if abs(delta + float(value)) > 1e-9:
            raise LPError("inconsistent optimum")
    positive = delta > 0 if exact else delta > threshold
    full = [Fraction(0) if exact else 0.0] * shape.total_cells
    for k, c in enumerate(cols):
        full[c] = x[k] + delta
    if not positive:
        return LPVerdict(delta, "boundary_only")
    if exact:
        witness = ProbTable(shape, np.array([float(v) for v in full]))
        return LPVerdict(delta, "strictly_positive", witness, tuple(full))
    witness = ProbTable(shape, np.clip(np.array(full, dtype=float), 0, None))
    return LPVerdict(delta, "strictly_positive", witness)
