"""
Data model for d-way contingency tables.

Cells are stored as a flat vector in lexicographic order with axis 1 the
most significant digit, so for a binary table the cell ``(a_1, ..., a_d)``
sits at 1-based rank ``1 + sum_j a_j 2**(d - j)``.  Everything else in the
package relies on this single canonical order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class UnimarginError(ValueError):
    """Domain error: the request is well formed but mathematically invalid."""


class SupportError(UnimarginError):
    pass


class TableFormatError(ValueError):
    """Malformed table or pattern input (parse level, not domain level)."""


NORMALIZED_TOL = 1e-12


@dataclass(frozen=True)
class TableShape:
    levels: tuple[int, ...]

    def __init__(self, levels: Iterable[int]):
        levels = tuple(int(x) for x in levels)
        if not levels:
            raise TableFormatError("a table needs at least one axis")
        if any(x < 2 for x in levels):
            raise TableFormatError(f"every axis needs at least 2 levels, got {levels}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def binary(cls, d: int) -> TableShape:
        return cls((2,) * d)

    @property
    def d(self) -> int:
        return len(self.levels)

    @property
    def total_cells(self) -> int:
        return math.prod(self.levels)

    @property
    def is_binary(self) -> bool:
        return all(x == 2 for x in self.levels)

    def cells(self) -> list[tuple[int, ...]]:
        """All multi-indices in canonical order."""
        return [tuple(int(v) for v in a) for a in np.ndindex(*self.levels)]

    def __str__(self) -> str:
        return "x".join(str(x) for x in self.levels)


def parse_shape(text: str | Sequence[int]) -> TableShape:
    if isinstance(text, str):
        try:
            return TableShape(int(t) for t in text.replace("x", ",").split(",") if t.strip())
        except ValueError as exc:
            raise TableFormatError(f"bad shape {text!r}") from exc
    return TableShape(text)


def cell_rank(alpha: Sequence[int], shape: TableShape) -> int:
    """1-based lexicographic rank of a multi-index (axis 1 most significant)."""
    if len(alpha) != shape.d:
        raise UnimarginError(f"index {tuple(alpha)} has {len(alpha)} components, shape has {shape.d}")
    k = 0
    for a, x in zip(alpha, shape.levels):
        if not 0 <= a < x:
            raise UnimarginError(f"index {tuple(alpha)} out of bounds for shape {shape}")
        k = k * x + a
    return k + 1


def cell_index(rank: int, shape: TableShape) -> tuple[int, ...]:
    """Inverse of :func:`cell_rank`."""
    if not 1 <= rank <= shape.total_cells:
        raise UnimarginError(f"rank {rank} out of range 1..{shape.total_cells}")
    k = rank - 1
    out = []
    for x in reversed(shape.levels):
        k, a = divmod(k, x)
        out.append(a)
    return tuple(reversed(out))


def colex_permutation(shape: TableShape) -> list[int]:
    """0-based canonical positions listed in colex order (axis 1 fastest).

    Useful for reading tables printed with the first variable varying
    fastest: ``canonical[perm[k]] = printed[k]``.
    """
    rev = shape.levels[::-1]
    out = []
    for a in np.ndindex(*rev):
        out.append(cell_rank(tuple(int(v) for v in a[::-1]), shape) - 1)
    return out


@dataclass(frozen=True, eq=False)
class ProbTable:
    """A dense table of cell probabilities (or counts) in canonical order."""

    shape: TableShape
    p: np.ndarray
    mode: str = "probability"

    def __post_init__(self):
        if self.mode not in ("probability", "counts"):
            raise TableFormatError(f"unknown mode {self.mode!r}")
        p = np.array(self.p, dtype=float).reshape(-1)
        if p.size != self.shape.total_cells:
            raise TableFormatError(
                f"shape {self.shape} needs {self.shape.total_cells} cells, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise TableFormatError("table entries must be finite")
        if np.any(p < 0):
            raise TableFormatError("table entries must be nonnegative")
        if p.sum() <= 0:
            raise UnimarginError("table has zero total")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_values(cls, values, shape: TableShape | Sequence[int] | None = None,
                    mode: str = "probability") -> ProbTable:
        arr = np.asarray(values, dtype=float)
        if shape is None:
            shape = TableShape(arr.shape) if arr.ndim > 1 else TableShape.binary(int(round(math.log2(arr.size))))
        elif not isinstance(shape, TableShape):
            shape = TableShape(shape)
        return cls(shape, arr.reshape(-1), mode)

    @classmethod
    def from_counts(cls, counts, shape=None) -> ProbTable:
        return cls.from_values(counts, shape, mode="counts").normalized()

    @property
    def total(self) -> float:
        return float(self.p.sum())

    @property
    def array(self) -> np.ndarray:
        """Cell values as a d-dimensional array (read-only view)."""
        return self.p.reshape(self.shape.levels)

    def normalized(self) -> ProbTable:
        """Divide by the total; a probability table already within 1e-12 of 1 is kept."""
        if self.mode == "probability" and abs(self.total - 1.0) <= NORMALIZED_TOL:
            return self
        return ProbTable(self.shape, self.p / self.p.sum(), "probability")

    def __getitem__(self, alpha) -> float:
        return float(self.p[cell_rank(alpha, self.shape) - 1])

    def __eq__(self, other):
        if not isinstance(other, ProbTable):
            return NotImplemented
        return (self.shape == other.shape and self.mode == other.mode
                and np.array_equal(self.p, other.p))

    __hash__ = None

    def __repr__(self):
        vals = ", ".join(f"{v:.4g}" for v in self.p)
        return f"ProbTable({self.shape}, [{vals}], mode={self.mode!r})"


@dataclass(frozen=True)
class ZeroPattern:
    """Binary cell indicator: ``z[k] == 0`` marks a forced-zero cell."""

    shape: TableShape
    z: tuple[int, ...]

    def __post_init__(self):
        z = tuple(int(v) for v in self.z)
        if len(z) != self.shape.total_cells:
            raise TableFormatError(
                f"pattern has {len(z)} entries, shape {self.shape} has {self.shape.total_cells} cells")
        if any(v not in (0, 1) for v in z):
            raise TableFormatError("pattern entries must be 0 or 1")
        if not any(z):
            raise UnimarginError("the all-zero pattern admits no pmf")
        object.__setattr__(self, "z", z)

    @classmethod
    def from_string(cls, text: str, shape: TableShape) -> ZeroPattern:
        """Parse ``"01011010"`` or ``"0,1,1;1,0,1"`` (a list of zero cells)."""
        text = text.strip()
        if set(text) <= {"0", "1"} and len(text) == shape.total_cells:
            return cls(shape, tuple(int(c) for c in text))
        z = [1] * shape.total_cells
        try:
            for chunk in text.replace(" ", "").split(";"):
                if not chunk:
                    continue
                alpha = tuple(int(v) for v in chunk.strip("()").split(","))
                z[cell_rank(alpha, shape) - 1] = 0
        except (ValueError, UnimarginError) as exc:
            raise TableFormatError(f"cannot parse pattern {text!r}: {exc}") from exc
        return cls(shape, tuple(z))

    @classmethod
    def from_zero_cells(cls, cells: Iterable[Sequence[int]], shape: TableShape) -> ZeroPattern:
        z = [1] * shape.total_cells
        for alpha in cells:
            z[cell_rank(alpha, shape) - 1] = 0
        return cls(shape, tuple(z))

    @classmethod
    def from_mask(cls, mask: int, shape: TableShape) -> ZeroPattern:
        n = shape.total_cells
        return cls(shape, tuple((mask >> (n - 1 - k)) & 1 for k in range(n)))

    @cached_property
    def mask(self) -> int:
        """Positive cells as an integer, cell rank 1 in the most significant bit."""
        return int("".join(map(str, self.z)), 2)

    @cached_property
    def support_bits(self) -> int:
        """Positive cells as a bitset with canonical position k at bit k."""
        return sum(1 << k for k, v in enumerate(self.z) if v)

    @property
    def zeros(self) -> list[int]:
        return [k for k, v in enumerate(self.z) if not v]

    @property
    def positives(self) -> list[int]:
        return [k for k, v in enumerate(self.z) if v]

    @property
    def n_zeros(self) -> int:
        return self.z.count(0)

    def __str__(self) -> str:
        return "".join(map(str, self.z))


@dataclass(frozen=True)
class MarginVector:
    axis: int  # 1-based
    values: tuple


def margins(table: ProbTable) -> list[MarginVector]:
    arr = table.array
    out = []
    for i in range(table.shape.d):
        other = tuple(j for j in range(table.shape.d) if j != i)
        out.append(MarginVector(i + 1, tuple(float(v) for v in arr.sum(axis=other))))
    return out


def margin_deviation(p: np.ndarray, shape: TableShape) -> float:
    """Max absolute distance of any margin entry from ``1/x_i``."""
    arr = np.asarray(p, dtype=float).reshape(shape.levels)
    dev = 0.0
    for i, x in enumerate(shape.levels):
        other = tuple(j for j in range(shape.d) if j != i)
        dev = max(dev, float(np.max(np.abs(arr.sum(axis=other) - 1.0 / x))))
    return dev


def is_uniform_margins(table, tol: float = 1e-9) -> bool:
    """True iff every margin entry is within ``tol`` of ``1/x_i``.

    Accepts a :class:`ProbTable` or an exact :class:`RationalTable`; in the
    exact case the comparison is done in rational arithmetic.
    """
    if isinstance(table, RationalTable):
        return all(
            abs(v - Fraction(1, x)) <= tol
            for m, x in zip(table.margins(), table.shape.levels) for v in m)
    return margin_deviation(table.p, table.shape) <= tol


def zero_pattern_of(table: ProbTable, eps: float = 0.0) -> ZeroPattern:
    z = tuple(int(v > eps) for v in table.p)
    if not any(z):
        raise UnimarginError(f"every cell is <= {eps}")
    return ZeroPattern(table.shape, z)


def kl_divergence(q: ProbTable, p: ProbTable) -> float:
    """``sum q log(q/p)`` over the support of ``q``."""
    if q.shape != p.shape:
        raise UnimarginError(f"shape mismatch {q.shape} vs {p.shape}")
    q, p = q.normalized(), p.normalized()
    s = q.p > 0
    if np.any(p.p[s] == 0):
        raise SupportError("q puts mass on a cell where p is zero")
    return float(np.sum(q.p[s] * np.log(q.p[s] / p.p[s])))


class RationalTable:
    """Exact pmf with rational entries summing to one.

    Stored as integer numerators over one common denominator, which keeps
    long ray lists small; :attr:`p` builds the :class:`~fractions.Fraction`
    entries on access.
    """

    __slots__ = ("shape", "_num", "_den", "_bits")

    def __init__(self, shape: TableShape, p: Sequence):
        p = [Fraction(v) for v in p]
        if len(p) != shape.total_cells:
            raise TableFormatError("length does not match shape")
        if any(v < 0 for v in p):
            raise TableFormatError("negative entry")
        if sum(p) != 1:
            raise UnimarginError(f"entries sum to {sum(p)}, not 1")
        den = math.lcm(*(v.denominator for v in p))
        self._set(shape, tuple(v.numerator * (den // v.denominator) for v in p), den)

    def _set(self, shape, num, den):
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "_num", num)
        object.__setattr__(self, "_den", den)
        object.__setattr__(self, "_bits", sum(1 << k for k, v in enumerate(num) if v))

    def __setattr__(self, name, value):
        raise AttributeError("RationalTable is immutable")

    @classmethod
    def from_integers(cls, y: Sequence[int], shape: TableShape) -> RationalTable:
        """The pmf proportional to the nonnegative integer vector ``y``."""
        if len(y) != shape.total_cells:
            raise TableFormatError("length does not match shape")
        if any(v < 0 for v in y):
            raise TableFormatError("negative entry")
        s = sum(y)
        if s <= 0:
            raise UnimarginError("integer vector has zero total")
        g = math.gcd(s, *y)
        obj = cls.__new__(cls)
        obj._set(shape, tuple(y) if g == 1 else tuple(v // g for v in y), s // g)
        return obj

    @property
    def p(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v, self._den) for v in self._num)

    @property
    def scaled(self) -> tuple[int, tuple[int, ...]]:
        """``(D, n)`` with integer ``n`` such that ``p = n / D``, ``D`` minimal."""
        return self._den, self._num

    @property
    def support_bits(self) -> int:
        """Nonzero cells as a bitset with canonical position k at bit k."""
        return self._bits

    def __eq__(self, other):
        if not isinstance(other, RationalTable):
            return NotImplemented
        return (self.shape, self._den, self._num) == (other.shape, other._den, other._num)

    def __hash__(self):
        return hash((self.shape, self._den, self._num))

    def __repr__(self) -> str:
        return f"RationalTable({self.shape!r}, {self})"

    def margins(self) -> list[list[Fraction]]:
        out = []
        cells = self.shape.cells()
        for i, x in enumerate(self.shape.levels):
            m = [0] * x
            for alpha, v in zip(cells, self._num):
                m[alpha[i]] += v
            out.append([Fraction(v, self._den) for v in m])
        return out

    def to_prob(self) -> ProbTable:
        return ProbTable(self.shape, np.array([v / self._den for v in self._num]))

    def __str__(self) -> str:
        return "(" + ", ".join(str(v) for v in self.p) + ")"
