"""
Conditional and marginal odds ratios, and their symbolic products.

An odds-ratio product is kept as an integer exponent vector over cells
(:class:`ORMonomial`).  Multiplying monomials adds exponents, so cells that
appear in both a numerator and a denominator cancel exactly.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tables import ProbTable, TableShape, UnimarginError, cell_rank


@dataclass(frozen=True)
class ConditionalORSpec:
    """Odds ratio of axes ``pair`` (1-based, i < j) with the others fixed.

    ``conditioning`` lists the values of the remaining axes in increasing
    axis order.
    """

    pair: tuple[int, int]
    conditioning: tuple[int, ...]

    def __post_init__(self):
        i, j = self.pair
        if not 1 <= i < j:
            raise UnimarginError(f"pair must satisfy 1 <= i < j, got {self.pair}")
        if j > len(self.conditioning) + 2:
            raise UnimarginError(f"pair {self.pair} outside d={len(self.conditioning) + 2}")
        object.__setattr__(self, "pair", (int(i), int(j)))
        object.__setattr__(self, "conditioning", tuple(int(v) for v in self.conditioning))

    @property
    def d(self) -> int:
        return len(self.conditioning) + 2

    @property
    def label(self) -> str:
        i, j = self.pair
        cond = "".join(map(str, self.conditioning))
        return f"w{i}{j}|{cond}" if cond else f"w{i}{j}"

    def cell(self, a_i: int, a_j: int) -> tuple[int, ...]:
        """Multi-index with ``(a_i, a_j)`` at the pair and the conditioning elsewhere."""
        rest = iter(self.conditioning)
        i, j = self.pair
        return tuple(a_i if k == i else a_j if k == j else next(rest)
                     for k in range(1, self.d + 1))


@dataclass(frozen=True)
class ORMonomial:
    shape: TableShape
    exponents: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        e = tuple(int(v) for v in self.exponents)
        if len(e) != self.shape.total_cells:
            raise UnimarginError("exponent vector does not match shape")
        object.__setattr__(self, "exponents", e)

    def __mul__(self, other: ORMonomial) -> ORMonomial:
        return monomial_product([self, other])

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def is_trivial(self) -> bool:
        return not any(self.exponents)

    @property
    def cells(self) -> list[int]:
        """0-based positions with a nonzero exponent."""
        return [k for k, e in enumerate(self.exponents) if e]

    def as_dict(self) -> dict[int, int]:
        """``{cell_rank: exponent}`` for the cells that survive cancellation."""
        return {k + 1: e for k, e in enumerate(self.exponents) if e}

    def is_scale_invariant(self) -> bool:
        """Exponent-weighted level counts balance on every axis."""
        arr = np.array(self.exponents).reshape(self.shape.levels)
        for i in range(self.shape.d):
            other = tuple(j for j in range(self.shape.d) if j != i)
            if np.any(arr.sum(axis=other) != 0):
                return False
        return True

    def __str__(self) -> str:
        num, den = [], []
        for alpha, e in zip(self.shape.cells(), self.exponents):
            name = "p" + "".join(map(str, alpha))
            if e:
                (num if e > 0 else den).append(name + (f"^{abs(e)}" if abs(e) > 1 else ""))
        return f"{'*'.join(num) or '1'} / {'*'.join(den) or '1'}"


@dataclass(frozen=True)
class ORValue:
    status: str  # "defined" | "undefined"
    value: float | None = None

    @property
    def defined(self) -> bool:
        return self.status == "defined"

    @classmethod
    def undefined(cls) -> ORValue:
        return cls("undefined", None)

    def as_dict(self) -> dict:
        return {"status": self.status, "value": self.value}


def _check_binary_pair(shape: TableShape, i: int, j: int):
    if shape.levels[i - 1] != 2 or shape.levels[j - 1] != 2:
        raise UnimarginError(f"axes {i} and {j} must both be binary for an odds ratio")


def monomial_of(spec: ConditionalORSpec, shape: TableShape | None = None) -> ORMonomial:
    """+1 on the (1,1) and (0,0) cells, -1 on (1,0) and (0,1)."""
    shape = shape or TableShape.binary(spec.d)
    if shape.d != spec.d:
        raise UnimarginError(f"spec is for d={spec.d}, shape has d={shape.d}")
    _check_binary_pair(shape, *spec.pair)
    e = [0] * shape.total_cells
    for (a, b), sign in (((1, 1), 1), ((0, 0), 1), ((1, 0), -1), ((0, 1), -1)):
        e[cell_rank(spec.cell(a, b), shape) - 1] += sign
    return ORMonomial(shape, tuple(e), spec.label)


def subtable_monomial(shape: TableShape, i: int, j: int, rows: tuple[int, int],
                      cols: tuple[int, int], conditioning: Sequence[int] = ()) -> ORMonomial:
    """Odds ratio of the 2x2 sub-table on levels ``rows`` of axis i and ``cols`` of axis j.

    ``p[r0,c0] p[r1,c1] / (p[r0,c1] p[r1,c0])`` with the other axes fixed at
    ``conditioning``; works for axes with any number of levels.
    """
    spec = ConditionalORSpec((i, j), tuple(conditioning))
    if spec.d != shape.d:
        raise UnimarginError(f"conditioning does not fit shape {shape}")
    e = [0] * shape.total_cells
    for (a, b), sign in (((0, 0), 1), ((1, 1), 1), ((0, 1), -1), ((1, 0), -1)):
        e[cell_rank(spec.cell(rows[a], cols[b]), shape) - 1] += sign
    label = f"w{i}{j}[{rows[0]}{rows[1]},{cols[0]}{cols[1]}]"
    if conditioning:
        label += "|" + "".join(map(str, conditioning))
    return ORMonomial(shape, tuple(e), label)


def monomial_product(factors: Sequence[ORMonomial]) -> ORMonomial:
    if not factors:
        raise UnimarginError("empty product")
    shape = factors[0].shape
    if any(f.shape != shape for f in factors):
        raise UnimarginError("all factors must share a shape")
    e = np.sum([f.exponents for f in factors], axis=0)
    label = "*".join(f.label for f in factors if f.label)
    return ORMonomial(shape, tuple(int(v) for v in e), label)


def evaluate_monomial(table: ProbTable, m: ORMonomial) -> ORValue:
    if table.shape != m.shape:
        raise UnimarginError(f"shape mismatch {table.shape} vs {m.shape}")
    p = table.p
    idx = m.cells
    if not idx:
        return ORValue("defined", 1.0)
    e = np.array([m.exponents[k] for k in idx])
    v = p[idx]
    if np.any(v[e < 0] == 0):
        return ORValue.undefined()
    if np.any(v[e > 0] == 0):
        return ORValue("defined", 0.0)
    return ORValue("defined", float(math.exp(np.dot(e, np.log(v)))))


def conditional_or(table: ProbTable, spec: ConditionalORSpec) -> ORValue:
    return evaluate_monomial(table, monomial_of(spec, table.shape))


def conditional_specs(shape: TableShape) -> list[ConditionalORSpec]:
    """Every conditional odds ratio over pairs of binary axes, in a fixed order."""
    out = []
    for i, j in itertools.combinations(range(1, shape.d + 1), 2):
        if shape.levels[i - 1] != 2 or shape.levels[j - 1] != 2:
            continue
        rest = [shape.levels[k - 1] for k in range(1, shape.d + 1) if k not in (i, j)]
        for cond in itertools.product(*(range(x) for x in rest)):
            out.append(ConditionalORSpec((i, j), cond))
    return out


def all_conditional_ors(table: ProbTable) -> list[tuple[ConditionalORSpec, ORValue]]:
    return [(s, conditional_or(table, s)) for s in conditional_specs(table.shape)]


def marginal_or(table: ProbTable, i: int, j: int) -> ORValue:
    """Odds ratio of the 2x2 table left after summing out all other axes."""
    shape = table.shape
    _check_binary_pair(shape, i, j)
    other = tuple(k for k in range(shape.d) if k not in (i - 1, j - 1))
    t = table.array.sum(axis=other)
    num, den = t[0, 0] * t[1, 1], t[0, 1] * t[1, 0]
    if den == 0:
        return ORValue.undefined()
    return ORValue("defined", float(num / den))


def monomial_inverse(m: ORMonomial) -> ORMonomial:
    return ORMonomial(m.shape, tuple(-e for e in m.exponents), f"1/{m.label}" if m.label else "")


def monomial_catalog(shape: TableShape, max_order: int = 3) -> dict[int, list[ORMonomial]]:
    """Products of ``k`` distinct conditional odds ratios, ``k = 1..max_order``.

    The first factor enters as is, each later one either as is or inverted
    (an inverted odds ratio is the odds ratio with one axis relabelled), so
    order ``k`` holds ``C(n, k) * 2**(k-1)`` monomials.
    """
    singles = [monomial_of(s, shape) for s in conditional_specs(shape)]
    out = {}
    for k in range(1, max_order + 1):
        monos = []
        for combo in itertools.combinations(singles, k):
            for signs in itertools.product((1, -1), repeat=k - 1):
                e = np.array(combo[0].exponents)
                label = combo[0].label
                for f, sg in zip(combo[1:], signs):
                    e = e + sg * np.array(f.exponents)
                    label += ("*" if sg > 0 else "/") + f.label
                monos.append(ORMonomial(shape, tuple(int(v) for v in e), label))
        out[k] = monos
    return out


def parse_monomial(text: str, shape: TableShape) -> ORMonomial:
    """Parse ``"w13|0*w23|1"`` (``/`` divides) into the product monomial."""
    factors = []
    for op, tok in re.findall(r"([*/]?)\s*(w\d+(?:\|\d*)?)", text):
        pair, _, cond = tok[1:].partition("|")
        if len(pair) != 2:
            raise UnimarginError(f"cannot parse odds-ratio factor {tok!r}")
        m = monomial_of(ConditionalORSpec((int(pair[0]), int(pair[1])), tuple(int(c) for c in cond)), shape)
        factors.append(monomial_inverse(m) if op == "/" else m)
    if not factors or re.sub(r"[*/]?\s*w\d+(?:\|\d*)?", "", text).strip():
        raise UnimarginError(f"cannot parse odds-ratio product {text!r}")
    m = monomial_product(factors)
    return ORMonomial(shape, m.exponents, text.replace(" ", ""))
