"""
Exhaustive zero-pattern classification and odds-ratio uniqueness probes.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lp import lp_feasibility
from .odds import ORMonomial, evaluate_monomial, monomial_catalog
from .polytope import (CompatibilityVerdict, check_compatibility_rays, extreme_pmfs,
                       full_matrix, rank, restricted_extreme_pmfs)
from .tables import ProbTable, TableShape, UnimarginError, ZeroPattern

log = logging.getLogger(__name__)

MAX_ATLAS_CELLS = 16


@dataclass(frozen=True)
class PatternRecord:
    pattern: ZeroPattern
    n0: int
    verdict: CompatibilityVerdict
    n1: int
    lp_delta: float | None = None
    pruned: bool = False

    @property
    def compatible(self) -> bool:
        return self.verdict.compatible

    def as_dict(self) -> dict:
        return {
            "pattern": str(self.pattern),
            "N0": self.n0,
            "N1": self.n1,
            "status": self.verdict.status,
            "reason": self.verdict.reason,
            "pruned": self.pruned,
            "lp_delta": self.lp_delta,
        }


@dataclass
class Atlas:
    shape: TableShape
    records: list[PatternRecord]
    crosstab: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def compatible(self) -> list[PatternRecord]:
        return [r for r in self.records if r.compatible]

    def crosstab_csv(self) -> str:
        n0s = sorted({k[0] for k in self.crosstab})
        n1s = sorted({k[1] for k in self.crosstab})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N0"] + [f"N1={v}" for v in n1s] + ["total"])
        for a in n0s:
            row = [self.crosstab.get((a, b), 0) for b in n1s]
            w.writerow([a] + row + [sum(row)])
        totals = [sum(self.crosstab.get((a, b), 0) for a in n0s) for b in n1s]
        w.writerow(["total"] + totals + [sum(totals)])
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {
            "shape": list(self.shape.levels),
            "n_compatible": len(self.compatible),
            "crosstab": [{"N0": a, "N1": b, "count": c} for (a, b), c in sorted(self.crosstab.items())],
            "records": [r.as_dict() for r in self.records],
        }


def _lp_delta(args) -> float:
    shape_levels, z = args
    shape = TableShape(shape_levels)
    return float(lp_feasibility(ZeroPattern(shape, z)).delta_star)


def classify_all(shape: TableShape, lp_sample: int | None = None, seed: int = 0,
                 jobs: int = 1, max_cells: int = MAX_ATLAS_CELLS) -> Atlas:
    """Test every nontrivial zero pattern of ``shape`` against the extreme rays.

    Patterns are visited from most to fewest positive cells so that an
    empty S1 prunes all of its sub-patterns.  The LP cross-check runs on
    every pattern (``lp_sample=None``) or on a seeded random sample.
    Records come back sorted by the pattern read as a binary number.
    """
    n = shape.total_cells
    if n > max_cells:
        raise UnimarginError(f"atlas limited to {max_cells} cells, shape has {n}")
    rays = extreme_pmfs(shape)
    supports = [r.support_bits for r in rays]
    masks = sorted(range(1, 1 << n), key=lambda m: (-m.bit_count(), m))
    pruned: set[int] = set()
    by_bits: dict[int, PatternRecord] = {}
    for bits in masks:
        z = tuple((bits >> k) & 1 for k in range(n))
        pat = ZeroPattern(shape, z)
        if bits in pruned:
            by_bits[bits] = PatternRecord(pat, pat.n_zeros, CompatibilityVerdict(False, "S1_empty", (), ()),
                                          0, pruned=True)
            continue
        verdict = check_compatibility_rays(pat, shape, rays)
        n1 = sum(1 for s in supports if s & ~bits == 0)
        by_bits[bits] = PatternRecord(pat, pat.n_zeros, verdict, n1)
        if not verdict.s1:
            sub = bits
            while sub:
                pruned.add(sub)
                sub = (sub - 1) & bits

    records = sorted(by_bits.values(), key=lambda r: r.pattern.mask)
    if lp_sample is None:
        chosen = list(range(len(records)))
    else:
        chosen = sorted(random.Random(seed).sample(range(len(records)), min(lp_sample, len(records))))
    work = [(shape.levels, records[i].pattern.z) for i in chosen]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            deltas = list(ex.map(_lp_delta, work, chunksize=64))
    else:
        deltas = [_lp_delta(w) for w in work]
    for i, dlt in zip(chosen, deltas):
        r = records[i]
        records[i] = PatternRecord(r.pattern, r.n0, r.verdict, r.n1, dlt, r.pruned)

    crosstab = Counter((r.n0, r.n1) for r in records if r.compatible)
    return Atlas(shape, records, dict(sorted(crosstab.items())))


# -- uniqueness probes (binary d = 3) ---------------------------------------

@dataclass(frozen=True)
class MonomialProbe:
    monomial: ORMonomial
    order: int
    defined: bool  # every cell with a nonzero exponent is a positive cell
    separates: bool  # non-constant over the strictly positive part of the polytope

    def as_dict(self) -> dict:
        return {"label": self.monomial.label, "order": self.order,
                "monomial": self.monomial.as_dict(), "defined": self.defined,
                "separates": self.separates}


@dataclass(frozen=True)
class UniquenessReport:
    pattern: ZeroPattern
    kernel_dim: int
    n_vertices: int
    probes: tuple[MonomialProbe, ...]
    rank_by_order: dict[int, int]
    determining_order: int | None

    def defined(self, order: int | None = None) -> list[MonomialProbe]:
        return [p for p in self.probes if p.defined and (order is None or p.order == order)]

    def find(self, label: str) -> MonomialProbe:
        return next(p for p in self.probes if p.monomial.label == label)

    def as_dict(self) -> dict:
        return {
            "pattern": str(self.pattern),
            "kernel_dim": self.kernel_dim,
            "n_vertices": self.n_vertices,
            "rank_by_order": {str(k): v for k, v in self.rank_by_order.items()},
            "determining_order": self.determining_order,
            "probes": [p.as_dict() for p in self.probes if p.defined],
        }


def _grid_points(vertices: Sequence[np.ndarray], steps: int) -> list[np.ndarray]:
    k = len(vertices)
    pts = []
    for c in itertools.product(range(steps + 1), repeat=k):
        if sum(c) != steps:
            continue
        pts.append(sum(w / steps * v for w, v in zip(c, vertices)))
    return pts


def uniqueness_probe(pattern: ZeroPattern, steps: int = 4, max_order: int = 3) -> UniquenessReport:
    """Which odds-ratio products pin down the uniform-margin table for this pattern.

    A table with the pattern's support and uniform margins is determined by
    the values of a set of monomials iff their exponent vectors span the
    kernel of the restricted margin matrix.  ``determining_order`` is the
    smallest product order at which the defined monomials reach that span.
    Separation is checked numerically on a grid of convex combinations of
    the restricted polytope's vertices, keeping strictly positive points.
    """
    shape = pattern.shape
    if shape != TableShape.binary(3):
        raise UnimarginError("uniqueness probes cover binary three-way tables")
    verdict = check_compatibility_rays(pattern)
    if not verdict.compatible:
        raise UnimarginError(f"pattern {pattern} admits no uniform-margin table")
    cols = pattern.positives
    C, _ = full_matrix(shape)
    kdim = len(cols) - rank(C.restrict(cols), len(cols))
    verts = [np.array([float(v) for v in t.p]) for t in restricted_extreme_pmfs(shape, pattern)]
    pts = [p for p in _grid_points(verts, steps) if np.all(p[cols] > 0)]
    tables = [ProbTable(shape, p) for p in pts]

    probes = []
    rank_by_order = {}
    spanning: list[list[int]] = []
    determining = 0 if kdim == 0 else None
    for order, monos in monomial_catalog(shape, max_order).items():
        for m in monos:
            defined = not m.is_trivial and all(pattern.z[c] for c in m.cells)
            separates = False
            if defined:
                spanning.append([m.exponents[c] for c in cols])
                vals = [evaluate_monomial(t, m).value for t in tables]
                if vals:
                    lo, hi = min(vals), max(vals)
                    separates = hi - lo > 1e-9 * max(1.0, abs(hi))
            probes.append(MonomialProbe(m, order, defined, separates))
        rank_by_order[order] = rank(spanning, len(cols)) if spanning else 0
        if determining is None and rank_by_order[order] == kdim:
            determining = order
    return UniquenessReport(pattern, kdim, len(verts), tuple(probes), rank_by_order, determining)


# -- one-parameter family for the three-zero pattern {011, 101, 110} --------

_SHAPE3 = TableShape.binary(3)
# 1/2 on 000 and 111
DIAGONAL_RAY = (Fraction(1, 2), 0, 0, 0, 0, 0, 0, Fraction(1, 2))
# 1/4 on the odd-weight cells 001, 010, 100, 111
ODD_PARITY_RAY = (0, Fraction(1, 4), Fraction(1, 4), 0, Fraction(1, 4), 0, 0, Fraction(1, 4))
LAMBDA_PATTERN = ZeroPattern.from_zero_cells([(0, 1, 1), (1, 0, 1), (1, 1, 0)], _SHAPE3)


def lambda_family(lam: float) -> ProbTable:
    """``lam * DIAGONAL_RAY + (1 - lam) * ODD_PARITY_RAY``, for ``0 <= lam <= 1``."""
    if not 0 <= lam <= 1:
        raise UnimarginError("lambda must lie in [0, 1]")
    p = np.array([lam * float(a) + (1 - lam) * float(b) for a, b in zip(DIAGONAL_RAY, ODD_PARITY_RAY)])
    return ProbTable(_SHAPE3, p)


def lambda_family_or(lam: float) -> float:
    """Closed form of p000^2 p111 / (p001 p010 p100) along the family."""
    return 4 * lam ** 2 * (1 + lam) / (1 - lam) ** 3
