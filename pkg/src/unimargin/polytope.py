"""
Geometry of the uniform-margin polytope.

The cone ``{y >= 0 : H y = 0}`` is converted to its extreme rays by the
double description method in integer arithmetic.  Rays are kept as
primitive integer vectors together with a support bitset (canonical cell
position k at bit k); normalizing a ray by its sum gives an extreme pmf.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key, lru_cache, reduce
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .tables import (RationalTable, TableShape, UnimarginError, ZeroPattern)

log = logging.getLogger(__name__)

DEFAULT_MAX_CELLS = 64
SLOW_CELLS = 32


@dataclass(frozen=True)
class ConstraintMatrix:
    shape: TableShape
    role: str  # "H" or "C"
    rows: tuple[tuple[int, ...], ...]

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return self.shape.total_cells

    def to_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=int).reshape(self.n_rows, self.n_cols)

    def restrict(self, columns: Sequence[int]) -> list[list[int]]:
        return [[r[k] for k in columns] for r in self.rows]


def margin_matrix(shape: TableShape) -> ConstraintMatrix:
    """One row ``1{a_i = j} - 1{a_i = j+1}`` per axis and adjacent level pair."""
    cells = shape.cells()
    rows = []
    for i, x in enumerate(shape.levels):
        for j in range(x - 1):
            rows.append(tuple(int(a[i] == j) - int(a[i] == j + 1) for a in cells))
    return ConstraintMatrix(shape, "H", tuple(rows))


def full_matrix(shape: TableShape) -> tuple[ConstraintMatrix, tuple[int, ...]]:
    """``C``: the margin rows under a leading row of ones, plus ``b = (1, 0, ..., 0)``."""
    h = margin_matrix(shape)
    rows = ((1,) * shape.total_cells,) + h.rows
    b = (1,) + (0,) * h.n_rows
    return ConstraintMatrix(shape, "C", rows), b


# -- exact linear algebra ---------------------------------------------------

def _rref(rows: Sequence[Sequence], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    m = [[Fraction(v) for v in r] for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((k for k in range(r, len(m)) if m[k][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        lead = m[r][c]
        m[r] = [v / lead for v in m[r]]
        for k in range(len(m)):
            if k != r and m[k][c] != 0:
                f = m[k][c]
                m[k] = [a - f * b for a, b in zip(m[k], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Sequence[Sequence[int]], ncols: int) -> int:
    """Exact rank by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in rows if any(r)]
    rk = 0
    prev = 1
    for c in range(ncols):
        piv = next((k for k in range(rk, len(m)) if m[k][c] != 0), None)
        if piv is None:
            continue
        m[rk], m[piv] = m[piv], m[rk]
        p = m[rk][c]
        for k in range(rk + 1, len(m)):
            f = m[k][c]
            m[k] = [(p * a - f * b) // prev for a, b in zip(m[k], m[rk])]
        prev = p
        rk += 1
        if rk == len(m):
            break
    return rk


def _primitive(v: Sequence) -> tuple[int, ...]:
    """Scale a rational vector to coprime integers with first nonzero positive."""
    v = [Fraction(x) for x in v]
    den = reduce(math.lcm, (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(math.gcd, ints, 0) or 1
    ints = [x // g for x in ints]
    first = next((x for x in ints if x), 0)
    if first < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def nullspace(rows: Sequence[Sequence[int]], ncols: int) -> list[tuple[int, ...]]:
    """Integer basis of the right null space, one vector per free column."""
    red, pivots = _rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, pc in zip(red, pivots):
            v[pc] = -r[f]
        basis.append(_primitive(v))
    return basis


# -- double description ----------------------------------------------------

def _row_order(rows: Sequence[Sequence[int]]) -> list[int]:
    # most balanced rows (equal counts of +1 and -1) first
    def key(k):
        r = rows[k]
        pos = sum(1 for v in r if v > 0)
        neg = sum(1 for v in r if v < 0)
        return (abs(pos - neg), k)
    return sorted(range(len(rows)), key=key)


def cone_rays(rows: Sequence[Sequence[int]], n: int,
              progress: Callable[[int, int, int], None] | None = None) -> list[tuple[int, ...]]:
    """Extreme rays of ``{y in R^n : y >= 0, A y = 0}`` as primitive integer vectors.

    Starts from the unit vectors (rays of the orthant) and cuts by one
    hyperplane at a time.  Two rays of opposite sign generate a new ray iff
    they are adjacent, tested exactly: the face spanned by their common
    support has a 2-dimensional null space.
    """
    if n == 0:
        return []
    rays = [tuple(int(i == k) for i in range(n)) for k in range(n)]
    supp = [1 << k for k in range(n)]
    done: list[Sequence[int]] = []
    order = _row_order(rows)
    for step, ri in enumerate(order):
        h = rows[ri]
        if not any(h):
            continue
        vals = [sum(a * b for a, b in zip(h, r)) for r in rays]
        zero = [k for k, v in enumerate(vals) if v == 0]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        new_rays = [rays[k] for k in zero]
        new_supp = [supp[k] for k in zero]
        if pos and neg:
            max_size = rank(done, n) + 2 if done else 2
            wide = n > 64  # supports no longer fit a uint64 mask
            if not wide:
                neg_arr = np.array(neg, dtype=np.int64)
                neg_supp = np.array(supp, dtype=np.uint64)[neg_arr]
            cache: dict[int, bool] = {}
            for kp in pos:
                if wide:
                    cand = [kn for kn in neg if (supp[kp] | supp[kn]).bit_count() <= max_size]
                else:
                    union = neg_supp | np.uint64(supp[kp])
                    cand = neg_arr[np.bitwise_count(union) <= max_size]
                for kn in cand:
                    kn = int(kn)
                    s = supp[kp] | supp[kn]
                    ok = cache.get(s)
                    if ok is None:
                        cols = [c for c in range(n) if (s >> c) & 1]
                        sub = [[r[c] for c in cols] for r in done]
                        ok = len(cols) - rank(sub, len(cols)) == 2
                        cache[s] = ok
                    if not ok:
                        continue
                    a, b = vals[kp], -vals[kn]
                    v = [b * x + a * y for x, y in zip(rays[kp], rays[kn])]
                    g = reduce(math.gcd, v)
                    new_rays.append(tuple(x // g for x in v))
                    new_supp.append(s)
        rays, supp = new_rays, new_supp
        done.append(h)
        if progress is not None:
            progress(step + 1, len(order), len(rays))
    return rays


def _supports(rays: Sequence[Sequence[int]]) -> list[int]:
    return [sum(1 << k for k, v in enumerate(r) if v) for r in rays]


def _compare_entries(a: RationalTable, b: RationalTable) -> int:
    """Lexicographic comparison of the entry vectors by cross-multiplication."""
    da, na = a.scaled
    db, nb = b.scaled
    for x, y in zip(na, nb):
        x, y = x * db, y * da
        if x != y:
            return -1 if x < y else 1
    return 0


def _normalize(rays, shape: TableShape) -> list[RationalTable]:
    tables = [RationalTable.from_integers(r, shape) for r in rays]
    # canonical order: descending lexicographic on the entry vector
    tables.sort(key=cmp_to_key(_compare_entries), reverse=True)
    return tables


def _read_cache(path: Path, shape: TableShape) -> list[RationalTable]:
    out = []
    with path.open() as fh:
        header = json.loads(fh.readline())
        if header.get("shape") != list(shape.levels):
            raise UnimarginError(f"{path} holds rays for shape {header.get('shape')}")
        for line in fh:
            _, num = json.loads(line)
            out.append(RationalTable.from_integers(num, shape))
    return out


def _write_cache(path: Path, shape: TableShape, tables: Sequence[RationalTable]):
    """One JSON header line, then one ``[D, [n_1, ..., n_N]]`` line per ray."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with tmp.open("w") as fh:
        fh.write(json.dumps({"shape": list(shape.levels), "order": "lex-msb",
                             "n_rays": len(tables)}) + "\n")
        for t in tables:
            den, num = t.scaled
            fh.write(json.dumps([den, list(num)]) + "\n")
    tmp.replace(path)


def _check_bound(shape: TableShape, max_cells: int):
    n = shape.total_cells
    if n > max_cells:
        raise UnimarginError(f"{n} cells exceeds the ray-enumeration bound of {max_cells}")
    if n > SLOW_CELLS:
        log.warning("enumerating rays for %d cells; this can take a long time", n)


def _cache_file(cache_dir, shape: TableShape) -> Path:
    return Path(cache_dir) / f"rays_{shape}.jsonl"


@lru_cache(maxsize=32)
def _extreme_pmfs_cached(levels: tuple[int, ...]) -> tuple[RationalTable, ...]:
    shape = TableShape(levels)
    h = margin_matrix(shape)
    return tuple(_normalize(cone_rays(h.rows, shape.total_cells), shape))


def extreme_pmfs(shape: TableShape, max_cells: int = DEFAULT_MAX_CELLS,
                 cache_dir=None, progress=None) -> list[RationalTable]:
    """All extreme pmfs of the uniform-margin polytope, exact, canonically ordered.

    The order is descending lexicographic on the rational entry vector.
    ``cache_dir`` stores and reuses the list as JSON lines keyed by shape.
    """
    _check_bound(shape, max_cells)
    if cache_dir is not None:
        path = _cache_file(cache_dir, shape)
        if path.exists():
            return _read_cache(path, shape)
    if progress is None:
        tables = list(_extreme_pmfs_cached(shape.levels))
    else:
        h = margin_matrix(shape)
        tables = _normalize(cone_rays(h.rows, shape.total_cells, progress), shape)
    if cache_dir is not None:
        _write_cache(path, shape, tables)
    return tables


def restricted_extreme_pmfs(shape: TableShape, pattern: ZeroPattern,
                            max_cells: int = DEFAULT_MAX_CELLS) -> list[RationalTable]:
    """Extreme pmfs of the uniform-margin polytope with the pattern's zeros imposed."""
    _check_bound(shape, max_cells)
    if pattern.shape != shape:
        raise UnimarginError("pattern shape does not match")
    cols = pattern.positives
    h = margin_matrix(shape)
    rays = cone_rays(h.restrict(cols), len(cols))
    full = []
    for r in rays:
        y = [0] * shape.total_cells
        for c, v in zip(cols, r):
            y[c] = v
        full.append(y)
    return _normalize(full, shape)


# -- compatibility ----------------------------------------------------------

@dataclass(frozen=True)
class CompatibilityVerdict:
    compatible: bool
    reason: str | None  # None, "S1_empty" or "S2_proper_subset"
    s1: tuple[int, ...]  # 1-based indices into the canonical ray list
    s2: tuple[int, ...]  # 1-based cell ranks covered by the S1 rays
    witness: RationalTable | None = None

    @property
    def status(self) -> str:
        return "compatible" if self.compatible else "incompatible"

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason,
            "S1": list(self.s1),
            "S2": list(self.s2),
            "witness": None if self.witness is None else [str(v) for v in self.witness.p],
        }


def check_compatibility_rays(pattern: ZeroPattern, shape: TableShape | None = None,
                             rays: Sequence[RationalTable] | None = None) -> CompatibilityVerdict:
    """Decide whether a uniform-margin table with exactly this support exists.

    S1 holds the extreme pmfs vanishing on every forced-zero cell, S2 the
    positive cells they cover.  The pattern is compatible iff S1 is nonempty
    and S2 is all of the positive cells; the witness is the plain average
    of the S1 rays.
    """
    shape = shape or pattern.shape
    if rays is None:
        rays = extreme_pmfs(shape)
    allowed = pattern.support_bits
    s1 = [k for k, r in enumerate(rays) if r.support_bits & ~allowed == 0]
    covered = 0
    for k in s1:
        covered |= rays[k].support_bits
    s2 = tuple(c + 1 for c in range(shape.total_cells) if (covered >> c) & 1)
    s1_labels = tuple(k + 1 for k in s1)
    if not s1:
        return CompatibilityVerdict(False, "S1_empty", (), ())
    if covered != allowed:
        return CompatibilityVerdict(False, "S2_proper_subset", s1_labels, s2)
    # average in integers over a common denominator
    den = math.lcm(*(rays[k].scaled[0] for k in s1))
    num = [0] * shape.total_cells
    for k in s1:
        d, n = rays[k].scaled
        f = den // d
        for c, v in enumerate(n):
            num[c] += v * f
    p = [Fraction(v, den * len(s1)) for v in num]
    return CompatibilityVerdict(True, None, s1_labels, s2, RationalTable(shape, tuple(p)))


def monotone_prune(pattern: ZeroPattern, rays: Sequence[RationalTable] | None = None) -> frozenset:
    """All binary vectors ``z' <= z`` (including ``z`` and the all-zero vector).

    Valid only when the pattern's S1 is empty: then none of them admits a
    uniform-margin table, so they can be skipped without testing.
    """
    verdict = check_compatibility_rays(pattern, rays=rays)
    if verdict.s1:
        raise UnimarginError("pruning requires an empty S1")
    pos = pattern.positives
    out = set()
    for bits in range(1 << len(pos)):
        z = [0] * len(pattern.z)
        for j, c in enumerate(pos):
            if (bits >> j) & 1:
                z[c] = 1
        out.add(tuple(z))
    return frozenset(out)


def forced_zeros(pattern: ZeroPattern, shape: TableShape | None = None) -> ZeroPattern:
    """Close the zero set under the opposite-slice rule for pairs of binary axes.

    If every cell with ``(a_i1, a_i2) = (y1, y2)`` is zero in a uniform-margin
    table, so is every cell with ``(1 - y1, 1 - y2)``.  Applied to a fixpoint.
    """
    shape = shape or pattern.shape
    if not shape.is_binary:
        raise UnimarginError("forced-zero closure is defined for binary tables")
    cells = shape.cells()
    z = list(pattern.z)
    d = shape.d
    changed = True
    while changed:
        changed = False
        for i in range(d):
            for j in range(i + 1, d):
                for y1 in (0, 1):
                    for y2 in (0, 1):
                        sl = [k for k, a in enumerate(cells) if a[i] == y1 and a[j] == y2]
                        if any(z[k] for k in sl):
                            continue
                        opp = [k for k, a in enumerate(cells) if a[i] == 1 - y1 and a[j] == 1 - y2]
                        for k in opp:
                            if z[k]:
                                z[k] = 0
                                changed = True
    if not any(z):
        raise UnimarginError("forced-zero closure leaves no positive cell")
    return ZeroPattern(shape, tuple(z))


def kernel_basis(pattern: ZeroPattern, shape: TableShape | None = None) -> list[tuple[int, ...]]:
    """Integer basis of ``ker C`` restricted to the pattern's positive cells.

    Vectors are indexed by the positive cells in canonical order.  Each is
    primitive (coprime entries) with its first nonzero entry positive.
    """
    shape = shape or pattern.shape
    c, _ = full_matrix(shape)
    cols = pattern.positives
    return nullspace(c.restrict(cols), len(cols))
