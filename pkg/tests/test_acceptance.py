"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``.  Criterion 10 enumerates
the 2^6 rays (about two minutes, ~0.6 GB); set ``UNIMARGIN_STRETCH=1`` to
include it.
"""

import itertools
import os
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import (MARGINAL_P0, MARGINAL_P1, PRINTED_PATTERNS, PRINTED_RAYS, SHAPE3, SHAPE4,
                      SHEFFIELD_COUNTS, THREE_ZERO_P0, TWO_ZERO_P0, TWO_ZERO_P1, fig4_patterns,
                      from_printed, kernel_perturbations)
from unimargin.classify import classify_all, lambda_family, lambda_family_or
from unimargin.ipfp import IpfpConfig, closed_form_2x2, ipfp_uniform
from unimargin.lp import lp_feasibility
from unimargin.odds import (ConditionalORSpec, all_conditional_ors, conditional_or, evaluate_monomial,
                            marginal_or, parse_monomial)
from unimargin.polytope import check_compatibility_rays, extreme_pmfs, kernel_basis, rank
from unimargin.tables import ProbTable, TableShape, ZeroPattern, is_uniform_margins, kl_divergence

PUBLISHED_CROSSTAB = {(0, 6): 1, (1, 4): 8, (2, 3): 16, (3, 2): 8, (4, 1): 2, (4, 2): 6, (6, 1): 4}
STRETCH = os.environ.get("UNIMARGIN_STRETCH") == "1"


class Criterion:
    """Collects named checks, prints one summary line, then fails on any miss."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.misses: list[str] = []

    def check(self, ok, message: str):
        if not ok:
            self.misses.append(message)

    def close(self, capsys, note: str = ""):
        verdict = "PASS" if not self.misses else "FAIL"
        line = f"criterion {self.number:>2} {verdict}  {self.title}"
        if self.misses:
            line += "  [" + "; ".join(self.misses) + "]"
        elif note:
            line += f"  ({note})"
        with capsys.disabled():
            print("\n" + line)
        assert not self.misses, line


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def test_criterion_01_sheffield(capsys):
    c = Criterion(1, "Sheffield transform")
    t = ProbTable.from_counts(SHEFFIELD_COUNTS, (2, 2))
    (out, rep), secs = timed(ipfp_uniform, t)
    target = [0.408, 0.092, 0.092, 0.408]
    c.check(np.all(np.abs(out.p - target) <= 0.001), f"cells {np.round(out.p, 4).tolist()}")
    w_in = conditional_or(t, ConditionalORSpec((1, 2), ())).value
    w_out = conditional_or(out, ConditionalORSpec((1, 2), ())).value
    c.check(abs(w_in - 19.47) <= 0.01 and abs(w_out - 19.47) <= 0.01, f"odds ratio {w_in:.4f} -> {w_out:.4f}")
    c.check(secs < 1, f"runtime {secs:.3f}s")
    c.close(capsys, f"OR {w_out:.3f}, {secs * 1000:.1f} ms")


def test_criterion_02_closed_form(capsys):
    c = Criterion(2, "closed form agrees with IPFP on 200 random odds ratios")
    rng = np.random.default_rng(2)
    worst = 0.0
    for omega in np.exp(rng.uniform(np.log(0.01), np.log(100), 200)):
        a, b = rng.uniform(0.05, 0.95, 2)
        t = ProbTable.from_values([omega * a * b, a * (1 - b), (1 - a) * b, 1 - a - b + a * b], (2, 2))
        out, rep = ipfp_uniform(t, IpfpConfig(tol=1e-13))
        err = float(np.max(np.abs(out.p - closed_form_2x2(omega).p)))
        worst = max(worst, err)
        c.check(rep.converged and err <= 1e-8, f"omega={omega:.4g} error {err:.2e}")
    c.close(capsys, f"max error {worst:.1e}")


def test_criterion_03_d3_rays(capsys):
    c = Criterion(3, "six exact extreme pmfs for 2x2x2")
    rays = extreme_pmfs(SHAPE3)
    got = {r.p for r in rays}
    want = {tuple(Fraction(v) for v in from_printed(r)) for r in PRINTED_RAYS.values()}
    c.check(len(rays) == 6, f"{len(rays)} rays")
    c.check(got == want, "ray set differs from the published list")
    c.close(capsys)


def test_criterion_04_case_verdicts(capsys):
    c = Criterion(4, "verdicts for the four three-way zero patterns")
    pats = {k: ZeroPattern(SHAPE3, from_printed(v)) for k, v in PRINTED_PATTERNS.items()}
    expected = {"Z1": "S1_empty", "Z2": "S1_empty", "Z3": "S2_proper_subset"}
    for name, reason in expected.items():
        v = check_compatibility_rays(pats[name])
        c.check(not v.compatible and v.reason == reason, f"{name}: {v.status} ({v.reason})")
    v = check_compatibility_rays(pats["Z4"])
    q = Fraction(1, 4)
    witness = tuple(Fraction(x) for x in from_printed((0, q, 0, q, q, 0, q, 0)))
    c.check(v.compatible and v.witness is not None and v.witness.p == witness,
            f"Z4: {v.status}, witness {v.witness}")
    c.close(capsys)


def test_criterion_05_lp_examples(capsys):
    c = Criterion(5, "LP delta* on the published examples")
    upper, lower = fig4_patterns()
    single = ZeroPattern(TableShape.binary(2), (0, 1, 1, 1))
    deltas = []
    for name, pat, want, tol in (("upper", upper, 0.0, 1e-9), ("lower", lower, 0.07143, 1e-4),
                                 ("2x2 single zero", single, 0.0, 1e-9)):
        v, secs = timed(lp_feasibility, pat)
        deltas.append(f"{v.delta_star:.5f}")
        c.check(abs(v.delta_star - want) <= tol, f"{name}: delta* {v.delta_star:.6f}")
        c.check(secs < 1, f"{name}: runtime {secs:.3f}s")
    c.check(lp_feasibility(lower, exact=True).delta_star == Fraction(1, 14), "lower: exact delta* != 1/14")
    c.close(capsys, "delta* " + ", ".join(deltas))


def test_criterion_06_atlas(capsys):
    c = Criterion(6, "2x2x2 atlas and N0 x N1 crosstab")
    atlas, secs = timed(classify_all, SHAPE3, lp_sample=0)
    c.check(len(atlas.compatible) == 45, f"{len(atlas.compatible)} compatible")
    c.check(atlas.crosstab == PUBLISHED_CROSSTAB, f"crosstab {atlas.crosstab}")
    rows = [sum(v for (a, _), v in atlas.crosstab.items() if a == k) for k in (0, 1, 2, 3, 4, 6)]
    cols = [sum(v for (_, b), v in atlas.crosstab.items() if b == k) for k in (1, 2, 3, 4, 6)]
    c.check(rows == [1, 8, 16, 8, 8, 4] and cols == [6, 14, 16, 8, 1], f"totals {rows} / {cols}")
    c.check(secs < 10, f"runtime {secs:.2f}s")
    c.close(capsys, f"{secs:.2f}s")


def test_criterion_07_marginal_ors(capsys):
    c = Criterion(7, "marginal odds ratios change, conditional ones do not")
    t = ProbTable(SHAPE3, np.array(MARGINAL_P0)).normalized()
    out, rep = ipfp_uniform(t, IpfpConfig(tol=1e-13))
    c.check(rep.converged, "IPFP did not converge")
    dev = float(np.max(np.abs(out.p - np.array(MARGINAL_P1))))
    c.check(dev <= 0.005, f"p1 deviation {dev:.4f}")
    for (i, j), want in zip(((1, 2), (1, 3), (2, 3)), (0.357, 0.714, 1.033)):
        got = marginal_or(out, i, j).value
        c.check(abs(got - want) <= 0.002, f"w{i}{j} marginal {got:.4f} vs {want}")
    for (s, a), (_, b) in zip(all_conditional_ors(t), all_conditional_ors(out)):
        c.check(a.status == b.status and (not a.defined or abs(a.value - b.value) <= 1e-8 * max(1, a.value)),
                f"{s.label} not preserved")
    c.close(capsys)


def _two_zero_move(alpha, beta):
    p = np.array(TWO_ZERO_P1, dtype=float)
    # positive cells 000, 001, 011, 101, 110, 111
    p[[0, 1, 3, 5, 6, 7]] += (alpha * np.array([-1, 1, 0, 0, 1, -1])
                              + beta * np.array([0, 1, -1, -1, 0, 1]))
    return ProbTable(SHAPE3, p)


def test_criterion_08_uniqueness_fixtures(capsys):
    c = Criterion(8, "odds-ratio products that pin down the zero-pattern solutions")
    # two zeros on a face diagonal: kernel span and the (w12|1, w13|0*w23|1) rows
    pat = ZeroPattern.from_zero_cells([(0, 1, 0), (1, 0, 0)], SHAPE3)
    basis = kernel_basis(pat)
    published = [(-1, 1, 0, 0, 1, -1), (0, 1, -1, -1, 0, 1)]
    c.check(len(basis) == 2 and rank(basis + published, 6) == 2, "kernel span differs")
    w12 = parse_monomial("w12|1", SHAPE3)
    w01 = parse_monomial("w13|0*w23|1", SHAPE3)
    p0 = ProbTable(SHAPE3, np.array(TWO_ZERO_P0)).normalized()
    p1, _ = ipfp_uniform(p0, IpfpConfig(tol=1e-13))
    alpha = 0.01
    p1_alt = _two_zero_move(alpha, 2 * alpha ** 2)
    rows = {"p0": (p0, 1.0, 1.0), "p1": (p1, 1.0, 1.0), "p1'": (p1_alt, 1.0, 0.787)}
    for name, (t, a, b) in rows.items():
        va, vb = evaluate_monomial(t, w12).value, evaluate_monomial(t, w01).value
        c.check(abs(va - a) <= 0.001 and abs(vb - b) <= 0.001, f"{name}: ({va:.4f}, {vb:.4f})")
    c.check(is_uniform_margins(p1_alt, tol=1e-12), "p1' margins not uniform")
    # three zeros: the order-3 product along the two-ray family
    w3 = parse_monomial("w12|0*w13|0*w23|1", SHAPE3)
    q0 = ProbTable(SHAPE3, np.array(THREE_ZERO_P0)).normalized()
    q1, _ = ipfp_uniform(q0, IpfpConfig(tol=1e-13))
    for name, t in (("p0", q0), ("p1", q1)):
        v = evaluate_monomial(t, w3).value
        c.check(abs(v - 7.111) <= 0.001, f"{name}: triple product {v:.4f}")
    v09 = evaluate_monomial(lambda_family(0.9), w3).value
    c.check(abs(lambda_family_or(0.9) - 6156) <= 1 and abs(v09 - 6156) <= 1,
            f"lambda=0.9: formula {lambda_family_or(0.9):.2f}, table {v09:.2f}")
    c.close(capsys, f"w01 of p1' {evaluate_monomial(p1_alt, w01).value:.4f}, lambda=0.9 gives {v09:.1f}")


def test_criterion_09_cross_oracle(capsys):
    c = Criterion(9, "rays vs LP, slice closure and KL minimality")
    for mask in range(1, 256):
        pat = ZeroPattern.from_mask(mask, SHAPE3)
        c.check(check_compatibility_rays(pat).compatible == lp_feasibility(pat).compatible, f"d=3 {pat}")
    rng = random.Random(2024)
    rays4 = extreme_pmfs(SHAPE4)
    for _ in range(1000):
        pat = ZeroPattern.from_mask(rng.randrange(1, 1 << 16), SHAPE4)
        c.check(check_compatibility_rays(pat, rays=rays4).compatible == lp_feasibility(pat).compatible,
                f"d=4 {pat}")

    # a uniform-margin pmf that vanishes on the slice X_i=y1, X_j=y2 vanishes on
    # the opposite slice too; tested on exact convex combinations of rays
    n_slices = 0
    for shape in (SHAPE3, SHAPE4):
        rays = extreme_pmfs(shape)
        cells = shape.cells()
        rng = random.Random(11)
        for i, j in itertools.combinations(range(shape.d), 2):
            for y1, y2 in itertools.product((0, 1), repeat=2):
                sl = [k for k, a in enumerate(cells) if a[i] == y1 and a[j] == y2]
                opp = [k for k, a in enumerate(cells) if a[i] == 1 - y1 and a[j] == 1 - y2]
                pool = [r for r in rays if all(r.p[k] == 0 for k in sl)]
                n_slices += 1
                for _ in range(1000):
                    w = [Fraction(rng.randint(1, 9)) for _ in pool]
                    tot = sum(w)
                    mass = sum(wi / tot * r.p[k] for wi, r in zip(w, pool) for k in opp)
                    if mass != 0:
                        c.check(False, f"slice {shape} X{i + 1}={y1}, X{j + 1}={y2}")
                        break

    for name, p0 in (("two zeros", TWO_ZERO_P0), ("three zeros", THREE_ZERO_P0),
                     ("positive", MARGINAL_P0)):
        t = ProbTable(SHAPE3, np.array(p0)).normalized()
        q_star, _ = ipfp_uniform(t, IpfpConfig(tol=1e-14))
        best = kl_divergence(q_star, t)
        for q in kernel_perturbations(q_star, 100, seed=7):
            if not (is_uniform_margins(q, tol=1e-12) and kl_divergence(q, t) >= best - 1e-9):
                c.check(False, f"{name}: perturbation beats the IPFP limit")
                break
    c.close(capsys, f"255 + 1000 patterns, {n_slices} slices, 300 perturbations")


@pytest.mark.skipif(not STRETCH, reason="opt-in: set UNIMARGIN_STRETCH=1")
def test_criterion_10_stretch(capsys):
    c = Criterion(10, "2^6 extreme pmfs")
    shape = TableShape.binary(6)
    rays, secs = timed(extreme_pmfs, shape, max_cells=64)
    c.check(len(rays) == 707_264, f"{len(rays)} rays")
    c.check(all(is_uniform_margins(r, tol=0) for r in rays[:: 10_000]), "sampled ray not uniform")
    c.close(capsys, f"{len(rays)} rays in {secs:.0f}s")


def test_criterion_10_stretch_skipped_notice(capsys):
    if STRETCH:
        pytest.skip("stretch criterion ran")
    with capsys.disabled():
        print("\ncriterion 10 SKIP  2^6 extreme pmfs (opt-in: UNIMARGIN_STRETCH=1)")
