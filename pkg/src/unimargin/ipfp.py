"""Iterative proportional fitting to uniform margins."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .tables import ProbTable, TableShape, UnimarginError, kl_divergence, margin_deviation

log = logging.getLogger(__name__)

BOUNDARY_FLOOR = 1e-14


@dataclass(frozen=True)
class IpfpConfig:
    max_iter: int = 100_000
    tol: float = 1e-10

    def __post_init__(self):
        if not self.tol > 0:
            raise UnimarginError("tol must be positive")
        if self.max_iter < 1:
            raise UnimarginError("max_iter must be at least 1")


@dataclass(frozen=True)
class IpfpReport:
    iterations_used: int
    final_margin_deviation: float
    converged: bool
    kl_to_input: float
    boundary_drift: bool = False

    def as_dict(self) -> dict:
        return {
            "iterations_used": self.iterations_used,
            "final_margin_deviation": self.final_margin_deviation,
            "converged": self.converged,
            "kl_to_input": self.kl_to_input,
            "boundary_drift": self.boundary_drift,
        }


def ipfp_uniform(table: ProbTable, cfg: IpfpConfig | None = None) -> tuple[ProbTable, IpfpReport]:
    """Rescale ``table`` until every axis-i margin equals ``1/x_i``.

    One iteration is a full sweep over the axes in order 1..d.  Convergence
    is checked after each sweep as the largest absolute margin deviation.
    When the zero pattern admits no uniform-margin table the loop runs to
    ``max_iter`` and the last iterate is returned with ``converged=False``.
    """
    cfg = cfg or IpfpConfig()
    src = table.normalized()
    shape = src.shape
    arr = src.array.copy()
    d = shape.d
    axes_other = [tuple(j for j in range(d) if j != i) for i in range(d)]
    for i in range(d):
        if np.any(arr.sum(axis=axes_other[i]) == 0):
            raise UnimarginError(f"axis {i + 1} has an empty level; margins cannot be rescaled")

    positive = arr > 0
    targets = [1.0 / x for x in shape.levels]
    dev = margin_deviation(arr, shape)
    it = 0
    while dev > cfg.tol and it < cfg.max_iter:
        for i in range(d):
            m = arr.sum(axis=axes_other[i], keepdims=True)
            arr *= targets[i] / m
        it += 1
        dev = margin_deviation(arr, shape)

    drift = bool(np.any(arr[positive] < BOUNDARY_FLOOR))
    out = ProbTable(shape, arr.reshape(-1))
    converged = dev <= cfg.tol
    if not converged:
        log.warning("IPFP stopped after %d sweeps with margin deviation %.3g", it, dev)
    report = IpfpReport(it, dev, converged, kl_divergence(out, src), drift)
    return out, report


def closed_form_2x2(omega: float) -> ProbTable:
    """The 2x2 uniform-margin table with odds ratio ``omega``."""
    if not omega > 0:
        raise UnimarginError("odds ratio must be positive")
    r = math.sqrt(omega)
    diag = r / (2 * (1 + r))
    off = 1 / (2 * (1 + r))
    return ProbTable(TableShape((2, 2)), np.array([diag, off, off, diag]))
