"""Adaptive Simpson quadrature with level-synchronous refinement.

All panels that need refining at a given level are evaluated in one call to
the integrand, which lets dense systems batch their resolvent solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureFail

__all__ = ["QuadratureConfig", "QuadResult", "adaptive_simpson"]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for :func:`adaptive_simpson`.

    A panel is accepted when its Richardson error estimate is below
    ``max(abs_tol, rel_tol * |current estimate|)`` scaled by the panel's
    share of the interval.
    """

    abs_tol: float = 1e-6
    rel_tol: float = 1e-6
    max_subdivisions: int = 2**20
    initial_panels: int = 16
    method: str = "adaptive-simpson"

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.method != "adaptive-simpson":
            raise ValueError(f"unsupported quadrature method {self.method!r}")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int
    panels: int


def adaptive_simpson(f, a, b, config: QuadratureConfig | None = None, breakpoints=()) -> QuadResult:
    """Integrate a vectorised ``f`` over ``[a, b]``.

    ``f`` receives a 1-D float array and returns values of the same shape.
    ``breakpoints`` inside ``(a, b)`` always become panel edges.
    """
    config = config or QuadratureConfig()
    if b == a:
        return QuadResult(0.0, 0.0, 0, 0)
    if b < a:
        r = adaptive_simpson(f, b, a, config, breakpoints)
        return QuadResult(-r.value, r.error, r.evaluations, r.panels)

    edges = np.unique(np.concatenate([[a, b], [x for x in breakpoints if a < x < b]]))
    k = config.initial_panels
    fine = np.concatenate([np.linspace(lo, hi, k + 1)[:-1] for lo, hi in zip(edges[:-1], edges[1:])]
                          + [[b]])
    lo, hi = fine[:-1], fine[1:]
    mid = 0.5 * (lo + hi)
    x = np.concatenate([fine, mid])
    fx = _call(f, x)
    nevals = x.size
    f_edges, f_mid = fx[: fine.size], fx[fine.size:]
    flo, fhi = f_edges[:-1], f_edges[1:]
    whole = (hi - lo) / 6 * (flo + 4 * f_mid + fhi)

    total_len = b - a
    accepted = 0.0
    accepted_err = 0.0
    panels = lo.size
    while lo.size:
        estimate = accepted + whole.sum()
        tol = max(config.abs_tol, config.rel_tol * abs(estimate))
        q1 = 0.5 * (lo + mid)
        q3 = 0.5 * (mid + hi)
        fq = _call(f, np.concatenate([q1, q3]))
        nevals += fq.size
        f1, f3 = fq[: lo.size], fq[lo.size:]
        h = hi - lo
        left = h / 12 * (flo + 4 * f1 + f_mid)
        right = h / 12 * (f_mid + 4 * f3 + fhi)
        diff = left + right - whole
        ok = np.abs(diff) <= 15 * tol * h / total_len
        # panels that cannot be split further in floating point are accepted
        ok |= (q1 <= lo) | (q3 >= hi) | (h <= 4 * np.spacing(np.maximum(np.abs(lo), np.abs(hi))))
        accepted += float((left + right + diff / 15)[ok].sum())
        accepted_err += float(np.abs(diff[ok]).sum() / 15)
        keep = ~ok
        if not keep.any():
            break
        panels += int(keep.sum())
        if panels > config.max_subdivisions:
            raise QuadratureFail(
                f"tolerance {tol:.3g} not met within {config.max_subdivisions} panels")
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        new_mid = np.concatenate([q1[keep], q3[keep]])
        flo, fhi, f_mid = (np.concatenate([flo[keep], f_mid[keep]]),
                           np.concatenate([f_mid[keep], fhi[keep]]),
                           np.concatenate([f1[keep], f3[keep]]))
        whole = np.concatenate([left[keep], right[keep]])
        mid = new_mid
    if not math.isfinite(accepted):
        raise QuadratureFail("integrand produced non-finite values")
    return QuadResult(accepted, accepted_err, nevals, panels)


def _call(f, x):
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape).astype(float)
    if not np.isfinite(y).all():
        raise QuadratureFail("integrand is not finite on the interval")
    return y
