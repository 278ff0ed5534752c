"""Brute-force transient ``t -> ||C e^{tA} B||`` for desk-sized systems.

This is the ground truth the bounds are checked against: one matrix
exponential for the step ``delta``, then repeated multiplication along the
time ladder, then trisection around the running maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .errors import HorizonTooShort, NotConverged, Overflow
from .linalg import NormKind, induced_norm, matrix_exponential

__all__ = ["HorizonConfig", "TransientTrace", "transient_sup", "check_laplace_identity"]

DENSE_LIMIT = 2000


@dataclass(frozen=True)
class HorizonConfig:
    """Time-ladder settings.

    ``delta`` defaults to ``0.01 / ||A||``, capped at a thousandth of an
    explicit horizon. The ladder runs until the tail is
    decreasing and below a tenth of the running maximum, or until
    ``horizon`` (default: ``max_steps`` steps).
    """

    delta: float | None = None
    horizon: float | None = None
    max_steps: int = 2_000_000
    rel_tol: float = 1e-4
    chunk: int = 512


@dataclass(frozen=True)
class TransientTrace:
    times: np.ndarray
    values: np.ndarray
    sup_value: float
    sup_time: float
    converged: bool


def _dense_parts(sys):
    d = sys.dense()
    return d.A, d.B, d.C


def transient_sup(sys, norm=NormKind.P2, config: HorizonConfig | None = None,
                  strict=True) -> TransientTrace:
    """Trace ``||C e^{tA} B||`` on a uniform ladder and refine its maximum.

    Raises :class:`NotConverged` if the trace has not settled at the horizon
    (pass ``strict=False`` to get the unconverged trace instead), and
    :class:`Overflow` if an unstable trace leaves the float range.
    """
    norm = NormKind.parse(norm)
    config = config or HorizonConfig()
    if sys.N > DENSE_LIMIT:
        raise ValueError(f"dense oracle is limited to N <= {DENSE_LIMIT}")
    A, B, C = _dense_parts(sys)
    normA = induced_norm(A, norm)
    delta = config.delta or (0.01 / normA if normA > 0 else 0.01)
    if config.horizon is not None:
        delta = min(delta, config.horizon / 1000)
        max_steps = int(math.ceil(config.horizon / delta))
    else:
        max_steps = config.max_steps
    E = matrix_exponential(delta * A)
    # propagate the thinner side
    left = C.shape[0] < B.shape[1]
    Z = C.copy() if left else B.copy()

    values = [induced_norm(C @ B, norm)]
    steps = 0
    converged = False
    while steps < max_steps:
        k = min(config.chunk, max_steps - steps)
        block = np.empty((k,) + (C.shape[0], B.shape[1]), dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(k):
                Z = Z @ E if left else E @ Z
                block[i] = Z @ B if left else C @ Z
        if not np.isfinite(block).all():
            raise Overflow(f"trace overflowed before t = {delta * (steps + k):.6g}")
        values.extend(np.atleast_1d(induced_norm(block, norm)).tolist())
        steps += k
        vals = np.asarray(values)
        peak = vals.max()
        tail = vals[-min(len(vals), 64):]
        if peak > 0 and tail[-1] < peak / 10 and tail[-1] <= tail[0]:
            converged = True
            break
        if peak == 0:
            converged = True
            break
    vals = np.asarray(values)
    times = delta * np.arange(vals.size)
    if not converged and strict:
        raise NotConverged(f"trace still above a tenth of its peak at t = {times[-1]:.6g}")

    k = int(np.argmax(vals))
    t_best, v_best = float(times[k]), float(vals[k])

    def value_at(t):
        if t <= 0:
            return induced_norm(C @ B, norm)
        return induced_norm(C @ matrix_exponential(t * A) @ B, norm)

    lo, hi = max(0.0, t_best - delta), t_best + delta
    while hi - lo > 1e-12 * max(1.0, t_best):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        f1, f2 = value_at(m1), value_at(m2)
        cand_t, cand_v = (m1, f1) if f1 >= f2 else (m2, f2)
        gain = cand_v - v_best
        if cand_v > v_best:
            t_best, v_best = cand_t, cand_v
        if f1 < f2:
            lo = m1
        else:
            hi = m2
        if gain <= config.rel_tol * v_best and hi - lo < delta / 27:
            break
    return TransientTrace(times, vals, v_best, t_best, converged)


def check_laplace_identity(sys, s, horizon=None, tol=1e-12) -> float:
    """Max entry-wise gap between ``G(s)`` and the truncated Laplace integral.

    Integrates ``e^{-st} C e^{tA} B`` over ``[0, horizon]`` with adaptive
    Gauss-Kronrod and compares with the transfer matrix computed by a
    linear solve. The default horizon makes ``e^{-(Re s - a) T}`` about
    ``1e-17`` where ``a`` is the spectral abscissa of ``A``.
    """
    s = complex(s)
    A, B, C = _dense_parts(sys)
    if A.shape[0] > 50:
        raise ValueError("the Laplace check is meant for systems with N <= 50")
    abscissa = float(np.linalg.eigvals(A).real.max())
    margin = s.real - abscissa
    if margin <= 0:
        raise HorizonTooShort("Re s is not right of the spectrum: the integrand does not decay")
    if horizon is None:
        horizon = 40.0 / margin
    bound = math.exp(-s.real * horizon) * induced_norm(C @ matrix_exponential(horizon * A) @ B,
                                                        NormKind.P2)
    tail = bound / margin
    if tail > max(tol, 1e-9) * 1e3:
        raise HorizonTooShort(f"tail estimate {tail:.3g} at horizon {horizon:.3g}")

    def integrand(t):
        return (np.exp(-s * t) * (C @ matrix_exponential(t * A) @ B)).ravel()

    def split(t):
        v = integrand(t)
        return np.concatenate([v.real, v.imag])

    val, _ = scipy.integrate.quad_vec(split, 0.0, horizon, epsabs=tol, epsrel=tol, limit=2000)
    m = val.size // 2
    lhs = (val[:m] + 1j * val[m:]).reshape(C.shape[0], B.shape[1])
    rhs = sys.dense().transfer(s)
    return float(np.abs(lhs - rhs).max())
