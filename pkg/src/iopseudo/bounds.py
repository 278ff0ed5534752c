"""Lower and upper bounds on the transient peak ``sup_t ||C e^{tA} B||``.

* :func:`lower_bound` - the input-output Kreiss constant
  ``sup_{Re s > 0} Re(s) ||G(s)||`` with ``G(s) = C (sI - A)^{-1} B``;
* :func:`upper_bound_contour` - ``L_eps e^{t alpha_eps} / (2 pi eps)`` from a
  closed contour on which ``||G|| <= 1/eps``;
* :func:`upper_bound_semicircle` - imaginary-axis integral up to
  ``R = a ||A||`` plus the closed-form semicircle term
  ``||C|| ||B|| / (2 - 2/a)``;
* :func:`upper_bound_axis` - the full imaginary-axis integral, valid when
  ``||G(s)|| <= M |s|^-beta`` with ``beta > 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .errors import (CurveOpen, DecayTooSlow, InvalidA, IOPseudoError,
                     NotEnclosing, SingularMatrix, Unbounded)
from .linalg import NormKind
from .pseudospectra import LevelCurve, convex_hull, resolvent_norm_at, resolvent_norms
from .quadrature import QuadratureConfig, adaptive_simpson
from .systems import StateSpaceSystem

__all__ = [
    "KreissSearch",
    "KreissResult",
    "ContourBound",
    "SemicircleBound",
    "DecayEstimate",
    "AxisBound",
    "BoundReport",
    "io_poles",
    "kreiss_constant",
    "lower_bound",
    "upper_bound_contour",
    "upper_bound_semicircle",
    "upper_bound_axis",
    "axis_integral",
    "estimate_decay",
    "classic_kreiss_bounds",
    "compute_bounds",
]

UNBOUNDED_LIMIT = 1e300

# frequencies where the directed platoon's response concentrates
_AXIS_BREAKPOINTS = (0.5, 0.9, 1.1, 2.0)


class InconsistentBounds(IOPseudoError):
    """A computed lower bound exceeds a computed upper bound."""


def _scale(sys, norm) -> float:
    return max(float(sys.norm_A(norm)), 1e-12)


def io_poles(sys, norm=NormKind.P2) -> np.ndarray:
    """Eigenvalues of ``A`` that are genuine poles of the transfer matrix.

    An eigenvalue counts as a pole when the resolvent norm grows at least
    five-fold as the probe point moves ten times closer; removable
    (uncontrollable or unobservable) eigenvalues stay bounded.
    """
    lam = sys.eigenvalues()
    scale = _scale(sys, norm)
    out = []
    for z in lam:
        d1 = 1e-5 * (scale + abs(z))
        v1 = resolvent_norm_at(sys, z + d1, norm)
        v2 = resolvent_norm_at(sys, z + d1 / 10, norm)
        if not math.isfinite(v2) or v2 >= 5 * v1:
            out.append(z)
    return np.array(out, dtype=complex)


@dataclass(frozen=True)
class KreissSearch:
    """Search settings for :func:`kreiss_constant`.

    Ranges default to multiples of ``||A||`` in the chosen norm.
    """

    n_omega: int = 400
    n_x: int = 48
    omega_max: float | None = None
    x_min: float | None = None
    x_max: float | None = None
    n_seeds: int = 3
    refine: bool = True


@dataclass(frozen=True)
class KreissResult:
    value: float
    argmax: complex


def kreiss_constant(sys, norm=NormKind.P2, search: KreissSearch | None = None) -> KreissResult:
    """``sup_{Re s > 0} Re(s) ||C (sI - A)^{-1} B||`` and its maximiser.

    The imaginary axis is scanned for the peak of ``||G(iw)||``; from there a
    line search runs into the right half-plane. A coarse log-polar grid adds
    further seeds, and the best few are polished by Nelder-Mead in
    ``(log Re s, Im s)``. The limit ``Re s -> inf`` is covered by a probe at
    ``1e8 ||A||``.
    """
    norm = NormKind.parse(norm)
    search = search or KreissSearch()
    scale = _scale(sys, norm)
    wmax = search.omega_max or 2.0 * scale
    xmin = search.x_min or 1e-6 * scale
    xmax = search.x_max or 1e3 * scale
    real = getattr(sys, "is_real", False)

    if isinstance(sys, StateSpaceSystem):
        poles = io_poles(sys, norm)
        bad = poles[poles.real >= 0]
        if bad.size:
            raise Unbounded(f"transfer matrix has a pole at {bad[0]:.6g} in the closed right half-plane")
        pole_freqs = poles.imag
    else:
        pole_freqs = np.empty(0)

    def norms(s):
        vals = resolvent_norms(sys, s, norm)
        pos = np.real(s) > 0
        if np.any(vals[pos] > UNBOUNDED_LIMIT):
            raise Unbounded("resolvent norm exceeds 1e300 in the right half-plane")
        return vals

    omega = np.concatenate([np.linspace(0.0, wmax, search.n_omega),
                            np.geomspace(1e-6 * scale, wmax, search.n_omega // 2),
                            np.abs(pole_freqs) if real else pole_freqs])
    if not real:
        omega = np.concatenate([omega, -omega])
    omega = np.unique(omega)

    # peak of the frequency response on the imaginary axis
    with np.errstate(invalid="ignore"):
        axis = resolvent_norms(sys, 1j * omega, norm)
    finite = np.isfinite(axis)
    w_peak = float(omega[finite][np.argmax(axis[finite])]) if finite.any() else 0.0

    def f(x, w):
        return x * float(norms(np.array([x + 1j * w]))[0])

    xs = np.geomspace(xmin, xmax, search.n_x)
    line = xs * norms(xs + 1j * w_peak)
    best_x = float(xs[np.argmax(line)])
    candidates = [(float(line.max()), best_x, w_peak)]

    grid_w = omega[:: max(1, omega.size // 100)]
    X, W = np.meshgrid(xs, grid_w, indexing="ij")
    vals = X * norms(X + 1j * W)
    order = np.argsort(vals, axis=None)[::-1][: search.n_seeds]
    for idx in order:
        i, j = np.unravel_index(idx, vals.shape)
        candidates.append((float(vals[i, j]), float(X[i, j]), float(W[i, j])))

    far = 1e8 * scale
    candidates.append((f(far, 0.0), far, 0.0))

    if search.refine:
        def objective(p):
            x = math.exp(p[0])
            v = f(x, p[1])
            return -math.log(v) if v > 0 else math.inf

        polished = []
        for v0, x0, w0 in candidates[:-1]:
            if v0 <= 0:
                continue
            res = scipy.optimize.minimize(
                objective, [math.log(x0), w0], method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 2000})
            x1, w1 = math.exp(res.x[0]), float(res.x[1])
            if real:
                w1 = abs(w1)
            polished.append((f(x1, w1), x1, w1))
        candidates.extend(polished)

    value, x, w = max(candidates, key=lambda c: c[0])
    return KreissResult(float(value), complex(x, w))


def lower_bound(sys, norm=NormKind.P2, search: KreissSearch | None = None) -> KreissResult:
    """Transient lower bound; identical to :func:`kreiss_constant`."""
    return kreiss_constant(sys, norm, search)


@dataclass(frozen=True)
class ContourBound:
    epsilon: float
    L_epsilon: float
    alpha_epsilon: float
    value: float
    uniform: bool

    def at(self, t):
        """The bound as a function of time."""
        return self.L_epsilon * np.exp(np.asarray(t) * self.alpha_epsilon) / (2 * np.pi * self.epsilon)


def upper_bound_contour(sys, curves, hull=False, check_enclosure=True) -> ContourBound:
    """Contour-integral bound from closed curves around the spectrum.

    ``curves`` is a :class:`LevelCurve` or a list of them (all at the same
    epsilon, e.g. the components of one level set). The reported ``value``
    is the bound at ``t = 0``; it bounds the whole transient only when the
    rightmost point is in the closed left half-plane (``uniform``).
    """
    if isinstance(curves, LevelCurve):
        curves = [curves]
    curves = list(curves)
    if not curves:
        raise ValueError("no curves given")
    for c in curves:
        if not c.closed:
            raise CurveOpen("contour bound needs closed curves")
    eps = curves[0].epsilon
    if any(abs(c.epsilon - eps) > 1e-12 * eps for c in curves):
        raise ValueError("all curves must share one epsilon")
    if hull:
        pts = np.concatenate([c.vertices for c in curves])
        curves = [convex_hull(LevelCurve(eps, pts, True))]
    if check_enclosure and sys.N <= 4000:
        poles = io_poles(sys)
        inside = np.zeros(poles.size, dtype=bool)
        for c in curves:
            inside |= c.contains(poles)
        if not inside.all():
            raise NotEnclosing(f"pole {poles[~inside][0]:.6g} lies outside the contour")
    L = sum(c.arc_length for c in curves)
    alpha = max(c.max_real_part for c in curves)
    value = L / (2 * math.pi * eps)
    return ContourBound(eps, L, alpha, value, alpha <= 0)


def axis_integral(sys, R, norm=NormKind.P2, quad: QuadratureConfig | None = None,
                  start=0.0) -> float:
    """``(1/2pi) * integral of ||G(iw)||`` over ``start <= |w| <= R``.

    For real systems the integrand is even and only ``[0, R]`` is
    integrated. The first panel uses ``w = u^2`` so the integrand is never
    evaluated at ``w = 0``, where Laplacian networks are singular.
    """
    quad = quad or QuadratureConfig()
    norm = NormKind.parse(norm)
    real = getattr(sys, "is_real", False)

    def g(w):
        vals = resolvent_norms(sys, 1j * w, norm)
        if not real:
            vals = vals + resolvent_norms(sys, -1j * w, norm)
        return vals

    if R <= start:
        return 0.0
    scale = _scale(sys, norm)
    knots = [b for b in _AXIS_BREAKPOINTS]
    k = scale
    while k < R:
        knots.append(k)
        k *= 2
    knots = sorted(x for x in set(knots) if start < x < R)
    total = 0.0
    lo = start
    if start == 0.0:
        first = knots[0] if knots else R
        ufirst = math.sqrt(first)

        def g_sub(u):
            out = np.zeros_like(u)
            nz = u > 0
            out[nz] = 2 * u[nz] * g(u[nz] ** 2)
            return out

        total += adaptive_simpson(g_sub, 0.0, ufirst, quad).value
        lo = first
        knots = knots[1:]
    if lo < R:
        total += adaptive_simpson(g, lo, R, quad, breakpoints=knots).value
    return total / (2 * math.pi) * (2 if real else 1)


@dataclass(frozen=True)
class SemicircleBound:
    a: float
    R: float
    axis_integral: float
    semicircle_term: float
    value: float


def upper_bound_semicircle(sys, a=3.0, quad: QuadratureConfig | None = None,
                           norm=NormKind.P2, a_range=(1.05, 20.0), n_grid=32) -> SemicircleBound:
    """Axis integral up to ``R = a ||A||`` plus ``||C|| ||B|| / (2 - 2/a)``.

    ``a="opt"`` minimises over ``a_range``: 32 log-spaced values first (the
    axis integral is accumulated panel by panel, so the grid costs one
    integration), then golden-section search between the neighbours of the
    best grid point.
    """
    norm = NormKind.parse(norm)
    quad = quad or QuadratureConfig()
    normA = float(sys.norm_A(norm))
    CB = float(sys.norm_C(norm)) * float(sys.norm_B(norm))

    def semicircle(av):
        return CB / (2 - 2 / av)

    if a != "opt":
        a = float(a)
        if not a > 1:
            raise InvalidA(f"a must exceed 1, got {a}")
        R = a * normA
        J = axis_integral(sys, R, norm, quad)
        return SemicircleBound(a, R, J, semicircle(a), J + semicircle(a))

    grid = np.geomspace(a_range[0], a_range[1], n_grid)
    Rs = grid * normA
    cum = np.cumsum([axis_integral(sys, Rs[0], norm, quad)]
                    + [_segment(sys, Rs[k], Rs[k + 1], norm, quad) for k in range(n_grid - 1)])
    totals = cum + semicircle(grid)
    k = int(np.argmin(totals))
    best = (float(totals[k]), float(grid[k]), float(cum[k]))
    lo_k = max(k - 1, 0)
    hi_k = min(k + 1, n_grid - 1)
    base_a, base_J = float(grid[lo_k]), float(cum[lo_k])

    def total(av):
        return base_J + _segment(sys, base_a * normA, av * normA, norm, quad) + semicircle(av)

    lo, hi = float(grid[lo_k]), float(grid[hi_k])
    invphi = (math.sqrt(5) - 1) / 2
    c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
    fc, fd = total(c), total(d)
    while hi - lo > 1e-4 * hi:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = total(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = total(d)
    for av, fv in ((c, fc), (d, fd)):
        if fv < best[0]:
            best = (fv, av, fv - semicircle(av))
    value, av, J = best
    return SemicircleBound(av, av * normA, J, semicircle(av), value)


def _segment(sys, R0, R1, norm, quad):
    if R1 <= R0:
        return -_segment(sys, R1, R0, norm, quad) if R1 < R0 else 0.0
    return axis_integral(sys, R1, norm, quad, start=R0)


@dataclass(frozen=True)
class DecayEstimate:
    M: float
    beta: float
    K: float
    slope: float


def estimate_decay(sys, probe_radii=None, norm=NormKind.P2) -> DecayEstimate:
    """Fit ``||G(iw)|| ~ M w^-beta`` on a geometric ladder of frequencies.

    ``beta`` is the fitted decay rounded down to an integer (relative
    degree) after a 0.1 allowance for the pre-asymptotic bend; ``M`` is the
    largest ``||G(iw)|| w^beta`` over the probes with a 10% margin, and ``K``
    the smallest probe.
    """
    norm = NormKind.parse(norm)
    if probe_radii is None:
        probe_radii = 2 * _scale(sys, norm) * 2.0 ** np.arange(7)
    w = np.asarray(probe_radii, dtype=float)
    vals = resolvent_norms(sys, 1j * w, norm)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        return DecayEstimate(math.inf, 0.0, float(w.min()), 0.0)
    slope = float(np.polyfit(np.log(w), np.log(vals), 1)[0])
    beta = float(max(0, math.floor(-slope + 0.1)))
    M = 1.1 * float(np.max(vals * w**beta))
    return DecayEstimate(M, beta, float(w.min()), slope)


@dataclass(frozen=True)
class AxisBound:
    M: float
    beta: float
    K: float
    omega_cut: float
    axis_integral: float
    tail: float
    value: float


def upper_bound_axis(sys, decay: DecayEstimate | None = None, quad: QuadratureConfig | None = None,
                     norm=NormKind.P2) -> AxisBound:
    """``(1/2pi) * integral over the whole imaginary axis of ||G(iw)||``.

    Integrates on ``[-Omega, Omega]`` and adds the analytic tail
    ``(1/pi) M Omega^(1-beta) / (beta - 1)``, with ``Omega >= K`` large
    enough that the tail is below ``quad.abs_tol``.
    """
    norm = NormKind.parse(norm)
    quad = quad or QuadratureConfig()
    decay = decay or estimate_decay(sys, norm=norm)
    if not decay.beta > 1:
        raise DecayTooSlow(f"decay exponent {decay.beta:g} <= 1; use the semicircle bound")
    b1 = decay.beta - 1
    omega = max(decay.K, (decay.M / (math.pi * b1 * quad.abs_tol)) ** (1 / b1))
    tail = decay.M * omega ** (-b1) / (math.pi * b1)
    J = axis_integral(sys, omega, norm, quad)
    return AxisBound(decay.M, decay.beta, decay.K, omega, J, tail, J + tail)


def classic_kreiss_bounds(A, norm=NormKind.P2, search: KreissSearch | None = None):
    """``(K(A), e N K(A))`` bracketing ``sup_t ||e^{tA}||``."""
    A = np.asarray(A)
    N = A.shape[0]
    sys = StateSpaceSystem(A, np.eye(N), np.eye(N))
    K = kreiss_constant(sys, norm, search).value
    return K, math.e * N * K


@dataclass
class BoundReport:
    """Lower bound and whichever upper bounds were computed."""

    lower: KreissResult
    norm: NormKind
    upper1: ContourBound | None = None
    upper2: SemicircleBound | None = None
    upper3: AxisBound | None = None
    extras: dict = field(default_factory=dict)

    def uppers(self) -> dict:
        out = {}
        if self.upper1 is not None and self.upper1.uniform:
            out["contour"] = self.upper1.value
        if self.upper2 is not None:
            out["semicircle"] = self.upper2.value
        if self.upper3 is not None:
            out["axis"] = self.upper3.value
        return out

    @property
    def best_upper(self) -> float:
        vals = self.uppers()
        return min(vals.values()) if vals else math.inf

    def check(self):
        for name, v in self.uppers().items():
            if self.lower.value > v:
                raise InconsistentBounds(f"lower bound {self.lower.value:.6g} exceeds {name} bound {v:.6g}")
        return self

    def items(self) -> list:
        """Flat ``(key, value)`` pairs in a fixed order."""
        out = [("norm", self.norm.value), ("lower", self.lower.value),
               ("lower_argmax_re", self.lower.argmax.real),
               ("lower_argmax_im", self.lower.argmax.imag)]
        u1, u2, u3 = self.upper1, self.upper2, self.upper3
        out += [("contour_epsilon", u1.epsilon if u1 else None),
                ("contour_L_epsilon", u1.L_epsilon if u1 else None),
                ("contour_alpha_epsilon", u1.alpha_epsilon if u1 else None),
                ("contour_uniform", u1.uniform if u1 else None),
                ("contour_value", u1.value if u1 else None),
                ("semicircle_a", u2.a if u2 else None),
                ("semicircle_R", u2.R if u2 else None),
                ("semicircle_axis_integral", u2.axis_integral if u2 else None),
                ("semicircle_term", u2.semicircle_term if u2 else None),
                ("semicircle_value", u2.value if u2 else None),
                ("axis_M", u3.M if u3 else None),
                ("axis_beta", u3.beta if u3 else None),
                ("axis_K", u3.K if u3 else None),
                ("axis_omega_cut", u3.omega_cut if u3 else None),
                ("axis_tail", u3.tail if u3 else None),
                ("axis_value", u3.value if u3 else None),
                ("best_upper", self.best_upper if self.uppers() else None)]
        return out


def compute_bounds(sys, norm=NormKind.PINF, eps_ladder: Sequence[float] | None = None,
                   a="opt", quad: QuadratureConfig | None = None,
                   search: KreissSearch | None = None, grid_spec=None,
                   both_axis_bounds=False) -> BoundReport:
    """Lower bound plus the applicable upper bounds.

    The axis bound is used when the fitted decay exponent exceeds one,
    otherwise the semicircle bound (``both_axis_bounds`` computes both when
    possible). With an ``eps_ladder`` the contour bound is evaluated on the
    level sets of ``grid_spec`` and the smallest uniform value is kept.
    """
    from .pseudospectra import GridSpec, evaluate_grid, extract_level_curves
    from .errors import EmptyLevel

    norm = NormKind.parse(norm)
    quad = quad or QuadratureConfig()
    report = BoundReport(lower_bound(sys, norm, search), norm)
    decay = estimate_decay(sys, norm=norm)
    report.extras["decay_beta"] = decay.beta
    if decay.beta > 1:
        report.upper3 = upper_bound_axis(sys, decay, quad, norm)
    if decay.beta <= 1 or both_axis_bounds:
        report.upper2 = upper_bound_semicircle(sys, a, quad, norm)
    if eps_ladder:
        spec = grid_spec or GridSpec(norm=norm)
        if spec.norm is not norm:
            spec = GridSpec(spec.re_range, spec.im_range, spec.resolution, norm)
        grid = evaluate_grid(sys, spec)
        best = None
        for eps in eps_ladder:
            try:
                curves = extract_level_curves(grid, eps)
                cb = upper_bound_contour(sys, curves)
            except (EmptyLevel, CurveOpen, NotEnclosing):
                continue
            if best is None or (cb.uniform, -cb.value) > (best.uniform, -best.value):
                best = cb
        report.upper1 = best
    return report.check()
