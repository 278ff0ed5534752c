"""Input-output pseudospectra.

The pseudospectrum at level eps is the set where ``||C (sI - A)^{-1} B||``
exceeds ``1/eps``. Grids store ``log10`` of that norm so that the
platoon values (up to 1e34 and beyond) interpolate safely; points on the
spectrum are stored as ``+inf``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CurveOpen, DegenerateCurve, EmptyLevel, NotBracketed, SingularMatrix
from .linalg import NormKind, induced_norm

__all__ = [
    "GridSpec",
    "ResolventGrid",
    "LevelCurve",
    "AbscissaSearch",
    "resolvent_norm_at",
    "resolvent_norms",
    "evaluate_grid",
    "extract_level_curves",
    "pseudo_abscissa",
    "convex_hull",
    "polyline_length",
    "circle_contour",
]


def resolvent_norm_at(sys, s, norm=NormKind.P2) -> float:
    """``||C (sI - A)^{-1} B||``, or ``math.inf`` when ``s`` hits the spectrum."""
    try:
        G = sys.transfer(complex(s))
    except SingularMatrix:
        return math.inf
    return induced_norm(G, norm)


def resolvent_norms(sys, s, norm=NormKind.P2, workers=1) -> np.ndarray:
    """Vectorised :func:`resolvent_norm_at` over an array of points."""
    s = np.asarray(s, dtype=complex)
    flat = s.ravel()
    norm = NormKind.parse(norm)

    def block(chunk):
        if hasattr(sys, "transfer_norms"):
            return sys.transfer_norms(chunk, norm)
        G, singular = sys.transfer_batch(chunk)
        out = np.full(chunk.size, math.inf)
        if (~singular).any():
            out[~singular] = induced_norm(G[~singular], norm)
        return out

    if workers > 1 and flat.size > 1:
        chunks = np.array_split(flat, min(flat.size, 4 * workers))
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, chunks))
        out = np.concatenate(parts)
    else:
        out = block(flat) if flat.size else np.empty(0)
    return out.reshape(s.shape)


@dataclass(frozen=True)
class GridSpec:
    re_range: tuple = (-2.5, 0.5)
    im_range: tuple = (-3.0, 3.0)
    resolution: tuple = (600, 600)
    norm: NormKind = NormKind.P2

    def __post_init__(self):
        if not self.re_range[0] < self.re_range[1] or not self.im_range[0] < self.im_range[1]:
            raise ValueError("grid ranges must be nonempty")
        if min(self.resolution) < 2:
            raise ValueError("grid resolution must be at least 2 in each direction")
        object.__setattr__(self, "norm", NormKind.parse(self.norm))

    @property
    def re(self) -> np.ndarray:
        return np.linspace(*self.re_range, self.resolution[0])

    @property
    def im(self) -> np.ndarray:
        return np.linspace(*self.im_range, self.resolution[1])

    def points(self) -> np.ndarray:
        """Complex grid, ``points()[i, j] = re[i] + 1j * im[j]``."""
        return self.re[:, None] + 1j * self.im[None, :]


@dataclass(frozen=True)
class ResolventGrid:
    spec: GridSpec
    log10_values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.log10_values, dtype=float)
        if vals.shape != tuple(self.spec.resolution):
            raise ValueError(f"values shape {vals.shape} != resolution {self.spec.resolution}")
        vals.setflags(write=False)
        object.__setattr__(self, "log10_values", vals)

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return 10.0 ** self.log10_values

    @property
    def infinite(self) -> np.ndarray:
        return np.isposinf(self.log10_values)


def evaluate_grid(sys, spec: GridSpec, workers=1) -> ResolventGrid:
    """Resolvent norm on every grid point (row ``i`` is ``re[i]``)."""
    pts = spec.points()
    if getattr(sys, "is_real", False) and spec.im_range[0] < 0 < spec.im_range[1]:
        # conjugate symmetry: evaluate each mirrored pair once
        im = spec.im
        key = np.round(np.abs(im), 12)
        uniq, inverse = np.unique(key, return_inverse=True)
        half = spec.re[:, None] + 1j * uniq[None, :]
        vals = resolvent_norms(sys, half, spec.norm, workers)[:, inverse]
        exact = np.abs(np.abs(im) - uniq[inverse]) == 0
        if not exact.all():
            vals[:, ~exact] = resolvent_norms(sys, pts[:, ~exact], spec.norm, workers)
    else:
        vals = resolvent_norms(sys, pts, spec.norm, workers)
    with np.errstate(divide="ignore"):
        logv = np.log10(vals)
    return ResolventGrid(spec, logv)


def polyline_length(vertices, closed) -> float:
    v = np.asarray(vertices, dtype=complex)
    if v.size < 2:
        return 0.0
    total = float(np.abs(np.diff(v)).sum())
    if closed:
        total += float(abs(v[0] - v[-1]))
    return total


@dataclass(frozen=True)
class LevelCurve:
    """Polyline approximating part of the boundary of a pseudospectrum.

    Closed curves are stored without repeating the first vertex and are
    oriented counter-clockwise.
    """

    epsilon: float
    vertices: np.ndarray
    closed: bool
    arc_length: float = field(init=False)
    max_real_part: float = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex).ravel()
        if self.closed and v.size >= 2 and v[0] == v[-1]:
            v = v[:-1]
        if self.closed and v.size < 3:
            raise DegenerateCurve("closed curves need at least three vertices")
        if self.closed and _signed_area(v) < 0:
            v = v[::-1]
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "arc_length", polyline_length(v, self.closed))
        object.__setattr__(self, "max_real_part", float(v.real.max()) if v.size else -math.inf)

    @property
    def centroid(self) -> complex:
        """Centroid of the enclosed polygon (closed) or of the vertices."""
        v = self.vertices
        if not self.closed:
            return complex(v.mean())
        x, y = v.real, v.imag
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = cross.sum() / 2
        if area == 0:
            return complex(v.mean())
        cx = ((x + xn) * cross).sum() / (6 * area)
        cy = ((y + yn) * cross).sum() / (6 * area)
        return complex(cx, cy)

    def contains(self, z) -> np.ndarray:
        """Point-in-polygon test (even-odd rule) for closed curves."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        v = self.vertices
        x, y = v.real, v.imag
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        px, py = z.real[:, None], z.imag[:, None]
        straddle = (y > py) != (yn > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x + (py - y) * (xn - x) / (yn - y)
        inside = (straddle & (px < xcross)).sum(axis=1) % 2 == 1
        return inside


def _signed_area(v):
    x, y = v.real, v.imag
    return 0.5 * float((x * np.roll(y, -1) - np.roll(x, -1) * y).sum())


def circle_contour(sys, center, radius, norm=NormKind.P2, n=4096) -> LevelCurve:
    """Sampled circle carrying ``epsilon = 1 / max ||G||`` over its vertices.

    Any closed contour enclosing the spectrum works in the contour bound as
    long as the resolvent norm on it stays below ``1/epsilon``; this builds
    such a contour from a circle instead of a level set.
    """
    theta = 2 * np.pi * np.arange(n) / n
    v = center + radius * np.exp(1j * theta)
    vals = resolvent_norms(sys, v, norm)
    peak = float(vals.max())
    eps = 0.0 if not math.isfinite(peak) else 1.0 / peak
    if eps <= 0:
        raise SingularMatrix("circle passes through the spectrum")
    return LevelCurve(eps, v, True)


# corners of cell (i, j): 0=(i,j), 1=(i+1,j), 2=(i+1,j+1), 3=(i,j+1)
# edges: 0 = c0-c1, 1 = c1-c2, 2 = c2-c3, 3 = c3-c0
_EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))
_SEGMENTS = {}
for _case in range(16):
    _up = [(_case >> k) & 1 for k in range(4)]
    _edges = [e for e, (a, b) in enumerate(_EDGE_CORNERS) if _up[a] != _up[b]]
    if len(_edges) == 2:
        _SEGMENTS[_case] = [tuple(_edges)]
    elif len(_edges) == 4:
        _SEGMENTS[_case] = None  # saddle, resolved per cell


def _edge_key(i, j, e):
    if e == 0:
        return ("h", i, j)
    if e == 1:
        return ("v", i + 1, j)
    if e == 2:
        return ("h", i, j + 1)
    return ("v", i, j)


def extract_level_curves(grid: ResolventGrid, epsilon: float) -> list:
    """Marching-squares isolines of ``||G|| = 1/epsilon``.

    Crossings are linearly interpolated in ``log10`` along cell edges.
    Saddle cells are split by the cell-centre average: if the centre is
    above the level the two high corners are joined. Cells touching an
    infinite value are skipped, so curves running into them (or off the
    grid) come back open.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    F = grid.log10_values
    level = -math.log10(epsilon)
    re, im = grid.spec.re, grid.spec.im
    up = F > level
    finite = np.isfinite(F)
    c = [up[:-1, :-1], up[1:, :-1], up[1:, 1:], up[:-1, 1:]]
    case = c[0] * 1 + c[1] * 2 + c[2] * 4 + c[3] * 8
    ok = finite[:-1, :-1] & finite[1:, :-1] & finite[1:, 1:] & finite[:-1, 1:]
    active = ok & (case != 0) & (case != 15)
    if not active.any():
        raise EmptyLevel(f"no grid cell brackets the level 1/eps = {1 / epsilon:.6g}")

    def corner(i, j, k):
        di, dj = ((0, 0), (1, 0), (1, 1), (0, 1))[k]
        return i + di, j + dj

    points = {}

    def point(i, j, e):
        key = _edge_key(i, j, e)
        if key not in points:
            a, b = _EDGE_CORNERS[e]
            ia, ja = corner(i, j, a)
            ib, jb = corner(i, j, b)
            fa, fb = F[ia, ja], F[ib, jb]
            t = (level - fa) / (fb - fa)
            za = re[ia] + 1j * im[ja]
            zb = re[ib] + 1j * im[jb]
            points[key] = za + t * (zb - za)
        return key

    segments = []
    for i, j in zip(*np.nonzero(active)):
        cs = int(case[i, j])
        pairs = _SEGMENTS[cs]
        if pairs is None:
            centre = 0.25 * (F[i, j] + F[i + 1, j] + F[i + 1, j + 1] + F[i, j + 1])
            high_02 = cs == 5  # corners 0 and 2 above
            if (centre > level) == high_02:
                pairs = [(0, 1), (2, 3)]  # isolate corners 1 and 3
            else:
                pairs = [(3, 0), (1, 2)]  # isolate corners 0 and 2
        for e1, e2 in pairs:
            segments.append((point(i, j, e1), point(i, j, e2)))

    return [LevelCurve(epsilon, np.array([points[k] for k in chain]), closed)
            for chain, closed in _join(segments)]


def _join(segments):
    """Chain segments sharing edge keys into polylines."""
    incident = {}
    for idx, (a, b) in enumerate(segments):
        incident.setdefault(a, []).append(idx)
        incident.setdefault(b, []).append(idx)
    used = np.zeros(len(segments), dtype=bool)
    chains = []

    def walk(start_key, seg):
        chain = []
        key = start_key
        while seg is not None:
            used[seg] = True
            a, b = segments[seg]
            nxt = b if a == key else a
            chain.append(nxt)
            key = nxt
            seg = next((s for s in incident[key] if not used[s]), None)
        return chain

    # open chains start at keys with a single incident segment
    for key, segs in incident.items():
        if len(segs) == 1 and not used[segs[0]]:
            chains.append(([key] + walk(key, segs[0]), False))
    for idx in range(len(segments)):
        if not used[idx]:
            start = segments[idx][0]
            chain = [start] + walk(start, idx)
            closed = chain[-1] == chain[0]
            if closed:
                chain = chain[:-1]
            chains.append((chain, closed and len(chain) >= 3))
    return chains


@dataclass(frozen=True)
class AbscissaSearch:
    """Window and tolerances for :func:`pseudo_abscissa`.

    ``None`` ranges default to ``[-2 ||A||, 2 ||A||]``.
    """

    re_range: tuple | None = None
    im_range: tuple | None = None
    n_re: int = 401
    n_im: int = 801
    tol: float = 1e-6
    norm: NormKind = NormKind.P2


def pseudo_abscissa(sys, epsilon, config: AbscissaSearch | None = None) -> float:
    """Largest real part of the input-output eps-pseudospectrum.

    ``h(x) = max_w log10 ||G(x + iw)||`` is sampled over the imaginary
    window, scanned on a coarse grid in ``x`` (plus the real parts of the
    eigenvalues of dense systems), and the rightmost crossing of
    ``log10(1/eps)`` is refined by bisection.
    """
    config = config or AbscissaSearch()
    norm = NormKind.parse(config.norm)
    scale = max(sys.norm_A(norm), 1e-12)
    re_lo, re_hi = config.re_range or (-2 * scale, 2 * scale)
    im_lo, im_hi = config.im_range or (-2 * scale, 2 * scale)
    level = -math.log10(epsilon)
    omegas = np.linspace(im_lo, im_hi, config.n_im)
    poles = np.empty(0)
    if hasattr(sys, "A"):
        poles = sys.eigenvalues()
        inwin = (poles.imag >= im_lo) & (poles.imag <= im_hi)
        poles = poles[inwin]
        omegas = np.union1d(omegas, poles.imag)
    if getattr(sys, "is_real", False):
        # ||G(x + iw)|| = ||G(x - iw)|| for real data
        omegas = np.unique(np.abs(omegas))

    def h(x):
        vals = resolvent_norms(sys, x + 1j * omegas, norm)
        with np.errstate(divide="ignore"):
            return float(np.log10(vals.max()))

    xs = np.linspace(re_lo, re_hi, config.n_re)
    if h(re_hi) > level:
        raise NotBracketed("level set extends past the right end of the window")
    candidates = np.union1d(xs, poles.real[(poles.real >= re_lo) & (poles.real <= re_hi)])
    above = None
    for x in candidates[::-1]:
        if h(x) > level:
            above = x
            break
    if above is None:
        raise NotBracketed("the level is not reached inside the window")
    below = xs[xs > above].min()
    while below - above > config.tol:
        mid = 0.5 * (above + below)
        if h(mid) > level:
            above = mid
        else:
            below = mid
    return 0.5 * (above + below)


def convex_hull(curve: LevelCurve) -> LevelCurve:
    """Counter-clockwise convex hull of a closed curve (monotone chain)."""
    if not curve.closed:
        raise CurveOpen("convex hull needs a closed curve")
    pts = sorted(set((float(z.real), float(z.imag)) for z in curve.vertices))
    if len(pts) < 3:
        raise DegenerateCurve("fewer than three distinct vertices")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateCurve("vertices are collinear")
    return LevelCurve(curve.epsilon, np.array([complex(x, y) for x, y in hull]), True)
