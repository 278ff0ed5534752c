"""Plain-text artifacts: CSV tables, key=value reports and minimal SVG.

Floats are written with 17 significant digits so that a value read back is
bit-identical; files use ``,`` as delimiter and LF line endings.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .pseudospectra import GridSpec, LevelCurve, ResolventGrid

__all__ = [
    "fmt",
    "write_grid_csv",
    "read_grid_csv",
    "write_curves_csv",
    "read_curves_csv",
    "write_svg",
    "write_trace_csv",
    "write_bode_csv",
    "format_report",
    "write_report",
    "write_report_rows",
]


def fmt(x) -> str:
    """17-significant-digit text for floats; ``""`` for ``None``."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _writer(fh):
    return csv.writer(fh, delimiter=",", lineterminator="\n")


def _open(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


def write_grid_csv(grid: ResolventGrid, path) -> None:
    """One row per grid point, real part varying slowest."""
    re, im = grid.spec.re, grid.spec.im
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(["re", "im", "value_log10"])
        for i, x in enumerate(re):
            rx = fmt(x)
            for j, y in enumerate(im):
                w.writerow([rx, fmt(y), fmt(grid.log10_values[i, j])])


def read_grid_csv(path, norm="2") -> ResolventGrid:
    """Inverse of :func:`write_grid_csv` for rectangular grids."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    re = np.unique(data[:, 0])
    im = np.unique(data[:, 1])
    if re.size * im.size != data.shape[0]:
        raise ValueError("grid CSV is not a full rectangular grid")
    spec = GridSpec((re[0], re[-1]), (im[0], im[-1]), (re.size, im.size), norm)
    vals = data[:, 2].reshape(re.size, im.size)
    return ResolventGrid(spec, vals)


def write_curves_csv(curves_by_eps, path) -> None:
    """``curves_by_eps`` maps epsilon to a list of :class:`LevelCurve`."""
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(["epsilon", "curve_id", "vertex_index", "re", "im"])
        for eps in sorted(curves_by_eps):
            for cid, curve in enumerate(curves_by_eps[eps]):
                for k, v in enumerate(curve.vertices):
                    w.writerow([fmt(eps), cid, k, fmt(v.real), fmt(v.imag)])


def read_curves_csv(path) -> dict:
    """Vertices grouped as ``{epsilon: [array, ...]}`` in curve order."""
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.DictReader(fh)
        for r in rows:
            eps = float(r["epsilon"])
            cid = int(r["curve_id"])
            group = out.setdefault(eps, [])
            while len(group) <= cid:
                group.append([])
            group[cid].append(complex(float(r["re"]), float(r["im"])))
    return {e: [np.array(c) for c in cs] for e, cs in out.items()}


def write_svg(path, curves: Iterable[LevelCurve], eigenvalues=(), window=None,
              size=(600, 600)) -> None:
    """Level curves as polylines and eigenvalues as dots.

    ``window`` is ``(re0, re1, im0, im1)``; by default it is the bounding
    box of everything drawn, padded by 5%.
    """
    curves = list(curves)
    eig = np.asarray(list(eigenvalues), dtype=complex).ravel()
    if window is None:
        pts = np.concatenate([c.vertices for c in curves] + [eig]) if curves or eig.size else np.zeros(1)
        re0, re1 = pts.real.min(), pts.real.max()
        im0, im1 = pts.imag.min(), pts.imag.max()
        pad_x = 0.05 * max(re1 - re0, 1e-12)
        pad_y = 0.05 * max(im1 - im0, 1e-12)
        window = (re0 - pad_x, re1 + pad_x, im0 - pad_y, im1 + pad_y)
    re0, re1, im0, im1 = map(float, window)
    W, H = size

    def xy(z):
        return (W * (z.real - re0) / (re1 - re0), H * (im1 - z.imag) / (im1 - im0))

    eps_values = sorted({c.epsilon for c in curves})
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>']
    # imaginary axis, if visible
    if re0 < 0 < re1:
        x0, _ = xy(complex(0, 0))
        lines.append(f'<line x1="{x0:.3f}" y1="0" x2="{x0:.3f}" y2="{H}" '
                     'stroke="#999" stroke-dasharray="4 4"/>')
    for c in curves:
        k = eps_values.index(c.epsilon)
        shade = int(200 * k / max(1, len(eps_values) - 1))
        pts = " ".join("{:.3f},{:.3f}".format(*xy(v)) for v in c.vertices)
        tag = "polygon" if c.closed else "polyline"
        lines.append(f'<{tag} points="{pts}" fill="none" stroke="rgb({shade},{shade},{255 - shade})" '
                     f'stroke-width="1"><title>epsilon={fmt(c.epsilon)}</title></{tag}>')
    for z in eig:
        x, y = xy(z)
        if 0 <= x <= W and 0 <= y <= H:
            lines.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="2.5" fill="black"/>')
    lines.append("</svg>")
    with _open(path) as fh:
        fh.write("\n".join(lines) + "\n")


def write_trace_csv(trace, path) -> None:
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(["t", "value"])
        for t, v in zip(trace.times, trace.values):
            w.writerow([fmt(t), fmt(v)])


def write_bode_csv(omega, amplitude, path) -> None:
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(["omega", "amplitude"])
        for om, amp in zip(omega, amplitude):
            w.writerow([fmt(om), fmt(amp)])


def format_report(report, header: dict | None = None) -> str:
    """``key=value`` lines; ``header`` entries (system, scenario) come first."""
    pairs = list((header or {}).items()) + report.items()
    pairs += sorted(report.extras.items())
    return "".join(f"{k}={fmt(v)}\n" for k, v in pairs)


def write_report(report, path, header: dict | None = None) -> None:
    with _open(path) as fh:
        fh.write(format_report(report, header))


def write_report_rows(rows, path) -> None:
    """CSV with one row per ``(header, report)`` pair; columns from the first."""
    rows = list(rows)
    if not rows:
        raise ValueError("no reports to write")
    keys = list(rows[0][0]) + [k for k, _ in rows[0][1].items()]
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(keys)
        for header, report in rows:
            vals = dict(header)
            vals.update(report.items())
            w.writerow([fmt(vals.get(k)) for k in keys])
