"""Minimal deterministic SVG output for Cerf diagrams, heatmaps and tracks."""
from __future__ import annotations

import numpy as np

from . import __version__

INDEX_COLORS = ["#1f4e9c", "#2a9d3a", "#c0392b", "#7d3c98"]
DEGENERATE = "#888888"

W, H, PAD = 800, 500, 50


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _doc(body: list, width=W, height=H) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n<!-- plcerf {__version__} -->\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')
    return head + "\n".join(body) + "\n</svg>\n"


class _Frame:
    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1 = x0, x1 if x1 > x0 else x0 + 1
        self.y0, self.y1 = y0, y1 if y1 > y0 else y0 + 1

    def x(self, v):
        return PAD + (np.asarray(v) - self.x0) / (self.x1 - self.x0) * (W - 2 * PAD)

    def y(self, v):
        return H - PAD - (np.asarray(v) - self.y0) / (self.y1 - self.y0) * (H - 2 * PAD)

    def axes(self, xlabel, ylabel) -> list:
        return [
            f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
            f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
            f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle" font-size="14">{xlabel}</text>',
            f'<text x="14" y="{H / 2}" font-size="14" transform="rotate(-90 14 {H / 2})" '
            f'text-anchor="middle">{ylabel}</text>',
            f'<text x="{PAD}" y="{H - PAD + 16}" font-size="11">{self.x0:.4g}</text>',
            f'<text x="{W - PAD}" y="{H - PAD + 16}" font-size="11" text-anchor="end">{self.x1:.4g}</text>',
            f'<text x="{PAD - 4}" y="{H - PAD}" font-size="11" text-anchor="end">{self.y0:.4g}</text>',
            f'<text x="{PAD - 4}" y="{PAD + 4}" font-size="11" text-anchor="end">{self.y1:.4g}</text>',
        ]


def cerf_svg(diagram, arcs=None) -> str:
    """Arcs as polylines (t on x, value on y) colored by index; births and deaths marked."""
    from .cerf import CrossingKind

    f = diagram.field
    sel = np.arange(diagram.n_arcs) if arcs is None else np.asarray(arcs)
    lo, hi = float(f.values.min()), float(f.values.max())
    fr = _Frame(f.times[0], f.times[-1], lo, hi)
    body = fr.axes("t", "f_t(v)")
    idx = diagram.arc_index
    for a in sel.tolist():
        t1, t2, v = float(diagram.arc_t1[a]), float(diagram.arc_t2[a]), int(diagram.arc_v[a])
        inner = f.times[(f.times > t1) & (f.times < t2)]
        ts = np.concatenate([[t1], inner, [t2]])
        ys = f.value(np.full(len(ts), v), ts)
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(fr.x(ts), fr.y(ys)))
        color = INDEX_COLORS[idx[a] % 4] if idx[a] >= 0 else DEGENERATE
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>')
    touched = set(diagram.arc_open[sel].tolist()) | set(diagram.arc_close[sel].tolist())
    ev = diagram.events
    for kind, mark in ((CrossingKind.Birth, "birth"), (CrossingKind.Death, "death")):
        for i in np.nonzero(diagram.kinds == kind)[0].tolist():
            if arcs is not None and i not in touched:
                continue
            x = fr.x(ev.t[i])
            y = fr.y(f.value(int(ev.u[i]), ev.t[i]))
            if mark == "birth":
                body.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="none" '
                            f'stroke="black" class="birth"/>')
            else:
                body.append(f'<path d="M{_fmt(x - 4)},{_fmt(y - 4)} l8,8 m0,-8 l-8,8" '
                            f'stroke="black" class="death"/>')
    return _doc(body)


def heatmap_svg(matrix, title: str = "") -> str:
    M = np.asarray(matrix.entries if hasattr(matrix, "entries") else matrix, dtype=float)
    n = len(M)
    size = (min(W, H) - 2 * PAD) / max(n, 1)
    top = M.max() if M.size and M.max() > 0 else 1.0
    body = [f'<text x="{PAD}" y="{PAD - 16}" font-size="14">{title}</text>']
    for i in range(n):
        for j in range(n):
            g = int(round(255 * (1 - M[i, j] / top)))
            body.append(f'<rect x="{_fmt(PAD + j * size)}" y="{_fmt(PAD + i * size)}" '
                        f'width="{_fmt(size)}" height="{_fmt(size)}" fill="rgb({g},{g},{g})"/>')
    return _doc(body)


def tracks_svg(field, t: float, groups: dict) -> str:
    """Tracks over a grayscale slice of a 2D grid field; groups map label -> (color, tracks)."""
    grid = field.complex.grid
    if grid is None or len(grid.dims) < 2:
        raise ValueError("track overlay needs a 2D or 3D grid")
    nx, ny = grid.dims[:2]
    fr = _Frame(0, nx - 1, 0, ny - 1)
    body = []
    if len(grid.dims) == 2:
        vals = field.at(t).reshape(ny, nx)
        lo, hi = float(vals.min()), float(vals.max())
        cw = (W - 2 * PAD) / max(nx - 1, 1)
        ch = (H - 2 * PAD) / max(ny - 1, 1)
        for j in range(ny):
            for i in range(nx):
                g = int(round(255 * (vals[j, i] - lo) / (hi - lo))) if hi > lo else 128
                body.append(f'<rect x="{_fmt(fr.x(i) - cw / 2)}" y="{_fmt(fr.y(j) - ch / 2)}" '
                            f'width="{_fmt(cw)}" height="{_fmt(ch)}" fill="rgb({g},{g},{g})"/>')
    for label, (color, tracks) in groups.items():
        for tr in tracks:
            xy = grid.coords([p[1] for p in tr.points])
            pts = " ".join(f"{_fmt(fr.x(p[0]))},{_fmt(fr.y(p[1]))}" for p in xy)
            body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                        f'stroke-width="2" class="{label}"/>')
    return _doc(body)
