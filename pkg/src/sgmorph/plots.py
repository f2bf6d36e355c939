"""Minimal hand-written SVG figures.

Output is plain markup with fixed number formatting, so identical inputs
give byte-identical files.
"""
from __future__ import annotations

from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _doc(width, height, body, title=None):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n<rect width="100%" height="100%" fill="white"/>\n')
    if title:
        head += (f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" '
                 f'font-size="14">{escape(title)}</text>\n')
    return head + "".join(body) + "</svg>\n"


def scatter_svg(xy, groups: Sequence, title: Optional[str] = None, labels=None,
                size: int = 480) -> str:
    """Scatter plot coloured by ``groups`` (any hashable values)."""
    xy = np.asarray(xy, dtype=float)
    pad = 36
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    P = pad + (xy - lo) / span * (size - 2 * pad)
    P[:, 1] = size - P[:, 1]
    keys = sorted({str(g) for g in groups})
    colour = {k: PALETTE[i % len(PALETTE)] for i, k in enumerate(keys)}
    body = []
    for k, (x, y) in enumerate(P):
        g = str(groups[k])
        tip = f"<title>{escape(str(labels[k]))}</title>" if labels is not None else ""
        body.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="4" fill="{colour[g]}" '
                    f'fill-opacity="0.8">{tip}</circle>\n')
    for i, k in enumerate(keys):
        y = 30 + 16 * i
        body.append(f'<rect x="{size - 110}" y="{y - 9}" width="10" height="10" fill="{colour[k]}"/>'
                    f'<text x="{size - 95}" y="{y}" font-family="sans-serif" font-size="11">'
                    f'{escape(k)}</text>\n')
    return _doc(size, size, body, title)


def heatmap_svg(M, names: Sequence[str], title: Optional[str] = None, cell: int = 40) -> str:
    """Square matrix as a white-to-blue heat map with values printed."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    left, top = 110, 40
    width, height = left + n * cell + 20, top + n * cell + 20
    vmax = float(np.max(M)) if np.max(M) > 0 else 1.0
    body = []
    for i in range(n):
        body.append(f'<text x="{left - 6}" y="{top + (i + 0.6) * cell:.1f}" text-anchor="end" '
                    f'font-family="sans-serif" font-size="11">{escape(str(names[i]))}</text>\n')
        for j in range(n):
            t = M[i, j] / vmax
            r = g = int(round(255 * (1 - t)))
            body.append(f'<rect x="{left + j * cell}" y="{top + i * cell}" width="{cell}" '
                        f'height="{cell}" fill="rgb({r},{g},255)"/>'
                        f'<text x="{left + (j + 0.5) * cell:.1f}" y="{top + (i + 0.6) * cell:.1f}" '
                        f'text-anchor="middle" font-family="sans-serif" font-size="10">'
                        f'{M[i, j]:.2f}</text>\n')
    return _doc(width, height, body, title)


def rose_svg(masses, title: Optional[str] = None, size: int = 320) -> str:
    """Half-rose of a 2-D unoriented direction histogram on [0, pi)."""
    m = np.asarray(masses, dtype=float)
    k = m.size
    cx, cy, R = size / 2, size * 0.75, size * 0.42
    peak = m.max() if m.max() > 0 else 1.0
    body = [f'<line x1="{_f(cx - R)}" y1="{_f(cy)}" x2="{_f(cx + R)}" y2="{_f(cy)}" stroke="#999"/>\n']
    for i, v in enumerate(m):
        a0, a1 = np.pi * i / k, np.pi * (i + 1) / k
        r = R * np.sqrt(v / peak)
        x0, y0 = cx + r * np.cos(a0), cy - r * np.sin(a0)
        x1, y1 = cx + r * np.cos(a1), cy - r * np.sin(a1)
        body.append(f'<path d="M{_f(cx)},{_f(cy)} L{_f(x0)},{_f(y0)} A{_f(r)},{_f(r)} 0 0 0 '
                    f'{_f(x1)},{_f(y1)} Z" fill="{PALETTE[0]}" fill-opacity="0.7" stroke="white"/>\n')
    return _doc(size, size, body, title)
