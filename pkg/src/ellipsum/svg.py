"""Minimal deterministic SVG line plots of planar curves and ellipses."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .core import Ellipsoid

PALETTE = ("#1f4e9c", "#c0392b", "#2e8b57", "#000000", "#8e44ad", "#d35400", "#7f8c8d")


class EmptyPlot(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Curve:
    label: str
    points: np.ndarray
    closed: bool = True
    color: str | None = None
    dashed: bool = False


def ellipse_polyline(E: Ellipsoid, count=256):
    """``count`` boundary points of a planar ellipsoid, starting at angle 0."""
    if E.dim != 2:
        raise ValueError("only planar ellipsoids can be drawn; project first")
    theta = 2.0 * np.pi * np.arange(count) / count
    circle = np.column_stack([np.cos(theta), np.sin(theta)])
    return circle @ E.factor.T + E.center


def ellipse_curve(E: Ellipsoid, label, **style) -> Curve:
    return Curve(label, ellipse_polyline(E), closed=True, **style)


def _fmt(v):
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def render_svg(curves, title=None, width=520, height=520, margin=48) -> str:
    """Render curves into a standalone SVG document string.

    Both axes share one scale so ellipses keep their aspect.  The data
    bounding box (before padding) is recorded in ``data-bounds`` on the
    plot group as ``xmin xmax ymin ymax``.
    """
    curves = list(curves)
    if not curves:
        raise EmptyPlot("nothing to plot")
    for c in curves:
        if np.asarray(c.points).ndim != 2 or np.asarray(c.points).shape[1] != 2:
            raise ValueError(f"curve {c.label!r} is not planar")
    pts = np.vstack([np.asarray(c.points, dtype=float) for c in curves])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    pad = 0.05 * span
    mid = 0.5 * (lo + hi)
    half = 0.5 * span + pad
    scale = min(width, height - 24) - 2 * margin
    scale = scale / (2.0 * half)

    def to_px(p):
        x = margin + (p[:, 0] - (mid[0] - half)) * scale
        y = margin + 24 + ((mid[1] + half) - p[:, 1]) * scale
        return x, y

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="14">{_escape(title)}</text>')
    box = 2.0 * half * scale
    out.append(f'<rect x="{margin}" y="{margin + 24}" width="{_fmt(box)}" height="{_fmt(box)}" '
               'fill="none" stroke="#888888" stroke-width="0.8"/>')
    # axis lines through the origin when it is in view
    ox, oy = to_px(np.zeros((1, 2)))
    if abs(mid[0]) <= half:
        out.append(f'<line x1="{_fmt(ox[0])}" y1="{margin + 24}" x2="{_fmt(ox[0])}" '
                   f'y2="{_fmt(margin + 24 + box)}" stroke="#cccccc" stroke-width="0.6"/>')
    if abs(mid[1]) <= half:
        out.append(f'<line x1="{margin}" y1="{_fmt(oy[0])}" x2="{_fmt(margin + box)}" '
                   f'y2="{_fmt(oy[0])}" stroke="#cccccc" stroke-width="0.6"/>')
    for label, (x, y, anchor) in {
        _fmt(mid[0] - half): (margin, margin + 24 + box + 14, "start"),
        _fmt(mid[0] + half): (margin + box, margin + 24 + box + 14, "end"),
    }.items():
        out.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" font-family="sans-serif" '
                   f'font-size="10">{label}</text>')
    out.append(f'<text x="{margin - 4}" y="{_fmt(margin + 24 + box)}" text-anchor="end" '
               f'font-family="sans-serif" font-size="10">{_fmt(mid[1] - half)}</text>')
    out.append(f'<text x="{margin - 4}" y="{margin + 34}" text-anchor="end" '
               f'font-family="sans-serif" font-size="10">{_fmt(mid[1] + half)}</text>')

    bounds = " ".join(repr(float(v)) for v in (lo[0], hi[0], lo[1], hi[1]))
    out.append(f'<g class="plot" data-bounds="{bounds}">')
    for i, c in enumerate(curves):
        color = c.color or PALETTE[i % len(PALETTE)]
        x, y = to_px(np.asarray(c.points, dtype=float))
        d = "M " + " L ".join(f"{_fmt(a)} {_fmt(b)}" for a, b in zip(x, y))
        if c.closed:
            d += " Z"
        dash = ' stroke-dasharray="5 3"' if c.dashed else ""
        out.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.4"{dash}>'
                   f"<title>{_escape(c.label)}</title></path>")
    out.append("</g>")
    for i, c in enumerate(curves):
        color = c.color or PALETTE[i % len(PALETTE)]
        y = margin + 40 + 16 * i
        out.append(f'<line x1="{margin + 8}" y1="{y}" x2="{margin + 28}" y2="{y}" stroke="{color}" '
                   'stroke-width="2"/>')
        out.append(f'<text x="{margin + 34}" y="{y + 4}" font-family="sans-serif" font-size="11">'
                   f"{_escape(c.label)}</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def path_points(svg: str):
    """Vertex lists of every ``<path>`` in an SVG produced by :func:`render_svg`."""
    out = []
    for d in re.findall(r'<path d="([^"]+)"', svg):
        nums = [float(v) for v in re.findall(r"-?\d+\.\d+", d)]
        out.append(np.array(nums).reshape(-1, 2))
    return out
