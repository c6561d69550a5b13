"""Minimal log-log line plots written as plain SVG text."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo: float, hi: float) -> list[float]:
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return [10.0**k for k in range(a, b + 1)]


def loglog(series: dict[str, tuple[list[float], list[float]]], title: str = "", xlabel: str = "eps",
           ylabel: str = "", width: int = 520, height: int = 380, dashed: tuple[str, ...] = ()) -> str:
    """Return an SVG document; non-positive values are dropped."""
    pts = {k: [(x, y) for x, y in zip(*v) if x > 0 and y > 0] for k, v in series.items()}
    xs = [p[0] for v in pts.values() for p in v] or [1.0]
    ys = [p[1] for v in pts.values() for p in v] or [1.0]
    x0, x1 = math.log10(min(xs)), math.log10(max(xs))
    y0, y1 = math.log10(min(ys)), math.log10(max(ys))
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    px = (x1 - x0) * 0.05
    py = (y1 - y0) * 0.05
    x0, x1, y0, y1 = x0 - px, x1 + px, y0 - py, y1 + py
    ml, mr, mt, mb = 70, 20, 30, 50
    W, H = width - ml - mr, height - mt - mb

    def X(x):
        return ml + W * (math.log10(x) - x0) / (x1 - x0)

    def Y(y):
        return mt + H * (1 - (math.log10(y) - y0) / (y1 - y0))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" '
           f'font-size="11">',
           f'<rect x="{ml}" y="{mt}" width="{W}" height="{H}" fill="none" stroke="#333"/>']
    for t in _ticks(10**x0, 10**x1):
        if x0 <= math.log10(t) <= x1:
            out.append(f'<line x1="{X(t):.2f}" y1="{mt + H}" x2="{X(t):.2f}" y2="{mt + H + 4}" stroke="#333"/>')
            out.append(f'<text x="{X(t):.2f}" y="{mt + H + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(10**y0, 10**y1):
        if y0 <= math.log10(t) <= y1:
            out.append(f'<line x1="{ml - 4}" y1="{Y(t):.2f}" x2="{ml}" y2="{Y(t):.2f}" stroke="#333"/>')
            out.append(f'<text x="{ml - 6}" y="{Y(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{ml + W / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + H / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + H / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{ml + W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for i, (name, p) in enumerate(pts.items()):
        if not p:
            continue
        col = COLORS[i % len(COLORS)]
        dash = ' stroke-dasharray="5,4"' if name in dashed else ""
        path = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in p)
        out.append(f'<polyline points="{path}" fill="none" stroke="{col}" stroke-width="1.6"{dash}/>')
        for x, y in p:
            out.append(f'<circle cx="{X(x):.2f}" cy="{Y(y):.2f}" r="3" fill="{col}"/>')
        ly = mt + 14 + 14 * i
        out.append(f'<line x1="{ml + 10}" y1="{ly - 4}" x2="{ml + 30}" y2="{ly - 4}" stroke="{col}"{dash}/>')
        out.append(f'<text x="{ml + 34}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
