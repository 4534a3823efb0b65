"""Minimal deterministic SVG line plots and heatmaps."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def line_plot(
    x: np.ndarray,
    series: dict[str, np.ndarray],
    title: str = "",
    xlabel: str = "t",
    width: int = 640,
    height: int = 400,
) -> str:
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    x = np.asarray(x, dtype=float)
    ml, mr, mt, mb = 70, 20, 40, 45
    pw, ph = width - ml - mr, height - mt - mb
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    y0, y1 = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    x0, x1 = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        yv = y0 + frac * (y1 - y0)
        xv = x0 + frac * (x1 - x0)
        out.append(f'<text x="{ml - 5}" y="{_fmt(py(yv) + 4)}" text-anchor="end" font-family="sans-serif" font-size="11">{yv:.3g}</text>')
        out.append(f'<text x="{_fmt(px(xv))}" y="{mt + ph + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">{xv:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{ml}" x2="{ml + pw}" y1="{_fmt(py(0))}" y2="{_fmt(py(0))}" stroke="#999" stroke-dasharray="4 3"/>')
    for i, (name, y) in enumerate(zip(series, ys)):
        ok = np.isfinite(y)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x[ok], y[ok]))
        c = colors[i % len(colors)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{ml + 10}" y="{mt + 16 + 15 * i}" fill="{c}" font-family="sans-serif" font-size="12">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(A: np.ndarray, title: str = "", cell: int | None = None, vmax: float | None = None) -> str:
    """Diverging blue/white/red map, symmetric around zero."""
    A = np.asarray(A, dtype=float)
    n, m = A.shape if A.ndim == 2 else (0, 0)
    if cell is None:
        cell = max(2, min(24, 480 // max(n, m, 1)))
    scale = vmax if vmax is not None else float(np.abs(A).max(initial=0.0))
    width, height = m * cell + 20, n * cell + 50
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="10" y="20" font-family="sans-serif" font-size="13">{escape(title)} (max |a| = {scale:.3g})</text>',
    ]
    for i in range(n):
        for j in range(m):
            a = A[i, j]
            if a == 0:
                continue
            s = min(1.0, abs(a) / scale) if scale > 0 else 0.0
            k = int(round(255 * (1 - s)))
            color = f"rgb(255,{k},{k})" if a > 0 else f"rgb({k},{k},255)"
            out.append(f'<rect x="{10 + j * cell}" y="{35 + i * cell}" width="{cell}" height="{cell}" fill="{color}"/>')
    out.append(f'<rect x="10" y="35" width="{m * cell}" height="{n * cell}" fill="none" stroke="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
