"""Minimal SVG line and scatter plots."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..datagen.container import atomic_write

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
WIDTH, HEIGHT = 480, 360
MARGIN = 56


@dataclass
class Series:
    label: str
    x: list
    y: list
    err: list = field(default_factory=list)


def _scale(lo: float, hi: float, a: float, b: float):
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def _frame(title: str, xlabel: str, ylabel: str, xlim, ylim):
    sx = _scale(xlim[0], xlim[1], MARGIN, WIDTH - 16)
    sy = _scale(ylim[0], ylim[1], HEIGHT - MARGIN, 24)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="15" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - 16}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="24" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 14}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{HEIGHT / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {HEIGHT / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(*xlim):
        parts.append(f'<text x="{sx(t):.1f}" y="{HEIGHT - MARGIN + 14}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(*ylim):
        parts.append(f'<text x="{MARGIN - 4}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    return parts, sx, sy


def _limits(values) -> tuple[float, float]:
    v = np.asarray([float(a) for a in values], dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    return float(v.min()), float(v.max())


def line_plot(series: list[Series], title: str, xlabel: str, ylabel: str) -> str:
    """Lines with optional +/- error bars."""
    xs = [v for s in series for v in s.x]
    ys = [v for s in series for v in s.y] + [y + e for s in series for y, e in zip(s.y, s.err)] + \
         [y - e for s in series for y, e in zip(s.y, s.err)]
    parts, sx, sy = _frame(title, xlabel, ylabel, _limits(xs), _limits(ys))
    for k, s in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(s.x, s.y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for i, (x, y) in enumerate(zip(s.x, s.y)):
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
            if s.err:
                e = s.err[i]
                parts.append(f'<line x1="{sx(x):.1f}" y1="{sy(y - e):.1f}" x2="{sx(x):.1f}" y2="{sy(y + e):.1f}" stroke="{color}"/>')
        parts.append(f'<text x="{WIDTH - 110}" y="{40 + 14 * k}" fill="{color}">{escape(s.label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_plot(x, y, title: str, xlabel: str, ylabel: str) -> str:
    parts, sx, sy = _frame(title, xlabel, ylabel, _limits(x), _limits(y))
    for a, b in zip(x, y):
        parts.append(f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="3" fill="{PALETTE[0]}" fill-opacity="0.7"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, text: str) -> None:
    atomic_write(Path(path), text.encode("utf-8"))
