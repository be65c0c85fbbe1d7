"""Minimal deterministic SVG line and scatter charts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class PlotSpec:
    x: str
    y: list[str]
    kind: str = "line"
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    max_points: int = 4000
    out: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "PlotSpec":
        d = dict(d)
        if "x" not in d or "y" not in d:
            raise ValueError("plot spec needs 'x' and 'y'")
        y = d.pop("y")
        y = [y] if isinstance(y, str) else list(y)
        kind = d.get("kind", "line")
        if kind not in ("line", "scatter"):
            raise ValueError(f"unknown plot kind {kind!r}")
        known = {"x", "kind", "title", "xlabel", "ylabel", "max_points", "out"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown plot spec keys: {sorted(unknown)}")
        return cls(y=y, **d)


def _nice_range(v: np.ndarray):
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad
    return lo, hi


def _ticks(lo: float, hi: float, n: int = 5):
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag * 10)
    start = math.ceil(lo / step) * step
    out = []
    k = 0
    while start + k * step <= hi + 1e-12 * abs(step):
        out.append(start + k * step)
        k += 1
    return out


def _f(v: float) -> str:
    return f"{v:.2f}"


def render(spec: PlotSpec, columns: dict[str, np.ndarray]) -> str:
    """SVG text for ``columns`` (name -> array) according to ``spec``."""
    x = np.asarray(columns.get(spec.x, np.empty(0)), dtype=float)
    ys = [np.asarray(columns.get(name, np.empty(0)), dtype=float) for name in spec.y]
    empty = len(x) == 0 or all(len(y) == 0 for y in ys)
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B
    x0, x1 = _nice_range(x)
    y0, y1 = _nice_range(np.concatenate(ys) if ys and not empty else np.empty(0))

    def sx(v):
        return MARGIN_L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN_T + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(spec.title)}</text>',
        f'<g class="axes" stroke="black" fill="none">'
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T + ph}" x2="{MARGIN_L + pw}" y2="{MARGIN_T + ph}"/>'
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{MARGIN_T + ph}"/></g>',
    ]
    for tv in _ticks(x0, x1):
        out.append(f'<text class="tick" x="{_f(sx(tv))}" y="{MARGIN_T + ph + 16}" '
                   f'text-anchor="middle">{tv:.4g}</text>')
    for tv in _ticks(y0, y1):
        out.append(f'<text class="tick" x="{MARGIN_L - 6}" y="{_f(sy(tv) + 4)}" '
                   f'text-anchor="end">{tv:.4g}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">'
               f'{escape(spec.xlabel or spec.x)}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.1f})">'
               f'{escape(spec.ylabel or ", ".join(spec.y))}</text>')

    if empty:
        out.append(f'<text class="nodata" x="{MARGIN_L + pw / 2:.1f}" y="{MARGIN_T + ph / 2:.1f}" '
                   f'text-anchor="middle" fill="gray">no data</text>')
    else:
        for i, (name, y) in enumerate(zip(spec.y, ys)):
            color = COLORS[i % len(COLORS)]
            n = min(len(x), len(y))
            ok = np.isfinite(x[:n]) & np.isfinite(y[:n])
            xi, yi = x[:n][ok], y[:n][ok]
            if spec.kind == "line":
                stride = max(1, math.ceil(len(xi) / spec.max_points))
                idx = np.arange(0, len(xi), stride)
                if len(xi) and idx[-1] != len(xi) - 1:
                    idx = np.append(idx, len(xi) - 1)
                pts = " ".join(f"{_f(sx(a))},{_f(sy(b))}" for a, b in zip(xi[idx], yi[idx]))
                out.append(f'<polyline data-series="{escape(name)}" fill="none" stroke="{color}" '
                           f'stroke-width="1" points="{pts}"/>')
            else:
                out.append(f'<g data-series="{escape(name)}" fill="{color}">')
                out.extend(f'<circle cx="{_f(sx(a))}" cy="{_f(sy(b))}" r="1.5"/>' for a, b in zip(xi, yi))
                out.append("</g>")
        if len(spec.y) > 1:
            for i, name in enumerate(spec.y):
                yy = MARGIN_T + 14 * (i + 1)
                out.append(f'<text x="{MARGIN_L + pw - 4}" y="{yy}" text-anchor="end" '
                           f'fill="{COLORS[i % len(COLORS)]}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
