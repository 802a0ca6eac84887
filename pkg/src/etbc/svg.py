"""Minimal standalone SVG line and step charts.

Each series becomes exactly one <polyline> element; axes, ticks and labels
are plain lines and text. Output depends only on the input data, so files
are byte-stable across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

__all__ = ["Series", "nice_ticks", "line_chart"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH, HEIGHT = 720, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 150, 40, 55


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    step: bool = False


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering [lo, hi] with about ``target`` ticks."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9)
    ticks = []
    k = start
    while k * step <= hi + 1e-9 * step:
        ticks.append(round(k * step, 12))
        k += 1
    return ticks


def _fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.6g}"


def _step_points(x: Sequence[float], y: Sequence[float]) -> tuple[list[float], list[float]]:
    # keep only the corners of a piecewise-constant signal
    xs, ys = [x[0]], [y[0]]
    for i in range(1, len(x)):
        if y[i] != ys[-1]:
            xs += [x[i], x[i]]
            ys += [ys[-1], y[i]]
    xs.append(x[-1])
    ys.append(ys[-1])
    return xs, ys


def line_chart(series: Sequence[Series], title: str, xlabel: str, ylabel: str) -> str:
    """Render ``series`` on shared linear axes and return the SVG text."""
    prepared = []
    for s in series:
        xs, ys = (list(map(float, s.x)), list(map(float, s.y)))
        if s.step and xs:
            xs, ys = _step_points(xs, ys)
        prepared.append((s.label, xs, ys))

    all_x = [v for _, xs, _ in prepared for v in xs if math.isfinite(v)]
    all_y = [v for _, _, ys in prepared for v in ys if math.isfinite(v)]
    x0, x1 = (min(all_x), max(all_x)) if all_x else (0.0, 1.0)
    y0, y1 = (min(all_y), max(all_y)) if all_y else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    pw = WIDTH - _LEFT - _RIGHT
    ph = HEIGHT - _TOP - _BOTTOM

    def px(v: float) -> float:
        return _LEFT + (v - x0) / (x1 - x0) * pw

    def py(v: float) -> float:
        return _TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<g stroke="black" stroke-width="1">'
        f'<line x1="{_LEFT}" y1="{_TOP + ph}" x2="{_LEFT + pw}" y2="{_TOP + ph}"/>'
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_TOP + ph}"/></g>',
    ]
    for t in nice_ticks(x0, x1):
        X = px(t)
        out.append(
            f'<line x1="{X:.2f}" y1="{_TOP + ph}" x2="{X:.2f}" y2="{_TOP + ph + 5}" stroke="black"/>'
            f'<text x="{X:.2f}" y="{_TOP + ph + 18}" text-anchor="middle">{_fmt_tick(t)}</text>'
        )
    for t in nice_ticks(y0, y1):
        Y = py(t)
        out.append(
            f'<line x1="{_LEFT - 5}" y1="{Y:.2f}" x2="{_LEFT}" y2="{Y:.2f}" stroke="black"/>'
            f'<text x="{_LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">{_fmt_tick(t)}</text>'
        )
    out.append(
        f'<text x="{_LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{_TOP + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_TOP + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (label, xs, ys) in enumerate(prepared):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys) if math.isfinite(a) and math.isfinite(b)
        )
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}">'
            f"<title>{escape(label)}</title></polyline>"
        )
        ly = _TOP + 14 + 18 * i
        lx = _LEFT + pw + 12
        out.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
            f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
