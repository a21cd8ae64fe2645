"""Minimal deterministic SVG line/scatter plotter.

Emits self-contained SVG text with axes, 1-2-5 tick placement (decade
ticks on log scales), optional per-point markers, and a legend. Identical
inputs produce byte-identical output: there are no timestamps, random ids,
or locale-dependent number formats anywhere in the file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .errors import DomainError

__all__ = ["Series", "line_plot"]

PALETTE = ("#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df", "#bf3989")

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 34, 44


@dataclass(frozen=True)
class Series:
    name: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    marker: bool = False

    def __post_init__(self):
        if len(self.xs) != len(self.ys):
            raise DomainError(f"series {self.name!r}: {len(self.xs)} xs vs {len(self.ys)} ys")
        if not self.xs:
            raise DomainError(f"series {self.name!r} is empty")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:g}"


def _linear_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    span = hi - lo
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1.0, 2.0, 5.0, 10.0) if s * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_d = math.floor(math.log10(lo))
    hi_d = math.ceil(math.log10(hi))
    return [10.0**d for d in range(lo_d, hi_d + 1) if lo <= 10.0**d <= hi]


def _axis_range(values, log: bool, axis: str):
    lo, hi = min(values), max(values)
    if log:
        if lo <= 0:
            raise DomainError(f"log-scale {axis} axis requires positive values, got min {lo}")
        if lo == hi:
            lo, hi = lo / 2.0, hi * 2.0
        return lo, hi
    if lo == hi:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def line_plot(
    series: list[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 640,
    height: int = 420,
    xlog: bool = False,
    ylog: bool = False,
) -> str:
    if not series:
        raise DomainError("need at least one series")
    xs_all = [x for s in series for x in s.xs]
    ys_all = [y for s in series for y in s.ys]
    if not all(math.isfinite(v) for v in xs_all + ys_all):
        raise DomainError("series values must be finite")
    x_lo, x_hi = _axis_range(xs_all, xlog, "x")
    y_lo, y_hi = _axis_range(ys_all, ylog, "y")
    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def sx(v: float) -> float:
        if xlog:
            f = (math.log10(v) - math.log10(x_lo)) / (math.log10(x_hi) - math.log10(x_lo))
        else:
            f = (v - x_lo) / (x_hi - x_lo)
        return _MARGIN_L + f * plot_w

    def sy(v: float) -> float:
        if ylog:
            f = (math.log10(v) - math.log10(y_lo)) / (math.log10(y_hi) - math.log10(y_lo))
        else:
            f = (v - y_lo) / (y_hi - y_lo)
        return _MARGIN_T + (1.0 - f) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>'
        )
    x_ticks = _log_ticks(x_lo, x_hi) if xlog else _linear_ticks(x_lo, x_hi)
    y_ticks = _log_ticks(y_lo, y_hi) if ylog else _linear_ticks(y_lo, y_hi)
    for t in x_ticks:
        px = sx(t)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{_MARGIN_T}" x2="{_fmt(px)}" y2="{_MARGIN_T + plot_h}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{_MARGIN_T + plot_h + 16}" text-anchor="middle">{escape(_label(t))}</text>'
        )
    for t in y_ticks:
        py = sy(t)
        out.append(
            f'<line x1="{_MARGIN_L}" y1="{_fmt(py)}" x2="{_MARGIN_L + plot_w}" y2="{_fmt(py)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 6}" y="{_fmt(py + 4)}" text-anchor="end">{escape(_label(t))}</text>'
        )
    out.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333333" stroke-width="1"/>'
    )
    if xlabel:
        out.append(
            f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>'
        )
    if ylabel:
        cy = _MARGIN_T + plot_h / 2
        out.append(
            f'<text x="14" y="{cy:.0f}" text-anchor="middle" transform="rotate(-90 14 {cy:.0f})">'
            f"{escape(ylabel)}</text>"
        )
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(s.xs, s.ys))
        if len(s.xs) > 1:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if s.marker or len(s.xs) == 1:
            for x, y in zip(s.xs, s.ys):
                out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="2.5" fill="{color}"/>')
    if len(series) > 1 or series[0].name:
        ly = _MARGIN_T + 10
        for i, s in enumerate(series):
            color = PALETTE[i % len(PALETTE)]
            y = ly + i * 15
            x0 = _MARGIN_L + plot_w - 130
            out.append(
                f'<line x1="{x0}" y1="{y}" x2="{x0 + 18}" y2="{y}" stroke="{color}" stroke-width="2"/>'
            )
            out.append(f'<text x="{x0 + 23}" y="{y + 4}">{escape(s.name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
