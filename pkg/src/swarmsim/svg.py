"""Minimal deterministic SVG line charts.

Coordinates are written with two decimals so identical inputs always give
identical bytes.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

__all__ = ["PALETTE", "Chart", "nice_ticks"]

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939")


def _num(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering ``[lo, hi]`` with a 1/2/5 step."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    k = 0
    while start + k * step <= hi + 1e-9 * step:
        out.append(round(start + k * step, 10))
        k += 1
    return out


class Chart:
    """A single plot area with linear x/y axes.

    ``equal_aspect`` widens one data range so one unit has the same length
    on both axes (used for plan views).
    """

    def __init__(self, title: str, xlabel: str, ylabel: str, xlim, ylim,
                 width: int = 720, height: int = 480, equal_aspect: bool = False):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.width, self.height = width, height
        self.left, self.right, self.top, self.bottom = 64, 24, 40, 52
        x0, x1 = _pad(*xlim)
        y0, y1 = _pad(*ylim)
        if equal_aspect:
            pw, ph = self._plot_size()
            scale = max((x1 - x0) / pw, (y1 - y0) / ph)
            cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
            x0, x1 = cx - scale * pw / 2, cx + scale * pw / 2
            y0, y1 = cy - scale * ph / 2, cy + scale * ph / 2
        self.xlim, self.ylim = (x0, x1), (y0, y1)
        self._body: list[str] = []
        self._legend: list[tuple[str, str, Optional[str]]] = []

    def _plot_size(self):
        return self.width - self.left - self.right, self.height - self.top - self.bottom

    def px(self, x: float) -> float:
        pw, _ = self._plot_size()
        return self.left + (x - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * pw

    def py(self, y: float) -> float:
        _, ph = self._plot_size()
        return self.top + ph - (y - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * ph

    def polyline(self, xs: Sequence[float], ys: Sequence[float], color: str, width: float = 1.2,
                 dash: Optional[str] = None, label: Optional[str] = None):
        pts = " ".join(f"{_num(self.px(x))},{_num(self.py(y))}" for x, y in zip(xs, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self._body.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{extra} points="{pts}"/>')
        if label:
            self._legend.append((label, color, dash))

    def hline(self, y: float, color: str = "#000000", dash: str = "6,4", label: Optional[str] = None):
        self.polyline(self.xlim, (y, y), color, 1.0, dash, label)

    def rect(self, x0: float, y0: float, x1: float, y1: float, fill: str = "#bbbbbb", stroke: str = "#555555"):
        a, b = self.px(min(x0, x1)), self.py(max(y0, y1))
        w, h = abs(self.px(x1) - self.px(x0)), abs(self.py(y1) - self.py(y0))
        self._body.append(f'<rect x="{_num(a)}" y="{_num(b)}" width="{_num(w)}" height="{_num(h)}" '
                          f'fill="{fill}" stroke="{stroke}"/>')

    def circle(self, x: float, y: float, r: float, fill: str = "none", stroke: str = "#000000"):
        # radius in data units, measured along x
        rr = abs(self.px(x + r) - self.px(x))
        self._body.append(f'<circle cx="{_num(self.px(x))}" cy="{_num(self.py(y))}" r="{_num(rr)}" '
                          f'fill="{fill}" stroke="{stroke}"/>')

    def marker(self, x: float, y: float, color: str, size: float = 3.0):
        self._body.append(f'<circle cx="{_num(self.px(x))}" cy="{_num(self.py(y))}" r="{_num(size)}" fill="{color}"/>')

    def note(self, text: str):
        pw, ph = self._plot_size()
        self._body.append(f'<text x="{_num(self.left + pw / 2)}" y="{_num(self.top + ph / 2)}" '
                          f'text-anchor="middle" font-size="14">{escape(text)}</text>')

    def render(self) -> str:
        pw, ph = self._plot_size()
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif">',
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>',
            f'<text x="{_num(self.width / 2)}" y="24" text-anchor="middle" font-size="15">{escape(self.title)}</text>',
        ]
        for t in nice_ticks(*self.xlim):
            x = self.px(t)
            out.append(f'<line x1="{_num(x)}" y1="{self.top}" x2="{_num(x)}" y2="{self.top + ph}" stroke="#eeeeee"/>')
            out.append(f'<text x="{_num(x)}" y="{self.top + ph + 16}" text-anchor="middle" font-size="11">{_label(t)}</text>')
        for t in nice_ticks(*self.ylim):
            y = self.py(t)
            out.append(f'<line x1="{self.left}" y1="{_num(y)}" x2="{self.left + pw}" y2="{_num(y)}" stroke="#eeeeee"/>')
            out.append(f'<text x="{self.left - 6}" y="{_num(y + 4)}" text-anchor="end" font-size="11">{_label(t)}</text>')
        out.append(f'<svg x="{self.left}" y="{self.top}" width="{pw}" height="{ph}" '
                   f'viewBox="{self.left} {self.top} {pw} {ph}" overflow="hidden">')
        out.extend(self._body)
        out.append("</svg>")
        out.append(f'<rect x="{self.left}" y="{self.top}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>')
        out.append(f'<text x="{_num(self.left + pw / 2)}" y="{self.height - 12}" text-anchor="middle" '
                   f'font-size="12">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{_num(self.top + ph / 2)}" text-anchor="middle" font-size="12" '
                   f'transform="rotate(-90 16 {_num(self.top + ph / 2)})">{escape(self.ylabel)}</text>')
        for k, (label, color, dash) in enumerate(self._legend):
            y = self.top + 12 + 14 * k
            x = self.left + pw - 110
            extra = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 24}" y2="{y - 4}" stroke="{color}" '
                       f'stroke-width="1.5"{extra}/>')
            x += 6
            out.append(f'<text x="{x + 24}" y="{y}" font-size="11">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _pad(lo: float, hi: float, frac: float = 0.04):
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, 1.0
    if hi - lo < 1e-9:
        return lo - 0.5, hi + 0.5
    m = (hi - lo) * frac
    return lo - m, hi + m


def _label(t: float) -> str:
    if abs(t - round(t)) < 1e-9:
        return str(int(round(t)))
    return f"{t:g}"
