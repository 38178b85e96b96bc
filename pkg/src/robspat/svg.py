"""Minimal SVG line and grouped-bar charts, written as plain text."""

from __future__ import annotations

from html import escape
from typing import Mapping, Sequence

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf")

WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=70, right=150, top=40, bottom=55)


def _nice_ticks(lo: float, hi: float, count: int = 6) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    return np.arange(np.floor(lo / step) * step, hi + step * 0.5, step)


class _Canvas:
    def __init__(self, xlo, xhi, ylo, yhi):
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi
        self.parts: list[str] = []

    def sx(self, x):
        return self.x0 + (x - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def sy(self, y):
        return self.y0 - (y - self.ylo) / (self.yhi - self.ylo) * (self.y0 - self.y1)

    def text(self, x, y, s, anchor="middle", size=12, rotate=None):
        rot = f' transform="rotate({rotate} {x:.1f} {y:.1f})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" text-anchor="{anchor}"{rot}>{escape(s)}</text>'
        )

    def axes(self, title, xlabel, ylabel, yticks, xticks=None):
        self.parts.append(
            f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" height="{self.y0 - self.y1}" '
            'fill="none" stroke="#333"/>'
        )
        for t in yticks:
            y = self.sy(t)
            self.parts.append(f'<line x1="{self.x0}" y1="{y:.1f}" x2="{self.x1}" y2="{y:.1f}" stroke="#ddd"/>')
            self.text(self.x0 - 6, y + 4, f"{t:g}", anchor="end", size=11)
        for t in xticks if xticks is not None else []:
            self.text(self.sx(t), self.y0 + 16, f"{t:g}", size=11)
        self.text((self.x0 + self.x1) / 2, 22, title, size=14)
        self.text((self.x0 + self.x1) / 2, HEIGHT - 12, xlabel)
        self.text(18, (self.y0 + self.y1) / 2, ylabel, rotate=-90)

    def legend(self, labels):
        for k, label in enumerate(labels):
            y = self.y1 + 14 + 18 * k
            color = PALETTE[k % len(PALETTE)]
            self.parts.append(f'<rect x="{self.x1 + 14}" y="{y - 9}" width="12" height="12" fill="{color}"/>')
            self.text(self.x1 + 32, y + 1, label, anchor="start", size=12)

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
        )


def line_chart(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """One polyline per series; ``series[label] = (x, y)``."""
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    yticks = _nice_ticks(float(ys.min()), float(ys.max()))
    xticks = _nice_ticks(float(xs.min()), float(xs.max()))
    c = _Canvas(float(xs.min()), float(xs.max()), float(yticks[0]), float(yticks[-1]))
    c.axes(title, xlabel, ylabel, yticks, xticks[(xticks >= xs.min()) & (xticks <= xs.max())])
    for k, (x, y) in enumerate(series.values()):
        pts = " ".join(f"{c.sx(a):.2f},{c.sy(b):.2f}" for a, b in zip(x, y))
        color = PALETTE[k % len(PALETTE)]
        c.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
    c.legend(list(series))
    return c.render()


def bar_chart(
    categories: Sequence[str],
    series: Mapping[str, Sequence[float]],
    title: str = "",
    ylabel: str = "",
    reference: float | None = None,
) -> str:
    """Grouped bars: one group per category, one bar per series."""
    ymax = max(1.0, max(max(v) for v in series.values()))
    yticks = _nice_ticks(0.0, ymax, 5)
    c = _Canvas(0.0, float(len(categories)), 0.0, float(yticks[-1]))
    c.axes(title, "", ylabel, yticks)
    nser = len(series)
    width = 0.8 / max(nser, 1)
    for k, values in enumerate(series.values()):
        color = PALETTE[k % len(PALETTE)]
        for g, v in enumerate(values):
            left = c.sx(g + 0.1 + k * width)
            right = c.sx(g + 0.1 + (k + 1) * width)
            top = c.sy(v)
            c.parts.append(
                f'<rect x="{left:.2f}" y="{top:.2f}" width="{right - left:.2f}" height="{c.y0 - top:.2f}" fill="{color}"/>'
            )
    for g, cat in enumerate(categories):
        c.text(c.sx(g + 0.5), c.y0 + 16, cat, size=11)
    if reference is not None:
        y = c.sy(reference)
        c.parts.append(
            f'<line x1="{c.x0}" y1="{y:.1f}" x2="{c.x1}" y2="{y:.1f}" stroke="#000" stroke-dasharray="5,4"/>'
        )
    c.legend(list(series))
    return c.render()
