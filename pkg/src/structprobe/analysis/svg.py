"""Minimal SVG writer for scatter plots and heatmaps.

Output is a pure function of the input: fixed number formatting, no ids
derived from memory addresses, no timestamps.
"""

from __future__ import annotations

from typing import Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _f(x: float) -> str:
    return f"{x:.2f}"


class Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def add(self, fragment: str) -> None:
        self.parts.append(fragment)

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, extra="") -> None:
        self.add(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{stroke}" stroke-width="{_f(width)}"{extra}/>'
        )

    def rect(self, x, y, w, h, fill, extra="") -> None:
        self.add(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{fill}"{extra}/>'
        )

    def circle(self, cx, cy, r, fill, extra="") -> None:
        self.add(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(r)}" fill="{fill}"{extra}/>')

    def text(self, x, y, s: str, size=11, anchor="start", extra="") -> None:
        self.add(
            f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" text-anchor="{anchor}" '
            f'font-family="sans-serif"{extra}>{escape(s)}</text>'
        )

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">'
        )
        return "\n".join([head, *self.parts, "</svg>"]) + "\n"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def scatter(
    series: dict[str, list[tuple[float, float, str]]],
    x_label: str,
    y_label: str,
    title: str = "",
    invert_x: bool = False,
    x_range: Optional[tuple[float, float]] = None,
    width: int = 420,
    height: int = 340,
) -> str:
    """Scatter plot; each point is ``(x, y, marker)`` with marker ``circle`` or ``square``."""
    margin_l, margin_r, margin_t, margin_b = 56, 110, 30, 46
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x0, x1 = x_range if x_range else (min(xs, default=0.0), max(xs, default=1.0))
    y0, y1 = min(ys, default=0.0), max(ys, default=1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(x: float) -> float:
        frac = (x - x0) / (x1 - x0)
        return margin_l + (1 - frac if invert_x else frac) * pw

    def py(y: float) -> float:
        return margin_t + (1 - (y - y0) / (y1 - y0)) * ph

    c = Canvas(width, height)
    c.rect(0, 0, width, height, "#ffffff")
    if title:
        c.text(margin_l + pw / 2, 18, title, size=13, anchor="middle")
    c.line(margin_l, margin_t + ph, margin_l + pw, margin_t + ph)
    c.line(margin_l, margin_t, margin_l, margin_t + ph)
    for t in _ticks(x0, x1):
        c.line(px(t), margin_t + ph, px(t), margin_t + ph + 4)
        c.text(px(t), margin_t + ph + 16, f"{t:.3g}", size=9, anchor="middle")
    for t in _ticks(y0, y1):
        c.line(margin_l - 4, py(t), margin_l, py(t))
        c.text(margin_l - 6, py(t) + 3, f"{t:.3g}", size=9, anchor="end")
    c.text(margin_l + pw / 2, height - 8, x_label + (" (inverted)" if invert_x else ""), anchor="middle")
    c.text(
        14, margin_t + ph / 2, y_label, anchor="middle",
        extra=f' transform="rotate(-90 14 {_f(margin_t + ph / 2)})"',
    )
    for k, (name, pts) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        ly = margin_t + 14 * k + 6
        c.circle(margin_l + pw + 14, ly - 4, 4, color)
        c.text(margin_l + pw + 22, ly, name, size=10)
        for x, y, marker in pts:
            label = quoteattr(f"{name}: ({x:.4g}, {y:.4g})")
            if marker == "square":
                c.rect(px(x) - 3.5, py(y) - 3.5, 7, 7, color, f' class="point" data-label={label}')
            else:
                c.circle(px(x), py(y), 4, color, f' class="point" data-label={label}')
    return c.render()


def _heat_color(v: float) -> str:
    # diverging blue-white-red on [-1, 1]
    v = max(-1.0, min(1.0, v))
    if v >= 0:
        r, g, b = 255, int(255 * (1 - v)), int(255 * (1 - v))
    else:
        r, g, b = int(255 * (1 + v)), int(255 * (1 + v)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(
    rows: Sequence[str],
    cols: Sequence[str],
    values: dict[tuple[str, str], Optional[float]],
    title: str = "",
    cell: int = 56,
) -> str:
    margin_l, margin_t = 110, 52
    width = margin_l + cell * len(cols) + 20
    height = margin_t + cell * len(rows) + 20
    c = Canvas(width, height)
    c.rect(0, 0, width, height, "#ffffff")
    if title:
        c.text(width / 2, 18, title, size=13, anchor="middle")
    for j, col in enumerate(cols):
        c.text(margin_l + cell * j + cell / 2, margin_t - 8, col, size=10, anchor="middle")
    for i, row in enumerate(rows):
        y = margin_t + cell * i
        c.text(margin_l - 6, y + cell / 2 + 4, row, size=10, anchor="end")
        for j, col in enumerate(cols):
            x = margin_l + cell * j
            v = values.get((row, col))
            fill = "#dddddd" if v is None else _heat_color(v)
            c.rect(x, y, cell - 2, cell - 2, fill, ' class="cell"')
            c.text(x + cell / 2 - 1, y + cell / 2 + 3, "n/a" if v is None else f"{v:.2f}",
                   size=10, anchor="middle")
    return c.render()
