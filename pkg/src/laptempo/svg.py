"""Minimal deterministic SVG emitter.

Documents are built as plain strings: attributes appear exactly in the
order given, every coordinate is formatted to three decimals, lines end
with LF, and no library or locale state can leak into the bytes. The
same drawing calls therefore always produce the same file, which is what
makes golden-file testing of charts possible.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

SvgDocument = bytes


def fmt(value: float) -> str:
    """Fixed three-decimal formatting; negative zero collapses to zero."""
    out = f"{value:.3f}"
    return "0.000" if out == "-0.000" else out


def esc(text: str) -> str:
    return escape(text, {'"': "&quot;"})


class SvgBuilder:
    """Accumulates elements and serializes them with a fixed layout."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self._lines: list[str] = []

    def element(self, tag: str, attrs: dict[str, str], text: str | None = None) -> None:
        parts = "".join(f' {k}="{esc(v)}"' for k, v in attrs.items())
        if text is None:
            self._lines.append(f"<{tag}{parts}/>")
        else:
            self._lines.append(f"<{tag}{parts}>{esc(text)}</{tag}>")

    def line(self, x1: float, y1: float, x2: float, y2: float, **style: str) -> None:
        attrs = {"x1": fmt(x1), "y1": fmt(y1), "x2": fmt(x2), "y2": fmt(y2)}
        attrs.update(style)
        self.element("line", attrs)

    def rect(self, x: float, y: float, w: float, h: float, **style: str) -> None:
        attrs = {"x": fmt(x), "y": fmt(y), "width": fmt(w), "height": fmt(h)}
        attrs.update(style)
        self.element("rect", attrs)

    def circle(self, cx: float, cy: float, r: float, **style: str) -> None:
        attrs = {"cx": fmt(cx), "cy": fmt(cy), "r": fmt(r)}
        attrs.update(style)
        self.element("circle", attrs)

    def polyline(self, points: list[tuple[float, float]], **style: str) -> None:
        coords = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in points)
        attrs = {"points": coords, "fill": "none"}
        attrs.update(style)
        self.element("polyline", attrs)

    def polygon(self, points: list[tuple[float, float]], **style: str) -> None:
        coords = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in points)
        attrs = {"points": coords}
        attrs.update(style)
        self.element("polygon", attrs)

    def text(
        self,
        x: float,
        y: float,
        content: str,
        size: float = 11.0,
        anchor: str = "start",
        **style: str,
    ) -> None:
        attrs = {
            "x": fmt(x),
            "y": fmt(y),
            "font-family": "sans-serif",
            "font-size": fmt(size),
            "text-anchor": anchor,
        }
        attrs.update(style)
        self.element("text", attrs, content)

    def to_bytes(self) -> SvgDocument:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">'
        )
        body = "\n".join(self._lines)
        return f"{head}\n{body}\n</svg>\n".encode("utf-8")


class LinearScale:
    """Affine map from a data interval to a pixel interval."""

    def __init__(self, d0: float, d1: float, p0: float, p1: float):
        if d1 == d0:  # degenerate domain: centre everything
            d0, d1 = d0 - 0.5, d1 + 0.5
        self.d0, self.d1 = d0, d1
        self.p0, self.p1 = p0, p1

    def __call__(self, value: float) -> float:
        frac = (value - self.d0) / (self.d1 - self.d0)
        return self.p0 + frac * (self.p1 - self.p0)


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi], at most ~target+2 of them."""
    if hi <= lo:
        return [lo]
    span = hi - lo
    raw_step = span / max(1, target)
    magnitude = 10.0 ** int(f"{raw_step:e}".split("e")[1])
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * magnitude
        if span / step <= target + 1:
            break
    first = step * math.ceil(lo / step)
    ticks = []
    value = first
    while value <= hi + 1e-9 * span:
        ticks.append(round(value / step) * step)
        value += step
    return ticks
