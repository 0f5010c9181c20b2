"""Minimal deterministic SVG line charts.

The experiment plots must be a pure function of their inputs (byte-identical
across runs), so this module builds the SVG by hand: fixed palette, fixed
coordinate formatting, no timestamps or generated ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError

PALETTE = ("#1f6f8b", "#d1495b", "#66a182", "#8d6a9f", "#edae49", "#2e4057")

_MARGIN_LEFT = 72.0
_MARGIN_RIGHT = 24.0
_MARGIN_TOP = 48.0
_MARGIN_BOTTOM = 56.0


@dataclass(frozen=True)
class Series:
    """One polyline: log-log data with an optional confidence band."""

    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    lo: tuple[float, ...] | None = None
    hi: tuple[float, ...] | None = None
    color: str = PALETTE[0]
    dashed: bool = False

    def __post_init__(self):
        if len(self.x) != len(self.y) or not self.x:
            raise InputError(f"series {self.label!r}: x and y must be nonempty, equal length")
        band = (self.lo is None) + (self.hi is None)
        if band == 1:
            raise InputError(f"series {self.label!r}: lo and hi must come together")
        if self.lo is not None and (
            len(self.lo) != len(self.x) or len(self.hi) != len(self.x)
        ):
            raise InputError(f"series {self.label!r}: band lengths must match x")
        for v in (*self.x, *self.y, *(self.lo or ()), *(self.hi or ())):
            if not (math.isfinite(v) and v > 0.0):
                raise InputError(
                    f"series {self.label!r}: log-log plotting needs finite positive values, got {v!r}"
                )


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _log_ticks(lo: float, hi: float) -> list[float]:
    """Decade ticks covering [lo, hi]; 2x and 5x mantissas when sparse."""
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    decades = [10.0**e for e in range(lo_e, hi_e + 1)]
    ticks = decades
    if len([t for t in decades if lo <= t <= hi]) < 3:
        ticks = sorted(
            m * 10.0**e for e in range(lo_e - 1, hi_e + 1) for m in (1.0, 2.0, 5.0)
        )
    return [t for t in ticks if lo / 1.0001 <= t <= hi * 1.0001]


def _tick_label(v: float) -> str:
    if v >= 1.0 and abs(v - round(v)) < 1e-9:
        return str(int(round(v)))
    exp = math.floor(math.log10(v))
    mant = v / 10.0**exp
    if abs(mant - 1.0) < 1e-9:
        return f"1e{exp}"
    return f"{mant:.0f}e{exp}"


def render_line_chart(
    series: list[Series],
    title: str,
    x_label: str,
    y_label: str,
    width: int = 720,
    height: int = 480,
    desc: str = "",
) -> str:
    """Render log-log polylines with optional shaded bands to an SVG string."""
    if not series:
        raise InputError("at least one series is required")

    xs = [v for s in series for v in s.x]
    ys = [v for s in series for v in (*s.y, *(s.lo or ()), *(s.hi or ()))]
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(ys), max(ys)
    if x_min == x_max:
        x_min, x_max = x_min / 2.0, x_max * 2.0
    # A little breathing room on the y axis, in log space.
    y_min, y_max = y_min / 1.3, y_max * 1.3

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(v: float) -> float:
        t = (math.log10(v) - math.log10(x_min)) / (math.log10(x_max) - math.log10(x_min))
        return _MARGIN_LEFT + t * plot_w

    def py(v: float) -> float:
        t = (math.log10(v) - math.log10(y_min)) / (math.log10(y_max) - math.log10(y_min))
        return _MARGIN_TOP + (1.0 - t) * plot_h

    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">'
    )
    if desc:
        out.append(f"<desc>{_escape(desc)}</desc>")
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    out.append(
        f'<text x="{_fmt(width / 2)}" y="24" text-anchor="middle" font-size="15">'
        f"{_escape(title)}</text>"
    )

    # Axes box.
    x0, y0 = _MARGIN_LEFT, _MARGIN_TOP
    x1, y1 = _MARGIN_LEFT + plot_w, _MARGIN_TOP + plot_h
    out.append(
        f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(plot_w)}" '
        f'height="{_fmt(plot_h)}" fill="none" stroke="#333" stroke-width="1"/>'
    )

    for t in sorted(set(xs)):
        tx = px(t)
        out.append(
            f'<line x1="{_fmt(tx)}" y1="{_fmt(y1)}" x2="{_fmt(tx)}" y2="{_fmt(y1 + 5)}" '
            f'stroke="#333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(tx)}" y="{_fmt(y1 + 20)}" text-anchor="middle" '
            f'font-size="11">{_tick_label(t)}</text>'
        )
    for t in _log_ticks(y_min, y_max):
        ty = py(t)
        out.append(
            f'<line x1="{_fmt(x0 - 5)}" y1="{_fmt(ty)}" x2="{_fmt(x0)}" y2="{_fmt(ty)}" '
            f'stroke="#333" stroke-width="1"/>'
        )
        out.append(
            f'<line x1="{_fmt(x0)}" y1="{_fmt(ty)}" x2="{_fmt(x1)}" y2="{_fmt(ty)}" '
            f'stroke="#ddd" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{_fmt(x0 - 8)}" y="{_fmt(ty + 4)}" text-anchor="end" '
            f'font-size="11">{_tick_label(t)}</text>'
        )

    out.append(
        f'<text x="{_fmt((x0 + x1) / 2)}" y="{_fmt(height - 14)}" text-anchor="middle" '
        f'font-size="12">{_escape(x_label)}</text>'
    )
    out.append(
        f'<text x="18" y="{_fmt((y0 + y1) / 2)}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {_fmt((y0 + y1) / 2)})">{_escape(y_label)}</text>'
    )

    for s in series:
        if s.lo is not None:
            fwd = [f"{_fmt(px(x))},{_fmt(py(v))}" for x, v in zip(s.x, s.hi)]
            rev = [f"{_fmt(px(x))},{_fmt(py(v))}" for x, v in zip(reversed(s.x), reversed(s.lo))]
            out.append(
                f'<polygon points="{" ".join(fwd + rev)}" fill="{s.color}" '
                f'fill-opacity="0.15" stroke="none"/>'
            )
    for s in series:
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(v))}" for x, v in zip(s.x, s.y))
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{s.color}" '
            f'stroke-width="1.8"{dash}/>'
        )
        for x, v in zip(s.x, s.y):
            out.append(
                f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(v))}" r="2.5" fill="{s.color}"/>'
            )

    # Legend, top-right inside the plot box.
    ly = y0 + 14
    for s in series:
        lx = x1 - 170
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        out.append(
            f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 4)}" x2="{_fmt(lx + 26)}" '
            f'y2="{_fmt(ly - 4)}" stroke="{s.color}" stroke-width="1.8"{dash}/>'
        )
        out.append(
            f'<text x="{_fmt(lx + 32)}" y="{_fmt(ly)}" font-size="11">{_escape(s.label)}</text>'
        )
        ly += 16

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
