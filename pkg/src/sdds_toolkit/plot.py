"""Standalone SVG rendering of column data.

Produces a deterministic SVG 1.1 subset (``svg``, ``g``, ``line``,
``circle``, ``polyline``, ``text``) so plots can be golden-tested as
text.  2-D data renders as a scatter or polyline; 3-D data is reduced
to a 2-D scatter by an orthographic projection (rotate about the
vertical axis by ``yaw``, tilt by ``pitch``, drop depth).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

__all__ = ["PlotSpec", "Axis", "nice_ticks", "project_orthographic",
           "render_svg", "DEFAULT_YAW_DEG", "DEFAULT_PITCH_DEG"]

DEFAULT_WIDTH = 800
DEFAULT_HEIGHT = 600
DEFAULT_MARGIN = 60
DEFAULT_YAW_DEG = 30.0
DEFAULT_PITCH_DEG = 20.0
MIN_CANVAS = 100
_TICK_TARGET = 6


@dataclass(frozen=True)
class PlotSpec:
    """Everything :func:`render_svg` needs; a pure value."""

    points: tuple[tuple[float, ...], ...]
    style: str = "scatter"  # or "line"
    projection: tuple[float, float] | None = None  # (yaw deg, pitch deg)
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    margin: int = DEFAULT_MARGIN
    x_label: str | None = None
    y_label: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(tuple(p) for p in self.points))


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    ticks: tuple[float, ...]
    label: str | None = None


def nice_ticks(lo: float, hi: float, target_count: int) -> list[float]:
    """Tick positions at multiples of a step 10^k * {1, 2, 5}.

    The step is the one whose tick count inside [lo, hi] is closest to
    ``target_count`` (ties go to the larger step).
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("tick bounds must be finite")
    if not lo < hi:
        raise ValueError("tick range must satisfy lo < hi")
    if not 2 <= target_count <= 20:
        raise ValueError("target_count must be within 2..20")

    span = hi - lo
    k_hi = math.ceil(math.log10(span)) + 1
    best: tuple[int, int, int, int, int] | None = None
    # steps visited in strictly descending order, so on a tied score the
    # larger step wins
    for k in range(k_hi, k_hi - 6, -1):
        for m in (5, 2, 1):
            step = _exact_step(m, k)
            if step == 0.0 or not math.isfinite(step):
                continue
            try:
                first = math.ceil(lo / step)
                last = math.floor(hi / step)
            except (OverflowError, ValueError):
                continue
            count = last - first + 1
            if count < 2:
                continue
            score = abs(count - target_count)
            if best is None or score < best[0]:
                best = (score, first, last, m, k)
    if best is None:  # pragma: no cover - span>0 always yields candidates
        raise ValueError("no usable tick step found")
    _, first, last, m, k = best
    return [_tick_value(j * m, k) for j in range(first, last + 1)]


def _exact_step(m: int, k: int) -> float:
    return m * 10.0 ** k if k >= 0 else m / 10.0 ** (-k)


def _tick_value(scaled: int, k: int) -> float:
    # single rounding: integer times/over an exact power of ten
    return scaled * 10.0 ** k if k >= 0 else scaled / 10.0 ** (-k)


def project_orthographic(point: tuple[float, float, float], yaw_deg: float,
                         pitch_deg: float) -> tuple[float, float]:
    """Rotate about the vertical axis, tilt, and drop depth."""
    x, y, z = point
    yaw = math.radians(yaw_deg)
    pitch = math.radians(pitch_deg)
    u = x * math.cos(yaw) + y * math.sin(yaw)
    depth = -x * math.sin(yaw) + y * math.cos(yaw)
    v = z * math.cos(pitch) - depth * math.sin(pitch)
    return u, v


def _display_range(values: list[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if lo == hi:
        return lo - 0.5, hi + 0.5
    return lo, hi


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _fmt_tick(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def render_svg(spec: PlotSpec) -> bytes:
    """Render a spec to SVG bytes; identical specs give identical bytes."""
    if not spec.points:
        raise ValueError("empty point list")
    if spec.width < MIN_CANVAS or spec.height < MIN_CANVAS:
        raise ValueError(f"canvas must be at least {MIN_CANVAS}x{MIN_CANVAS}")
    if spec.style not in ("scatter", "line"):
        raise ValueError(f"unknown style {spec.style!r}")

    pts: list[tuple[float, float]]
    if len(spec.points[0]) == 3:
        yaw, pitch = spec.projection or (DEFAULT_YAW_DEG, DEFAULT_PITCH_DEG)
        pts = [project_orthographic(p, yaw, pitch) for p in spec.points]
    else:
        pts = [(p[0], p[1]) for p in spec.points]
    for u, v in pts:
        if not (math.isfinite(u) and math.isfinite(v)):
            raise ValueError("points must be finite")

    x_lo, x_hi = _display_range([p[0] for p in pts])
    y_lo, y_hi = _display_range([p[1] for p in pts])
    x_axis = Axis(x_lo, x_hi, tuple(nice_ticks(x_lo, x_hi, _TICK_TARGET)),
                  spec.x_label)
    y_axis = Axis(y_lo, y_hi, tuple(nice_ticks(y_lo, y_hi, _TICK_TARGET)),
                  spec.y_label)

    m = spec.margin
    plot_w = spec.width - 2 * m
    plot_h = spec.height - 2 * m

    def sx(x: float) -> float:
        return m + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return spec.height - m - (y - y_lo) / (y_hi - y_lo) * plot_h

    out: list[str] = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" '
               f'width="{spec.width}" height="{spec.height}" '
               f'viewBox="0 0 {spec.width} {spec.height}">')

    # axis frame
    x0, x1 = _fmt(m), _fmt(spec.width - m)
    y0, y1 = _fmt(spec.height - m), _fmt(m)
    out.append('<g stroke="black" stroke-width="1">')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>')
    for t in x_axis.ticks:
        u = _fmt(sx(t))
        out.append(f'<line x1="{u}" y1="{y0}" x2="{u}" '
                   f'y2="{_fmt(spec.height - m + 6)}"/>')
    for t in y_axis.ticks:
        v = _fmt(sy(t))
        out.append(f'<line x1="{_fmt(m - 6)}" y1="{v}" x2="{x0}" y2="{v}"/>')
    out.append("</g>")

    out.append('<g font-family="monospace" font-size="12" fill="black">')
    for t in x_axis.ticks:
        out.append(f'<text x="{_fmt(sx(t))}" y="{_fmt(spec.height - m + 20)}" '
                   f'text-anchor="middle">{escape(_fmt_tick(t))}</text>')
    for t in y_axis.ticks:
        out.append(f'<text x="{_fmt(m - 10)}" y="{_fmt(sy(t) + 4)}" '
                   f'text-anchor="end">{escape(_fmt_tick(t))}</text>')
    if x_axis.label:
        out.append(f'<text x="{_fmt(m + plot_w / 2)}" '
                   f'y="{_fmt(spec.height - m + 40)}" '
                   f'text-anchor="middle">{escape(x_axis.label)}</text>')
    if y_axis.label:
        out.append(f'<text x="{_fmt(m)}" y="{_fmt(m - 12)}" '
                   f'text-anchor="middle">{escape(y_axis.label)}</text>')
    out.append("</g>")

    if spec.style == "line":
        coords = " ".join(f"{_fmt(sx(u))},{_fmt(sy(v))}" for u, v in pts)
        out.append(f'<g stroke="steelblue" stroke-width="1.5" fill="none">'
                   f'<polyline points="{coords}"/></g>')
    else:
        out.append('<g fill="steelblue">')
        for u, v in pts:
            out.append(f'<circle cx="{_fmt(sx(u))}" cy="{_fmt(sy(v))}" r="3"/>')
        out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")
