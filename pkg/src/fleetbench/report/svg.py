"""Self-contained SVG pie charts, histograms and bar charts.

Output depends only on the input values: no timestamps, ids or random
colours, so identical inputs give byte-identical documents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

from fleetbench.aggregate import FleetDistribution

PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
           "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")
FONT = 'font-family="sans-serif" font-size="12"'


class EmptyDistribution(ValueError):
    pass


def _n(v: float) -> str:
    return f"{v:.3f}"


def _doc(width: int, height: int, title: str, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', head,
             f"<title>{escape(title)}</title>",
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" {FONT} '
             f'font-weight="bold">{escape(title)}</text>']
    return "\n".join(lines + body + ["</svg>"]) + "\n"


# -- pie ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Wedge:
    label: str
    share: float
    angle_degrees: float


@dataclass(frozen=True)
class PieSpec:
    title: str
    wedges: tuple[Wedge, ...]


def pie_spec(distribution: FleetDistribution, title: Optional[str] = None) -> PieSpec:
    if not distribution.shares:
        raise EmptyDistribution(f"{distribution.attribute}: no categories")
    total = sum(distribution.shares.values())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"shares sum to {total}, not 1")
    items = sorted(distribution.shares.items(), key=lambda kv: (-kv[1], kv[0]))
    title = title or f"{distribution.attribute} ({distribution.weighting.replace('_', ' ')})"
    return PieSpec(title, tuple(Wedge(label, share, share * 360.0) for label, share in items))


def _point(cx, cy, r, degrees):
    # 0 degrees at twelve o'clock, clockwise
    rad = math.radians(degrees)
    return cx + r * math.sin(rad), cy - r * math.cos(rad)


def render_pie(distribution: FleetDistribution | PieSpec, title: Optional[str] = None) -> str:
    spec = distribution if isinstance(distribution, PieSpec) else pie_spec(distribution, title)
    cx, cy, r = 160.0, 180.0, 130.0
    body = []
    start = 0.0
    for i, w in enumerate(spec.wedges):
        colour = PALETTE[i % len(PALETTE)]
        attrs = (f'fill="{colour}" stroke="white" data-label={quoteattr(w.label)} '
                 f'data-share="{w.share:.12g}" data-angle="{w.angle_degrees:.12g}"')
        if len(spec.wedges) == 1 or w.angle_degrees >= 360.0:
            body.append(f'<circle class="wedge" cx="{_n(cx)}" cy="{_n(cy)}" r="{_n(r)}" {attrs}/>')
        else:
            x0, y0 = _point(cx, cy, r, start)
            x1, y1 = _point(cx, cy, r, start + w.angle_degrees)
            large = 1 if w.angle_degrees > 180 else 0
            body.append(f'<path class="wedge" d="M {_n(cx)} {_n(cy)} L {_n(x0)} {_n(y0)} '
                        f'A {_n(r)} {_n(r)} 0 {large} 1 {_n(x1)} {_n(y1)} Z" {attrs}/>')
        start += w.angle_degrees
        y = 50 + 20 * i
        body.append(f'<rect x="320" y="{y - 10}" width="12" height="12" fill="{colour}"/>')
        body.append(f'<text x="338" y="{y}" {FONT}>{escape(w.label)} '
                    f'{w.share * 100:.1f}%</text>')
    height = max(340, 70 + 20 * len(spec.wedges))
    return _doc(640, height, spec.title, body)


# -- histogram -----------------------------------------------------------------------

@dataclass(frozen=True)
class HistogramSpec:
    title: str
    edges: tuple[float, ...]
    counts: tuple[int, ...]
    zoom_upper: Optional[float] = None
    overflow: int = 0


def nearest_rank(values: Sequence[float], percentile: float) -> float:
    """Smallest value with at least ``percentile`` percent of the data at or below it."""
    if not 0 < percentile <= 100:
        raise ValueError("percentile must be in (0, 100]")
    ordered = sorted(values)
    rank = math.ceil(percentile / 100 * len(ordered))
    return ordered[max(rank, 1) - 1]


def histogram_spec(values: Sequence[float], bins: int, zoom_percentile: Optional[float] = None,
                   title: str = "") -> HistogramSpec:
    if not values:
        raise ValueError("values must be non-empty")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo = min(values)
    hi = max(values) if zoom_percentile is None else nearest_rank(values, zoom_percentile)
    shown = [v for v in values if v <= hi]
    overflow = len(values) - len(shown)
    if hi == lo:
        return HistogramSpec(title, (lo, hi), (len(shown),),
                             hi if zoom_percentile is not None else None, overflow)
    width = (hi - lo) / bins
    edges = tuple(lo + i * width for i in range(bins)) + (hi,)
    counts = [0] * bins
    for v in shown:
        counts[min(int((v - lo) / width), bins - 1)] += 1
    return HistogramSpec(title, edges, tuple(counts),
                         hi if zoom_percentile is not None else None, overflow)


def render_histogram(values: Sequence[float] | HistogramSpec, bins: int = 10,
                     zoom_percentile: Optional[float] = None, title: str = "",
                     unit: str = "") -> str:
    spec = values if isinstance(values, HistogramSpec) else histogram_spec(
        values, bins, zoom_percentile, title)
    left, top, plot_w, plot_h = 60.0, 40.0, 520.0, 260.0
    peak = max(spec.counts) or 1
    bar_w = plot_w / len(spec.counts)
    body = [f'<line x1="{_n(left)}" y1="{_n(top + plot_h)}" x2="{_n(left + plot_w)}" '
            f'y2="{_n(top + plot_h)}" stroke="black"/>']
    for i, c in enumerate(spec.counts):
        h = plot_h * c / peak
        x = left + i * bar_w
        body.append(f'<rect class="bin" x="{_n(x)}" y="{_n(top + plot_h - h)}" '
                    f'width="{_n(bar_w)}" height="{_n(h)}" fill="{PALETTE[0]}" stroke="white" '
                    f'data-lo="{spec.edges[i]:.9g}" data-hi="{spec.edges[i + 1]:.9g}" '
                    f'data-count="{c}"/>')
        if c:
            body.append(f'<text x="{_n(x + bar_w / 2)}" y="{_n(top + plot_h - h - 4)}" '
                        f'text-anchor="middle" {FONT}>{c}</text>')
    for i in sorted({0, len(spec.counts)}):
        body.append(f'<text x="{_n(left + i * bar_w)}" y="{_n(top + plot_h + 16)}" '
                    f'text-anchor="middle" {FONT}>{spec.edges[i]:.4g}</text>')
    if unit:
        body.append(f'<text x="{_n(left + plot_w / 2)}" y="{_n(top + plot_h + 34)}" '
                    f'text-anchor="middle" {FONT}>{escape(unit)}</text>')
    if spec.zoom_upper is not None:
        body.append(f'<text class="overflow" x="{_n(left + plot_w)}" y="{_n(top + 12)}" '
                    f'text-anchor="end" {FONT} data-overflow="{spec.overflow}">'
                    f'{spec.overflow} value(s) above {spec.zoom_upper:.4g} not shown</text>')
    return _doc(640, 340, spec.title, body)


# -- bars ------------------------------------------------------------------------------

def render_bars(items: Sequence[tuple[str, float]], title: str, unit: str = "") -> str:
    """Horizontal bars, one per (label, value), in the given order."""
    left, top, plot_w, row_h = 160.0, 40.0, 400.0, 22.0
    peak = max((v for _, v in items), default=0) or 1
    body = []
    for i, (label, v) in enumerate(items):
        y = top + i * row_h
        w = plot_w * v / peak
        body.append(f'<text x="{_n(left - 6)}" y="{_n(y + 14)}" text-anchor="end" {FONT}>'
                    f'{escape(label)}</text>')
        body.append(f'<rect class="bar" x="{_n(left)}" y="{_n(y + 3)}" width="{_n(w)}" '
                    f'height="{_n(row_h - 6)}" fill="{PALETTE[0]}" data-value="{v:.9g}"/>')
        body.append(f'<text x="{_n(left + w + 4)}" y="{_n(y + 14)}" {FONT}>'
                    f'{v:.9g} {escape(unit)}</text>')
    return _doc(640, int(top + row_h * len(items) + 30), title, body)
