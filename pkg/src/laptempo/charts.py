"""The five chart types, emitted as deterministic SVG.

Every renderer is a pure function from (data, spec) to bytes: no clocks,
no randomness, no library styling state. Rendering the same corpus with
the same spec twice yields byte-identical documents, so the test suite
pins golden files.

Axis convention: SVG y grows downward, so larger data values map to
smaller y coordinates.
"""

from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass

import numpy as np

from . import palette
from .analysis import SectionMap, recording_summary, section_proportions
from .core import Bpm, CorpusEntry, MovementCorpus, TempoSeries
from .distributions import build_histogram, empirical_cdf, kde, spline_pdf
from .errors import ValidationError
from .svg import LinearScale, SvgBuilder, SvgDocument, fmt, nice_ticks

FOCUSED_MAX_RECORDINGS = 5
FOCUSED_MAX_SPAN = 100

PDF_CURVE_COLOR = "#d62728"  # the density curve is drawn in red
GRID_COLOR = "#d0d0d0"
AXIS_COLOR = "#333333"

_MARGIN_LEFT = 62.0
_MARGIN_RIGHT = 24.0
_MARGIN_TOP = 30.0
_MARGIN_BOTTOM = 46.0


class ChartKind(enum.Enum):
    TEMPOGRAPH_FOCUSED = "tempograph_focused"
    TEMPOGRAPH_GRID = "tempograph_grid"
    HISTOGRAM_PDF = "histogram_pdf"
    RIDGELINE = "ridgeline"
    STACKED_SECTIONS = "stacked_sections"
    COMBINATION = "combination"

    def __str__(self) -> str:
        return self.value


class Palette(enum.Enum):
    COOLWARM = "coolwarm"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ChartSpec:
    """Declarative description of one figure."""

    kind: ChartKind
    recording_labels: tuple[str, ...] = ()
    bar_span: tuple[int, int] | None = None
    bin_width: Bpm | None = None
    reference_lines: tuple[tuple[str, Bpm], ...] = ()
    bar_markers: tuple[tuple[str, int], ...] = ()
    palette: Palette = Palette.CATEGORICAL
    width: int = 800
    height: int = 480
    grid_shared_y: bool = True

    def __post_init__(self) -> None:
        if self.width < 100 or self.height < 100:
            raise ValidationError("chart must be at least 100x100 pixels")
        if self.bin_width is not None and self.bin_width <= 0:
            raise ValidationError(f"bin width must be positive, got {self.bin_width}")


def _entries_for(corpus: MovementCorpus, spec: ChartSpec) -> list[CorpusEntry]:
    if not spec.recording_labels:
        return list(corpus.entries)
    return [corpus.get(label) for label in spec.recording_labels]


def _series_color(spec: ChartSpec, index: int, count: int) -> str:
    if spec.palette is Palette.COOLWARM:
        return palette.coolwarm(palette.normalized(index, 0, max(1, count - 1)))
    return palette.categorical(index)


def _plot_area(spec: ChartSpec) -> tuple[float, float, float, float]:
    return (
        _MARGIN_LEFT,
        _MARGIN_TOP,
        spec.width - _MARGIN_RIGHT,
        spec.height - _MARGIN_BOTTOM,
    )


def _background(svg: SvgBuilder) -> None:
    svg.rect(0, 0, svg.width, svg.height, fill="#ffffff")


def _y_axis(
    svg: SvgBuilder,
    scale: LinearScale,
    ticks: list[float],
    x_left: float,
    x_right: float,
    label: str,
    gridlines: bool = True,
) -> None:
    for tick in ticks:
        y = scale(tick)
        if gridlines:
            svg.line(x_left, y, x_right, y, stroke=GRID_COLOR, **{"stroke-width": "1"})
        svg.text(x_left - 6, y + 3.5, _tick_text(tick), size=10, anchor="end")
    svg.text(
        14,
        (scale.p0 + scale.p1) / 2,
        label,
        size=11,
        anchor="middle",
        transform=f"rotate(-90 14 {fmt((scale.p0 + scale.p1) / 2)})",
    )


def _x_axis(
    svg: SvgBuilder,
    scale: LinearScale,
    ticks: list[float],
    y_bottom: float,
    label: str,
) -> None:
    for tick in ticks:
        x = scale(tick)
        svg.line(x, y_bottom, x, y_bottom + 4, stroke=AXIS_COLOR, **{"stroke-width": "1"})
        svg.text(x, y_bottom + 16, _tick_text(tick), size=10, anchor="middle")
    svg.text(
        (scale.p0 + scale.p1) / 2,
        y_bottom + 34,
        label,
        size=11,
        anchor="middle",
    )


def _tick_text(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return fmt(value).rstrip("0").rstrip(".")


def _frame(svg: SvgBuilder, x0: float, y0: float, x1: float, y1: float) -> None:
    svg.rect(
        x0,
        y0,
        x1 - x0,
        y1 - y0,
        fill="none",
        stroke=AXIS_COLOR,
        **{"stroke-width": "1"},
    )


def render_tempograph(corpus: MovementCorpus, spec: ChartSpec) -> SvgDocument:
    """BPM against bar index: focused overlay or small-multiple grid."""
    if spec.kind not in (ChartKind.TEMPOGRAPH_FOCUSED, ChartKind.TEMPOGRAPH_GRID):
        raise ValidationError(f"render_tempograph cannot draw {spec.kind}")
    entries = _entries_for(corpus, spec)
    if not entries:
        raise ValidationError("no recordings to draw")
    if spec.kind is ChartKind.TEMPOGRAPH_FOCUSED:
        return _render_tempograph_focused(corpus, entries, spec)
    return _render_tempograph_grid(corpus, entries, spec)


def _render_tempograph_focused(
    corpus: MovementCorpus, entries: list[CorpusEntry], spec: ChartSpec
) -> SvgDocument:
    if len(entries) > FOCUSED_MAX_RECORDINGS:
        raise ValidationError(
            f"focused tempograph overlays at most {FOCUSED_MAX_RECORDINGS} "
            f"recordings, got {len(entries)}"
        )
    bars = corpus.meter.bar_count
    span = spec.bar_span or (1, bars)
    lo_bar, hi_bar = span
    if not (1 <= lo_bar <= hi_bar <= bars):
        raise ValidationError(f"bar span {span} invalid for {bars} bars")
    if hi_bar - lo_bar + 1 > FOCUSED_MAX_SPAN:
        raise ValidationError(
            f"focused tempograph spans at most {FOCUSED_MAX_SPAN} bars, "
            f"got {hi_bar - lo_bar + 1}"
        )

    values = [
        entry.series.bpm[lo_bar - 1 : hi_bar] for entry in entries
    ]
    y_lo = min(min(v) for v in values)
    y_hi = max(max(v) for v in values)
    pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else 5.0
    x0, y0, x1, y1 = _plot_area(spec)
    sx = LinearScale(lo_bar, hi_bar, x0, x1)
    sy = LinearScale(y_lo - pad, y_hi + pad, y1, y0)

    svg = SvgBuilder(spec.width, spec.height)
    _background(svg)
    _y_axis(svg, sy, nice_ticks(y_lo - pad, y_hi + pad), x0, x1, "BPM")
    _x_axis(svg, sx, nice_ticks(lo_bar, hi_bar, 8), y1, "bar")
    _frame(svg, x0, y0, x1, y1)

    for label, bar in spec.bar_markers:
        if lo_bar <= bar <= hi_bar:
            x = sx(bar)
            svg.line(
                x, y0, x, y1,
                stroke="#888888",
                **{"stroke-width": "1", "stroke-dasharray": "4 3"},
            )
            svg.text(x + 3, y0 + 11, label, size=10)

    for i, entry in enumerate(entries):
        color = _series_color(spec, i, len(entries))
        points = [
            (sx(bar), sy(entry.series.bpm[bar - 1]))
            for bar in range(lo_bar, hi_bar + 1)
        ]
        svg.polyline(points, stroke=color, **{"stroke-width": "1.5"})
        swatch_y = y0 + 8 + 14 * i
        svg.rect(x1 - 150, swatch_y - 7, 10, 10, fill=color)
        svg.text(x1 - 136, swatch_y + 2, entry.meta.label, size=10)
    return svg.to_bytes()


def _render_tempograph_grid(
    corpus: MovementCorpus, entries: list[CorpusEntry], spec: ChartSpec
) -> SvgDocument:
    bars = corpus.meter.bar_count
    ncols = min(3, len(entries))
    nrows = math.ceil(len(entries) / ncols)
    cell_w = (spec.width - _MARGIN_LEFT - _MARGIN_RIGHT) / ncols
    cell_h = (spec.height - _MARGIN_TOP - _MARGIN_BOTTOM) / nrows
    pad_x, pad_y, title_h = 8.0, 6.0, 14.0

    if spec.grid_shared_y:
        y_lo = min(min(e.series.bpm) for e in entries)
        y_hi = max(max(e.series.bpm) for e in entries)

    svg = SvgBuilder(spec.width, spec.height)
    _background(svg)
    for i, entry in enumerate(entries):
        row, col = divmod(i, ncols)
        cx0 = _MARGIN_LEFT + col * cell_w + pad_x
        cy0 = _MARGIN_TOP + row * cell_h + title_h
        cx1 = _MARGIN_LEFT + (col + 1) * cell_w - pad_x
        cy1 = _MARGIN_TOP + (row + 1) * cell_h - pad_y
        if not spec.grid_shared_y:
            y_lo = min(entry.series.bpm)
            y_hi = max(entry.series.bpm)
        pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else 5.0
        sx = LinearScale(1, bars, cx0, cx1)
        sy = LinearScale(y_lo - pad, y_hi + pad, cy1, cy0)
        svg.text(cx0, cy0 - 4, entry.meta.label, size=10)
        _frame(svg, cx0, cy0, cx1, cy1)
        points = [
            (sx(bar), sy(entry.series.bpm[bar - 1])) for bar in range(1, bars + 1)
        ]
        svg.polyline(points, stroke=palette.categorical(0), **{"stroke-width": "1"})
        if col == 0:
            for tick in nice_ticks(y_lo, y_hi, 3):
                svg.text(cx0 - 3, sy(tick) + 3, _tick_text(tick), size=8, anchor="end")
        if row == nrows - 1:
            for tick in nice_ticks(1, bars, 3):
                svg.text(sx(tick), cy1 + 11, _tick_text(tick), size=8, anchor="middle")
    svg.text(
        spec.width / 2,
        spec.height - 8,
        "bar (BPM per panel)",
        size=11,
        anchor="middle",
    )
    return svg.to_bytes()


def render_histogram_pdf(series: TempoSeries, spec: ChartSpec) -> SvgDocument:
    """Relative-frequency bars with the smoothed density curve in red."""
    if len(series) == 0:
        raise ValidationError("cannot plot an empty series")
    bin_width = spec.bin_width if spec.bin_width is not None else 2.0
    hist = build_histogram(list(series.bpm), bin_width=bin_width)
    relative = hist.relative
    edges = hist.bin_edges

    degenerate = len(hist.counts) < 2
    curve: tuple[np.ndarray, np.ndarray] | None = None
    if not degenerate:
        pdf = spline_pdf(empirical_cdf(hist))
        xs = np.linspace(edges[0], edges[-1], 257)
        # scale by bin width so the curve's area matches the bars' area
        ys = pdf.density(xs) * bin_width
        curve = (xs, ys)

    y_top = max(relative)
    if curve is not None:
        y_top = max(y_top, float(curve[1].max()))
    x0, y0, x1, y1 = _plot_area(spec)
    sx = LinearScale(edges[0], edges[-1], x0, x1)
    sy = LinearScale(0.0, y_top * 1.08, y1, y0)

    svg = SvgBuilder(spec.width, spec.height)
    _background(svg)
    _y_axis(svg, sy, nice_ticks(0.0, y_top * 1.08, 4), x0, x1, "relative frequency")
    _x_axis(svg, sx, nice_ticks(edges[0], edges[-1], 7), y1, "BPM")
    _frame(svg, x0, y0, x1, y1)

    for k, rel in enumerate(relative):
        if rel == 0:
            continue
        bx0 = sx(edges[k])
        bx1 = sx(edges[k + 1])
        by = sy(rel)
        svg.rect(
            bx0,
            by,
            bx1 - bx0,
            y1 - by,
            fill="#9ecae1",
            stroke="#4a7dab",
            **{"stroke-width": "0.5"},
        )

    if curve is not None:
        xs, ys = curve
        points = [(sx(float(x)), sy(float(y))) for x, y in zip(xs, ys)]
        svg.polyline(points, stroke=PDF_CURVE_COLOR, **{"stroke-width": "1.8"})
    else:
        # single occupied bin: a smooth density is undefined, so mark the
        # lone tempo with a spike instead
        x = sx((edges[0] + edges[-1]) / 2.0)
        svg.line(x, y1, x, sy(relative[0]), stroke=PDF_CURVE_COLOR, **{"stroke-width": "1.8"})
        svg.circle(x, sy(relative[0]), 3.0, fill=PDF_CURVE_COLOR)
    return svg.to_bytes()


def render_ridgeline(corpus: MovementCorpus, spec: ChartSpec) -> SvgDocument:
    """Stacked per-recording tempo densities on one shared BPM axis."""
    entries = _entries_for(corpus, spec)
    if len(entries) < 2:
        raise ValidationError(
            f"ridgeline compares at least 2 recordings, got {len(entries)}"
        )
    estimates = []
    for entry in entries:
        values = list(entry.series.bpm)
        try:
            estimate = kde(values)
        except ValidationError:
            # all bars at one tempo: fall back to a narrow fixed kernel
            estimate = kde(values, bandwidth=1.0)
        estimates.append(estimate)

    means = [statistics.fmean(e.series.bpm) for e in entries]
    mean_lo, mean_hi = min(means), max(means)
    h_max = max(est.bandwidth for est in estimates)
    x_lo = min(min(e.series.bpm) for e in entries) - 3.0 * h_max
    x_hi = max(max(e.series.bpm) for e in entries) + 3.0 * h_max
    grid = np.linspace(x_lo, x_hi, 241)
    densities = [est.density(grid) for est in estimates]
    d_max = max(float(d.max()) for d in densities)

    x0, y0, x1, y1 = _plot_area(spec)
    label_gutter = 120.0
    plot_x0 = x0 + label_gutter
    sx = LinearScale(x_lo, x_hi, plot_x0, x1)
    n = len(entries)
    band = (y1 - y0) / n
    amplitude = band * 0.92 / d_max if d_max > 0 else 0.0

    svg = SvgBuilder(spec.width, spec.height)
    _background(svg)
    for tick in nice_ticks(x_lo, x_hi, 7):
        x = sx(tick)
        svg.line(x, y0, x, y1, stroke=GRID_COLOR, **{"stroke-width": "1"})
        svg.text(x, y1 + 14, _tick_text(tick), size=10, anchor="middle")
    svg.text((plot_x0 + x1) / 2, y1 + 32, "BPM", size=11, anchor="middle")

    for i, (entry, density) in enumerate(zip(entries, densities)):
        baseline = y0 + band * (i + 1)
        color = palette.coolwarm(palette.normalized(means[i], mean_lo, mean_hi))
        points = [(sx(float(x)), baseline - amplitude * float(d)) for x, d in zip(grid, density)]
        polygon = [(sx(x_lo), baseline), *points, (sx(x_hi), baseline)]
        svg.polygon(
            polygon,
            fill=color,
            stroke="#444444",
            **{"stroke-width": "0.8", "fill-opacity": "0.9"},
        )
        meta = entry.meta
        svg.text(
            plot_x0 - 8,
            baseline - 3,
            f"{meta.label} ({meta.performer}, {meta.year})",
            size=9,
            anchor="end",
        )
    return svg.to_bytes()


def render_stacked_sections(
    corpus: MovementCorpus, sections: SectionMap, spec: ChartSpec
) -> SvgDocument:
    """One bar per recording, split by each section's share of duration."""
    entries = _entries_for(corpus, spec)
    if not entries:
        raise ValidationError("no recordings to draw")
    if sections.last_bar != corpus.meter.bar_count:
        raise ValidationError(
            f"sections cover bars 1..{sections.last_bar} but the movement "
            f"has {corpus.meter.bar_count} bars"
        )
    x0, y0, x1, y1 = _plot_area(spec)
    n = len(entries)
    slot = (x1 - x0) / n
    bar_w = slot * 0.6

    svg = SvgBuilder(spec.width, spec.height)
    _background(svg)
    sy = LinearScale(0.0, 1.0, y1, y0)
    _y_axis(svg, sy, [0.0, 0.25, 0.5, 0.75, 1.0], x0, x1, "share of duration")
    _frame(svg, x0, y0, x1, y1)

    for k, section in enumerate(sections.sections):
        swatch_x = x0 + 8 + 130 * k
        svg.rect(swatch_x, y0 - 22, 10, 10, fill=palette.categorical(k))
        svg.text(swatch_x + 14, y0 - 13, section.name, size=10)

    for i, entry in enumerate(entries):
        shares = section_proportions(entry.laps, sections)
        cx = x0 + slot * (i + 0.5)
        top = y0
        for k, share in enumerate(shares):
            seg_h = share * (y1 - y0)
            svg.rect(
                cx - bar_w / 2,
                top,
                bar_w,
                seg_h,
                fill=palette.categorical(k),
                stroke="#ffffff",
                **{"stroke-width": "0.5"},
            )
            top += seg_h
        svg.text(cx, y1 + 14, entry.meta.label, size=9, anchor="middle")
    svg.text((x0 + x1) / 2, y1 + 32, "recording", size=11, anchor="middle")
    return svg.to_bytes()


def render_combination(corpus: MovementCorpus, spec: ChartSpec) -> SvgDocument:
    """Mean BPM bars with a bar-level variability line and reference marks."""
    entries = _entries_for(corpus, spec)
    if not entries:
        raise ValidationError("no recordings to draw")
    summaries = [recording_summary(e.series) for e in entries]
    means = [s.mean_bpm for s in summaries]
    stds = [s.std_bpm for s in summaries]
    ref_values = [v for _, v in spec.reference_lines]

    primary_hi = max([*means, *ref_values]) * 1.12
    secondary_hi = max(max(stds) * 1.25, 1.0)
    x0, y0, x1, y1 = _plot_area(spec)
    x1 = x1 - 36  # leave room for the secondary axis labels
    n = len(entries)
    slot = (x1 - x0) / n
    bar_w = slot * 0.55
    sy = LinearScale(0.0, primary_hi, y1, y0)
    sy2 = LinearScale(0.0, secondary_hi, y1, y0)

    svg = SvgBuilder(spec.width, spec.height)
    _background(svg)
    _y_axis(svg, sy, nice_ticks(0.0, primary_hi, 5), x0, x1, "mean BPM")
    _frame(svg, x0, y0, x1, y1)

    for tick in nice_ticks(0.0, secondary_hi, 4):
        y = sy2(tick)
        svg.text(x1 + 6, y + 3.5, _tick_text(tick), size=10)
    svg.text(
        spec.width - 10,
        (y0 + y1) / 2,
        "std of bar-level BPM",
        size=11,
        anchor="middle",
        transform=(
            f"rotate(90 {fmt(spec.width - 10)} {fmt((y0 + y1) / 2)})"
        ),
    )

    for i, entry in enumerate(entries):
        cx = x0 + slot * (i + 0.5)
        top = sy(means[i])
        svg.rect(
            cx - bar_w / 2,
            top,
            bar_w,
            y1 - top,
            fill=palette.categorical(0),
            **{"fill-opacity": "0.85"},
        )
        svg.text(cx, y1 + 14, entry.meta.label, size=9, anchor="middle")

    for label, value in spec.reference_lines:
        y = sy(value)
        svg.line(
            x0, y, x1, y,
            stroke="#555555",
            **{"stroke-width": "1", "stroke-dasharray": "6 3"},
        )
        svg.text(x0 + 4, y - 4, label, size=9)

    line_points = [
        (x0 + slot * (i + 0.5), sy2(stds[i])) for i in range(n)
    ]
    svg.polyline(line_points, stroke=palette.categorical(3), **{"stroke-width": "1.5"})
    for x, y in line_points:
        svg.circle(x, y, 3.0, fill=palette.categorical(3))
    svg.text((x0 + x1) / 2, y1 + 32, "recording", size=11, anchor="middle")
    return svg.to_bytes()


def render_chart(
    corpus: MovementCorpus,
    spec: ChartSpec,
    sections: SectionMap | None = None,
) -> SvgDocument:
    """Dispatch a spec to its renderer."""
    if spec.kind in (ChartKind.TEMPOGRAPH_FOCUSED, ChartKind.TEMPOGRAPH_GRID):
        return render_tempograph(corpus, spec)
    if spec.kind is ChartKind.HISTOGRAM_PDF:
        entries = _entries_for(corpus, spec)
        if not entries:
            raise ValidationError("no recordings to draw")
        return render_histogram_pdf(entries[0].series, spec)
    if spec.kind is ChartKind.RIDGELINE:
        return render_ridgeline(corpus, spec)
    if spec.kind is ChartKind.STACKED_SECTIONS:
        if sections is None:
            raise ValidationError("stacked_sections needs a section map")
        return render_stacked_sections(corpus, sections, spec)
    if spec.kind is ChartKind.COMBINATION:
        return render_combination(corpus, spec)
    raise ValidationError(f"unknown chart kind {spec.kind!r}")
