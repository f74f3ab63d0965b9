"""Distributional summaries of bar-level tempo values.

Three constructions: fixed-width histograms of BPM values, a smooth
probability density obtained by interpolating the empirical CDF with a
shape-preserving cubic and differentiating it, and Gaussian kernel
density estimates. The spline route guarantees a nonnegative density
because the interpolant is kept monotone; an unconstrained cubic through
a CDF can overshoot and differentiate to negative values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Bpm
from .errors import ValidationError

DEFAULT_BIN_WIDTH: Bpm = 2.0
DEFAULT_BIN_ORIGIN: Bpm = 0.0

_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Histogram:
    """Fixed-width bins over a BPM range.

    Bins are half-open ``[edge_k, edge_{k+1})`` except the last, which is
    closed so the maximum value lands inside the range.
    """

    bin_edges: tuple[Bpm, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        edges = tuple(float(e) for e in self.bin_edges)
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)
        if len(edges) != len(counts) + 1:
            raise ValidationError(
                f"{len(counts)} bins need {len(counts) + 1} edges, "
                f"got {len(edges)}"
            )
        if any(b >= a for a, b in zip(edges[1:], edges)):
            raise ValidationError("bin edges must be strictly increasing")
        if any(c < 0 for c in counts):
            raise ValidationError("bin counts cannot be negative")

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def relative(self) -> tuple[float, ...]:
        """Counts normalized to fractions of the total."""
        total = self.total
        if total == 0:
            return (0.0,) * len(self.counts)
        return tuple(c / total for c in self.counts)


def build_histogram(
    values: list[Bpm] | tuple[Bpm, ...],
    bin_width: Bpm = DEFAULT_BIN_WIDTH,
    origin: Bpm = DEFAULT_BIN_ORIGIN,
) -> Histogram:
    """Bin BPM values into a grid anchored at ``origin``.

    Edges sit at ``origin + k * bin_width`` for consecutive integers k,
    spanning from the smallest to the largest value.
    """
    if len(values) == 0:
        raise ValidationError("cannot build a histogram from no values")
    if bin_width <= 0:
        raise ValidationError(f"bin width must be positive, got {bin_width!r}")
    data = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(data)):
        raise ValidationError("histogram values must be finite")
    lo = math.floor((float(data.min()) - origin) / bin_width)
    hi = math.floor((float(data.max()) - origin) / bin_width) + 1
    edges = origin + bin_width * np.arange(lo, hi + 1)
    counts, _ = np.histogram(data, bins=edges)
    return Histogram(bin_edges=tuple(edges.tolist()), counts=tuple(counts.tolist()))


def empirical_cdf(hist: Histogram) -> list[tuple[Bpm, float]]:
    """Cumulative fractions at bin right edges, anchored at zero.

    The first point pins the CDF to 0 at the left edge of the first bin;
    the final fraction is exactly 1.
    """
    total = hist.total
    if total == 0:
        raise ValidationError("cannot take the CDF of an empty histogram")
    points = [(hist.bin_edges[0], 0.0)]
    running = 0
    for edge, count in zip(hist.bin_edges[1:], hist.counts):
        running += count
        points.append((edge, running / total))
    return points


@dataclass(frozen=True)
class SmoothPdf:
    """Density obtained by differentiating a monotone cubic CDF fit.

    The interpolant passes through every CDF point, is nondecreasing, and
    has zero slope clamped at both ends, so the density is continuous,
    nonnegative, exactly zero at the support boundaries, and integrates
    to 1 over the support.
    """

    knots: tuple[Bpm, ...]
    cdf_values: tuple[float, ...]
    slopes: tuple[float, ...]

    @property
    def support(self) -> tuple[Bpm, Bpm]:
        return self.knots[0], self.knots[-1]

    def _locate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        knots = np.asarray(self.knots)
        idx = np.searchsorted(knots, x, side="right") - 1
        idx = np.clip(idx, 0, len(knots) - 2)
        h = knots[idx + 1] - knots[idx]
        t = (x - knots[idx]) / h
        return idx, h, t

    def cdf(self, x) -> np.ndarray | float:
        """Interpolated CDF, clamped to 0 below and 1 above the support."""
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        idx, h, t = self._locate(arr)
        y = np.asarray(self.cdf_values)
        d = np.asarray(self.slopes)
        t2 = t * t
        t3 = t2 * t
        out = (
            y[idx] * (2 * t3 - 3 * t2 + 1)
            + y[idx + 1] * (-2 * t3 + 3 * t2)
            + h * (d[idx] * (t3 - 2 * t2 + t) + d[idx + 1] * (t3 - t2))
        )
        out = np.where(arr < self.knots[0], 0.0, out)
        out = np.where(arr > self.knots[-1], 1.0, out)
        return float(out[0]) if scalar else out

    def density(self, x) -> np.ndarray | float:
        """Derivative of the interpolated CDF; zero outside the support."""
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        idx, h, t = self._locate(arr)
        y = np.asarray(self.cdf_values)
        d = np.asarray(self.slopes)
        t2 = t * t
        out = (
            (y[idx] * (6 * t2 - 6 * t) + y[idx + 1] * (6 * t - 6 * t2)) / h
            + d[idx] * (3 * t2 - 4 * t + 1)
            + d[idx + 1] * (3 * t2 - 2 * t)
        )
        # the interpolant is nondecreasing, so the true derivative is
        # >= 0; clip the ~1e-18 cancellation residue that can appear
        # where the density touches zero
        out = np.maximum(out, 0.0)
        inside = (arr >= self.knots[0]) & (arr <= self.knots[-1])
        out = np.where(inside, out, 0.0)
        return float(out[0]) if scalar else out


def spline_pdf(cdf_points: list[tuple[Bpm, float]]) -> SmoothPdf:
    """Fit a shape-preserving cubic to CDF points and differentiate it.

    Interior slopes are the mean of the adjacent secants, limited to
    three times the smaller secant (Fritsch-Carlson style) so the fit
    never overshoots; a flat neighbouring segment forces a zero slope.
    Both endpoint slopes are clamped to zero, which pins the density to
    zero at the support boundaries instead of extrapolating tails.
    """
    if len(cdf_points) < 3:
        raise ValidationError(
            f"need at least 3 CDF points to fit a density, got {len(cdf_points)}"
        )
    xs = tuple(float(p[0]) for p in cdf_points)
    ys = tuple(float(p[1]) for p in cdf_points)
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValidationError("CDF points must have strictly increasing positions")
    if any(b < a for a, b in zip(ys, ys[1:])):
        raise ValidationError("CDF fractions must be nondecreasing")
    if abs(ys[0]) > 1e-9 or abs(ys[-1] - 1.0) > 1e-9:
        raise ValidationError(
            f"CDF must run from 0 to 1, got {ys[0]!r} .. {ys[-1]!r}"
        )

    n = len(xs)
    secants = [
        (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(n - 1)
    ]
    slopes = [0.0] * n  # endpoints stay clamped at zero
    for i in range(1, n - 1):
        left, right = secants[i - 1], secants[i]
        if left <= 0.0 or right <= 0.0:
            slopes[i] = 0.0
        else:
            slopes[i] = min((left + right) / 2.0, 3.0 * left, 3.0 * right)
    return SmoothPdf(knots=xs, cdf_values=ys, slopes=tuple(slopes))


@dataclass(frozen=True)
class KernelDensity:
    """Gaussian kernel density estimate over a BPM sample."""

    sample: tuple[Bpm, ...]
    bandwidth: Bpm

    def __post_init__(self) -> None:
        object.__setattr__(self, "sample", tuple(float(v) for v in self.sample))
        if not self.sample:
            raise ValidationError("KDE needs at least one sample value")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValidationError(
                f"bandwidth must be a positive number, got {self.bandwidth!r}"
            )

    def density(self, x) -> np.ndarray | float:
        """Mean of Gaussian kernels centred on the sample values."""
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        centers = np.asarray(self.sample)
        u = (arr[:, None] - centers[None, :]) / self.bandwidth
        out = np.exp(-0.5 * u * u).sum(axis=1) / (
            len(centers) * self.bandwidth * _SQRT_TWO_PI
        )
        return float(out[0]) if scalar else out

    def evaluation_range(self, spread: float = 5.0) -> tuple[float, float]:
        """Interval holding all but a negligible sliver of the mass."""
        return (
            min(self.sample) - spread * self.bandwidth,
            max(self.sample) + spread * self.bandwidth,
        )


def silverman_bandwidth(values: tuple[Bpm, ...] | list[Bpm]) -> Bpm:
    """Silverman's rule: ``0.9 * min(std, IQR / 1.34) * n ** (-1/5)``.

    Uses the population standard deviation. A zero interquartile range
    with nonzero spread falls back to the standard deviation so that any
    sample with at least two distinct values gets a usable bandwidth.
    """
    data = np.asarray(values, dtype=float)
    n = len(data)
    std = float(data.std())
    q1, q3 = np.percentile(data, [25.0, 75.0])
    iqr = float(q3 - q1)
    scale = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * scale * n ** (-0.2)


def kde(
    values: list[Bpm] | tuple[Bpm, ...], bandwidth: Bpm | None = None
) -> KernelDensity:
    """Gaussian KDE with Silverman bandwidth unless one is given."""
    if len(values) == 0:
        raise ValidationError("cannot estimate a density from no values")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(values)
        if bandwidth <= 0:
            raise ValidationError(
                "automatic bandwidth is zero (all values identical); "
                "pass an explicit bandwidth"
            )
    return KernelDensity(sample=tuple(values), bandwidth=float(bandwidth))
