"""Monte Carlo verification of the reaction-time error model.

Synthetic lap sequences with known tempo are perturbed by per-press
jitter, and the resulting per-bar BPM errors are checked against three
claims: they are unbiased (random, not systematic), they do not
accumulate beyond adjacent bars, and aggregate tempi over a section
depend only on the section's boundary timestamps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .analysis import section_tempo
from .core import (
    Bpm,
    LapSequence,
    MeterMap,
    Seconds,
    compute_tempo_series,
    duration_from_bpm,
)
from .errors import ValidationError

#: Relative tolerance for the Monte Carlo std against the first-order
#: propagation formula; absorbs the curvature of 1/duration.
STD_REL_TOLERANCE = 0.10


class JitterDistribution(enum.Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class JitterModel:
    """Per-press timing noise.

    ``scale`` is the half-width of the uniform band or the Gaussian
    sigma. Zero scale is allowed as the degenerate noise-free model so
    that dry runs produce all-zero error reports.
    """

    distribution: JitterDistribution = JitterDistribution.UNIFORM
    scale: Seconds = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scale < 0 or not math.isfinite(self.scale):
            raise ValidationError(f"jitter scale must be >= 0, got {self.scale!r}")

    @property
    def press_sigma(self) -> Seconds:
        """Standard deviation of a single press error."""
        if self.distribution is JitterDistribution.UNIFORM:
            return self.scale / math.sqrt(3.0)
        return self.scale


def synth_laps(true_bpm_curve: list[Bpm], meter: MeterMap) -> LapSequence:
    """Build the exact lap sequence a perfect annotator would record."""
    if len(true_bpm_curve) != meter.bar_count:
        raise ValidationError(
            f"curve has {len(true_bpm_curve)} bars, meter defines "
            f"{meter.bar_count}"
        )
    beats = meter.beats_per_bar()
    durations = [duration_from_bpm(b, n) for b, n in zip(true_bpm_curve, beats)]
    return LapSequence(tuple(np.cumsum(durations).tolist()))


def _draw(rng: np.random.Generator, model: JitterModel, size: int) -> np.ndarray:
    if model.distribution is JitterDistribution.UNIFORM:
        return rng.uniform(-model.scale, model.scale, size)
    return rng.normal(0.0, model.scale, size)


def _jitter_timestamps(
    base: np.ndarray, model: JitterModel, rng: np.random.Generator
) -> tuple[np.ndarray, int]:
    """Perturb each timestamp, resampling any draw that breaks monotonicity.

    Resampling (rather than clamping) keeps the noise distribution
    symmetric. Returns the perturbed sequence and the number of redraws.
    """
    out = base + _draw(rng, model, len(base))
    rejections = 0
    while True:
        bounded_below = np.concatenate(([0.0], out[:-1]))
        bad = np.flatnonzero(out <= bounded_below)
        if bad.size == 0:
            return out, rejections
        rejections += int(bad.size)
        out[bad] = base[bad] + _draw(rng, model, bad.size)


def apply_jitter(laps: LapSequence, model: JitterModel) -> LapSequence:
    """Independently perturb every timestamp of a lap sequence.

    Deterministic for a fixed ``model.seed``.
    """
    rng = np.random.default_rng(model.seed)
    jittered, _ = _jitter_timestamps(
        np.asarray(laps.timestamps), model, rng
    )
    return LapSequence(
        tuple(jittered.tolist()),
        anacrusis_duration=laps.anacrusis_duration,
        reported_total=laps.reported_total,
    )


@dataclass(frozen=True)
class SimReport:
    """Outcome of one simulation run, with its pass/fail gates.

    ``mean_bias`` is the raw mean of the per-bar BPM errors. Because the
    tempo formula is convex in the bar duration, symmetric press jitter
    produces a small deterministic upward drift of about
    ``beats * 60 * var(duration error) / duration**3`` per bar;
    ``predicted_bias`` is that drift. The randomness check therefore
    compares the measured bias against the predicted drift, not against
    zero: any residual beyond sampling noise would indicate a genuinely
    directional press error.
    """

    trials: int
    bars: int
    per_bar_bpm_error_std: Bpm
    analytic_prediction: Bpm
    mean_bias: Bpm
    predicted_bias: Bpm
    bias_bound: Bpm
    lag1_autocorrelation: float
    lag2_autocorrelation: float
    autocorr_bound: float
    section_error_interior_independence: bool
    rejections: int

    @property
    def std_matches_analytic(self) -> bool:
        if self.analytic_prediction == 0.0:
            return self.per_bar_bpm_error_std == 0.0
        rel = abs(self.per_bar_bpm_error_std - self.analytic_prediction)
        return rel / self.analytic_prediction <= STD_REL_TOLERANCE

    @property
    def bias_is_random(self) -> bool:
        return abs(self.mean_bias - self.predicted_bias) <= self.bias_bound

    @property
    def errors_do_not_accumulate(self) -> bool:
        return abs(self.lag2_autocorrelation) <= self.autocorr_bound

    @property
    def passed(self) -> bool:
        return (
            self.std_matches_analytic
            and self.bias_is_random
            and self.errors_do_not_accumulate
            and self.section_error_interior_independence
        )

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "bars": self.bars,
            "per_bar_bpm_error_std": self.per_bar_bpm_error_std,
            "analytic_prediction": self.analytic_prediction,
            "mean_bias": self.mean_bias,
            "predicted_bias": self.predicted_bias,
            "bias_bound": self.bias_bound,
            "lag1_autocorrelation": self.lag1_autocorrelation,
            "lag2_autocorrelation": self.lag2_autocorrelation,
            "autocorr_bound": self.autocorr_bound,
            "section_error_interior_independence": (
                self.section_error_interior_independence
            ),
            "rejections": self.rejections,
            "checks": {
                "std_matches_analytic": self.std_matches_analytic,
                "bias_is_random": self.bias_is_random,
                "errors_do_not_accumulate": self.errors_do_not_accumulate,
                "section_error_interior_independence": (
                    self.section_error_interior_independence
                ),
            },
            "passed": self.passed,
        }


def _lagged_correlation(errors: np.ndarray, lag: int) -> float:
    """Pooled Pearson correlation between bar errors ``lag`` apart."""
    if errors.shape[1] <= lag:
        return 0.0
    a = errors[:, :-lag].ravel()
    b = errors[:, lag:].ravel()
    sa = a.std()
    sb = b.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def run_simulation(
    curve: list[Bpm],
    meter: MeterMap,
    model: JitterModel,
    trials: int,
) -> SimReport:
    """Jitter a synthetic movement ``trials`` times and grade the errors.

    The analytic comparison value propagates the per-press sigma through
    the first-order derivative of the tempo formula; each bar duration
    sees two independent press errors, hence the sqrt(2). The section
    check jitters only the interior timestamps of a fixed span and
    demands bit-exact equality of the aggregate tempo, which is the
    non-accumulation claim in its sharpest form.
    """
    if trials < 1:
        raise ValidationError(f"need at least one trial, got {trials}")
    base_laps = synth_laps(curve, meter)
    base = np.asarray(base_laps.timestamps)
    bars = meter.bar_count
    true_bpm = np.asarray(compute_tempo_series(base_laps, meter).bpm)
    beats = np.asarray([float(n) for n in meter.beats_per_bar()])
    durations = np.diff(base, prepend=0.0)

    errors = np.empty((trials, bars))
    rejections = 0
    for t in range(trials):
        rng = np.random.default_rng([model.seed, t])
        jittered, rej = _jitter_timestamps(base, model, rng)
        rejections += rej
        jittered_bpm = beats * 60.0 / np.diff(jittered, prepend=0.0)
        errors[t] = jittered_bpm - true_bpm

    sigma_press = model.press_sigma
    sigma_duration = sigma_press * math.sqrt(2.0)
    per_bar_prediction = beats * 60.0 / (durations * durations) * sigma_duration
    analytic = float(np.sqrt(np.mean(per_bar_prediction**2)))

    # deterministic convexity drift of beats*60/duration; the first bar
    # has only one jittered boundary (the downbeat is the fixed origin)
    duration_var = np.full(bars, 2.0 * sigma_press**2)
    duration_var[0] = sigma_press**2
    predicted_bias = float(
        np.mean(beats * 60.0 * duration_var / durations**3)
    )

    std = float(errors.std())
    bias = float(errors.mean())

    # hold the boundary timestamps of a fixed span, jitter only its
    # interior, and require the aggregate tempo to be untouched
    if bars >= 4:
        span = (2, bars - 1)
    else:
        span = (1, bars)
    # 0-based indices of the timestamps strictly inside the span: the
    # span duration reads T[to_bar] - T[from_bar - 1], so everything
    # between those two presses is interior
    interior = np.arange(span[0] - 1, span[1] - 1)
    reference = section_tempo(base_laps, meter, span)
    section_invariant = True
    for t in range(min(trials, 200)):
        rng = np.random.default_rng([model.seed, trials + t])
        held = base.copy()
        if interior.size:
            draws = _draw(rng, model, interior.size)
            held[interior] = base[interior] + draws
            order = np.diff(np.concatenate(([0.0], held)))
            if np.any(order <= 0):
                continue  # skip draws that break monotonicity
        perturbed = section_tempo(
            LapSequence(tuple(held.tolist())), meter, span
        )
        if perturbed != reference:
            section_invariant = False
            break

    return SimReport(
        trials=trials,
        bars=bars,
        per_bar_bpm_error_std=std,
        analytic_prediction=analytic,
        mean_bias=bias,
        predicted_bias=predicted_bias,
        bias_bound=3.0 * std / math.sqrt(trials),
        lag1_autocorrelation=_lagged_correlation(errors, 1),
        lag2_autocorrelation=_lagged_correlation(errors, 2),
        autocorr_bound=3.0 / math.sqrt(trials),
        section_error_interior_independence=section_invariant,
        rejections=rejections,
    )
