"""Quality control and corpus-level procedures.

Covers the workflow steps that sit between raw lap capture and charting:
resolving ambiguous barlines around fermatas, spotting missed or doubled
lap presses, admitting recordings into an aligned corpus, and computing
section- and recording-level aggregates.
"""

from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass
from typing import NamedTuple

from .core import (
    Bpm,
    CorpusEntry,
    LapSequence,
    MeterMap,
    MovementCorpus,
    RecordingMeta,
    Seconds,
    TempoSeries,
    compute_tempo_series,
)
from .errors import ValidationError

#: Two fermata measurements further apart than this demand a third take.
FERMATA_DIVERGENCE_LIMIT: Seconds = 0.2

DEFAULT_ANOMALY_WINDOW = 5
DEFAULT_ANOMALY_RATIO = 1.8


class ThirdMeasurementRequired(ValidationError):
    """Two fermata measurements diverged too far to be combined."""


@dataclass(frozen=True)
class FermataMeasurement:
    """Repeated timings of one barline obscured by a fermata."""

    candidates: tuple[Seconds, ...]

    def __post_init__(self) -> None:
        values = tuple(float(c) for c in self.candidates)
        object.__setattr__(self, "candidates", values)
        if not 2 <= len(values) <= 3:
            raise ValidationError(
                f"need 2 or 3 fermata measurements, got {len(values)}"
            )
        if any(c <= 0 for c in values):
            raise ValidationError("fermata measurements must be positive seconds")


def resolve_fermata(
    meas: FermataMeasurement,
    divergence_limit: Seconds = FERMATA_DIVERGENCE_LIMIT,
) -> Seconds:
    """Combine repeated timings of a fermata-obscured barline.

    Two measurements within the divergence limit are averaged. Two that
    diverge further raise :class:`ThirdMeasurementRequired`. With three
    measurements the two closest are averaged; if the two candidate pairs
    are equally close, the pair containing the median wins, and a
    remaining tie goes to the pair with the smaller values. The result
    does not depend on the order of the candidates.
    """
    values = sorted(meas.candidates)
    if len(values) == 2:
        lo, hi = values
        if hi - lo > divergence_limit:
            raise ThirdMeasurementRequired(
                f"measurements {lo} and {hi} diverge by {hi - lo:.3f} s "
                f"(limit {divergence_limit} s): third measurement required"
            )
        return (lo + hi) / 2.0

    pairs = [(values[0], values[1]), (values[1], values[2]), (values[0], values[2])]
    median = values[1]

    def rank(pair: tuple[float, float]) -> tuple[float, int, float]:
        gap = pair[1] - pair[0]
        contains_median = 0 if median in pair else 1
        return (gap, contains_median, pair[0])

    best = min(pairs, key=rank)
    return (best[0] + best[1]) / 2.0


class AnomalyReason(enum.Enum):
    """Why a bar's tempo was flagged."""

    SPIKE_HIGH = "spike_high"  # double-press signature: a near-empty bar
    SPIKE_LOW = "spike_low"  # missed-press signature: two bars merged

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Anomaly:
    bar: int
    observed_bpm: Bpm
    reference_bpm: Bpm
    reason: AnomalyReason


@dataclass(frozen=True)
class AnomalyReport:
    """Bars whose tempo departs sharply from their local neighbourhood.

    The flagging rule (windowed median, ratio threshold) is a heuristic
    operationalization of the 'anomalous spike' correction step, and the
    ``method`` field says so in every report.
    """

    flagged: tuple[Anomaly, ...]
    method: str

    def bars(self) -> tuple[int, ...]:
        return tuple(a.bar for a in self.flagged)


def detect_anomalies(
    series: TempoSeries,
    window: int = DEFAULT_ANOMALY_WINDOW,
    ratio_limit: float = DEFAULT_ANOMALY_RATIO,
) -> AnomalyReport:
    """Flag bars whose BPM jumps past ``ratio_limit`` times the local median.

    The window is centred on each bar and truncated at the series edges.
    A bar above ``ratio_limit * median`` is a high spike (the signature
    of a double press); below ``median / ratio_limit`` a low spike (a
    missed press merging two bars). The default ratio 1.8 sits under the
    exact 2.0 halving/doubling signature while leaving room for genuine
    rubato; expressive movements may need a looser limit.
    """
    if window < 3 or window % 2 == 0:
        raise ValidationError(f"window must be an odd integer >= 3, got {window}")
    if ratio_limit <= 1:
        raise ValidationError(f"ratio limit must exceed 1, got {ratio_limit}")
    method = f"window-median ratio test (window={window}, ratio_limit={ratio_limit})"
    if len(series) < 3:
        return AnomalyReport(flagged=(), method=method)

    half = window // 2
    flagged: list[Anomaly] = []
    bpm = series.bpm
    for i, value in enumerate(bpm):
        lo = max(0, i - half)
        hi = min(len(bpm), i + half + 1)
        reference = statistics.median(bpm[lo:hi])
        if value > ratio_limit * reference:
            flagged.append(Anomaly(i + 1, value, reference, AnomalyReason.SPIKE_HIGH))
        elif value < reference / ratio_limit:
            flagged.append(Anomaly(i + 1, value, reference, AnomalyReason.SPIKE_LOW))
    return AnomalyReport(flagged=tuple(flagged), method=method)


@dataclass(frozen=True)
class AlignmentIssue:
    """One recording whose lap count disagrees with the score."""

    label: str
    expected_bars: int
    actual_bars: int

    @property
    def delta(self) -> int:
        return self.actual_bars - self.expected_bars


@dataclass(frozen=True)
class AlignmentReport:
    rejected: tuple[AlignmentIssue, ...]

    @property
    def all_admitted(self) -> bool:
        return not self.rejected


def align_corpus(
    entries: list[tuple[RecordingMeta, LapSequence]],
    meter: MeterMap,
    movement_id: str = "",
) -> tuple[MovementCorpus, AlignmentReport]:
    """Admit recordings whose lap count matches the meter's bar count.

    Mismatched recordings (extra bars from a written-out repeat, missing
    bars from a cut or missed presses) are listed in the report with
    their count delta. Nothing is repaired automatically: correcting a
    recording means revisiting it, not editing its data.
    """
    if not entries:
        raise ValidationError("need at least one recording to align")
    admitted: list[CorpusEntry] = []
    rejected: list[AlignmentIssue] = []
    for meta, laps in entries:
        if len(laps) == meter.bar_count:
            series = compute_tempo_series(laps, meter)
            admitted.append(CorpusEntry(meta, laps, series))
        else:
            rejected.append(
                AlignmentIssue(meta.label, meter.bar_count, len(laps))
            )
    corpus = MovementCorpus(movement_id, meter, tuple(admitted))
    return corpus, AlignmentReport(rejected=tuple(rejected))


@dataclass(frozen=True)
class Section:
    """A named span of bars, both endpoints inclusive."""

    name: str
    from_bar: int
    to_bar: int

    def __post_init__(self) -> None:
        if self.from_bar < 1 or self.to_bar < self.from_bar:
            raise ValidationError(
                f"section {self.name!r} has invalid span "
                f"[{self.from_bar}, {self.to_bar}]"
            )


@dataclass(frozen=True)
class SectionMap:
    """Contiguous, non-overlapping sections starting at bar 1."""

    sections: tuple[Section, ...]

    def __post_init__(self) -> None:
        secs = tuple(self.sections)
        object.__setattr__(self, "sections", secs)
        if not secs:
            raise ValidationError("section map needs at least one section")
        if secs[0].from_bar != 1:
            raise ValidationError("first section must start at bar 1")
        for prev, cur in zip(secs, secs[1:]):
            if cur.from_bar != prev.to_bar + 1:
                raise ValidationError(
                    f"section {cur.name!r} starts at bar {cur.from_bar}, "
                    f"expected bar {prev.to_bar + 1}"
                )

    @property
    def last_bar(self) -> int:
        return self.sections[-1].to_bar


def section_tempo(
    laps: LapSequence, meter: MeterMap, section: tuple[int, int]
) -> Bpm:
    """Aggregate tempo over a bar span, from boundary timestamps only.

    Beats in the span times 60, divided by the span duration. Because the
    duration is the difference of just two cumulative timestamps, the
    result is untouched by any timing noise at interior barlines.
    """
    from_bar, to_bar = section
    if not (1 <= from_bar <= to_bar <= meter.bar_count):
        raise ValidationError(
            f"section [{from_bar}, {to_bar}] invalid for {meter.bar_count} bars"
        )
    if len(laps) != meter.bar_count:
        raise ValidationError(
            f"lap count {len(laps)} does not match {meter.bar_count} bars"
        )
    start = 0.0 if from_bar == 1 else laps.timestamps[from_bar - 2]
    duration = laps.timestamps[to_bar - 1] - start
    beats = sum(
        meter.beats_for_bar(bar) for bar in range(from_bar, to_bar + 1)
    )
    return float(beats) * 60.0 / duration


class RecordingSummary(NamedTuple):
    mean_bpm: float
    std_bpm: float
    min_bpm: float
    max_bpm: float


def recording_summary(series: TempoSeries) -> RecordingSummary:
    """Mean, population standard deviation, min and max of bar-level BPM.

    The standard deviation is the population form: a tempo series is the
    complete enumeration of a movement's bars, not a sample from one.
    """
    if len(series) == 0:
        raise ValidationError("cannot summarize an empty series")
    values = series.bpm
    mean = statistics.fmean(values)
    std = statistics.pstdev(values, mu=mean)
    return RecordingSummary(mean, std, min(values), max(values))


def section_proportions(laps: LapSequence, sections: SectionMap) -> list[float]:
    """Each section's share of the total movement duration.

    Sections must exactly cover the movement; the shares sum to 1 up to
    float rounding.
    """
    if sections.last_bar != len(laps):
        raise ValidationError(
            f"sections cover bars 1..{sections.last_bar} but the movement "
            f"has {len(laps)} bars"
        )
    total = laps.total_duration
    shares: list[float] = []
    for sec in sections.sections:
        start = 0.0 if sec.from_bar == 1 else laps.timestamps[sec.from_bar - 2]
        shares.append((laps.timestamps[sec.to_bar - 1] - start) / total)
    return shares
