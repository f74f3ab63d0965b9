"""Domain types and bar-level tempo arithmetic.

The timing model: an annotator presses a lap key at every barline while a
recording plays, producing cumulative timestamps ``T_1 .. T_M`` (seconds
from the movement's downbeat, with ``T_0 = 0`` implicit). Bar durations
are first differences of that sequence, and the tempo of bar ``i`` is
``beats_i * 60 / duration_i``.

Two consequences of the cumulative architecture drive the design:

* a timing error at one barline affects only the two adjacent bar
  durations, never later ones, and
* the sum of all bar durations telescopes back to the final timestamp,
  giving every sequence a built-in consistency check.

All values are immutable after construction and safe to share across
threads. The canonical internal time unit is seconds as a 64-bit float;
decimal days (the spreadsheet representation, 86,400 seconds per day)
exist only at ingestion and export boundaries.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

from .errors import ValidationError

Seconds = float
Bpm = float
BeatsLike = Union[int, float, str, Fraction]

SECONDS_PER_DAY = 86400.0

#: Default tolerance for the duration-sum consistency check: two
#: reaction-time half-widths (one per press bounding the total).
DEFAULT_SUM_TOLERANCE: Seconds = 0.2


def as_beats(value: BeatsLike) -> Fraction:
    """Coerce a beats-per-bar value to an exact rational.

    Floats go through their decimal string form so that ``3.5`` becomes
    ``7/2`` rather than the nearest binary fraction.
    """
    if isinstance(value, Fraction):
        beats = value
    elif isinstance(value, float):
        beats = Fraction(str(value))
    else:
        beats = Fraction(value)
    if beats <= 0:
        raise ValidationError(f"beats per bar must be positive, got {value!r}")
    return beats


class BarFlag(enum.Enum):
    """Provenance of one bar's values."""

    MEASURED = "measured"
    FERMATA_RESOLVED = "fermata_resolved"
    CORRECTED = "corrected"
    ANOMALOUS = "anomalous"

    def __str__(self) -> str:  # JSON-friendly
        return self.value


@dataclass(frozen=True)
class LapSequence:
    """Strictly increasing cumulative timestamps for one movement.

    Attributes:
        timestamps: cumulative elapsed seconds at each barline; the last
            entry is the total movement duration.
        anacrusis_duration: seconds of pickup material before the first
            downbeat, timed separately and excluded from the bar series.
        reported_total: independently measured movement duration, if one
            is available, used by :func:`consistency_check`.
    """

    timestamps: tuple[Seconds, ...]
    anacrusis_duration: Seconds | None = None
    reported_total: Seconds | None = None

    def __post_init__(self) -> None:
        ts = tuple(float(t) for t in self.timestamps)
        object.__setattr__(self, "timestamps", ts)
        if not ts:
            raise ValidationError("a lap sequence needs at least one timestamp")
        previous = 0.0
        for bar, t in enumerate(ts, start=1):
            if not math.isfinite(t):
                raise ValidationError(f"timestamp at bar {bar} is not finite: {t!r}")
            if t <= previous:
                raise ValidationError(
                    f"timestamps must be strictly increasing: bar {bar} has "
                    f"{t!r} after {previous!r}"
                )
            previous = t
        if self.anacrusis_duration is not None and self.anacrusis_duration < 0:
            raise ValidationError("anacrusis duration cannot be negative")
        if self.reported_total is not None and self.reported_total <= 0:
            raise ValidationError("reported total duration must be positive")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def total_duration(self) -> Seconds:
        """Cumulative time at the final barline."""
        return self.timestamps[-1]


@dataclass(frozen=True)
class MeterSegment:
    """A run of bars sharing one beats-per-bar value."""

    from_bar: int
    beats_per_bar: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "beats_per_bar", as_beats(self.beats_per_bar))
        if self.from_bar < 1:
            raise ValidationError(f"segment from_bar must be >= 1, got {self.from_bar}")


@dataclass(frozen=True)
class MeterMap:
    """Bar count and per-bar beat counts for one movement.

    Segments partition bars 1..bar_count: each segment applies from its
    ``from_bar`` up to the bar before the next segment starts.
    """

    bar_count: int
    segments: tuple[MeterSegment, ...]
    anacrusis_beats: Fraction | None = None

    def __post_init__(self) -> None:
        if self.bar_count < 1:
            raise ValidationError(f"bar count must be >= 1, got {self.bar_count}")
        segs = tuple(self.segments)
        if not segs:
            raise ValidationError("meter map needs at least one segment")
        if segs[0].from_bar != 1:
            raise ValidationError(
                f"bar 1 uncovered: first segment starts at bar {segs[0].from_bar}"
            )
        for prev, cur in zip(segs, segs[1:]):
            if cur.from_bar <= prev.from_bar:
                raise ValidationError(
                    "segment from_bar values must be strictly increasing "
                    f"({prev.from_bar} then {cur.from_bar})"
                )
        if segs[-1].from_bar > self.bar_count:
            raise ValidationError(
                f"segment starts at bar {segs[-1].from_bar} but the movement "
                f"has only {self.bar_count} bars"
            )
        # canonical form: adjacent segments with equal beats collapse, so
        # equality means equal per-bar beat assignments
        merged: list[MeterSegment] = []
        for seg in segs:
            if merged and merged[-1].beats_per_bar == seg.beats_per_bar:
                continue
            merged.append(seg)
        object.__setattr__(self, "segments", tuple(merged))
        if self.anacrusis_beats is not None:
            beats = (
                self.anacrusis_beats
                if isinstance(self.anacrusis_beats, Fraction)
                else as_beats(self.anacrusis_beats)
            )
            if beats < 0:
                raise ValidationError("anacrusis beats cannot be negative")
            object.__setattr__(self, "anacrusis_beats", beats)

    @classmethod
    def constant(
        cls,
        bar_count: int,
        beats_per_bar: BeatsLike = 4,
        anacrusis_beats: BeatsLike | None = None,
    ) -> MeterMap:
        """Meter map with a single time signature throughout."""
        anacrusis = None if anacrusis_beats is None else as_beats(anacrusis_beats)
        return cls(
            bar_count=bar_count,
            segments=(MeterSegment(1, as_beats(beats_per_bar)),),
            anacrusis_beats=anacrusis,
        )

    def beats_for_bar(self, bar: int) -> Fraction:
        """Beats in 1-based ``bar``."""
        if not 1 <= bar <= self.bar_count:
            raise ValidationError(
                f"bar {bar} outside movement of {self.bar_count} bars"
            )
        chosen = self.segments[0].beats_per_bar
        for seg in self.segments:
            if seg.from_bar > bar:
                break
            chosen = seg.beats_per_bar
        return chosen

    def beats_per_bar(self) -> tuple[Fraction, ...]:
        """Beats for every bar, as a tuple of length ``bar_count``."""
        out: list[Fraction] = []
        seg_idx = 0
        current = self.segments[0].beats_per_bar
        for bar in range(1, self.bar_count + 1):
            while (
                seg_idx + 1 < len(self.segments)
                and self.segments[seg_idx + 1].from_bar <= bar
            ):
                seg_idx += 1
                current = self.segments[seg_idx].beats_per_bar
            out.append(current)
        return tuple(out)


@dataclass(frozen=True)
class TempoSeries:
    """Per-bar durations and tempi with provenance flags."""

    bar_durations: tuple[Seconds, ...]
    bpm: tuple[Bpm, ...]
    flags: tuple[BarFlag, ...]

    def __post_init__(self) -> None:
        durations = tuple(float(d) for d in self.bar_durations)
        bpm = tuple(float(b) for b in self.bpm)
        flags = tuple(self.flags)
        object.__setattr__(self, "bar_durations", durations)
        object.__setattr__(self, "bpm", bpm)
        object.__setattr__(self, "flags", flags)
        if not (len(durations) == len(bpm) == len(flags)):
            raise ValidationError(
                "durations, bpm and flags must have equal length "
                f"({len(durations)}, {len(bpm)}, {len(flags)})"
            )
        for bar, (d, b) in enumerate(zip(durations, bpm), start=1):
            if not (math.isfinite(d) and d > 0):
                raise ValidationError(f"bar {bar} duration must be positive, got {d!r}")
            if not (math.isfinite(b) and b > 0):
                raise ValidationError(f"bar {bar} BPM must be positive, got {b!r}")

    def __len__(self) -> int:
        return len(self.bpm)

    def with_flag(self, bar: int, flag: BarFlag) -> TempoSeries:
        """Copy of the series with 1-based ``bar`` reflagged."""
        if not 1 <= bar <= len(self):
            raise ValidationError(f"bar {bar} outside series of {len(self)} bars")
        flags = list(self.flags)
        flags[bar - 1] = flag
        return replace(self, flags=tuple(flags))

    def consistent_with(self, meter: MeterMap, rel_tol: float = 1e-9) -> bool:
        """Whether ``bpm * duration == beats * 60`` holds for every bar."""
        if len(self) != meter.bar_count:
            return False
        beats = meter.beats_per_bar()
        return all(
            math.isclose(b * d, float(n) * 60.0, rel_tol=rel_tol)
            for d, b, n in zip(self.bar_durations, self.bpm, beats)
        )


@dataclass(frozen=True)
class RecordingMeta:
    """Identity of one recording within a corpus."""

    performer: str
    year: int
    label: str

    def __post_init__(self) -> None:
        if not self.label:
            raise ValidationError("recording label must be nonempty")


@dataclass(frozen=True)
class CorpusEntry:
    """One recording: who played it, the raw laps, the derived series."""

    meta: RecordingMeta
    laps: LapSequence
    series: TempoSeries


@dataclass(frozen=True)
class MovementCorpus:
    """Recordings of one movement aligned by bar index."""

    movement_id: str
    meter: MeterMap
    entries: tuple[CorpusEntry, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        seen: set[str] = set()
        for entry in self.entries:
            label = entry.meta.label
            if label in seen:
                raise ValidationError(f"duplicate recording label {label!r}")
            seen.add(label)
            if len(entry.laps) != self.meter.bar_count:
                raise ValidationError(
                    f"recording {label!r} has {len(entry.laps)} laps but the "
                    f"meter defines {self.meter.bar_count} bars"
                )
            if len(entry.series) != self.meter.bar_count:
                raise ValidationError(
                    f"recording {label!r} tempo series length {len(entry.series)} "
                    f"does not match {self.meter.bar_count} bars"
                )

    def __len__(self) -> int:
        return len(self.entries)

    def labels(self) -> tuple[str, ...]:
        return tuple(e.meta.label for e in self.entries)

    def get(self, label: str) -> CorpusEntry:
        for entry in self.entries:
            if entry.meta.label == label:
                return entry
        raise ValidationError(f"no recording labelled {label!r} in corpus")


@dataclass(frozen=True)
class ConsistencyReport:
    """Outcome of the lap-count and duration-sum checks.

    ``sum_ok`` is None when the sequence carries no independently
    reported total, in which case the sum check is skipped.
    """

    expected_bars: int
    actual_bars: int
    count_ok: bool
    residual: Seconds | None
    sum_ok: bool | None
    tolerance: Seconds

    @property
    def passed(self) -> bool:
        return self.count_ok and self.sum_ok is not False


class ConsistencyError(ValidationError):
    """Raised when a computation requires a count check that failed."""

    def __init__(self, message: str, report: ConsistencyReport):
        super().__init__(message)
        self.report = report


def bar_durations(laps: LapSequence) -> list[Seconds]:
    """First differences of the cumulative timestamps, with T_0 = 0.

    The result telescopes: its sum equals the final timestamp exactly in
    exact arithmetic and to well under a microsecond in floats for any
    realistic movement length.
    """
    durations: list[Seconds] = []
    previous = 0.0
    for t in laps.timestamps:
        durations.append(t - previous)
        previous = t
    return durations


def bpm_from_duration(delta_t: Seconds, beats: BeatsLike) -> Bpm:
    """Tempo of a bar lasting ``delta_t`` seconds with ``beats`` beats."""
    if delta_t <= 0:
        raise ValidationError(f"bar duration must be positive, got {delta_t!r}")
    return float(as_beats(beats)) * 60.0 / delta_t


def bpm_from_days(delta_t_days: float, beats: BeatsLike) -> Bpm:
    """Tempo from a bar duration expressed in spreadsheet decimal days."""
    if delta_t_days <= 0:
        raise ValidationError(
            f"bar duration must be positive, got {delta_t_days!r} days"
        )
    return bpm_from_duration(delta_t_days * SECONDS_PER_DAY, beats)


def duration_from_bpm(bpm: Bpm, beats: BeatsLike) -> Seconds:
    """Invert the tempo formula: seconds a bar lasts at ``bpm``."""
    if bpm <= 0:
        raise ValidationError(f"BPM must be positive, got {bpm!r}")
    return float(as_beats(beats)) * 60.0 / bpm


def bpm_error_bound(delta_t: Seconds, beats: BeatsLike, jitter: Seconds) -> Bpm:
    """Linearized tempo error from a single mistimed barline press.

    The tempo formula differentiated with respect to the bar duration
    gives a sensitivity of ``beats * 60 / delta_t**2``; multiplied by the
    press jitter this bounds the first-order BPM error magnitude.
    """
    if delta_t <= 0:
        raise ValidationError(f"bar duration must be positive, got {delta_t!r}")
    if jitter < 0:
        raise ValidationError(f"jitter must be nonnegative, got {jitter!r}")
    return float(as_beats(beats)) * 60.0 / (delta_t * delta_t) * jitter


def consistency_check(
    laps: LapSequence,
    meter: MeterMap,
    tolerance: Seconds = DEFAULT_SUM_TOLERANCE,
) -> ConsistencyReport:
    """Run the two self-validation checks on a lap sequence.

    Count check: the number of laps must equal the meter's bar count (a
    mismatch signals a missed or doubled lap press). Sum check: the bar
    durations must add up to the independently reported total duration,
    when one was recorded. Failures are report fields, never exceptions.
    """
    count_ok = len(laps) == meter.bar_count
    residual: Seconds | None = None
    sum_ok: bool | None = None
    if laps.reported_total is not None:
        total = math.fsum(bar_durations(laps))
        residual = total - laps.reported_total
        sum_ok = abs(residual) <= tolerance
    return ConsistencyReport(
        expected_bars=meter.bar_count,
        actual_bars=len(laps),
        count_ok=count_ok,
        residual=residual,
        sum_ok=sum_ok,
        tolerance=tolerance,
    )


def compute_tempo_series(laps: LapSequence, meter: MeterMap) -> TempoSeries:
    """Per-bar durations and tempi for a lap sequence under a meter.

    Raises:
        ConsistencyError: when the lap count does not match the meter's
            bar count; the report is attached to the exception.
    """
    report = consistency_check(laps, meter)
    if not report.count_ok:
        raise ConsistencyError(
            f"lap count {report.actual_bars} does not match bar count "
            f"{report.expected_bars}",
            report,
        )
    durations = bar_durations(laps)
    beats = meter.beats_per_bar()
    bpm = tuple(bpm_from_duration(d, n) for d, n in zip(durations, beats))
    return TempoSeries(
        bar_durations=tuple(durations),
        bpm=bpm,
        flags=(BarFlag.MEASURED,) * meter.bar_count,
    )
