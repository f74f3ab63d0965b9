"""Unit and property tests for the tempo arithmetic core."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laptempo.core import (
    BarFlag,
    ConsistencyError,
    LapSequence,
    MeterMap,
    MeterSegment,
    MovementCorpus,
    CorpusEntry,
    RecordingMeta,
    bar_durations,
    bpm_error_bound,
    bpm_from_days,
    bpm_from_duration,
    compute_tempo_series,
    consistency_check,
    duration_from_bpm,
)
from laptempo.errors import ValidationError


increments = st.lists(
    st.floats(min_value=1e-3, max_value=30.0, allow_nan=False),
    min_size=1,
    max_size=2000,
)


def laps_from_increments(deltas: list[float]) -> LapSequence:
    total = 0.0
    ts = []
    for d in deltas:
        total += d
        ts.append(total)
    return LapSequence(tuple(ts))


class TestLapSequence:
    def test_rejects_non_increasing(self):
        with pytest.raises(ValidationError, match="bar 2"):
            LapSequence((2.0, 2.0))

    def test_rejects_decreasing_names_bar(self):
        with pytest.raises(ValidationError, match="bar 3"):
            LapSequence((1.0, 2.0, 1.5))

    def test_rejects_nonpositive_first(self):
        with pytest.raises(ValidationError):
            LapSequence((0.0, 1.0))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            LapSequence(())

    def test_rejects_nonfinite(self):
        with pytest.raises(ValidationError, match="bar 2"):
            LapSequence((1.0, math.inf))

    def test_total_duration(self):
        assert LapSequence((1.0, 2.5)).total_duration == 2.5


class TestMeterMap:
    def test_constant(self):
        meter = MeterMap.constant(4, 4)
        assert meter.beats_per_bar() == (Fraction(4),) * 4

    def test_segment_change(self):
        meter = MeterMap(4, (MeterSegment(1, Fraction(4)), MeterSegment(3, Fraction(3))))
        assert meter.beats_per_bar() == (
            Fraction(4),
            Fraction(4),
            Fraction(3),
            Fraction(3),
        )
        assert meter.beats_for_bar(2) == 4
        assert meter.beats_for_bar(3) == 3

    def test_uncovered_first_bar(self):
        with pytest.raises(ValidationError, match="bar 1 uncovered"):
            MeterMap(4, (MeterSegment(2, Fraction(4)),))

    def test_non_increasing_segments(self):
        with pytest.raises(ValidationError):
            MeterMap(4, (MeterSegment(1, Fraction(4)), MeterSegment(1, Fraction(3))))

    def test_segment_beyond_bar_count(self):
        with pytest.raises(ValidationError):
            MeterMap(2, (MeterSegment(1, Fraction(4)), MeterSegment(3, Fraction(3))))

    def test_rejects_nonpositive_beats(self):
        with pytest.raises(ValidationError):
            MeterMap(2, (MeterSegment(1, Fraction(0)),))

    def test_fractional_beats(self):
        meter = MeterMap.constant(2, 3.5)
        assert meter.beats_for_bar(1) == Fraction(7, 2)


class TestBarDurations:
    def test_uniform_spacing(self):
        assert bar_durations(LapSequence((1.0, 2.0, 3.0))) == [1.0, 1.0, 1.0]

    def test_single_bar_common_time_case(self):
        # 1.708e-5 days * 86400 rounds to 1.4757 s at millisecond resolution
        assert bar_durations(LapSequence((1.4757,))) == [1.4757]

    def test_direct_differencing(self):
        out = bar_durations(LapSequence((1.5, 3.1, 4.0)))
        assert out == pytest.approx([1.5, 1.6, 0.9], rel=1e-12)

    @given(increments)
    @settings(max_examples=50, deadline=None)
    def test_telescoping_sum(self, deltas):
        laps = laps_from_increments(deltas)
        total = math.fsum(bar_durations(laps))
        assert abs(total - laps.total_duration) <= 1e-6

    @given(increments.filter(lambda d: len(d) >= 3), st.floats(-0.0009, 0.0009))
    @settings(max_examples=50, deadline=None)
    def test_perturbation_locality(self, deltas, eps):
        laps = laps_from_increments(deltas)
        i = len(deltas) // 2  # an interior index (0-based, not the last)
        ts = list(laps.timestamps)
        ts[i] += eps
        before = bar_durations(laps)
        after = bar_durations(LapSequence(tuple(ts)))
        assert after[i] == pytest.approx(before[i] + eps, abs=1e-9)
        assert after[i + 1] == pytest.approx(before[i + 1] - eps, abs=1e-9)
        assert after[: i] == before[: i]
        assert after[i + 2 :] == before[i + 2 :]
        assert ts[-1] == laps.timestamps[-1]

    def test_section_duration_ignores_interior(self):
        laps = LapSequence((1.0, 2.0, 3.0, 4.0, 5.0))
        nudged = LapSequence((1.0, 2.1, 2.9, 4.0, 5.0))
        a, b = 1, 4  # section bars 2..4: duration T_4 - T_1
        for seq in (laps, nudged):
            assert seq.timestamps[b - 1] - seq.timestamps[a - 1] == 3.0


class TestBpmConversions:
    def test_worked_example_seconds(self):
        out = bpm_from_duration(1.4757, 4)
        assert abs(out - 162.7) <= 0.15
        assert out == pytest.approx(162.63, abs=0.01)

    def test_one_second_common_time(self):
        assert bpm_from_duration(1.0, 4) == 240.0

    def test_exact_division(self):
        assert bpm_from_duration(1.5, 3) == 120.0

    def test_worked_example_days(self):
        assert bpm_from_days(1.708e-5, 4) == pytest.approx(162.63, abs=0.01)

    def test_one_second_in_days(self):
        assert bpm_from_days(1 / 86400, 4) == 240.0

    def test_two_seconds_two_beats(self):
        assert bpm_from_days(2 / 86400, 2) == 60.0

    def test_days_matches_seconds_bitwise(self):
        for days in (1.708e-5, 3.3e-5, 0.01, 1 / 86400):
            assert bpm_from_days(days, 4) == bpm_from_duration(days * 86400.0, 4)

    def test_rejects_nonpositive_duration(self):
        with pytest.raises(ValidationError):
            bpm_from_duration(0.0, 4)
        with pytest.raises(ValidationError):
            bpm_from_days(-1e-5, 4)

    @given(st.floats(0.1, 60.0), st.integers(1, 12))
    @settings(max_examples=100, deadline=None)
    def test_round_trip(self, delta_t, beats):
        bpm = bpm_from_duration(delta_t, beats)
        assert duration_from_bpm(bpm, beats) == pytest.approx(delta_t, rel=1e-9)


class TestErrorBound:
    def test_magnitude_at_moderate_tempo(self):
        out = bpm_error_bound(1.5, 4, 0.1)
        assert out == pytest.approx(10.67, abs=0.01)

    def test_zero_jitter(self):
        assert bpm_error_bound(1.5, 4, 0.0) == 0.0

    def test_against_finite_difference(self):
        bound = bpm_error_bound(2.0, 4, 0.1)
        assert bound == pytest.approx(6.0, rel=1e-12)
        fd = abs(bpm_from_duration(1.9, 4) - bpm_from_duration(2.0, 4))
        # second-order term of 240/dt at dt=2, step 0.1 is 0.3
        assert abs(fd - bound) <= 0.32

    def test_rejects_bad_args(self):
        with pytest.raises(ValidationError):
            bpm_error_bound(0.0, 4, 0.1)
        with pytest.raises(ValidationError):
            bpm_error_bound(1.0, 4, -0.1)


class TestConsistencyCheck:
    def test_count_ok_sum_skipped(self):
        laps = LapSequence((1.0, 2.0, 3.0))
        report = consistency_check(laps, MeterMap.constant(3, 4))
        assert report.count_ok
        assert report.sum_ok is None
        assert report.residual is None
        assert report.passed

    def test_missing_lap_detected(self):
        ts = [float(i) for i in range(1, 101)]
        del ts[49]
        report = consistency_check(
            LapSequence(tuple(ts)), MeterMap.constant(100, 4)
        )
        assert not report.count_ok
        assert report.expected_bars == 100
        assert report.actual_bars == 99
        assert not report.passed

    def test_sum_within_tolerance(self):
        laps = LapSequence(
            tuple(float(i) for i in range(1, 301)), reported_total=300.05
        )
        report = consistency_check(laps, MeterMap.constant(300, 4))
        assert report.sum_ok
        assert report.residual == pytest.approx(-0.05, abs=1e-9)

    def test_sum_beyond_tolerance(self):
        laps = LapSequence((1.0, 2.0, 3.0), reported_total=3.5)
        report = consistency_check(laps, MeterMap.constant(3, 4))
        assert report.sum_ok is False
        assert not report.passed


class TestComputeTempoSeries:
    def test_uniform_common_time(self):
        laps = LapSequence(tuple(float(i) for i in range(1, 9)))
        series = compute_tempo_series(laps, MeterMap.constant(8, 4))
        assert series.bpm == (240.0,) * 8
        assert series.flags == (BarFlag.MEASURED,) * 8

    def test_meter_change(self):
        laps = LapSequence(tuple(float(i) for i in range(1, 7)))
        meter = MeterMap(
            6, (MeterSegment(1, Fraction(4)), MeterSegment(3, Fraction(3)))
        )
        series = compute_tempo_series(laps, meter)
        assert series.bpm == (240.0, 240.0, 180.0, 180.0, 180.0, 180.0)

    def test_worked_example_as_first_bar(self):
        laps = LapSequence((1.4757, 2.4757, 3.4757))
        series = compute_tempo_series(laps, MeterMap.constant(3, 4))
        assert series.bpm[0] == pytest.approx(162.63, abs=0.01)

    def test_count_mismatch_carries_report(self):
        laps = LapSequence((1.0, 2.0))
        with pytest.raises(ConsistencyError) as err:
            compute_tempo_series(laps, MeterMap.constant(3, 4))
        assert err.value.report.actual_bars == 2
        assert err.value.report.expected_bars == 3

    @given(increments.filter(lambda d: len(d) <= 200))
    @settings(max_examples=50, deadline=None)
    def test_bpm_duration_identity(self, deltas):
        laps = laps_from_increments(deltas)
        meter = MeterMap.constant(len(deltas), 4)
        series = compute_tempo_series(laps, meter)
        assert series.consistent_with(meter)


class TestCorpus:
    def _entry(self, label: str, n: int = 3) -> CorpusEntry:
        laps = LapSequence(tuple(float(i) for i in range(1, n + 1)))
        series = compute_tempo_series(laps, MeterMap.constant(n, 4))
        return CorpusEntry(RecordingMeta("Player", 1950, label), laps, series)

    def test_duplicate_labels_rejected(self):
        meter = MeterMap.constant(3, 4)
        with pytest.raises(ValidationError, match="duplicate"):
            MovementCorpus("mvt", meter, (self._entry("a"), self._entry("a")))

    def test_length_mismatch_rejected(self):
        meter = MeterMap.constant(4, 4)
        with pytest.raises(ValidationError):
            MovementCorpus("mvt", meter, (self._entry("a", n=3),))

    def test_get_by_label(self):
        meter = MeterMap.constant(3, 4)
        corpus = MovementCorpus("mvt", meter, (self._entry("a"), self._entry("b")))
        assert corpus.get("b").meta.label == "b"
        with pytest.raises(ValidationError):
            corpus.get("missing")

    def test_empty_label_rejected(self):
        with pytest.raises(ValidationError):
            RecordingMeta("x", 2000, "")
