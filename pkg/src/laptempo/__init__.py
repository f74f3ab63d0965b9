"""Bar-level tempo datasets from cumulative lap-timer annotations.

The package turns the cumulative timestamps captured by pressing a lap
key at every barline of a recording into validated beats-per-minute
series, simulates the reaction-time error model behind that protocol,
and renders the resulting data as deterministic SVG charts.
"""

from .core import (
    BarFlag,
    ConsistencyError,
    ConsistencyReport,
    CorpusEntry,
    LapSequence,
    MeterMap,
    MeterSegment,
    MovementCorpus,
    RecordingMeta,
    TempoSeries,
    bar_durations,
    bpm_error_bound,
    bpm_from_days,
    bpm_from_duration,
    compute_tempo_series,
    consistency_check,
    duration_from_bpm,
)
from .errors import AlignmentError, LapTempoError, ParseError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BarFlag",
    "ConsistencyError",
    "ConsistencyReport",
    "CorpusEntry",
    "LapSequence",
    "LapTempoError",
    "MeterMap",
    "MeterSegment",
    "MovementCorpus",
    "ParseError",
    "RecordingMeta",
    "TempoSeries",
    "ValidationError",
    "bar_durations",
    "bpm_error_bound",
    "bpm_from_days",
    "bpm_from_duration",
    "compute_tempo_series",
    "consistency_check",
    "duration_from_bpm",
    "__version__",
]
