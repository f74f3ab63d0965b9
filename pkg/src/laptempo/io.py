"""File formats: lap CSV exports, meter and section maps, workbooks.

Lap CSV
    One data row per bar, either a single cumulative-time column or a
    ``bar,cumulative`` pair, with an optional header line. Cumulative
    times may be seconds, spreadsheet decimal days, or ``H:MM:SS.mmm``
    clock text; the unit is always declared by the caller, never
    guessed from magnitudes.

Meter map (JSON)
    ``{"movement": ..., "bars": N, "anacrusis_beats": x,
    "segments": [{"from_bar": 1, "beats": 4}, ...]}``
    with ``movement`` and ``anacrusis_beats`` optional. Beats accept
    integers, decimal numbers, or rational strings like ``"7/2"``.

Section map (JSON)
    ``{"sections": [{"name": ..., "from_bar": 1, "to_bar": 24}, ...]}``

Workbook (wide CSV)
    One five-column block per recording, in corpus order:
    bar index, cumulative seconds, bar duration, beats per bar, BPM.
    Two header rows precede the data. Row 1 holds each block's label and
    performer (and the movement id in the first block's third cell); row
    2 holds the year, the recording's anacrusis duration and reported
    total if any (and the shared anacrusis beats in the first block's
    fourth cell). Numbers are written at full float precision so that
    export and import are mutually inverse; display rounding belongs to
    the renderers. Output uses comma separators, minimal RFC-4180
    quoting and LF line endings, giving byte-identical files for
    identical corpora.

All parsers reject malformed input outright; no row is ever silently
skipped or repaired.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from io import StringIO

from .analysis import Section, SectionMap
from .core import (
    BarFlag,
    CorpusEntry,
    LapSequence,
    MeterMap,
    MeterSegment,
    MovementCorpus,
    RecordingMeta,
    SECONDS_PER_DAY,
    Seconds,
    TempoSeries,
    as_beats,
    bar_durations,
    bpm_from_duration,
)
from .errors import AlignmentError, ParseError, ValidationError

#: A BPM cell further than this from the value recomputed out of the
#: cumulative column marks the bar as corrected.
BPM_RECOMPUTE_TOLERANCE = 0.05

#: Duration cells are compared at millisecond resolution.
DURATION_RECOMPUTE_TOLERANCE = 1e-3

_BLOCK_WIDTH = 5


class TimeUnit(enum.Enum):
    SECONDS = "seconds"
    DECIMAL_DAYS = "decimal_days"
    HMS = "hms"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LapFileFormat:
    """Shape of a stopwatch lap export."""

    time_unit: TimeUnit = TimeUnit.SECONDS
    has_header: bool = True
    delimiter: str = ","

    def __post_init__(self) -> None:
        if self.delimiter not in (",", ";", "\t"):
            raise ValidationError(
                f"delimiter must be comma, semicolon or tab, got {self.delimiter!r}"
            )


def _decode(data: bytes | str) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as err:
        raise ParseError(f"input is not valid UTF-8: {err}") from None


def _parse_hms(text: str, row: int) -> Seconds:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ParseError(
            f"row {row}: expected M:SS or H:MM:SS time, got {text!r}"
        )
    try:
        head = [int(p) for p in parts[:-1]]
        seconds = float(parts[-1])
    except ValueError:
        raise ParseError(f"row {row}: malformed clock time {text!r}") from None
    if any(p < 0 for p in head) or seconds < 0:
        raise ParseError(f"row {row}: negative component in {text!r}")
    if seconds >= 60:
        raise ParseError(f"row {row}: seconds field out of range in {text!r}")
    if len(parts) == 3:
        hours, minutes = head
        if minutes >= 60:
            raise ParseError(f"row {row}: minutes field out of range in {text!r}")
    else:
        hours, minutes = 0, head[0]
    return hours * 3600.0 + minutes * 60.0 + seconds


def parse_lap_csv(data: bytes | str, fmt: LapFileFormat | None = None) -> LapSequence:
    """Read a stopwatch lap export into a validated lap sequence.

    Raises:
        ParseError: empty input, a malformed row, or timestamps that are
            not strictly increasing (the message names the offender).
    """
    fmt = fmt or LapFileFormat()
    text = _decode(data)
    reader = csv.reader(StringIO(text), delimiter=fmt.delimiter)
    rows = list(reader)
    if fmt.has_header:
        if not rows:
            raise ParseError("lap file is empty")
        rows = rows[1:]
    rows_with_numbers = [
        (i + (2 if fmt.has_header else 1), row) for i, row in enumerate(rows)
    ]
    for number, row in rows_with_numbers:
        if row == []:  # reject, don't repair: not even blank lines
            raise ParseError(f"row {number}: blank line")
    if not rows_with_numbers:
        raise ParseError("lap file contains no data rows")

    width = len(rows_with_numbers[0][1])
    if width not in (1, 2):
        raise ParseError(
            f"row {rows_with_numbers[0][0]}: expected 1 or 2 columns, got {width}"
        )
    timestamps: list[Seconds] = []
    for bar, (row_number, row) in enumerate(rows_with_numbers, start=1):
        if len(row) != width:
            raise ParseError(
                f"row {row_number}: expected {width} columns, got "
                f"{len(row)} in {row!r}"
            )
        if width == 2:
            try:
                bar_cell = int(row[0])
            except ValueError:
                raise ParseError(
                    f"row {row_number}: bar index {row[0]!r} is not an integer"
                ) from None
            if bar_cell != bar:
                raise ParseError(
                    f"row {row_number}: bar index {bar_cell} out of order, "
                    f"expected {bar}"
                )
        cell = row[-1].strip()
        if fmt.time_unit is TimeUnit.HMS:
            value = _parse_hms(cell, row_number)
        else:
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"row {row_number}: malformed timestamp {cell!r}"
                ) from None
            if fmt.time_unit is TimeUnit.DECIMAL_DAYS:
                value *= SECONDS_PER_DAY
        timestamps.append(value)
    try:
        return LapSequence(tuple(timestamps))
    except ValidationError as err:
        raise ParseError(str(err)) from None


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ParseError(f"{path}: {message}")


def _beats_value(raw, path: str) -> Fraction:
    if not isinstance(raw, (int, float, str)) or isinstance(raw, bool):
        raise ParseError(f"{path}: beats must be a number or rational string")
    try:
        return as_beats(raw)
    except (ValidationError, ValueError, ZeroDivisionError) as err:
        raise ParseError(f"{path}: {err}") from None


def parse_meter_map(data: bytes | str) -> MeterMap:
    """Read and validate a meter map JSON document."""
    text = _decode(data)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"meter map is not valid JSON: {err}") from None
    _require(isinstance(doc, dict), "$", "meter map must be a JSON object")
    if "movement" in doc:
        _require(isinstance(doc["movement"], str), "movement", "must be a string")
    _require("bars" in doc, "bars", "missing required field")
    bars = doc["bars"]
    _require(
        isinstance(bars, int) and not isinstance(bars, bool) and bars >= 1,
        "bars",
        f"must be a positive integer, got {bars!r}",
    )
    raw_segments = doc.get("segments")
    _require(
        isinstance(raw_segments, list) and raw_segments,
        "segments",
        "must be a nonempty array",
    )
    segments: list[MeterSegment] = []
    for i, raw in enumerate(raw_segments):
        path = f"segments[{i}]"
        _require(isinstance(raw, dict), path, "must be an object")
        _require("from_bar" in raw, f"{path}.from_bar", "missing required field")
        _require("beats" in raw, f"{path}.beats", "missing required field")
        from_bar = raw["from_bar"]
        _require(
            isinstance(from_bar, int) and not isinstance(from_bar, bool),
            f"{path}.from_bar",
            f"must be an integer, got {from_bar!r}",
        )
        beats = _beats_value(raw["beats"], f"{path}.beats")
        try:
            segments.append(MeterSegment(from_bar, beats))
        except ValidationError as err:
            raise ParseError(f"{path}: {err}") from None
    anacrusis = None
    if doc.get("anacrusis_beats") is not None:
        anacrusis = _beats_value(doc["anacrusis_beats"], "anacrusis_beats")
    try:
        return MeterMap(
            bar_count=bars, segments=tuple(segments), anacrusis_beats=anacrusis
        )
    except ValidationError as err:
        raise ParseError(f"segments: {err}") from None


def parse_section_map(data: bytes | str) -> SectionMap:
    """Read and validate a section map JSON document."""
    text = _decode(data)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"section map is not valid JSON: {err}") from None
    _require(isinstance(doc, dict), "$", "section map must be a JSON object")
    raw_sections = doc.get("sections")
    _require(
        isinstance(raw_sections, list) and raw_sections,
        "sections",
        "must be a nonempty array",
    )
    sections: list[Section] = []
    for i, raw in enumerate(raw_sections):
        path = f"sections[{i}]"
        _require(isinstance(raw, dict), path, "must be an object")
        for key in ("name", "from_bar", "to_bar"):
            _require(key in raw, f"{path}.{key}", "missing required field")
        _require(isinstance(raw["name"], str), f"{path}.name", "must be a string")
        for key in ("from_bar", "to_bar"):
            value = raw[key]
            _require(
                isinstance(value, int) and not isinstance(value, bool),
                f"{path}.{key}",
                f"must be an integer, got {value!r}",
            )
        try:
            sections.append(Section(raw["name"], raw["from_bar"], raw["to_bar"]))
        except ValidationError as err:
            raise ParseError(f"{path}: {err}") from None
    try:
        return SectionMap(tuple(sections))
    except ValidationError as err:
        raise ParseError(f"sections: {err}") from None


def _fmt_float(value: float) -> str:
    return repr(float(value))


def _fmt_optional(value: float | None) -> str:
    return "" if value is None else _fmt_float(value)


def _fmt_beats(value: Fraction) -> str:
    return str(value)  # "4" or "7/2"


def export_workbook(corpus: MovementCorpus) -> bytes:
    """Serialize a corpus to the wide five-columns-per-recording CSV."""
    if not corpus.entries:
        raise ValidationError("cannot export an empty corpus")
    beats = corpus.meter.beats_per_bar()
    header1: list[str] = []
    header2: list[str] = []
    for index, entry in enumerate(corpus.entries):
        block1 = [entry.meta.label, entry.meta.performer, "", "", ""]
        block2 = [
            str(entry.meta.year),
            _fmt_optional(entry.laps.anacrusis_duration),
            _fmt_optional(entry.laps.reported_total),
            "",
            "",
        ]
        if index == 0:
            block1[2] = corpus.movement_id
            if corpus.meter.anacrusis_beats is not None:
                block2[3] = _fmt_beats(corpus.meter.anacrusis_beats)
        header1.extend(block1)
        header2.extend(block2)

    buffer = StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header1)
    writer.writerow(header2)
    for bar in range(corpus.meter.bar_count):
        row: list[str] = []
        for entry in corpus.entries:
            row.extend(
                [
                    str(bar + 1),
                    _fmt_float(entry.laps.timestamps[bar]),
                    _fmt_float(entry.series.bar_durations[bar]),
                    _fmt_beats(beats[bar]),
                    _fmt_float(entry.series.bpm[bar]),
                ]
            )
        writer.writerow(row)
    return buffer.getvalue().encode("utf-8")


def _parse_cell_float(cell: str, label: str, row: int, what: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(
            f"recording {label!r}, row {row}: malformed {what} {cell!r}"
        ) from None


def import_workbook(data: bytes | str) -> MovementCorpus:
    """Rebuild a corpus from a workbook export.

    Durations and BPM are recomputed from the cumulative column, which
    is the authoritative one; any stored cell that disagrees with its
    recomputation marks that bar as corrected.

    Raises:
        AlignmentError: blocks of unequal length or disagreeing bar
            indices or beats columns.
        ParseError: anything that cannot be read at all.
    """
    text = _decode(data)
    rows = list(csv.reader(StringIO(text)))
    if len(rows) < 3:
        raise ParseError("workbook needs two header rows and at least one data row")
    width = len(rows[0])
    if width == 0 or width % _BLOCK_WIDTH != 0:
        raise ParseError(
            f"header width {width} is not a multiple of {_BLOCK_WIDTH}"
        )
    for number, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ParseError(
                f"row {number}: expected {width} cells, got {len(row)}"
            )
    blocks = width // _BLOCK_WIDTH
    header1, header2 = rows[0], rows[1]
    data_rows = rows[2:]
    movement_id = header1[2]
    anacrusis_beats = None
    if header2[3] != "":
        try:
            anacrusis_beats = as_beats(header2[3])
        except (ValidationError, ValueError, ZeroDivisionError):
            raise ParseError(
                f"malformed anacrusis beats {header2[3]!r} in header"
            ) from None

    # block lengths: rows with a nonempty bar cell, which must be an
    # unbroken prefix of the data rows
    lengths: list[int] = []
    labels: list[str] = []
    for b in range(blocks):
        base = b * _BLOCK_WIDTH
        label = header1[base]
        if not label:
            raise ParseError(f"block {b + 1}: missing recording label in header")
        labels.append(label)
        length = 0
        for r, row in enumerate(data_rows):
            if row[base] != "":
                if r != length:
                    raise AlignmentError(
                        f"recording {label!r}: data resumes at row {r + 3} "
                        "after a gap"
                    )
                length += 1
        lengths.append(length)

    bar_count = lengths[0]
    if bar_count == 0:
        raise ParseError(f"recording {labels[0]!r} has no data rows")
    for label, length in zip(labels, lengths):
        if length != bar_count:
            raise AlignmentError(
                f"recording {label!r} has {length} rows where "
                f"{labels[0]!r} has {bar_count}: misaligned blocks"
            )
    if len(data_rows) != bar_count:
        raise AlignmentError(
            f"workbook has {len(data_rows)} data rows but blocks end at "
            f"row {bar_count + 2}"
        )

    shared_beats: list[Fraction] | None = None
    entries: list[CorpusEntry] = []
    for b in range(blocks):
        base = b * _BLOCK_WIDTH
        label = labels[b]
        performer = header1[base + 1]
        try:
            year = int(header2[base])
        except ValueError:
            raise ParseError(
                f"recording {label!r}: malformed year {header2[base]!r}"
            ) from None
        try:
            anacrusis_duration = (
                float(header2[base + 1]) if header2[base + 1] != "" else None
            )
            reported_total = (
                float(header2[base + 2]) if header2[base + 2] != "" else None
            )
        except ValueError:
            raise ParseError(
                f"recording {label!r}: malformed header duration cell"
            ) from None

        timestamps: list[float] = []
        stored_durations: list[float] = []
        stored_bpm: list[float] = []
        block_beats: list[Fraction] = []
        for r, row in enumerate(data_rows):
            number = r + 3
            try:
                bar_cell = int(row[base])
            except ValueError:
                raise ParseError(
                    f"recording {label!r}, row {number}: malformed bar "
                    f"index {row[base]!r}"
                ) from None
            if bar_cell != r + 1:
                raise AlignmentError(
                    f"recording {label!r}, row {number}: bar index "
                    f"{bar_cell}, expected {r + 1}"
                )
            timestamps.append(
                _parse_cell_float(row[base + 1], label, number, "timestamp")
            )
            stored_durations.append(
                _parse_cell_float(row[base + 2], label, number, "duration")
            )
            try:
                block_beats.append(as_beats(row[base + 3]))
            except (ValidationError, ValueError, ZeroDivisionError):
                raise ParseError(
                    f"recording {label!r}, row {number}: malformed beats "
                    f"{row[base + 3]!r}"
                ) from None
            stored_bpm.append(_parse_cell_float(row[base + 4], label, number, "BPM"))

        if shared_beats is None:
            shared_beats = block_beats
        elif block_beats != shared_beats:
            first_bad = next(
                i for i, (a, c) in enumerate(zip(block_beats, shared_beats)) if a != c
            )
            raise AlignmentError(
                f"recording {label!r}, row {first_bad + 3}: beats column "
                f"disagrees with {labels[0]!r}"
            )

        try:
            laps = LapSequence(
                tuple(timestamps),
                anacrusis_duration=anacrusis_duration,
                reported_total=reported_total,
            )
        except ValidationError as err:
            raise ParseError(f"recording {label!r}: {err}") from None

        durations = bar_durations(laps)
        flags: list[BarFlag] = []
        bpm: list[float] = []
        for i, (duration, n) in enumerate(zip(durations, block_beats)):
            recomputed = bpm_from_duration(duration, n)
            bpm.append(recomputed)
            disagrees = (
                abs(stored_bpm[i] - recomputed) > BPM_RECOMPUTE_TOLERANCE
                or abs(stored_durations[i] - duration) > DURATION_RECOMPUTE_TOLERANCE
            )
            flags.append(BarFlag.CORRECTED if disagrees else BarFlag.MEASURED)
        series = TempoSeries(
            bar_durations=tuple(durations), bpm=tuple(bpm), flags=tuple(flags)
        )
        entries.append(
            CorpusEntry(RecordingMeta(performer, year, label), laps, series)
        )

    assert shared_beats is not None
    segments = [MeterSegment(1, shared_beats[0])]
    for i in range(1, bar_count):
        if shared_beats[i] != shared_beats[i - 1]:
            segments.append(MeterSegment(i + 1, shared_beats[i]))
    meter = MeterMap(
        bar_count=bar_count,
        segments=tuple(segments),
        anacrusis_beats=anacrusis_beats,
    )
    try:
        return MovementCorpus(movement_id, meter, tuple(entries))
    except ValidationError as err:
        raise AlignmentError(str(err)) from None
