"""Command-line pipeline: validate, compute, plot, simulate.

A movement project is one JSON config file::

    {
      "movement_id": "sonata1-i",
      "meter_map": "meter.json",
      "output_dir": "out",
      "recordings": [
        {"label": "alder-1931", "path": "laps/alder.csv",
         "performer": "E. Alder", "year": 1931,
         "format": {"unit": "seconds", "has_header": true}}
      ],
      "section_map": "sections.json",
      "reference_lines": [{"label": "Czerny", "bpm": 168}]
    }

Relative paths are resolved against the config file's directory. Flags
override config fields. Exit codes are stable for scripting: 0 success,
1 domain or validation failure, 2 unusable input (I/O, parsing, bad
parameters). All artifacts land under the output directory and are
written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .analysis import (
    AnomalyReport,
    SectionMap,
    align_corpus,
    detect_anomalies,
    recording_summary,
    section_proportions,
)
from .charts import ChartKind, ChartSpec, render_chart
from .core import (
    ConsistencyReport,
    LapSequence,
    MeterMap,
    MovementCorpus,
    RecordingMeta,
    compute_tempo_series,
    consistency_check,
)
from .errors import LapTempoError, ParseError, ValidationError
from .io import (
    LapFileFormat,
    TimeUnit,
    export_workbook,
    parse_lap_csv,
    parse_meter_map,
    parse_section_map,
)
from .simulate import JitterDistribution, JitterModel, run_simulation

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RecordingConfig:
    label: str
    path: Path
    fmt: LapFileFormat
    performer: str
    year: int


@dataclass(frozen=True)
class ProjectConfig:
    movement_id: str
    meter_map: Path
    recordings: tuple[RecordingConfig, ...]
    output_dir: Path
    section_map: Path | None = None
    reference_lines: tuple[tuple[str, float], ...] = ()


def _config_str(doc: dict, key: str, where: str) -> str:
    value = doc.get(key)
    if not isinstance(value, str) or not value:
        raise ParseError(f"{where}.{key}: must be a nonempty string")
    return value


def load_config(path: Path) -> ProjectConfig:
    """Read and validate a project config file."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ParseError(f"cannot read config {path}: {err}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"config {path} is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ParseError("config must be a JSON object")
    base = path.parent

    movement_id = _config_str(doc, "movement_id", "config")
    meter_map = base / _config_str(doc, "meter_map", "config")
    output_dir = base / (
        doc["output_dir"] if isinstance(doc.get("output_dir"), str) else "out"
    )

    raw_recordings = doc.get("recordings")
    if not isinstance(raw_recordings, list) or not raw_recordings:
        raise ParseError("config.recordings: must be a nonempty array")
    recordings: list[RecordingConfig] = []
    seen: set[str] = set()
    for i, raw in enumerate(raw_recordings):
        where = f"config.recordings[{i}]"
        if not isinstance(raw, dict):
            raise ParseError(f"{where}: must be an object")
        label = _config_str(raw, "label", where)
        if label in seen:
            raise ParseError(f"{where}.label: duplicate label {label!r}")
        seen.add(label)
        rec_path = base / _config_str(raw, "path", where)
        performer = _config_str(raw, "performer", where)
        year = raw.get("year")
        if not isinstance(year, int) or isinstance(year, bool):
            raise ParseError(f"{where}.year: must be an integer")
        fmt_doc = raw.get("format", {})
        if not isinstance(fmt_doc, dict):
            raise ParseError(f"{where}.format: must be an object")
        try:
            unit = TimeUnit(fmt_doc.get("unit", "seconds"))
        except ValueError:
            raise ParseError(
                f"{where}.format.unit: unknown unit {fmt_doc.get('unit')!r}"
            ) from None
        try:
            fmt = LapFileFormat(
                time_unit=unit,
                has_header=bool(fmt_doc.get("has_header", True)),
                delimiter=fmt_doc.get("delimiter", ","),
            )
        except ValidationError as err:
            raise ParseError(f"{where}.format: {err}") from None
        recordings.append(RecordingConfig(label, rec_path, fmt, performer, year))

    section_map = None
    if doc.get("section_map") is not None:
        section_map = base / _config_str(doc, "section_map", "config")

    reference_lines: list[tuple[str, float]] = []
    raw_refs = doc.get("reference_lines", [])
    if not isinstance(raw_refs, list):
        raise ParseError("config.reference_lines: must be an array")
    for i, raw in enumerate(raw_refs):
        where = f"config.reference_lines[{i}]"
        if not isinstance(raw, dict) or "label" not in raw or "bpm" not in raw:
            raise ParseError(f"{where}: needs label and bpm fields")
        bpm = raw["bpm"]
        if not isinstance(bpm, (int, float)) or isinstance(bpm, bool) or bpm <= 0:
            raise ParseError(f"{where}.bpm: must be a positive number")
        reference_lines.append((str(raw["label"]), float(bpm)))

    return ProjectConfig(
        movement_id=movement_id,
        meter_map=meter_map,
        recordings=tuple(recordings),
        output_dir=output_dir,
        section_map=section_map,
        reference_lines=tuple(reference_lines),
    )


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from None


def _load_meter(config: ProjectConfig) -> MeterMap:
    return parse_meter_map(_read_bytes(config.meter_map))


def _load_laps(rec: RecordingConfig) -> LapSequence:
    try:
        return parse_lap_csv(_read_bytes(rec.path), rec.fmt)
    except ParseError as err:
        raise ParseError(f"recording {rec.label!r}: {err}") from None


def _load_sections(config: ProjectConfig) -> SectionMap | None:
    if config.section_map is None:
        return None
    return parse_section_map(_read_bytes(config.section_map))


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _validation_entry(
    rec: RecordingConfig,
    report: ConsistencyReport,
    anomalies: AnomalyReport | None,
) -> dict:
    entry = {
        "label": rec.label,
        "count_ok": report.count_ok,
        "expected_bars": report.expected_bars,
        "actual_bars": report.actual_bars,
        "sum_ok": report.sum_ok,
        "residual": report.residual,
        "tolerance": report.tolerance,
    }
    if anomalies is None:
        entry["anomalies"] = None
        entry["anomaly_method"] = None
    else:
        entry["anomalies"] = [
            {
                "bar": a.bar,
                "observed_bpm": a.observed_bpm,
                "reference_bpm": a.reference_bpm,
                "reason": str(a.reason),
            }
            for a in anomalies.flagged
        ]
        entry["anomaly_method"] = anomalies.method
    entry["passed"] = (
        report.passed and anomalies is not None and not anomalies.flagged
    )
    return entry


def _run_validation(config: ProjectConfig) -> dict:
    meter = _load_meter(config)
    entries = []
    for rec in config.recordings:
        laps = _load_laps(rec)
        report = consistency_check(laps, meter)
        anomalies = None
        if report.count_ok:
            series = compute_tempo_series(laps, meter)
            anomalies = detect_anomalies(series)
        entries.append(_validation_entry(rec, report, anomalies))
    return {
        "movement_id": config.movement_id,
        "bar_count": meter.bar_count,
        "recordings": entries,
        "passed": all(e["passed"] for e in entries),
    }


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(Path(args.config))
    report = _run_validation(config)
    sys.stdout.write(_dump_json(report))
    return EXIT_OK if report["passed"] else EXIT_FAILURE


def _build_corpus(config: ProjectConfig, force: bool) -> MovementCorpus:
    validation = _run_validation(config)
    if not validation["passed"] and not force:
        raise ValidationError(
            "validation failed (run the validate command for details); "
            "use --force to proceed with the recordings that align"
        )
    meter = _load_meter(config)
    pairs = []
    for rec in config.recordings:
        laps = _load_laps(rec)
        pairs.append((RecordingMeta(rec.performer, rec.year, rec.label), laps))
    corpus, _ = align_corpus(pairs, meter, config.movement_id)
    if not corpus.entries:
        raise ValidationError("no recording matches the meter's bar count")
    return corpus


def _summary(config: ProjectConfig, corpus: MovementCorpus) -> dict:
    sections = _load_sections(config)
    recordings = []
    for entry in corpus.entries:
        stats = recording_summary(entry.series)
        item = {
            "label": entry.meta.label,
            "performer": entry.meta.performer,
            "year": entry.meta.year,
            "mean_bpm": stats.mean_bpm,
            "std_bpm": stats.std_bpm,
            "min_bpm": stats.min_bpm,
            "max_bpm": stats.max_bpm,
        }
        if sections is not None:
            shares = section_proportions(entry.laps, sections)
            item["section_proportions"] = {
                sec.name: share
                for sec, share in zip(sections.sections, shares)
            }
        recordings.append(item)
    return {
        "movement_id": corpus.movement_id,
        "bar_count": corpus.meter.bar_count,
        "recordings": recordings,
        "std_kind": "population",
    }


def cmd_compute(args: argparse.Namespace) -> int:
    config = load_config(Path(args.config))
    if args.out:
        config = _with_output_dir(config, Path(args.out))
    corpus = _build_corpus(config, args.force)
    workbook_path = config.output_dir / f"{config.movement_id}_workbook.csv"
    summary_path = config.output_dir / f"{config.movement_id}_summary.json"
    summary = _summary(config, corpus)
    _atomic_write(workbook_path, export_workbook(corpus))
    _atomic_write(summary_path, _dump_json(summary).encode("utf-8"))
    sys.stdout.write(_dump_json(summary))
    return EXIT_OK


_KIND_ALIASES = {kind.value: kind for kind in ChartKind}


def _parse_kinds(raw: list[str]) -> list[ChartKind]:
    names: list[str] = []
    for item in raw:
        names.extend(part.strip() for part in item.split(",") if part.strip())
    if names == ["all"]:
        return list(ChartKind)
    kinds = []
    for name in names:
        if name not in _KIND_ALIASES:
            raise ValidationError(
                f"unknown chart kind {name!r}; choose from "
                f"{', '.join(_KIND_ALIASES)} or 'all'"
            )
        kinds.append(_KIND_ALIASES[name])
    return kinds


def cmd_plot(args: argparse.Namespace) -> int:
    config = load_config(Path(args.config))
    if args.out:
        config = _with_output_dir(config, Path(args.out))
    kinds = _parse_kinds(args.kind)
    if not kinds:
        raise ValidationError("no chart kind requested")
    corpus = _build_corpus(config, args.force)
    sections = _load_sections(config)

    span = None
    if args.span:
        try:
            lo, hi = (int(part) for part in args.span.split(":"))
        except ValueError:
            raise ValidationError(
                f"--span expects FROM:TO bar numbers, got {args.span!r}"
            ) from None
        span = (lo, hi)
    labels = tuple(
        part.strip() for part in (args.labels or "").split(",") if part.strip()
    )

    for kind in kinds:
        spec = ChartSpec(
            kind=kind,
            recording_labels=labels,
            bar_span=span,
            bin_width=args.bin_width,
            reference_lines=config.reference_lines,
            width=args.width,
            height=args.height,
        )
        document = render_chart(corpus, spec, sections=sections)
        out_path = config.output_dir / f"{config.movement_id}_{kind.value}.svg"
        _atomic_write(out_path, document)
        sys.stdout.write(f"{out_path}\n")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    if (args.bpm is None) == (args.curve is None):
        raise ValidationError("give exactly one of --bpm or --curve")
    if args.bpm is not None:
        if args.bars < 1:
            raise ValidationError("--bars must be at least 1")
        curve = [args.bpm] * args.bars
    else:
        try:
            doc = json.loads(Path(args.curve).read_text(encoding="utf-8"))
        except OSError as err:
            raise ParseError(f"cannot read curve file: {err}") from None
        except json.JSONDecodeError as err:
            raise ParseError(f"curve file is not valid JSON: {err}") from None
        if not isinstance(doc, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in doc
        ):
            raise ParseError("curve file must be a JSON array of BPM numbers")
        curve = [float(v) for v in doc]
    meter = MeterMap.constant(len(curve), args.beats)
    model = JitterModel(
        distribution=JitterDistribution(args.distribution),
        scale=args.jitter,
        seed=args.seed,
    )
    report = run_simulation(curve, meter, model, trials=args.trials)
    sys.stdout.write(_dump_json(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_FAILURE


def _with_output_dir(config: ProjectConfig, out: Path) -> ProjectConfig:
    return ProjectConfig(
        movement_id=config.movement_id,
        meter_map=config.meter_map,
        recordings=config.recordings,
        output_dir=out,
        section_map=config.section_map,
        reference_lines=config.reference_lines,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laptempo",
        description=(
            "Turn barline lap timestamps into validated bar-level tempo "
            "data, simulate the timing-error model, and render charts."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser(
        "validate", help="run lap-count, duration-sum and anomaly checks"
    )
    validate.add_argument("--config", required=True, help="project config JSON")
    validate.set_defaults(func=cmd_validate)

    compute = sub.add_parser(
        "compute", help="write the multi-recording workbook CSV and summary JSON"
    )
    compute.add_argument("--config", required=True, help="project config JSON")
    compute.add_argument("--out", help="override the output directory")
    compute.add_argument(
        "--force",
        action="store_true",
        help="proceed past validation failures with the recordings that align",
    )
    compute.set_defaults(func=cmd_compute)

    plot = sub.add_parser("plot", help="render chart SVGs from a project")
    plot.add_argument("--config", required=True, help="project config JSON")
    plot.add_argument("--out", help="override the output directory")
    plot.add_argument("--force", action="store_true", help="as in compute")
    plot.add_argument(
        "--kind",
        action="append",
        required=True,
        help="chart kind (repeatable or comma-separated), or 'all'",
    )
    plot.add_argument(
        "--labels",
        help="comma-separated recording labels (default: every recording; "
        "the histogram uses the first one)",
    )
    plot.add_argument("--span", help="bar span FROM:TO for the focused tempograph")
    plot.add_argument("--bin-width", type=float, help="histogram bin width in BPM")
    plot.add_argument("--width", type=int, default=800, help="chart width px")
    plot.add_argument("--height", type=int, default=480, help="chart height px")
    plot.set_defaults(func=cmd_plot)

    simulate = sub.add_parser(
        "simulate", help="Monte Carlo check of the press-jitter error model"
    )
    simulate.add_argument("--bpm", type=float, help="constant true tempo")
    simulate.add_argument("--bars", type=int, default=100, help="bars with --bpm")
    simulate.add_argument(
        "--curve", help="JSON file with an array of per-bar BPM values"
    )
    simulate.add_argument(
        "--beats", type=int, default=4, help="beats per bar (constant meter)"
    )
    simulate.add_argument(
        "--jitter", type=float, default=0.1, help="jitter scale in seconds"
    )
    simulate.add_argument(
        "--distribution",
        choices=[d.value for d in JitterDistribution],
        default="uniform",
    )
    simulate.add_argument("--trials", type=int, default=10_000)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    usage_errors: tuple[type[Exception], ...] = (ParseError, OSError)
    try:
        return args.func(args)
    except usage_errors as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_USAGE
    except LapTempoError as err:
        sys.stderr.write(f"error: {err}\n")
        if args.command == "simulate":
            return EXIT_USAGE  # bad simulation parameters, not bad data
        return EXIT_FAILURE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
