"""End-to-end tests of the command-line pipeline."""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from demo_corpus import DEMO_METER, DEMO_SECTIONS, build_demo_corpus
from laptempo.analysis import recording_summary
from laptempo.cli import main
from laptempo.core import MeterMap, compute_tempo_series
from laptempo.io import import_workbook
from laptempo.simulate import synth_laps


def write_lap_csv(path: Path, timestamps) -> None:
    rows = ["bar,cumulative"]
    rows += [f"{i},{t!r}" for i, t in enumerate(timestamps, start=1)]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def write_meter(path: Path, meter: MeterMap) -> None:
    doc = {
        "bars": meter.bar_count,
        "segments": [
            {"from_bar": seg.from_bar, "beats": str(seg.beats_per_bar)}
            for seg in meter.segments
        ],
    }
    if meter.anacrusis_beats is not None:
        doc["anacrusis_beats"] = str(meter.anacrusis_beats)
    path.write_text(json.dumps(doc), encoding="utf-8")


def make_project(
    tmp_path: Path,
    recordings: dict[str, tuple],
    meter: MeterMap,
    sections=None,
    reference_lines=None,
) -> Path:
    write_meter(tmp_path / "meter.json", meter)
    entries = []
    for label, (timestamps, performer, year) in recordings.items():
        lap_path = tmp_path / f"{label}.csv"
        write_lap_csv(lap_path, timestamps)
        entries.append(
            {
                "label": label,
                "path": f"{label}.csv",
                "performer": performer,
                "year": year,
                "format": {"unit": "seconds", "has_header": True},
            }
        )
    config = {
        "movement_id": "testmvt",
        "meter_map": "meter.json",
        "output_dir": "out",
        "recordings": entries,
    }
    if sections is not None:
        (tmp_path / "sections.json").write_text(
            json.dumps(
                {
                    "sections": [
                        {"name": s.name, "from_bar": s.from_bar, "to_bar": s.to_bar}
                        for s in sections.sections
                    ]
                }
            ),
            encoding="utf-8",
        )
        config["section_map"] = "sections.json"
    if reference_lines:
        config["reference_lines"] = [
            {"label": label, "bpm": bpm} for label, bpm in reference_lines
        ]
    config_path = tmp_path / "project.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    return config_path


def clean_project(tmp_path: Path, bars: int = 50) -> Path:
    meter = MeterMap.constant(bars, 4)
    laps = synth_laps([240.0] * bars, meter)
    return make_project(
        tmp_path,
        {
            "rec-a": (laps.timestamps, "Player A", 1950),
            "rec-b": (laps.timestamps, "Player B", 1970),
        },
        meter,
    )


class TestValidate:
    def test_clean_project_passes(self, tmp_path, capsys):
        config = clean_project(tmp_path)
        assert main(["validate", "--config", str(config)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] is True
        assert all(r["anomalies"] == [] for r in report["recordings"])

    def test_missing_lap_fails_with_delta(self, tmp_path, capsys):
        meter = MeterMap.constant(100, 4)
        full = synth_laps([240.0] * 100, meter)
        short = list(full.timestamps)
        del short[49]
        config = make_project(
            tmp_path, {"short": (short, "Player", 1960)}, meter
        )
        assert main(["validate", "--config", str(config)]) == 1
        report = json.loads(capsys.readouterr().out)
        entry = report["recordings"][0]
        assert entry["label"] == "short"
        assert entry["expected_bars"] == 100
        assert entry["actual_bars"] == 99
        assert entry["count_ok"] is False

    def test_missing_meter_file_is_usage_error(self, tmp_path, capsys):
        config = clean_project(tmp_path)
        (tmp_path / "meter.json").unlink()
        assert main(["validate", "--config", str(config)]) == 2

    def test_anomaly_fails_validation(self, tmp_path, capsys):
        meter = MeterMap.constant(30, 4)
        ts = list(synth_laps([240.0] * 30, meter).timestamps)
        ts[14] = ts[13] + 0.05  # nearly doubled press
        config = make_project(tmp_path, {"spiky": (ts, "P", 1950)}, meter)
        assert main(["validate", "--config", str(config)]) == 1
        report = json.loads(capsys.readouterr().out)
        anomalies = report["recordings"][0]["anomalies"]
        assert anomalies, "expected at least one flagged bar"
        assert any(a["reason"] == "spike_high" for a in anomalies)


class TestCompute:
    def test_writes_workbook_and_summary(self, tmp_path, capsys):
        config = clean_project(tmp_path)
        assert main(["compute", "--config", str(config)]) == 0
        out = tmp_path / "out"
        workbook = out / "testmvt_workbook.csv"
        summary_file = out / "testmvt_summary.json"
        assert workbook.exists() and summary_file.exists()
        lines = workbook.read_text().splitlines()
        assert len(lines[2].split(",")) == 10  # two five-column blocks
        summary = json.loads(summary_file.read_text())
        assert summary["recordings"][0]["mean_bpm"] == pytest.approx(240.0)
        assert capsys.readouterr().out == summary_file.read_text()

    def test_validation_gate_and_force(self, tmp_path, capsys):
        meter = MeterMap.constant(20, 4)
        good = synth_laps([240.0] * 20, meter).timestamps
        bad = good[:-1]
        config = make_project(
            tmp_path,
            {"good": (good, "A", 1950), "bad": (bad, "B", 1960)},
            meter,
        )
        assert main(["compute", "--config", str(config)]) == 1
        capsys.readouterr()
        assert main(["compute", "--config", str(config), "--force"]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert [r["label"] for r in summary["recordings"]] == ["good"]

    def test_recompute_from_own_workbook_matches_summary(self, tmp_path, capsys):
        config = clean_project(tmp_path)
        main(["compute", "--config", str(config)])
        capsys.readouterr()
        workbook = (tmp_path / "out" / "testmvt_workbook.csv").read_bytes()
        corpus = import_workbook(workbook)
        summary = json.loads((tmp_path / "out" / "testmvt_summary.json").read_text())
        for entry, reported in zip(corpus.entries, summary["recordings"]):
            stats = recording_summary(entry.series)
            assert stats.mean_bpm == pytest.approx(reported["mean_bpm"], rel=1e-12)
            assert stats.std_bpm == pytest.approx(reported["std_bpm"], abs=1e-12)


def demo_project(tmp_path: Path) -> Path:
    corpus = build_demo_corpus()
    recordings = {
        entry.meta.label: (
            entry.laps.timestamps,
            entry.meta.performer,
            entry.meta.year,
        )
        for entry in corpus.entries
    }
    return make_project(
        tmp_path,
        recordings,
        DEMO_METER,
        sections=DEMO_SECTIONS,
        reference_lines=(("Czerny", 168.0), ("Moscheles", 152.0)),
    )


class TestPlot:
    def test_histogram_kind(self, tmp_path, capsys):
        config = clean_project(tmp_path)
        code = main(
            [
                "plot",
                "--config",
                str(config),
                "--kind",
                "histogram_pdf",
                "--bin-width",
                "2",
            ]
        )
        assert code == 0
        svg = tmp_path / "out" / "testmvt_histogram_pdf.svg"
        assert svg.exists()
        ET.fromstring(svg.read_text())

    def test_ridgeline_needs_two_recordings(self, tmp_path, capsys):
        meter = MeterMap.constant(10, 4)
        laps = synth_laps([240.0] * 10, meter).timestamps
        config = make_project(tmp_path, {"only": (laps, "P", 1950)}, meter)
        assert main(["plot", "--config", str(config), "--kind", "ridgeline"]) == 1
        assert "at least 2" in capsys.readouterr().err

    def test_all_kinds_byte_stable(self, tmp_path, capsys):
        config = demo_project(tmp_path)
        args = [
            "plot",
            "--config",
            str(config),
            "--kind",
            "all",
            "--span",
            "30:110",
        ]
        assert main(args) == 0
        out_dir = tmp_path / "out"
        files = sorted(out_dir.glob("*.svg"))
        assert len(files) == 6
        first_pass = {f.name: f.read_bytes() for f in files}
        assert main(args) == 0
        for f in sorted(out_dir.glob("*.svg")):
            assert f.read_bytes() == first_pass[f.name]

    def test_unknown_kind(self, tmp_path, capsys):
        config = clean_project(tmp_path)
        assert main(["plot", "--config", str(config), "--kind", "sparkline"]) == 1
        assert "unknown chart kind" in capsys.readouterr().err


class TestSimulate:
    def test_passing_report(self, capsys):
        code = main(
            [
                "simulate",
                "--bpm",
                "160",
                "--bars",
                "40",
                "--jitter",
                "0.1",
                "--trials",
                "2000",
                "--seed",
                "7",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] is True
        assert report["checks"]["section_error_interior_independence"] is True

    def test_zero_jitter(self, capsys):
        code = main(
            ["simulate", "--bpm", "160", "--bars", "10", "--jitter", "0",
             "--trials", "50"]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["per_bar_bpm_error_std"] == 0.0
        assert report["mean_bias"] == 0.0

    def test_same_seed_identical_bytes(self, capsys):
        args = [
            "simulate", "--bpm", "150", "--bars", "20",
            "--jitter", "0.05", "--trials", "200", "--seed", "3",
        ]
        main(args)
        first = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == first

    def test_curve_file(self, tmp_path, capsys):
        curve = tmp_path / "curve.json"
        curve.write_text(json.dumps([160.0] * 15))
        code = main(
            ["simulate", "--curve", str(curve), "--jitter", "0.05",
             "--trials", "200"]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["bars"] == 15

    def test_bpm_and_curve_conflict(self, tmp_path, capsys):
        curve = tmp_path / "curve.json"
        curve.write_text("[160]")
        code = main(
            ["simulate", "--bpm", "100", "--curve", str(curve), "--trials", "10"]
        )
        assert code == 2

    def test_bad_trials(self, capsys):
        assert main(["simulate", "--bpm", "100", "--trials", "0"]) == 2
