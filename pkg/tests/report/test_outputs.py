"""Tests for output writers, reference tables and the CSV self-check."""

import csv
import json
from pathlib import Path

import pytest

from agrotrack.engine.scenario import resolve_scenario
from agrotrack.engine.simulator import run
from agrotrack.report import (
    SCHEMAS,
    RunManifest,
    atomic_write,
    check_csv,
    csv_text,
    selfcheck,
    summary_document,
    write_csv,
    write_reference,
    write_roc,
    write_run,
)

# ============================================================================
# Writers
# ============================================================================


def test_atomic_write_leaves_no_temporary_files(tmp_path: Path) -> None:
    target = tmp_path / "nested" / "out.txt"
    atomic_write(target, "first\n")
    atomic_write(target, "second\n")
    assert target.read_text(encoding="utf-8") == "second\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_csv_text_format() -> None:
    text = csv_text(["a", "b", "c"], [(1, 0.1, "x"), (2, 1e-20, True)])
    assert text == "a,b,c\n1,0.1,x\n2,1e-20,1\n"


def test_write_csv_requires_a_schema(tmp_path: Path) -> None:
    with pytest.raises(KeyError, match="no column schema"):
        write_csv(tmp_path / "mystery.csv", [])


def test_manifest(tmp_path: Path) -> None:
    path = RunManifest(["agrotrack", "simulate"], "0.1.0", seed=3, outputs=["a.csv"]).write(
        tmp_path
    )
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert doc["seed"] == 3  # noqa: PLR2004
    assert doc["outputs"] == ["a.csv"]


# ============================================================================
# Run outputs
# ============================================================================


def test_run_outputs_conform_to_their_schemas(tmp_path: Path) -> None:
    report = run(resolve_scenario("trial_baseline", ({"duration_s": 7200},)))
    written = write_run(report, tmp_path)
    names = {p.name for p in written}
    assert {"summary.json", "throughput.csv", "battery.csv", "alerts.csv"} <= names
    assert "throughput.plot.json" in names
    assert selfcheck(tmp_path) == []

    summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    assert summary == json.loads(json.dumps(summary_document(report)))
    assert summary["generated"] == sum(summary["fate_counts"].values())

    with (tmp_path / "throughput.csv").open(encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 2  # noqa: PLR2004
    assert [float(r["time_s"]) for r in rows] == [0.0, 3600.0]

    with (tmp_path / "alerts.csv").open(encoding="utf-8", newline="") as handle:
        header = next(csv.reader(handle))
    assert header == [
        "animal_id",
        "rule",
        "trigger_s",
        "detection_s",
        "delivery_s",
        "latency_s",
    ]


def test_roc_curve_is_written_for_mixed_classes(tmp_path: Path) -> None:
    report = run(resolve_scenario("trial_baseline", ({"duration_s": 7200},)))
    written = write_roc(report, [2, 4], tmp_path)
    assert [p.name for p in written] == ["roc.csv", "roc.plot.json"]
    assert check_csv(tmp_path / "roc.csv") == []
    with (tmp_path / "roc.csv").open(encoding="utf-8", newline="") as handle:
        rows = [(float(r["fpr"]), float(r["tpr"])) for r in csv.DictReader(handle)]
    assert rows[0] == (0.0, 0.0)
    assert rows[-1] == (1.0, 1.0)
    assert [f for f, _ in rows] == sorted(f for f, _ in rows)


def test_roc_curve_is_skipped_for_a_single_class(tmp_path: Path) -> None:
    report = run(resolve_scenario("trial_baseline", ({"duration_s": 7200},)))
    assert write_roc(report, [], tmp_path) == []
    assert not (tmp_path / "roc.csv").exists()


# ============================================================================
# Reference tables
# ============================================================================


def test_reference_tables(tmp_path: Path) -> None:
    write_reference(tmp_path)
    with (tmp_path / "comparison_reference.csv").open(encoding="utf-8", newline="") as handle:
        comparison = list(csv.DictReader(handle))
    assert [r["metric"] for r in comparison][:2] == ["range_km", "battery_days"]
    assert all(r["source"] == "paper" for r in comparison)
    with (tmp_path / "composite.csv").open(encoding="utf-8", newline="") as handle:
        scores = {r["system"]: float(r["score"]) for r in csv.DictReader(handle)}
    assert scores["agrotrack"] == pytest.approx((4.0 + 1.0 / 3.0) / 5.0)
    assert max(scores, key=scores.__getitem__) == "agrotrack"
    assert selfcheck(tmp_path) == []


# ============================================================================
# Self-check
# ============================================================================


def test_check_csv_reports_problems(tmp_path: Path) -> None:
    path = tmp_path / "depletion.csv"
    path.write_text("day,remaining_mah\n1,3000.0\nx,2.0\n3\n", encoding="utf-8")
    problems = check_csv(path)
    assert "depletion.csv:3: day is not int: 'x'" in problems
    assert "depletion.csv:4: expected 2 cells, got 1" in problems


def test_check_csv_rejects_crlf_and_bad_headers(tmp_path: Path) -> None:
    crlf = tmp_path / "fit_curve.csv"
    crlf.write_bytes(b"distance_m,success\r\n1.0,0.5\r\n")
    assert check_csv(crlf) == ["fit_curve.csv: CRLF line endings"]
    header = tmp_path / "composite.csv"
    header.write_text("score,system\n", encoding="utf-8")
    assert "header does not match" in check_csv(header)[0]
    assert check_csv(tmp_path / "other.csv") == ["other.csv: no declared schema"]


def test_every_schema_has_unique_columns() -> None:
    for name, schema in SCHEMAS.items():
        columns = [c for c, _ in schema]
        assert len(columns) == len(set(columns)), name
