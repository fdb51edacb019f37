"""Tests for scenario parsing, documents and hashing."""

import json
from pathlib import Path
from typing import Any

import pytest
from pyfect.either import Left, Right

from agrotrack.engine.scenario import (
    BUNDLED,
    load_bundled,
    load_scenario,
    merge_documents,
    parse_scenario,
    resolve_scenario,
    scenario_from_document,
    scenario_hash,
    to_document,
)
from agrotrack.errors import DomainError, ValidationError


def minimal_doc() -> dict[str, Any]:
    return {
        "name": "tiny",
        "duration_s": 3600,
        "field": {"boundary_m": [[0, 0], [100, 0], [100, 100], [0, 100]]},
        "herd": {"count": 3},
        "gateways": [{"position_m": [50, 50]}],
    }


# ============================================================================
# parse_scenario
# ============================================================================


def test_minimal_document_parses_with_defaults() -> None:
    match parse_scenario(minimal_doc()):
        case Right(scenario):
            assert scenario.herd.count == 3  # noqa: PLR2004
            assert scenario.energy.report_interval == 300.0  # noqa: PLR2004
            assert scenario.mac.mode == "unslotted"
        case Left(problems):
            pytest.fail(f"unexpected violations: {problems}")


def test_all_violations_are_reported() -> None:
    doc = minimal_doc()
    doc["duration_s"] = -1
    doc["radio"] = {"sf": 5, "bw_hz": 100}
    doc["herd"] = {"count": 0}
    match parse_scenario(doc):
        case Left(problems):
            text = "\n".join(problems)
            assert "duration_s" in text
            assert "radio.sf" in text
            assert "radio.bw_hz" in text
            assert "herd.count" in text
        case Right(_):
            pytest.fail("invalid document parsed")


def test_unknown_keys_are_rejected() -> None:
    doc = minimal_doc()
    doc["radio"] = {"sf": 7, "power": 14}
    doc["colour"] = "red"
    match parse_scenario(doc):
        case Left(problems):
            assert "radio: unknown key 'power'" in problems
            assert "unknown top-level key 'colour'" in problems
        case Right(_):
            pytest.fail("unknown keys accepted")


def test_non_object_document() -> None:
    assert isinstance(parse_scenario([1, 2]), Left)


def test_semantic_checks() -> None:
    doc = minimal_doc()
    doc["field"]["obstructions_m"] = [[[90, 90], [150, 90], [150, 150], [90, 150]]]
    doc["failure_plan"] = [{"gateway": 3, "start_s": 10, "end_s": 5}]
    doc["episodes"] = [{"animal": 7, "kind": "fever", "start_s": 0, "duration_s": 10}]
    match parse_scenario(doc):
        case Left(problems):
            text = "\n".join(problems)
            assert "lies outside the field" in text
            assert "unknown gateway 3" in text
            assert "start_s < end_s" in text
            assert "unknown animal 7" in text
        case Right(_):
            pytest.fail("semantic violations accepted")


def test_missing_gateways() -> None:
    doc = minimal_doc()
    del doc["gateways"]
    match parse_scenario(doc):
        case Left(problems):
            assert "gateways must list at least one gateway" in problems
        case Right(_):
            pytest.fail("scenario without gateways accepted")


@pytest.mark.parametrize(
    ("overlay", "expected"),
    [
        ({"mac": {"mode": "aloha"}}, "mac.mode must be unslotted or slotted"),
        ({"mac": {"reception": "soft"}}, "mac.reception must be logistic or hard"),
        ({"mac": {"k_microslots": 0}}, "mac.k_microslots must be an integer >= 1"),
        ({"mac": {"capture_db": -3}}, "mac.capture_db must be >= 0"),
        ({"mac": {"tau": 1.5}}, "mac.tau must be within [0, 1]"),
        ({"cloud": {"service_msg_s": 0}}, "cloud.service_msg_s must be > 0"),
        ({"cloud": {"queue_bound": 0}}, "cloud.queue_bound must be >= 1"),
        ({"report": {"throughput_bucket_s": 0}}, "report.throughput_bucket_s must be > 0"),
        ({"report": {"distance_bin_m": -250}}, "report.distance_bin_m must be > 0"),
        ({"report": {"warmup_s": -1}}, "report.warmup_s must be >= 0"),
    ],
)
def test_section_ranges(overlay: dict[str, Any], expected: str) -> None:
    match parse_scenario(merge_documents(minimal_doc(), overlay)):
        case Left(problems):
            assert any(p.startswith(expected) for p in problems), problems
        case Right(_):
            pytest.fail(f"{overlay} accepted")


def test_section_ranges_raise_from_documents() -> None:
    doc = merge_documents(minimal_doc(), {"cloud": {"service_msg_s": 0}})
    with pytest.raises(ValidationError, match=r"cloud\.service_msg_s"):
        scenario_from_document(doc)


def test_infeasible_energy_is_a_domain_error() -> None:
    doc = merge_documents(minimal_doc(), {"energy": {"t_sen_s": 400}})
    with pytest.raises(DomainError):
        scenario_from_document(doc)


# ============================================================================
# Documents and hashing
# ============================================================================


def test_document_round_trip() -> None:
    scenario = load_bundled("trial_baseline")
    again = scenario_from_document(json.loads(json.dumps(to_document(scenario))))
    assert again == scenario
    assert scenario_hash(again) == scenario_hash(scenario)


def test_hash_tracks_content() -> None:
    scenario = load_bundled("scaling")
    assert scenario_hash(scenario) == scenario_hash(load_bundled("scaling"))
    assert scenario_hash(scenario) != scenario_hash(scenario.with_seed(1))
    assert len(scenario_hash(scenario)) == 64  # noqa: PLR2004


def test_merge_is_deep() -> None:
    merged = merge_documents({"a": {"b": 1, "c": 2}, "d": [1]}, {"a": {"c": 3}, "d": [2]})
    assert merged == {"a": {"b": 1, "c": 3}, "d": [2]}


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_load(name: str) -> None:
    assert load_bundled(name).name == name


def test_overlays_apply_in_order() -> None:
    scenario = resolve_scenario("scaling", ({"seed": 1}, {"seed": 2, "duration_s": 60}))
    assert scenario.seed == 2  # noqa: PLR2004
    assert scenario.duration_s == 60.0  # noqa: PLR2004


def test_bad_files(tmp_path: Path) -> None:
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValidationError, match="not valid JSON"):
        load_scenario(broken)
    with pytest.raises(ValidationError, match="cannot read"):
        load_scenario(tmp_path / "missing.json")
    with pytest.raises(ValidationError, match="unknown bundled scenario"):
        load_bundled("pasture")


# ============================================================================
# Derived scenarios
# ============================================================================


def test_with_herd_keeps_density() -> None:
    base = load_bundled("trial_baseline")
    bigger = base.with_herd(60)
    ratio = bigger.field.boundary.area / base.field.boundary.area
    assert ratio == pytest.approx(4.0)
    assert bigger.gateways[0].position == pytest.approx(base.gateways[0].position)
    assert all(e.animal < 60 for e in bigger.episodes)  # noqa: PLR2004
    assert len(base.with_herd(5).episodes) == 2  # noqa: PLR2004


def test_mac_params_derive_from_airtime() -> None:
    scenario = load_bundled("trial_baseline")
    params = scenario.mac_params()
    assert params.slot_s == pytest.approx(scenario.airtime)
    assert params.tau == pytest.approx(scenario.airtime / 300.0)


def test_trial_field_is_thirty_acres() -> None:
    field = load_bundled("trial_baseline").field.boundary
    assert field.area == pytest.approx(30 * 4046.8564224, rel=1e-3)
