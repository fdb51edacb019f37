"""
Output files: summary JSON, plot-ready CSV series with their plot specs,
reference tables and the run manifest.

Every file is written to a temporary sibling and renamed into place, so a
reader never sees a half-written file. CSVs are UTF-8 with LF line endings,
`.` decimals and a fixed column order declared in `SCHEMAS`.
"""

import csv
import io
import json
import logging
import os
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Final, Literal

from agrotrack.analytics import (
    behavior_features,
    composite_score,
    roc_curve_points,
    zscore_norms,
)
from agrotrack.engine.simulator import MetricsReport
from agrotrack.engine.sweep import SweepRow

logger = logging.getLogger(__name__)

type ColumnKind = Literal["int", "float", "str"]
type Row = Sequence[object]

# ============================================================================
# Schemas
# ============================================================================

SCHEMAS: Final[dict[str, tuple[tuple[str, ColumnKind], ...]]] = {
    "throughput.csv": (("time_s", "float"), ("throughput_msg_s", "float")),
    "battery.csv": (("time_s", "float"), ("node_id", "int"), ("battery_mah", "float")),
    "alerts.csv": (
        ("animal_id", "int"),
        ("rule", "str"),
        ("trigger_s", "float"),
        ("detection_s", "float"),
        ("delivery_s", "float"),
        ("latency_s", "float"),
    ),
    "hourly_success.csv": (
        ("hour", "int"),
        ("generated", "int"),
        ("delivered", "int"),
        ("success", "float"),
    ),
    "distance_success.csv": (
        ("distance_m", "float"),
        ("generated", "int"),
        ("delivered", "int"),
        ("success", "float"),
    ),
    "sweep.csv": (
        ("n_nodes", "int"),
        ("replicates", "int"),
        ("pdr_mean", "float"),
        ("pdr_std", "float"),
        ("loss_mean", "float"),
        ("loss_std", "float"),
        ("throughput_mean", "float"),
        ("throughput_std", "float"),
        ("collision_mean", "float"),
    ),
    "loss_vs_n.csv": (("n_nodes", "int"), ("loss_mean", "float"), ("loss_std", "float")),
    "throughput_vs_n.csv": (
        ("n_nodes", "int"),
        ("throughput_mean", "float"),
        ("throughput_std", "float"),
    ),
    "recovery.csv": (
        ("failures", "int"),
        ("recovery_ratio", "float"),
        ("recovery_std", "float"),
        ("replicates", "int"),
    ),
    "linkbudget.csv": (
        ("distance_m", "float"),
        ("pl_db", "float"),
        ("snr_db", "float"),
        ("margin_db", "float"),
        ("p_los", "float"),
        ("p_obstructed", "float"),
        ("p_expected_los", "float"),
    ),
    "lifetime.csv": (
        ("interval_s", "float"),
        ("i_avg_ma", "float"),
        ("e_cycle_mj", "float"),
        ("lifetime_h", "float"),
        ("lifetime_days", "float"),
    ),
    "depletion.csv": (("day", "int"), ("remaining_mah", "float")),
    "fit_curve.csv": (("distance_m", "float"), ("success", "float")),
    "roc.csv": (("fpr", "float"), ("tpr", "float")),
    "comparison_reference.csv": (
        ("metric", "str"),
        ("agrotrack", "float"),
        ("smartfarm_ble", "float"),
        ("ruraltrack_gsm", "float"),
        ("source", "str"),
    ),
    "target_reference.csv": (("metric", "str"), ("agrotrack", "str"), ("source", "str")),
    "composite.csv": (("system", "str"), ("score", "float")),
}

# ============================================================================
# Writers
# ============================================================================


def atomic_write(path: Path, text: str) -> Path:
    """Write `text` to `path` through a temporary file in the same directory."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        Path(tmp).replace(path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def _cell(value: object) -> str:
    match value:
        case bool():
            return str(int(value))
        case float():
            return repr(value)
        case _:
            return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[Row]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows([_cell(v) for v in row] for row in rows)
    return buffer.getvalue()


def write_csv(path: Path, rows: Iterable[Row]) -> Path:
    """Write rows under the schema registered for `path.name`."""
    schema = SCHEMAS.get(path.name)
    if schema is None:
        msg = f"no column schema registered for {path.name}"
        raise KeyError(msg)
    return atomic_write(path, csv_text([name for name, _ in schema], rows))


def json_text(doc: object) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: Path, doc: object) -> Path:
    return atomic_write(path, json_text(doc))


def write_plot_spec(
    csv_path: Path, *, title: str, x: str, series: Sequence[str], x_label: str, y_label: str
) -> Path:
    """Plot description stored next to its CSV as `<stem>.plot.json`."""
    spec = {
        "data": csv_path.name,
        "title": title,
        "x": x,
        "series": list(series),
        "x_label": x_label,
        "y_label": y_label,
    }
    return write_json(csv_path.with_name(f"{csv_path.stem}.plot.json"), spec)


# ============================================================================
# Run outputs
# ============================================================================


def summary_document(report: MetricsReport) -> dict[str, Any]:
    return {
        "scenario": report.scenario,
        "scenario_hash": report.scenario_hash,
        "seed": report.seed,
        "duration_s": report.duration_s,
        "generated": report.generated,
        "pdr": report.pdr,
        "loss": report.loss,
        "fate_counts": report.fate_counts,
        "loss_by_cause": report.loss_by_cause,
        "throughput_msg_s": report.throughput_msg_s,
        "recovery_ratio": report.recovery_ratio,
        "outage_generated": report.outage_generated,
        "alerts": len(report.alert_log),
        "max_alert_latency_s": max((a.latency_s for a in report.alert_log), default=None),
        "cloud_dropped": report.cloud_dropped,
        "suppressed": report.suppressed,
        "attempts": report.attempts,
        "collisions": report.collisions,
        "collision_rate": report.collision_rate,
        "notes": list(report.notes),
    }


def _ratio(delivered: int, generated: int) -> float:
    return delivered / generated if generated else 0.0


def write_run(report: MetricsReport, out: Path) -> list[Path]:
    """Summary JSON plus every time series and table of one run."""
    written = [write_json(out / "summary.json", summary_document(report))]

    throughput = write_csv(out / "throughput.csv", report.throughput_series)
    written += [
        throughput,
        write_plot_spec(
            throughput,
            title="Cloud throughput",
            x="time_s",
            series=["throughput_msg_s"],
            x_label="Time (s)",
            y_label="Messages per second",
        ),
    ]
    battery = write_csv(
        out / "battery.csv",
        sorted(
            ((t, node, mah) for node, series in report.battery_series.items() for t, mah in series),
            key=lambda row: (row[0], row[1]),
        ),
    )
    written += [
        battery,
        write_plot_spec(
            battery,
            title="Battery level of sensor nodes",
            x="time_s",
            series=["battery_mah"],
            x_label="Time (s)",
            y_label="Remaining charge (mAh)",
        ),
    ]
    written.append(
        write_csv(
            out / "alerts.csv",
            (
                (a.animal_id, a.rule, a.trigger_s, a.detection_s, a.delivery_s, a.latency_s)
                for a in report.alert_log
            ),
        )
    )
    hourly = write_csv(
        out / "hourly_success.csv",
        ((h, g, d, _ratio(d, g)) for h, g, d in report.hourly_success),
    )
    distance = write_csv(
        out / "distance_success.csv",
        ((b, g, d, _ratio(d, g)) for b, g, d in report.distance_histogram),
    )
    written += [
        hourly,
        write_plot_spec(
            hourly,
            title="Delivery success by hour of day",
            x="hour",
            series=["success"],
            x_label="Hour",
            y_label="Success ratio",
        ),
        distance,
        write_plot_spec(
            distance,
            title="Packet success vs distance",
            x="distance_m",
            series=["success"],
            x_label="Distance to nearest gateway (m)",
            y_label="Success ratio",
        ),
    ]
    return written


def write_roc(report: MetricsReport, anomalous: Iterable[int], out: Path) -> list[Path]:
    """
    ROC curve of the z-score ranking of animals against the known anomalous ones.

    Skipped, with nothing written, when the delivered stream holds only one class.
    """
    flagged = set(anomalous)
    features = behavior_features(report.delivered_packets)
    labels = [int(f.animal_id in flagged) for f in features]
    if len(set(labels)) < 2:  # noqa: PLR2004
        logger.info("roc curve skipped: delivered animals are all one class")
        return []
    roc = write_csv(out / "roc.csv", roc_curve_points(zscore_norms(features).tolist(), labels))
    return [
        roc,
        write_plot_spec(
            roc,
            title="Anomaly ranking ROC",
            x="fpr",
            series=["tpr"],
            x_label="False positive rate",
            y_label="True positive rate",
        ),
    ]


def write_sweep(rows: Sequence[SweepRow], out: Path) -> list[Path]:
    full = write_csv(
        out / "sweep.csv",
        (
            (
                r.point,
                r.replicates,
                r.pdr_mean,
                r.pdr_std,
                r.loss_mean,
                r.loss_std,
                r.throughput_mean,
                r.throughput_std,
                r.collision_mean,
            )
            for r in rows
        ),
    )
    loss = write_csv(out / "loss_vs_n.csv", ((r.point, r.loss_mean, r.loss_std) for r in rows))
    throughput = write_csv(
        out / "throughput_vs_n.csv",
        ((r.point, r.throughput_mean, r.throughput_std) for r in rows),
    )
    return [
        full,
        loss,
        write_plot_spec(
            loss,
            title="Packet loss vs number of animals",
            x="n_nodes",
            series=["loss_mean"],
            x_label="Animals",
            y_label="Packet loss",
        ),
        throughput,
        write_plot_spec(
            throughput,
            title="System throughput vs number of animals",
            x="n_nodes",
            series=["throughput_mean"],
            x_label="Animals",
            y_label="Messages per second",
        ),
    ]


def write_recovery(rows: Sequence[SweepRow], out: Path) -> list[Path]:
    recovery = write_csv(
        out / "recovery.csv",
        ((r.point, r.recovery_mean, r.recovery_std, r.replicates) for r in rows),
    )
    return [
        recovery,
        write_plot_spec(
            recovery,
            title="Data recovery vs gateway failures",
            x="failures",
            series=["recovery_ratio"],
            x_label="Failed gateways",
            y_label="Recovery ratio",
        ),
    ]


# ============================================================================
# Reference tables
# ============================================================================


def load_reference() -> dict[str, Any]:
    ref = resources.files("agrotrack") / "scenarios" / "comparison_reference.json"
    doc: dict[str, Any] = json.loads(ref.read_text(encoding="utf-8"))
    return doc


def write_reference(out: Path) -> list[Path]:
    """Published comparison values, tagged with their source, plus composite scores."""
    ref = load_reference()
    systems = ref["systems"]
    comparison = ref["comparison"]
    comparison_rows = [
        (m["metric"], *(float(m["values"][s]) for s in systems), ref["source"]) for m in comparison
    ]
    target_rows = [(m["metric"], m["value"], ref["source"]) for m in ref["targets"]]
    scores = composite_score(
        {m["metric"]: {s: float(m["values"][s]) for s in systems} for m in comparison},
        lower_is_better=[m["metric"] for m in comparison if m.get("lower_is_better", False)],
    )
    return [
        write_csv(out / "comparison_reference.csv", comparison_rows),
        write_csv(out / "target_reference.csv", target_rows),
        write_csv(out / "composite.csv", sorted(scores.items())),
    ]


# ============================================================================
# Manifest and self-check
# ============================================================================


@dataclass(frozen=True)
class RunManifest:
    command: list[str]
    version: str
    seed: int | None = None
    scenario_hash: str | None = None
    outputs: list[str] = field(default_factory=list)
    effective: Mapping[str, object] = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def write(self, out: Path) -> Path:
        return write_json(out / "manifest.json", asdict(self) | {"effective": dict(self.effective)})


def _parses(value: str, kind: ColumnKind) -> bool:
    try:
        match kind:
            case "int":
                int(value)
            case "float":
                float(value)
    except ValueError:
        return False
    return True


def check_csv(path: Path) -> list[str]:
    """Problems with one CSV against its schema; empty when it conforms."""
    schema = SCHEMAS.get(path.name)
    if schema is None:
        return [f"{path.name}: no declared schema"]
    raw = path.read_bytes()
    if b"\r" in raw:
        return [f"{path.name}: CRLF line endings"]
    rows = list(csv.reader(io.StringIO(raw.decode("utf-8"))))
    if not rows or rows[0] != [name for name, _ in schema]:
        return [f"{path.name}: header does not match {[name for name, _ in schema]}"]
    problems: list[str] = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(schema):
            problems.append(f"{path.name}:{line}: expected {len(schema)} cells, got {len(row)}")
            continue
        problems.extend(
            f"{path.name}:{line}: {name} is not {kind}: {value!r}"
            for value, (name, kind) in zip(row, schema, strict=True)
            if not _parses(value, kind)
        )
    return problems


def selfcheck(out: Path) -> list[str]:
    """Re-parse every CSV under `out` against its declared schema."""
    problems: list[str] = []
    files = sorted(out.rglob("*.csv"))
    for path in files:
        problems.extend(check_csv(path))
    logger.info("selfcheck: %d files, %d problems", len(files), len(problems))
    return problems


__all__ = [
    "SCHEMAS",
    "RunManifest",
    "atomic_write",
    "check_csv",
    "csv_text",
    "json_text",
    "load_reference",
    "selfcheck",
    "summary_document",
    "write_csv",
    "write_json",
    "write_plot_spec",
    "write_recovery",
    "write_reference",
    "write_roc",
    "write_run",
    "write_sweep",
]
