"""
Discrete-event simulation of the herd monitoring pipeline.

Example:
    ```python
    from agrotrack.engine import load_bundled, run

    report = run(load_bundled("trial_baseline").with_seed(42))
    print(report.pdr, len(report.alert_log))
    ```
"""

from agrotrack.engine.calibrate import CalibrationResult, CalibrationTargets, calibrate
from agrotrack.engine.failures import inject_failures, normalize_plan
from agrotrack.engine.mobility import AnimalState, step_mobility
from agrotrack.engine.scenario import (
    BUNDLED,
    Scenario,
    load_bundled,
    load_scenario,
    parse_scenario,
    resolve_scenario,
    scenario_hash,
)
from agrotrack.engine.simulator import MetricsReport, resolve_fate, run, transmit
from agrotrack.engine.sweep import SweepRow, failure_sweep, sweep

__all__ = [
    "BUNDLED",
    "AnimalState",
    "CalibrationResult",
    "CalibrationTargets",
    "MetricsReport",
    "Scenario",
    "SweepRow",
    "calibrate",
    "failure_sweep",
    "inject_failures",
    "load_bundled",
    "load_scenario",
    "normalize_plan",
    "parse_scenario",
    "resolve_fate",
    "resolve_scenario",
    "run",
    "scenario_hash",
    "step_mobility",
    "sweep",
    "transmit",
]
