"""
Command-line front end.

Every command body runs inside `effect.try_sync` and is executed with
`effect.run_sync_exit`; the resulting exit is mapped to the process status
(0 success, 2 invalid input, 3 infeasible physics, 4 internal) with a JSON
error document on stderr for failures.

Settings resolve as scenario file < `AGROTRACK_*` environment < flags.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from collections.abc import Callable, Mapping, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Final

import numpy as np
from pyfect import effect
from pyfect.either import Left, Right

from agrotrack import __version__
from agrotrack import channel as ch
from agrotrack import energy as en
from agrotrack import reliability as rel
from agrotrack import report as rp
from agrotrack.engine import calibrate as cal
from agrotrack.engine.scenario import (
    BUNDLED,
    Scenario,
    bundled_path,
    check_physics,
    load_document,
    parse_scenario,
    resolve_scenario,
    scenario_hash,
)
from agrotrack.engine.simulator import run
from agrotrack.engine.sweep import failure_sweep, sweep
from agrotrack.errors import (
    EXIT_INTERNAL,
    EXIT_OK,
    AgroTrackError,
    InfeasibleError,
    ValidationError,
    exit_code_for,
)

logger = logging.getLogger(__name__)

ENV_PREFIX: Final = "AGROTRACK_"
DEFAULT_OUT: Final = Path("agrotrack-out")
DEFAULT_COUNTS: Final = (50, 100, 200, 300, 400, 500, 600)


@dataclass(frozen=True)
class Settings:
    seed: int | None
    jobs: int
    out: Path
    log_level: str


def _env_int(environ: Mapping[str, str], name: str) -> int | None:
    raw = environ.get(ENV_PREFIX + name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        msg = f"{ENV_PREFIX}{name} must be an integer, got {raw!r}"
        raise ValidationError([msg]) from None


def resolve_settings(args: argparse.Namespace, environ: Mapping[str, str]) -> Settings:
    """Flags win over `AGROTRACK_*` variables, which win over built-in defaults."""
    seed = args.seed if args.seed is not None else _env_int(environ, "SEED")
    jobs = args.jobs if args.jobs is not None else (_env_int(environ, "JOBS") or 1)
    out = args.out or Path(environ.get(ENV_PREFIX + "OUT") or DEFAULT_OUT)
    level = args.log_level or environ.get(ENV_PREFIX + "LOG_LEVEL") or "WARNING"
    problems = []
    if seed is not None and not 0 <= seed < 2**64:
        problems.append(f"seed must be an unsigned 64-bit integer, got {seed}")
    if jobs < 1:
        problems.append(f"jobs must be >= 1, got {jobs}")
    if level.upper() not in logging.getLevelNamesMapping():
        problems.append(f"unknown log level {level!r}")
    if problems:
        raise ValidationError(problems)
    return Settings(seed=seed, jobs=jobs, out=Path(out), log_level=level.upper())


# ============================================================================
# Argument types
# ============================================================================


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        msg = f"expected comma-separated integers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        msg = f"expected comma-separated numbers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from None


# ============================================================================
# Shared helpers
# ============================================================================


def _load(ref: str, overlays: Sequence[Path], settings: Settings) -> Scenario:
    docs = tuple(load_document(p) for p in overlays)
    scenario = resolve_scenario(ref, docs)
    if settings.seed is not None:
        scenario = scenario.with_seed(settings.seed)
    return scenario


def _manifest(
    settings: Settings,
    written: Sequence[Path],
    started: float,
    scenario: Scenario | None = None,
) -> Path:
    manifest = rp.RunManifest(
        command=["agrotrack", *sys.argv[1:]],
        version=__version__,
        seed=scenario.seed if scenario is not None else settings.seed,
        scenario_hash=scenario_hash(scenario) if scenario is not None else None,
        outputs=sorted(str(p.relative_to(settings.out)) for p in written),
        effective={k: str(v) for k, v in asdict(settings).items()},
        wall_clock_s=time.perf_counter() - started,
    )
    return manifest.write(settings.out)


# ============================================================================
# Commands
# ============================================================================


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    started = time.perf_counter()
    scenario = _load(args.scenario, args.overlay, settings)
    report = run(scenario)
    written = rp.write_run(report, settings.out)
    written += rp.write_roc(report, sorted({e.animal for e in scenario.episodes}), settings.out)
    _manifest(settings, written, started, scenario)
    print(
        f"{scenario.name}: generated={report.generated} pdr={report.pdr:.4f} "
        f"throughput={report.throughput_msg_s:.2f} msg/s alerts={len(report.alert_log)}"
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    started = time.perf_counter()
    counts: list[int] = args.counts
    if not counts or any(n < 1 for n in counts) or counts != sorted(set(counts)):
        msg = f"counts must be positive and strictly ascending, got {counts}"
        raise ValidationError([msg])
    scenario = _load(args.scenario, args.overlay, settings)
    rows = sweep(scenario, counts, args.replicates, settings.jobs)
    written = rp.write_sweep(rows, settings.out)
    _manifest(settings, written, started, scenario)
    for r in rows:
        print(f"N={r.point:>4} loss={r.loss_mean:.4f} throughput={r.throughput_mean:.2f}")
    return EXIT_OK


def cmd_failures(args: argparse.Namespace, settings: Settings) -> int:
    started = time.perf_counter()
    scenario = _load(args.scenario, args.overlay, settings)
    if len(scenario.gateways) < args.max_failures + 1:
        msg = (
            f"{args.max_failures} failures need at least {args.max_failures + 1} gateways, "
            f"scenario has {len(scenario.gateways)}"
        )
        raise ValidationError([msg])
    rows = failure_sweep(scenario, range(args.max_failures + 1), args.replicates, settings.jobs)
    written = rp.write_recovery(rows, settings.out)
    _manifest(settings, written, started, scenario)
    for r in rows:
        print(f"failures={r.point} recovery={r.recovery_mean:.4f}")
    return EXIT_OK


def _radio_from(args: argparse.Namespace) -> ch.RadioParams:
    return ch.RadioParams(
        p_t=args.p_t, g_t=args.g_t, g_r=args.g_r, nf=args.nf, sf=args.sf, bw=args.bw
    )


def _channel_from(args: argparse.Namespace) -> ch.ChannelParams:
    return ch.ChannelParams(
        pl_d0=args.pl_d0, n=args.n, sigma=args.sigma, delta_obs=args.delta_obs, alpha=args.alpha
    )


def linkbudget_rows(
    distances: Sequence[float], radio: ch.RadioParams, params: ch.ChannelParams
) -> list[tuple[float, ...]]:
    rows = []
    for d in distances:
        pl = ch.path_loss(ch.LinkSample(d), params)
        pl_obs = ch.path_loss(ch.LinkSample(d, obstructed=True), params)
        snr_db = ch.snr(pl, radio)
        rows.append(
            (
                d,
                pl,
                snr_db,
                ch.link_margin(pl, radio),
                ch.packet_success_prob(snr_db, params, radio.sf),
                ch.packet_success_prob(ch.snr(pl_obs, radio), params, radio.sf),
                ch.expected_success(snr_db, params, radio.sf),
            )
        )
    return rows


def cmd_linkbudget(args: argparse.Namespace, settings: Settings) -> int:
    rows = linkbudget_rows(args.distances, _radio_from(args), _channel_from(args))
    rp.write_csv(settings.out / "linkbudget.csv", rows)
    print(f"{'d (m)':>9} {'PL':>7} {'SNR':>7} {'margin':>7} {'p_los':>7} {'p_obs':>7}")
    for d, pl, s, margin, p_los, p_obs, _ in rows:
        print(f"{d:9.0f} {pl:7.2f} {s:7.2f} {margin:7.2f} {p_los:7.4f} {p_obs:7.4f}")
    return EXIT_OK


def _profile_from(args: argparse.Namespace, interval: float) -> en.EnergyProfile:
    return en.EnergyProfile(
        i_sen=args.i_sen,
        i_proc=args.i_proc,
        i_tx=args.i_tx,
        i_rx=args.i_rx,
        i_slp=args.i_slp,
        t_sen=args.t_sen,
        t_proc=args.t_proc,
        t_rx=args.t_rx,
        report_interval=interval,
        solar_credit_mj=args.solar_credit,
    ).for_radio(ch.RadioParams(sf=args.sf, bw=args.bw))


def cmd_battery(args: argparse.Namespace, settings: Settings) -> int:
    bat = en.BatterySpec(capacity_mah=args.capacity, voltage=args.voltage)
    rows = []
    for interval in args.intervals:
        profile = _profile_from(args, interval)
        i_avg = en.avg_current_multi(profile)
        hours = en.lifetime_from_energy(profile, bat)
        rows.append((interval, i_avg, en.cycle_energy(profile, bat), hours, hours / 24.0))
    depletion = en.depletion_series(_profile_from(args, args.depletion_interval), bat, args.days)
    written = [
        rp.write_csv(settings.out / "lifetime.csv", rows),
        rp.write_csv(settings.out / "depletion.csv", depletion),
    ]
    rp.write_plot_spec(
        written[1],
        title="Battery level of sensor nodes",
        x="day",
        series=["remaining_mah"],
        x_label="Day",
        y_label="Remaining charge (mAh)",
    )
    for interval, i_avg, e_cyc, hours, days in rows:
        print(
            f"interval={interval:.0f}s I_avg={i_avg:.4f} mA E_cyc={e_cyc:.1f} mJ "
            f"lifetime={hours:.1f} h ({days:.1f} d)"
        )
    return EXIT_OK


def cmd_collision(args: argparse.Namespace, settings: Settings) -> int:
    del settings
    airtime = en.time_on_air(ch.RadioParams(sf=args.sf, bw=args.bw))
    tau = args.tau if args.tau is not None else min(airtime / args.interval, 1.0)
    params = rel.MacParams(n_nodes=args.nodes, tau=tau, k_microslots=args.k, slot_s=airtime)
    print(f"tau={tau:.6f} airtime={airtime * 1000:.3f} ms")
    print(f"slotted={rel.collision_prob(params):.6f}")
    print(f"jittered(K={args.k})={rel.collision_prob_jitter(params):.6f}")
    aloha = rel.pure_aloha_collision_prob(args.nodes, airtime, args.interval)
    print(f"unslotted={aloha:.6f}")
    return EXIT_OK


def read_fit_points(path: Path) -> list[tuple[float, float]]:
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as e:
        msg = f"{path}: cannot read ({e.strerror})"
        raise ValidationError([msg]) from e
    try:
        return [(float(r["distance_m"]), float(r["success"])) for r in rows]
    except (KeyError, TypeError, ValueError) as e:
        msg = f"{path}: expected numeric columns distance_m,success ({e})"
        raise ValidationError([msg]) from e


def fit_curve_rows(fit: ch.TwoRegimeFit, d_min: float, d_max: float) -> list[tuple[float, float]]:
    distances = np.linspace(d_min, d_max, 101)
    curve = ch.two_regime_curve(distances, fit)
    return [(float(d), float(p)) for d, p in zip(distances, curve, strict=True)]


def cmd_fit(args: argparse.Namespace, settings: Settings) -> int:
    points = read_fit_points(args.csv)
    result = ch.fit_two_regime(points)
    d_min, d_max = min(d for d, _ in points), max(d for d, _ in points)
    doc = {
        "fit": asdict(result.fit),
        "residual": result.residual,
        "n_points": result.n_points,
        "curve_range_m": [d_min, d_max],
    }
    rp.write_json(settings.out / "fit.json", doc)
    curve = rp.write_csv(settings.out / "fit_curve.csv", fit_curve_rows(result.fit, d_min, d_max))
    rp.write_plot_spec(
        curve,
        title="Packet success vs distance",
        x="distance_m",
        series=["success"],
        x_label="Distance (m)",
        y_label="Success probability",
    )
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, settings: Settings) -> int:
    del settings
    path = bundled_path(args.scenario) if args.scenario in BUNDLED else Path(args.scenario)
    match parse_scenario(load_document(path)):
        case Left(problems):
            raise ValidationError(problems)
        case Right(scenario):
            check_physics(scenario)
    print(f"{args.scenario}: ok")
    return EXIT_OK


def cmd_selfcheck(args: argparse.Namespace, settings: Settings) -> int:
    target = args.directory or settings.out
    problems = rp.selfcheck(target)
    if problems:
        raise ValidationError(problems)
    print(f"{target}: all CSV files conform")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace, settings: Settings) -> int:
    started = time.perf_counter()
    baseline = _load(args.baseline, (), settings)
    scaling = _load(args.scaling, (), settings)
    robustness = _load(args.robustness, (), settings)
    result = cal.calibrate(baseline, scaling, robustness)
    written = [rp.write_json(settings.out / "calibration.json", result.to_document())]
    written += [
        rp.write_json(settings.out / "calibration" / f"{name}.json", overlay)
        for name, overlay in result.overlays.items()
    ]
    _manifest(settings, written, started)
    if not result.feasible:
        failed = [f"{k}: residual {v:+.4f}" for k, v in result.residuals.items()]
        msg = "calibration targets not met: " + "; ".join(failed)
        raise InfeasibleError(msg)
    print(json.dumps(result.residuals, sort_keys=True))
    return EXIT_OK


def cmd_reference(args: argparse.Namespace, settings: Settings) -> int:
    del args
    for path in rp.write_reference(settings.out):
        print(path)
    return EXIT_OK


# ============================================================================
# Parser
# ============================================================================


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return common


def _radio_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sf", type=int, default=7)
    p.add_argument("--bw", type=int, default=125_000)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="agrotrack", description="LoRa livestock monitoring simulator"
    )
    parser.add_argument("--version", action="version", version=f"agrotrack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_command(
        name: str, handler: Callable[..., int], help_: str
    ) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("scenario", help=f"scenario file or one of: {', '.join(BUNDLED)}")
        p.add_argument("--overlay", type=Path, action="append", default=[], help="overlay JSON")
        p.set_defaults(handler=handler)
        return p

    scenario_command("simulate", cmd_simulate, "run one scenario")
    p = scenario_command("sweep", cmd_sweep, "herd-size sweep")
    p.add_argument("--counts", type=_int_list, default=list(DEFAULT_COUNTS))
    p.add_argument("--replicates", type=int, default=10)
    p = scenario_command("failures", cmd_failures, "recovery vs failed gateways")
    p.add_argument("--max-failures", type=int, default=4)
    p.add_argument("--replicates", type=int, default=3)

    p = sub.add_parser("linkbudget", parents=[common], help="per-distance link budget table")
    p.add_argument("--distances", type=_float_list, default=[100, 500, 1000, 3000, 6500, 10000])
    _radio_flags(p)
    p.add_argument("--p-t", type=float, default=14.0)
    p.add_argument("--g-t", type=float, default=2.0)
    p.add_argument("--g-r", type=float, default=2.0)
    p.add_argument("--nf", type=float, default=6.0)
    p.add_argument("--pl-d0", type=float, default=79.0)
    p.add_argument("--n", type=float, default=2.9)
    p.add_argument("--sigma", type=float, default=6.0)
    p.add_argument("--delta-obs", type=float, default=18.0)
    p.add_argument("--alpha", type=float, default=1.5)
    p.set_defaults(handler=cmd_linkbudget)

    p = sub.add_parser("battery", parents=[common], help="lifetime per reporting interval")
    p.add_argument("--intervals", type=_float_list, default=[300, 600, 900])
    p.add_argument("--capacity", type=float, default=3000.0)
    p.add_argument("--voltage", type=float, default=3.7)
    defaults = en.EnergyProfile()
    for flag in ("i_sen", "i_proc", "i_tx", "i_rx", "i_slp", "t_sen", "t_proc", "t_rx"):
        p.add_argument(f"--{flag.replace('_', '-')}", type=float, default=getattr(defaults, flag))
    p.add_argument("--solar-credit", type=float, default=0.0, help="mJ credited per cycle")
    p.add_argument("--depletion-interval", type=float, default=300.0)
    p.add_argument("--days", type=int, default=60)
    _radio_flags(p)
    p.set_defaults(handler=cmd_battery)

    p = sub.add_parser("collision", parents=[common], help="analytic collision probabilities")
    p.add_argument("--nodes", type=int, default=15)
    p.add_argument("--interval", type=float, default=300.0)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--k", type=int, default=8)
    _radio_flags(p)
    p.set_defaults(handler=cmd_collision)

    p = sub.add_parser("fit", parents=[common], help="fit the two-regime success curve")
    p.add_argument("csv", type=Path, help="CSV with columns distance_m,success")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("validate", parents=[common], help="check a scenario without running")
    p.add_argument("scenario")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("selfcheck", parents=[common], help="re-parse emitted CSV files")
    p.add_argument("directory", type=Path, nargs="?", default=None)
    p.set_defaults(handler=cmd_selfcheck)

    p = sub.add_parser("calibrate", parents=[common], help="fit capacity settings to targets")
    p.add_argument("--baseline", default="trial_baseline")
    p.add_argument("--scaling", default="scaling")
    p.add_argument("--robustness", default="robustness")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("reference", parents=[common], help="write reference comparison tables")
    p.set_defaults(handler=cmd_reference)
    return parser


# ============================================================================
# Entry point
# ============================================================================


def error_document(error: BaseException) -> dict[str, object]:
    if isinstance(error, ValidationError):
        messages = list(error.violations)
    else:
        messages = [str(error) or type(error).__name__]
    kind = error.kind if isinstance(error, AgroTrackError) else "internal"
    return {"error": kind, "exit_code": exit_code_for(error), "messages": messages}


def main(argv: Sequence[str] | None = None, environ: Mapping[str, str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    env = os.environ if environ is None else environ

    def execute() -> int:
        settings = resolve_settings(args, env)
        logging.basicConfig(
            level=settings.log_level,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
            force=True,
        )
        handler: Callable[[argparse.Namespace, Settings], int] = args.handler
        return handler(args, settings)

    match effect.run_sync_exit(effect.try_sync(execute)):
        case effect.Success(code):
            return code
        case effect.Failure(error):
            if not isinstance(error, AgroTrackError):
                logger.exception("internal error", exc_info=error)
            print(json.dumps(error_document(error), sort_keys=True), file=sys.stderr)
            return exit_code_for(error)
    return EXIT_INTERNAL


__all__ = [
    "Settings",
    "build_parser",
    "error_document",
    "fit_curve_rows",
    "linkbudget_rows",
    "main",
    "read_fit_points",
    "resolve_settings",
]
