"""
Duty-cycled battery lifetime and LoRa time on air.

Units are fixed across the module: currents in mA, durations in s, capacity
in mAh, energy in mJ. Charge (mA*s) and energy convert through the nominal
battery voltage only, in `mah_to_mj` and `mj_to_mah`.
"""

import math
from dataclasses import dataclass, replace
from typing import Final

from agrotrack.channel import RadioParams
from agrotrack.errors import DomainError, ValidationError

SECONDS_PER_HOUR: Final = 3600.0

# ============================================================================
# Parameter types
# ============================================================================


@dataclass(frozen=True)
class BatterySpec:
    capacity_mah: float = 3000.0
    voltage: float = 3.7

    def __post_init__(self) -> None:
        problems: list[str] = []
        if not self.capacity_mah > 0:
            problems.append(f"battery.capacity_mah must be > 0, got {self.capacity_mah}")
        if not self.voltage > 0:
            problems.append(f"battery.voltage_v must be > 0, got {self.voltage}")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class EnergyProfile:
    """
    Per-state currents and durations of one reporting cycle.

    `t_tx` of `None` means "derive from the radio's time on air"; call
    `for_radio` to pin it. Sleep fills whatever the active windows leave of
    `report_interval`. `solar_credit_mj` is an optional harvested-energy
    credit subtracted from every cycle.
    """

    i_sen: float = 28.0
    i_proc: float = 10.0
    i_tx: float = 120.0
    i_rx: float = 11.0
    i_slp: float = 0.01
    t_sen: float = 47.2
    t_proc: float = 0.5
    t_rx: float = 0.3
    t_tx: float | None = None
    report_interval: float = 300.0
    solar_credit_mj: float = 0.0

    def __post_init__(self) -> None:
        problems: list[str] = []
        currents = {
            "i_sen_ma": self.i_sen,
            "i_proc_ma": self.i_proc,
            "i_tx_ma": self.i_tx,
            "i_rx_ma": self.i_rx,
            "i_slp_ma": self.i_slp,
        }
        problems.extend(f"energy.{k} must be >= 0, got {v}" for k, v in currents.items() if v < 0)
        durations = {"t_sen_s": self.t_sen, "t_proc_s": self.t_proc, "t_rx_s": self.t_rx}
        if self.t_tx is not None:
            durations["t_tx_s"] = self.t_tx
        problems.extend(f"energy.{k} must be >= 0, got {v}" for k, v in durations.items() if v < 0)
        if not self.report_interval > 0:
            problems.append(f"energy.report_interval_s must be > 0, got {self.report_interval}")
        if self.solar_credit_mj < 0:
            problems.append(f"energy.solar_credit_mj must be >= 0, got {self.solar_credit_mj}")
        if problems:
            raise ValidationError(problems)

    def for_radio(self, radio: RadioParams) -> "EnergyProfile":
        """Pin the transmit window to the radio's time on air."""
        return replace(self, t_tx=time_on_air(radio))

    @property
    def tx_seconds(self) -> float:
        return self.t_tx if self.t_tx is not None else time_on_air(RadioParams())

    @property
    def active_seconds(self) -> float:
        return self.t_sen + self.t_proc + self.tx_seconds + self.t_rx

    @property
    def sleep_seconds(self) -> float:
        """Sleep time left in the cycle; raises if the active windows do not fit."""
        slack = self.report_interval - self.active_seconds
        if slack < 0:
            msg = (
                f"active time {self.active_seconds:.3f} s exceeds the "
                f"{self.report_interval:.3f} s reporting interval"
            )
            raise DomainError(msg)
        return slack

    def states(self) -> list[tuple[float, float]]:
        """(current mA, duration s) for sensing, processing, transmit, receive and sleep."""
        return [
            (self.i_sen, self.t_sen),
            (self.i_proc, self.t_proc),
            (self.i_tx, self.tx_seconds),
            (self.i_rx, self.t_rx),
            (self.i_slp, self.sleep_seconds),
        ]


# ============================================================================
# Unit conversions
# ============================================================================


def mah_to_mj(mah: float, voltage: float) -> float:
    return mah * SECONDS_PER_HOUR * voltage


def mj_to_mah(mj: float, voltage: float) -> float:
    return mj / (SECONDS_PER_HOUR * voltage)


# ============================================================================
# Lifetime models
# ============================================================================


def lifetime_hours(bat: BatterySpec, i_avg: float) -> float:
    """
    Battery lifetime from capacity and average current.

    Raises:
        DomainError: If the average current is not positive
    """
    if not i_avg > 0:
        msg = f"average current must be > 0 mA, got {i_avg}"
        raise DomainError(msg)
    return bat.capacity_mah / i_avg


def avg_current_two_state(i_act: float, t_act: float, i_slp: float, t_slp: float) -> float:
    total = t_act + t_slp
    if not total > 0:
        msg = "active plus sleep time must be > 0 s"
        raise DomainError(msg)
    return (i_act * t_act + i_slp * t_slp) / total


def cycle_charge(profile: EnergyProfile) -> float:
    """Charge drawn over one cycle in mA*s."""
    return math.fsum(i * t for i, t in profile.states())


def avg_current_multi(profile: EnergyProfile) -> float:
    """Time-weighted mean of the five state currents over the full cycle."""
    return cycle_charge(profile) / profile.report_interval


def cycle_energy(profile: EnergyProfile, bat: BatterySpec) -> float:
    """Energy per cycle in mJ, net of any solar credit (never negative)."""
    gross = bat.voltage * cycle_charge(profile)
    return max(gross - profile.solar_credit_mj, 0.0)


def lifetime_from_energy(profile: EnergyProfile, bat: BatterySpec) -> float:
    """
    Lifetime in hours from stored energy over per-cycle energy.

    Raises:
        DomainError: If a cycle consumes no energy
    """
    e_cyc = cycle_energy(profile, bat)
    if not e_cyc > 0:
        msg = "cycle energy is zero; lifetime is unbounded"
        raise DomainError(msg)
    stored = mah_to_mj(bat.capacity_mah, bat.voltage)
    return stored / e_cyc * profile.report_interval / SECONDS_PER_HOUR


def depletion_series(
    profile: EnergyProfile, bat: BatterySpec, days: int
) -> list[tuple[int, float]]:
    """Remaining capacity (mAh) at the start of each day under linear coulomb decline."""
    per_day = mj_to_mah(cycle_energy(profile, bat), bat.voltage) * (
        86_400.0 / profile.report_interval
    )
    return [(day, max(bat.capacity_mah - per_day * day, 0.0)) for day in range(days + 1)]


# ============================================================================
# Time on air
# ============================================================================


def time_on_air(radio: RadioParams) -> float:
    """
    LoRa packet airtime in seconds.

    Explicit header and CRC are always on; low-data-rate optimization is on
    for SF11 and SF12 at 125 kHz.

    Example:
        ```python
        time_on_air(RadioParams(sf=7, bw=125_000, cr=1, payload_bytes=20))  # ~0.0566
        ```
    """
    t_sym = (2**radio.sf) / radio.bw
    de = 1 if radio.sf >= 11 and radio.bw == 125_000 else 0  # noqa: PLR2004
    numerator = 8 * radio.payload_bytes - 4 * radio.sf + 28 + 16
    blocks = math.ceil(numerator / (4 * (radio.sf - 2 * de)))
    payload_symbols = 8 + max(blocks * (radio.cr + 4), 0)
    return (radio.preamble_symbols + 4.25 + payload_symbols) * t_sym


__all__ = [
    "BatterySpec",
    "EnergyProfile",
    "avg_current_multi",
    "avg_current_two_state",
    "cycle_charge",
    "cycle_energy",
    "depletion_series",
    "lifetime_from_energy",
    "lifetime_hours",
    "mah_to_mj",
    "mj_to_mah",
    "time_on_air",
]
