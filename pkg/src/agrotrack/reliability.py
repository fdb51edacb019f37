"""
Analytic reliability decomposition and slotted collision models.
"""

import math
from dataclasses import dataclass

from agrotrack.errors import DomainError, InfeasibleError, ValidationError

# Slack allowed when checking that a decomposition sums to one
_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MacParams:
    """
    Slotted-attempt traffic model.

    `tau` is the per-node attempt probability per slot; `k_microslots` is the
    number of jitter sub-slots an attempt is spread over.
    """

    n_nodes: int = 15
    tau: float = 0.0
    k_microslots: int = 8
    slot_s: float = 0.0

    def __post_init__(self) -> None:
        problems: list[str] = []
        if self.n_nodes < 1:
            problems.append(f"mac.n_nodes must be >= 1, got {self.n_nodes}")
        if not 0.0 <= self.tau <= 1.0:
            problems.append(f"mac.tau must be within [0, 1], got {self.tau}")
        if self.k_microslots < 1:
            problems.append(f"mac.k_microslots must be >= 1, got {self.k_microslots}")
        if self.slot_s < 0:
            problems.append(f"mac.slot_s must be >= 0, got {self.slot_s}")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class ReliabilityBudget:
    p_obs: float
    p_col: float
    p_succ: float

    @property
    def total(self) -> float:
        return self.p_obs + self.p_col + self.p_succ


def collision_prob(params: MacParams) -> float:
    """Probability that at least one of the other N-1 nodes attempts in the same slot."""
    return 1.0 - (1.0 - params.tau) ** (params.n_nodes - 1)


def collision_prob_jitter(params: MacParams) -> float:
    """Collision probability when attempts spread uniformly over K micro-slots."""
    return 1.0 - (1.0 - params.tau / params.k_microslots) ** (params.n_nodes - 1)


def pure_aloha_collision_prob(n_nodes: int, airtime_s: float, interval_s: float) -> float:
    """
    Unslotted reference: vulnerable window of two airtimes per contender.

    Reported next to the slotted figure; the engine's default traffic is
    unslotted.
    """
    if not interval_s > 0:
        msg = f"interval must be > 0 s, got {interval_s}"
        raise DomainError(msg)
    per_contender = min(2.0 * airtime_s / interval_s, 1.0)
    return 1.0 - (1.0 - per_contender) ** max(n_nodes - 1, 0)


def loss_decomposition(p_obs: float, params: MacParams, *, jitter: bool) -> ReliabilityBudget:
    """
    Split delivery into success, obstruction loss and collision loss.

    Raises:
        DomainError: If obstruction and collision loss exceed one together
    """
    if not 0.0 <= p_obs <= 1.0:
        msg = f"p_obs must be within [0, 1], got {p_obs}"
        raise DomainError(msg)
    p_col = collision_prob_jitter(params) if jitter else collision_prob(params)
    if p_obs + p_col > 1.0 + _SUM_TOLERANCE:
        msg = f"obstruction ({p_obs:.4f}) plus collision ({p_col:.4f}) loss exceeds 1"
        raise DomainError(msg)
    return ReliabilityBudget(p_obs=p_obs, p_col=p_col, p_succ=max(1.0 - p_obs - p_col, 0.0))


def budget_from_split(p_obs: float, p_col: float) -> ReliabilityBudget:
    """Budget from an explicit loss split, e.g. the 0.010 / 0.015 baseline calibration."""
    if p_obs < 0 or p_col < 0 or p_obs + p_col > 1.0 + _SUM_TOLERANCE:
        msg = f"invalid loss split p_obs={p_obs}, p_col={p_col}"
        raise DomainError(msg)
    return ReliabilityBudget(p_obs=p_obs, p_col=p_col, p_succ=1.0 - p_obs - p_col)


def calibrate_tau(target_p_col: float, n_nodes: int, k: int) -> float:
    """
    Attempt probability that makes the jittered collision probability hit a target.

    Raises:
        DomainError: Target outside [0, 1) or fewer than two nodes
        InfeasibleError: The required attempt probability exceeds one
    """
    if not 0.0 <= target_p_col < 1.0:
        msg = f"target collision probability must be within [0, 1), got {target_p_col}"
        raise DomainError(msg)
    if n_nodes < 2:  # noqa: PLR2004
        msg = f"calibrating tau needs at least two nodes, got {n_nodes}"
        raise DomainError(msg)
    tau = k * (1.0 - math.pow(1.0 - target_p_col, 1.0 / (n_nodes - 1)))
    if tau > 1.0:
        msg = f"target {target_p_col} needs tau={tau:.4f} > 1 with N={n_nodes}, K={k}"
        raise InfeasibleError(msg)
    return tau


__all__ = [
    "MacParams",
    "ReliabilityBudget",
    "budget_from_split",
    "calibrate_tau",
    "collision_prob",
    "collision_prob_jitter",
    "loss_decomposition",
    "pure_aloha_collision_prob",
]
