"""
Large-scale propagation, SNR and packet-success models.

Everything here is a pure function over frozen parameter values. Distances
are metres, powers dBm, gains and losses dB.

Example:
    >>> from agrotrack import channel
    >>> params = channel.ChannelParams()
    >>> radio = channel.RadioParams()
    >>> pl = channel.path_loss(channel.LinkSample(distance=6500.0), params)
    >>> p = channel.packet_success_prob(channel.snr(pl, radio), params, radio.sf)
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Final

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, special, stats

from agrotrack.errors import DomainError, IllPosedError, InsufficientDataError, ValidationError

logger = logging.getLogger(__name__)

# ============================================================================
# Constants
# ============================================================================

THERMAL_NOISE_DBM_HZ: Final = -174.0

# Demodulation SNR threshold per spreading factor (dB)
GAMMA_TH_LADDER: Final[dict[int, float]] = {
    7: -7.5,
    8: -10.0,
    9: -12.5,
    10: -15.0,
    11: -17.5,
    12: -20.0,
}

VALID_BANDWIDTHS: Final = (125_000, 250_000, 500_000)

MIN_FIT_POINTS: Final = 5
BETA_BOUNDS: Final = (1.0, 6.0)


def noise_floor_dbm(bw_hz: float) -> float:
    """Thermal noise power N0*B in dBm for a receiver bandwidth in Hz."""
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bw_hz)


def default_gamma_th(sf: int) -> float:
    try:
        return GAMMA_TH_LADDER[sf]
    except KeyError:
        msg = f"no demodulation threshold for SF{sf}"
        raise DomainError(msg) from None


# ============================================================================
# Parameter types
# ============================================================================


@dataclass(frozen=True)
class ChannelParams:
    """Propagation constants shared by every link in a run."""

    pl_d0: float = 79.0
    d0: float = 100.0
    n: float = 2.9
    sigma: float = 6.0
    delta_obs: float = 18.0
    alpha: float = 1.5
    gamma_th: dict[int, float] = field(default_factory=lambda: dict(GAMMA_TH_LADDER))

    def __post_init__(self) -> None:
        problems = self.violations()
        if problems:
            raise ValidationError(problems)

    def violations(self) -> list[str]:
        problems: list[str] = []
        if not self.d0 > 0:
            problems.append(f"channel.d0_m must be > 0, got {self.d0}")
        if not self.n >= 1:
            problems.append(f"channel.n must be >= 1, got {self.n}")
        if not self.sigma >= 0:
            problems.append(f"channel.sigma_db must be >= 0, got {self.sigma}")
        if not self.delta_obs >= 0:
            problems.append(f"channel.delta_obs_db must be >= 0, got {self.delta_obs}")
        if not self.alpha > 0:
            problems.append(f"channel.alpha_per_db must be > 0, got {self.alpha}")
        problems.extend(
            f"channel.gamma_th_db has unsupported SF{sf}"
            for sf in self.gamma_th
            if sf not in GAMMA_TH_LADDER
        )
        return problems

    def threshold(self, sf: int) -> float:
        """Demodulation threshold for a spreading factor."""
        try:
            return self.gamma_th[sf]
        except KeyError:
            msg = f"no demodulation threshold configured for SF{sf}"
            raise DomainError(msg) from None


@dataclass(frozen=True)
class RadioParams:
    """
    Transmitter/receiver figures and LoRa modulation settings.

    `channels` is the number of uplink frequency channels a node hops across;
    two packets can only collide when they share channel and spreading factor.
    """

    p_t: float = 14.0
    g_t: float = 2.0
    g_r: float = 2.0
    nf: float = 6.0
    s_min: float = -123.0
    sf: int = 7
    bw: int = 125_000
    cr: int = 1
    payload_bytes: int = 20
    preamble_symbols: int = 8
    channels: int = 1

    def __post_init__(self) -> None:
        problems = self.violations()
        if problems:
            raise ValidationError(problems)

    def violations(self) -> list[str]:
        problems: list[str] = []
        if not 7 <= self.sf <= 12:  # noqa: PLR2004
            problems.append(f"radio.sf must be within 7..12, got {self.sf}")
        if self.bw not in VALID_BANDWIDTHS:
            problems.append(f"radio.bw_hz must be one of {VALID_BANDWIDTHS}, got {self.bw}")
        if not 1 <= self.cr <= 4:  # noqa: PLR2004
            problems.append(f"radio.cr must be within 1..4, got {self.cr}")
        if self.payload_bytes < 1:
            problems.append(f"radio.payload_bytes must be >= 1, got {self.payload_bytes}")
        if self.preamble_symbols < 0:
            problems.append(
                f"radio.preamble_symbols must be >= 0, got {self.preamble_symbols}"
            )
        if self.channels < 1:
            problems.append(f"radio.channels must be >= 1, got {self.channels}")
        return problems

    @property
    def noise_floor(self) -> float:
        return noise_floor_dbm(self.bw)

    @property
    def eirp_gain(self) -> float:
        """P_t + G_t + G_r, the distance-independent part of every budget."""
        return self.p_t + self.g_t + self.g_r


@dataclass(frozen=True)
class TwoRegimeFit:
    """Mixture of an open-field and an obstructed stretched exponential."""

    pi_obs: float
    d_c: float
    beta: float
    d_c_obs: float
    beta_obs: float

    def __post_init__(self) -> None:
        problems: list[str] = []
        if not 0.0 <= self.pi_obs <= 1.0:
            problems.append(f"pi_obs must be within [0, 1], got {self.pi_obs}")
        if not (self.d_c > 0 and self.d_c_obs > 0):
            problems.append("d_c and d_c_obs must be > 0")
        if not (self.beta > 0 and self.beta_obs > 0):
            problems.append("beta and beta_obs must be > 0")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class FitResult:
    fit: TwoRegimeFit
    residual: float
    """Sum of squared residuals over the fitted points."""
    n_points: int

    @property
    def mse(self) -> float:
        return self.residual / self.n_points


@dataclass(frozen=True)
class LinkSample:
    """One realized link: distance, obstruction indicator and shadowing draw."""

    distance: float
    obstructed: bool = False
    shadow_db: float = 0.0


# ============================================================================
# Link budget
# ============================================================================


def path_loss(sample: LinkSample, params: ChannelParams) -> float:
    """
    Log-distance path loss with shadowing and an obstruction penalty.

    Example:
        ```python
        path_loss(LinkSample(distance=1000.0), ChannelParams())  # 79 + 29 = 108.0
        ```

    Raises:
        DomainError: If the distance is not positive
    """
    if not sample.distance > 0:
        msg = f"distance must be > 0 m, got {sample.distance}"
        raise DomainError(msg)
    obstruction = params.delta_obs if sample.obstructed else 0.0
    return (
        params.pl_d0
        + 10.0 * params.n * math.log10(sample.distance / params.d0)
        + sample.shadow_db
        + obstruction
    )


def link_margin(pl: float, radio: RadioParams) -> float:
    """Received power above sensitivity; reception succeeds iff >= 0 under the hard rule."""
    return radio.eirp_gain - pl - radio.nf - radio.s_min


def snr(pl: float, radio: RadioParams) -> float:
    return radio.eirp_gain - pl - radio.nf - radio.noise_floor


def hard_threshold_success(margin: float) -> float:
    return 1.0 if margin >= 0.0 else 0.0


def packet_success_prob(snr_db: float, params: ChannelParams, sf: int = 7) -> float:
    """
    Logistic packet-success probability around the demodulation threshold.

    Strictly increasing in SNR with midpoint 0.5 at the SF's threshold.
    """
    return float(special.expit(params.alpha * (snr_db - params.threshold(sf))))


def expected_success(mean_snr: float, params: ChannelParams, sf: int = 7) -> float:
    """
    Expected logistic success when the SNR carries Gaussian shadowing.

    Integrates over the shadowing distribution with 64-node Gauss-Hermite
    quadrature; collapses to `packet_success_prob` when sigma is zero.
    """
    if params.sigma == 0:
        return packet_success_prob(mean_snr, params, sf)
    nodes, weights = np.polynomial.hermite_e.hermegauss(64)
    snrs = mean_snr + params.sigma * nodes
    values = special.expit(params.alpha * (snrs - params.threshold(sf)))
    return float(np.dot(weights, values) / math.sqrt(2.0 * math.pi))


def obstruction_outage_prob(mean_snr: float, sigma: float, gamma_th: float) -> float:
    """
    Probability that a Gaussian-shadowed SNR falls below the threshold.

    With `sigma == 0` this is a step: 1 below the threshold, 0 at or above it.
    """
    if sigma < 0:
        msg = f"sigma must be >= 0 dB, got {sigma}"
        raise DomainError(msg)
    if sigma == 0:
        return 1.0 if mean_snr < gamma_th else 0.0
    return float(stats.norm.cdf((gamma_th - mean_snr) / sigma))


# ============================================================================
# Two-regime empirical model
# ============================================================================


def two_regime_curve(distances: ArrayLike, fit: TwoRegimeFit) -> NDArray[np.float64]:
    """Vectorized two-regime success curve."""
    d = np.asarray(distances, dtype=np.float64)
    open_field = np.exp(-((d / fit.d_c) ** fit.beta))
    obstructed = np.exp(-((d / fit.d_c_obs) ** fit.beta_obs))
    return (1.0 - fit.pi_obs) * open_field + fit.pi_obs * obstructed


def success_two_regime(distance: float, fit: TwoRegimeFit) -> float:
    if distance < 0:
        msg = f"distance must be >= 0 m, got {distance}"
        raise DomainError(msg)
    return float(two_regime_curve(distance, fit)[()])


def _stretched(d: NDArray[np.float64], scale: float, shape: float) -> NDArray[np.float64]:
    return np.exp(-((d / scale) ** shape))


def _best_pi(
    y: NDArray[np.float64], a: NDArray[np.float64], b: NDArray[np.float64]
) -> tuple[float, float]:
    """Closed-form least-squares mixture weight, clipped to [0, 1], and its SSR."""
    diff = b - a
    denom = float(np.dot(diff, diff))
    pi = 0.0 if denom == 0.0 else float(np.clip(np.dot(y - a, diff) / denom, 0.0, 1.0))
    resid = y - a - pi * diff
    return pi, float(np.dot(resid, resid))


def _grid_search(
    d: NDArray[np.float64], y: NDArray[np.float64], scales: NDArray[np.float64]
) -> tuple[float, float, float, float]:
    shapes = np.linspace(*BETA_BOUNDS, 11)
    combos = [(s, b) for s in scales for b in shapes]
    curves = np.stack([_stretched(d, s, b) for s, b in combos])
    # a: open-field curves, b: obstructed curves, all pairs at once
    diff = curves[None, :, :] - curves[:, None, :]
    denom = np.einsum("ijk,ijk->ij", diff, diff)
    numer = np.einsum("ijk,ijk->ij", y[None, None, :] - curves[:, None, :], diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        pi = np.where(denom > 0, np.clip(numer / denom, 0.0, 1.0), 0.0)
    resid = y[None, None, :] - curves[:, None, :] - pi[:, :, None] * diff
    ssr = np.einsum("ijk,ijk->ij", resid, resid)
    # the obstructed regime is the one that decays first
    open_scales = np.array([s for s, _ in combos])
    ssr = np.where(open_scales[None, :] <= open_scales[:, None], ssr, np.inf)
    i, j = np.unravel_index(int(np.argmin(ssr)), ssr.shape)
    return combos[i][0], combos[i][1], combos[j][0], combos[j][1]


def fit_two_regime(points: Sequence[tuple[float, float]]) -> FitResult:
    """
    Fit the two-regime mixture to (distance, success probability) points.

    A coarse log-spaced grid over both regimes (with the mixture weight solved
    in closed form) seeds a coordinate-descent pass over the four shape and
    scale parameters, which is then polished by a bounded least-squares solve.
    Shapes stay within [1, 6] so the fitted curve is non-increasing.

    Raises:
        InsufficientDataError: Fewer than five points
        IllPosedError: All distances equal
        DomainError: Non-positive distance or probability outside [0, 1]
    """
    if len(points) < MIN_FIT_POINTS:
        msg = f"need at least {MIN_FIT_POINTS} points to fit, got {len(points)}"
        raise InsufficientDataError(msg)
    data = np.asarray(points, dtype=np.float64)
    d, y = data[:, 0], data[:, 1]
    if np.any(d <= 0):
        msg = "fit distances must be > 0 m"
        raise DomainError(msg)
    if np.any((y < 0) | (y > 1)):
        msg = "fit probabilities must lie within [0, 1]"
        raise DomainError(msg)
    if np.ptp(d) == 0:
        msg = "all fit distances are equal; the curve shape is not identifiable"
        raise IllPosedError(msg)

    lo, hi = float(d.min()) / 4.0, float(d.max()) * 8.0
    scales = np.geomspace(lo, hi, 16)
    x = list(_grid_search(d, y, scales))
    bounds = [(lo, hi), BETA_BOUNDS, (lo, hi), BETA_BOUNDS]

    def ssr_of(params: Sequence[float]) -> float:
        a = _stretched(d, params[0], params[1])
        b = _stretched(d, params[2], params[3])
        return _best_pi(y, a, b)[1]

    best = ssr_of(x)
    for _ in range(50):
        previous = best
        for k, (low, high) in enumerate(bounds):

            def along(value: float, k: int = k) -> float:
                trial = list(x)
                trial[k] = value
                return ssr_of(trial)

            res = optimize.minimize_scalar(along, bounds=(low, high), method="bounded")
            if res.fun < best:
                x[k] = float(res.x)
                best = float(res.fun)
        if previous - best <= 1e-14:
            break

    pi0, _ = _best_pi(y, _stretched(d, x[0], x[1]), _stretched(d, x[2], x[3]))

    def residuals(p: NDArray[np.float64]) -> NDArray[np.float64]:
        model = (1.0 - p[0]) * _stretched(d, p[1], p[2]) + p[0] * _stretched(d, p[3], p[4])
        return model - y

    lower = np.array([0.0, lo, BETA_BOUNDS[0], lo, BETA_BOUNDS[0]])
    upper = np.array([1.0, hi, BETA_BOUNDS[1], hi, BETA_BOUNDS[1]])
    start = np.clip(np.array([pi0, *x]), lower, upper)
    polished = optimize.least_squares(
        residuals, start, bounds=(lower, upper), method="trf", ftol=1e-12, xtol=1e-12, gtol=1e-12
    )
    candidate = polished.x if 2.0 * polished.cost <= best else start
    fit = TwoRegimeFit(
        pi_obs=float(candidate[0]),
        d_c=float(candidate[1]),
        beta=float(candidate[2]),
        d_c_obs=float(candidate[3]),
        beta_obs=float(candidate[4]),
    )
    resid = residuals(candidate)
    ssr = float(np.dot(resid, resid))
    logger.debug("two-regime fit over %d points, ssr=%.3e", len(points), ssr)
    return FitResult(fit=fit, residual=ssr, n_points=len(points))


__all__ = [
    "GAMMA_TH_LADDER",
    "ChannelParams",
    "FitResult",
    "LinkSample",
    "RadioParams",
    "TwoRegimeFit",
    "default_gamma_th",
    "expected_success",
    "fit_two_regime",
    "hard_threshold_success",
    "link_margin",
    "noise_floor_dbm",
    "obstruction_outage_prob",
    "packet_success_prob",
    "path_loss",
    "snr",
    "success_two_regime",
    "two_regime_curve",
]
