"""Tests for path loss, SNR and packet-success models."""

import math

import numpy as np
import pytest

from agrotrack import channel as ch
from agrotrack.errors import DomainError, ValidationError

PARAMS = ch.ChannelParams()
RADIO = ch.RadioParams()

# ============================================================================
# path_loss
# ============================================================================


def test_path_loss_at_reference_distance() -> None:
    assert ch.path_loss(ch.LinkSample(100.0), PARAMS) == pytest.approx(79.0)


def test_path_loss_one_decade_adds_ten_n() -> None:
    assert ch.path_loss(ch.LinkSample(1000.0), PARAMS) == pytest.approx(108.0)


def test_path_loss_adds_shadow_and_obstruction() -> None:
    clear = ch.path_loss(ch.LinkSample(500.0), PARAMS)
    shadowed = ch.path_loss(ch.LinkSample(500.0, obstructed=True, shadow_db=-3.0), PARAMS)
    assert shadowed - clear == pytest.approx(15.0)


def test_path_loss_increases_with_distance() -> None:
    losses = [ch.path_loss(ch.LinkSample(d), PARAMS) for d in (10.0, 100.0, 1e3, 1e4)]
    assert losses == sorted(losses)


def test_path_loss_rejects_zero_distance() -> None:
    with pytest.raises(DomainError, match="distance"):
        ch.path_loss(ch.LinkSample(0.0), PARAMS)


# ============================================================================
# SNR and margins
# ============================================================================


def test_noise_floor_for_125k() -> None:
    assert ch.noise_floor_dbm(125_000) == pytest.approx(-123.03, abs=0.01)


def test_snr_at_range_anchor() -> None:
    pl = ch.path_loss(ch.LinkSample(6500.0), PARAMS)
    assert pl == pytest.approx(131.57, abs=0.01)
    assert ch.snr(pl, RADIO) == pytest.approx(3.46, abs=0.01)


def test_margin_sign_decides_hard_rule() -> None:
    pl_ok = RADIO.eirp_gain - RADIO.nf - RADIO.s_min
    assert ch.link_margin(pl_ok, RADIO) == pytest.approx(0.0)
    assert ch.hard_threshold_success(0.0) == 1.0
    assert ch.hard_threshold_success(-0.01) == 0.0


# ============================================================================
# packet_success_prob
# ============================================================================


def test_success_is_half_at_threshold() -> None:
    assert ch.packet_success_prob(-7.5, PARAMS, 7) == pytest.approx(0.5)


def test_success_strictly_increasing_in_snr() -> None:
    values = [ch.packet_success_prob(s, PARAMS) for s in np.linspace(-30, 10, 41)]
    assert all(b > a for a, b in zip(values, values[1:], strict=False))


def test_success_uses_sf_ladder() -> None:
    assert ch.packet_success_prob(-20.0, PARAMS, 12) == pytest.approx(0.5)
    with pytest.raises(DomainError, match="SF13"):
        PARAMS.threshold(13)


def test_range_anchor_line_of_sight() -> None:
    for distance, floor in ((6500.0, 0.5), (3000.0, 0.9)):
        mean_snr = ch.snr(ch.path_loss(ch.LinkSample(distance), PARAMS), RADIO)
        assert ch.packet_success_prob(mean_snr, PARAMS) >= floor
        assert ch.expected_success(mean_snr, PARAMS) >= floor


def test_obstructed_range_anchor() -> None:
    pl = ch.path_loss(ch.LinkSample(6500.0, obstructed=True), PARAMS)
    assert ch.packet_success_prob(ch.snr(pl, RADIO), PARAMS) <= 0.2  # noqa: PLR2004


def test_deep_obstruction_shadow() -> None:
    deep = ch.ChannelParams(delta_obs=60.0)
    pl = ch.path_loss(ch.LinkSample(250.0, obstructed=True), deep)
    assert ch.packet_success_prob(ch.snr(pl, RADIO), deep) < 0.01  # noqa: PLR2004


# ============================================================================
# expected_success
# ============================================================================


def test_expected_success_without_shadowing() -> None:
    flat = ch.ChannelParams(sigma=0.0)
    assert ch.expected_success(-2.0, flat) == ch.packet_success_prob(-2.0, flat)


def test_expected_success_matches_monte_carlo() -> None:
    rng = np.random.default_rng(7)
    mean_snr = -5.0
    draws = mean_snr + PARAMS.sigma * rng.standard_normal(20_000)
    empirical = float(np.mean([ch.packet_success_prob(s, PARAMS) for s in draws]))
    assert ch.expected_success(mean_snr, PARAMS) == pytest.approx(empirical, abs=0.01)


def test_expected_success_is_half_at_threshold_by_symmetry() -> None:
    assert ch.expected_success(-7.5, PARAMS) == pytest.approx(0.5, abs=1e-9)


# ============================================================================
# obstruction_outage_prob
# ============================================================================


def test_outage_is_half_at_threshold() -> None:
    assert ch.obstruction_outage_prob(-7.5, 6.0, -7.5) == pytest.approx(0.5)


def test_outage_step_without_shadowing() -> None:
    assert ch.obstruction_outage_prob(-8.0, 0.0, -7.5) == 1.0
    assert ch.obstruction_outage_prob(-7.5, 0.0, -7.5) == 0.0


def test_outage_one_sigma() -> None:
    expected = 0.5 * math.erfc(1.0 / math.sqrt(2.0))
    assert ch.obstruction_outage_prob(-1.5, 6.0, -7.5) == pytest.approx(expected)


def test_outage_rejects_negative_sigma() -> None:
    with pytest.raises(DomainError):
        ch.obstruction_outage_prob(0.0, -1.0, -7.5)


# ============================================================================
# Parameter validation
# ============================================================================


def test_radio_collects_every_violation() -> None:
    with pytest.raises(ValidationError) as info:
        ch.RadioParams(sf=13, bw=100_000, cr=0)
    assert len(info.value.violations) == 3  # noqa: PLR2004


def test_channel_rejects_bad_exponent() -> None:
    with pytest.raises(ValidationError, match="channel.n"):
        ch.ChannelParams(n=0.5)
