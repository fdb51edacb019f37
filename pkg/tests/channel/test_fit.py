"""Tests for the two-regime success curve and its fitter."""

import numpy as np
import pytest

from agrotrack import channel as ch
from agrotrack.errors import DomainError, IllPosedError, InsufficientDataError, ValidationError

TRUE = ch.TwoRegimeFit(pi_obs=0.3, d_c=6000.0, beta=3.0, d_c_obs=1500.0, beta_obs=2.0)


def _points(fit: ch.TwoRegimeFit, n: int = 25) -> list[tuple[float, float]]:
    distances = np.linspace(100.0, 9000.0, n)
    return list(zip(distances.tolist(), ch.two_regime_curve(distances, fit).tolist(), strict=True))


# ============================================================================
# Curve
# ============================================================================


def test_curve_is_one_at_zero_distance() -> None:
    assert ch.success_two_regime(0.0, TRUE) == pytest.approx(1.0)


def test_curve_is_non_increasing() -> None:
    values = ch.two_regime_curve(np.linspace(0, 20_000, 200), TRUE)
    assert np.all(np.diff(values) <= 0)


def test_curve_rejects_negative_distance() -> None:
    with pytest.raises(DomainError):
        ch.success_two_regime(-1.0, TRUE)


def test_fit_parameters_are_validated() -> None:
    with pytest.raises(ValidationError, match="pi_obs"):
        ch.TwoRegimeFit(pi_obs=1.5, d_c=1.0, beta=1.0, d_c_obs=1.0, beta_obs=1.0)


# ============================================================================
# fit_two_regime
# ============================================================================


def test_noiseless_round_trip() -> None:
    points = _points(TRUE)
    result = ch.fit_two_regime(points)
    d = np.array([p[0] for p in points])
    fitted = ch.two_regime_curve(d, result.fit)
    assert np.max(np.abs(fitted - ch.two_regime_curve(d, TRUE))) <= 1e-6
    assert result.n_points == len(points)


def test_noisy_fit_stays_within_the_noise() -> None:
    sigma = 0.02
    rng = np.random.default_rng(5)
    d = np.linspace(100.0, 9000.0, 40)
    y = np.clip(ch.two_regime_curve(d, TRUE) + rng.normal(0.0, sigma, d.size), 0.0, 1.0)
    result = ch.fit_two_regime(list(zip(d.tolist(), y.tolist(), strict=True)))
    assert result.mse <= 4.0 * sigma**2
    fitted = ch.two_regime_curve(d, result.fit)
    assert np.all(np.diff(fitted) <= 1e-12)


def test_constant_data_fits_flat() -> None:
    points = [(float(d), 1.0) for d in range(100, 1100, 100)]
    result = ch.fit_two_regime(points)
    assert result.residual == pytest.approx(0.0, abs=1e-6)


def test_fit_needs_five_points() -> None:
    with pytest.raises(InsufficientDataError, match="at least 5"):
        ch.fit_two_regime(_points(TRUE, n=4))


def test_fit_rejects_single_distance() -> None:
    with pytest.raises(IllPosedError):
        ch.fit_two_regime([(500.0, 0.9)] * 6)


def test_fit_rejects_probability_outside_unit_interval() -> None:
    points = [*_points(TRUE, n=6), (100.0, 1.2)]
    with pytest.raises(DomainError):
        ch.fit_two_regime(points)
