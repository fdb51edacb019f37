"""Tests for collision probabilities and the reliability budget."""

import pytest

from agrotrack import reliability as rel
from agrotrack.errors import DomainError, InfeasibleError, ValidationError

# ============================================================================
# Collision probabilities
# ============================================================================


def test_single_node_never_collides() -> None:
    assert rel.collision_prob(rel.MacParams(n_nodes=1, tau=0.5)) == 0.0


def test_collision_closed_form() -> None:
    params = rel.MacParams(n_nodes=15, tau=0.01)
    assert rel.collision_prob(params) == pytest.approx(1 - 0.99**14)


def test_jitter_divides_attempt_probability() -> None:
    params = rel.MacParams(n_nodes=15, tau=0.08, k_microslots=8)
    assert rel.collision_prob_jitter(params) == pytest.approx(1 - 0.99**14)
    assert rel.collision_prob_jitter(params) < rel.collision_prob(params)


def test_one_microslot_equals_plain_model() -> None:
    params = rel.MacParams(n_nodes=40, tau=0.02, k_microslots=1)
    assert rel.collision_prob_jitter(params) == rel.collision_prob(params)


def test_collision_grows_with_nodes() -> None:
    values = [rel.collision_prob(rel.MacParams(n_nodes=n, tau=0.01)) for n in (2, 10, 100)]
    assert values == sorted(values)


def test_pure_aloha_doubles_the_window() -> None:
    p = rel.pure_aloha_collision_prob(2, 1.0, 100.0)
    assert p == pytest.approx(0.02)


def test_mac_params_validate() -> None:
    with pytest.raises(ValidationError):
        rel.MacParams(tau=1.5)


# ============================================================================
# Budgets
# ============================================================================


def test_baseline_split() -> None:
    budget = rel.budget_from_split(0.010, 0.015)
    assert budget.p_succ == pytest.approx(0.975)
    assert budget.total == pytest.approx(1.0, abs=1e-12)


def test_decomposition_sums_to_one() -> None:
    for n in (2, 15, 50, 200):
        for p_obs in (0.0, 0.01, 0.2):
            budget = rel.loss_decomposition(p_obs, rel.MacParams(n_nodes=n, tau=0.002), jitter=True)
            assert budget.total == pytest.approx(1.0, abs=1e-12)


def test_decomposition_rejects_overfull_losses() -> None:
    with pytest.raises(DomainError, match="exceeds 1"):
        rel.loss_decomposition(0.9, rel.MacParams(n_nodes=500, tau=0.5), jitter=False)


def test_split_rejects_negative_loss() -> None:
    with pytest.raises(DomainError):
        rel.budget_from_split(-0.1, 0.1)


# ============================================================================
# calibrate_tau
# ============================================================================


def test_calibrate_tau_baseline() -> None:
    assert rel.calibrate_tau(0.015, 15, 8) == pytest.approx(0.0086317, rel=1e-4)


def test_calibrate_tau_round_trip() -> None:
    for target, n, k in ((0.015, 15, 8), (0.1, 50, 4), (0.0, 5, 1), (0.3, 600, 16)):
        tau = rel.calibrate_tau(target, n, k)
        params = rel.MacParams(n_nodes=n, tau=tau, k_microslots=k)
        assert rel.collision_prob_jitter(params) == pytest.approx(target, abs=1e-12)


def test_calibrate_tau_needs_two_nodes() -> None:
    with pytest.raises(DomainError, match="two nodes"):
        rel.calibrate_tau(0.1, 1, 8)


def test_calibrate_tau_infeasible_target() -> None:
    with pytest.raises(InfeasibleError):
        rel.calibrate_tau(0.99, 2, 8)
