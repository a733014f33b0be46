"""Tests for the full-CSI schemes: power minimization and SINR balancing."""

from unittest.mock import patch

import numpy as np
import pytest

from src.config import SchemeConfig
from src.errors import InfeasibleProblemError
from src.model import Constellation, NoiseModel, PowerBudget, SymbolFrame, draw_channels, make_rng
from src.regions import Region
from src.schemes import (
    BalancingScheme,
    PowerMinScheme,
    audit_solution,
    solve_balance_full,
    solve_power_min,
)
from src.schemes.base import candidate_regions, eve_threshold
from src.schemes.lowering import lift_transmit_vector, precoder_to_vec, vec_to_precoder
from src.solution import SchemeTag

QPSK = Constellation(4)
NOISE = NoiseModel()


def make_instance(seed: int, order: int = 4, num_users: int = 2):
    rng = make_rng(seed, 1)
    channels = draw_channels(6, num_users, rng)
    frame = SymbolFrame.draw(Constellation(order), num_users, rng)
    return channels, frame


def test_candidate_regions():
    """Restrictions pick the subregions to solve."""
    assert candidate_regions(SchemeConfig(), QPSK) == [Region.A, Region.B, Region.CD]
    assert candidate_regions(SchemeConfig(region_restriction="ab-only"), QPSK) == [Region.A, Region.B]
    assert candidate_regions(SchemeConfig(subregion_policy="CD"), QPSK) == [Region.CD]
    assert candidate_regions(SchemeConfig(), Constellation(2)) == [Region.CD]
    with pytest.raises(ValueError, match="No destructive subregion"):
        candidate_regions(SchemeConfig(region_restriction="ab-only"), Constellation(2))


def test_eve_threshold_from_linear_sinr():
    """t_e = sigma_e * sqrt(Gamma_e)."""
    assert eve_threshold(SchemeConfig(), NOISE) is None
    assert eve_threshold(SchemeConfig(gamma_e_fixed=4.0), NoiseModel(sigma_eve=0.5)) == pytest.approx(1.0)


def test_lift_and_vec_helpers():
    """Lifted precoders reproduce x; vec is column-major."""
    rng = np.random.default_rng(0)
    x = rng.normal(size=4) + 1j * rng.normal(size=4)
    b = np.array([1.0, 1j, -1.0])
    W = lift_transmit_vector(x, b)
    assert W @ b == pytest.approx(x)
    assert precoder_to_vec(W)[:4] == pytest.approx(W[:, 0])
    assert vec_to_precoder(precoder_to_vec(W), 4) == pytest.approx(W)


def test_power_min_meets_targets():
    """Every user reaches its threshold and the audit passes."""
    channels, frame = make_instance(0)
    solution = solve_power_min(channels, frame, QPSK, NOISE, [10.0, 5.0])

    assert solution.scheme is SchemeTag.P1
    assert solution.subregion in (Region.A, Region.B, Region.CD)
    assert solution.thresholds.t_k == pytest.approx((10**0.5, 10**0.25))
    assert audit_solution(solution, channels, frame, QPSK, noise=NOISE).passed


def test_power_min_target_count_checked():
    """One target per user is required."""
    channels, frame = make_instance(0)
    with pytest.raises(ValueError, match="Expected 2 SNR targets"):
        solve_power_min(channels, frame, QPSK, NOISE, [10.0])


def test_complete_region_never_costs_more():
    """Free t_e over all subregions is at most the ab-only or zero-leakage power."""
    for seed in range(5):
        channels, frame = make_instance(seed)
        gammas = [10.0, 10.0]
        complete = solve_power_min(channels, frame, QPSK, NOISE, gammas)
        ab_only = solve_power_min(
            channels, frame, QPSK, NOISE, gammas,
            SchemeConfig(region_restriction="ab-only", gamma_e_fixed=1.0),
        )
        zero_leakage = solve_power_min(channels, frame, QPSK, NOISE, gammas, SchemeConfig(gamma_e_fixed=0.0))
        assert complete.transmit_power <= ab_only.transmit_power * (1 + 1e-5)
        assert complete.transmit_power <= zero_leakage.transmit_power * (1 + 1e-5)
        assert zero_leakage.thresholds.t_e == 0.0


def test_power_min_scheme_uses_configured_targets():
    """The scheme object fills in the common target."""
    channels, frame = make_instance(2)
    scheme = PowerMinScheme(SchemeConfig(user_gamma_db=0.0))
    solution = scheme.solve(channels, frame, QPSK, PowerBudget(total=1.0), NOISE)
    assert solution.thresholds.t_k == pytest.approx((1.0, 1.0))


def test_balancing_within_budget_and_audited():
    """Balanced solutions use at most P_s and pass the audit."""
    budget = PowerBudget(total=10.0)
    for seed in range(3):
        channels, frame = make_instance(seed, order=8)
        solution = solve_balance_full(channels, frame, Constellation(8), budget, NOISE)
        assert solution.transmit_power <= 10.0 * (1 + 1e-6)
        assert solution.thresholds.t > 0
        assert audit_solution(solution, channels, frame, Constellation(8), budget, NOISE).passed


def test_balancing_paths_agree():
    """auto and reference paths reach the same threshold."""
    budget = PowerBudget(total=10.0)
    for seed in range(3):
        channels, frame = make_instance(20 + seed)
        fast = solve_balance_full(channels, frame, QPSK, budget, NOISE)
        reference = solve_balance_full(channels, frame, QPSK, budget, NOISE, SchemeConfig(solver_path="reference"))
        assert reference.solver_path == "reference"
        assert fast.thresholds.t == pytest.approx(reference.thresholds.t, abs=max(1e-3, 1e-3 * reference.thresholds.t))


def test_balancing_bpsk_uses_reference():
    """BPSK only solves C&D, on the reference path."""
    bpsk = Constellation(2)
    channels, frame = make_instance(4, order=2)
    solution = BalancingScheme().solve(channels, frame, bpsk, PowerBudget(total=5.0), NOISE)
    assert solution.subregion is Region.CD
    assert solution.solver_path == "reference"
    assert audit_solution(solution, channels, frame, bpsk, PowerBudget(total=5.0), NOISE).passed


def test_balancing_zero_leakage_costs_threshold():
    """Pinning t_e = 0 cannot raise the balanced threshold."""
    budget = PowerBudget(total=10.0)
    channels, frame = make_instance(7)
    free = solve_balance_full(channels, frame, QPSK, budget, NOISE)
    pinned = solve_balance_full(channels, frame, QPSK, budget, NOISE, SchemeConfig(gamma_e_fixed=0.0))
    assert pinned.thresholds.t <= free.thresholds.t + 1e-4
    assert pinned.thresholds.t_e == 0.0


def test_balancing_infeasible_when_every_branch_fails():
    """With no feasible branch an InfeasibleProblemError is raised."""
    channels, frame = make_instance(0)
    with patch("src.schemes.balancing.solve_balance_branch", return_value=None):
        with pytest.raises(InfeasibleProblemError, match="every subregion"):
            solve_balance_full(channels, frame, QPSK, PowerBudget(total=1.0), NOISE)


def test_power_min_high_snr_target():
    """A 30 dB target is solved to optimality in every subregion that can hold it."""
    channels, frame = make_instance(0)
    solution = solve_power_min(channels, frame, QPSK, NOISE, [30.0, 30.0])
    assert solution.transmit_power > 0
    assert solution.thresholds.t_k == pytest.approx((10**1.5, 10**1.5))
    assert audit_solution(solution, channels, frame, QPSK, noise=NOISE).passed


@pytest.mark.parametrize("gamma_db", [0.0, 10.0, 20.0, 30.0])
def test_complete_region_saving_across_targets(gamma_db):
    """Complete-region power stays at or below ab-only and zero-leakage power on every seed."""
    for seed in range(8):
        channels, frame = make_instance(200 + seed)
        gammas = [gamma_db, gamma_db]
        complete = solve_power_min(channels, frame, QPSK, NOISE, gammas)
        ab_only = solve_power_min(
            channels, frame, QPSK, NOISE, gammas,
            SchemeConfig(region_restriction="ab-only", gamma_e_fixed=1.0),
        )
        zero_leakage = solve_power_min(channels, frame, QPSK, NOISE, gammas, SchemeConfig(gamma_e_fixed=0.0))
        assert complete.transmit_power <= ab_only.transmit_power * (1 + 1e-5)
        assert complete.transmit_power <= zero_leakage.transmit_power * (1 + 1e-5)
