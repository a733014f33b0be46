"""Tests for users-only balancing and the random artificial-noise schemes."""

import math

import numpy as np
import pytest

from src.errors import NullSpaceError
from src.model import Constellation, NoiseModel, PowerBudget, SymbolFrame, draw_channels, make_rng
from src.regions import rotate
from src.schemes import (
    RandomJammingScheme,
    RandomPhaseScheme,
    audit_solution,
    build_rjs,
    build_rps,
    nullspace_basis,
    solve_users_only,
)
from src.solution import SchemeTag

QPSK = Constellation(4)
NOISE = NoiseModel()


@pytest.fixture
def instance():
    """A 6-antenna, 2-user QPSK instance."""
    rng = make_rng(9, 3)
    channels = draw_channels(6, 2, rng)
    frame = SymbolFrame.draw(QPSK, 2, rng)
    return channels, frame


def test_nullspace_basis(instance):
    """V1 is orthonormal, H V1 = 0 and H r0 = s."""
    channels, frame = instance
    V1, r0 = nullspace_basis(channels.H, frame.s)
    assert V1.shape == (6, 4)
    assert np.allclose(V1.conj().T @ V1, np.eye(4), atol=1e-10)
    assert np.allclose(channels.H @ V1, 0.0, atol=1e-10)
    assert np.allclose(channels.H @ r0, frame.s, atol=1e-10)


def test_nullspace_basis_needs_spare_antennas():
    """N = K leaves no null space."""
    channels = draw_channels(2, 2, 0)
    with pytest.raises(NullSpaceError, match="N-K>=1"):
        nullspace_basis(channels.H, np.ones(2, dtype=complex))


def test_users_only_has_empty_jamming_column(instance):
    """The information part uses the whole power and leaves p = 0."""
    channels, frame = instance
    solution = solve_users_only(channels, frame, QPSK, 5.0)
    assert np.allclose(solution.W[:, 2], 0.0)
    assert solution.transmit_power <= 5.0 * (1 + 1e-6)
    assert solution.thresholds.t > 0


def test_build_rjs_stays_out_of_user_subspace(instance):
    """H p = 0 and the jamming energy equals P_n."""
    channels, frame = instance
    information = solve_users_only(channels, frame, QPSK, 5.0)
    solution = build_rjs(information, channels, frame, 5.0, 1)

    p = solution.W[:, 2]
    assert solution.scheme is SchemeTag.RJS
    assert np.allclose(channels.H @ p, 0.0, atol=1e-9)
    assert np.vdot(p, p).real == pytest.approx(5.0)
    assert solution.transmit_power == pytest.approx(information.transmit_power + 5.0)
    assert np.allclose(solution.information_signal(), information.information_signal())


def test_build_rps_reproduces_user_symbols(instance):
    """H p = sqrt(P_n)/|p_hat| s."""
    channels, frame = instance
    information = solve_users_only(channels, frame, QPSK, 5.0)
    solution = build_rps(information, channels, frame, 5.0, 2)

    p = solution.W[:, 2]
    scale = math.sqrt(5.0) / solution.details["p_hat_norm"]
    assert solution.scheme is SchemeTag.RPS
    assert np.allclose(channels.H @ p, scale * frame.s, atol=1e-9)
    assert np.vdot(p, p).real == pytest.approx(5.0)
    assert solution.b[-1] == 1.0


def test_negative_jamming_power_rejected(instance):
    """P_n must be nonnegative."""
    channels, frame = instance
    information = solve_users_only(channels, frame, QPSK, 5.0)
    with pytest.raises(ValueError, match="nonnegative"):
        build_rjs(information, channels, frame, -1.0, 0)


@pytest.mark.parametrize("scheme_class", [RandomJammingScheme, RandomPhaseScheme])
def test_random_schemes_pass_audit(instance, scheme_class):
    """Random schemes respect the budget and keep the noise off the users."""
    channels, frame = instance
    budget = PowerBudget.from_ratio(10.0, 0.5)
    solution = scheme_class().solve(channels, frame, QPSK, budget, NOISE, np.random.default_rng(4))
    assert solution.jamming_power == pytest.approx(5.0)
    assert solution.transmit_power <= 10.0 * (1 + 1e-6)
    assert audit_solution(solution, channels, frame, QPSK, budget, NOISE).passed


def test_random_scheme_needs_rng(instance):
    """Without a generator the random column cannot be drawn."""
    channels, frame = instance
    with pytest.raises(ValueError, match="needs a random generator"):
        RandomJammingScheme().solve(channels, frame, QPSK, PowerBudget.from_ratio(10.0, 0.5), NOISE)


def test_random_scheme_rejects_square_channel():
    """N = K fails before any solve."""
    rng = make_rng(1, 3)
    channels = draw_channels(2, 2, rng)
    frame = SymbolFrame.draw(QPSK, 2, rng)
    with pytest.raises(NullSpaceError):
        RandomPhaseScheme().solve(channels, frame, QPSK, PowerBudget.from_ratio(10.0, 0.5), NOISE, rng)


def test_known_signal_is_information_part(instance):
    """An adversary can only replay the deterministic part."""
    channels, frame = instance
    budget = PowerBudget.from_ratio(10.0, 0.5)
    scheme = RandomJammingScheme()
    known = scheme.known_signal(channels, frame, QPSK, budget, NOISE)
    solution = scheme.solve(channels, frame, QPSK, budget, NOISE, np.random.default_rng(0))
    assert np.allclose(known, solution.information_signal(), atol=1e-9)


def test_rps_boost_over_rjs():
    """With the same information part, RPS adds sqrt(P_n)/|p_hat| to every rotated user observation."""
    for seed in range(20):
        rng = make_rng(seed, 7)
        channels = draw_channels(6, 2, rng)
        frame = SymbolFrame.draw(QPSK, 2, rng)
        information = solve_users_only(channels, frame, QPSK, 5.0)
        rjs = build_rjs(information, channels, frame, 5.0, rng)
        rps = build_rps(information, channels, frame, 5.0, rng)
        boost = math.sqrt(5.0) / rps.details["p_hat_norm"]

        for k in range(2):
            y_rjs = rotate(complex(channels.H[k] @ rjs.transmit_signal()), frame.symbols[k])
            y_rps = rotate(complex(channels.H[k] @ rps.transmit_signal()), frame.symbols[k])
            assert y_rps == pytest.approx(y_rjs + boost, abs=1e-9)
            assert y_rps.real >= y_rjs.real
            assert abs(y_rps) >= abs(y_rjs)
