"""Tests for the system model."""

import math

import numpy as np
import pytest

from src.model import (
    ChannelSet,
    Constellation,
    NoiseModel,
    PowerBudget,
    SymbolFrame,
    db_to_linear,
    draw_channels,
    exponential_correlation,
    make_rng,
    psk_symbol,
    snr_to_threshold,
)


def test_psk_symbol_snaps_axis_points():
    """QPSK symbols on the axes are exact."""
    assert psk_symbol(0, 4) == 1 + 0j
    assert psk_symbol(1, 4) == 1j
    assert psk_symbol(2, 4) == -1 + 0j
    assert psk_symbol(3, 4) == -1j


def test_psk_symbol_rejects_bad_order():
    """Orders that are not powers of two are rejected."""
    with pytest.raises(ValueError, match="power of two"):
        psk_symbol(0, 3)
    with pytest.raises(ValueError, match="out of range"):
        psk_symbol(4, 4)


def test_constellation_geometry():
    """Half angle and cot follow the order."""
    assert Constellation(2).cot == 0.0
    assert Constellation(2).is_binary is True
    assert Constellation(4).cot == pytest.approx(1.0)
    assert Constellation(8).half_angle == pytest.approx(math.pi / 8)
    assert np.allclose(np.abs(Constellation(8).symbols), 1.0)


def test_exponential_correlation():
    """Entries decay as r^|i-j|."""
    R = exponential_correlation(3, 0.5)
    assert R[0, 0] == 1.0
    assert R[0, 2] == pytest.approx(0.25)
    assert np.allclose(R, R.T)
    with pytest.raises(ValueError, match="Correlation coefficient"):
        exponential_correlation(3, 1.0)


def test_make_rng_substreams():
    """Same keys reproduce draws, different keys give different streams."""
    first = make_rng(5, 1, 2).standard_normal(4)
    again = make_rng(5, 1, 2).standard_normal(4)
    other = make_rng(5, 1, 3).standard_normal(4)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)


def test_draw_channels_shapes():
    """Channels have the requested shapes and are read-only."""
    channels = draw_channels(6, 2, 0)
    assert channels.H.shape == (2, 6)
    assert channels.g_e.shape == (6,)
    assert channels.R_e is None
    assert channels.H.flags.writeable is False


def test_draw_channels_with_correlation():
    """Correlated draws attach R_e."""
    channels = draw_channels(4, 2, 1, correlation=0.7)
    assert channels.R_e.shape == (4, 4)
    assert channels.R_e[0, 1] == pytest.approx(0.7)


def test_draw_channels_allows_fewer_antennas_than_users():
    """Only N >= 1 and K >= 1 are required to draw channels."""
    channels = draw_channels(2, 3, 0)
    assert channels.H.shape == (3, 2)
    with pytest.raises(ValueError, match="N >= 1 and K >= 1"):
        draw_channels(0, 2, 0)
    with pytest.raises(ValueError, match="N >= 1 and K >= 1"):
        draw_channels(4, 0, 0)


def test_draw_channels_unit_variance_entries():
    """Entries are CN(0, 1): mean modulus sqrt(pi)/2 and unit mean power."""
    entries = np.concatenate([
        np.concatenate([c.H.ravel(), c.g_e]) for c in (draw_channels(6, 2, seed) for seed in range(10_000))
    ])
    standard_error = math.sqrt(1.0 - math.pi / 4.0) / math.sqrt(entries.size)
    assert np.mean(np.abs(entries)) == pytest.approx(math.sqrt(math.pi) / 2.0, abs=4 * standard_error)
    assert np.mean(np.abs(entries) ** 2) == pytest.approx(1.0, abs=0.02)
    assert abs(np.mean(entries)) < 0.01


def test_correlated_eve_channel_follows_r_e():
    """The sample covariance of g_e approaches the exponential correlation matrix."""
    samples = np.array([draw_channels(4, 1, seed, correlation=0.5).g_e for seed in range(5000)])
    covariance = samples.T @ samples.conj() / samples.shape[0]
    assert np.allclose(covariance, exponential_correlation(4, 0.5), atol=0.07)


def test_channel_set_shape_mismatch():
    """H and g_e must agree on N."""
    with pytest.raises(ValueError, match="disagree"):
        ChannelSet(H=np.ones((2, 4)), g_e=np.ones(3))


def test_snr_to_threshold():
    """Threshold is sigma*sqrt(10^(dB/10))."""
    assert snr_to_threshold(0.0, 1.0) == pytest.approx(1.0)
    assert snr_to_threshold(20.0, 0.5) == pytest.approx(5.0)
    assert db_to_linear(10.0) == pytest.approx(10.0)
    with pytest.raises(ValueError, match="positive"):
        snr_to_threshold(10.0, 0.0)


def test_symbol_frame_from_indices():
    """Frames carry symbols and the unit-modulus jamming symbol."""
    frame = SymbolFrame.from_indices([0, 1], Constellation(4), target_index=1, jamming_phase=math.pi)
    assert frame.symbols == (1 + 0j, 1j)
    assert frame.target_symbol == 1j
    assert frame.b.shape == (3,)
    assert frame.b[-1] == pytest.approx(-1.0)


def test_symbol_frame_rejects_bad_target():
    """The target index must name a user."""
    with pytest.raises(ValueError, match="Target index"):
        SymbolFrame.from_indices([0, 1], Constellation(4), target_index=2)


def test_symbol_frame_draw_is_reproducible():
    """Drawing with the same generator state gives the same frame."""
    a = SymbolFrame.draw(Constellation(8), 3, make_rng(9))
    b = SymbolFrame.draw(Constellation(8), 3, make_rng(9))
    assert a == b


def test_noise_model_validation():
    """Noise levels must be positive."""
    with pytest.raises(ValueError, match="positive"):
        NoiseModel(sigma_users=0.0)
    samples = NoiseModel().sample(make_rng(0), 2000, 2.0)
    assert np.mean(np.abs(samples) ** 2) == pytest.approx(4.0, rel=0.15)


def test_power_budget():
    """Budgets split the total by the jamming ratio."""
    budget = PowerBudget.from_ratio(10.0, 0.3)
    assert budget.jamming == pytest.approx(3.0)
    assert budget.floor == pytest.approx(3.0)
    assert budget.information == pytest.approx(7.0)
    with pytest.raises(ValueError, match="Jamming power"):
        PowerBudget(total=1.0, jamming=1.0)
    with pytest.raises(ValueError, match="Total power"):
        PowerBudget(total=0.0)
