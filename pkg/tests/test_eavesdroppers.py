"""Tests for the eavesdropper receivers."""

from unittest.mock import MagicMock

import numpy as np
import pytest

from src.eavesdroppers import SchemeReplayer, detect_common, detect_smart_ml
from src.errors import InfeasibleProblemError
from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame, draw_channels, make_rng
from src.schemes import BalancingScheme, RandomJammingScheme, RandomPhaseScheme

QPSK = Constellation(4)


@pytest.fixture
def channels():
    """Two users on two antennas, Eve sees only the first antenna."""
    return ChannelSet(H=np.eye(2), g_e=np.array([1.0, 0.0]))


def symbol_replayer(indices):
    """Transmit the hypothesized symbols directly."""
    return np.array([QPSK.symbol(i) for i in indices])


def test_detect_common_sectors():
    """Each point maps to the symbol of its sector."""
    assert detect_common(1 + 0.1j, QPSK).symbol_index == 0
    assert detect_common(-0.2 + 2j, QPSK).symbol_index == 1
    assert detect_common(-3 - 0.5j, QPSK).symbol_index == 2
    assert detect_common(0.1 - 1j, QPSK).symbol_index == 3


def test_detect_common_boundary_goes_to_lower_index():
    """A point on a sector edge picks the lower index."""
    assert detect_common(1 + 1j, QPSK).symbol_index == 0


def test_detect_common_zero_is_ambiguous():
    """y = 0 has no phase."""
    result = detect_common(0j, QPSK)
    assert result.ambiguous
    assert result.symbol_index == 0


def test_smart_ml_finds_transmitted_symbols(channels):
    """The hypothesis that reproduces y_e wins."""
    result = detect_smart_ml(1j, channels, symbol_replayer, QPSK, 2)
    assert result.symbol_indices == (1, 0)
    assert result.metric == pytest.approx(0.0)
    assert result.hypotheses == 16


def test_smart_ml_skips_unreproducible_hypotheses(channels):
    """Hypotheses that replay to None are ignored."""
    def replayer(indices):
        return None if indices[0] == 1 else symbol_replayer(indices)

    result = detect_smart_ml(1j, channels, replayer, QPSK, 2)
    assert result.symbol_indices[0] != 1


def test_smart_ml_nothing_reproducible(channels):
    """An all-None replay is an error."""
    with pytest.raises(RuntimeError, match="No symbol hypothesis"):
        detect_smart_ml(1j, channels, lambda indices: None, QPSK, 2)


def test_smart_ml_hypothesis_limit(channels):
    """4^10 hypotheses are refused before any replay."""
    replayer = MagicMock()
    with pytest.raises(ValueError, match="exceed the limit"):
        detect_smart_ml(1j, channels, replayer, QPSK, 10)
    replayer.assert_not_called()


def test_replayer_caches_per_hypothesis(channels):
    """Each hypothesis is solved once and sees the public frame parameters."""
    scheme = MagicMock()
    scheme.known_signal.return_value = np.ones(2, dtype=complex)
    frame = SymbolFrame.from_indices([2, 3], QPSK, target_index=1, jamming_phase=0.25)
    replayer = SchemeReplayer(scheme, channels, QPSK, PowerBudget(total=1.0), NoiseModel(), frame)

    first = replayer((0, 1))
    second = replayer((0, 1))

    assert first is second
    assert len(replayer) == 1
    scheme.known_signal.assert_called_once()
    replayed_frame = scheme.known_signal.call_args.args[1]
    assert replayed_frame.symbol_indices == (0, 1)
    assert replayed_frame.target_index == 1
    assert replayed_frame.jamming_phase == 0.25


def test_replayer_maps_infeasible_to_none(channels):
    """Hypotheses the scheme cannot solve replay to None."""
    scheme = MagicMock()
    scheme.known_signal.side_effect = InfeasibleProblemError("no branch")
    frame = SymbolFrame.from_indices([0, 0], QPSK)
    replayer = SchemeReplayer(scheme, channels, QPSK, PowerBudget(total=1.0), NoiseModel(), frame)
    assert replayer((1, 1)) is None


def test_smart_eve_recovers_deterministic_scheme():
    """Without noise, replaying a deterministic scheme reveals the target symbol."""
    rng = make_rng(5, 6)
    real_channels = draw_channels(4, 1, rng)
    frame = SymbolFrame.draw(QPSK, 1, rng)
    budget = PowerBudget(total=10.0)
    scheme = BalancingScheme()
    x = scheme.solve(real_channels, frame, QPSK, budget, NoiseModel()).transmit_signal()
    y_e = complex(real_channels.g_e @ x)

    replayer = SchemeReplayer(scheme, real_channels, QPSK, budget, NoiseModel(), frame)
    result = detect_smart_ml(y_e, real_channels, replayer, QPSK, 1)
    assert result.symbol_indices == frame.symbol_indices
    assert result.metric == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("order", [4, 8, 16])
def test_detect_common_rotation_equivariant(order):
    """Rotating y by one symbol step moves the decision by one index."""
    constellation = Constellation(order)
    step = np.exp(2j * np.pi / order)
    rng = np.random.default_rng(order)
    for _ in range(300):
        y = complex(*rng.normal(size=2))
        before = detect_common(y, constellation).symbol_index
        after = detect_common(complex(step * y), constellation).symbol_index
        assert after == (before + 1) % order


@pytest.mark.parametrize("scheme_class", [RandomJammingScheme, RandomPhaseScheme])
def test_smart_eve_close_to_guessing_against_random_schemes(scheme_class):
    """Replaying only the information part leaves the smart eavesdropper near the 3/4 QPSK guessing rate."""
    scheme = scheme_class()
    budget = PowerBudget(total=10.0, jamming=9.9)
    frames = 400
    errors = 0
    for i in range(frames):
        rng = make_rng(21, i)
        real_channels = draw_channels(4, 1, rng)
        frame = SymbolFrame.draw(QPSK, 1, rng)
        x = scheme.solve(real_channels, frame, QPSK, budget, NoiseModel(), rng).transmit_signal()
        y_e = complex(real_channels.g_e @ x)
        replayer = SchemeReplayer(scheme, real_channels, QPSK, budget, NoiseModel(), frame)
        result = detect_smart_ml(y_e, real_channels, replayer, QPSK, 1)
        errors += result.symbol_indices != frame.symbol_indices
    rate = errors / frames
    assert 0.45 <= rate <= 0.9
