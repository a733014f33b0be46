"""System model: constellations, channels, frames, noise and power budgets."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky

# Components smaller than this are snapped to exact zero in PSK symbols.
_SNAP = 1e-15


def psk_symbol(index: int, order: int) -> complex:
    """Return the unit-modulus M-PSK symbol e^{j*2*pi*index/order}.

    Raises:
        ValueError: If order is not a power of two >= 2 or index is out of range
    """
    _check_order(order)
    if not 0 <= index < order:
        raise ValueError(f"Symbol index {index} out of range for {order}-PSK")
    angle = 2.0 * math.pi * index / order
    re, im = math.cos(angle), math.sin(angle)
    re = 0.0 if abs(re) < _SNAP else re
    im = 0.0 if abs(im) < _SNAP else im
    return complex(re, im)


def _check_order(order: int) -> None:
    if order < 2 or order & (order - 1):
        raise ValueError(f"Constellation order must be a power of two >= 2, got {order}")


@dataclass(frozen=True)
class Constellation:
    """An M-PSK constellation."""

    order: int
    symbols: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_order(self.order)
        points = np.array([psk_symbol(i, self.order) for i in range(self.order)])
        points.setflags(write=False)
        object.__setattr__(self, "symbols", points)

    @property
    def half_angle(self) -> float:
        """Half the angular width of a decision sector (pi/M)."""
        return math.pi / self.order

    @property
    def is_binary(self) -> bool:
        """True for BPSK, where decision regions are half-planes."""
        return self.order == 2

    @property
    def cot(self) -> float:
        """1/tan(theta), exactly zero for BPSK."""
        return 0.0 if self.is_binary else 1.0 / math.tan(self.half_angle)

    def symbol(self, index: int) -> complex:
        """Return the symbol with the given index."""
        return complex(self.symbols[index])


def exponential_correlation(num_antennas: int, coefficient: float) -> np.ndarray:
    """Build the exponential correlation matrix [R]_ij = r^|i-j|."""
    if not 0.0 <= coefficient < 1.0:
        raise ValueError(f"Correlation coefficient must be in [0, 1), got {coefficient}")
    idx = np.arange(num_antennas)
    return coefficient ** np.abs(idx[:, None] - idx[None, :]).astype(float)


@dataclass(frozen=True)
class ChannelSet:
    """Channels of one channel-use: users H (K x N), Eve g_e (N,), optional R_e."""

    H: np.ndarray
    g_e: np.ndarray
    R_e: np.ndarray | None = None

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        g_e = np.array(self.g_e, dtype=complex).reshape(-1)
        if H.ndim != 2 or H.shape[1] != g_e.shape[0]:
            raise ValueError(f"Channel shapes disagree: H {H.shape}, g_e {g_e.shape}")
        H.setflags(write=False)
        g_e.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g_e", g_e)
        if self.R_e is not None:
            R_e = np.array(self.R_e, dtype=complex)
            if R_e.shape != (g_e.shape[0], g_e.shape[0]):
                raise ValueError(f"R_e must be {g_e.shape[0]}x{g_e.shape[0]}, got {R_e.shape}")
            R_e.setflags(write=False)
            object.__setattr__(self, "R_e", R_e)

    @property
    def num_users(self) -> int:
        return self.H.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.H.shape[1]


def make_rng(seed: int | np.random.Generator, *keys: int) -> np.random.Generator:
    """Return a PCG64 generator for (seed, *keys).

    Distinct key tuples give statistically independent substreams, so trial i of
    grid point j always sees the same draws regardless of scheduling.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def draw_channels(
    num_antennas: int,
    num_users: int,
    seed: int | np.random.Generator,
    correlation: float | None = None,
) -> ChannelSet:
    """Draw i.i.d. Rayleigh user channels and an Eve channel.

    When ``correlation`` is given, Eve's channel is drawn as R_e^{1/2} z with the
    exponential correlation model and R_e is attached to the result.
    """
    if num_users < 1 or num_antennas < 1:
        raise ValueError(f"Need N >= 1 and K >= 1, got N={num_antennas}, K={num_users}")
    rng = make_rng(seed)
    H = _complex_gaussian(rng, (num_users, num_antennas))
    z = _complex_gaussian(rng, num_antennas)
    if correlation is None:
        return ChannelSet(H=H, g_e=z)
    R_e = exponential_correlation(num_antennas, correlation)
    root = cholesky(R_e, lower=True)
    return ChannelSet(H=H, g_e=root @ z, R_e=R_e)


def snr_to_threshold(gamma_db: float, sigma: float) -> float:
    """Convert an SNR target in dB to the amplitude threshold sigma*sqrt(Gamma)."""
    if sigma <= 0:
        raise ValueError(f"Noise standard deviation must be positive, got {sigma}")
    if math.isnan(gamma_db):
        raise ValueError("SNR target is NaN")
    return sigma * math.sqrt(10.0 ** (gamma_db / 10.0))


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


@dataclass(frozen=True)
class SymbolFrame:
    """Symbols of one channel-use plus the jamming phase.

    Users and the target index are 0-based.
    """

    symbol_indices: tuple[int, ...]
    symbols: tuple[complex, ...]
    target_index: int = 0
    jamming_phase: float = 0.0

    def __post_init__(self):
        if len(self.symbol_indices) != len(self.symbols):
            raise ValueError("symbol_indices and symbols differ in length")
        if not 0 <= self.target_index < len(self.symbols):
            raise ValueError(f"Target index {self.target_index} outside 0..{len(self.symbols) - 1}")

    @classmethod
    def from_indices(
        cls,
        indices,
        constellation: Constellation,
        target_index: int = 0,
        jamming_phase: float = 0.0,
    ) -> "SymbolFrame":
        """Create a frame from symbol indices."""
        indices = tuple(int(i) for i in indices)
        return cls(
            symbol_indices=indices,
            symbols=tuple(constellation.symbol(i) for i in indices),
            target_index=target_index,
            jamming_phase=float(jamming_phase),
        )

    @classmethod
    def draw(
        cls,
        constellation: Constellation,
        num_users: int,
        rng: np.random.Generator,
        target_index: int = 0,
    ) -> "SymbolFrame":
        """Draw uniform symbols and a uniform jamming phase."""
        indices = rng.integers(0, constellation.order, size=num_users)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        return cls.from_indices(indices, constellation, target_index, phase)

    @property
    def num_users(self) -> int:
        return len(self.symbols)

    @property
    def s(self) -> np.ndarray:
        return np.array(self.symbols, dtype=complex)

    @property
    def target_symbol(self) -> complex:
        return self.symbols[self.target_index]

    @property
    def jamming_symbol(self) -> complex:
        return complex(np.exp(1j * self.jamming_phase))

    @property
    def b(self) -> np.ndarray:
        """Stacked vector [s_1, ..., s_K, e^{j*phi_v}]."""
        return np.append(self.s, self.jamming_symbol)


@dataclass(frozen=True)
class NoiseModel:
    """Per-receiver noise standard deviations."""

    sigma_users: float = 1.0
    sigma_eve: float = 1.0

    def __post_init__(self):
        if self.sigma_users <= 0 or self.sigma_eve <= 0:
            raise ValueError("Noise standard deviations must be positive")

    def sample(self, rng: np.random.Generator, size: int, sigma: float) -> np.ndarray:
        """Draw CN(0, sigma^2) samples."""
        return sigma * _complex_gaussian(rng, size)


@dataclass(frozen=True)
class PowerBudget:
    """Total power, jamming power (random schemes) and jamming floor (no-CSI scheme)."""

    total: float
    jamming: float = 0.0
    floor: float = 0.0

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError(f"Total power must be positive, got {self.total}")
        if not 0.0 <= self.jamming < self.total:
            raise ValueError(f"Jamming power must satisfy 0 <= P_n < P_s, got {self.jamming}")
        if not 0.0 <= self.floor < self.total:
            raise ValueError(f"Jamming floor must satisfy 0 <= P_0 < P_s, got {self.floor}")

    @classmethod
    def from_ratio(cls, total: float, ratio: float) -> "PowerBudget":
        """Split ``ratio * total`` into both the jamming power and the jamming floor."""
        return cls(total=total, jamming=ratio * total, floor=ratio * total)

    @property
    def information(self) -> float:
        """Power left for the information-bearing part of random schemes."""
        return self.total - self.jamming
