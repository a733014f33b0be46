"""Constructive and destructive region geometry on rotated observations."""

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from src.model import Constellation, SymbolFrame


class Region(StrEnum):
    """Destructive subregions at Eve relative to the rotated target symbol."""

    A = "A"
    B = "B"
    CD = "CD"


@dataclass(frozen=True)
class Thresholds:
    """Achieved thresholds: common user threshold, per-user thresholds, Eve threshold."""

    t: float | None = None
    t_k: tuple[float, ...] | None = None
    t_e: float | None = None

    def __post_init__(self):
        for value in [self.t, self.t_e, *(self.t_k or ())]:
            if value is not None and value < 0:
                raise ValueError(f"Thresholds must be nonnegative, got {value}")


def rotated_gain(channel_row: np.ndarray, W: np.ndarray, frame: SymbolFrame, reference: int) -> complex:
    """Noiseless observation h^T W b rotated by the conjugate of symbol ``reference``."""
    W = np.asarray(W)
    if W.shape != (len(channel_row), frame.num_users + 1):
        raise ValueError(f"Precoder shape {W.shape} does not match N={len(channel_row)}, K={frame.num_users}")
    return rotate(complex(channel_row @ (W @ frame.b)), frame.symbols[reference])


def rotate(observation: complex, symbol: complex) -> complex:
    """Rotate an observation by the conjugate of a unit-modulus symbol."""
    return complex(observation * np.conj(symbol))


def in_constructive_region(value: complex, t: float, constellation: Constellation, tol: float = 0.0) -> bool:
    """Check |Im| <= tan(theta)*(Re - t); BPSK reduces to Re >= t."""
    margin = constructive_margin(value, constellation)
    return margin >= t - tol


def constructive_margin(value: complex, constellation: Constellation) -> float:
    """Largest t for which ``value`` is constructive: Re - |Im|/tan(theta)."""
    return value.real - abs(value.imag) * constellation.cot


def in_destructive_subregion(
    value: complex,
    t_e: float,
    constellation: Constellation,
    region: Region,
    tol: float = 0.0,
) -> bool:
    """Check membership of a rotated Eve observation in a destructive subregion."""
    shifted = value.real - t_e
    if region is Region.CD:
        return shifted <= tol
    if shifted < -tol:
        return False
    if constellation.is_binary:
        # A and B collapse onto the line Re = t_e.
        on_line = shifted <= tol
        return on_line and (value.imag >= -tol if region is Region.A else value.imag <= tol)
    slope = math.tan(constellation.half_angle)
    if region is Region.A:
        return value.imag >= slope * shifted - tol
    return value.imag <= -slope * shifted + tol


def minimal_eve_threshold(value: complex, constellation: Constellation, region: Region) -> float:
    """Smallest t_e >= 0 that places ``value`` in ``region`` (inf when impossible)."""
    cot = constellation.cot
    if region is Region.CD:
        return max(value.real, 0.0)
    if region is Region.A:
        lower = value.real - value.imag * cot
    else:
        lower = value.real + value.imag * cot
    lower = max(lower, 0.0)
    return lower if lower <= value.real + 1e-12 else math.inf


def classify_eve(value: complex, t_e: float, constellation: Constellation) -> Region | None:
    """Return the destructive subregion containing ``value``, if any."""
    for region in (Region.A, Region.B, Region.CD):
        if in_destructive_subregion(value, t_e, constellation, region):
            return region
    return None


def eve_constraint_rows(region: Region, cot: float) -> tuple[np.ndarray, np.ndarray]:
    """Linear rows for Eve's subregion as ``rows @ [Re phi, Im phi] + coeffs * t_e <= 0``."""
    if region is Region.A:
        return np.array([[-1.0, 0.0], [1.0, -cot]]), np.array([1.0, -1.0])
    if region is Region.B:
        return np.array([[-1.0, 0.0], [1.0, cot]]), np.array([1.0, -1.0])
    return np.array([[1.0, 0.0]]), np.array([-1.0])
