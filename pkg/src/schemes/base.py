"""Precoding scheme interface and shared helpers."""

import math
from abc import ABC, abstractmethod

import numpy as np

from src.config import SchemeConfig, SolverConfig
from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame
from src.regions import Region, Thresholds, constructive_margin, minimal_eve_threshold, rotate
from src.schemes.lowering import lift_transmit_vector
from src.solution import PrecodingSolution, SchemeTag


class PrecodingScheme(ABC):
    """Abstract base class for precoding schemes."""

    tag: SchemeTag

    def __init__(self, scheme_config: SchemeConfig | None = None, solver_config: SolverConfig | None = None):
        """Initialize with scheme and solver settings."""
        self.scheme_config = scheme_config or SchemeConfig()
        self.solver_config = solver_config or SolverConfig()

    @abstractmethod
    def solve(
        self,
        channels: ChannelSet,
        frame: SymbolFrame,
        constellation: Constellation,
        budget: PowerBudget,
        noise: NoiseModel,
        rng: np.random.Generator | None = None,
    ) -> PrecodingSolution:
        """Design the precoders for one channel-use.

        Args:
            channels: Users' and Eve's channels
            frame: Symbols and jamming phase of this channel-use
            constellation: M-PSK constellation
            budget: Power budget
            noise: Receiver noise levels
            rng: Generator for randomized schemes

        Returns:
            PrecodingSolution with the precoders and achieved thresholds
        """
        pass

    def known_signal(
        self,
        channels: ChannelSet,
        frame: SymbolFrame,
        constellation: Constellation,
        budget: PowerBudget,
        noise: NoiseModel,
    ) -> np.ndarray:
        """The transmit vector an adversary who knows the scheme can reproduce."""
        return self.solve(channels, frame, constellation, budget, noise).transmit_signal()


def eve_threshold(scheme_config: SchemeConfig, noise: NoiseModel) -> float | None:
    """Fixed t_e = sigma_e*sqrt(Gamma_e), or None when t_e is optimized."""
    if scheme_config.gamma_e_fixed is None:
        return None
    return noise.sigma_eve * math.sqrt(scheme_config.gamma_e_fixed)


def candidate_regions(scheme_config: SchemeConfig, constellation: Constellation) -> list[Region]:
    """Subregions to try, in tie-breaking order.

    Raises:
        ValueError: If the restriction leaves nothing to solve
    """
    if scheme_config.subregion_policy != "all":
        regions = [Region(scheme_config.subregion_policy)]
    elif scheme_config.region_restriction == "ab-only":
        regions = [Region.A, Region.B]
    else:
        regions = [Region.A, Region.B, Region.CD]
    if constellation.is_binary:
        # A and B have no interior for BPSK.
        regions = [r for r in regions if r is Region.CD]
    if not regions:
        raise ValueError("No destructive subregion left to solve for this constellation")
    return regions


def solution_from_transmit_vector(
    x: np.ndarray,
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    region: Region | None,
    t_e_fixed: float | None,
    scheme: SchemeTag,
    solver_path: str,
    user_thresholds: tuple[float, ...] | None = None,
) -> PrecodingSolution:
    """Lift x to W = x b^H/|b|^2 and report the thresholds it certifies."""
    b = frame.b
    W = lift_transmit_vector(x, b)
    lam = (channels.H @ x) * frame.s.conj()
    t = None
    if user_thresholds is None:
        t = max(min(constructive_margin(complex(v), constellation) for v in lam), 0.0)
    t_e = t_e_fixed
    if region is not None and t_e is None:
        phi = rotate(complex(channels.g_e @ x), frame.target_symbol)
        t_e = minimal_eve_threshold(phi, constellation, region)
        if not math.isfinite(t_e):
            t_e = max(phi.real, 0.0)
    return PrecodingSolution(
        W=W,
        b=b,
        thresholds=Thresholds(t=t, t_k=user_thresholds, t_e=t_e),
        transmit_power=float(np.real(np.vdot(x, x))),
        scheme=scheme,
        solver_path=solver_path,
        subregion=region,
    )
