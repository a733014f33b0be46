"""Precoding scheme factory."""

from src.config import SchemeConfig, SolverConfig
from src.schemes.balancing import BalancingScheme
from src.schemes.base import PrecodingScheme
from src.schemes.jamming import RandomJammingScheme, RandomPhaseScheme
from src.schemes.no_csi import NoCsiScheme
from src.schemes.power_min import PowerMinScheme
from src.schemes.statistical import StatisticalScheme


def create_scheme(
    scheme_name: str,
    scheme_config: SchemeConfig | None = None,
    solver_config: SolverConfig | None = None,
) -> PrecodingScheme:
    """Create a precoding scheme by name.

    Args:
        scheme_name: One of "p1", "p2", "p3", "p4", "rjs", "rps"
        scheme_config: Per-scheme settings
        solver_config: Numerical settings

    Returns:
        Configured precoding scheme

    Raises:
        ValueError: If scheme_name is unknown
    """
    schemes = {
        "p1": PowerMinScheme,
        "p2": BalancingScheme,
        "p3": StatisticalScheme,
        "p4": NoCsiScheme,
        "rjs": RandomJammingScheme,
        "rps": RandomPhaseScheme,
    }

    name = str(scheme_name).lower()
    if name not in schemes:
        raise ValueError(f"Unknown scheme: {scheme_name}. Available: {list(schemes.keys())}")

    return schemes[name](scheme_config=scheme_config, solver_config=solver_config)
