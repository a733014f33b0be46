"""Precoding schemes package."""

from src.schemes.audit import AuditReport, audit_solution
from src.schemes.balancing import BalancingScheme, solve_balance_full
from src.schemes.base import PrecodingScheme
from src.schemes.factory import create_scheme
from src.schemes.jamming import (
    RandomJammingScheme,
    RandomPhaseScheme,
    build_rjs,
    build_rps,
    nullspace_basis,
    solve_users_only,
)
from src.schemes.no_csi import NoCsiScheme, solve_balance_nocsi
from src.schemes.power_min import PowerMinScheme, solve_power_min
from src.schemes.statistical import StatisticalScheme, solve_balance_statistical

__all__ = [
    "AuditReport",
    "BalancingScheme",
    "NoCsiScheme",
    "PowerMinScheme",
    "PrecodingScheme",
    "RandomJammingScheme",
    "RandomPhaseScheme",
    "StatisticalScheme",
    "audit_solution",
    "build_rjs",
    "build_rps",
    "create_scheme",
    "nullspace_basis",
    "solve_balance_full",
    "solve_balance_nocsi",
    "solve_balance_statistical",
    "solve_power_min",
    "solve_users_only",
]
