"""SINR balancing with Eve's channel known: closed-form dual path with a reference fallback."""

import logging

import numpy as np

from src.config import SchemeConfig, SolverConfig
from src.errors import DegenerateChannelError, InfeasibleProblemError
from src.kkt import build_kkt_matrices, penalty_iterate, recover_precoders
from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame
from src.regions import Region
from src.schemes.base import (
    PrecodingScheme,
    candidate_regions,
    eve_threshold,
    solution_from_transmit_vector,
)
from src.schemes.lowering import lower_balancing
from src.solution import PrecodingSolution, SchemeTag
from src.solver import solve_reference

logger = logging.getLogger(__name__)


def _fast_branch(channels, frame, constellation, region, power, solver_config) -> PrecodingSolution | None:
    try:
        matrices = build_kkt_matrices(channels, frame, constellation, region, solver_config)
        state = penalty_iterate(matrices, solver_config, P_s=power)
        if not state.converged:
            logger.warning(f"Penalty iteration did not converge in region {region}; using reference solver")
            return None
        return recover_precoders(state, matrices, power, constellation, SchemeTag.P2)
    except DegenerateChannelError as e:
        logger.warning(f"Closed-form path unavailable in region {region}: {e}")
    except ValueError as e:
        logger.warning(f"Closed-form recovery failed in region {region}: {e}")
    return None


def _reference_branch(channels, frame, constellation, region, power, t_e_fixed, solver_config):
    program, layout = lower_balancing(channels, frame, constellation.cot, region, power, t_e_fixed)
    report = solve_reference(program, solver_config)
    logger.debug(f"Balancing region {region}: {report.status} (t={-report.objective:.6g})")
    if not report.is_optimal:
        return None
    x = layout.complex_block(report.x, "x")
    return solution_from_transmit_vector(
        x, channels, frame, constellation, region, t_e_fixed,
        scheme=SchemeTag.P2, solver_path="reference",
    )


def solve_balance_branch(
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    region: Region,
    power: float,
    t_e_fixed: float | None = None,
    solver_path: str = "auto",
    solver_config: SolverConfig | None = None,
) -> PrecodingSolution | None:
    """Solve one subregion; None when it is infeasible."""
    if t_e_fixed is None and solver_path == "auto":
        solution = _fast_branch(channels, frame, constellation, region, power, solver_config)
        if solution is not None:
            return solution
    return _reference_branch(channels, frame, constellation, region, power, t_e_fixed, solver_config)


def solve_balance_full(
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    budget: PowerBudget,
    noise: NoiseModel,
    scheme_config: SchemeConfig | None = None,
    solver_config: SolverConfig | None = None,
) -> PrecodingSolution:
    """Maximize the common user threshold t under |W b|^2 <= P_s.

    Ties between subregions go to the first in A, B, C&D order.

    Raises:
        InfeasibleProblemError: If no subregion is feasible
    """
    scheme_config = scheme_config or SchemeConfig()
    t_e_fixed = eve_threshold(scheme_config, noise)
    candidates = []
    for region in candidate_regions(scheme_config, constellation):
        solution = solve_balance_branch(
            channels, frame, constellation, region, budget.total,
            t_e_fixed, scheme_config.solver_path, solver_config,
        )
        if solution is not None:
            candidates.append(solution)
    if not candidates:
        raise InfeasibleProblemError("SINR balancing is infeasible in every subregion")
    return max(candidates, key=lambda s: s.thresholds.t)


class BalancingScheme(PrecodingScheme):
    """SINR balancing with full Eve CSI."""

    tag = SchemeTag.P2

    def solve(
        self,
        channels: ChannelSet,
        frame: SymbolFrame,
        constellation: Constellation,
        budget: PowerBudget,
        noise: NoiseModel,
        rng: np.random.Generator | None = None,
    ) -> PrecodingSolution:
        return solve_balance_full(channels, frame, constellation, budget, noise, self.scheme_config, self.solver_config)
