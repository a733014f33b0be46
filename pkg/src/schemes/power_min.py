"""Transmit power minimization under per-user SNR targets with Eve's channel known."""

import logging

import numpy as np

from src.config import SchemeConfig, SolverConfig
from src.errors import InfeasibleProblemError
from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame, snr_to_threshold
from src.schemes.base import (
    PrecodingScheme,
    candidate_regions,
    eve_threshold,
    solution_from_transmit_vector,
)
from src.schemes.lowering import lower_power_min
from src.solution import PrecodingSolution, SchemeTag
from src.solver import solve_reference

logger = logging.getLogger(__name__)


def solve_power_min(
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    noise: NoiseModel,
    user_gammas_db: list[float],
    scheme_config: SchemeConfig | None = None,
    solver_config: SolverConfig | None = None,
) -> PrecodingSolution:
    """Minimize |W b|^2 so every user sees its SNR target and Eve lands in a destructive subregion.

    Every allowed subregion is solved and the cheapest feasible one is kept.

    Raises:
        InfeasibleProblemError: If no subregion is feasible
    """
    scheme_config = scheme_config or SchemeConfig()
    if len(user_gammas_db) != channels.num_users:
        raise ValueError(f"Expected {channels.num_users} SNR targets, got {len(user_gammas_db)}")
    thresholds = [snr_to_threshold(g, noise.sigma_users) for g in user_gammas_db]
    t_e_fixed = eve_threshold(scheme_config, noise)

    best = None
    for region in candidate_regions(scheme_config, constellation):
        program, layout = lower_power_min(channels, frame, constellation.cot, region, thresholds, t_e_fixed)
        report = solve_reference(program, solver_config)
        logger.debug(f"Power minimization region {region}: {report.status} ({report.objective:.6g})")
        if not report.is_optimal:
            continue
        if best is None or report.objective < best[0].objective:
            best = (report, layout, region)

    if best is None:
        raise InfeasibleProblemError("Power minimization is infeasible in every subregion")
    report, layout, region = best
    x = layout.complex_block(report.x, "x")
    solution = solution_from_transmit_vector(
        x, channels, frame, constellation, region, t_e_fixed,
        scheme=SchemeTag.P1, solver_path="reference", user_thresholds=tuple(thresholds),
    )
    solution.details["objective"] = report.objective
    return solution


class PowerMinScheme(PrecodingScheme):
    """Power minimization with full Eve CSI."""

    tag = SchemeTag.P1

    def solve(
        self,
        channels: ChannelSet,
        frame: SymbolFrame,
        constellation: Constellation,
        budget: PowerBudget,
        noise: NoiseModel,
        rng: np.random.Generator | None = None,
    ) -> PrecodingSolution:
        """Solve with the configured per-user targets (the budget is not a constraint here)."""
        gammas = self.scheme_config.user_gammas_db
        if gammas is None:
            gammas = (self.scheme_config.user_gamma_db,) * channels.num_users
        return solve_power_min(
            channels, frame, constellation, noise, list(gammas),
            self.scheme_config, self.solver_config,
        )
