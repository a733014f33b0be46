"""SINR balancing with only Eve's channel correlation known."""

import logging

import numpy as np

from src.config import SchemeConfig, SolverConfig
from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame
from src.regions import Thresholds, constructive_margin
from src.schemes.base import PrecodingScheme
from src.schemes.lowering import column_selector, lower_precoder_space
from src.schemes.sca import eve_sinr, run_sca, zero_forcing_precoder
from src.solution import PrecodingSolution, SchemeTag
from src.solver import real_block, real_linear_forms

logger = logging.getLogger(__name__)

# Lower bound on t_z = 1/t_e when no Eve cap is configured.
T_Z_FLOOR = 1e-6


def _surrogate_builder(channels, frame, constellation, power, sigma_e, t_z_floor):
    N = channels.num_antennas
    columns = frame.num_users + 1
    target = frame.target_index
    R = channels.R_e
    selectors = [column_selector(j, N, columns) for j in range(columns)]
    target_energy = real_block(selectors[target].T @ R @ selectors[target])

    def build(W_t: np.ndarray, tz_t: float):
        program, layout, _ = lower_precoder_space(channels, frame, constellation.cot, power, extra=("t_z",))
        linear = np.zeros(layout.size)
        tz_coefficient = sigma_e**2 / tz_t**2
        for j in range(columns):
            if j == target:
                continue
            anchor = W_t[:, j]
            re, _ = real_linear_forms(selectors[j].T @ np.conj(R @ anchor))
            linear -= (2.0 / tz_t) * layout.embed("w", re)
            tz_coefficient += float(np.real(np.vdot(anchor, R @ anchor))) / tz_t**2
        linear += tz_coefficient * layout.unit("t_z")
        program.add_quad_ineq(layout.embed_matrix("w", target_energy), linear, 2.0 * sigma_e**2 / tz_t)
        program.add_linear_ineq(-layout.unit("t_z"), -t_z_floor)
        return program, layout

    return build


def solve_balance_statistical(
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    budget: PowerBudget,
    noise: NoiseModel,
    scheme_config: SchemeConfig | None = None,
    solver_config: SolverConfig | None = None,
) -> PrecodingSolution:
    """Maximize t subject to an average Eve SINR bound Gamma_e <= t_e = 1/t_z.

    The nonconvex SINR bound is replaced by its first-order inner approximation
    around the previous iterate.

    Raises:
        ValueError: If the channel set carries no correlation matrix
        InfeasibleProblemError: If the initial surrogate stays infeasible
    """
    scheme_config = scheme_config or SchemeConfig()
    if channels.R_e is None:
        raise ValueError("Statistical scheme needs Eve's correlation matrix R_e")
    sigma_e = noise.sigma_eve
    cap = scheme_config.gamma_e_cap
    t_z_floor = 1.0 / cap if cap else T_Z_FLOOR
    target = frame.target_index

    def initial_tz(W: np.ndarray) -> float:
        gamma = eve_sinr(W, channels.R_e, target, sigma_e)
        return max(1.0 / gamma if gamma > 0 else 1.0 / T_Z_FLOOR, t_z_floor)

    build = _surrogate_builder(channels, frame, constellation, budget.total, sigma_e, t_z_floor)
    initial = zero_forcing_precoder(channels, frame, budget.total)
    result = run_sca(build, initial, initial_tz, scheme_config, solver_config, label="Statistical SCA")

    W = result.W
    x = W @ frame.b
    lam = (channels.H @ x) * frame.s.conj()
    t = max(min(constructive_margin(complex(v), constellation) for v in lam), 0.0)
    gamma_e = eve_sinr(W, channels.R_e, target, sigma_e)
    logger.debug(f"Statistical scheme: t={t:.6g}, t_e={1.0 / result.t_z:.6g}, average Eve SINR {gamma_e:.6g}")
    return PrecodingSolution(
        W=W,
        b=frame.b,
        thresholds=Thresholds(t=t, t_e=1.0 / result.t_z),
        transmit_power=float(np.real(np.vdot(x, x))),
        scheme=SchemeTag.P3,
        solver_path="sca",
        gamma_e=gamma_e,
        details={"sca_history": result.history, "sca_converged": result.converged, "sca_restarts": result.restarts},
    )


class StatisticalScheme(PrecodingScheme):
    """SINR balancing with statistical Eve CSI."""

    tag = SchemeTag.P3

    def solve(
        self,
        channels: ChannelSet,
        frame: SymbolFrame,
        constellation: Constellation,
        budget: PowerBudget,
        noise: NoiseModel,
        rng: np.random.Generator | None = None,
    ) -> PrecodingSolution:
        return solve_balance_statistical(
            channels, frame, constellation, budget, noise, self.scheme_config, self.solver_config,
        )
