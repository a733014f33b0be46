"""SINR balancing without Eve CSI: a guaranteed jamming-power floor."""

import numpy as np

from src.config import SchemeConfig, SolverConfig
from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame
from src.regions import Thresholds, constructive_margin
from src.schemes.base import PrecodingScheme
from src.schemes.lowering import column_selector, lower_precoder_space
from src.schemes.sca import run_sca, zero_forcing_precoder
from src.solution import PrecodingSolution, SchemeTag
from src.solver import real_linear_forms


def _floor_builder(channels, frame, constellation, power, floor):
    N = channels.num_antennas
    columns = frame.num_users + 1
    jamming = column_selector(columns - 1, N, columns)

    def build(W_t: np.ndarray, _tz: float | None):
        program, layout, _ = lower_precoder_space(channels, frame, constellation.cot, power)
        if floor > 0:
            anchor = W_t[:, -1]
            re, _ = real_linear_forms(jamming.T @ anchor.conj())
            program.add_linear_ineq(
                layout.embed("w", -2.0 * re),
                -floor - float(np.real(np.vdot(anchor, anchor))),
            )
        return program, layout

    return build


def solve_balance_nocsi(
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    budget: PowerBudget,
    scheme_config: SchemeConfig | None = None,
    solver_config: SolverConfig | None = None,
) -> PrecodingSolution:
    """Maximize t subject to |p|^2 >= P_0 (the budget's jamming floor).

    The concave side of the floor is linearized around the previous jamming
    vector, which keeps every accepted iterate feasible for the true floor.

    Raises:
        InfeasibleProblemError: If the initial surrogate stays infeasible
    """
    scheme_config = scheme_config or SchemeConfig()
    floor = budget.floor
    build = _floor_builder(channels, frame, constellation, budget.total, floor)
    share = min(0.8, 1.0 - floor / budget.total)
    initial = zero_forcing_precoder(channels, frame, budget.total, information_share=share)
    result = run_sca(build, initial, None, scheme_config, solver_config, label="No-CSI SCA")

    W = result.W
    x = W @ frame.b
    lam = (channels.H @ x) * frame.s.conj()
    t = max(min(constructive_margin(complex(v), constellation) for v in lam), 0.0)
    return PrecodingSolution(
        W=W,
        b=frame.b,
        thresholds=Thresholds(t=t),
        transmit_power=float(np.real(np.vdot(x, x))),
        scheme=SchemeTag.P4,
        solver_path="sca",
        jamming_power=float(np.real(np.vdot(W[:, -1], W[:, -1]))),
        details={"sca_history": result.history, "sca_converged": result.converged, "jamming_floor": floor},
    )


class NoCsiScheme(PrecodingScheme):
    """SINR balancing with no Eve CSI."""

    tag = SchemeTag.P4

    def solve(
        self,
        channels: ChannelSet,
        frame: SymbolFrame,
        constellation: Constellation,
        budget: PowerBudget,
        noise: NoiseModel,
        rng: np.random.Generator | None = None,
    ) -> PrecodingSolution:
        return solve_balance_nocsi(channels, frame, constellation, budget, self.scheme_config, self.solver_config)
