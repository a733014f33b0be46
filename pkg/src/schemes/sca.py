"""Successive convex approximation shared by the statistical-CSI and no-CSI schemes."""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from src.config import SchemeConfig, SolverConfig
from src.errors import InfeasibleProblemError
from src.kkt import zero_forcing_inverse
from src.model import ChannelSet, SymbolFrame
from src.schemes.lowering import Layout, vec_to_precoder
from src.solver import ConvexProgram, solve_reference

logger = logging.getLogger(__name__)


def taylor_quad_over_linear(x: np.ndarray, y: float, x_t: np.ndarray, y_t: float, R: np.ndarray) -> float:
    """First-order expansion of x^H R x / y around (x_t, y_t)."""
    return float(2.0 * np.real(np.vdot(x_t, R @ x)) / y_t - np.real(np.vdot(x_t, R @ x_t)) * y / y_t**2)


def taylor_inverse(y: float, y_t: float) -> float:
    """First-order expansion of 1/y around y_t."""
    return 2.0 / y_t - y / y_t**2


def taylor_power(p: np.ndarray, p_t: np.ndarray) -> float:
    """First-order expansion of |p|^2 around p_t."""
    return float(2.0 * np.real(np.vdot(p_t, p)) - np.real(np.vdot(p_t, p_t)))


def eve_sinr(W: np.ndarray, R: np.ndarray, target: int, sigma_e: float) -> float:
    """Average Eve SINR w_m^H R w_m / (sum_{j != m} w_j^H R w_j + sigma_e^2)."""
    energies = np.real(np.einsum("ij,ik,kj->j", W.conj(), R, W))
    interference = float(np.sum(energies) - energies[target])
    return float(energies[target]) / (interference + sigma_e**2)


def zero_forcing_precoder(
    channels: ChannelSet,
    frame: SymbolFrame,
    power: float,
    information_share: float = 0.8,
) -> np.ndarray:
    """Zero-forcing precoders on the users plus a null-space jamming column.

    The information columns get ``information_share`` of the power (both as
    transmit power and as Frobenius energy), the jamming column the rest.
    """
    H = channels.H
    inverse = zero_forcing_inverse(H)
    x_info = inverse @ frame.s
    reference = max(float(np.real(np.vdot(x_info, x_info))), float(np.sum(np.abs(inverse) ** 2)))
    W_info = inverse * math.sqrt(information_share * power / reference)
    basis = null_space(H)
    direction = basis[:, 0] if basis.shape[1] else inverse.sum(axis=1)
    p = direction / np.linalg.norm(direction) * math.sqrt((1.0 - information_share) * power)
    return np.column_stack([W_info, p])


@dataclass
class ScaResult:
    """Accepted SCA iterate and its trace."""

    W: np.ndarray
    t: float
    t_z: float | None
    history: list[float] = field(default_factory=list)
    converged: bool = False
    restarts: int = 0


Builder = Callable[[np.ndarray, float | None], tuple[ConvexProgram, Layout]]


def _solve_subproblem(build: Builder, W_t, tz_t, solver_config, num_antennas):
    program, layout = build(W_t, tz_t)
    report = solve_reference(program, solver_config)
    if not report.is_optimal:
        return None
    W = vec_to_precoder(layout.complex_block(report.x, "w"), num_antennas)
    t_z = layout.value(report.x, "t_z") if "t_z" in layout else None
    return W, layout.value(report.x, "t"), t_z


def run_sca(
    build: Builder,
    initial_W: np.ndarray,
    initial_tz: Callable[[np.ndarray], float] | None,
    scheme_config: SchemeConfig,
    solver_config: SolverConfig | None = None,
    label: str = "SCA",
) -> ScaResult:
    """Iterate convex surrogates until the balanced threshold stops improving.

    An iterate is accepted only when t does not decrease, so the recorded
    history is nondecreasing. A failing first subproblem is retried from a
    halved initial point.

    Raises:
        InfeasibleProblemError: If the first subproblem fails after all restarts
    """
    num_antennas = initial_W.shape[0]
    restarts = 0
    while True:
        W_t = initial_W * 0.5**restarts
        tz_t = initial_tz(W_t) if initial_tz is not None else None
        outcome = _solve_subproblem(build, W_t, tz_t, solver_config, num_antennas)
        if outcome is not None:
            break
        restarts += 1
        if restarts > scheme_config.sca_restarts:
            raise InfeasibleProblemError(f"{label}: surrogate problem infeasible after {scheme_config.sca_restarts} restarts")
        logger.warning(f"{label}: surrogate infeasible at the initial point, restarting ({restarts})")

    W, t, t_z = outcome
    result = ScaResult(W=W, t=t, t_z=t_z, history=[t], restarts=restarts)
    for iteration in range(1, scheme_config.sca_max_outer):
        outcome = _solve_subproblem(build, result.W, result.t_z, solver_config, num_antennas)
        if outcome is None:
            logger.warning(f"{label}: surrogate failed at iteration {iteration}; keeping previous iterate")
            break
        W, t, t_z = outcome
        if t < result.t:
            break
        improvement = t - result.t
        result.W, result.t, result.t_z = W, t, t_z
        result.history.append(t)
        if improvement <= scheme_config.sca_tolerance * max(1.0, abs(t)):
            result.converged = True
            break
    logger.debug(f"{label}: {len(result.history)} iterates, t={result.t:.6g}, converged={result.converged}")
    return result
