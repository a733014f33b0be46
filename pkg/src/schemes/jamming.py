"""Users-only balancing plus random artificial noise (jamming or phase scrambling)."""

import logging
import math

import numpy as np
from scipy.linalg import svd

from src.config import SchemeConfig, SolverConfig
from src.errors import DegenerateChannelError, NullSpaceError
from src.kkt import build_kkt_matrices, penalty_iterate, recover_precoders, zero_forcing_inverse
from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame, make_rng
from src.regions import Thresholds, constructive_margin
from src.schemes.base import PrecodingScheme
from src.schemes.lowering import lower_balancing
from src.solution import PrecodingSolution, SchemeTag
from src.solver import solve_reference

logger = logging.getLogger(__name__)


def nullspace_basis(H: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis V1 of the null space of H and r0 = H^+ s.

    Raises:
        NullSpaceError: If N - K < 1
        DegenerateChannelError: If H is rank deficient
    """
    K, N = H.shape
    if N - K < 1:
        raise NullSpaceError(f"null space empty, requires N-K>=1 (N={N}, K={K})")
    _, singular, Vh = svd(H)
    if singular[-1] <= 1e-10 * singular[0]:
        raise DegenerateChannelError("User channel matrix is rank deficient")
    V1 = Vh[K:].conj().T
    r0 = zero_forcing_inverse(H) @ s
    return V1, r0


def _users_only_solution(x, channels, frame, constellation, solver_path) -> PrecodingSolution:
    s = frame.s
    K = frame.num_users
    W = np.column_stack([np.outer(x, s.conj()) / K, np.zeros(channels.num_antennas)])
    lam = (channels.H @ x) * s.conj()
    t = max(min(constructive_margin(complex(v), constellation) for v in lam), 0.0)
    return PrecodingSolution(
        W=W,
        b=np.append(s, 1.0),
        thresholds=Thresholds(t=t),
        transmit_power=float(np.real(np.vdot(x, x))),
        scheme=SchemeTag.RJS,
        solver_path=solver_path,
    )


def solve_users_only(
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    power: float,
    solver_path: str = "auto",
    solver_config: SolverConfig | None = None,
) -> PrecodingSolution:
    """Balance the users' constructive thresholds under |sum w_i s_i|^2 <= power.

    The returned precoder has an all-zero jamming column.
    """
    if solver_path == "auto":
        try:
            matrices = build_kkt_matrices(channels, frame, constellation, None, solver_config)
            state = penalty_iterate(matrices, solver_config, P_s=power)
            if state.converged:
                return recover_precoders(state, matrices, power, constellation, SchemeTag.RJS)
            logger.warning("Users-only penalty iteration did not converge; using reference solver")
        except ValueError as e:
            logger.warning(f"Closed-form users-only path unavailable: {e}")

    program, layout = lower_balancing(channels, frame, constellation.cot, None, power)
    report = solve_reference(program, solver_config)
    if not report.is_optimal:
        raise RuntimeError(f"Users-only balancing failed with status {report.status}")
    x = layout.complex_block(report.x, "x")
    return _users_only_solution(x, channels, frame, constellation, "reference")


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    if norm <= 0:
        raise DegenerateChannelError("Artificial-noise direction vanished")
    return vector / norm


def build_rjs(
    information: PrecodingSolution,
    channels: ChannelSet,
    frame: SymbolFrame,
    jamming_power: float,
    rng: np.random.Generator | int,
) -> PrecodingSolution:
    """Add a random unit jamming vector from the null space of H, scaled by sqrt(P_n)."""
    if jamming_power < 0:
        raise ValueError(f"Jamming power must be nonnegative, got {jamming_power}")
    rng = make_rng(rng)
    V1, _ = nullspace_basis(channels.H, frame.s)
    p = _unit(V1 @ rng.standard_normal(V1.shape[1]))
    K = frame.num_users
    W = information.W.copy()
    W[:, K] = math.sqrt(jamming_power) * p
    return PrecodingSolution(
        W=W,
        b=frame.b,
        thresholds=information.thresholds,
        transmit_power=information.transmit_power + jamming_power,
        scheme=SchemeTag.RJS,
        solver_path=information.solver_path,
        jamming_power=jamming_power,
    )


def build_rps(
    information: PrecodingSolution,
    channels: ChannelSet,
    frame: SymbolFrame,
    jamming_power: float,
    rng: np.random.Generator | int,
) -> PrecodingSolution:
    """Add sqrt(P_n) * p_hat/|p_hat| with p_hat = V1 k + H^+ s, so H p_hat = s.

    The users see their own symbol scaled by sqrt(P_n)/|p_hat| on top of the
    information part; Eve sees a random phase.
    """
    if jamming_power < 0:
        raise ValueError(f"Jamming power must be nonnegative, got {jamming_power}")
    rng = make_rng(rng)
    V1, r0 = nullspace_basis(channels.H, frame.s)
    p_hat = V1 @ rng.standard_normal(V1.shape[1]) + r0
    norm = float(np.linalg.norm(p_hat))
    K = frame.num_users
    W = information.W.copy()
    W[:, K] = math.sqrt(jamming_power) * p_hat / norm
    return PrecodingSolution(
        W=W,
        b=np.append(frame.s, 1.0),
        thresholds=information.thresholds,
        transmit_power=information.transmit_power + jamming_power,
        scheme=SchemeTag.RPS,
        solver_path=information.solver_path,
        jamming_power=jamming_power,
        details={"p_hat_norm": norm},
    )


class _RandomScheme(PrecodingScheme):
    """Users-only balancing with P_s - P_n, then a random column from ``builder``."""

    def information(self, channels, frame, constellation, budget) -> PrecodingSolution:
        return solve_users_only(
            channels, frame, constellation, budget.information,
            self.scheme_config.solver_path, self.solver_config,
        )

    def solve(
        self,
        channels: ChannelSet,
        frame: SymbolFrame,
        constellation: Constellation,
        budget: PowerBudget,
        noise: NoiseModel,
        rng: np.random.Generator | None = None,
    ) -> PrecodingSolution:
        if rng is None:
            raise ValueError(f"{self.tag} needs a random generator")
        # Fail before solving when there is no null space.
        nullspace_basis(channels.H, frame.s)
        information = self.information(channels, frame, constellation, budget)
        return self.builder(information, channels, frame, budget.jamming, rng)

    def known_signal(self, channels, frame, constellation, budget, noise) -> np.ndarray:
        """Only the deterministic information part can be reproduced."""
        return self.information(channels, frame, constellation, budget).information_signal()


class RandomJammingScheme(_RandomScheme):
    tag = SchemeTag.RJS
    builder = staticmethod(build_rjs)


class RandomPhaseScheme(_RandomScheme):
    tag = SchemeTag.RPS
    builder = staticmethod(build_rps)
