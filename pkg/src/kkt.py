"""Closed-form dual path for SINR balancing.

The balancing problem is rewritten over the rotated observations
gamma = [Re lambda; Im lambda; Re phi; Im phi] (users first, Eve last). Its dual
is a small nonnegative quadratic program that is solved by a penalty iteration
with closed-form steps; the precoders are then recovered from the dual point.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lstsq, solve

from src.config import SolverConfig
from src.errors import DegenerateChannelError
from src.model import ChannelSet, Constellation, SymbolFrame
from src.regions import (
    Region,
    Thresholds,
    constructive_margin,
    eve_constraint_rows,
    minimal_eve_threshold,
)
from src.solution import PrecodingSolution, SchemeTag
from src.solver import real_block

logger = logging.getLogger(__name__)

PROJECTION_FLOOR = 1e-10


@dataclass(frozen=True)
class KktMatrices:
    """Matrices of one (channel, frame, subregion) instance.

    With ``region`` set to None the Eve rows are absent and only the users'
    constructive constraints remain (used for the random-jamming schemes).
    """

    F1: np.ndarray
    F1_inv: np.ndarray
    F: np.ndarray
    Q: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    U1: np.ndarray
    u2: np.ndarray | None
    A: np.ndarray
    C: np.ndarray | None
    a: float | None
    b: np.ndarray
    s: np.ndarray
    target_symbol: complex
    cot: float
    region: Region | None

    @property
    def num_users(self) -> int:
        return self.s.shape[0]

    @property
    def dual_size(self) -> int:
        return self.f2.shape[0]


def zero_forcing_inverse(H: np.ndarray) -> np.ndarray:
    """Right pseudo-inverse H^H (H H^H)^{-1}.

    Raises:
        DegenerateChannelError: If N < K or H does not have full row rank
    """
    K, N = H.shape
    if N < K:
        raise DegenerateChannelError(f"Zero-forcing needs N >= K, got N={N}, K={K}")
    if np.linalg.matrix_rank(H) < K:
        raise DegenerateChannelError("User channel matrix is rank deficient")
    return solve(H @ H.conj().T, H, assume_a="her").conj().T


def build_kkt_matrices(
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    region: Region | None = Region.A,
    config: SolverConfig | None = None,
) -> KktMatrices:
    """Assemble F1, F, Q, f1, f2, U1, u2 for a subregion (or users only when region is None).

    Raises:
        DegenerateChannelError: On rank-deficient H, a vanishing Eve projection,
            an ill-conditioned F1, or a half-plane constellation
    """
    config = config or SolverConfig()
    if constellation.is_binary:
        raise DegenerateChannelError("Closed-form path needs M >= 4 (half-plane regions)")
    H = channels.H
    K, N = H.shape
    if frame.num_users != K:
        raise ValueError(f"Frame has {frame.num_users} users, channel has {K}")
    pinv_right = zero_forcing_inverse(H)
    s = frame.s
    cot = constellation.cot
    identity = np.eye(K)
    T5 = np.block([[-identity, cot * identity], [-identity, -cot * identity]])

    if region is None:
        A = pinv_right
        C = None
        a = None
        gram = (A * s).conj().T @ (A * s)
        F1 = real_block(gram)
        F = T5.T
        f1 = np.zeros(2 * K)
        f2 = np.ones(2 * K)
        U1 = np.hstack([identity, 1j * identity])
        u2 = None
        b = s
    else:
        g = channels.g_e
        projector = np.eye(N) - pinv_right @ H
        a = float(np.real(g @ projector @ g.conj()))
        if a <= PROJECTION_FLOOR:
            raise DegenerateChannelError(f"Eve channel has no component outside the users' span (a={a:.3e})")
        C = projector @ g.conj() / a
        A = (np.eye(N) - np.outer(C, g)) @ pinv_right
        M = np.column_stack([A * s, C * frame.target_symbol])
        gram = M.conj().T @ M
        F1 = np.block([
            [real_block(gram[:K, :K]), real_block(gram[:K, K:])],
            [real_block(gram[K:, :K]), real_block(gram[K:, K:])],
        ])
        T6, coefficients = eve_constraint_rows(region, cot)
        rows = T6.shape[0]
        F2 = np.hstack([T5, np.zeros((2 * K, 2))])
        F3 = np.hstack([np.zeros((rows, 2 * K)), T6])
        F = np.vstack([F2, F3]).T
        f1 = np.concatenate([np.zeros(2 * K), -coefficients])
        f2 = np.concatenate([np.ones(2 * K), np.zeros(rows)])
        U1 = np.hstack([identity, 1j * identity, np.zeros((K, 2))])
        u2 = np.concatenate([np.zeros(2 * K), [1.0, 1j]])
        b = frame.b

    F1 = 0.5 * (F1 + F1.T)
    regularized = F1 + config.f1_regularization * np.eye(F1.shape[0])
    condition = np.linalg.cond(regularized)
    if not np.isfinite(condition) or condition > config.max_condition:
        raise DegenerateChannelError(f"F1 is ill-conditioned (cond={condition:.3e})")
    try:
        F1_inv = cho_solve(cho_factor(regularized), np.eye(F1.shape[0]))
    except LinAlgError as e:
        raise DegenerateChannelError(f"F1 is not positive definite: {e}") from e
    Q = F.T @ F1_inv @ F
    Q = 0.5 * (Q + Q.T)

    return KktMatrices(
        F1=F1, F1_inv=F1_inv, F=F, Q=Q, f1=f1, f2=f2, U1=U1, u2=u2,
        A=A, C=C, a=a, b=b, s=s, target_symbol=frame.target_symbol,
        cot=cot, region=region,
    )


@dataclass
class PenaltyState:
    """Dual iterate of the penalty method."""

    mu: np.ndarray
    xi1: float
    xi2: float
    mu0: float
    eta: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)


def penalty_objective(matrices: KktMatrices, mu: np.ndarray, xi1: float, xi2: float, eta: float) -> float:
    """mu^T Q mu + eta*[(f1^T mu + xi1)^2 + (f2^T mu - 1 - xi2)^2]."""
    first = matrices.f1 @ mu + xi1
    second = matrices.f2 @ mu - 1.0 - xi2
    return float(mu @ matrices.Q @ mu + eta * (first**2 + second**2))


def _slacks(matrices: KktMatrices, mu: np.ndarray) -> tuple[float, float]:
    return max(-float(matrices.f1 @ mu), 0.0), max(float(matrices.f2 @ mu) - 1.0, 0.0)


def _gradient(matrices: KktMatrices, mu: np.ndarray, xi1: float, xi2: float, eta: float) -> np.ndarray:
    f1, f2 = matrices.f1, matrices.f2
    return 2.0 * (matrices.Q @ mu + eta * f1 * (f1 @ mu + xi1) + eta * f2 * (f2 @ mu - 1.0 - xi2))


def _face_minimizer(
    matrices: KktMatrices,
    free: np.ndarray,
    xi1: float,
    xi2: float,
    eta: float,
    keep_first: bool,
    keep_second: bool,
) -> np.ndarray:
    """Closed-form minimizer of the penalty objective over the free coordinates.

    A dropped penalty term corresponds to a slack that stays strictly positive.
    """
    mu = np.zeros(matrices.dual_size)
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return mu
    system = matrices.Q[np.ix_(idx, idx)].copy()
    rhs = np.zeros(idx.size)
    if keep_first:
        f = matrices.f1[idx]
        system += eta * np.outer(f, f)
        rhs -= eta * xi1 * f
    if keep_second:
        f = matrices.f2[idx]
        system += eta * np.outer(f, f)
        rhs += eta * (1.0 + xi2) * f
    try:
        mu[idx] = solve(system, rhs, assume_a="pos")
    except LinAlgError:
        mu[idx] = lstsq(system, rhs)[0]
    return mu


def _sweep_target(matrices, free, xi1, xi2, eta) -> np.ndarray:
    target = _face_minimizer(matrices, free, xi1, xi2, eta, keep_first=xi1 == 0.0, keep_second=xi2 == 0.0)
    if xi1 == 0.0 and xi2 == 0.0:
        return target
    first_ok = xi1 == 0.0 or -(matrices.f1 @ target) >= 0.0
    second_ok = xi2 == 0.0 or matrices.f2 @ target - 1.0 >= 0.0
    if first_ok and second_ok:
        return target
    return _face_minimizer(matrices, free, xi1, xi2, eta, keep_first=True, keep_second=True)


def penalty_iterate(
    matrices: KktMatrices,
    config: SolverConfig | None = None,
    P_s: float = 1.0,
    initial: np.ndarray | None = None,
) -> PenaltyState:
    """Minimize the penalized dual over mu >= 0 and the slacks.

    Each sweep updates the slacks in closed form, then moves mu toward the
    closed-form minimizer on the current face of the nonnegative orthant. The
    recorded objective history is nonincreasing within one eta stage.

    Args:
        matrices: Output of build_kkt_matrices
        config: eta schedule, tolerance and iteration cap
        P_s: Power used to evaluate mu0 on exit
        initial: Optional starting point, projected onto mu >= 0
    """
    config = config or SolverConfig()
    n = matrices.dual_size
    mu = np.full(n, 1.0 / n) if initial is None else np.clip(np.asarray(initial, dtype=float), 0.0, None)
    free = mu > 0 if initial is not None else np.ones(n, dtype=bool)
    if not free.any():
        free[:] = True
    history: list[float] = []
    iterations = 0
    converged = False
    eta = config.eta_schedule[-1]

    for eta in config.eta_schedule:
        converged = False
        for _ in range(config.penalty_max_iter):
            iterations += 1
            xi1, xi2 = _slacks(matrices, mu)
            target = _sweep_target(matrices, free, xi1, xi2, eta)
            blocked = free & (target < 0.0)
            if blocked.any():
                ratios = np.full(n, np.inf)
                ratios[blocked] = mu[blocked] / (mu[blocked] - target[blocked])
                alpha = float(ratios.min())
                hit = blocked & (ratios <= alpha * (1.0 + 1e-12) + 1e-300)
                new = mu + alpha * (target - mu)
                new[hit] = 0.0
                free &= ~hit
            else:
                new = target
            new[~free] = 0.0
            change = float(np.max(np.abs(new - mu)))
            mu = new
            xi1, xi2 = _slacks(matrices, mu)
            history.append(penalty_objective(matrices, mu, xi1, xi2, eta))
            if blocked.any() or change > config.penalty_tolerance:
                continue
            grad = _gradient(matrices, mu, xi1, xi2, eta)
            threshold = -config.penalty_tolerance * max(1.0, float(np.max(np.abs(grad))))
            releasable = ~free & (grad < threshold)
            if releasable.any():
                free[int(np.argmin(np.where(releasable, grad, np.inf)))] = True
                continue
            converged = True
            break
        logger.debug(f"Penalty stage eta={eta:.0e}: {iterations} sweeps, converged={converged}")

    xi1, xi2 = _slacks(matrices, mu)
    mu0 = math.sqrt(max(float(mu @ matrices.Q @ mu), 0.0) / (4.0 * P_s))
    return PenaltyState(
        mu=mu, xi1=xi1, xi2=xi2, mu0=mu0, eta=eta,
        iterations=iterations, converged=converged, history=history,
    )


def dual_value(state: PenaltyState, matrices: KktMatrices, P_s: float) -> float:
    """Dual objective -sqrt(P_s mu^T Q mu)."""
    return -math.sqrt(P_s * max(float(state.mu @ matrices.Q @ state.mu), 0.0))


def recover_observations(state: PenaltyState, matrices: KktMatrices, P_s: float) -> tuple[np.ndarray, complex | None]:
    """Rotated user observations lambda and Eve observation phi from the dual point.

    Raises:
        ValueError: If mu0 = 0 (the power constraint carries no multiplier)
    """
    mu0 = math.sqrt(max(float(state.mu @ matrices.Q @ state.mu), 0.0) / (4.0 * P_s))
    if mu0 <= 0.0:
        raise ValueError("Power multiplier mu0 is zero; precoders cannot be recovered")
    gamma = -(matrices.F1_inv @ (matrices.F @ state.mu)) / (2.0 * mu0)
    lam = matrices.U1 @ gamma
    phi = complex(matrices.u2 @ gamma) if matrices.u2 is not None else None
    return lam, phi


def recover_precoders(
    state: PenaltyState,
    matrices: KktMatrices,
    P_s: float,
    constellation: Constellation,
    scheme: SchemeTag = SchemeTag.P2,
) -> PrecodingSolution:
    """Build W = x b^H / |b|^2 from the recovered observations.

    Raises:
        ValueError: If mu0 = 0
    """
    lam, phi = recover_observations(state, matrices, P_s)
    x = matrices.A @ (matrices.s * lam)
    if phi is not None:
        x = x + matrices.C * matrices.target_symbol * phi
    power = float(np.real(np.vdot(x, x)))
    if power > P_s:
        scale = math.sqrt(P_s / power)
        x, lam, power = x * scale, lam * scale, P_s
        phi = phi * scale if phi is not None else None
    b = matrices.b
    W = np.outer(x, b.conj()) / float(np.real(np.vdot(b, b)))

    t = max(min(constructive_margin(complex(v), constellation) for v in lam), 0.0)
    t_e = None
    if phi is not None:
        t_e = minimal_eve_threshold(phi, constellation, matrices.region)
        if not math.isfinite(t_e):
            t_e = max(phi.real, 0.0)
    if matrices.u2 is None:
        # Users-only form: the jamming column is left to the caller.
        W = np.column_stack([W, np.zeros(W.shape[0])])
        b = np.append(b, 1.0)
    return PrecodingSolution(
        W=W,
        b=b,
        thresholds=Thresholds(t=t, t_e=t_e),
        transmit_power=power,
        scheme=scheme,
        solver_path="kkt-fast",
        subregion=matrices.region,
        details={"penalty_iterations": state.iterations, "lambda": lam, "phi": phi},
    )
