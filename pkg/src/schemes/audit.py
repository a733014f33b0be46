"""Post-hoc audit of precoding solutions.

The audit re-evaluates every constraint from the raw precoders and channels and
shares no code with the lowering or the closed-form path.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame
from src.regions import in_constructive_region, in_destructive_subregion, rotate
from src.schemes.sca import eve_sinr
from src.solution import PrecodingSolution, SchemeTag

logger = logging.getLogger(__name__)


@dataclass
class AuditReport:
    """Outcome of an audit."""

    passed: bool = True
    failures: list[str] = field(default_factory=list)

    def fail(self, message: str) -> None:
        self.passed = False
        self.failures.append(message)


def audit_solution(
    solution: PrecodingSolution,
    channels: ChannelSet,
    frame: SymbolFrame,
    constellation: Constellation,
    budget: PowerBudget | None = None,
    noise: NoiseModel | None = None,
    tol: float = 1e-6,
) -> AuditReport:
    """Check power, thresholds and region membership of a solution.

    Args:
        solution: Solution to check
        channels: Channels it was designed for
        frame: Symbols it was designed for
        constellation: Constellation in use
        budget: Power budget (skipped for power minimization)
        noise: Noise levels (needed for the statistical Eve check)
        tol: Absolute tolerance, scaled by the magnitude of the checked quantity
    """
    report = AuditReport()
    W = solution.W
    K = frame.num_users
    if W.shape != (channels.num_antennas, K + 1):
        report.fail(f"precoder shape {W.shape} does not match N={channels.num_antennas}, K={K}")
        return report

    x = W @ solution.b
    info = W[:, :K] @ solution.b[:K]
    random_scheme = solution.scheme in (SchemeTag.RJS, SchemeTag.RPS)
    power = float(np.real(np.vdot(info, info))) + solution.jamming_power if random_scheme else float(np.real(np.vdot(x, x)))
    if not math.isclose(power, solution.transmit_power, rel_tol=1e-6, abs_tol=tol):
        report.fail(f"reported power {solution.transmit_power:.6g} differs from recomputed {power:.6g}")
    if budget is not None and solution.scheme is not SchemeTag.P1:
        if power > budget.total * (1.0 + tol) + tol:
            report.fail(f"power {power:.6g} exceeds budget {budget.total:.6g}")

    thresholds = solution.thresholds
    targets = thresholds.t_k if thresholds.t_k is not None else (thresholds.t,) * K
    for k in range(K):
        value = rotate(complex(channels.H[k] @ x), frame.symbols[k])
        if targets[k] is None:
            continue
        slack = tol * max(1.0, abs(value))
        if not in_constructive_region(value, targets[k], constellation, slack):
            report.fail(f"user {k} observation {value:.6g} outside constructive region for t={targets[k]:.6g}")

    if solution.subregion is not None and thresholds.t_e is not None:
        phi = rotate(complex(channels.g_e @ x), frame.target_symbol)
        slack = tol * max(1.0, abs(phi))
        if not in_destructive_subregion(phi, thresholds.t_e, constellation, solution.subregion, slack):
            report.fail(f"Eve observation {phi:.6g} outside subregion {solution.subregion} for t_e={thresholds.t_e:.6g}")

    if solution.scheme is SchemeTag.P3 and channels.R_e is not None and noise is not None:
        gamma = eve_sinr(W, channels.R_e, frame.target_index, noise.sigma_eve)
        if thresholds.t_e is not None and gamma > thresholds.t_e * (1.0 + tol) + tol:
            report.fail(f"average Eve SINR {gamma:.6g} exceeds t_e={thresholds.t_e:.6g}")

    if solution.scheme is SchemeTag.P4 and budget is not None:
        jamming = float(np.real(np.vdot(W[:, K], W[:, K])))
        if jamming < budget.floor - tol * max(1.0, budget.floor):
            report.fail(f"jamming power {jamming:.6g} below floor {budget.floor:.6g}")

    if random_scheme:
        leakage = channels.H @ W[:, K]
        if solution.scheme is SchemeTag.RPS:
            scale = math.sqrt(solution.jamming_power) / solution.details.get("p_hat_norm", 1.0)
            leakage = leakage - scale * frame.s
        if np.max(np.abs(leakage), initial=0.0) > 1e-8 * max(1.0, math.sqrt(solution.jamming_power)):
            report.fail(f"artificial noise leaks into the users' subspace ({np.max(np.abs(leakage)):.3e})")

    if not report.passed:
        logger.warning(f"Audit failed for {solution.scheme}: {'; '.join(report.failures)}")
    return report
