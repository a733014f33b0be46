"""Reference convex solver for QCQPs: phase-I search plus a primal log-barrier method."""

import logging
import time
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh, lstsq, null_space

from src.config import SolverConfig

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-9
# Below this Newton decrement the full step is taken whenever it stays feasible.
_QUADRATIC_REGION = 1e-3


class SolveStatus(StrEnum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"


def repair_psd(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Symmetrize and clamp tiny negative eigenvalues.

    Raises:
        ValueError: If an eigenvalue is below -PSD_TOLERANCE
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square, got shape {matrix.shape}")
    matrix = 0.5 * (matrix + matrix.T)
    if matrix.size == 0:
        return matrix
    eigenvalues, vectors = eigh(matrix)
    if eigenvalues[0] < -PSD_TOLERANCE:
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {eigenvalues[0]:.3e})")
    if eigenvalues[0] < 0:
        matrix = (vectors * np.clip(eigenvalues, 0.0, None)) @ vectors.T
        matrix = 0.5 * (matrix + matrix.T)
    return matrix


@dataclass
class QuadraticConstraint:
    """x^T Q x + c^T x <= d with Q positive semidefinite."""

    Q: np.ndarray
    c: np.ndarray
    d: float

    def __post_init__(self):
        self.Q = repair_psd(self.Q, "Quadratic constraint matrix")
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.d = float(self.d)
        if self.c.shape[0] != self.Q.shape[0]:
            raise ValueError("Quadratic constraint Q and c sizes differ")

    def value(self, x: np.ndarray) -> float:
        return float(x @ self.Q @ x + self.c @ x - self.d)


@dataclass
class ConvexProgram:
    """minimize x^T P x + q^T x + r subject to linear and convex quadratic constraints.

    Linear inequalities are stored as (a, b) meaning a^T x <= b, equalities as
    (a, b) meaning a^T x = b.
    """

    P: np.ndarray
    q: np.ndarray
    r: float = 0.0
    linear_ineq: list[tuple[np.ndarray, float]] = field(default_factory=list)
    linear_eq: list[tuple[np.ndarray, float]] = field(default_factory=list)
    quad_ineq: list[QuadraticConstraint] = field(default_factory=list)

    def __post_init__(self):
        self.P = repair_psd(self.P, "Objective matrix")
        self.q = np.asarray(self.q, dtype=float).reshape(-1)
        if self.q.shape[0] != self.P.shape[0]:
            raise ValueError(f"Objective sizes differ: P {self.P.shape}, q {self.q.shape}")

    @classmethod
    def empty(cls, n: int) -> "ConvexProgram":
        """A program over n variables with a zero objective."""
        return cls(P=np.zeros((n, n)), q=np.zeros(n))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def add_linear_ineq(self, a: np.ndarray, b: float) -> None:
        self.linear_ineq.append((self._row(a), float(b)))

    def add_linear_eq(self, a: np.ndarray, b: float) -> None:
        self.linear_eq.append((self._row(a), float(b)))

    def add_quad_ineq(self, Q: np.ndarray, c: np.ndarray, d: float) -> None:
        constraint = QuadraticConstraint(Q, c, d)
        if constraint.c.shape[0] != self.n:
            raise ValueError(f"Quadratic constraint has size {constraint.c.shape[0]}, expected {self.n}")
        self.quad_ineq.append(constraint)

    def _row(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.shape[0] != self.n:
            raise ValueError(f"Constraint row has size {a.shape[0]}, expected {self.n}")
        return a

    def objective(self, x: np.ndarray) -> float:
        return float(x @ self.P @ x + self.q @ x + self.r)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest constraint violation at x (0 when feasible)."""
        worst = 0.0
        for a, b in self.linear_ineq:
            worst = max(worst, float(a @ x - b))
        for a, b in self.linear_eq:
            worst = max(worst, abs(float(a @ x - b)))
        for constraint in self.quad_ineq:
            worst = max(worst, constraint.value(x))
        return worst


@dataclass
class SolveReport:
    """Outcome of a reference solve."""

    x: np.ndarray
    objective: float
    status: SolveStatus
    kkt_residual: float
    wall_time: float
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


class _BarrierProblem:
    """Inequality-only program in reduced coordinates."""

    def __init__(self, P, q, r, G, h, quads):
        self.P = P
        self.q = q
        self.r = r
        self.G = G
        self.h = h
        self.quads = quads

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return self.G.shape[0] + len(self.quads)

    def objective(self, y: np.ndarray) -> float:
        return float(y @ self.P @ y + self.q @ y + self.r)

    def values(self, y: np.ndarray) -> np.ndarray:
        linear = self.G @ y - self.h
        quadratic = [y @ Q @ y + c @ y - d for Q, c, d in self.quads]
        return np.concatenate([linear, quadratic])

    def barrier_value(self, y: np.ndarray, t: float, f: np.ndarray) -> float:
        return t * self.objective(y) - float(np.sum(np.log(-f)))

    def derivatives(self, y: np.ndarray, t: float, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradient and Hessian of t*f0 - sum(log(-f_i))."""
        grad = t * (2.0 * self.P @ y + self.q)
        hess = 2.0 * t * self.P
        num_linear = self.G.shape[0]
        if num_linear:
            inv = 1.0 / (-f[:num_linear])
            grad = grad + self.G.T @ inv
            hess = hess + (self.G.T * inv**2) @ self.G
        for (Q, c, _), value in zip(self.quads, f[num_linear:]):
            g = 2.0 * Q @ y + c
            w = 1.0 / (-value)
            grad = grad + w * g
            hess = hess + w * w * np.outer(g, g) + 2.0 * w * Q
        return grad, hess

    def certificate(self, y: np.ndarray, t: float, decrement: float) -> float:
        """Suboptimality bound (m + decrement/2)/t relative to the objective magnitude."""
        return (self.m + 0.5 * max(decrement, 0.0)) / (t * max(1.0, abs(self.objective(y))))


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    try:
        return -cho_solve(cho_factor(hess), grad)
    except LinAlgError:
        pass
    ridge = 1e-12 * max(1.0, float(np.trace(hess)) / max(hess.shape[0], 1))
    try:
        return -cho_solve(cho_factor(hess + ridge * np.eye(hess.shape[0])), grad)
    except LinAlgError:
        return -lstsq(hess, grad)[0]


def _center(problem: _BarrierProblem, y: np.ndarray, t: float, config: SolverConfig) -> tuple[np.ndarray, int, float]:
    """Newton centering with backtracking.

    Returns:
        (y, steps, decrement) with the last squared Newton decrement computed
    """
    steps = 0
    previous = np.inf
    decrement = np.inf
    for steps in range(1, config.max_newton + 1):
        f = problem.values(y)
        grad, hess = problem.derivatives(y, t, f)
        dy = _newton_direction(hess, grad)
        decrement = float(-grad @ dy)
        if decrement / 2.0 <= config.newton_tolerance:
            break
        # Stagnation at rounding level.
        if decrement < _QUADRATIC_REGION and decrement > 0.5 * previous:
            break
        previous = decrement
        alpha = 1.0
        current = problem.barrier_value(y, t, f)
        accepted = False
        while alpha > 1e-14:
            candidate = y + alpha * dy
            fc = problem.values(candidate)
            if np.all(fc < 0):
                if decrement < _QUADRATIC_REGION:
                    accepted = True
                    break
                if problem.barrier_value(candidate, t, fc) <= current - 0.01 * alpha * decrement:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
        y = candidate
    return y, steps, decrement


@dataclass
class _BarrierRun:
    y: np.ndarray
    t: float
    steps: int
    decrement: float
    stopped: bool
    converged: bool


def _barrier(problem: _BarrierProblem, y: np.ndarray, config: SolverConfig, stop=None) -> _BarrierRun:
    """Run the barrier method from a strictly feasible y.

    The outer loop ends once m/t is below gap_tolerance relative to the
    objective magnitude.

    Returns:
        _BarrierRun; ``stopped`` is True when ``stop(y)`` fired and ``converged``
        is False only when the outer cap was hit
    """
    t = 1.0
    total_steps = 0
    decrement = np.inf
    for _ in range(config.max_outer):
        y, steps, decrement = _center(problem, y, t, config)
        total_steps += steps
        if stop is not None and stop(y):
            return _BarrierRun(y, t, total_steps, decrement, stopped=True, converged=False)
        if problem.m / t <= config.gap_tolerance * max(1.0, abs(problem.objective(y))):
            return _BarrierRun(y, t, total_steps, decrement, stopped=False, converged=True)
        t *= config.barrier_growth
    return _BarrierRun(y, t, total_steps, decrement, stopped=False, converged=False)


def _phase_one(problem: _BarrierProblem, config: SolverConfig) -> tuple[np.ndarray, bool, int]:
    """Find a strictly feasible point by minimizing s subject to f_i(y) <= s."""
    n = problem.n
    G = np.hstack([problem.G, -np.ones((problem.G.shape[0], 1))])
    G = np.vstack([G, np.append(np.zeros(n), -1.0)])
    h = np.append(problem.h, 1.0)
    quads = []
    for Q, c, d in problem.quads:
        quads.append((_pad(Q), np.append(c, -1.0), d))
    ball = np.zeros((n + 1, n + 1))
    ball[:n, :n] = np.eye(n)
    quads.append((ball, np.zeros(n + 1), config.phase1_radius**2))
    q = np.zeros(n + 1)
    q[-1] = 1.0
    phase = _BarrierProblem(np.zeros((n + 1, n + 1)), q, 0.0, G, h, quads)

    start = np.zeros(n + 1)
    start[-1] = max(float(np.max(problem.values(start[:n]), initial=0.0)), 0.0) + 1.0

    def feasible(v):
        return v[-1] < 0 and bool(np.all(problem.values(v[:n]) < 0))

    run = _barrier(phase, start, config, stop=feasible)
    v = run.y
    logger.debug(f"Phase I finished with s = {v[-1]:.3e} after {run.steps} Newton steps")
    return v[:n], run.stopped or feasible(v), run.steps


def _pad(Q: np.ndarray) -> np.ndarray:
    n = Q.shape[0]
    padded = np.zeros((n + 1, n + 1))
    padded[:n, :n] = Q
    return padded


def _reduce(program: ConvexProgram) -> tuple[_BarrierProblem, np.ndarray, np.ndarray]:
    """Eliminate equalities with x = x0 + Z y."""
    n = program.n
    if program.linear_eq:
        A = np.array([a for a, _ in program.linear_eq])
        b = np.array([b for _, b in program.linear_eq])
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise ValueError("Equality constraints are not full row rank")
        x0 = lstsq(A, b)[0]
        Z = null_space(A)
    else:
        x0 = np.zeros(n)
        Z = np.eye(n)

    P = Z.T @ program.P @ Z
    q = Z.T @ (2.0 * program.P @ x0 + program.q)
    r = program.objective(x0)
    if program.linear_ineq:
        G0 = np.array([a for a, _ in program.linear_ineq])
        h0 = np.array([b for _, b in program.linear_ineq])
    else:
        G0 = np.zeros((0, n))
        h0 = np.zeros(0)
    G = G0 @ Z
    h = h0 - G0 @ x0
    quads = []
    for constraint in program.quad_ineq:
        Q = constraint.Q
        quads.append((Z.T @ Q @ Z, Z.T @ (2.0 * Q @ x0 + constraint.c), -constraint.value(x0)))
    return _BarrierProblem(P, q, r, G, h, quads), x0, Z


def solve_reference(program: ConvexProgram, config: SolverConfig | None = None) -> SolveReport:
    """Solve a convex QCQP to high accuracy.

    Args:
        program: The program to solve
        config: Solver tolerances; defaults to SolverConfig()

    Returns:
        SolveReport with status optimal, infeasible or max_iter

    Raises:
        ValueError: If the equality constraints are not full row rank
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    problem, x0, Z = _reduce(program)

    def report(y, status, residual, iterations):
        x = x0 + Z @ y
        return SolveReport(
            x=x,
            objective=program.objective(x),
            status=status,
            kkt_residual=residual,
            wall_time=time.perf_counter() - start,
            iterations=iterations,
        )

    if problem.n == 0:
        status = SolveStatus.OPTIMAL if program.max_violation(x0) <= config.feasibility_tolerance else SolveStatus.INFEASIBLE
        return report(np.zeros(0), status, 0.0 if status is SolveStatus.OPTIMAL else np.inf, 0)

    if problem.m == 0:
        y = lstsq(2.0 * problem.P, -problem.q)[0]
        scale = max(1.0, float(np.max(np.abs(problem.q))), float(np.max(np.abs(2.0 * problem.P @ y))))
        residual = float(np.max(np.abs(2.0 * problem.P @ y + problem.q))) / scale
        status = SolveStatus.OPTIMAL if residual <= config.kkt_tolerance else SolveStatus.MAX_ITER
        return report(y, status, residual, 1)

    y = np.zeros(problem.n)
    phase_steps = 0
    if not np.all(problem.values(y) < 0):
        y, feasible, phase_steps = _phase_one(problem, config)
        if not feasible:
            logger.debug("Phase I found no strictly feasible point")
            return report(y, SolveStatus.INFEASIBLE, np.inf, phase_steps)

    run = _barrier(problem, y, config)
    residual = problem.certificate(run.y, run.t, run.decrement)
    status = SolveStatus.OPTIMAL if run.converged and residual <= config.kkt_tolerance else SolveStatus.MAX_ITER
    if status is not SolveStatus.OPTIMAL:
        logger.debug(f"Barrier stopped with residual {residual:.3e} after {run.steps} Newton steps (t = {run.t:.3e})")
    return report(run.y, status, residual, phase_steps + run.steps)


def real_block(T: np.ndarray) -> np.ndarray:
    """Real representation [[Re T, -Im T], [Im T, Re T]] of a complex matrix."""
    T = np.atleast_2d(np.asarray(T, dtype=complex))
    return np.block([[T.real, -T.imag], [T.imag, T.real]])


def realify(z: np.ndarray) -> np.ndarray:
    """Stack [Re z; Im z]."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    return np.concatenate([z.real, z.imag])


def complexify(v: np.ndarray) -> np.ndarray:
    """Inverse of realify."""
    v = np.asarray(v, dtype=float).reshape(-1)
    half = v.shape[0] // 2
    return v[:half] + 1j * v[half:]


def real_linear_forms(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows (u, v) with Re(c^T z) = u . realify(z) and Im(c^T z) = v . realify(z)."""
    c = np.asarray(c, dtype=complex).reshape(-1)
    return np.concatenate([c.real, -c.imag]), np.concatenate([c.imag, c.real])
