"""Monte Carlo experiments: power curves, SER curves, timing and constellation dumps."""

import asyncio
import logging
import math
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.stats import beta

from src.config import Config, SchemeConfig, SolverConfig
from src.eavesdroppers import SchemeReplayer, detect_common, detect_smart_ml
from src.errors import DegenerateChannelError, InfeasibleProblemError
from src.model import (
    ChannelSet,
    Constellation,
    NoiseModel,
    PowerBudget,
    SymbolFrame,
    db_to_linear,
    draw_channels,
    make_rng,
)
from src.schemes import audit_solution, create_scheme, solve_balance_full, solve_power_min, solve_users_only
from src.solution import SchemeTag

logger = logging.getLogger(__name__)

# Substream key for the single channel draw of fixed-geometry runs.
FIXED_CHANNEL_KEY = 2**31 - 1


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines an experiment's output."""

    kind: str
    scheme: SchemeTag
    num_antennas: int
    num_users: int
    order: int
    snr_grid: tuple[float, ...]
    gamma_grid: tuple[float, ...]
    gamma_e_grid: tuple[float, ...]
    trials: int
    seed: int
    noise: NoiseModel
    power: float = 10.0
    rho: float = 0.5
    eve: str = "common"
    channel_mode: str = "fresh"
    correlation: float | None = None
    jobs: int = 1
    zero_leakage: bool = True
    restrictions: tuple[str, ...] = ("complete", "ab-only")
    dump_constellation: int = 0
    scheme_config: SchemeConfig = field(default_factory=SchemeConfig)
    solver_config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.scheme is SchemeTag.P3 and self.correlation is None:
            raise ValueError("Statistical scheme p3 needs a correlation coefficient")

    @classmethod
    def from_config(cls, config: Config) -> "ExperimentSpec":
        """Create ExperimentSpec from a loaded Config."""
        return cls(
            kind=config.experiment,
            scheme=SchemeTag(config.scheme),
            num_antennas=config.n,
            num_users=config.k,
            order=config.m,
            snr_grid=tuple(config.snr_grid),
            gamma_grid=tuple(config.gamma_grid),
            gamma_e_grid=tuple(config.gamma_e_grid),
            trials=config.trials,
            seed=config.seed,
            noise=NoiseModel(sigma_users=config.sigma, sigma_eve=config.sigma_e),
            power=config.ps,
            rho=config.rho,
            eve=config.eve,
            channel_mode=config.channel_mode,
            correlation=config.correlation,
            jobs=config.jobs,
            zero_leakage=config.zero_leakage,
            restrictions=tuple(config.restrictions),
            dump_constellation=config.dump_constellation,
            scheme_config=config.scheme_config(),
            solver_config=config.solver_config(),
        )

    @property
    def constellation(self) -> Constellation:
        return Constellation(self.order)

    def budget(self, total: float) -> PowerBudget:
        return PowerBudget.from_ratio(total, self.rho)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["scheme"] = str(self.scheme)
        return data


@dataclass
class CurveResult:
    """One curve: an x column plus named value columns per point."""

    label: str
    x_name: str
    rows: list[dict] = field(default_factory=list)


@dataclass
class TimingReport:
    """Closed-form versus reference solve times for SINR balancing."""

    instances: int
    fast_times: list[float]
    reference_times: list[float]
    relative_gaps: list[float]
    fallbacks: int
    repeat_times: list[float] = field(default_factory=list)

    @property
    def fast_median(self) -> float:
        return float(np.median(self.fast_times))

    @property
    def reference_median(self) -> float:
        return float(np.median(self.reference_times))

    @property
    def repeat_spread(self) -> float:
        """(max - min)/median of the repeated single-instance fast solves."""
        if len(self.repeat_times) < 2:
            return 0.0
        return (max(self.repeat_times) - min(self.repeat_times)) / float(np.median(self.repeat_times))

    @property
    def speedup(self) -> float:
        return self.reference_median / self.fast_median if self.fast_median > 0 else math.inf

    def summary(self) -> dict:
        if not self.instances:
            return {"instances": 0, "fallbacks": self.fallbacks}
        return {
            "instances": self.instances,
            "fast_median_s": self.fast_median,
            "fast_p95_s": float(np.percentile(self.fast_times, 95)),
            "reference_median_s": self.reference_median,
            "reference_p95_s": float(np.percentile(self.reference_times, 95)),
            "speedup": self.speedup,
            "max_relative_gap": max(self.relative_gaps, default=0.0),
            "fallbacks": self.fallbacks,
            "repeat_spread": self.repeat_spread,
        }


@dataclass
class ExperimentResult:
    """Curves and side outputs of a run."""

    curves: list[CurveResult] = field(default_factory=list)
    timing: TimingReport | None = None
    constellation_rows: list[dict] = field(default_factory=list)
    audit_failures: int = 0
    infeasible: int = 0


def clopper_pearson(errors: int, total: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact binomial confidence interval."""
    if total <= 0:
        return 0.0, 1.0
    lower = 0.0 if errors == 0 else float(beta.ppf(alpha / 2.0, errors, total - errors + 1))
    upper = 1.0 if errors == total else float(beta.ppf(1.0 - alpha / 2.0, errors + 1, total - errors))
    return lower, upper


async def run_trials_async(fn: Callable[[int], object], count: int, jobs: int) -> list:
    """Run fn(0..count-1) in worker threads, at most ``jobs`` at a time, results in index order."""
    semaphore = asyncio.Semaphore(jobs)

    async def run_one(index: int):
        async with semaphore:
            return await asyncio.to_thread(fn, index)

    return await asyncio.gather(*(run_one(i) for i in range(count)))


def run_trials(fn: Callable[[int], object], count: int, jobs: int) -> list:
    """Run trials concurrently (sync wrapper)."""
    return asyncio.run(run_trials_async(fn, count, jobs))


def _channels_for(spec: ExperimentSpec, rng: np.random.Generator, fixed: ChannelSet | None) -> ChannelSet:
    if fixed is not None:
        return fixed
    return draw_channels(spec.num_antennas, spec.num_users, rng, spec.correlation)


def _fixed_channels(spec: ExperimentSpec) -> ChannelSet | None:
    if spec.channel_mode != "fixed":
        return None
    return draw_channels(spec.num_antennas, spec.num_users, make_rng(spec.seed, FIXED_CHANNEL_KEY), spec.correlation)


@dataclass
class SerTrial:
    """Counts from one channel-use."""

    feasible: bool
    user_errors: int = 0
    eve_error: int = 0
    power: float = 0.0
    audit_passed: bool = True


def ser_trial(spec: ExperimentSpec, point: int, snr_db: float, trial: int, fixed: ChannelSet | None = None) -> SerTrial:
    """Simulate one channel-use at transmit SNR ``snr_db``."""
    rng = make_rng(spec.seed, point, trial)
    constellation = spec.constellation
    channels = _channels_for(spec, rng, fixed)
    frame = SymbolFrame.draw(constellation, spec.num_users, rng)
    budget = spec.budget(db_to_linear(snr_db) * spec.noise.sigma_users**2)
    scheme = create_scheme(spec.scheme, spec.scheme_config, spec.solver_config)

    try:
        solution = scheme.solve(channels, frame, constellation, budget, spec.noise, rng)
    except (InfeasibleProblemError, DegenerateChannelError) as e:
        logger.debug(f"Trial {trial} at {snr_db} dB infeasible: {e}")
        return SerTrial(feasible=False)
    audit = audit_solution(solution, channels, frame, constellation, budget, spec.noise)

    x = solution.transmit_signal()
    y_users = channels.H @ x + spec.noise.sample(rng, spec.num_users, spec.noise.sigma_users)
    user_errors = sum(
        detect_common(complex(y), constellation).symbol_index != frame.symbol_indices[k]
        for k, y in enumerate(y_users)
    )
    y_e = complex(channels.g_e @ x + spec.noise.sample(rng, 1, spec.noise.sigma_eve)[0])
    target = frame.target_index
    if spec.eve == "smart":
        replayer = SchemeReplayer(scheme, channels, constellation, budget, spec.noise, frame)
        guess = detect_smart_ml(y_e, channels, replayer, constellation, spec.num_users).symbol_indices[target]
    else:
        guess = detect_common(y_e, constellation).symbol_index
    return SerTrial(
        feasible=True,
        user_errors=int(user_errors),
        eve_error=int(guess != frame.symbol_indices[target]),
        power=solution.transmit_power,
        audit_passed=audit.passed,
    )


def run_ser_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """SER at the users and at Eve versus transmit SNR."""
    fixed = _fixed_channels(spec)
    curve = CurveResult(label=f"{spec.scheme}-{spec.eve}", x_name="snr_db")
    result = ExperimentResult(curves=[curve])
    for point, snr_db in enumerate(spec.snr_grid):
        trials = run_trials(lambda i: ser_trial(spec, point, snr_db, i, fixed), spec.trials, spec.jobs)
        done = [t for t in trials if t.feasible]
        user_total = len(done) * spec.num_users
        user_errors = sum(t.user_errors for t in done)
        eve_errors = sum(t.eve_error for t in done)
        audit_failures = sum(not t.audit_passed for t in done)
        user_lo, user_hi = clopper_pearson(user_errors, user_total)
        eve_lo, eve_hi = clopper_pearson(eve_errors, len(done))
        curve.rows.append({
            "snr_db": snr_db,
            "user_ser": user_errors / user_total if user_total else math.nan,
            "user_ci_low": user_lo,
            "user_ci_high": user_hi,
            "eve_ser": eve_errors / len(done) if done else math.nan,
            "eve_ci_low": eve_lo,
            "eve_ci_high": eve_hi,
            "mean_power": float(np.mean([t.power for t in done])) if done else math.nan,
            "trials": len(trials),
            "infeasible": len(trials) - len(done),
            "audit_failures": audit_failures,
        })
        result.audit_failures += audit_failures
        result.infeasible += len(trials) - len(done)
        logger.info(
            f"SNR {snr_db:g} dB: user SER {curve.rows[-1]['user_ser']:.4g}, "
            f"Eve SER {curve.rows[-1]['eve_ser']:.4g} ({len(done)}/{len(trials)} feasible)"
        )
    return result


def power_variants(spec: ExperimentSpec) -> list[tuple[str, SchemeConfig]]:
    """Labelled scheme settings compared by the power experiment."""
    base = spec.scheme_config
    variants = []
    if "complete" in spec.restrictions:
        variants.append(("complete", replace(base, region_restriction="complete", gamma_e_fixed=None)))
        if spec.zero_leakage:
            variants.append(("zero-leakage", replace(base, region_restriction="complete", gamma_e_fixed=0.0)))
    if "ab-only" in spec.restrictions and spec.constellation.is_binary:
        logger.warning("Skipping ab-only curves: subregions A and B are empty for BPSK")
    elif "ab-only" in spec.restrictions:
        for gamma_e_db in spec.gamma_e_grid:
            variants.append((
                f"ab-only@{gamma_e_db:g}dB",
                replace(base, region_restriction="ab-only", gamma_e_fixed=db_to_linear(gamma_e_db)),
            ))
    return variants


def power_trial(spec: ExperimentSpec, point: int, gamma_db: float, trial: int, fixed=None) -> dict[str, float | None]:
    """Minimum power of every variant on one shared channel-use (None when infeasible)."""
    rng = make_rng(spec.seed, point, trial)
    constellation = spec.constellation
    channels = _channels_for(spec, rng, fixed)
    frame = SymbolFrame.draw(constellation, spec.num_users, rng)
    powers = {}
    for label, scheme_config in power_variants(spec):
        try:
            solution = solve_power_min(
                channels, frame, constellation, spec.noise, [gamma_db] * spec.num_users,
                scheme_config, spec.solver_config,
            )
            powers[label] = solution.transmit_power
        except (InfeasibleProblemError, DegenerateChannelError):
            powers[label] = None
    return powers


def run_power_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Average minimum transmit power versus the users' SNR target, plus pairwise gains."""
    fixed = _fixed_channels(spec)
    labels = [label for label, _ in power_variants(spec)]
    curves = {label: CurveResult(label=label, x_name="gamma_db") for label in labels}
    gain_labels = [label for label in labels if label.startswith("ab-only") and "complete" in curves]
    gains = {label: CurveResult(label=f"gain:{label}", x_name="gamma_db") for label in gain_labels}
    result = ExperimentResult()

    for point, gamma_db in enumerate(spec.gamma_grid):
        trials = run_trials(lambda i: power_trial(spec, point, gamma_db, i, fixed), spec.trials, spec.jobs)
        for label in labels:
            values = [t[label] for t in trials if t[label] is not None]
            mean = float(np.mean(values)) if values else math.nan
            curves[label].rows.append({
                "gamma_db": gamma_db,
                "mean_power": mean,
                "mean_power_db": 10.0 * math.log10(mean) if values and mean > 0 else math.nan,
                "feasible": len(values),
                "trials": len(trials),
            })
            result.infeasible += len(trials) - len(values)
        for label in gain_labels:
            paired = [(t[label], t["complete"]) for t in trials if t[label] is not None and t["complete"] is not None]
            ratio = sum(p for p, _ in paired) / sum(c for _, c in paired) if paired else math.nan
            gains[label].rows.append({
                "gamma_db": gamma_db,
                "gain_db": 10.0 * math.log10(ratio) if paired and ratio > 0 else math.nan,
                "paired": len(paired),
            })
        logger.info(f"Gamma {gamma_db:g} dB: " + ", ".join(f"{l}={curves[l].rows[-1]['mean_power']:.4g}" for l in labels))

    result.curves = list(curves.values()) + list(gains.values())
    return result


def _timed_balance(spec: ExperimentSpec, channels, frame, budget, solver_path: str):
    constellation = spec.constellation
    start = time.perf_counter()
    if spec.scheme in (SchemeTag.RJS, SchemeTag.RPS):
        solution = solve_users_only(channels, frame, constellation, budget.total, solver_path, spec.solver_config)
    else:
        scheme_config = replace(spec.scheme_config, solver_path=solver_path)
        solution = solve_balance_full(channels, frame, constellation, budget, spec.noise, scheme_config, spec.solver_config)
    return solution, time.perf_counter() - start


def run_timing_benchmark(spec: ExperimentSpec, repeats: int = 5) -> ExperimentResult:
    """Time the closed-form balancing path against the reference solver on shared instances.

    Times the full-CSI balancing problem, or the users-only problem for the
    random schemes. The first instance is also re-solved ``repeats`` times on
    the fast path as a stability check.
    """
    constellation = spec.constellation
    budget = PowerBudget(total=spec.power)
    fast_times, reference_times, gaps, repeat_times = [], [], [], []
    fallbacks = 0

    for trial in range(spec.trials):
        rng = make_rng(spec.seed, 0, trial)
        channels = draw_channels(spec.num_antennas, spec.num_users, rng, spec.correlation)
        frame = SymbolFrame.draw(constellation, spec.num_users, rng)
        try:
            fast, fast_time = _timed_balance(spec, channels, frame, budget, "auto")
            reference, reference_time = _timed_balance(spec, channels, frame, budget, "reference")
        except (InfeasibleProblemError, DegenerateChannelError) as e:
            logger.warning(f"Timing instance {trial} skipped: {e}")
            continue
        if not fast_times:
            repeat_times = [_timed_balance(spec, channels, frame, budget, "auto")[1] for _ in range(repeats)]
        fast_times.append(fast_time)
        reference_times.append(reference_time)
        fallbacks += fast.solver_path != "kkt-fast"
        gaps.append(abs(fast.thresholds.t - reference.thresholds.t) / max(reference.thresholds.t, 1e-12))

    report = TimingReport(
        instances=len(fast_times),
        fast_times=fast_times,
        reference_times=reference_times,
        relative_gaps=gaps,
        fallbacks=fallbacks,
        repeat_times=repeat_times,
    )
    if report.instances:
        logger.info(
            f"Timing over {report.instances} instances: fast {report.fast_median * 1e3:.3f} ms, "
            f"reference {report.reference_median * 1e3:.3f} ms, speedup {report.speedup:.1f}x"
        )
    return ExperimentResult(timing=report)


def dump_constellation(spec: ExperimentSpec, uses: int) -> ExperimentResult:
    """Received points at the first user and at Eve over ``uses`` channel-uses on one fixed geometry."""
    constellation = spec.constellation
    channels = draw_channels(spec.num_antennas, spec.num_users, make_rng(spec.seed, FIXED_CHANNEL_KEY), spec.correlation)
    budget = spec.budget(spec.power)
    scheme = create_scheme(spec.scheme, spec.scheme_config, spec.solver_config)
    result = ExperimentResult()
    for use in range(uses):
        rng = make_rng(spec.seed, 0, use)
        frame = SymbolFrame.draw(constellation, spec.num_users, rng)
        try:
            solution = scheme.solve(channels, frame, constellation, budget, spec.noise, rng)
        except (InfeasibleProblemError, DegenerateChannelError):
            result.infeasible += 1
            continue
        x = solution.transmit_signal()
        user = complex(channels.H[0] @ x)
        eve = complex(channels.g_e @ x)
        user_noisy = user + complex(spec.noise.sample(rng, 1, spec.noise.sigma_users)[0])
        eve_noisy = eve + complex(spec.noise.sample(rng, 1, spec.noise.sigma_eve)[0])
        result.constellation_rows.append({
            "use": use,
            "user_symbol": frame.symbol_indices[0],
            "target_symbol": frame.symbol_indices[frame.target_index],
            "user_re": user.real,
            "user_im": user.imag,
            "user_noisy_re": user_noisy.real,
            "user_noisy_im": user_noisy.imag,
            "eve_re": eve.real,
            "eve_im": eve.imag,
            "eve_noisy_re": eve_noisy.real,
            "eve_noisy_im": eve_noisy.imag,
        })
    return result


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Dispatch on the experiment kind."""
    logger.info(f"Running {spec.kind} experiment for scheme {spec.scheme} ({spec.trials} trials, {spec.jobs} jobs)")
    if spec.kind == "power":
        return run_power_experiment(spec)
    if spec.kind == "ser":
        return run_ser_experiment(spec)
    if spec.kind == "timing":
        return run_timing_benchmark(spec)
    if spec.kind == "constellation":
        return dump_constellation(spec, spec.dump_constellation or spec.trials)
    raise ValueError(f"Unknown experiment kind: {spec.kind}")
