"""Configuration loading and validation."""

import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs for the barrier solver and the penalty iteration."""

    gap_tolerance: float = 1e-8
    kkt_tolerance: float = 1e-6
    feasibility_tolerance: float = 1e-7
    max_outer: int = 200
    max_newton: int = 80
    newton_tolerance: float = 1e-14
    barrier_growth: float = 20.0
    phase1_radius: float = 1e6
    eta_schedule: tuple[float, ...] = (1e6,)
    penalty_tolerance: float = 1e-8
    penalty_max_iter: int = 10_000
    f1_regularization: float = 1e-10
    max_condition: float = 1e12


@dataclass(frozen=True)
class SchemeConfig:
    """Per-scheme settings.

    Eve thresholds are linear SINR values: ``gamma_e_fixed=0`` pins t_e to zero.
    """

    user_gamma_db: float = 10.0
    user_gammas_db: tuple[float, ...] | None = None
    gamma_e_fixed: float | None = None
    gamma_e_cap: float | None = None
    region_restriction: str = "complete"
    subregion_policy: str = "all"
    solver_path: str = "auto"
    sca_tolerance: float = 1e-4
    sca_max_outer: int = 50
    sca_restarts: int = 3

    def __post_init__(self):
        if self.region_restriction not in ("complete", "ab-only"):
            raise ValueError(f"Unknown region restriction: {self.region_restriction}")
        if self.subregion_policy not in ("all", "A", "B", "CD"):
            raise ValueError(f"Unknown subregion policy: {self.subregion_policy}")
        if self.solver_path not in ("auto", "reference"):
            raise ValueError(f"Unknown solver path: {self.solver_path}")
        for name in ("gamma_e_fixed", "gamma_e_cap"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")


@dataclass
class Config:
    """Experiment configuration."""

    experiment: str = "ser"
    scheme: str = "p2"
    n: int = 6
    k: int = 2
    m: int = 4
    snr_grid: list[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    gamma_grid: list[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0])
    gamma_e_grid: list[float] = field(default_factory=lambda: [-5.0, 0.0, 5.0, 10.0])
    zero_leakage: bool = True
    restrictions: list[str] = field(default_factory=lambda: ["complete", "ab-only"])
    trials: int = 1000
    seed: int = 0
    sigma: float = 1.0
    sigma_e: float = 1.0
    ps: float = 10.0
    rho: float = 0.5
    eve: str = "common"
    channel_mode: str = "fresh"
    correlation: float | None = None
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    region_restriction: str = "complete"
    subregion_policy: str = "all"
    gamma_e_fixed: float | None = None
    gamma_e_cap: float | None = None
    sca_tolerance: float = 1e-4
    sca_max_outer: int = 50
    eta: float = 1e6
    eta_continuation: bool = False
    epsilon_convergence: float = 1e-8
    dump_constellation: int = 0

    def __post_init__(self):
        if self.experiment not in ("power", "ser", "timing", "constellation"):
            raise ValueError(f"Unknown experiment kind: {self.experiment}")
        if self.eve not in ("common", "smart"):
            raise ValueError(f"Unknown eavesdropper model: {self.eve}")
        if self.channel_mode not in ("fresh", "fixed"):
            raise ValueError(f"Unknown channel mode: {self.channel_mode}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")
        if self.trials < 1 or self.jobs < 1:
            raise ValueError("trials and jobs must be positive")

    def scheme_config(self) -> SchemeConfig:
        """Build the per-scheme settings implied by this experiment."""
        return SchemeConfig(
            gamma_e_fixed=self.gamma_e_fixed,
            gamma_e_cap=self.gamma_e_cap,
            region_restriction=self.region_restriction,
            subregion_policy=self.subregion_policy,
            sca_tolerance=self.sca_tolerance,
            sca_max_outer=self.sca_max_outer,
        )

    def solver_config(self) -> SolverConfig:
        """Build solver settings, with the optional eta continuation schedule."""
        if self.eta_continuation:
            schedule = tuple(e for e in (1e2, 1e4) if e < self.eta) + (self.eta,)
        else:
            schedule = (self.eta,)
        return SolverConfig(eta_schedule=schedule, penalty_tolerance=self.epsilon_convergence)


def _parse_optional_float(raw: str) -> float | None:
    return None if raw.lower() in ("none", "") else float(raw)


def _parse_float_list(raw: str) -> list[float]:
    return [float(item) for item in raw.split(",") if item.strip()]


def _parse_str_list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"Not a boolean: {raw}")


_PARSERS = {
    "experiment": str,
    "scheme": str.lower,
    "n": int,
    "k": int,
    "m": int,
    "snr_grid": _parse_float_list,
    "gamma_grid": _parse_float_list,
    "gamma_e_grid": _parse_float_list,
    "zero_leakage": _parse_bool,
    "restrictions": _parse_str_list,
    "trials": int,
    "seed": int,
    "sigma": float,
    "sigma_e": float,
    "ps": float,
    "rho": float,
    "eve": str,
    "channel_mode": str,
    "correlation": _parse_optional_float,
    "jobs": int,
    "region_restriction": str,
    "subregion_policy": str,
    "gamma_e_fixed": _parse_optional_float,
    "gamma_e_cap": _parse_optional_float,
    "sca_tolerance": float,
    "sca_max_outer": int,
    "eta": float,
    "eta_continuation": _parse_bool,
    "epsilon_convergence": float,
    "dump_constellation": int,
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into typed values.

    Raises:
        ValueError: On unknown keys, malformed lines or unparsable values
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"Line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ValueError(f"Unknown config key: {key} (line {lineno})")
        try:
            value = _PARSERS[key](raw)
        except ValueError as e:
            raise ValueError(f"Line {lineno}: bad value for {key}: {e}") from e
        if isinstance(value, float) and math.isnan(value):
            raise ValueError(f"Line {lineno}: {key} is NaN")
        values[key] = value
    return values


def load_config(config_path: Path) -> Config:
    """Load configuration from a key=value file."""
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")
    return Config(**parse_config_text(config_path.read_text()))


def apply_overrides(config: Config, overrides: dict) -> Config:
    """Return a copy of ``config`` with non-None overrides applied."""
    known = {f.name for f in fields(Config)}
    changes = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in known:
            raise ValueError(f"Unknown config key: {key}")
        changes[key] = value
    return replace(config, **changes)
