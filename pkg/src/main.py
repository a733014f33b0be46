"""Secure symbol-level precoding simulator - Main entry point."""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from src.config import Config, SchemeConfig, apply_overrides, load_config
from src.errors import InfeasibleProblemError
from src.manifest import RunManifest
from src.model import Constellation, NoiseModel, PowerBudget, SymbolFrame, draw_channels, make_rng
from src.montecarlo import ExperimentSpec, run_experiment
from src.report import ReportWriter
from src.schemes import audit_solution, create_scheme

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

SCHEMES = ["p1", "p2", "p3", "p4", "rjs", "rps"]


def solve_inputs(args: argparse.Namespace) -> dict:
    """Resolved inputs of the solve command."""
    return {
        "scheme": args.scheme,
        "n": args.n,
        "k": args.k,
        "m": args.m,
        "ps": args.ps,
        "rho": args.rho,
        "seed": args.seed,
        "gamma": args.gamma,
        "gamma_e_fixed": args.gamma_e_fixed,
        "gamma_e_cap": args.gamma_e_cap,
        "correlation": args.correlation,
        "region_restriction": args.region_restriction,
        "solver": args.solver,
        "sigma": args.sigma,
        "sigma_e": args.sigma_e,
        "target": args.target,
    }


def solve_once(args: argparse.Namespace) -> tuple[ReportWriter, int]:
    """Draw one seeded channel-use, solve it and write the solution files.

    Returns:
        Tuple of (writer holding the written paths, exit status)
    """
    constellation = Constellation(args.m)
    rng = make_rng(args.seed, 0, 0)
    channels = draw_channels(args.n, args.k, rng, args.correlation)
    frame = SymbolFrame.draw(constellation, args.k, rng, target_index=args.target)
    noise = NoiseModel(sigma_users=args.sigma, sigma_eve=args.sigma_e)
    budget = PowerBudget.from_ratio(args.ps, args.rho)
    scheme_config = SchemeConfig(
        user_gamma_db=args.gamma,
        gamma_e_fixed=args.gamma_e_fixed,
        gamma_e_cap=args.gamma_e_cap,
        region_restriction=args.region_restriction,
        solver_path=args.solver,
    )
    scheme = create_scheme(args.scheme, scheme_config)

    logger.info(f"Solving {args.scheme} for N={args.n}, K={args.k}, {args.m}-PSK, seed {args.seed}")
    solution = scheme.solve(channels, frame, constellation, budget, noise, rng)
    audit = audit_solution(solution, channels, frame, constellation, budget, noise)

    writer = ReportWriter(Path(args.out))
    metadata = {"command": "solve", "inputs": solve_inputs(args), "symbol_indices": list(frame.symbol_indices)}
    writer.write_solution(solution, audit, metadata)
    logger.info(
        f"Solved via {solution.solver_path}: power {solution.transmit_power:.6g}, "
        f"t {solution.thresholds.t}, subregion {solution.subregion}"
    )
    for failure in audit.failures:
        logger.warning(f"Audit failure: {failure}")
    return writer, 0 if audit.passed else 1


def run_experiment_command(config: Config, out_dir: Path) -> tuple[ReportWriter, int]:
    """Run the configured experiment and write its CSV and JSON artifacts."""
    spec = ExperimentSpec.from_config(config)
    result = run_experiment(spec)

    writer = ReportWriter(out_dir)
    metadata = {"command": "experiment", "spec": spec.to_dict(), "seed": config.seed}
    paths = writer.write_result(result, prefix=f"{config.experiment}_{config.scheme}", metadata=metadata)
    for path in paths:
        logger.info(f"Wrote {path}")

    if result.audit_failures:
        logger.warning(f"{result.audit_failures} solutions failed the audit")
    if result.infeasible:
        logger.warning(f"{result.infeasible} trials were infeasible and excluded")
    return writer, 0 if result.audit_failures == 0 else 1


def resolve_experiment_config(args: argparse.Namespace) -> Config:
    """Load the config file (or a previous manifest) and apply flag overrides."""
    if args.from_manifest:
        manifest_path = Path(args.from_manifest)
        if not manifest_path.exists():
            raise FileNotFoundError(f"Manifest not found: {manifest_path}")
        config = Config(**json.loads(manifest_path.read_text())["config"])
    else:
        config = load_config(Path(args.config))
    overrides = {
        "scheme": args.scheme,
        "experiment": args.experiment,
        "trials": args.trials,
        "seed": args.seed,
        "jobs": args.jobs,
        "eve": args.eve,
        "rho": args.rho,
        "correlation": args.correlation,
        "channel_mode": args.channel_mode,
        "dump_constellation": args.dump_constellation,
    }
    if args.dump_constellation:
        overrides["experiment"] = "constellation"
    return apply_overrides(config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Secure symbol-level precoding simulator")
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve = subparsers.add_parser("solve", help="Solve one seeded channel-use and write the precoders")
    solve.add_argument("--scheme", choices=SCHEMES, default="p2", help="Precoding scheme")
    solve.add_argument("--n", type=int, default=6, help="Transmit antennas")
    solve.add_argument("--k", type=int, default=2, help="Users")
    solve.add_argument("--m", type=int, default=4, help="PSK order")
    solve.add_argument("--ps", type=float, default=10.0, help="Total transmit power budget")
    solve.add_argument("--rho", type=float, default=0.5, help="Jamming power ratio (rjs, rps, p4)")
    solve.add_argument("--seed", type=int, default=0, help="Random seed")
    solve.add_argument("--gamma", type=float, default=10.0, help="Per-user SNR target in dB (p1)")
    solve.add_argument("--gamma-e-fixed", type=float, default=None, help="Fixed linear Eve SINR (0 = zero leakage)")
    solve.add_argument("--gamma-e-cap", type=float, default=None, help="Linear Eve SINR cap (p3)")
    solve.add_argument("--correlation", type=float, default=None, help="Eve correlation coefficient (required for p3)")
    solve.add_argument("--region-restriction", choices=["complete", "ab-only"], default="complete")
    solve.add_argument("--solver", choices=["auto", "reference"], default="auto", help="Solver path")
    solve.add_argument("--sigma", type=float, default=1.0, help="User noise standard deviation")
    solve.add_argument("--sigma-e", type=float, default=1.0, help="Eve noise standard deviation")
    solve.add_argument("--target", type=int, default=0, help="0-based index of the symbol Eve targets")
    solve.add_argument("--out", type=str, default="out", help="Output directory")

    experiment = subparsers.add_parser("experiment", help="Run a Monte Carlo experiment from a config file")
    source = experiment.add_mutually_exclusive_group()
    source.add_argument("--config", type=str, default="experiment.conf", help="Path to config file")
    source.add_argument("--from-manifest", type=str, default=None, help="Re-run the inputs recorded in a manifest")
    experiment.add_argument("--experiment", choices=["power", "ser", "timing", "constellation"], default=None)
    experiment.add_argument("--scheme", choices=SCHEMES, default=None)
    experiment.add_argument("--trials", type=int, default=None)
    experiment.add_argument("--seed", type=int, default=None)
    experiment.add_argument("--jobs", type=int, default=None, help="Concurrent trials")
    experiment.add_argument("--eve", choices=["common", "smart"], default=None)
    experiment.add_argument("--rho", type=float, default=None)
    experiment.add_argument("--correlation", type=float, default=None)
    experiment.add_argument("--channel-mode", choices=["fresh", "fixed"], default=None)
    experiment.add_argument("--dump-constellation", type=int, default=None, help="Dump received points over this many uses")
    experiment.add_argument("--out", type=str, default="out", help="Output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run the simulator CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "solve" and args.scheme == "p3" and args.correlation is None:
        parser.error("--scheme p3 requires --correlation")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(out_dir / "manifest.json")
    writer = None
    status = 1

    try:
        if args.command == "solve":
            manifest.start("solve", solve_inputs(args))
            writer, status = solve_once(args)
        else:
            manifest.start("experiment", {"config": args.config, "from_manifest": args.from_manifest})
            config = resolve_experiment_config(args)
            if config.scheme == "p3" and config.correlation is None:
                status = 2
                parser.error("scheme p3 requires a correlation coefficient")
            manifest.start("experiment", asdict(config))
            writer, status = run_experiment_command(config, out_dir)
        logger.info(f"Done! Exit status {status}")
        return status
    except (FileNotFoundError, ValueError) as e:
        logger.error(str(e))
        return 1
    except InfeasibleProblemError as e:
        logger.error(f"Infeasible: {e}")
        return 1
    except Exception as e:
        logger.exception(f"Run failed: {e}")
        return 1
    finally:
        if manifest.started:
            manifest.finish(writer.written if writer is not None else [], status)
            manifest.save()


if __name__ == "__main__":
    sys.exit(main())
