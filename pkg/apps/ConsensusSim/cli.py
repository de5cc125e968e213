"""
consensus-sim command line.

Subcommands:
    analyze   check the standing assumptions of a scenario
    tune      resolve "auto" gains and certify the closed loop
    simulate  run the closed loop and write trajectory.csv, report.json, report.txt
    report    recompute the convergence report from a trajectory CSV

Exit codes: 0 success, 1 domain failure (assumption, certificate,
divergence, not settled), 2 usage or config error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from consensus_core import __version__
from consensus_core.design.tuning import GainSpec, certify_closed_loop
from consensus_core.dynamics.controller import Gains
from consensus_core.errors import (
    AssumptionError,
    ConfigError,
    ConsensusError,
    SimulationDivergedError,
    TuningError,
)
from consensus_core.io.config import ScenarioConfig, config_to_document, dump_config, load_config
from consensus_core.io.export import (
    export_report_json,
    export_text,
    export_trajectory_csv,
    import_trajectory_csv,
)
from consensus_core.io.presets import PRESETS, get_preset
from consensus_core.simulation.engine import simulate
from consensus_core.simulation.report import convergence_report
from consensus_core.validation.checks import ValidationResult, validate_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

DEFAULT_OUT = Path("results")
DEFAULT_TOL = 0.05
SIDECAR_CONFIG = "config.json"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consensus-sim",
        description="Robust distributed optimal output consensus: analysis, tuning and simulation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="errors only")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--tol", type=float, default=None, help="settling band around y*")

    scenario = argparse.ArgumentParser(add_help=False)
    source = scenario.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="scenario config (JSON)")
    source.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    scenario.add_argument("--seed", type=int, default=None, help="seed for random initial conditions")
    scenario.add_argument("--t-final", dest="t_final", type=float, default=None, help="simulation horizon")
    scenario.add_argument(
        "--dump-config",
        dest="dump_config",
        type=Path,
        default=None,
        help="write the expanded config to this path ('-' for stdout) and exit",
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common, scenario], help="check the standing assumptions")
    sub.add_parser("tune", parents=[common, scenario], help="resolve gains and certify")
    simulate_parser = sub.add_parser("simulate", parents=[common, scenario], help="run the closed loop")
    simulate_parser.add_argument("--plot", action="store_true", help="also write PNG figures")

    report_parser = sub.add_parser("report", parents=[common], help="report from a trajectory CSV")
    report_parser.add_argument("trajectory", type=Path, help="trajectory.csv written by simulate")
    report_parser.add_argument("--config", type=Path, default=None, help="scenario config (default: sidecar config.json)")
    report_parser.add_argument("--y-star", dest="y_star", type=float, default=None, help="optimum to compare against")
    return parser


def configure_logging(args: argparse.Namespace) -> None:
    level = logging.WARNING
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def load_scenario(args: argparse.Namespace) -> ScenarioConfig:
    """Config from --config or --preset with the command-line overrides applied."""
    if args.preset is not None:
        cfg = get_preset(args.preset)
    else:
        cfg, _ = load_config(args.config)
    return cfg.with_overrides(tol=args.tol, seed=args.seed, t_final=args.t_final)


def gains_as_spec(gains: Gains) -> GainSpec:
    """Freeze resolved gains into a manual gain policy."""
    return GainSpec(
        k=tuple(float(x) for x in gains.k),
        lambda0=gains.lambda0 if gains.lambda0 is not None else 1.0,
        alpha=gains.alpha,
        beta=gains.beta,
        tuning="manual",
        epsilon=gains.epsilon,
        gamma=gains.gamma,
    )


def _print_precheck_failure(result: ValidationResult) -> None:
    print("Scenario fails the standing assumptions:", file=sys.stderr)
    for message in result.errors:
        print(f"  {message}", file=sys.stderr)


def _resolve(cfg: ScenarioConfig) -> Gains:
    try:
        return cfg.resolved_gains()
    except TuningError as e:
        print(f"Tuning failed: {e}", file=sys.stderr)
        for gamma, margin in e.margins:
            print(f"  gamma = {gamma:g}: worst margin {margin:+.6e}", file=sys.stderr)
        raise


def cmd_analyze(cfg: ScenarioConfig, args: argparse.Namespace) -> int:
    result = validate_scenario(cfg)
    print(result.to_text())
    if args.out is not None:
        export_report_json({"scenario": cfg.name, "analysis": result.to_dict()}, args.out / "analysis.json")
        export_text(result.to_text(), args.out / "analysis.txt")
    return EXIT_OK if result.is_valid else EXIT_FAILURE


def cmd_tune(cfg: ScenarioConfig, args: argparse.Namespace) -> int:
    precheck = validate_scenario(cfg)
    if not precheck.is_valid:
        _print_precheck_failure(precheck)
        return EXIT_FAILURE

    gains = _resolve(cfg)
    cert = certify_closed_loop(cfg.plant, cfg.costs, cfg.graph, gains, controller=cfg.sim.controller)
    lines = ["Resolved Gains", "=" * 40, ""]
    lines += [f"{key:<12} {value}" for key, value in gains.to_dict().items()]
    text = "\n".join(lines) + "\n\n" + cert.to_text()
    print(text)

    if args.out is not None:
        export_report_json(
            {"scenario": cfg.name, "gains": gains.to_dict(), "certificate": cert.to_dict()},
            args.out / "tune.json",
        )
        export_text(text, args.out / "tune.txt")
        dump_config(cfg.with_gains(gains_as_spec(gains)), args.out / SIDECAR_CONFIG)
    return EXIT_OK if cert.passed else EXIT_FAILURE


def cmd_simulate(cfg: ScenarioConfig, args: argparse.Namespace) -> int:
    precheck = validate_scenario(cfg)
    if not precheck.is_valid:
        _print_precheck_failure(precheck)
        return EXIT_FAILURE

    gains = _resolve(cfg)
    y_star = cfg.y_star()
    out_dir = args.out if args.out is not None else DEFAULT_OUT

    payload: Dict = {"scenario": cfg.name, "gains": gains.to_dict()}
    try:
        traj = simulate(cfg.scenario(gains), cfg.sim)
        diverged = False
    except SimulationDivergedError as e:
        traj = e.trajectory
        diverged = True
        payload["divergence"] = {"time": e.time, "message": str(e)}
        print(f"Simulation diverged: {e}", file=sys.stderr)

    report = convergence_report(traj, y_star, cfg.sim.tol, diverged=diverged)
    payload["report"] = report.to_dict()

    export_trajectory_csv(traj, out_dir / "trajectory.csv")
    export_report_json(payload, out_dir / "report.json")
    export_text(report.to_text(), out_dir / "report.txt")
    dump_config(cfg.with_gains(gains_as_spec(gains)), out_dir / SIDECAR_CONFIG)
    if args.plot:
        from consensus_core.io.plots import export_run_figures

        export_run_figures(traj, out_dir, y_star)

    print(report.to_text())
    return EXIT_OK if report.settled else EXIT_FAILURE


def cmd_report(args: argparse.Namespace) -> int:
    cfg: Optional[ScenarioConfig] = None
    config_path = args.config or args.trajectory.parent / SIDECAR_CONFIG
    if args.config is not None or config_path.exists():
        cfg, _ = load_config(config_path)

    if args.y_star is not None:
        y_star = args.y_star
    elif cfg is not None:
        y_star = cfg.y_star()
    else:
        raise ConfigError(f"no sidecar config next to {args.trajectory}; pass --y-star")

    tol = args.tol if args.tol is not None else (cfg.sim.tol if cfg is not None else DEFAULT_TOL)
    schedule = cfg.sim.schedule_for(cfg.plant) if cfg is not None else None
    traj = import_trajectory_csv(args.trajectory)
    report = convergence_report(traj, y_star, tol, schedule)
    print(report.to_text())

    if args.out is not None:
        export_report_json({"source": str(args.trajectory), "report": report.to_dict()}, args.out / "report.json")
        export_text(report.to_text(), args.out / "report.txt")
    return EXIT_OK if report.settled else EXIT_FAILURE


COMMANDS: Dict[str, Callable[[ScenarioConfig, argparse.Namespace], int]] = {
    "analyze": cmd_analyze,
    "tune": cmd_tune,
    "simulate": cmd_simulate,
}


def _dump(cfg: ScenarioConfig, target: Path) -> None:
    if str(target) == "-":
        json.dump(config_to_document(cfg), sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        dump_config(cfg, target)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv`` and run one subcommand; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)

    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = load_scenario(args)
        if args.dump_config is not None:
            _dump(cfg, args.dump_config)
            return EXIT_OK
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TuningError, AssumptionError) as e:
        logger.error("%s", e)
        return EXIT_FAILURE
    except ConsensusError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE
