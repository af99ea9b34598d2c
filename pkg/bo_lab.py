"""
Benjamin-Ono Lab Command Line
simulate / limits / probe / residual subcommands over run configuration files
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from complex_ext import uc_probe
from diagnostics import residual, vanishing_order_fit
from limits import deep_water_study, shallow_water_study
from models import BlowupError
from run_config import (
    ConfigError,
    build_grid,
    build_initial_field,
    build_integrator,
    build_spec,
    format_config,
    load_config,
    output_dir,
)
from snapshot_io import (
    SnapshotError,
    diagnostics_csv,
    diagnostics_json,
    load_snapshot_dir,
    save_trajectory_snapshots,
    write_report_json,
    write_text,
)
from timestep import Trajectory, run

load_dotenv()

logger = logging.getLogger("bo_lab")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_BLOWUP = 2


def simulate_command(args) -> int:
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    spec = build_spec(cfg)
    trajectory = run(build_initial_field(cfg, grid), spec, build_integrator(cfg))

    out = output_dir(cfg)
    write_text(os.path.join(out, "diagnostics.csv"), diagnostics_csv(trajectory))
    write_text(os.path.join(out, "diagnostics.json"), diagnostics_json(trajectory))
    write_text(os.path.join(out, "run.cfg"), format_config(cfg))
    save_trajectory_snapshots(os.path.join(out, "snapshots"), trajectory.states)

    if trajectory.blowup:
        logger.error(f"💥 blowup at t={trajectory.blowup_time!r}; partial output in {out}")
        return EXIT_BLOWUP
    print(f"✅ {spec.label()}: {len(trajectory)} snapshots written to {out}")
    return EXIT_OK


def limits_command(args) -> int:
    cfg = load_config(args.config)
    if not cfg.limits_deltas:
        raise ConfigError("missing required key for limit studies", key="limits.deltas")
    grid = build_grid(cfg)
    u0 = build_initial_field(cfg, grid)
    integrator = build_integrator(cfg)
    study = deep_water_study if args.kind == "deep" else shallow_water_study
    report = study(u0, cfg.limits_deltas, cfg.time_t_final, integrator)

    path = os.path.join(output_dir(cfg), "limit_report.json")
    write_report_json(path, report.to_dict())
    if report.reference_blowup or report.blowup_deltas:
        logger.error(f"💥 blowup during the {args.kind}-water study; see {path}")
        return EXIT_BLOWUP
    print(f"📊 {report.pair}: errors {report.errors} monotone={report.monotone}")
    return EXIT_OK


def probe_command(args) -> int:
    cfg = load_config(args.config)
    if not cfg.probe_interval and not cfg.probe_radii:
        raise ConfigError("probe needs probe.interval or probe.radii", key="probe.interval")
    f = build_initial_field(cfg)

    result = {"model": cfg.model, "ic": cfg.ic_kind}
    if cfg.probe_interval:
        report = uc_probe(f, tuple(cfg.probe_interval), cfg.probe_partner,
                          delta=cfg.delta, tol_zero=cfg.probe_tol_zero)
        result["uc_probe"] = report.to_dict()
        print(f"🔍 uc_probe {cfg.probe_partner} on {cfg.probe_interval}: {report.verdict}")
    if cfg.probe_radii:
        fit = vanishing_order_fit(f, cfg.probe_x0, cfg.probe_radii)
        result["vanishing_order"] = fit.to_dict()
        print(f"🔍 vanishing order about x0={cfg.probe_x0:g}: {fit.slope}")

    write_report_json(os.path.join(output_dir(cfg), "probe_report.json"), result)
    return EXIT_OK


def residual_command(args) -> int:
    directory = args.snapshot_dir
    config_path = args.config
    if config_path is None:
        for candidate in (os.path.join(directory, "run.cfg"),
                          os.path.join(os.path.dirname(os.path.abspath(directory)), "run.cfg")):
            if os.path.isfile(candidate):
                config_path = candidate
                break
    if config_path is None:
        raise ConfigError(f"no run.cfg next to {directory}; pass --config")

    spec = build_spec(load_config(config_path))
    trajectory = Trajectory(spec, states=load_snapshot_dir(directory))
    value = residual(trajectory)
    print(f"{value:.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bo_lab", description="Benjamin-Ono family simulation and unique-continuation lab")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Integrate one run and write diagnostics and snapshots")
    simulate.add_argument("config", help="Run configuration file")
    simulate.set_defaults(handler=simulate_command)

    limits = commands.add_parser("limits", help="Deep- or shallow-water limit study over limits.deltas")
    limits.add_argument("kind", choices=["deep", "shallow"])
    limits.add_argument("config", help="Run configuration file")
    limits.set_defaults(handler=limits_command)

    probe = commands.add_parser("probe", help="Unique-continuation probe and vanishing-order fit of the initial datum")
    probe.add_argument("config", help="Run configuration file")
    probe.set_defaults(handler=probe_command)

    res = commands.add_parser("residual", help="PDE residual of a snapshot directory")
    res.add_argument("snapshot_dir", help="Directory of .bofs snapshots")
    res.add_argument("--config", default=None, help="Run configuration (default: run.cfg beside the snapshots)")
    res.set_defaults(handler=residual_command)
    return parser


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; 0 success, 1 invalid input, 2 blowup"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    try:
        return args.handler(args)
    except (ConfigError, SnapshotError, FileNotFoundError, ValueError) as e:
        logger.error(f"❌ {e}")
        return EXIT_INVALID
    except BlowupError as e:
        logger.error(f"💥 {e}")
        return EXIT_BLOWUP


if __name__ == "__main__":
    logging.basicConfig(level=os.getenv("BOLAB_LOG_LEVEL", "INFO").upper())
    sys.exit(cli_main())
