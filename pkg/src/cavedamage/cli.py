"""Command-line driver.

::

    cavedamage run CONFIG [--model M] [--w1 W] [--kappa K] [--out DIR]
    cavedamage step CONFIG --t I [...]
    cavedamage check CONFIG [...]

``run`` evolves steps ``0..T`` and writes ``step_NNN.vtk``,
``checkpoint_NNN.npz`` and ``trace.csv`` to the output directory. ``step``
computes step ``I`` from the checkpoint of step ``I - 1`` (step 0 starts
from the intact body). ``check`` validates the configuration and prints mesh
statistics without solving. Flags override the configuration file. The log
level is read from ``CAVEDAMAGE_LOG_LEVEL`` (default ``INFO``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from . import kernels
from .config import Config, ConfigError, load_config
from .evolution import EvolutionError, StepRecord, energy_report, initial_state, alternate_minimization, \
    run_evolution, step_from
from .mesh import carve_cavity
from .output import TraceWriter, checkpoint_path, load_checkpoint, trace_row, write_state
from .solvers import LinearSolveError

log = logging.getLogger("cavedamage")

MODELS = ("isotropic", "shear", "shear-compression")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavedamage", description="Gradient damage around a growing cavity.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{run,step,check}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="flat 'key = value' configuration file")
    common.add_argument("--model", choices=MODELS)
    common.add_argument("--w1", type=float, help="dissipation at full damage [J/m^3]")
    common.add_argument("--kappa", type=float, help="shear-compression weight")
    common.add_argument("--out", help="output directory")
    sub.add_parser("run", parents=[common], help="full evolution t = 0..T")
    step = sub.add_parser("step", parents=[common], help="one step from the previous checkpoint")
    step.add_argument("--t", type=int, required=True, dest="t", help="step index to compute")
    sub.add_parser("check", parents=[common], help="validate the configuration and print mesh statistics")
    return parser


def configure_logging():
    level = os.environ.get("CAVEDAMAGE_LOG_LEVEL", "INFO").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "INFO"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def resolve_config(args) -> Config:
    config = load_config(args.config)
    changes = {}
    for key in ("model", "w1", "kappa", "out"):
        value = getattr(args, key)
        if value is None:
            continue
        current = getattr(config, key)
        if key in config.lines and value != current:
            log.info("--%s=%s overrides %s = %s from %s", key, value, key, current, args.config)
        changes[key] = value
    if not changes:
        return config
    try:
        return config.replace(**changes)
    except ConfigError as exc:
        raise ConfigError(exc.key, f"{exc.reason} (from command line)") from None


def _summary(rec: StepRecord) -> str:
    row = trace_row(rec)
    return (f"t={row[0]:d} sweeps={row[1]:d} total={row[6]:.6e} J max_alpha={row[7]:.4f} "
            f"damaged_fraction={row[8]:.4f}")


def cmd_check(config: Config) -> int:
    mesh = config.build_mesh()
    carved = carve_cavity(mesh, config.T, config.cavity())
    x0, x1, y0, y1 = config.domain
    print(f"model: {config.model}")
    print(f"domain: ({x0:g}, {x1:g}) x ({y0:g}, {y1:g}) m, h = {mesh.h:g} m")
    print(f"nodes: {mesh.n_nodes}")
    print(f"elements: {mesh.n_elems}")
    print(f"active elements at t={config.T}: {int(carved.active.sum())}")
    print(f"kernels: {kernels.BACKEND}")
    return 0


def cmd_run(config: Config) -> int:
    os.makedirs(config.out, exist_ok=True)
    trace = TraceWriter(os.path.join(config.out, "trace.csv"))
    start = time.perf_counter()

    def emit(rec):
        write_state(rec.state, config.out)
        trace.append(rec)
        print(_summary(rec), flush=True)

    run_evolution(config, emit)
    log.info("finished %d steps in %.1f s; output in %s", config.T + 1, time.perf_counter() - start, config.out)
    return 0


def cmd_step(config: Config, t: int) -> int:
    if t < 0 or t > config.T:
        raise ConfigError("t", f"step {t} outside 0..{config.T}")
    model, mat = config.damage_model(), config.material()
    if t == 0:
        mesh = carve_cavity(config.build_mesh(), 0, config.cavity())
        state = initial_state(mesh, model, mat, config.boundary_conditions(), config.solver_settings())
        result = alternate_minimization(state, model, mat, config.boundary_conditions(), config.solver_settings())
    else:
        path = checkpoint_path(config.out, t - 1)
        if not os.path.exists(path):
            raise FileNotFoundError(f"checkpoint {path} not found; compute step {t - 1} first")
        state = load_checkpoint(path, config.build_mesh())
        if state.t != t - 1:
            raise ValueError(f"{path} holds step {state.t}, expected {t - 1}")
        result = step_from(state, config)
    if not result.converged and not config.best_effort:
        raise EvolutionError(f"step t={t} did not converge after {result.iterations} sweeps")
    os.makedirs(config.out, exist_ok=True)
    rec = StepRecord(result.state, energy_report(result.state, model, mat), result)
    write_state(rec.state, config.out)
    print(_summary(rec))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors already printed the synopsis
        return int(exc.code or 0)
    configure_logging()
    try:
        config = resolve_config(args)
        for message in config.warnings():
            log.warning("%s", message)
        if args.command == "check":
            return cmd_check(config)
        if args.command == "run":
            return cmd_run(config)
        return cmd_step(config, args.t)
    except ConfigError as exc:
        print(f"cavedamage: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, EvolutionError, LinearSolveError) as exc:
        print(f"cavedamage: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
