"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 numerical failure. Diagnostics go to
stderr; data goes to files under ``--out`` (or stdout with ``--stdout``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .case import load_case
from .derivatives import derivative_series
from .errors import InputError, LayoutMismatch, NumericalError, NonConvergence
from .linalg import LUFactor
from .norms import norm_report
from .powerflow import (
    InjectionTarget,
    Network,
    SolverOptions,
    assemble_jacobian,
    flat_start,
    solve_powerflow,
)
from .trajectory import (
    InjectionSchedule,
    branch_flows,
    branch_flows_csv,
    error_report,
    exact_samples,
    generate_scenario,
    partition,
    run_time_varying,
    solve_discrete_points,
)

log = logging.getLogger("tvpf")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    case_path: str
    schedule_path: str | None = None
    seed: int | None = None
    variation: float | None = None
    points_per_interval: int = 11
    norm: str = "2"
    max_order: int = 8
    interval: int = 0
    tol: float | None = None
    validate: bool = False
    out: Path = field(default_factory=lambda: Path("."))
    fmt: str = "csv"
    flat_start_literal: bool = False
    stdout: bool = False

    def __post_init__(self):
        if self.points_per_interval < 2:
            raise LayoutMismatch("--samples must be at least 2")
        if self.max_order < 1:
            raise LayoutMismatch("--max-order must be at least 1")

    @property
    def options(self):
        return SolverOptions() if self.tol is None else SolverOptions(tol=self.tol)

    @classmethod
    def from_args(cls, ns):
        return cls(
            command=ns.command,
            case_path=ns.case,
            schedule_path=getattr(ns, "schedule", None),
            seed=getattr(ns, "seed", None),
            variation=getattr(ns, "variation", None),
            points_per_interval=getattr(ns, "samples", 11),
            norm=getattr(ns, "norm", "2"),
            max_order=getattr(ns, "max_order", 8),
            interval=getattr(ns, "interval", 0),
            tol=ns.tol,
            validate=getattr(ns, "validate", False),
            out=Path(ns.out),
            fmt=ns.format,
            flat_start_literal=ns.flat_start_literal,
            stdout=ns.stdout,
        )


class _Writer:
    """Routes named artifacts to files under the output directory or to stdout."""

    def __init__(self, config):
        self.config = config
        self.written = []
        if not config.stdout:
            config.out.mkdir(parents=True, exist_ok=True)

    def __call__(self, name, text):
        if self.config.stdout:
            sys.stdout.write(text)
        else:
            (self.config.out / name).write_text(text)
        self.written.append(name)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_network(config):
    return Network(load_case(config.case_path))


def _schedule(config, net):
    has_file = config.schedule_path is not None
    has_scenario = config.seed is not None or config.variation is not None
    if has_file == has_scenario:
        raise LayoutMismatch("give exactly one of --schedule or --seed/--variation")
    if has_file:
        return InjectionSchedule.from_csv(Path(config.schedule_path).read_text(), net)
    return generate_scenario(net, seed=config.seed or 0,
                             variation_fraction=1.0 if config.variation is None else config.variation,
                             options=config.options)


# -- commands -------------------------------------------------------------------------

def cmd_solve(config):
    net = _load_network(config)
    sol = solve_powerflow(net, InjectionTarget.from_case(net),
                          flat_start(net, literal=config.flat_start_literal), config.options)
    log.info("converged in %d iterations, mismatch %.3e", sol.iterations, sol.final_mismatch)
    write = _Writer(config)
    if config.fmt == "json":
        write("solution.json", _dump(sol.to_dict()))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bus", "v_real", "v_imag", "magnitude", "angle_deg"])
        for row in sol.to_dict()["buses"]:
            w.writerow([row["bus"], repr(row["v_real"]), repr(row["v_imag"]),
                        repr(row["magnitude"]), repr(row["angle_deg"])])
        write("solution.csv", buf.getvalue())
    return EXIT_OK


def cmd_trajectory(config):
    net = _load_network(config)
    schedule = _schedule(config, net)
    write = _Writer(config)
    manifest = {
        "command": "trajectory",
        "case": config.case_path,
        "breakpoints": len(schedule),
        "points_per_interval": config.points_per_interval,
        "scenario": schedule.metadata or None,
        "complete": False,
    }
    try:
        t0 = time.perf_counter()
        traj = run_time_varying(net, schedule, config.points_per_interval, config.options,
                                literal_flat=config.flat_start_literal)
        log.info("trajectory evaluated in %.3f s", time.perf_counter() - t0)
    except NonConvergence as exc:
        manifest["failed_breakpoint"] = exc.breakpoint
        manifest["error"] = str(exc)
        write("manifest.json", _dump(manifest))
        raise

    flows = []
    for sol, t in zip(traj.breakpoint_solutions, schedule.times):
        flows.extend(branch_flows(net, sol.state.at_time(t)))
    write("branch_flows.csv", branch_flows_csv(flows))

    exact = None
    if config.validate:
        exact = exact_samples(net, traj, config.options)
        report = error_report(traj, exact)
        linear = error_report(traj, exact, "linear")
        write("errors.csv", report.to_csv())
        summary = report.summary()
        summary["linear_global_max"] = linear.global_max
        write("errors.json", _dump(summary))
        manifest["global_max_error"] = report.global_max
        if report.failed:
            manifest["failed_reference_samples"] = len(report.failed)
    write("trajectory.csv", traj.to_csv(exact))
    manifest["complete"] = True
    manifest["outputs"] = list(write.written)
    write("manifest.json", _dump(manifest))
    return EXIT_OK


def cmd_norms(config):
    net = _load_network(config)
    schedule = _schedule(config, net)
    intervals = partition(schedule)
    if not 0 <= config.interval < len(intervals):
        raise LayoutMismatch(f"--interval must be in 0..{len(intervals) - 1}")
    sols = solve_discrete_points(net, intervals[: config.interval + 1], config.options,
                                 literal_flat=config.flat_start_literal)
    iv = intervals[config.interval]
    state = sols[config.interval].state.at_time(iv.t_start)
    lu = LUFactor(assemble_jacobian(state, net))
    if config.max_order < 2:
        raise LayoutMismatch("--max-order must be at least 2 for norm analysis")
    series = derivative_series(state, iv.slope, net, config.max_order, lu=lu)
    report = norm_report(state, series, net, p=config.norm)
    write = _Writer(config)
    if config.fmt == "json":
        write("norms.json", report.to_json() + "\n")
    else:
        write("norms.csv", report.to_csv())
    log.info("critical order %s, measured minimum at order %d", report.critical_order,
             report.measured_min_order)
    return EXIT_OK


def cmd_scenario(config):
    net = _load_network(config)
    schedule = generate_scenario(net, seed=config.seed or 0,
                                 variation_fraction=1.0 if config.variation is None else config.variation,
                                 options=config.options)
    write = _Writer(config)
    write("schedule.csv", schedule.to_csv(net))
    write("scenario.json", _dump(dict(schedule.metadata, case=config.case_path)))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "trajectory": cmd_trajectory, "norms": cmd_norms, "scenario": cmd_scenario}


def build_parser():
    parser = argparse.ArgumentParser(prog="tvpf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", required=True, help="bundled case name (case5, case118) or a MATPOWER file")
    common.add_argument("--tol", type=float, default=None, help="Newton mismatch tolerance (default 1e-10)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--flat-start-literal", action="store_true",
                        help="initialise non-slack buses at 0+j1 instead of 1+j0")
    common.add_argument("--stdout", action="store_true", help="write data to stdout instead of files")
    common.add_argument("-v", "--verbose", action="store_true")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--schedule", help="schedule CSV (time_hours,bus,p_pu,q_pu)")
    source.add_argument("--seed", type=int, help="generate a scenario with this seed")
    source.add_argument("--variation", type=float, help="total variation fraction for a generated scenario")

    sub.add_parser("solve", parents=[common], help="steady-state Newton power flow")
    p = sub.add_parser("trajectory", parents=[common, source], help="time-varying power flow over a schedule")
    p.add_argument("--samples", type=int, default=11, help="grid points per interval, endpoints included")
    p.add_argument("--validate", action="store_true", help="compare against Newton at every grid point")
    p = sub.add_parser("norms", parents=[common, source], help="derivative-norm analysis on one interval")
    p.add_argument("--interval", type=int, default=0)
    p.add_argument("--max-order", type=int, default=8)
    p.add_argument("--norm", choices=("1", "2", "inf"), default="2")
    p = sub.add_parser("scenario", parents=[common], help="generate a day-ahead schedule")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variation", type=float, default=1.0)
    return parser


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        config = RunConfig.from_args(ns)
        return COMMANDS[config.command](config)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
