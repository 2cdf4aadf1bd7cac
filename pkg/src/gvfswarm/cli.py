"""Command-line interface.

Verbs:

    run            simulate a scenario file, write telemetry/summary
    validate       check a scenario file and report violations
    calibrate      fit the amplitude gain k_a for a speed/frequency
    consensus-demo integrate the reference consensus protocol
    fit-curve      tabulate the slowdown curve by both routes

Exit codes: 0 on success, 1 on runtime failures (unreadable files,
I/O), 2 on usage or validation errors.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np
import yaml

from . import __version__
from .consensus import SaturationParams, integrate_consensus
from .graph import DEMO_TREE_EDGES, Graph
from .oscillation import (
    average_parametric_velocity,
    average_parametric_velocity_closed_form,
    fit_k_a,
)
from .scenario import ScenarioError, apply_overrides, build_scenario, load_mapping, validate_mapping
from .sim import TELEMETRY_FLOAT_FORMAT, run as run_sim


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gvfswarm",
        description="Distributed formation coordination of fixed-wing swarms "
        "via oscillatory guiding vector fields.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario file")
    p_run.add_argument("scenario", help="scenario file (YAML)")
    p_run.add_argument("--telemetry", metavar="CSV", help="write per-tick telemetry here")
    p_run.add_argument("--summary", metavar="YAML", help="write the run summary here")
    p_run.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY.PATH=VALUE",
        help="override a scenario key (repeatable); recorded in the summary",
    )
    p_run.add_argument("--workers", type=int, default=1, help="worker threads for per-drone stages")
    p_run.add_argument(
        "--digest", action="store_true",
        help="compute the telemetry SHA-256 even without a telemetry file",
    )

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("scenario", help="scenario file (YAML)")
    p_val.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY.PATH=VALUE",
        help="override a scenario key before validating",
    )

    p_cal = sub.add_parser("calibrate", help="fit the amplitude gain k_a")
    p_cal.add_argument("--speed", type=float, required=True, help="ground speed v in m/s")
    p_cal.add_argument("--w-gamma", type=float, required=True, help="wave frequency in rad/s")
    p_cal.add_argument("--samples", type=int, default=100, help="fit sample count (>= 10)")

    p_dem = sub.add_parser("consensus-demo", help="integrate the reference consensus protocol")
    p_dem.add_argument("--nodes", type=int, default=8, help="node count (default: bundled 8-node tree)")
    p_dem.add_argument(
        "--x0", type=float, nargs="+", default=None,
        help="initial states; defaults to seeded uniform draws from --span",
    )
    p_dem.add_argument("--span", type=float, nargs=2, default=(-100.0, 100.0), metavar=("LO", "HI"))
    p_dem.add_argument("--seed", type=int, default=0)
    p_dem.add_argument("--r", type=float, default=5.0, help="linear zone width")
    p_dem.add_argument("--tau-h", type=float, default=20.0, help="saturation ceiling")
    p_dem.add_argument("--tau-l", type=float, default=0.0, help="saturation floor")
    p_dem.add_argument("--dt", type=float, default=0.01)
    p_dem.add_argument("--t-end", type=float, default=150.0)
    p_dem.add_argument("--out", metavar="CSV", help="write t, states, V per step here")

    p_fit = sub.add_parser("fit-curve", help="tabulate the slowdown curve by both routes")
    p_fit.add_argument("--speed", type=float, required=True)
    p_fit.add_argument("--w-gamma", type=float, required=True)
    p_fit.add_argument("--points", type=int, default=50)
    p_fit.add_argument("--out", metavar="CSV", help="write the table here instead of stdout")
    return parser


def _cmd_run(args) -> int:
    mapping = load_mapping(args.scenario)
    mapping = apply_overrides(mapping, args.overrides)
    violations = validate_mapping(mapping)
    if violations:
        for v in violations:
            print(f"invalid: {v}", file=sys.stderr)
        return 2
    scenario = build_scenario(mapping)
    result = run_sim(
        scenario,
        telemetry_path=args.telemetry,
        workers=args.workers,
        overrides=args.overrides,
        compute_digest=args.digest,
    )
    doc = yaml.safe_dump(result.summary, sort_keys=False)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(doc)
    else:
        print(doc, end="")
    return 0


def _cmd_validate(args) -> int:
    mapping = load_mapping(args.scenario)
    mapping = apply_overrides(mapping, args.overrides)
    violations = validate_mapping(mapping)
    if violations:
        for v in violations:
            print(f"invalid: {v}", file=sys.stderr)
        return 2
    print("ok")
    return 0


def _cmd_calibrate(args) -> int:
    if args.speed <= 0 or args.w_gamma <= 0:
        print("speed and w-gamma must be positive", file=sys.stderr)
        return 2
    try:
        value = fit_k_a(args.speed, args.w_gamma, args.samples)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print(f"k_a = {value:.15g}")
    return 0


def _cmd_consensus_demo(args) -> int:
    if args.nodes == 8:
        graph = Graph.from_one_based(8, DEMO_TREE_EDGES)
    else:
        if args.nodes < 1:
            print("--nodes must be at least 1", file=sys.stderr)
            return 2
        # simple chain for other sizes
        graph = Graph.from_one_based(args.nodes, [(i, i + 1) for i in range(1, args.nodes)])
    if args.x0 is not None:
        if len(args.x0) != graph.n_nodes:
            print(f"--x0 needs {graph.n_nodes} values", file=sys.stderr)
            return 2
        x0 = np.array(args.x0, dtype=float)
    else:
        rng = np.random.default_rng(args.seed)
        x0 = rng.uniform(args.span[0], args.span[1], size=graph.n_nodes)
    try:
        params = SaturationParams(tau_l=args.tau_l, tau_h=args.tau_h, r=args.r)
        result = integrate_consensus(
            graph, x0, params, dt=args.dt, t_end=args.t_end, record_states=args.out is not None
        )
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["t_s"] + [f"x{i}" for i in range(1, graph.n_nodes + 1)] + ["V"]
            )
            for k, t in enumerate(result.times):
                row = [TELEMETRY_FLOAT_FORMAT % t]
                row.extend(TELEMETRY_FLOAT_FORMAT % v for v in result.states[k])
                row.append(TELEMETRY_FLOAT_FORMAT % result.lyapunov[k])
                writer.writerow(row)
    spread = float(result.final_state.max() - result.final_state.min())
    print(f"initial states: {np.array2string(x0, precision=6)}")
    print(f"final spread = {spread:.9g}")
    print(f"final max input = {float(np.abs(result.final_input).max()):.9g}")
    print(f"final state max = {float(result.final_state.max()):.9g} "
          f"(initial max {float(x0.max()):.9g})")
    return 0


def _cmd_fit_curve(args) -> int:
    if args.speed <= 0 or args.w_gamma <= 0:
        print("speed and w-gamma must be positive", file=sys.stderr)
        return 2
    if args.points < 2:
        print("--points must be at least 2", file=sys.stderr)
        return 2
    amplitudes = np.linspace(0.0, args.speed / args.w_gamma, args.points)
    rows = [
        (
            a,
            average_parametric_velocity(args.speed, args.w_gamma, a),
            average_parametric_velocity_closed_form(args.speed, args.w_gamma, a),
        )
        for a in amplitudes
    ]
    header = ["amplitude_m", "avg_velocity_quadrature_mps", "avg_velocity_elliptic_mps"]
    if args.out:
        fh = open(args.out, "w", newline="")
    else:
        fh = sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([TELEMETRY_FLOAT_FORMAT % v for v in row])
    finally:
        if args.out:
            fh.close()
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "calibrate": _cmd_calibrate,
        "consensus-demo": _cmd_consensus_demo,
        "fit-curve": _cmd_fit_curve,
    }
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        for v in exc.violations:
            print(f"invalid: {v}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
