"""Command-line entry point: ``swarmsim run | metrics | plot``.

Exit codes: 0 success, 1 invalid input (bad scenario, missing or corrupt
log), 2 the simulation aborted at runtime.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import metrics
from .control import DegeneratePositionError
from .cvt import RejectionStallError
from .scenario import (
    ScenarioError,
    ScenarioParseError,
    ScenarioSpec,
    apply_overrides,
    build_case,
    dump_spec,
    load_spec,
    spec_from_dict,
)
from .sim import NonFiniteStateError, run_simulation
from .svg import PALETTE, Chart
from .trajlog import (
    CorruptLogError,
    TrajectoryLog,
    read_trajectory_csv,
    write_events_csv,
    write_text_atomic,
    write_trajectory_csv,
)

TRAJECTORY_FILE = "trajectory.csv"
EVENTS_FILE = "events.csv"
SCENARIO_FILE = "scenario.json"
METRICS_FILE = "metrics.json"
MANIFEST_FILE = "manifest.json"
PLAN_FILE = "plan_view.svg"
DISTANCE_FILE = "distance.svg"
ALTITUDE_FILE = "altitude.svg"

DEFAULT_OUT = "swarmsim-out"


class InputError(Exception):
    """Bad user input; maps to exit code 1."""


def _json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("SWARMSIM_OUT") or DEFAULT_OUT
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def resolve_spec(case: Optional[int], scenario: Optional[str], overrides=()) -> ScenarioSpec:
    """Scenario from ``--case`` or ``--scenario``, with dotted overrides applied."""
    if scenario is not None:
        if not Path(scenario).is_file():
            raise InputError(f"scenario file not found: {scenario}")
        return load_spec(scenario, overrides)
    spec = build_case(case)
    if overrides:
        spec = spec_from_dict(apply_overrides(spec.to_dict(), overrides))
    return spec


def _load_log(path: str) -> tuple[TrajectoryLog, Path, Optional[ScenarioSpec]]:
    """Trajectory from a CSV file or a run directory, plus the sibling scenario if any."""
    p = Path(path)
    csv_path = p / TRAJECTORY_FILE if p.is_dir() else p
    if not csv_path.is_file():
        raise InputError(f"trajectory log not found: {csv_path}")
    log = read_trajectory_csv(csv_path)
    spec_path = csv_path.parent / SCENARIO_FILE
    spec = load_spec(spec_path) if spec_path.is_file() else None
    if spec is not None:
        log.dt = spec.dt
        log.mode = spec.mode
    return log, csv_path.parent, spec


def _register(out: Path, names):
    """Add ``names`` to the manifest in ``out``, if that directory holds a run."""
    path = out / MANIFEST_FILE
    if not path.is_file():
        return
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: corrupt manifest: {exc}") from None
    files = list(manifest.get("files", []))
    files += [n for n in names if n not in files]
    manifest["files"] = files
    write_text_atomic(path, _json(manifest))


def _check_ref(ref_agent: int, log: TrajectoryLog):
    if not 0 <= ref_agent < log.n_agents:
        raise InputError(f"reference agent {ref_agent} out of range for {log.n_agents} agents")


def _scene(spec: Optional[ScenarioSpec]):
    if spec is None:
        return [], [], 1.0
    settings = spec.to_settings()
    return settings.obstacles, settings.buildings, settings.params.r_s


def _summary_line(rep: dict) -> str:
    def f(x):
        return "n/a" if x is None else f"{x:.3f} m"

    return (f"min pairwise distance {f(rep['pairwise_min_distance'])}, "
            f"min obstacle clearance {f(rep['clearance']['min'])}, "
            f"violations {rep['violations']}")


# -- run -----------------------------------------------------------------------

def cmd_run(args) -> int:
    spec = resolve_spec(args.case, args.scenario, args.override)
    seed = spec.seed if args.seed is None else args.seed
    spec = spec if seed == spec.seed else _with_seed(spec, seed)
    if not 0 <= args.ref_agent < spec.agents:
        raise InputError(f"reference agent {args.ref_agent} out of range for {spec.agents} agents")
    out = _out_dir(args)
    log = run_simulation(spec, seed)
    obstacles, buildings, r_s = _scene(spec)
    rep = metrics.report(log, args.ref_agent, obstacles, buildings, r_s)
    rep["violation_events"] = len(log.events_of("safety_violation"))
    files = [TRAJECTORY_FILE, EVENTS_FILE, SCENARIO_FILE, METRICS_FILE]
    write_trajectory_csv(log, out / TRAJECTORY_FILE)
    write_events_csv(log.events, out / EVENTS_FILE)
    write_text_atomic(out / SCENARIO_FILE, dump_spec(spec))
    write_text_atomic(out / METRICS_FILE, _json(rep))
    manifest = {
        "scenario": args.scenario if args.scenario is not None else f"case:{args.case}",
        "overrides": list(args.override),
        "seed": seed,
        "output_dir": str(out),
        "files": files + [MANIFEST_FILE],
        "spec_sha256": spec.digest(),
    }
    write_text_atomic(out / MANIFEST_FILE, _json(manifest))
    print(f"wrote {log.n_ticks} ticks x {log.n_agents} agents to {out}")
    print(_summary_line(rep))
    return 0


def _with_seed(spec: ScenarioSpec, seed: int) -> ScenarioSpec:
    return dataclasses.replace(spec, seed=seed).validate()


# -- metrics ---------------------------------------------------------------------

def cmd_metrics(args) -> int:
    log, run_dir, spec = _load_log(args.log)
    if args.case is not None or args.scenario is not None:
        spec = resolve_spec(args.case, args.scenario, args.override)
    _check_ref(args.ref_agent, log)
    obstacles, buildings, r_s = _scene(spec)
    rep = metrics.report(log, args.ref_agent, obstacles, buildings, r_s)
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    text = _json(rep)
    write_text_atomic(out / METRICS_FILE, text)
    _register(out, [METRICS_FILE])
    sys.stdout.write(text)
    if rep["distance"] is None:
        print(rep["notice"])
    return 0


# -- plot ------------------------------------------------------------------------

def plot_files(log: TrajectoryLog, spec: Optional[ScenarioSpec], ref_agent: int = 0,
               mode: Optional[str] = None) -> dict[str, str]:
    """SVG documents keyed by file name; the altitude plot is spatial-mode only."""
    mode = mode or (spec.mode if spec is not None else log.mode)
    obstacles, buildings, _ = _scene(spec)
    files = {PLAN_FILE: _plan_view(log, obstacles, buildings),
             DISTANCE_FILE: _distance_plot(log, ref_agent)}
    if mode == "spatial":
        files[ALTITUDE_FILE] = _altitude_plot(log)
    return files


def _plan_view(log: TrajectoryLog, obstacles, buildings) -> str:
    pos = log.positions
    xs = [pos[:, :, 0].min(), pos[:, :, 0].max()]
    ys = [pos[:, :, 1].min(), pos[:, :, 1].max()]
    track = metrics.obstacle_track(obstacles, log.n_ticks, log.dt) if obstacles else None
    for ob_k, ob in enumerate(obstacles):
        c = track[:, ob_k, :]
        xs += [c[:, 0].min() - ob.radius, c[:, 0].max() + ob.radius]
        ys += [c[:, 1].min() - ob.radius, c[:, 1].max() + ob.radius]
    for b in buildings:
        xs += [b.min_corner[0], b.max_corner[0]]
        ys += [b.min_corner[1], b.max_corner[1]]
    chart = Chart("Plan view", "x (m)", "y (m)", (min(xs), max(xs)), (min(ys), max(ys)),
                  width=960, height=480, equal_aspect=True)
    for b in buildings:
        chart.rect(b.min_corner[0], b.min_corner[1], b.max_corner[0], b.max_corner[1])
    for ob_k, ob in enumerate(obstacles):
        c = track[:, ob_k, :]
        if np.ptp(c[:, 0]) > 0 or np.ptp(c[:, 1]) > 0:
            chart.polyline(c[:, 0], c[:, 1], "#555555", 1.0, dash="3,3")
        chart.circle(c[0, 0], c[0, 1], ob.radius, fill="#dddddd", stroke="#333333")
        if np.ptp(c[:, 0]) > 0 or np.ptp(c[:, 1]) > 0:
            chart.circle(c[-1, 0], c[-1, 1], ob.radius, fill="none", stroke="#333333")
    for i in range(log.n_agents):
        color = PALETTE[i % len(PALETTE)]
        chart.polyline(pos[:, i, 0], pos[:, i, 1], color, 1.0)
        chart.marker(pos[-1, i, 0], pos[-1, i, 1], color)
    return chart.render()


def _distance_plot(log: TrajectoryLog, ref_agent: int) -> str:
    ds = metrics.min_distance_series(log, ref_agent)
    top = float(ds.distances.max()) if ds.distances.size else 3.0
    chart = Chart(f"Distance from agent {ref_agent}", "time (s)", "distance (m)",
                  (float(log.times[0]), float(log.times[-1])), (0.0, max(top, 2.5)))
    for m, j in enumerate(ds.others):
        chart.polyline(log.times, ds.distances[:, m], PALETTE[int(j) % len(PALETTE)], 1.0)
    chart.hline(2.0, "#000000", label="2 m")
    if not ds.distances.size:
        chart.note("single agent: no distances")
    return chart.render()


def _altitude_plot(log: TrajectoryLog) -> str:
    z = log.positions[:, :, 2]
    chart = Chart("Altitude", "time (s)", "z (m)", (float(log.times[0]), float(log.times[-1])),
                  (float(z.min()), float(z.max())))
    for i in range(log.n_agents):
        chart.polyline(log.times, z[:, i], PALETTE[i % len(PALETTE)], 1.0)
    return chart.render()


def cmd_plot(args) -> int:
    log, run_dir, spec = _load_log(args.log)
    if args.case is not None or args.scenario is not None:
        spec = resolve_spec(args.case, args.scenario, args.override)
    _check_ref(args.ref_agent, log)
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    files = plot_files(log, spec, args.ref_agent, args.mode)
    for name, text in files.items():
        write_text_atomic(out / name, text)
        print(out / name)
    _register(out, list(files))
    return 0


# -- entry ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmsim", description="UAV swarm CVT formation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p, required):
        g = p.add_mutually_exclusive_group(required=required)
        g.add_argument("--case", type=int, choices=(1, 2, 3), help="built-in case study")
        g.add_argument("--scenario", help="scenario JSON file")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path scenario override, value parsed as JSON (repeatable)")

    run = sub.add_parser("run", help="simulate a scenario and write logs")
    scenario_flags(run, True)
    run.add_argument("--seed", type=int, help="random seed (default: the scenario's)")
    run.add_argument("--out", help="output directory (default: $SWARMSIM_OUT or ./swarmsim-out)")
    run.add_argument("--ref-agent", type=int, default=0, help="reference agent for distance metrics")
    run.set_defaults(func=cmd_run)

    met = sub.add_parser("metrics", help="summarize a trajectory log")
    met.add_argument("log", help="trajectory CSV or run directory")
    scenario_flags(met, False)
    met.add_argument("--out", help="report directory (default: next to the log)")
    met.add_argument("--ref-agent", type=int, default=0)
    met.set_defaults(func=cmd_metrics)

    plot = sub.add_parser("plot", help="write SVG figures for a trajectory log")
    plot.add_argument("log", help="trajectory CSV or run directory")
    scenario_flags(plot, False)
    plot.add_argument("--out", help="figure directory (default: next to the log)")
    plot.add_argument("--ref-agent", type=int, default=0)
    plot.add_argument("--mode", choices=("planar", "spatial"),
                      help="override the maneuver mode (default: from the scenario)")
    plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ScenarioError, ScenarioParseError, CorruptLogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NonFiniteStateError, DegeneratePositionError, RejectionStallError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
