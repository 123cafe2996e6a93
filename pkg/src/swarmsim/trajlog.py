"""Trajectory log container and its CSV serialization.

Trajectory CSV columns::

    tick,time,agent,px,py,pz,vx,vy,vz,ux,uy,uz,detected_count,phase

Events CSV columns::

    tick,time,kind,ids

``ids`` joins the agent / obstacle indices involved with ``;``. Floats are
written with ``repr`` (shortest string that round-trips).
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "TRAJECTORY_COLUMNS",
    "EVENT_COLUMNS",
    "CorruptLogError",
    "Event",
    "TrajectoryLog",
    "LogRecorder",
    "trajectory_csv_text",
    "events_csv_text",
    "write_text_atomic",
    "write_trajectory_csv",
    "write_events_csv",
    "read_trajectory_csv",
    "read_events_csv",
]

TRAJECTORY_COLUMNS = ("tick", "time", "agent", "px", "py", "pz", "vx", "vy", "vz",
                      "ux", "uy", "uz", "detected_count", "phase")
EVENT_COLUMNS = ("tick", "time", "kind", "ids")


class CorruptLogError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    tick: int
    time: float
    kind: str
    ids: tuple = ()


@dataclass
class TrajectoryLog:
    """Per-tick record of a run; arrays are indexed ``[tick, agent, axis]``.

    ``targets``, ``barrier_*`` and ``obstacle_centers`` are only populated by
    the simulator (they are not part of the CSV format).
    """

    dt: float
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    controls: np.ndarray
    detected: np.ndarray
    phases: list
    events: list = field(default_factory=list)
    targets: Optional[np.ndarray] = None
    barrier_centers: Optional[np.ndarray] = None
    barrier_half_extents: Optional[np.ndarray] = None
    obstacle_centers: Optional[np.ndarray] = None
    mode: str = "planar"

    @property
    def n_ticks(self) -> int:
        return len(self.times)

    @property
    def n_agents(self) -> int:
        return self.positions.shape[1]

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]


class LogRecorder:
    """Accumulates tick records, then freezes them into a :class:`TrajectoryLog`."""

    def __init__(self, dt: float, n_agents: int, mode: str = "planar"):
        self.dt = dt
        self.n = n_agents
        self.mode = mode
        self._rows: dict[str, list] = {k: [] for k in (
            "times", "positions", "velocities", "controls", "detected", "phases",
            "targets", "barrier_centers", "barrier_half_extents", "obstacle_centers")}
        self.events: list[Event] = []

    def record(self, time, positions, velocities, controls, detected, phase, targets,
               barrier_center, barrier_half, obstacle_centers):
        r = self._rows
        r["times"].append(time)
        r["positions"].append(np.array(positions, dtype=float).reshape(self.n, 3))
        r["velocities"].append(np.array(velocities, dtype=float).reshape(self.n, 3))
        r["controls"].append(np.array(controls, dtype=float).reshape(self.n, 3))
        r["detected"].append(np.array(detected, dtype=int).reshape(self.n))
        r["phases"].append(phase)
        r["targets"].append(np.array(targets, dtype=float).reshape(self.n, 3))
        r["barrier_centers"].append(np.array(barrier_center, dtype=float))
        r["barrier_half_extents"].append(np.array(barrier_half, dtype=float))
        r["obstacle_centers"].append(np.array(obstacle_centers, dtype=float).reshape(-1, 3))

    def event(self, tick: int, time: float, kind: str, ids: Sequence[int] = ()):
        self.events.append(Event(tick, time, kind, tuple(int(i) for i in ids)))

    def finish(self) -> TrajectoryLog:
        r = self._rows
        n = self.n

        def stack(key, shape):
            return np.array(r[key], dtype=float).reshape((len(r["times"]),) + shape)

        n_obs = r["obstacle_centers"][0].shape[0] if r["obstacle_centers"] else 0
        return TrajectoryLog(
            dt=self.dt,
            times=np.array(r["times"], dtype=float),
            positions=stack("positions", (n, 3)),
            velocities=stack("velocities", (n, 3)),
            controls=stack("controls", (n, 3)),
            detected=np.array(r["detected"], dtype=int).reshape(len(r["times"]), n),
            phases=list(r["phases"]),
            events=list(self.events),
            targets=stack("targets", (n, 3)),
            barrier_centers=stack("barrier_centers", (3,)),
            barrier_half_extents=stack("barrier_half_extents", (3,)),
            obstacle_centers=stack("obstacle_centers", (n_obs, 3)),
            mode=self.mode,
        )


def _f(x) -> str:
    return repr(float(x))


def trajectory_csv_text(log: TrajectoryLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for k in range(log.n_ticks):
        t = _f(log.times[k])
        phase = log.phases[k]
        for i in range(log.n_agents):
            p, v, u = log.positions[k, i], log.velocities[k, i], log.controls[k, i]
            w.writerow([k, t, i, _f(p[0]), _f(p[1]), _f(p[2]), _f(v[0]), _f(v[1]), _f(v[2]),
                        _f(u[0]), _f(u[1]), _f(u[2]), int(log.detected[k, i]), phase])
    return buf.getvalue()


def events_csv_text(events: Sequence[Event]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_COLUMNS)
    for e in events:
        w.writerow([e.tick, _f(e.time), e.kind, ";".join(str(i) for i in e.ids)])
    return buf.getvalue()


def write_text_atomic(path, text: str):
    """Write via a temporary sibling file and rename, so readers never see a partial file."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_trajectory_csv(log: TrajectoryLog, path):
    write_text_atomic(path, trajectory_csv_text(log))


def write_events_csv(events: Sequence[Event], path):
    write_text_atomic(path, events_csv_text(events))


def read_trajectory_csv(path, dt: Optional[float] = None) -> TrajectoryLog:
    """Parse a trajectory CSV back into a :class:`TrajectoryLog`.

    Raises :class:`CorruptLogError` naming the offending line.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRAJECTORY_COLUMNS:
            raise CorruptLogError(f"{path}: line 1: unexpected header {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRAJECTORY_COLUMNS):
                raise CorruptLogError(f"{path}: line {lineno}: expected {len(TRAJECTORY_COLUMNS)} fields, got {len(row)}")
            try:
                rows.append((int(row[0]), float(row[1]), int(row[2]),
                             [float(x) for x in row[3:12]], int(row[12]), row[13]))
            except ValueError as exc:
                raise CorruptLogError(f"{path}: line {lineno}: {exc}") from None
    if not rows:
        raise CorruptLogError(f"{path}: no records")
    n_agents = max(r[2] for r in rows) + 1
    n_ticks = max(r[0] for r in rows) + 1
    if len(rows) != n_agents * n_ticks:
        raise CorruptLogError(f"{path}: expected {n_agents * n_ticks} rows for {n_ticks} ticks x {n_agents} agents, got {len(rows)}")
    times = np.zeros(n_ticks)
    data = np.zeros((n_ticks, n_agents, 9))
    detected = np.zeros((n_ticks, n_agents), dtype=int)
    phases = [""] * n_ticks
    for lineno, (k, t, i, vals, det, phase) in enumerate(rows, start=2):
        if k * n_agents + i != lineno - 2:
            raise CorruptLogError(f"{path}: line {lineno}: out-of-order record (tick {k}, agent {i})")
        times[k] = t
        data[k, i] = vals
        detected[k, i] = det
        phases[k] = phase
    if dt is None:
        dt = float(times[1] - times[0]) if n_ticks > 1 else 0.0
    return TrajectoryLog(dt=dt, times=times, positions=data[:, :, 0:3], velocities=data[:, :, 3:6],
                         controls=data[:, :, 6:9], detected=detected, phases=phases)


def read_events_csv(path) -> list[Event]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != EVENT_COLUMNS:
            raise CorruptLogError(f"{path}: line 1: unexpected header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            try:
                ids = tuple(int(x) for x in row[3].split(";") if x)
                out.append(Event(int(row[0]), float(row[1]), row[2], ids))
            except (ValueError, IndexError) as exc:
                raise CorruptLogError(f"{path}: line {lineno}: {exc}") from None
    return out
