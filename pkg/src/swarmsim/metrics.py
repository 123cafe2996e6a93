"""Derived time series computed from a trajectory log."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .sim import update_obstacles
from .trajlog import TrajectoryLog

__all__ = [
    "DistanceSeries",
    "ClearanceSeries",
    "min_distance_series",
    "pairwise_min_distance",
    "obstacle_track",
    "clearance_series",
    "formation_error",
    "phase_intervals",
    "violation_count",
    "report",
]


@dataclass
class DistanceSeries:
    times: np.ndarray
    others: np.ndarray
    distances: np.ndarray  # [tick, other]
    min_distance: Optional[float]
    min_time: Optional[float]
    min_agent: Optional[int]


@dataclass
class ClearanceSeries:
    times: np.ndarray
    spheres: Optional[np.ndarray]  # [tick, agent], min over spheres of surface distance
    buildings: Optional[np.ndarray]  # [tick, agent], signed distance to nearest building

    def minimum(self) -> Optional[float]:
        vals = [float(a.min()) for a in (self.spheres, self.buildings) if a is not None and a.size]
        return min(vals) if vals else None


def min_distance_series(log: TrajectoryLog, i: int, start_tick: int = 0) -> DistanceSeries:
    """Distances from agent ``i`` to every other agent, per tick."""
    pos = log.positions[start_tick:]
    times = log.times[start_tick:]
    others = np.array([j for j in range(log.n_agents) if j != i], dtype=int)
    if len(others) == 0 or len(times) == 0:
        return DistanceSeries(times, others, np.zeros((len(times), 0)), None, None, None)
    dist = np.linalg.norm(pos[:, others, :] - pos[:, i:i + 1, :], axis=2)
    k, m = np.unravel_index(int(np.argmin(dist)), dist.shape)
    return DistanceSeries(times, others, dist, float(dist[k, m]), float(times[k]), int(others[m]))


def pairwise_min_distance(log: TrajectoryLog, start_tick: int = 0) -> float:
    """Smallest distance between any two agents over ticks ``>= start_tick``."""
    pos = log.positions[start_tick:]
    n = log.n_agents
    if n < 2 or len(pos) == 0:
        return float("inf")
    iu = np.triu_indices(n, k=1)
    best = float("inf")
    for frame in pos:
        d = np.linalg.norm(frame[:, None, :] - frame[None, :, :], axis=2)[iu]
        best = min(best, float(d.min()))
    return best


def obstacle_track(obstacles, n_ticks: int, dt: float) -> np.ndarray:
    """Replay obstacle motion; ``[tick, obstacle, axis]`` centers."""
    obs = list(obstacles)
    out = np.zeros((n_ticks, len(obs), 3))
    for k in range(n_ticks):
        out[k] = [ob.center for ob in obs] if obs else np.zeros((0, 3))
        obs = update_obstacles(obs, k * dt, dt)
    return out


def clearance_series(log: TrajectoryLog, obstacles: Sequence = (), buildings: Sequence = (),
                     obstacle_centers: Optional[np.ndarray] = None) -> ClearanceSeries:
    """Per tick and agent: surface distance to the closest sphere and signed
    distance to the closest building (negative inside).

    Sphere centers come from ``obstacle_centers`` if given, else the log's
    recorded centers, else a replay of ``obstacles``.
    """
    obstacles = list(obstacles)
    spheres = None
    if obstacles:
        centers = obstacle_centers
        if centers is None and log.obstacle_centers is not None and log.obstacle_centers.shape[1] == len(obstacles):
            centers = log.obstacle_centers
        if centers is None:
            centers = obstacle_track(obstacles, log.n_ticks, log.dt)
        radii = np.array([ob.radius for ob in obstacles], dtype=float)
        d = np.linalg.norm(log.positions[:, :, None, :] - centers[:, None, :, :], axis=3) - radii
        spheres = d.min(axis=2)
    walls = None
    if buildings:
        walls = np.empty((log.n_ticks, log.n_agents))
        for k in range(log.n_ticks):
            for i in range(log.n_agents):
                walls[k, i] = min(b.signed_distance(log.positions[k, i]) for b in buildings)
    return ClearanceSeries(log.times, spheres, walls)


def formation_error(log: TrajectoryLog) -> np.ndarray:
    """``max_i |p_i - c_i|`` per tick (needs targets in the log)."""
    if log.targets is None:
        raise ValueError("log has no targets")
    if log.n_agents == 0:
        return np.zeros(log.n_ticks)
    return np.linalg.norm(log.positions - log.targets, axis=2).max(axis=1)


def phase_intervals(log: TrajectoryLog) -> list[dict]:
    """Contiguous phase spans as ``{"phase", "start", "end"}`` dicts."""
    out = []
    for k, ph in enumerate(log.phases):
        t = float(log.times[k])
        if out and out[-1]["phase"] == ph:
            out[-1]["end"] = t
        else:
            out.append({"phase": ph, "start": t, "end": t})
    return out


def violation_count(log: TrajectoryLog, r_s: float, start_tick: int = 0) -> int:
    """Number of (tick, pair) records with distance ``<= r_s``."""
    n = log.n_agents
    if n < 2:
        return 0
    iu = np.triu_indices(n, k=1)
    total = 0
    for frame in log.positions[start_tick:]:
        d = np.linalg.norm(frame[:, None, :] - frame[None, :, :], axis=2)[iu]
        total += int(np.count_nonzero(d <= r_s))
    return total


def _opt(x):
    return None if x is None else float(x)


def report(log: TrajectoryLog, ref_agent: int = 0, obstacles: Sequence = (), buildings: Sequence = (),
           r_s: float = 1.0) -> dict:
    """JSON-ready summary: reference-agent distances, clearances, violations, phase spans."""
    if not 0 <= ref_agent < max(log.n_agents, 1):
        raise ValueError(f"reference agent {ref_agent} out of range for {log.n_agents} agents")
    out = {
        "n_agents": log.n_agents,
        "n_ticks": log.n_ticks,
        "dt": float(log.dt),
        "ref_agent": ref_agent,
    }
    ds = min_distance_series(log, ref_agent)
    if ds.min_distance is None:
        out["distance"] = None
        out["notice"] = "single agent: no inter-agent distances"
    else:
        out["distance"] = {"min": ds.min_distance, "time": ds.min_time, "other_agent": ds.min_agent}
    pm = pairwise_min_distance(log)
    out["pairwise_min_distance"] = None if math.isinf(pm) else pm
    out["safety_range"] = float(r_s)
    out["violations"] = violation_count(log, r_s)
    cl = clearance_series(log, obstacles, buildings)
    out["clearance"] = {
        "spheres": None if cl.spheres is None else float(cl.spheres.min()),
        "buildings": None if cl.buildings is None else float(cl.buildings.min()),
        "min": _opt(cl.minimum()),
    }
    out["phases"] = phase_intervals(log)
    return out
