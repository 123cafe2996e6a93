"""Time stepping: double-integrator agents, moving barrier, formation phases,
CVT target refresh and logging.

One tick at time ``t_k = k * dt`` runs, in order: phase update, barrier update,
obstacle activation, CVT target refresh (or rigid co-drift), control
evaluation for all agents against a frozen snapshot, logging, then forward
Euler integration of agents and obstacles to ``t_{k+1}``.

Seeding: ``np.random.SeedSequence(seed).spawn(2)`` gives two PCG64 streams;
the first places the agents, the second feeds every Lloyd run in order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .control import (
    DEFAULT_U_MAX,
    HEADING_SPEED_EPS,
    GainSet,
    ManeuverMode,
    ObstacleView,
    Snapshot,
    UavParams,
    control_terms,
)
from .cvt import UNIFORM, BarrierRegion, DensityField, LloydConfig, lloyd_run
from .trajlog import LogRecorder, TrajectoryLog

__all__ = [
    "NonFiniteStateError",
    "Phase",
    "UavState",
    "Building",
    "MovingObstacle",
    "SimSettings",
    "WorldState",
    "integrate_step",
    "update_obstacles",
    "corridor_gap",
    "barrier_at",
    "update_phase",
    "ASSIGNMENTS",
    "match_targets",
    "assign_targets",
    "refresh_cvt_targets",
    "initial_world",
    "step_world",
    "run_simulation",
]

_T_EPS = 1e-9

#: Target hand-out policies after a Lloyd run: "optimal" minimizes the total
#: squared travel distance, "greedy" lets agents claim in index order.
ASSIGNMENTS = ("optimal", "greedy")


class NonFiniteStateError(RuntimeError):
    def __init__(self, message: str, tick: Optional[int] = None, agent: Optional[int] = None):
        super().__init__(message)
        self.tick = tick
        self.agent = agent


class Phase(str, enum.Enum):
    DEPLOY = "deploy"
    CORRIDOR = "corridor"
    RECOVER = "recover"


@dataclass
class UavState:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    heading: float = 0.0


def integrate_step(state: UavState, accel, dt: float) -> UavState:
    """Forward Euler; the position update uses the pre-update velocity."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    pos = state.position + state.velocity * dt
    vel = state.velocity + np.asarray(accel, dtype=float) * dt
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
        raise NonFiniteStateError("non-finite state after integration")
    heading = state.heading
    if math.hypot(vel[0], vel[1]) >= HEADING_SPEED_EPS:
        heading = math.atan2(vel[1], vel[0])
    return UavState(pos, vel, heading)


@dataclass(frozen=True)
class Building:
    """Axis-aligned box obstacle."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = np.array(self.min_corner, dtype=float).reshape(3)
        hi = np.array(self.max_corner, dtype=float).reshape(3)
        if not np.all(lo < hi):
            raise ValueError(f"building needs min < max per axis, got {lo}, {hi}")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p > self.min_corner) and np.all(p < self.max_corner))

    def nearest_point(self, p) -> np.ndarray:
        """Closest point on the box surface."""
        p = np.asarray(p, dtype=float)
        q = np.clip(p, self.min_corner, self.max_corner)
        if not self.contains(p):
            return q
        gaps = np.concatenate([p - self.min_corner, self.max_corner - p])
        k = int(np.argmin(gaps))
        q = p.copy()
        q[k % 3] = self.min_corner[k % 3] if k < 3 else self.max_corner[k % 3]
        return q

    def distance(self, p) -> float:
        """Distance from outside (0 inside)."""
        lo, hi = self.min_corner, self.max_corner
        gaps = [max(lo[a] - p[a], 0.0, p[a] - hi[a]) for a in range(3)]
        return math.hypot(*gaps)

    def signed_distance(self, p) -> float:
        """Distance to the surface, negative inside."""
        p = np.asarray(p, dtype=float)
        if self.contains(p):
            return -float(np.min(np.concatenate([p - self.min_corner, self.max_corner - p])))
        return self.distance(p)


@dataclass(frozen=True)
class MovingObstacle:
    """Sphere that translates at ``velocity`` once ``activation_time`` is reached."""

    center: np.ndarray
    radius: float = 1.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    activation_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.array(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "velocity", np.array(self.velocity, dtype=float).reshape(3))
        if self.radius < 0:
            raise ValueError("obstacle radius must be >= 0")

    def active(self, t: float) -> bool:
        return t >= self.activation_time - _T_EPS

    def view(self, t: float) -> ObstacleView:
        vel = self.velocity if self.active(t) else np.zeros(3)
        return ObstacleView(self.center, float(self.radius), vel)


def update_obstacles(obstacles: Sequence[MovingObstacle], t: float, dt: float) -> list[MovingObstacle]:
    """Advance active obstacles from ``t`` to ``t + dt``."""
    out = []
    for ob in obstacles:
        if ob.active(t) and np.any(ob.velocity):
            ob = replace(ob, center=ob.center + ob.velocity * dt)
        out.append(ob)
    return out


def corridor_gap(buildings: Sequence[Building]) -> Optional[float]:
    """Narrowest y gap between two buildings that overlap in x, if any."""
    best = None
    for a in buildings:
        for b in buildings:
            if a is b or a.max_corner[1] > b.min_corner[1]:
                continue
            if a.max_corner[0] <= b.min_corner[0] or b.max_corner[0] <= a.min_corner[0]:
                continue
            gap = float(b.min_corner[1] - a.max_corner[1])
            best = gap if best is None else min(best, gap)
    return best


@dataclass
class SimSettings:
    """Everything the engine needs; normally produced by ``ScenarioSpec.to_settings``."""

    n_agents: int
    duration: float
    dt: float
    barrier: BarrierRegion
    mode: ManeuverMode = ManeuverMode.PLANAR
    gains: GainSet = field(default_factory=GainSet)
    params: UavParams = field(default_factory=UavParams)
    corridor_half_extents: Optional[np.ndarray] = None
    transition_window: float = 5.0
    buildings: list = field(default_factory=list)
    obstacles: list = field(default_factory=list)
    lloyd: Optional[LloydConfig] = None
    density: DensityField = UNIFORM
    obstacle_avoidance: bool = True
    u_max: float = DEFAULT_U_MAX
    retarget_interval: float = 5.0
    initial_positions: Optional[np.ndarray] = None
    initial_velocities: Optional[np.ndarray] = None
    placement: Optional[Callable[[int, np.random.Generator], np.ndarray]] = None
    seed: int = 0
    assignment: str = "optimal"

    def __post_init__(self):
        if self.assignment not in ASSIGNMENTS:
            raise ValueError(f"assignment must be one of {ASSIGNMENTS}, got {self.assignment!r}")
        if self.lloyd is None and self.n_agents > 0:
            self.lloyd = LloydConfig(n=self.n_agents)
        if self.corridor_half_extents is None:
            self.corridor_half_extents = self.barrier.half_extents.copy()
        self.corridor_half_extents = np.array(self.corridor_half_extents, dtype=float)


@dataclass
class WorldState:
    time: float
    tick: int
    uavs: list
    obstacles: list
    buildings: list
    barrier: BarrierRegion
    targets: np.ndarray
    phase: Phase = Phase.DEPLOY
    phase_started: float = 0.0
    transition_from: Optional[np.ndarray] = None
    last_refresh: Optional[float] = None
    lloyd_rng: Optional[np.random.Generator] = None

    @property
    def positions(self) -> np.ndarray:
        return np.array([u.position for u in self.uavs], dtype=float).reshape(len(self.uavs), 3)

    @property
    def velocities(self) -> np.ndarray:
        return np.array([u.velocity for u in self.uavs], dtype=float).reshape(len(self.uavs), 3)


def _profile(settings: SimSettings, phase: Phase) -> np.ndarray:
    if phase is Phase.CORRIDOR:
        return settings.corridor_half_extents
    return settings.barrier.half_extents


def barrier_at(world: WorldState, settings: SimSettings, t: float) -> BarrierRegion:
    """Barrier at time ``t``: rigid drift plus a linear resize after each phase change."""
    base = settings.barrier
    center = base.center + base.velocity * t
    goal = _profile(settings, world.phase)
    start = world.transition_from if world.transition_from is not None else goal
    window = settings.transition_window
    s = 1.0 if window <= 0 else min(1.0, max(0.0, (t - world.phase_started) / window))
    half = start + s * (goal - start)
    return BarrierRegion(center, half, base.velocity)


def update_phase(world: WorldState, settings: SimSettings) -> Phase:
    """Deploy -> Corridor on first building proximity; Corridor -> Recover once
    the barrier's trailing face clears the buildings by ``r_d``."""
    r_d = settings.params.r_d
    if world.phase is Phase.DEPLOY:
        for b in world.buildings:
            for u in world.uavs:
                if b.distance(u.position) < r_d:
                    return Phase.CORRIDOR
        return Phase.DEPLOY
    if world.phase is Phase.CORRIDOR:
        if not world.buildings:
            return Phase.CORRIDOR
        bar = world.barrier
        if bar.velocity[0] >= 0:
            trailing = bar.center[0] - bar.half_extents[0]
            if trailing > max(b.max_corner[0] for b in world.buildings) + r_d:
                return Phase.RECOVER
        else:
            trailing = bar.center[0] + bar.half_extents[0]
            if trailing < min(b.min_corner[0] for b in world.buildings) - r_d:
                return Phase.RECOVER
        return Phase.CORRIDOR
    return world.phase


def match_targets(positions, targets) -> np.ndarray:
    """Greedy matching: agents in index order claim their nearest unclaimed target."""
    p = np.asarray(positions, dtype=float)
    t = np.asarray(targets, dtype=float)
    free = np.ones(len(t), dtype=bool)
    out = np.empty_like(t)
    for i in range(len(p)):
        d2 = ((t - p[i]) ** 2).sum(axis=1)
        d2[~free] = np.inf
        k = int(np.argmin(d2))
        free[k] = False
        out[i] = t[k]
    return out


def assign_targets(positions, targets) -> np.ndarray:
    """Permutation of ``targets`` minimizing the summed squared distance to ``positions``."""
    p = np.asarray(positions, dtype=float)
    t = np.asarray(targets, dtype=float)
    cost = ((p[:, None, :] - t[None, :, :]) ** 2).sum(axis=2)
    _, cols = linear_sum_assignment(cost)
    return t[cols]


def refresh_cvt_targets(world: WorldState, settings: SimSettings, region: BarrierRegion,
                        rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Re-run Lloyd on ``region`` and hand the points out to the agents.

    Lloyd is warm-started from the current targets (or the agent positions
    when there are none yet).
    """
    if rng is None:
        rng = world.lloyd_rng
    init = world.targets if np.all(np.isfinite(world.targets)) else world.positions
    points = lloyd_run(region, settings.density, settings.lloyd, init=init, rng=rng)
    if settings.assignment == "optimal":
        return assign_targets(world.positions, points)
    return match_targets(world.positions, points)


def initial_world(settings: SimSettings, seed: Optional[int] = None) -> WorldState:
    seed = settings.seed if seed is None else seed
    place_ss, lloyd_ss = np.random.SeedSequence(seed).spawn(2)
    n = settings.n_agents
    if settings.initial_positions is not None:
        pos = np.array(settings.initial_positions, dtype=float).reshape(n, 3)
    elif settings.placement is not None:
        pos = np.asarray(settings.placement(n, np.random.Generator(np.random.PCG64(place_ss))), dtype=float)
    else:
        raise ValueError("settings need initial_positions or a placement function")
    if settings.initial_velocities is not None:
        vel = np.array(settings.initial_velocities, dtype=float).reshape(n, 3)
    else:
        vel = np.zeros((n, 3))
    uavs = []
    for p, v in zip(pos, vel):
        heading = math.atan2(v[1], v[0]) if math.hypot(v[0], v[1]) >= HEADING_SPEED_EPS else 0.0
        uavs.append(UavState(p.copy(), v.copy(), heading))
    return WorldState(
        time=0.0, tick=0, uavs=uavs, obstacles=list(settings.obstacles),
        buildings=list(settings.buildings), barrier=settings.barrier,
        targets=np.full((n, 3), np.nan), lloyd_rng=np.random.Generator(np.random.PCG64(lloyd_ss)),
    )


def _prepare_tick(world: WorldState, settings: SimSettings, rec: Optional[LogRecorder]):
    t, k = world.time, world.tick
    n = len(world.uavs)
    phase_changed = False
    new_phase = update_phase(world, settings)
    if new_phase is not world.phase:
        world.transition_from = world.barrier.half_extents.copy()
        world.phase = new_phase
        world.phase_started = t
        phase_changed = True
        if rec is not None:
            rec.event(k, t, f"phase_{new_phase.value}")
    world.barrier = barrier_at(world, settings, t)

    if rec is not None:
        for idx, ob in enumerate(world.obstacles):
            if ob.activation_time > 0 and ob.active(t) and not ob.active(t - settings.dt):
                rec.event(k, t, "obstacle_activated", [idx])

    if n == 0:
        return
    if k > 0:
        world.targets = world.targets + world.barrier.velocity * settings.dt
    due = world.last_refresh is None or t - world.last_refresh >= settings.retarget_interval - _T_EPS
    if phase_changed or due:
        region = world.barrier
        if phase_changed:
            region = replace(region, half_extents=_profile(settings, world.phase).copy())
        world.targets = refresh_cvt_targets(world, settings, region)
        world.last_refresh = t
        if rec is not None:
            rec.event(k, t, "cvt_refresh")


def _snapshot(world: WorldState) -> Snapshot:
    return Snapshot(
        positions=world.positions,
        velocities=world.velocities,
        headings=np.array([u.heading for u in world.uavs], dtype=float),
        targets=world.targets,
        barrier_velocity=world.barrier.velocity,
        obstacles=[ob.view(world.time) for ob in world.obstacles],
        buildings=world.buildings,
    )


def _controls(world: WorldState, settings: SimSettings):
    snap = _snapshot(world)
    n = len(world.uavs)
    u = np.zeros((n, 3))
    detected = np.zeros(n, dtype=int)
    for i in range(n):
        terms = control_terms(i, snap, settings.gains, settings.params, settings.mode,
                              settings.obstacle_avoidance, settings.u_max)
        u[i] = terms.total
        detected[i] = terms.detected
    return snap, u, detected


def _record(world: WorldState, snap: Snapshot, u, detected, settings: SimSettings, rec: LogRecorder):
    k, t = world.tick, world.time
    pos = snap.positions
    n = len(pos)
    if n > 1:
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        ii, jj = np.nonzero(np.triu(dist <= settings.params.r_s, k=1))
        for i, j in zip(ii, jj):
            rec.event(k, t, "safety_violation", [i, j])
    centers = np.array([ob.center for ob in world.obstacles], dtype=float).reshape(-1, 3)
    rec.record(t, pos, snap.velocities, u, detected, world.phase.value, world.targets,
               world.barrier.center, world.barrier.half_extents, centers)


def _integrate(world: WorldState, u, settings: SimSettings):
    dt = settings.dt
    pos = world.positions
    vel = world.velocities
    new_pos = pos + vel * dt
    new_vel = vel + u * dt
    bad = ~(np.isfinite(new_pos).all(axis=1) & np.isfinite(new_vel).all(axis=1))
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteStateError(f"non-finite state at tick {world.tick}, agent {i}", tick=world.tick, agent=i)
    for i, state in enumerate(world.uavs):
        heading = state.heading
        vx, vy = new_vel[i, 0], new_vel[i, 1]
        if math.hypot(vx, vy) >= HEADING_SPEED_EPS:
            heading = math.atan2(vy, vx)
        world.uavs[i] = UavState(new_pos[i], new_vel[i], heading)
    world.obstacles = update_obstacles(world.obstacles, world.time, dt)
    world.tick += 1
    world.time = world.tick * dt


def step_world(world: WorldState, settings: SimSettings, rec: Optional[LogRecorder] = None) -> WorldState:
    """Advance ``world`` by one tick in place and return it."""
    _prepare_tick(world, settings, rec)
    snap, u, detected = _controls(world, settings)
    if rec is not None:
        _record(world, snap, u, detected, settings, rec)
    _integrate(world, u, settings)
    return world


def run_simulation(scenario, seed: Optional[int] = None) -> TrajectoryLog:
    """Run ``floor(duration / dt)`` ticks and return the log (ticks + 1 records).

    ``scenario`` is a :class:`SimSettings` or anything with ``to_settings()``.
    """
    settings = scenario.to_settings() if hasattr(scenario, "to_settings") else scenario
    world = initial_world(settings, seed)
    rec = LogRecorder(settings.dt, settings.n_agents, settings.mode.value)
    n_ticks = int(math.floor(settings.duration / settings.dt + 1e-9))
    for _ in range(n_ticks):
        step_world(world, settings, rec)
    _prepare_tick(world, settings, rec)
    snap, u, detected = _controls(world, settings)
    _record(world, snap, u, detected, settings, rec)
    return rec.finish()
