"""Scenario files: schema, validation, initial placement and the built-in cases.

A scenario is one JSON object. Every field is optional except where noted;
unknown keys are rejected at every nesting level. Lengths are meters, times
seconds, angles degrees (``uav.theta_fov_deg``). See ``docs/scenario.md`` for
the full field list.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
import typing
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .control import GainSet, ManeuverMode, UavParams
from .cvt import BarrierRegion, LloydConfig, RegionError
from .sim import ASSIGNMENTS, Building, MovingObstacle, SimSettings, corridor_gap

__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "GainsSpec",
    "UavSpec",
    "BarrierSpec",
    "CorridorSpec",
    "BuildingSpec",
    "ObstacleSpec",
    "LloydSpec",
    "InitialSpec",
    "ScenarioSpec",
    "OBS4_VELOCITY_PRESETS",
    "initial_positions",
    "load_spec",
    "loads_spec",
    "spec_from_dict",
    "dump_spec",
    "apply_overrides",
    "build_case",
    "local_minimum_case",
]

Vec3 = tuple  # three floats

OBS4_VELOCITY_PRESETS = {
    "table": (0.2, 0.05, 0.0),
    "text": (0.1, 0.025, 0.0),
}


class ScenarioError(ValueError):
    """Scenario violates one or more invariants; ``problems`` lists them all."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.problems))


class ScenarioParseError(ValueError):
    pass


@dataclass(frozen=True)
class GainsSpec:
    K_p: Vec3 = (3.0, 3.0, 3.0)
    K_v: Vec3 = (5.0, 5.0, 5.0)
    k_c1: Vec3 = (1.0, 1.0, 1.0)
    k_c2: Vec3 = (1.0, 1.0, 1.0)
    k_v: Vec3 = (0.1, 0.5, 0.1)
    k_r: float = 0.5
    k_o1: float = 5.0
    k_o2: Vec3 = (1.0, 1.0, 1.0)

    def build(self) -> GainSet:
        return GainSet(**{f.name: getattr(self, f.name) for f in dataclasses.fields(self)})


@dataclass(frozen=True)
class UavSpec:
    r_s: float = 1.0
    r_d: float = 2.0
    theta_fov_deg: float = 60.0

    def build(self) -> UavParams:
        return UavParams(self.r_s, self.r_d, math.radians(self.theta_fov_deg))


@dataclass(frozen=True)
class BarrierSpec:
    center: Vec3 = (0.0, 0.0, 5.0)
    half_extents: Vec3 = (4.0, 3.5, 0.0)
    velocity: Vec3 = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class CorridorSpec:
    """Barrier profile while squeezing through a building gap.

    y half-extent is ``gap / 2 - r_s`` (gap measured from the buildings) unless
    ``half_y`` is set; ``half_x`` / ``half_z`` default to the deploy profile.
    """

    half_x: Optional[float] = None
    half_y: Optional[float] = None
    half_z: Optional[float] = None


@dataclass(frozen=True)
class BuildingSpec:
    min: Vec3
    max: Vec3


@dataclass(frozen=True)
class ObstacleSpec:
    center: Vec3
    radius: float = 1.0
    velocity: Vec3 = (0.0, 0.0, 0.0)
    activation_time: float = 0.0


@dataclass(frozen=True)
class LloydSpec:
    q_samples: Optional[int] = None
    alpha1: float = 0.0
    alpha2: float = 1.0
    beta1: float = 0.0
    beta2: float = 1.0
    max_iterations: int = 200
    movement_tolerance: float = 1e-3


@dataclass(frozen=True)
class InitialSpec:
    """Explicit start state; omitted positions use the Gaussian unit-square draw."""

    positions: Optional[tuple] = None
    velocities: Optional[tuple] = None


@dataclass(frozen=True)
class ScenarioSpec:
    agents: int = 8
    duration: float = 145.0
    dt: float = 0.1
    mode: str = "planar"
    seed: int = 0
    obstacle_avoidance: bool = True
    u_max: float = 10.0
    retarget_interval: float = 5.0
    assignment: str = "optimal"
    transition_window: float = 5.0
    gains: GainsSpec = field(default_factory=GainsSpec)
    uav: UavSpec = field(default_factory=UavSpec)
    barrier: BarrierSpec = field(default_factory=BarrierSpec)
    corridor: CorridorSpec = field(default_factory=CorridorSpec)
    buildings: tuple = ()
    obstacles: tuple = ()
    lloyd: LloydSpec = field(default_factory=LloydSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)

    def problems(self) -> list[str]:
        out = []
        if self.agents < 1:
            out.append("agents must be >= 1")
        if not self.dt > 0:
            out.append("dt must be > 0")
        if not self.duration >= 0:
            out.append("duration must be >= 0")
        if self.mode not in ("planar", "spatial"):
            out.append(f"mode must be 'planar' or 'spatial', got {self.mode!r}")
        if not self.u_max > 0:
            out.append("u_max must be > 0")
        if not self.retarget_interval > 0:
            out.append("retarget_interval must be > 0")
        if self.assignment not in ASSIGNMENTS:
            out.append(f"assignment must be one of {ASSIGNMENTS}, got {self.assignment!r}")
        if not self.transition_window >= 0:
            out.append("transition_window must be >= 0")
        out += self.gains.build().problems()
        out += [f"uav: {p}" for p in self.uav.build().problems()]
        try:
            BarrierRegion(self.barrier.center, self.barrier.half_extents, self.barrier.velocity)
        except RegionError as exc:
            out.append(f"barrier: {exc}")
        for k, b in enumerate(self.buildings):
            if not all(lo < hi for lo, hi in zip(b.min, b.max)):
                out.append(f"buildings[{k}]: min must be < max on every axis")
        for k, ob in enumerate(self.obstacles):
            if ob.radius < 0:
                out.append(f"obstacles[{k}]: radius must be >= 0")
        for name in ("half_x", "half_y", "half_z"):
            val = getattr(self.corridor, name)
            if val is not None and val < 0:
                out.append(f"corridor.{name} must be >= 0")
        if self.agents >= 1:
            try:
                LloydConfig(**self._lloyd_fields())
            except (ValueError, TypeError) as exc:
                out.append(f"lloyd: {exc}")
        for name in ("positions", "velocities"):
            val = getattr(self.initial, name)
            if val is not None and len(val) != self.agents:
                out.append(f"initial.{name} must have one entry per agent ({self.agents})")
        return out

    def _lloyd_fields(self) -> dict:
        d = dataclasses.asdict(self.lloyd)
        d["n"] = self.agents
        return d

    def validate(self) -> "ScenarioSpec":
        problems = self.problems()
        if problems:
            raise ScenarioError(problems)
        self._check_room()
        return self

    def _check_room(self):
        if self.agents < 2:
            return
        h = np.array(self.barrier.half_extents, dtype=float)
        active = h > 0
        room = float(np.prod(2 * h[active]))
        need = self.agents * (2 * self.uav.r_s) ** int(active.sum())
        if room < need:
            warnings.warn(f"barrier measure {room:.3g} is small for {self.agents} agents "
                          f"with safety range {self.uav.r_s} (heuristic needs {need:.3g})")

    def to_dict(self) -> dict:
        return _to_plain(self)

    def digest(self) -> str:
        return hashlib.sha256(dump_spec(self).encode()).hexdigest()

    def corridor_half_extents(self) -> np.ndarray:
        half = np.array(self.barrier.half_extents, dtype=float)
        out = half.copy()
        if self.corridor.half_x is not None:
            out[0] = self.corridor.half_x
        if self.corridor.half_y is not None:
            out[1] = self.corridor.half_y
        else:
            gap = corridor_gap(self._buildings())
            if gap is not None:
                out[1] = max(gap / 2.0 - self.uav.r_s, 0.0)
        if self.corridor.half_z is not None:
            out[2] = self.corridor.half_z
        return out

    def _buildings(self) -> list:
        return [Building(b.min, b.max) for b in self.buildings]

    def to_settings(self) -> SimSettings:
        self.validate()
        n = self.agents
        init_pos = None if self.initial.positions is None else np.array(self.initial.positions, dtype=float)
        init_vel = None if self.initial.velocities is None else np.array(self.initial.velocities, dtype=float)
        return SimSettings(
            n_agents=n,
            duration=self.duration,
            dt=self.dt,
            barrier=BarrierRegion(self.barrier.center, self.barrier.half_extents, self.barrier.velocity),
            mode=ManeuverMode(self.mode),
            gains=self.gains.build(),
            params=self.uav.build(),
            corridor_half_extents=self.corridor_half_extents(),
            transition_window=self.transition_window,
            buildings=self._buildings(),
            obstacles=[MovingObstacle(o.center, o.radius, o.velocity, o.activation_time) for o in self.obstacles],
            lloyd=LloydConfig(seed=self.seed, **self._lloyd_fields()),
            obstacle_avoidance=self.obstacle_avoidance,
            u_max=self.u_max,
            retarget_interval=self.retarget_interval,
            assignment=self.assignment,
            initial_positions=init_pos,
            initial_velocities=init_vel,
            placement=initial_positions,
            seed=self.seed,
        )


def initial_positions(count: int, rng: np.random.Generator) -> np.ndarray:
    """Standard-normal draws conditioned on the open unit square, at z = 0.

    Each attempt draws one ``(2,)`` standard normal pair; rejected pairs are
    discarded and the next agent only starts after the current one is placed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out = np.zeros((count, 3))
    for i in range(count):
        while True:
            xy = rng.standard_normal(2)
            if 0.0 < xy[0] < 1.0 and 0.0 < xy[1] < 1.0:
                out[i, :2] = xy
                break
    return out


# -- (de)serialization -------------------------------------------------------

def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(x) for x in obj]
    return obj


_NESTED = {
    "gains": GainsSpec, "uav": UavSpec, "barrier": BarrierSpec, "corridor": CorridorSpec,
    "lloyd": LloydSpec, "initial": InitialSpec,
}
_LISTS = {"buildings": BuildingSpec, "obstacles": ObstacleSpec}


def _coerce(value, hint, path: str, problems: list):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, args[0], path, problems)
    if hint is bool:
        if not isinstance(value, bool):
            problems.append(f"{path}: expected a boolean")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(f"{path}: expected an integer")
            return value
        return int(value)
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{path}: expected a number")
            return value
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            problems.append(f"{path}: expected a string")
        return value
    if hint is Vec3:
        if (not isinstance(value, (list, tuple)) or len(value) != 3
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)):
            problems.append(f"{path}: expected a list of 3 numbers")
            return value
        return tuple(float(x) for x in value)
    return value


def _build(cls, data, path: str, problems: list):
    if not isinstance(data, dict):
        problems.append(f"{path or 'scenario'}: expected an object")
        return None
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            problems.append(f"{path + '.' if path else ''}{key}: unknown key")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                problems.append(f"{path + '.' if path else ''}{f.name}: required")
            continue
        sub = f"{path + '.' if path else ''}{f.name}"
        value = data[f.name]
        if cls is ScenarioSpec and f.name in _NESTED:
            kwargs[f.name] = _build(_NESTED[f.name], value, sub, problems)
        elif cls is ScenarioSpec and f.name in _LISTS:
            if not isinstance(value, list):
                problems.append(f"{sub}: expected a list")
                continue
            kwargs[f.name] = tuple(_build(_LISTS[f.name], item, f"{sub}[{k}]", problems)
                                   for k, item in enumerate(value))
        elif cls is InitialSpec:
            if value is None:
                kwargs[f.name] = None
            elif not isinstance(value, list):
                problems.append(f"{sub}: expected a list")
            else:
                kwargs[f.name] = tuple(_coerce(v, Vec3, f"{sub}[{k}]", problems) for k, v in enumerate(value))
        else:
            kwargs[f.name] = _coerce(value, hints[f.name], sub, problems)
    if problems:
        return None
    return cls(**kwargs)


def spec_from_dict(data: dict) -> ScenarioSpec:
    problems: list[str] = []
    spec = _build(ScenarioSpec, data, "", problems)
    if problems:
        raise ScenarioError(problems)
    return spec.validate()


def loads_spec(text: str, source: str = "<string>") -> ScenarioSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return spec_from_dict(data)


def load_spec(path, overrides=()) -> ScenarioSpec:
    """Read, default-fill and validate a scenario file."""
    with open(path) as fh:
        text = fh.read()
    if not overrides:
        return loads_spec(text, str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return spec_from_dict(apply_overrides(data, overrides))


def dump_spec(spec: ScenarioSpec) -> str:
    return json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n"


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``dotted.path=value`` overrides; values parse as JSON, else string."""
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ScenarioError([f"override {item!r}: expected key=value"])
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        if isinstance(node, list):
            node[int(parts[-1])] = value
        else:
            node[parts[-1]] = value
    return data


# -- built-in cases -----------------------------------------------------------

# Two 10 m long, 12 m tall blocks leaving a 6 m gap centred on the barrier path.
_BUILDINGS = (
    BuildingSpec((40.0, 3.0, 0.0), (50.0, 13.0, 12.0)),
    BuildingSpec((40.0, -13.0, 0.0), (50.0, -3.0, 12.0)),
)

# Obstacle coordinates are placeholders; only the radius and the moving
# obstacle's velocity come from the reference setup.
_CASE2_OBSTACLES = (
    ObstacleSpec((43.0, 1.6, 5.0)),
    ObstacleSpec((46.5, -1.6, 5.0)),
    ObstacleSpec((50.0, 1.6, 5.0)),
)
_CASE2_OBS4_START = (60.0, -4.5, 5.0)

_CASE3_OBSTACLES = (
    ObstacleSpec((43.0, 0.5, 6.7)),
    ObstacleSpec((46.5, -0.5, 3.3)),
    ObstacleSpec((50.0, 0.5, 6.7)),
)
_CASE3_OBS4_START = (60.0, -4.5, 5.0)


def build_case(case_id: int, obs4_velocity: str = "table") -> ScenarioSpec:
    """Built-in scenario for case 1 (formation only), 2 (planar avoidance) or 3 (3D)."""
    v4 = OBS4_VELOCITY_PRESETS[obs4_velocity]
    if case_id == 1:
        spec = ScenarioSpec(
            agents=8, duration=145.0, dt=0.1, mode="planar", obstacle_avoidance=False,
            barrier=BarrierSpec((0.0, 0.0, 5.0), (8.0, 3.5, 0.0), (1.0, 0.0, 0.0)),
            corridor=CorridorSpec(half_x=12.0),
            buildings=_BUILDINGS,
        )
    elif case_id == 2:
        obs4 = ObstacleSpec(_CASE2_OBS4_START, 1.0, v4, 42.0)
        spec = dataclasses.replace(build_case(1), obstacle_avoidance=True,
                                   obstacles=_CASE2_OBSTACLES + (obs4,))
    elif case_id == 3:
        obs4 = ObstacleSpec(_CASE3_OBS4_START, 1.0, v4, 42.0)
        spec = ScenarioSpec(
            agents=12, duration=140.0, dt=0.1, mode="spatial", obstacle_avoidance=True,
            barrier=BarrierSpec((0.0, 0.0, 5.0), (12.0, 3.5, 1.5), (1.0, 0.0, 0.0)),
            corridor=CorridorSpec(half_x=18.0, half_y=1.5, half_z=1.5),
            buildings=_BUILDINGS,
            obstacles=_CASE3_OBSTACLES + (obs4,),
        )
    else:
        raise ValueError(f"unknown case {case_id!r}; expected 1, 2 or 3")
    return spec.validate()


def local_minimum_case(k_r: float = 0.5, duration: float = 60.0) -> ScenarioSpec:
    """One agent, one sphere dead ahead, CVT target straight behind it.

    The barrier is a short static segment along x, so without the rotational
    term every force stays on the x axis, and Lloyd refreshes barely move the
    target. The target sits where the formation pull and the obstacle push
    balance about 1.5 m from the sphere center, inside the band where the
    rotational term is active.
    """
    return ScenarioSpec(
        agents=1, duration=duration, dt=0.1, mode="planar", obstacle_avoidance=True,
        gains=GainsSpec(k_r=k_r),
        barrier=BarrierSpec((3.25, 0.0, 5.0), (0.001, 0.0, 0.0), (0.0, 0.0, 0.0)),
        obstacles=(ObstacleSpec((0.0, 0.0, 5.0)),),
        initial=InitialSpec(positions=((-4.0, 0.0, 5.0),), velocities=((0.0, 0.0, 0.0),)),
    ).validate()
