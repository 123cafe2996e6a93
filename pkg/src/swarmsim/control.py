"""Per-agent control laws and their superposition.

* formation tracking toward the agent's CVT target, relative to the barrier drift
* spring-like inter-agent repulsion with relative-velocity coupling
* obstacle detection (sector in the plane, cone in space) and the
  distance-shell plus rotated-offset potential gradients

Diagonal gain matrices are stored as their diagonals (length-3 arrays) and
applied elementwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .geometry import (
    ZERO_NORM_EPS,
    ZeroVectorError,
    angle_between,
    avoidance_angle,
    rotation_y,
    rotation_z,
    wrap_angle,
)

__all__ = [
    "COLLISION_EPS",
    "HEADING_SPEED_EPS",
    "DEFAULT_U_MAX",
    "DegeneratePositionError",
    "MissingTargetError",
    "ManeuverMode",
    "GainSet",
    "UavParams",
    "ObstacleView",
    "Snapshot",
    "ControlTerms",
    "neighborhood",
    "formation_term",
    "collision_term",
    "fly_direction",
    "heading_vector",
    "detect_planar",
    "detect_spatial",
    "grad_attractive",
    "rotational_gradient",
    "grad_rotational_planar",
    "grad_rotational_spatial",
    "obstacle_term",
    "building_views",
    "clamp_norm",
    "control_terms",
    "total_control",
]

COLLISION_EPS = 1e-3
HEADING_SPEED_EPS = 1e-3
DEFAULT_U_MAX = 10.0


class DegeneratePositionError(ValueError):
    """Agent sits on an obstacle center, so the potential has no direction."""


class MissingTargetError(LookupError):
    pass


class ManeuverMode(str, enum.Enum):
    PLANAR = "planar"
    SPATIAL = "spatial"


def _diag(value) -> np.ndarray:
    a = np.array(value, dtype=float)
    if a.ndim == 0:
        a = np.full(3, float(a))
    elif a.shape == (3, 3):
        if np.any(a - np.diag(np.diag(a))):
            raise ValueError("gain matrix must be diagonal")
        a = np.diag(a).copy()
    return a.reshape(3)


@dataclass
class GainSet:
    """Controller gains. Defaults reproduce the reference simulation setup.

    No reference values exist for the collision gains; identity is used for both.
    """

    K_p: np.ndarray = field(default_factory=lambda: np.array([3.0, 3.0, 3.0]))
    K_v: np.ndarray = field(default_factory=lambda: np.array([5.0, 5.0, 5.0]))
    k_c1: np.ndarray = field(default_factory=lambda: np.ones(3))
    k_c2: np.ndarray = field(default_factory=lambda: np.ones(3))
    k_v: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.5, 0.1]))
    k_r: float = 0.5
    k_o1: float = 5.0
    k_o2: np.ndarray = field(default_factory=lambda: np.ones(3))

    _MATRICES = ("K_p", "K_v", "k_c1", "k_c2", "k_v", "k_o2")
    _SCALARS = ("k_r", "k_o1")

    def __post_init__(self):
        for name in self._MATRICES:
            setattr(self, name, _diag(getattr(self, name)))
        for name in self._SCALARS:
            setattr(self, name, float(getattr(self, name)))

    def problems(self, strict: bool = False) -> list[str]:
        """Violated invariants. ``strict`` demands positive definiteness.

        Non-strict mode admits zero entries, which switch a term off.
        """
        out = []
        for name in self._MATRICES + self._SCALARS:
            val = np.atleast_1d(getattr(self, name))
            if not np.all(np.isfinite(val)):
                out.append(f"gains.{name} must be finite")
            elif strict and not np.all(val > 0):
                out.append(f"gains.{name} must be > 0")
            elif np.any(val < 0):
                out.append(f"gains.{name} must be >= 0")
        return out

    def to_dict(self) -> dict:
        d = {name: [float(x) for x in getattr(self, name)] for name in self._MATRICES}
        d.update({name: getattr(self, name) for name in self._SCALARS})
        return d


@dataclass
class UavParams:
    r_s: float = 1.0
    r_d: float = 2.0
    theta_fov: float = math.radians(60.0)

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.r_s < self.r_d:
            out.append(f"need 0 < r_s < r_d (r_s={self.r_s}, r_d={self.r_d})")
        if not 0 < self.theta_fov < math.pi:
            out.append(f"need 0 < theta_fov < pi (theta_fov={self.theta_fov})")
        return out


class ObstacleView(NamedTuple):
    center: np.ndarray
    radius: float
    velocity: np.ndarray = np.zeros(3)


@dataclass
class Snapshot:
    """Frozen world state read by every agent's control within one tick."""

    positions: np.ndarray
    velocities: np.ndarray
    headings: np.ndarray
    targets: np.ndarray
    barrier_velocity: np.ndarray
    obstacles: Sequence[ObstacleView] = ()
    buildings: Sequence = ()


@dataclass
class ControlTerms:
    formation: np.ndarray
    collision: np.ndarray
    obstacle: np.ndarray
    unclamped: np.ndarray
    total: np.ndarray
    detected: int


def neighborhood(i: int, positions, r_d: float) -> np.ndarray:
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    diff = p - p[i]
    mask = np.einsum("ij,ij->i", diff, diff) < r_d * r_d
    mask[i] = False
    return np.flatnonzero(mask)


def formation_term(p, v, c_v, barrier_velocity, gains: GainSet) -> np.ndarray:
    v_rel = np.asarray(v, dtype=float) - barrier_velocity
    return -gains.K_p * (np.asarray(p, dtype=float) - c_v) - gains.K_v * v_rel


def collision_term(i: int, positions, velocities, gains: GainSet, params: UavParams) -> np.ndarray:
    """Sum of pairwise repulsions from the agents inside the detection range.

    The singular denominator is floored at ``COLLISION_EPS**2``.
    """
    p = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    u = np.zeros(3)
    for j in neighborhood(i, p, params.r_d):
        p_ij = p[j] - p[i]
        dist = math.sqrt(float(p_ij @ p_ij))
        denom = max((dist - params.r_s) ** 2, COLLISION_EPS ** 2)
        u = u + (-gains.k_c1 * (p_ij / denom) + gains.k_c2 * (v[j] - v[i]))
    return u


def fly_direction(velocity, last_heading: float) -> float:
    """Horizontal heading angle; keeps ``last_heading`` when nearly at rest."""
    vx, vy = float(velocity[0]), float(velocity[1])
    if math.hypot(vx, vy) < HEADING_SPEED_EPS:
        return last_heading
    return math.atan2(vy, vx)


def heading_vector(velocity, last_heading: float) -> np.ndarray:
    v = np.asarray(velocity, dtype=float)
    if math.hypot(v[0], v[1], v[2]) >= HEADING_SPEED_EPS:
        return v
    return np.array([math.cos(last_heading), math.sin(last_heading), 0.0])


def _in_range(p, obstacle: ObstacleView, params: UavParams) -> bool:
    c = obstacle.center
    return math.hypot(p[0] - c[0], p[1] - c[1], p[2] - c[2]) <= params.r_d + obstacle.radius


def detect_planar(p, fly_dir: float, obstacle: ObstacleView, params: UavParams) -> bool:
    """Range test plus horizontal sector of half-angle ``theta_fov`` around ``fly_dir``."""
    if not _in_range(p, obstacle, params):
        return False
    dx = obstacle.center[0] - p[0]
    dy = obstacle.center[1] - p[1]
    if dx == 0.0 and dy == 0.0:
        return True
    bearing = math.atan2(dy, dx)
    return abs(wrap_angle(bearing - fly_dir)) < params.theta_fov


def detect_spatial(p, v, obstacle: ObstacleView, params: UavParams, last_heading: float = 0.0) -> bool:
    """Range test plus cone of half-angle ``theta_fov`` around the velocity."""
    if not _in_range(p, obstacle, params):
        return False
    rel = obstacle.center - np.asarray(p, dtype=float)
    try:
        return angle_between(rel, heading_vector(v, last_heading)) <= params.theta_fov
    except ZeroVectorError:
        return True


def _offset(p, obstacle: ObstacleView) -> tuple[np.ndarray, float]:
    d = np.asarray(p, dtype=float) - obstacle.center
    nd = math.hypot(d[0], d[1], d[2])
    if nd <= ZERO_NORM_EPS:
        raise DegeneratePositionError("agent position coincides with obstacle center")
    return d, nd


def grad_attractive(p, obstacle: ObstacleView, gains: GainSet, params: UavParams, detected: bool) -> np.ndarray:
    """Gradient of the distance-shell potential, in the closed form the controller uses.

    ``(|k_v (p - o)| - r_a) * (p - o) / |p - o|`` with ``r_a = r_d + r_ok``.
    This is the exact gradient only for ``k_v = I``.
    """
    if not detected:
        return np.zeros(3)
    d, nd = _offset(p, obstacle)
    r_a = params.r_d + obstacle.radius
    kd = gains.k_v * d
    return (math.hypot(kd[0], kd[1], kd[2]) - r_a) * (d / nd)


def rotational_gradient(offset, alpha: float, k_r: float, mode: ManeuverMode) -> np.ndarray:
    """``k_r`` times the rotated offset: ``Rz`` in the plane, ``Ry @ Rz`` in space."""
    d = np.asarray(offset, dtype=float)
    if mode is ManeuverMode.PLANAR:
        d = np.array([d[0], d[1], 0.0])
        return k_r * (rotation_z(alpha) @ d)
    return k_r * (rotation_y(alpha) @ (rotation_z(alpha) @ d))


def grad_rotational_planar(p, obstacle: ObstacleView, gains: GainSet, params: UavParams, detected: bool) -> np.ndarray:
    if not detected:
        return np.zeros(3)
    d, nd = _offset(p, obstacle)
    alpha = avoidance_angle(nd, params.r_s, params.r_d)
    return rotational_gradient(d, alpha, gains.k_r, ManeuverMode.PLANAR)


def grad_rotational_spatial(p, obstacle: ObstacleView, gains: GainSet, params: UavParams, detected: bool) -> np.ndarray:
    if not detected:
        return np.zeros(3)
    d, nd = _offset(p, obstacle)
    alpha = avoidance_angle(nd, params.r_s, params.r_d)
    return rotational_gradient(d, alpha, gains.k_r, ManeuverMode.SPATIAL)


def _obstacle_term(p, v, obstacles: Sequence[ObstacleView], gains: GainSet, params: UavParams,
                   mode: ManeuverMode, last_heading: float) -> tuple[np.ndarray, int]:
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    attract = np.zeros(3)
    rotate = np.zeros(3)
    detected = 0
    if mode is ManeuverMode.PLANAR:
        fly_dir = fly_direction(v, last_heading)
        for ob in obstacles:
            if not detect_planar(p, fly_dir, ob, params):
                continue
            # maneuver stays in the agent's flight plane
            flat = ob._replace(center=np.array([ob.center[0], ob.center[1], p[2]]))
            attract = attract + grad_attractive(p, flat, gains, params, True)
            rotate = rotate + grad_rotational_planar(p, flat, gains, params, True)
            detected += 1
    else:
        for ob in obstacles:
            if not detect_spatial(p, v, ob, params, last_heading):
                continue
            attract = attract + grad_attractive(p, ob, gains, params, True)
            rotate = rotate + grad_rotational_spatial(p, ob, gains, params, True)
            detected += 1
    if not detected:
        return np.zeros(3), 0
    damping = gains.k_o2 * v
    if mode is ManeuverMode.PLANAR:
        damping[2] = 0.0
    return -gains.k_o1 * attract - rotate - damping, detected


def obstacle_term(p, v, obstacles: Sequence[ObstacleView], gains: GainSet, params: UavParams,
                  mode: ManeuverMode, last_heading: float = 0.0) -> np.ndarray:
    """Obstacle avoidance acceleration summed over the detected obstacles.

    Undetected obstacles contribute nothing, and the velocity damping is only
    applied while at least one obstacle is detected.
    """
    return _obstacle_term(p, v, obstacles, gains, params, mode, last_heading)[0]


def building_views(p, buildings, r_d: float) -> list[ObstacleView]:
    """Nearest wall point of each building within ``r_d``, as zero-radius obstacles."""
    out = []
    for b in buildings:
        if b.distance(p) > r_d:
            continue
        q = b.nearest_point(p)
        if math.hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]) <= r_d:
            out.append(ObstacleView(q, 0.0, np.zeros(3)))
    return out


def clamp_norm(u: np.ndarray, u_max: float) -> np.ndarray:
    n = math.hypot(u[0], u[1], u[2])
    if n > u_max:
        return u * (u_max / n)
    return u


def control_terms(i: int, snap: Snapshot, gains: GainSet, params: UavParams, mode: ManeuverMode,
                  obstacle_avoidance: bool = True, u_max: float = DEFAULT_U_MAX) -> ControlTerms:
    if i >= len(snap.targets) or not np.all(np.isfinite(snap.targets[i])):
        raise MissingTargetError(f"agent {i} has no CVT target")
    p = snap.positions[i]
    v = snap.velocities[i]
    u_f = formation_term(p, v, snap.targets[i], snap.barrier_velocity, gains)
    u_c = collision_term(i, snap.positions, snap.velocities, gains, params)
    u = u_f + u_c
    if obstacle_avoidance:
        views = list(snap.obstacles) + building_views(p, snap.buildings, params.r_d)
        u_o, detected = _obstacle_term(p, v, views, gains, params, mode, float(snap.headings[i]))
        u = u + u_o
    else:
        u_o, detected = np.zeros(3), 0
    return ControlTerms(u_f, u_c, u_o, u, clamp_norm(u, u_max), detected)


def total_control(i: int, snap: Snapshot, gains: GainSet, params: UavParams, mode: ManeuverMode,
                  obstacle_avoidance: bool = True, u_max: float = DEFAULT_U_MAX) -> np.ndarray:
    """Superposed acceleration command for agent ``i``, norm-clamped to ``u_max``."""
    return control_terms(i, snap, gains, params, mode, obstacle_avoidance, u_max).total
