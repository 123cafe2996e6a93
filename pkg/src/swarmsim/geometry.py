"""Spatial primitives: rotation matrices, the avoidance angle schedule and
angle tests used by obstacle detection.

Vectors are plain ``numpy`` arrays of shape ``(3,)``. Planar work uses the same
type with the z component held at zero.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "ZERO_NORM_EPS",
    "InvalidRangeError",
    "ZeroVectorError",
    "as_vec",
    "rotation_z",
    "rotation_y",
    "avoidance_angle",
    "angle_between",
    "wrap_angle",
]

ZERO_NORM_EPS = 1e-9


class InvalidRangeError(ValueError):
    """Safety range is not strictly inside the detection range."""


class ZeroVectorError(ValueError):
    """A direction was requested from a (numerically) zero vector."""


def as_vec(v) -> np.ndarray:
    """Copy *v* into a float64 array of shape (3,), rejecting NaN/Inf."""
    a = np.array(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite vector component in {a!r}")
    return a


def rotation_z(alpha: float) -> np.ndarray:
    """Right-handed rotation about z. Its upper-left 2x2 block is the planar rotation."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_y(alpha: float) -> np.ndarray:
    """Rotation about y with ``R[0, 2] = +sin`` and ``R[2, 0] = -sin``."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def avoidance_angle(dist: float, r_s: float, r_d: float) -> float:
    """Rotation angle of the sideways steering potential.

    Linear ramp from pi/2 just outside the safety range down to 0 at the
    detection range; zero outside the open interval ``(r_s, r_d)``.
    """
    if not r_s < r_d:
        raise InvalidRangeError(f"need r_s < r_d, got r_s={r_s}, r_d={r_d}")
    if r_s < dist < r_d:
        return 0.5 * math.pi * (r_d - dist) / (r_d - r_s)
    return 0.0


def angle_between(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        raise ZeroVectorError("angle undefined for a zero-length vector")
    cos = float(np.dot(a, b)) / (na * nb)
    return math.acos(min(1.0, max(-1.0, cos)))


def wrap_angle(a: float) -> float:
    """Wrap into (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w == -math.pi:
        return math.pi
    return w
