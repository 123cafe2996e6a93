import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmsim.geometry import (
    InvalidRangeError,
    ZeroVectorError,
    angle_between,
    as_vec,
    avoidance_angle,
    rotation_y,
    rotation_z,
    wrap_angle,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec = st.tuples(finite, finite, finite).filter(lambda v: math.hypot(*v) > 1e-3)


def test_rotation_z_examples():
    assert np.array_equal(rotation_z(0.0), np.eye(3))
    assert np.allclose(rotation_z(math.pi / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    h = math.sqrt(2) / 2
    assert np.allclose(rotation_z(math.pi / 4) @ [1, 0, 0], [h, h, 0], atol=1e-15)


def test_rotation_y_examples():
    assert np.array_equal(rotation_y(0.0), np.eye(3))
    assert np.allclose(rotation_y(math.pi / 2) @ [1, 0, 0], [0, 0, -1], atol=1e-15)
    assert np.allclose(rotation_y(math.pi / 2) @ [0, 1, 0], [0, 1, 0], atol=1e-15)
    r = rotation_y(0.3)
    assert r[0, 2] == math.sin(0.3) and r[2, 0] == -math.sin(0.3)


def test_rotation_z_planar_block_is_2d_rotation():
    a = 0.7
    c, s = math.cos(a), math.sin(a)
    assert np.array_equal(rotation_z(a)[:2, :2], [[c, -s], [s, c]])


@pytest.mark.parametrize("rot", [rotation_z, rotation_y])
def test_rotations_orthonormal_on_grid(rot):
    for a in np.linspace(-2 * math.pi, 2 * math.pi, 1000):
        r = rot(a)
        assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12
        assert abs(np.linalg.det(r) - 1.0) < 1e-12
        assert np.max(np.abs(rot(-a) - r.T)) < 1e-12


def test_avoidance_angle_examples():
    assert avoidance_angle(2.0, 1.0, 2.0) == 0.0
    assert avoidance_angle(1.5, 1.0, 2.0) == pytest.approx(math.pi / 4, abs=1e-15)
    assert avoidance_angle(3.0, 1.0, 2.0) == 0.0


def test_avoidance_angle_boundaries():
    assert avoidance_angle(1.0, 1.0, 2.0) == 0.0
    assert avoidance_angle(0.5, 1.0, 2.0) == 0.0
    assert avoidance_angle(1.0 + 1e-12, 1.0, 2.0) == pytest.approx(math.pi / 2, abs=1e-11)
    assert avoidance_angle(2.0 - 1e-12, 1.0, 2.0) == pytest.approx(0.0, abs=1e-11)


@pytest.mark.parametrize("r_s,r_d", [(2.0, 2.0), (3.0, 2.0)])
def test_avoidance_angle_rejects_bad_ranges(r_s, r_d):
    with pytest.raises(InvalidRangeError):
        avoidance_angle(1.5, r_s, r_d)


@given(st.floats(1.0, 2.0), st.floats(1.0, 2.0))
def test_avoidance_angle_monotone_and_bounded(d1, d2):
    a1, a2 = avoidance_angle(d1, 1.0, 2.0), avoidance_angle(d2, 1.0, 2.0)
    assert 0.0 <= a1 <= math.pi / 2
    lo, hi = sorted((d1, d2))
    if 1.0 < lo:
        assert avoidance_angle(lo, 1.0, 2.0) >= avoidance_angle(hi, 1.0, 2.0)


def test_angle_between_examples():
    assert angle_between([1, 0, 0], [1, 0, 0]) == 0.0
    assert angle_between([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2, abs=1e-15)
    assert angle_between([1, 0, 0], [1, 1, 0]) == pytest.approx(math.pi / 4, abs=1e-15)


def test_angle_between_clamps_drift():
    v = np.array([0.1, 0.2, 0.3])
    assert angle_between(v, 3 * v) == pytest.approx(0.0, abs=1e-7)
    assert angle_between(v, -v) == pytest.approx(math.pi)


def test_angle_between_zero_vector():
    with pytest.raises(ZeroVectorError):
        angle_between([0, 0, 0], [1, 0, 0])
    with pytest.raises(ZeroVectorError):
        angle_between([1, 0, 0], [1e-12, 0, 0])


@given(vec, vec, st.floats(0.01, 100.0))
def test_angle_between_symmetric_and_scale_invariant(a, b, s):
    ab = angle_between(a, b)
    assert 0.0 <= ab <= math.pi
    assert angle_between(b, a) == pytest.approx(ab, abs=1e-12)
    assert angle_between(np.multiply(a, s), b) == pytest.approx(ab, abs=1e-6)


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert wrap_angle(0.25) == 0.25


def test_as_vec_rejects_non_finite():
    assert as_vec([1, 2, 3]).dtype == float
    with pytest.raises(ValueError):
        as_vec([0, float("nan"), 0])
