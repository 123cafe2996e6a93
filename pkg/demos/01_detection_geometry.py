"""Which obstacles does a UAV see, and how hard does it turn away?

Walks one UAV past a sphere and prints the detection flag and the
avoidance angle at a few stand-off distances.
"""
import math

import numpy as np

from swarmsim.control import ObstacleView, UavParams, detect_planar, detect_spatial
from swarmsim.geometry import avoidance_angle, rotation_y, rotation_z

params = UavParams()  # r_s = 1 m, r_d = 2 m, 60 degree half-angle
sphere = ObstacleView(np.array([0.0, 0.0, 5.0]), 1.0, np.zeros(3))

print("gap to surface | planar | spatial | avoidance angle (deg)")
for gap in (0.5, 1.2, 1.6, 1.99, 2.5):
    p = np.array([-(1.0 + gap), 0.0, 5.0])
    seen_2d = detect_planar(p, 0.0, sphere, params)  # flying along +x
    seen_3d = detect_spatial(p, np.array([1.0, 0, 0]), sphere, params)
    ang = avoidance_angle(gap, params.r_s, params.r_d) if gap > params.r_s else math.pi / 2
    print(f"{gap:14.2f} | {seen_2d!s:6} | {seen_3d!s:7} | {math.degrees(ang):6.1f}")

# a sphere off to the side at 70 degrees is outside the sensing cone
side = rotation_z(math.radians(70)) @ np.array([2.5, 0, 0])
print("70 deg off-axis seen:", detect_planar(np.zeros(3), 0.0, ObstacleView(side, 1.0, np.zeros(3)), params))

# the spatial maneuver pitches about y after the yaw about z
R = rotation_y(0.3) @ rotation_z(0.4)
print("R^T R == I:", np.allclose(R.T @ R, np.eye(3)), " det:", round(np.linalg.det(R), 12))
