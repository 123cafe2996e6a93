"""Spreading generators over a barrier with sampled Lloyd iterations.

Prints the coverage cost as the points settle, then the final layout.
"""
import numpy as np

from swarmsim.cvt import UNIFORM, BarrierRegion, DensityField, LloydConfig, coverage_cost, lloyd_iterations, sample_region

region = BarrierRegion(center=(0, 0, 5), half_extents=(8, 3.5, 0))
cfg = LloydConfig(n=8, seed=3)
judge = sample_region(region, UNIFORM, 50_000, np.random.default_rng(99))

for step in lloyd_iterations(region, UNIFORM, cfg):
    if step.iteration in (1, 2, 5, 10, 25, 50, 100, 200):
        print(f"iter {step.iteration:3d}  cost {coverage_cost(step.points, region, UNIFORM, judge):.4f}"
              f"  largest move {step.movement:.3f} m")

print("final generators (x, y):")
print(np.round(step.points[np.lexsort(step.points.T[::-1])][:, :2], 2))

# a non-uniform density pulls points toward the front edge
front = DensityField(lambda q: 0.2 + 0.8 * (q[:, 0] + 8) / 16, bound=1.0)
pts = np.array([s.points for s in lloyd_iterations(region, front, cfg)][-1])
print("mean x, uniform vs front-weighted:", round(step.points[:, 0].mean(), 2), round(pts[:, 0].mean(), 2))
