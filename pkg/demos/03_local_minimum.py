"""Why the rotational potential matters.

A single UAV is pulled toward a target straight behind a sphere. With the
rotational gain switched off, push and pull cancel on one axis and it
hovers in front of the sphere; with it on, the UAV slides around.
"""
from swarmsim.scenario import local_minimum_case
from swarmsim.sim import run_simulation

for k_r in (0.0, 0.5):
    spec = local_minimum_case(k_r)
    log = run_simulation(spec, seed=1)
    x = log.positions[:, 0, 0]
    plane = spec.obstacles[0].center[0]
    past = (x > plane).nonzero()[0]
    when = f"passes the sphere at t = {log.times[past[0]]:.1f} s" if len(past) else "never passes in 60 s"
    print(f"k_r = {k_r}: furthest x = {x.max():+.2f} m, {when}")
