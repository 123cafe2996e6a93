"""Run the three built-in missions and summarize the safety numbers.

Distances are reported from the first tick where the swarm has reached its
formation, since every mission starts with the UAVs packed in a 1 m square.
"""
import time

import numpy as np

from swarmsim.metrics import clearance_series, formation_error, min_distance_series, violation_count
from swarmsim.scenario import build_case
from swarmsim.sim import run_simulation

for case in (1, 2, 3):
    settings = build_case(case).to_settings()
    t0 = time.perf_counter()
    log = run_simulation(settings, seed=4)
    took = time.perf_counter() - t0
    fe = formation_error(log)
    k0 = int(np.argmax(fe < 0.5))
    nearest = min_distance_series(log, 0, k0)
    line = (f"case {case}: {log.n_agents} UAVs, {log.times[-1]:.0f} s simulated in {took:.1f} s; "
            f"formed at t = {log.times[k0]:.1f} s; UAV1 nearest neighbour {nearest.min_distance:.2f} m; "
            f"r_s violations after forming {violation_count(log, settings.params.r_s, k0)}")
    if settings.obstacles:
        cl = clearance_series(log, settings.obstacles, settings.buildings)
        line += f"; closest sphere surface {cl.spheres.min():.2f} m"
    print(line)
    print("   phases:", " -> ".join(f"{e.kind[6:]}@{e.time:.0f}s" for e in log.events if e.kind.startswith("phase_")))
    if case == 3:
        det = log.detected > 0
        dz = np.abs(log.positions[:, :, 2] - log.barrier_centers[:, None, 2])[det]
        print(f"   largest altitude change while avoiding: {dz.max():.2f} m")
