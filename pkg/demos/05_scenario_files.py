"""Scenario files: write one, tweak it with overrides, run it from the CLI.

Output lands in ./demo_out (override with SWARMSIM_OUT).
"""
import json
import os
import pathlib

from swarmsim.cli import main
from swarmsim.scenario import ScenarioError, dump_spec, load_spec, loads_spec

out = pathlib.Path(os.environ.get("SWARMSIM_OUT", "demo_out"))
out.mkdir(exist_ok=True)

path = out / "small.json"
path.write_text(json.dumps({"agents": 4, "duration": 20, "barrier": {"half_extents": [3, 2, 0]}}))
spec = load_spec(path, overrides=["gains.k_r=0.8"])
print("loaded:", spec.agents, "agents,", spec.duration, "s, k_r =", spec.gains.k_r)
print("digest:", spec.digest()[:12])

try:
    loads_spec('{"agents": 0, "dt": -1, "uav": {"r_s": 2.5}}')
except ScenarioError as err:
    print("rejected with", len(err.problems), "problems:")
    for p in err.problems:
        print("  -", p)

(out / "round_trip.json").write_text(dump_spec(spec))
main(["run", "--scenario", str(path), "--seed", "2", "--out", str(out / "run")])
main(["plot", str(out / "run")])
print(sorted(p.name for p in (out / "run").iterdir()))
