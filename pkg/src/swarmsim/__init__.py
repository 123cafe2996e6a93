"""Deterministic multi-UAV swarm simulation: CVT formation control with
inter-agent collision avoidance and planar / 3D potential-field obstacle
avoidance."""

from .control import GainSet, ManeuverMode, ObstacleView, UavParams
from .cvt import UNIFORM, BarrierRegion, DensityField, LloydConfig, lloyd_run
from .scenario import ScenarioSpec, build_case, load_spec
from .sim import Building, MovingObstacle, SimSettings, run_simulation
from .trajlog import TrajectoryLog

__version__ = "0.1.0"

__all__ = [
    "BarrierRegion",
    "Building",
    "DensityField",
    "GainSet",
    "LloydConfig",
    "ManeuverMode",
    "MovingObstacle",
    "ObstacleView",
    "ScenarioSpec",
    "SimSettings",
    "TrajectoryLog",
    "UNIFORM",
    "UavParams",
    "build_case",
    "load_spec",
    "lloyd_run",
    "run_simulation",
]
