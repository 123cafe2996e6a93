import json

import numpy as np
import pytest

from swarmsim.metrics import (
    formation_error,
    min_distance_series,
    obstacle_track,
    pairwise_min_distance,
    phase_intervals,
    report,
    violation_count,
)
from swarmsim.sim import Building, MovingObstacle
from swarmsim.trajlog import TrajectoryLog


def make_log(positions, phases=None, targets=None):
    pos = np.asarray(positions, dtype=float)
    k, n = pos.shape[:2]
    return TrajectoryLog(0.1, np.arange(k) * 0.1, pos, np.zeros_like(pos), np.zeros_like(pos),
                         np.zeros((k, n), int), phases or ["deploy"] * k, targets=targets)


def test_distance_series_minimum_and_time():
    pos = [[[0, 0, 0], [3, 0, 0], [0, 4, 0]], [[0, 0, 0], [2, 0, 0], [0, 4, 0]], [[0, 0, 0], [3, 0, 0], [0, 1.5, 0]]]
    ds = min_distance_series(make_log(pos), 0)
    assert ds.min_distance == 1.5 and ds.min_time == pytest.approx(0.2) and ds.min_agent == 2
    assert list(ds.others) == [1, 2]
    assert pairwise_min_distance(make_log(pos)) == pytest.approx(1.5)


def test_violation_count_inclusive():
    pos = [[[0, 0, 0], [1, 0, 0], [5, 0, 0]], [[0, 0, 0], [0.5, 0, 0], [0.9, 0, 0]]]
    assert violation_count(make_log(pos), 1.0) == 1 + 3
    assert violation_count(make_log(pos), 1.0, start_tick=1) == 3


def test_formation_error_and_phases():
    pos = np.zeros((3, 2, 3))
    tg = np.zeros((3, 2, 3))
    tg[1, 1] = [0, 0.5, 0]
    log = make_log(pos, ["deploy", "corridor", "corridor"], tg)
    assert np.allclose(formation_error(log), [0, 0.5, 0])
    assert phase_intervals(log) == [
        {"phase": "deploy", "start": 0.0, "end": 0.0},
        {"phase": "corridor", "start": 0.1, "end": 0.2},
    ]
    with pytest.raises(ValueError):
        formation_error(make_log(pos))


def test_obstacle_track_replays_activation():
    ob = MovingObstacle((0, 0, 0), 1.0, (1, 0, 0), 0.2)
    track = obstacle_track([ob], 5, 0.1)
    assert np.allclose(track[:, 0, 0], [0, 0, 0, 0.1, 0.2])


def test_report_single_agent_notice():
    rep = report(make_log(np.zeros((2, 1, 3))), 0)
    assert rep["distance"] is None and "single agent" in rep["notice"]
    assert rep["pairwise_min_distance"] is None and rep["violations"] == 0
    json.dumps(rep)


def test_report_sections():
    pos = [[[0, 0, 5], [3, 0, 5]], [[0, 0, 5], [0.8, 0, 5]]]
    rep = report(make_log(pos), 1, [MovingObstacle((0, 3, 5), 1.0)], [Building((10, -1, 0), (12, 1, 10))])
    assert rep["distance"]["min"] == pytest.approx(0.8) and rep["distance"]["other_agent"] == 0
    assert rep["violations"] == 1
    assert rep["clearance"]["spheres"] == pytest.approx(2.0)  # agent 0 is 3 m from the center
    assert rep["clearance"]["buildings"] == pytest.approx(7.0)
    assert rep["clearance"]["min"] == rep["clearance"]["spheres"]
    with pytest.raises(ValueError):
        report(make_log(pos), 5)
