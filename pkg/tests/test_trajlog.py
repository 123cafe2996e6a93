import numpy as np
import pytest

from swarmsim.trajlog import (
    TRAJECTORY_COLUMNS,
    CorruptLogError,
    Event,
    LogRecorder,
    events_csv_text,
    read_events_csv,
    read_trajectory_csv,
    trajectory_csv_text,
    write_events_csv,
    write_trajectory_csv,
)


def small_log():
    rec = LogRecorder(0.1, 2)
    r = np.random.default_rng(0)
    for k in range(3):
        rec.record(k * 0.1, r.normal(size=(2, 3)), r.normal(size=(2, 3)), r.normal(size=(2, 3)),
                   [k, 0], "deploy" if k < 2 else "corridor", np.zeros((2, 3)), np.zeros(3), np.ones(3),
                   np.zeros((0, 3)))
    rec.event(1, 0.1, "safety_violation", [0, 1])
    return rec.finish()


def test_header_and_row_count():
    text = trajectory_csv_text(small_log())
    lines = text.splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 1 + 3 * 2


def test_round_trip_exact(tmp_path):
    log = small_log()
    path = tmp_path / "t.csv"
    write_trajectory_csv(log, path)
    back = read_trajectory_csv(path)
    for name in ("times", "positions", "velocities", "controls", "detected"):
        assert np.array_equal(getattr(back, name), getattr(log, name))
    assert back.phases == log.phases
    assert trajectory_csv_text(back) == path.read_text()
    assert not (tmp_path / "t.csv.tmp").exists()


def test_events_round_trip(tmp_path):
    log = small_log()
    path = tmp_path / "e.csv"
    write_events_csv(log.events, path)
    assert read_events_csv(path) == [Event(1, 0.1, "safety_violation", (0, 1))]
    assert events_csv_text([]).strip() == "tick,time,kind,ids"


def test_shortest_round_trip_floats():
    rec = LogRecorder(0.1, 1)
    rec.record(0.30000000000000004, [[0.1, 1e-300, -2.5]], np.zeros((1, 3)), np.zeros((1, 3)), [0],
               "deploy", np.zeros((1, 3)), np.zeros(3), np.ones(3), np.zeros((0, 3)))
    row = trajectory_csv_text(rec.finish()).splitlines()[1]
    assert row.startswith("0,0.30000000000000004,0,0.1,1e-300,-2.5,")


@pytest.mark.parametrize("mutate,needle", [
    (lambda L: L[:2] + [L[2].replace(",", ";", 1)] + L[3:], "line 3"),
    (lambda L: L[:4] + ["0,0.0,0,x,0,0,0,0,0,0,0,0,0,deploy"] + L[5:], "line 5"),
    (lambda L: ["tick,time"] + L[1:], "line 1"),
    (lambda L: L[:1], "no records"),
    (lambda L: L[:-1], "expected 6 rows"),
    (lambda L: [L[0], L[2], L[1]] + L[3:], "line 2"),
])
def test_corrupt_logs_named(tmp_path, mutate, needle):
    lines = trajectory_csv_text(small_log()).splitlines()
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(mutate(lines)) + "\n")
    with pytest.raises(CorruptLogError, match=needle):
        read_trajectory_csv(path)
