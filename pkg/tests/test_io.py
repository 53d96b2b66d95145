import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixtraffic.dynamics import Trajectory
from mixtraffic.io import (FT_PER_M, CfCriteria, ParseReport, extract_cf_events,
                           parse_ngsim, read_event_index, read_manifest, read_trajectories,
                           split_train_test, write_event_index, write_ngsim, write_trajectories)
from mixtraffic.synthetic import synthetic_ngsim


HEADER = ["Vehicle_ID", "Frame_ID", "Local_Y", "v_Vel", "v_Acc", "Lane_ID", "Preceding", "v_Length"]


def _write(path, rows, header=HEADER):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _pair_rows(n=400, gap_ft=60.0, follower_lane=None, length_ft=15.0):
    """Leader 1 and follower 2 at 30 ft/s, ``n`` frames."""
    rows = []
    for f in range(1, n + 1):
        y = 3.0 * f
        rows.append([1, f, y + gap_ft, 30.0, 0.0, 1, 0, length_ft])
        lane = follower_lane(f) if follower_lane else 1
        rows.append([2, f, y, 30.0, 0.0, lane, 1, length_ft])
    return rows


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=20))
def test_trajectory_round_trip_bit_exact(tmp_path_factory, xs):
    d = tmp_path_factory.mktemp("traj")
    n = len(xs)
    tr = Trajectory(np.arange(n) * 0.1, np.array(xs), np.array(xs) / 7, np.array(xs) / 3, 0.1)
    p = write_trajectories(d / "a.csv", {"7": tr, 3: tr}, meta={"note": "x"})
    back = read_trajectories(p)
    assert set(back) == {"7", "3"}
    for b in back.values():
        assert np.array_equal(b.x, tr.x) and np.array_equal(b.a, tr.a) and np.array_equal(b.t, tr.t)
    man = read_manifest(p)
    assert man["meta"] == {"note": "x"} and man["units"]["v"] == "m/s"


def test_parse_units_and_time(tmp_path):
    p = _write(tmp_path / "n.csv", _pair_rows(20))
    veh = parse_ngsim(p)
    lead = veh[1]
    assert lead.trajectory.v[0] == pytest.approx(30.0 / FT_PER_M)
    assert lead.trajectory.t[:3] == pytest.approx([0.1, 0.2, 0.3])
    assert lead.length == pytest.approx(15.0 / FT_PER_M)


def test_parse_errors(tmp_path):
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(ValueError):
        parse_ngsim(tmp_path / "e.csv")
    with pytest.raises(ValueError):
        parse_ngsim(_write(tmp_path / "h.csv", []))
    with pytest.raises(ValueError, match="missing"):
        parse_ngsim(_write(tmp_path / "m.csv", [[1, 1, 0.0]], ["Vehicle_ID", "Frame_ID", "Local_Y"]))
    with pytest.raises(FileNotFoundError):
        parse_ngsim(tmp_path / "nope.csv")


def test_malformed_rows_skipped_and_gaps_split(tmp_path):
    rows = _pair_rows(50)
    rows[10][2] = "abc"
    rows.append([2, 51, "nan", 30.0, 0.0, 1, 1, 15.0])
    rows = [r for r in rows if not (r[0] == 1 and r[1] == 25)]
    rep = ParseReport()
    veh = parse_ngsim(_write(tmp_path / "b.csv", rows), report=rep)
    assert rep.skipped == 2
    assert 1 in rep.split_vehicles
    assert len(veh[1].frames) == 25  # frames 26..50
    assert np.all(np.diff(veh[1].frames) == 1)


def test_event_gap_uses_leader_length(tmp_path):
    veh = parse_ngsim(_write(tmp_path / "n.csv", _pair_rows(400)))
    (ev,) = extract_cf_events(veh)
    assert (ev.leader_id, ev.follower_id, ev.lane) == (1, 2, 1)
    assert ev.duration == pytest.approx(39.9)
    assert ev.gap() == pytest.approx(np.full(400, 45.0 / FT_PER_M))
    (ev2,) = extract_cf_events(veh, CfCriteria(subtract_length=False))
    assert ev2.gap()[0] == pytest.approx(60.0 / FT_PER_M)


def test_lane_change_boundary(tmp_path):
    # follower leaves the lane from frame 351 on
    veh = parse_ngsim(_write(tmp_path / "n.csv", _pair_rows(600, follower_lane=lambda f: 1 if f <= 350 else 2)))
    (ev,) = extract_cf_events(veh)
    assert ev.t_end == pytest.approx(35.0)
    assert len(ev.follower) == len(ev.leader) == 350


def test_short_and_far_windows_dropped(tmp_path):
    veh = parse_ngsim(_write(tmp_path / "s.csv", _pair_rows(250)))
    assert extract_cf_events(veh) == []
    veh = parse_ngsim(_write(tmp_path / "f.csv", _pair_rows(400, gap_ft=500.0)))
    assert extract_cf_events(veh) == []


def test_intruder_splits_event(tmp_path):
    rows = _pair_rows(800)
    # vehicle 3 sits between the pair for frames 400-499
    rows += [[3, f, 3.0 * f + 30.0, 30.0, 0.0, 1, 1, 15.0] for f in range(400, 500)]
    veh = parse_ngsim(_write(tmp_path / "i.csv", rows))
    evs = [e for e in extract_cf_events(veh) if e.follower_id == 2]
    assert [(e.t_start, e.t_end) for e in evs] == [pytest.approx((0.1, 39.9)), pytest.approx((50.0, 80.0))]


def test_split_sizes_and_determinism():
    items = list(range(10))
    tr, te = split_train_test(items, 0.7, seed=3)
    assert len(tr) == 7 and len(te) == 3
    assert sorted(tr + te) == items
    assert split_train_test(items, 0.7, seed=3) == (tr, te)
    with pytest.raises(ValueError):
        split_train_test([], 0.7)


def test_synthetic_fixture_round_trip(tmp_path):
    veh = synthetic_ngsim(seed=1, n_lanes=1, duration=120.0)
    p = write_ngsim(tmp_path / "syn.csv", veh)
    back = parse_ngsim(p)
    assert set(back) == set(veh)
    for vid in veh:
        assert np.allclose(back[vid].trajectory.x, veh[vid].trajectory.x, atol=1e-3)
    ev = extract_cf_events(back)
    assert ev and all(e.duration >= 30.0 for e in ev)
    assert all(np.all(e.gap() > 0) and np.all(e.gap() <= 120.0) for e in ev)
    idx = write_event_index(tmp_path / "ev.csv", ev)
    assert read_event_index(idx) == [e.index_row() for e in ev]
