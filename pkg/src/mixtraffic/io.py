"""Trajectory files, NGSIM-format ingestion and car-following event extraction.

Internal trajectory files are CSV with columns ``vehicle_id, t, x, v, a``
(s, m, m/s, m/s^2) and a JSON manifest next to them
(``<name>.manifest.json``). Floats are written with ``repr`` so a write
and read round-trips bit-exactly.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .dynamics import DT, Trajectory

log = logging.getLogger(__name__)

FT_PER_M = 3.28084
TRAJ_COLUMNS = ("vehicle_id", "t", "x", "v", "a")
UNITS = {"t": "s", "x": "m", "v": "m/s", "a": "m/s^2"}
NGSIM_COLUMNS = ("Vehicle_ID", "Frame_ID", "Local_Y", "v_Vel", "v_Acc", "Lane_ID", "Preceding")
NGSIM_OPTIONAL = ("v_Length",)
EVENT_COLUMNS = ("leader_id", "follower_id", "lane", "t_start", "t_end")


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def write_trajectories(path, trajs: Mapping, meta: Optional[dict] = None,
                       vehicles: Optional[Mapping] = None) -> Path:
    """Write ``{vehicle_id: Trajectory}`` to ``path`` plus its manifest.

    ``vehicles`` optionally maps ids to per-vehicle tags (controller,
    time gap); ``meta`` is copied into the manifest verbatim.
    """
    if not trajs:
        raise ValueError("nothing to write")
    dts = {tr.dt for tr in trajs.values()}
    if len(dts) != 1:
        raise ValueError("all trajectories in one file must share dt")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJ_COLUMNS)
        for vid, tr in trajs.items():
            for row in zip(tr.t, tr.x, tr.v, tr.a):
                w.writerow([vid, *(repr(float(c)) for c in row)])
    manifest = {"dt": dts.pop(), "units": UNITS, "columns": list(TRAJ_COLUMNS),
                "vehicle_ids": [str(v) for v in trajs],
                "vehicles": {str(k): dict(v) for k, v in (vehicles or {}).items()},
                "meta": meta or {}}
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def read_manifest(path) -> dict:
    return json.loads(manifest_path(path).read_text())


def read_trajectories(path) -> Dict[str, Trajectory]:
    """Inverse of :func:`write_trajectories`; ids come back as strings."""
    path = Path(path)
    mp = manifest_path(path)
    dt = json.loads(mp.read_text())["dt"] if mp.exists() else None
    cols: Dict[str, List[List[float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRAJ_COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(TRAJ_COLUMNS)}")
        for row in reader:
            cols.setdefault(row[0], []).append([float(c) for c in row[1:]])
    out = {}
    for vid, rows in cols.items():
        arr = np.array(rows)
        if np.any(np.diff(arr[:, 0]) <= 0):
            raise ValueError(f"{path}: time is not increasing for vehicle {vid}")
        step = dt if dt is not None else float(arr[1, 0] - arr[0, 0])
        out[vid] = Trajectory(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], step)
    return out


@dataclass
class NgsimVehicle:
    """One vehicle's record: trajectory plus per-sample lane and leader ids."""

    vehicle_id: int
    trajectory: Trajectory
    lane: np.ndarray
    preceding: np.ndarray
    length: float = 0.0  # m

    @property
    def frames(self) -> np.ndarray:
        return np.round(self.trajectory.t / self.trajectory.dt).astype(np.int64)


@dataclass
class ParseReport:
    rows: int = 0
    skipped: int = 0
    split_vehicles: List[int] = field(default_factory=list)


def parse_ngsim(path, dt: float = DT, report: Optional[ParseReport] = None) -> Dict[int, NgsimVehicle]:
    """Read an NGSIM-layout CSV into per-vehicle records.

    Positions, speeds, accelerations and lengths are converted from feet
    to metres. Time is ``Frame_ID * dt``. Rows that fail to parse are
    skipped and counted in ``report``. A vehicle with missing frames
    keeps its longest contiguous run.
    """
    path = Path(path)
    report = report if report is not None else ParseReport()
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        missing = [c for c in NGSIM_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: missing required columns {missing}")
        has_len = "v_Length" in reader.fieldnames
        rows: Dict[int, list] = {}
        for rec in reader:
            report.rows += 1
            try:
                vid = int(rec["Vehicle_ID"])
                vals = (int(rec["Frame_ID"]), float(rec["Local_Y"]), float(rec["v_Vel"]),
                        float(rec["v_Acc"]), int(rec["Lane_ID"]), int(rec["Preceding"]),
                        float(rec["v_Length"]) if has_len else 0.0)
                if not all(np.isfinite(vals[1:4])):
                    raise ValueError
            except (TypeError, ValueError):
                report.skipped += 1
                continue
            rows.setdefault(vid, []).append(vals)
    if report.rows == 0:
        raise ValueError(f"{path}: no data rows")
    if report.skipped:
        log.warning("%s: skipped %d malformed rows", path, report.skipped)
    out = {}
    for vid, recs in rows.items():
        arr = np.array(sorted(recs, key=lambda r: r[0]), dtype=float)
        frames = arr[:, 0].astype(np.int64)
        _, first = np.unique(frames, return_index=True)
        arr, frames = arr[first], frames[first]
        breaks = np.flatnonzero(np.diff(frames) != 1) + 1
        if breaks.size:
            report.split_vehicles.append(vid)
            runs = np.split(np.arange(len(frames)), breaks)
            keep = max(runs, key=len)
            arr, frames = arr[keep], frames[keep]
        if len(frames) < 2:
            report.skipped += len(frames)
            continue
        traj = Trajectory(frames * dt, arr[:, 1] / FT_PER_M, arr[:, 2] / FT_PER_M,
                          arr[:, 3] / FT_PER_M, dt)
        out[vid] = NgsimVehicle(vid, traj, arr[:, 4].astype(int), arr[:, 5].astype(int),
                                float(np.median(arr[:, 6])) / FT_PER_M)
    return out


@dataclass(frozen=True)
class CfCriteria:
    min_duration: float = 30.0  # s
    max_gap: float = 120.0  # m
    subtract_length: bool = True


@dataclass
class CfEvent:
    leader_id: int
    follower_id: int
    lane: int
    t_start: float
    t_end: float
    leader: Trajectory
    follower: Trajectory

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def gap(self) -> np.ndarray:
        """Bumper-to-bumper gap as stored in the event (m)."""
        return self.gap_offset + self.leader.x - self.follower.x

    gap_offset: float = 0.0

    def index_row(self) -> Tuple:
        return (self.leader_id, self.follower_id, self.lane, self.t_start, self.t_end)


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Half-open index ranges of consecutive True values."""
    m = np.concatenate(([False], mask, [False])).astype(np.int8)
    d = np.diff(m)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def _slice(tr: Trajectory, i0: int, i1: int) -> Trajectory:
    return Trajectory(tr.t[i0:i1], tr.x[i0:i1], tr.v[i0:i1], tr.a[i0:i1], tr.dt)


def extract_cf_events(vehicles: Mapping[int, NgsimVehicle],
                      criteria: CfCriteria = CfCriteria()) -> List[CfEvent]:
    """Maximal windows in which a follower tracks one leader.

    At every sample of a window: the follower's preceding id is the
    leader, both share a lane, the gap lies in ``(0, max_gap]`` and no
    other vehicle in that lane sits between them. Windows shorter than
    ``min_duration`` are dropped; a lane change ends a window.
    """
    by_frame: Dict[int, Dict[int, Tuple[float, int]]] = {}
    for vid, veh in vehicles.items():
        for f, x, ln in zip(veh.frames, veh.trajectory.x, veh.lane):
            by_frame.setdefault(int(f), {})[vid] = (float(x), int(ln))
    events = []
    for fid, fol in sorted(vehicles.items()):
        frames = fol.frames
        for lid in sorted(set(int(p) for p in fol.preceding if p > 0)):
            lead = vehicles.get(lid)
            if lead is None:
                continue
            offset = -lead.length if criteria.subtract_length else 0.0
            lead_pos = {int(f): i for i, f in enumerate(lead.frames)}
            ok = np.zeros(len(frames), dtype=bool)
            for i, f in enumerate(frames):
                j = lead_pos.get(int(f))
                if j is None or fol.preceding[i] != lid or lead.lane[j] != fol.lane[i]:
                    continue
                xf = fol.trajectory.x[i]
                xl = lead.trajectory.x[j]
                gap = xl - xf + offset
                if not 0 < gap <= criteria.max_gap:
                    continue
                lane = fol.lane[i]
                if any(ln == lane and xf < x < xl
                       for v, (x, ln) in by_frame[int(f)].items() if v not in (fid, lid)):
                    continue
                ok[i] = True
            for i0, i1 in _runs(ok):
                # a lane change inside a run cannot happen (lane equality is per step)
                n = i1 - i0
                if (n - 1) * fol.trajectory.dt < criteria.min_duration:
                    continue
                j0 = lead_pos[int(frames[i0])]
                events.append(CfEvent(lid, fid, int(fol.lane[i0]),
                                      float(fol.trajectory.t[i0]), float(fol.trajectory.t[i1 - 1]),
                                      _slice(lead.trajectory, j0, j0 + n),
                                      _slice(fol.trajectory, i0, i1), offset))
    return events


def split_train_test(events: Sequence, ratio: float = 0.7, seed: int = 0):
    """Seeded shuffle then split; the train part gets ``round(ratio * n)``."""
    if len(events) == 0:
        raise ValueError("no events to split")
    if not 0 <= ratio <= 1:
        raise ValueError("ratio must lie in [0, 1]")
    perm = np.random.default_rng(seed).permutation(len(events))
    n_train = int(round(ratio * len(events)))
    return [events[i] for i in perm[:n_train]], [events[i] for i in perm[n_train:]]


def write_event_index(path, events: Iterable[CfEvent]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_COLUMNS)
        for ev in events:
            w.writerow(ev.index_row())
    return path


def read_event_index(path) -> List[Tuple[int, int, int, float, float]]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        return [(int(r["leader_id"]), int(r["follower_id"]), int(r["lane"]),
                 float(r["t_start"]), float(r["t_end"])) for r in reader]


def write_ngsim(path, vehicles: Mapping[int, NgsimVehicle]) -> Path:
    """Write records back out in NGSIM layout (feet)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NGSIM_COLUMNS + NGSIM_OPTIONAL)
        rows = []
        for vid, veh in vehicles.items():
            tr = veh.trajectory
            for k, f in enumerate(veh.frames):
                rows.append((int(f), vid, f"{tr.x[k] * FT_PER_M:.3f}", f"{tr.v[k] * FT_PER_M:.3f}",
                             f"{tr.a[k] * FT_PER_M:.3f}", int(veh.lane[k]), int(veh.preceding[k]),
                             f"{veh.length * FT_PER_M:.1f}"))
        rows.sort()
        for f, vid, y, v, a, ln, p, length in rows:
            w.writerow((vid, f, y, v, a, ln, p, length))
    return path


def write_platoon(out_dir, result, meta: Optional[dict] = None) -> Path:
    """One CSV per vehicle plus a manifest describing the platoon."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = [{"index": 0, "role": "leader", "file": "vehicle_000.csv"}]
    write_trajectories(out_dir / "vehicle_000.csv", {"0": result.leader})
    for i, f in enumerate(result.followers, start=1):
        name = f"vehicle_{i:03d}.csv"
        write_trajectories(out_dir / name, {str(i): f.trajectory},
                           vehicles={str(i): {"controller": f.controller, "time_gap": f.time_gap}})
        entries.append({"index": i, "role": "follower", "file": name,
                        "controller": f.controller, "time_gap": f.time_gap,
                        "init_gap": f.init_gap})
    manifest = {"dt": result.leader.dt, "units": UNITS, "seed": result.seed,
                "vehicles": entries, "meta": meta or {},
                "collisions": [vars(e) for e in result.collision_events]}
    (out_dir / "platoon.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out_dir


def read_platoon(out_dir):
    from .platoon import CollisionEvent, FollowerRecord, PlatoonResult

    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / "platoon.json").read_text())
    trajs = [next(iter(read_trajectories(out_dir / e["file"]).values()))
             for e in manifest["vehicles"]]
    followers = [FollowerRecord(tr, e["controller"], e["time_gap"], e["init_gap"])
                 for tr, e in zip(trajs[1:], manifest["vehicles"][1:])]
    events = [CollisionEvent(**c) for c in manifest["collisions"]]
    return PlatoonResult(trajs[0], followers, events, manifest["seed"])
