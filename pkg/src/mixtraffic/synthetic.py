"""Seeded synthetic traffic in NGSIM layout for tests and offline demos.

Each lane has a staircase leader and a string of IDM drivers with
random time gaps. Optionally one vehicle per lane changes out of its
lane halfway through, so that extraction has to cut windows.
"""
from __future__ import annotations

from typing import Dict, Sequence

import numpy as np

from .baselines import IdmParams, OuLeaderConfig, generate_ou_leader, idm_accel
from .dynamics import DT, Trajectory, clamp_accel
from .io import NgsimVehicle

VEHICLE_LENGTH = 4.5  # m
EXIT_LANE = 9

LANE_TARGETS = (
    (30.0, 55.0, 80.0, 90.0, 65.0, 85.0),
    (20.0, 60.0, 85.0, 70.0, 90.0, 45.0),
    (40.0, 70.0, 90.0, 55.0, 80.0, 60.0),
)


def _string(leader_v: np.ndarray, n: int, rng, dt: float, switch: int, changer: int):
    """Speeds and positions of a leader plus ``n`` IDM followers.

    Vehicle ``changer`` leaves the lane at step ``switch``; from then on
    its follower reacts to the vehicle ahead of it.
    """
    m = len(leader_v)
    V = np.empty((n + 1, m))
    X = np.empty((n + 1, m))
    V[0] = leader_v
    X[0] = 1000.0 + np.concatenate(([0.0], np.cumsum(leader_v[:-1]) * dt))
    params = [IdmParams(v0=27.0).with_time_gap(float(T)) for T in rng.uniform(1.0, 2.2, n)]
    gaps0 = rng.uniform(15.0, 35.0, n)
    ahead = np.tile(np.arange(-1, n), (m, 1))  # ahead[k, i] = index of vehicle i's leader
    for i in range(1, n + 1):
        V[i, 0] = leader_v[0]
        X[i, 0] = X[i - 1, 0] - gaps0[i - 1] - VEHICLE_LENGTH
        for k in range(m - 1):
            j = i - 1
            if changer is not None and j == changer and k >= switch:
                j = changer - 1
            ahead[k, i] = j
            gap = X[j, k] - X[i, k] - VEHICLE_LENGTH
            a = clamp_accel(idm_accel(V[i, k], V[j, k] - V[i, k], gap, params[i - 1]))
            V[i, k + 1] = max(0.0, V[i, k] + a * dt)
            X[i, k + 1] = X[i, k] + V[i, k] * dt
        ahead[m - 1, i] = ahead[m - 2, i]
    return V, X, ahead


def synthetic_ngsim(seed: int = 0, n_lanes: int = 2, n_followers: int = 5,
                    duration: float = 240.0, phase: float = 40.0, lane_change: bool = True,
                    dt: float = DT) -> Dict[int, NgsimVehicle]:
    """Vehicle records as :func:`mixtraffic.io.parse_ngsim` would return them."""
    if n_lanes > len(LANE_TARGETS):
        raise ValueError(f"at most {len(LANE_TARGETS)} lanes are defined")
    rng = np.random.default_rng(seed)
    out: Dict[int, NgsimVehicle] = {}
    vid = 1
    m = int(round(duration / dt))
    frames = np.arange(m) + 1
    for lane in range(1, n_lanes + 1):
        cfg = OuLeaderConfig(seed=seed * 100 + lane, total_duration=duration, dt=dt,
                             targets=LANE_TARGETS[lane - 1], phase_duration_range=(phase, phase),
                             v_init=None, sigma_ou=0.3)
        leader = generate_ou_leader(cfg)
        changer = 3 if lane_change and n_followers >= 4 else None
        switch = m // 2
        V, X, ahead = _string(leader.v, n_followers, rng, dt, switch, changer)
        ids = vid + np.arange(n_followers + 1)
        for i in range(n_followers + 1):
            lanes = np.full(m, lane)
            if changer is not None and i == changer:
                lanes[switch:] = EXIT_LANE
            prec = np.where(ahead[:, i] >= 0, ids[np.maximum(ahead[:, i], 0)], 0)
            if changer is not None and i == changer:
                prec[switch:] = 0
            a = np.append(np.diff(V[i]) / dt, 0.0)
            tr = Trajectory(frames * dt, X[i], V[i], a, dt)
            out[int(ids[i])] = NgsimVehicle(int(ids[i]), tr, lanes, prec.astype(int), VEHICLE_LENGTH)
        vid += n_followers + 1
    return out


def follower_ids(vehicles: Dict[int, NgsimVehicle]) -> Sequence[int]:
    return [v for v, rec in vehicles.items() if np.any(rec.preceding > 0)]
