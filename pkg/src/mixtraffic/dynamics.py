"""Longitudinal car-following kinematics.

State is the follower's view of its leader: own speed, relative speed
(leader minus ego), bumper-to-bumper gap and the safe time gap the
driver is configured with.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, NamedTuple

import numpy as np

A_MIN = -4.0  # m/s^2, emergency braking on dry road
A_MAX = 2.0  # m/s^2, comfortable acceleration
DT = 0.1  # s, 10 Hz


@dataclass(frozen=True)
class KinematicState:
    """Car-following observation ``(v, dv, gap, T)``.

    Attributes
    ----------
    v : float
        ego speed, m/s (never negative)
    dv : float
        leader speed minus ego speed, m/s
    gap : float
        bumper-to-bumper spacing, m
    time_gap : float
        safe time gap, s
    """

    v: float
    dv: float
    gap: float
    time_gap: float

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"speed must be non-negative, got {self.v}")
        if not self.time_gap > 0:
            raise ValueError(f"time gap must be positive, got {self.time_gap}")

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.dv, self.gap, self.time_gap])


def clamp_accel(a: float, a_min: float = A_MIN, a_max: float = A_MAX) -> float:
    return min(max(a, a_min), a_max)


def step(state: KinematicState, accel: float, leader_v_next: float,
         dt: float = DT) -> KinematicState:
    """Advance one time step.

    Speed is integrated with the (clamped) acceleration and floored at
    zero. The gap is advanced with the relative speed *before* the step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = clamp_accel(accel)
    v_next = max(0.0, state.v + a * dt)
    return replace(state, v=v_next, dv=leader_v_next - v_next,
                   gap=state.gap + state.dv * dt)


def time_to_collision(state: KinematicState) -> float:
    """Gap over closing speed; ``inf`` when the gap is not shrinking."""
    if state.gap <= 0:
        raise ValueError("time to collision is undefined for gap <= 0")
    if state.dv >= 0:
        return math.inf
    return state.gap / -state.dv


def jerk(a_curr: float, a_prev: float, dt: float = DT) -> float:
    if dt <= 0:
        raise ValueError("dt must be positive")
    return (a_curr - a_prev) / dt


def detect_collision(state) -> bool:
    """True when the gap (a state or a bare number, m) is non-positive."""
    gap = state.gap if isinstance(state, KinematicState) else float(state)
    return bool(gap <= 0)


class TrajectorySample(NamedTuple):
    t: float
    x: float
    v: float
    a: float


class Trajectory:
    """Uniformly sampled longitudinal trajectory of one vehicle.

    Stored column-wise as numpy arrays; ``samples`` gives row access.

    Parameters
    ----------
    t, x, v, a : array_like
        time (s), position (m), speed (m/s) and acceleration (m/s^2)
    dt : float
        sampling interval, s
    """

    __slots__ = ("t", "x", "v", "a", "dt")

    def __init__(self, t, x, v, a, dt: float = DT):
        self.t = np.asarray(t, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.v = np.asarray(v, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.dt = float(dt)
        n = len(self.t)
        if not (len(self.x) == len(self.v) == len(self.a) == n):
            raise ValueError("trajectory columns differ in length")
        if n < 2:
            raise ValueError("a trajectory needs at least 2 samples")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not np.all(np.abs(np.diff(self.t) - self.dt) <= 1e-9 * max(1.0, abs(self.t[-1]))):
            raise ValueError("samples are not uniformly spaced at dt")
        for col in (self.t, self.x, self.v, self.a):
            if not np.all(np.isfinite(col)):
                raise ValueError("trajectory contains non-finite values")

    @classmethod
    def from_speeds(cls, v, dt: float = DT, x0: float = 0.0, t0: float = 0.0,
                    a=None) -> "Trajectory":
        """Build a trajectory from a speed series.

        Positions use the same explicit rule as the gap update in
        :func:`step`, ``x[k+1] = x[k] + v[k]*dt``, so gaps computed from
        positions and gaps integrated from speeds agree exactly.
        """
        v = np.asarray(v, dtype=float)
        x = x0 + np.concatenate(([0.0], np.cumsum(v[:-1]) * dt))
        if a is None:
            a = np.append(np.diff(v) / dt, 0.0)
        t = t0 + np.arange(len(v)) * dt
        return cls(t, x, v, a, dt)

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (self.dt == other.dt and len(self) == len(other)
                and all(np.array_equal(getattr(self, c), getattr(other, c))
                        for c in ("t", "x", "v", "a")))

    def __repr__(self) -> str:
        return f"Trajectory(n={len(self)}, dt={self.dt}, t=[{self.t[0]:g}, {self.t[-1]:g}])"

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def samples(self) -> Iterator[TrajectorySample]:
        for row in zip(self.t, self.x, self.v, self.a):
            yield TrajectorySample(*map(float, row))

    def head(self, n: int) -> "Trajectory":
        return Trajectory(self.t[:n], self.x[:n], self.v[:n], self.a[:n], self.dt)
