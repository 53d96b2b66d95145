"""Human-driver baseline (IDM) and synthetic leader trajectories."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import A_MAX, A_MIN, DT, Trajectory, clamp_accel

KMH = 1 / 3.6


@dataclass(frozen=True)
class IdmParams:
    """Intelligent Driver Model parameters.

    Attributes
    ----------
    v0 : float
        desired speed, m/s
    T : float
        safe time gap, s
    s0 : float
        minimum (jam) gap, m
    a : float
        maximum acceleration, m/s^2
    b : float
        comfortable deceleration, m/s^2
    delta : float
        acceleration exponent
    """

    v0: float = 25.0
    T: float = 1.5
    s0: float = 2.0
    a: float = 2.0
    b: float = 2.0
    delta: float = 4.0

    def __post_init__(self):
        if min(self.v0, self.T, self.s0, self.a, self.b, self.delta) <= 0:
            raise ValueError("IDM parameters must be positive")

    def with_time_gap(self, T: float) -> "IdmParams":
        return IdmParams(self.v0, T, self.s0, self.a, self.b, self.delta)

    def to_dict(self) -> dict:
        return asdict(self)


def idm_desired_gap(v: float, dv: float, p: IdmParams) -> float:
    """Dynamic desired gap; ``dv`` is leader minus ego speed."""
    return p.s0 + max(0.0, v * p.T - v * dv / (2.0 * math.sqrt(p.a * p.b)))


def idm_accel(v: float, dv: float, gap: float, p: IdmParams, clamp: bool = True) -> float:
    if gap <= 0:
        raise ValueError("IDM acceleration is undefined for gap <= 0")
    s_star = idm_desired_gap(v, dv, p)
    acc = p.a * (1.0 - (v / p.v0) ** p.delta - (s_star / gap) ** 2)
    return clamp_accel(acc) if clamp else acc


def idm_equilibrium_gap(v: float, p: IdmParams) -> float:
    """Steady-state gap at speed ``v`` behind an equally fast leader."""
    if v < 0:
        raise ValueError("speed must be non-negative")
    if v >= p.v0:
        raise ValueError("no finite equilibrium gap at or above the desired speed")
    return (p.s0 + v * p.T) / math.sqrt(1.0 - (v / p.v0) ** p.delta)


def idm_equilibrium_flow(v: float, p: IdmParams) -> float:
    """Equilibrium flow (veh/h) of a homogeneous zero-length IDM stream."""
    return 3600.0 * v / idm_equilibrium_gap(v, p)


def idm_capacity(p: IdmParams, n: int = 20001) -> tuple:
    """Maximum equilibrium flow over ``[0, v0)`` by dense search, refined.

    Returns ``(capacity veh/h, speed m/s, density veh/km)``.
    """
    from scipy.optimize import minimize_scalar

    vs = np.linspace(0.0, p.v0, n, endpoint=False)
    q = np.array([idm_equilibrium_flow(v, p) for v in vs])
    i = int(np.argmax(q))
    lo, hi = vs[max(i - 1, 0)], vs[min(i + 1, n - 1)]
    res = minimize_scalar(lambda v: -idm_equilibrium_flow(v, p), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10})
    v_opt = float(res.x)
    return -float(res.fun), v_opt, 1000.0 / idm_equilibrium_gap(v_opt, p)


@dataclass(frozen=True)
class OuLeaderConfig:
    """Phase-wise Ornstein-Uhlenbeck leader speed profile.

    Speeds are in km/h for the phase grid and m/s for the process.
    ``mode="random"`` draws each phase target uniformly from the grid;
    ``mode="staircase"`` climbs from standstill to ``v_max`` and back in
    random multiples of ``speed_step``.
    """

    v_min: float = 0.0  # km/h
    v_max: float = 90.0  # km/h
    speed_step: float = 5.0  # km/h
    phase_duration_range: tuple = (20.0, 60.0)  # s
    theta: float = 0.5  # 1/s
    sigma_ou: float = 0.5  # m/s per sqrt(s)
    seed: int = 0
    total_duration: float = 900.0  # s
    dt: float = DT
    mode: str = "random"
    v_init: Optional[float] = 0.0  # km/h; None starts at the first target
    max_step_multiple: int = 3
    targets: Optional[tuple] = None  # km/h, explicit phase targets

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be below v_max")
        span = (self.v_max - self.v_min) / self.speed_step
        if abs(span - round(span)) > 1e-9:
            raise ValueError("speed_step must divide the speed range")
        lo, hi = self.phase_duration_range
        if not 0 < lo <= hi:
            raise ValueError("phase durations must be positive")
        if self.mode not in ("random", "staircase"):
            raise ValueError(f"unknown leader mode {self.mode!r}")
        object.__setattr__(self, "phase_duration_range", (float(lo), float(hi)))
        if self.targets is not None:
            object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))

    @property
    def speed_grid(self) -> np.ndarray:
        n = int(round((self.v_max - self.v_min) / self.speed_step))
        return self.v_min + self.speed_step * np.arange(n + 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phase_duration_range"] = list(self.phase_duration_range)
        if self.targets is not None:
            d["targets"] = list(self.targets)
        return d


def _phase_targets(cfg: OuLeaderConfig, rng: np.random.Generator, n_phases: int) -> list:
    grid = cfg.speed_grid
    if cfg.targets is not None:
        return [cfg.targets[i % len(cfg.targets)] for i in range(n_phases)]
    if cfg.mode == "random":
        return [float(g) for g in rng.choice(grid, size=n_phases)]
    out, k, up = [], 0, True
    top = len(grid) - 1
    while len(out) < n_phases:
        # staircase: move by 1..max_step_multiple grid steps, bounce at ends
        jump = int(rng.integers(1, cfg.max_step_multiple + 1))
        k = k + jump if up else k - jump
        if k >= top:
            k, up = top, False
        elif k <= 0:
            k, up = 0, True
        out.append(float(grid[k]))
    return out


def generate_ou_leader(cfg: OuLeaderConfig) -> Trajectory:
    """Generate a seeded leader trajectory.

    Within each phase the speed follows
    ``dv = theta*(v_target - v)*dt + sigma_ou*dW`` (Euler-Maruyama), with the
    per-step change limited to the acceleration bounds and the speed kept
    in ``[0, v_max]``.
    """
    rng = np.random.default_rng(cfg.seed)
    dt = cfg.dt
    n_steps = int(round(cfg.total_duration / dt))
    lo, hi = cfg.phase_duration_range
    max_phases = int(math.ceil(cfg.total_duration / lo)) + 1
    targets = _phase_targets(cfg, rng, max_phases)
    durations = rng.uniform(lo, hi, size=max_phases)
    noise = rng.standard_normal(n_steps)

    v_top = cfg.v_max * KMH
    target_of_step = np.empty(n_steps)
    bounds = np.concatenate(([0.0], np.cumsum(durations)))
    t = np.arange(n_steps) * dt
    phase = np.searchsorted(bounds, t, side="right") - 1
    target_of_step[:] = np.asarray(targets)[phase] * KMH

    v = np.empty(n_steps)
    v[0] = target_of_step[0] if cfg.v_init is None else cfg.v_init * KMH
    sq = math.sqrt(dt)
    for k in range(n_steps - 1):
        dv = cfg.theta * (target_of_step[k] - v[k]) * dt + cfg.sigma_ou * sq * noise[k]
        dv = min(max(dv, A_MIN * dt), A_MAX * dt)
        v[k + 1] = min(max(v[k] + dv, 0.0), v_top)
    return Trajectory.from_speeds(v, dt)


def constant_speed_leader(speed: float, duration: float, dt: float = DT,
                          x0: float = 0.0) -> Trajectory:
    n = int(round(duration / dt))
    return Trajectory.from_speeds(np.full(n, float(speed)), dt, x0=x0,
                                  a=np.zeros(n))


def piecewise_speed_leader(speeds: Sequence[float], durations: Sequence[float],
                           dt: float = DT) -> Trajectory:
    """Leader holding each speed (m/s) for the given duration, instant switches."""
    v = np.concatenate([np.full(int(round(d / dt)), float(s)) for s, d in zip(speeds, durations)])
    return Trajectory.from_speeds(v, dt)
