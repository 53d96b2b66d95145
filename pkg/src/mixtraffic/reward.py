"""Per-step reward components for the car-following agent.

Every component is a plain function of scalars plus a
:class:`RewardConfig`; :func:`total_reward` combines them.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .dynamics import A_MAX, A_MIN, DT

COLLISION_PENALTY = -50.0


@dataclass(frozen=True)
class RewardWeights:
    w_ttc: float = 1.0
    w_eff: float = 1.0
    w_jerk: float = 1.0
    w_speed: float = 1.0
    w_fuel: float = 1.0
    w_collision: float = 1.0

    def __post_init__(self):
        vals = self.as_tuple()
        if not all(math.isfinite(w) for w in vals):
            raise ValueError("reward weights must be finite")
        if any(w < 0 for w in vals[:5]):
            raise ValueError("component weights must be non-negative")
        if self.w_collision <= 0:
            raise ValueError("collision weight must be positive")

    def as_tuple(self) -> tuple:
        return (self.w_ttc, self.w_eff, self.w_jerk, self.w_speed, self.w_fuel,
                self.w_collision)


@dataclass(frozen=True)
class RewardConfig:
    """Reward shaping constants.

    Attributes
    ----------
    ttc_threshold : float
        TTC below which the safety term is active, s
    s0 : float
        standstill gap used in the desired gap, m
    v_limit : float
        speed limit, m/s
    log_base_m : float
        logarithm base of the fuel-efficiency term
    sigma : float
        lognormal shape of the efficiency term (fixed at 1)
    """

    ttc_threshold: float = 4.0
    s0: float = 2.0
    v_limit: float = 25.0
    log_base_m: float = 10.0
    sigma: float = 1.0
    weights: RewardWeights = field(default_factory=RewardWeights)
    collision_penalty: float = COLLISION_PENALTY
    a_min: float = A_MIN
    a_max: float = A_MAX
    dt: float = DT

    def __post_init__(self):
        if self.ttc_threshold <= 0 or self.s0 <= 0 or self.v_limit <= 0:
            raise ValueError("ttc_threshold, s0 and v_limit must be positive")
        if self.log_base_m <= 1:
            raise ValueError("log base must exceed 1")
        if self.sigma != 1.0:
            raise ValueError("lognormal sigma is fixed at 1")
        if self.collision_penalty != COLLISION_PENALTY:
            raise ValueError("collision penalty is fixed at -50")
        if isinstance(self.weights, dict):
            object.__setattr__(self, "weights", RewardWeights(**self.weights))

    @property
    def max_jerk(self) -> float:
        return (self.a_max - self.a_min) / self.dt

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RewardBreakdown:
    f_ttc: float
    f_eff: float
    f_jerk: float
    f_speed: float
    f_fuel: float
    total: float
    collided: bool


def f_ttc(ttc: float, cfg: RewardConfig) -> float:
    if 0 <= ttc < cfg.ttc_threshold:
        return (ttc / cfg.ttc_threshold) ** 2 - 1.0
    return 0.0


def f_jerk(j: float, cfg: RewardConfig) -> float:
    ratio = min(abs(j) / cfg.max_jerk, 1.0)
    return -(ratio ** 0.25)


def desired_gap(v: float, time_gap: float, cfg: RewardConfig) -> float:
    return cfg.s0 + v * time_gap


def lognormal_pdf(s: float, mu: float, sigma: float) -> float:
    return math.exp(-(math.log(s) - mu) ** 2 / (2 * sigma ** 2)) / (s * sigma * math.sqrt(2 * math.pi))


def f_eff(gap: float, v: float, time_gap: float, cfg: RewardConfig) -> float:
    """Lognormal density at ``gap`` relative to its value at the desired gap.

    With ``mu = ln(S*) + sigma**2`` the density's mode sits at ``S*``, so
    the ratio peaks at exactly 1 there.
    """
    if gap <= 0:
        raise ValueError("efficiency reward needs a positive gap")
    s_star = desired_gap(v, time_gap, cfg)
    if s_star <= 0:
        raise ValueError("desired gap must be positive")
    mu = math.log(s_star) + cfg.sigma ** 2
    # the ratio is computed in log space; the two densities underflow
    # together for very large gaps
    log_ratio = (math.log(s_star) - math.log(gap)
                 - ((math.log(gap) - mu) ** 2 - (math.log(s_star) - mu) ** 2) / (2 * cfg.sigma ** 2))
    return math.exp(log_ratio)


def f_speed(v: float, cfg: RewardConfig) -> float:
    if v > cfg.v_limit:
        return -(((v - cfg.v_limit) / cfg.v_limit) ** 2)
    return 0.0


def f_fuel(distance: float, fuel_rate: float, cfg: RewardConfig) -> float:
    """Distance-per-fuel reward, ``log_m(D/r + 1) ** 5``."""
    return math.log(distance / fuel_rate + 1.0, cfg.log_base_m) ** 5


def total_reward(f_ttc_val: float, f_eff_val: float, f_jerk_val: float,
                 f_speed_val: float, f_fuel_val: float, collided: bool,
                 cfg: RewardConfig) -> RewardBreakdown:
    w = cfg.weights
    if collided:
        total = w.w_collision * cfg.collision_penalty
    else:
        total = (w.w_ttc * f_ttc_val + w.w_eff * f_eff_val + w.w_jerk * f_jerk_val
                 + w.w_speed * f_speed_val + w.w_fuel * f_fuel_val)
    return RewardBreakdown(f_ttc_val, f_eff_val, f_jerk_val, f_speed_val,
                           f_fuel_val, total, collided)
