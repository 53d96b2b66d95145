"""VT-CPFM-1 fuel consumption.

Resistance and driveline power use speed in km/h inside the formulas
(the 25.92 and 3600 constants are the km/h forms); callers pass m/s.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .dynamics import Trajectory

MS_TO_KMH = 3.6

# fuel-rate polynomial in driveline power (kW) -> L/s
ALPHA0 = 0.000341
ALPHA1 = 0.0000583
ALPHA2 = 0.000001


@dataclass(frozen=True)
class FuelParams:
    rho: float = 1.225  # kg/m^3, sea level at 15 C
    c_d: float = 0.3
    c_h: float = 0.85
    a_f: float = 2.015  # m^2
    g: float = 9.806  # m/s^2
    c_r: float = 1.750
    c1: float = 0.0328
    c2: float = 4.575
    mass: float = 2000.0  # kg
    eta_d: float = 0.92
    grade: float = 0.0

    def __post_init__(self):
        positive = (self.rho, self.c_d, self.c_h, self.a_f, self.g, self.c_r,
                    self.c1, self.c2, self.mass)
        if any(p <= 0 for p in positive):
            raise ValueError("fuel model parameters must be positive")
        if not 0 < self.eta_d <= 1:
            raise ValueError("driveline efficiency must be in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FuelRecord:
    bin_lo: float
    bin_hi: float
    liters: float
    km: float

    @property
    def efficiency(self) -> float:
        """km per liter, NaN for a bin without fuel."""
        return self.km / self.liters if self.liters > 0 else float("nan")

    @property
    def empty(self) -> bool:
        return self.liters <= 0


def resistance(v, p: FuelParams = FuelParams()):
    """Total resistance force in N for speed ``v`` in m/s."""
    v_kmh = MS_TO_KMH * np.asarray(v, dtype=float)
    aero = p.rho / 25.92 * p.c_d * p.c_h * p.a_f * v_kmh ** 2
    rolling = p.g * p.mass * p.c_r / 1000.0 * (p.c1 * v_kmh + p.c2)
    return aero + rolling + p.g * p.mass * p.grade


def driveline_power(v, a, p: FuelParams = FuelParams()):
    """Driveline power in kW, zero while braking or coasting."""
    v = np.asarray(v, dtype=float)
    force = resistance(v, p) + 1.04 * p.mass * np.asarray(a, dtype=float)
    return np.maximum(0.0, force / (3600.0 * p.eta_d) * MS_TO_KMH * v)


def fuel_rate(power):
    """Instantaneous fuel rate in L/s for driveline power in kW."""
    power = np.asarray(power, dtype=float)
    return ALPHA0 + ALPHA1 * power + ALPHA2 * power ** 2


def _step_fuel(traj: Trajectory, p: FuelParams) -> Tuple[np.ndarray, np.ndarray]:
    liters = fuel_rate(driveline_power(traj.v, traj.a, p)) * traj.dt
    meters = traj.v * traj.dt
    return liters, meters


def trajectory_fuel(traj: Trajectory, p: FuelParams = FuelParams()) -> Tuple[float, float]:
    """Fuel (L) and distance (km) over a trajectory, rectangle rule per sample."""
    if traj is None or len(traj) < 2:
        raise ValueError("trajectory too short to integrate fuel")
    liters, meters = _step_fuel(traj, p)
    return float(liters.sum()), float(meters.sum() / 1000.0)


def speed_bins(bin_width: float = 10.0, v_max_kmh: float = 90.0) -> np.ndarray:
    return np.arange(0.0, v_max_kmh + 1e-9, bin_width)


def _bin_index(v_kmh: np.ndarray, edges: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(edges, v_kmh, side="right") - 1
    # the top bin is closed on the right
    idx[np.isclose(v_kmh, edges[-1])] = len(edges) - 2
    idx[(v_kmh < edges[0]) | (v_kmh > edges[-1] + 1e-9)] = -1
    return idx


def fuel_efficiency_by_bin(trajs: Sequence[Trajectory], bin_width: float = 10.0,
                           p: FuelParams = FuelParams(),
                           v_max_kmh: float = 90.0) -> List[FuelRecord]:
    """Pool per-sample fuel and distance into speed bins.

    Bins are half-open ``[lo, hi)`` except the last, which is closed.
    Samples faster than ``v_max_kmh`` are ignored.
    """
    if not trajs:
        raise ValueError("need at least one trajectory")
    edges = speed_bins(bin_width, v_max_kmh)
    nb = len(edges) - 1
    liters = np.zeros(nb)
    meters = np.zeros(nb)
    # fixed reduction order: trajectory by trajectory, bins via bincount
    for traj in trajs:
        l, m = _step_fuel(traj, p)
        idx = _bin_index(traj.v * MS_TO_KMH, edges)
        ok = idx >= 0
        liters += np.bincount(idx[ok], weights=l[ok], minlength=nb)
        meters += np.bincount(idx[ok], weights=m[ok], minlength=nb)
    return [FuelRecord(float(edges[i]), float(edges[i + 1]), float(liters[i]),
                       float(meters[i] / 1000.0)) for i in range(nb)]


def positive_accel_fraction_by_bin(trajs: Sequence[Trajectory], bin_width: float = 10.0,
                                   threshold: float = 0.0,
                                   v_max_kmh: float = 90.0) -> List[Tuple[Tuple[float, float], float]]:
    """Share of samples per speed bin with acceleration ``>= threshold``.

    Bins without samples report NaN.
    """
    if not trajs:
        raise ValueError("need at least one trajectory")
    edges = speed_bins(bin_width, v_max_kmh)
    nb = len(edges) - 1
    total = np.zeros(nb)
    pos = np.zeros(nb)
    for traj in trajs:
        idx = _bin_index(traj.v * MS_TO_KMH, edges)
        ok = idx >= 0
        total += np.bincount(idx[ok], minlength=nb)
        pos += np.bincount(idx[ok], weights=(traj.a[ok] >= threshold).astype(float), minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total > 0, pos / np.maximum(total, 1), np.nan)
    return [((float(edges[i]), float(edges[i + 1])), float(frac[i])) for i in range(nb)]


def records_to_rows(records: Iterable[FuelRecord]) -> List[dict]:
    return [{"bin_lo": r.bin_lo, "bin_hi": r.bin_hi, "km": r.km, "liters": r.liters,
             "km_per_liter": r.efficiency} for r in records]
