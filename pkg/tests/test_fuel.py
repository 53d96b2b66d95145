import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixtraffic.dynamics import Trajectory
from mixtraffic.fuel import (FuelParams, _bin_index, driveline_power, fuel_efficiency_by_bin,
                             fuel_rate, positive_accel_fraction_by_bin, records_to_rows,
                             resistance, speed_bins, trajectory_fuel)

P = FuelParams()
# independent 40-digit evaluations of the SI forms of the model
R0_GOLDEN = 157.018575
AERO20_GOLDEN = 125.887125
R20_GOLDEN = 363.9581736
P20_GOLDEN = 7.912134208695652  # kW
RATE_P20_GOLDEN = 0.000864879292103368  # L/s


def test_goldens_match_mpmath():
    mp.mp.dps = 40
    g, m, cr, c1, c2 = map(mp.mpf, ("9.806", "2000", "1.750", "0.0328", "4.575"))
    aero = mp.mpf("1.225") / 2 * mp.mpf("0.3") * mp.mpf("0.85") * mp.mpf("2.015") * 400
    r20 = aero + g * m * cr / 1000 * (c1 * 72 + c2)
    assert float(g * m * cr / 1000 * c2) == pytest.approx(R0_GOLDEN, abs=1e-9)
    assert float(aero) == pytest.approx(AERO20_GOLDEN, abs=1e-9)
    assert float(r20) == pytest.approx(R20_GOLDEN, abs=1e-7)
    p20 = r20 * 20 / (1000 * mp.mpf("0.92"))
    assert float(p20) == pytest.approx(P20_GOLDEN, rel=1e-12)
    rate = mp.mpf("0.000341") + mp.mpf("0.0000583") * p20 + mp.mpf("0.000001") * p20 ** 2
    assert float(rate) == pytest.approx(RATE_P20_GOLDEN, rel=1e-12)


def test_resistance():
    assert resistance(0.0, P) == pytest.approx(R0_GOLDEN, rel=1e-9)
    assert resistance(20.0, P) == pytest.approx(R20_GOLDEN, rel=1e-9)
    rolling20 = P.g * P.mass * P.c_r / 1000 * (P.c1 * 72 + P.c2)
    assert resistance(20.0, P) - rolling20 == pytest.approx(AERO20_GOLDEN, rel=1e-9)


def test_grade_zero_contributes_nothing():
    v = np.linspace(0, 40, 9)
    assert np.array_equal(resistance(v, P), resistance(v, FuelParams(grade=0.0)))
    assert np.all(resistance(v, FuelParams(grade=0.01)) > resistance(v, P))


def test_aero_term_si_consistency():
    v = np.linspace(0, 40, 81)
    rolling = P.g * P.mass * P.c_r / 1000 * (P.c1 * 3.6 * v + P.c2)
    aero_si = P.rho / 2 * P.c_d * P.c_h * P.a_f * v ** 2
    assert np.allclose(resistance(v, P) - rolling, aero_si, rtol=1e-3, atol=1e-9)


def test_driveline_power():
    assert driveline_power(0.0, 1.5, P) == 0.0
    assert driveline_power(20.0, -4.0, P) == 0.0
    assert driveline_power(20.0, 0.0, P) == pytest.approx(P20_GOLDEN, rel=1e-9)
    # second route: force times speed in SI
    assert driveline_power(20.0, 0.0, P) == pytest.approx(R20_GOLDEN * 20 / (1000 * 0.92), rel=1e-9)


@pytest.mark.parametrize("p, expected", [(0.0, 0.000341), (10.0, 0.001024), (100.0, 0.016171)])
def test_fuel_rate(p, expected):
    assert fuel_rate(p) == pytest.approx(expected, abs=1e-12)


@given(st.floats(0, 500), st.floats(0, 500))
def test_fuel_rate_increasing_convex(p1, p2):
    lo, hi = sorted((p1, p2))
    if hi > lo + 1e-9:  # smaller steps fall below float resolution
        assert fuel_rate(hi) > fuel_rate(lo)
    mid = 0.5 * (lo + hi)
    assert fuel_rate(mid) <= 0.5 * (fuel_rate(lo) + fuel_rate(hi)) + 1e-15


def _const(v, seconds=100.0, dt=0.1):
    n = int(round(seconds / dt))
    return Trajectory.from_speeds(np.full(n, float(v)), dt)


def test_trajectory_fuel_examples():
    liters, km = trajectory_fuel(_const(0.0))
    assert liters == pytest.approx(0.0341, abs=1e-9)
    assert km == 0.0
    liters, km = trajectory_fuel(_const(20.0))
    assert liters == pytest.approx(100 * RATE_P20_GOLDEN, rel=1e-9)
    assert km == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(ValueError):
        trajectory_fuel(None)


@given(st.lists(st.floats(0, 35), min_size=2, max_size=50))
def test_idle_floor(speeds):
    tr = Trajectory.from_speeds(np.array(speeds), 0.1)
    liters, _ = trajectory_fuel(tr)
    assert liters >= 0.000341 * len(tr) * 0.1 - 1e-15


def test_bin_convention():
    edges = speed_bins(10.0)
    assert len(edges) == 10
    idx = _bin_index(np.array([0.0, 9.999, 10.0, 79.9, 80.0, 90.0, 90.5, -1.0]), edges)
    assert idx.tolist() == [0, 0, 1, 7, 8, 8, -1, -1]


def test_efficiency_by_bin_constant_speed():
    recs = fuel_efficiency_by_bin([_const(15.0)])
    nonempty = [r for r in recs if not r.empty]
    assert len(recs) == 9
    assert len(nonempty) == 1 and nonempty[0].bin_lo == 50.0
    assert np.isnan(recs[0].efficiency)
    rows = records_to_rows(recs)
    assert set(rows[0]) == {"bin_lo", "bin_hi", "km", "liters", "km_per_liter"}


def test_bins_are_additive():
    v = np.concatenate([np.full(500, 8.0), np.full(500, 22.0)])
    tr = Trajectory.from_speeds(v, 0.1)
    recs = fuel_efficiency_by_bin([tr])
    liters, km = trajectory_fuel(tr)
    assert sum(r.liters for r in recs) == pytest.approx(liters, rel=1e-12)
    assert sum(r.km for r in recs) == pytest.approx(km, rel=1e-12)
    assert sum(not r.empty for r in recs) == 2


def _acc_traj(a):
    a = np.asarray(a, dtype=float)
    n = len(a)
    return Trajectory(np.arange(n) * 0.1, np.zeros(n), np.full(n, 15.0), a, 0.1)


@pytest.mark.parametrize("a, expected", [([0.0] * 10, 1.0), ([-1.0] * 10, 0.0), ([1.0, -1.0] * 5, 0.5)])
def test_positive_accel_fraction(a, expected):
    fr = positive_accel_fraction_by_bin([_acc_traj(a)])
    assert fr[5][1] == pytest.approx(expected)
    assert np.isnan(fr[0][1])
