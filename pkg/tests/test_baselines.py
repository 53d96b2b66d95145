import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixtraffic.baselines import (IdmParams, OuLeaderConfig, constant_speed_leader,
                                  generate_ou_leader, idm_accel, idm_capacity,
                                  idm_desired_gap, idm_equilibrium_flow, idm_equilibrium_gap,
                                  piecewise_speed_leader)
from mixtraffic.dynamics import A_MAX, A_MIN
from mixtraffic.platoon import FollowerInit, rollout_follower

P = IdmParams()


def test_idm_standstill_equilibrium():
    assert idm_accel(0.0, 0.0, P.s0, P, clamp=False) == pytest.approx(0.0, abs=1e-12)


def test_idm_free_flow():
    assert idm_accel(P.v0, 0.0, 1e12, P, clamp=False) == pytest.approx(0.0, abs=1e-9)


def test_idm_equilibrium_residual():
    v = 15.0
    gap = idm_desired_gap(v, 0.0, P) / math.sqrt(1 - (v / P.v0) ** 4)
    assert abs(idm_accel(v, 0.0, gap, P, clamp=False)) < 1e-9
    assert idm_equilibrium_gap(v, P) == pytest.approx(gap, rel=1e-12)


def test_idm_gap_errors():
    with pytest.raises(ValueError):
        idm_accel(10.0, 0.0, 0.0, P)


def test_idm_output_is_clamped():
    assert idm_accel(20.0, -15.0, 1.0, P) == A_MIN
    assert idm_accel(0.0, 0.0, 1e6, IdmParams(a=5.0)) == A_MAX


@given(st.floats(0, 40), st.floats(-20, 20), st.floats(0.1, 1e4))
def test_idm_never_exceeds_max_accel(v, dv, gap):
    assert idm_accel(v, dv, gap, P, clamp=False) <= P.a + 1e-12


@given(st.floats(0, 24.9))
def test_idm_large_gap_limit(v):
    assert idm_accel(v, 0.0, 1e9, P, clamp=False) == pytest.approx(P.a * (1 - (v / P.v0) ** 4), abs=1e-9)


def test_equilibrium_gap_examples():
    assert idm_equilibrium_gap(0.0, P) == P.s0
    assert idm_equilibrium_gap(0.5 * P.v0, P) == pytest.approx((2 + 0.75 * P.v0) / math.sqrt(1 - 0.0625), rel=1e-12)
    assert idm_equilibrium_gap(P.v0 * (1 - 1e-9), P) > 1e5
    with pytest.raises(ValueError):
        idm_equilibrium_gap(P.v0, P)


def test_idm_capacity_is_equilibrium_maximum():
    q, v, k = idm_capacity(P)
    grid = np.linspace(0, P.v0, 5000, endpoint=False)
    assert q >= max(idm_equilibrium_flow(x, P) for x in grid) - 1e-6
    assert k == pytest.approx(1000.0 / idm_equilibrium_gap(v, P))
    assert 2000 < q < 2200  # point vehicles, s0=2, T=1.5


@pytest.mark.parametrize("v", [5.0, 10.0, 15.0, 20.0])
def test_idm_follower_converges_to_equilibrium(v):
    leader = constant_speed_leader(v, 300.0)
    traj, hit = rollout_follower(P, leader, P.T, FollowerInit(30.0, v, 0.0))
    assert hit is None
    gap = leader.x[-1] - traj.x[-1]
    assert gap == pytest.approx(idm_equilibrium_gap(v, P), rel=0.01)


def test_ou_zero_noise_zero_target():
    tr = generate_ou_leader(OuLeaderConfig(sigma_ou=0.0, targets=(0.0,), total_duration=60))
    assert np.all(tr.v == 0.0)


def test_ou_zero_noise_monotone_approach():
    cfg = OuLeaderConfig(sigma_ou=0.0, targets=(0.0, 90.0), phase_duration_range=(30.0, 30.0),
                         total_duration=120.0, v_init=0.0)
    tr = generate_ou_leader(cfg)
    rising = tr.v[300:600]
    assert np.all(np.diff(rising) >= 0)
    assert rising[-1] > 0.9 * 25.0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["random", "staircase"]))
def test_ou_seeded_run_properties(seed, mode):
    from mixtraffic.baselines import _phase_targets
    cfg = OuLeaderConfig(seed=seed, mode=mode, total_duration=900.0)
    tr = generate_ou_leader(cfg)
    assert len(tr) == 9000
    acc = np.diff(tr.v) / tr.dt
    assert acc.min() >= A_MIN - 1e-9 and acc.max() <= A_MAX + 1e-9
    assert tr.v.min() >= 0 and tr.v.max() <= 25.0 + 1e-12
    targets = _phase_targets(cfg, np.random.default_rng(seed), 50)
    assert all(t % 5 == 0 and 0 <= t <= 90 for t in targets)


def test_ou_reproducible():
    cfg = OuLeaderConfig(seed=42, total_duration=200.0)
    assert generate_ou_leader(cfg) == generate_ou_leader(cfg)
    assert generate_ou_leader(cfg) != generate_ou_leader(OuLeaderConfig(seed=43, total_duration=200.0))


def test_ou_config_validation():
    with pytest.raises(ValueError):
        OuLeaderConfig(v_min=90.0, v_max=10.0)
    with pytest.raises(ValueError):
        OuLeaderConfig(speed_step=7.0)
    with pytest.raises(ValueError):
        OuLeaderConfig(mode="zigzag")
    assert OuLeaderConfig().speed_grid.tolist() == [5.0 * i for i in range(19)]


def test_piecewise_leader():
    tr = piecewise_speed_leader([10.0, 20.0], [1.0, 2.0])
    assert len(tr) == 30 and tr.v[9] == 10.0 and tr.v[10] == 20.0
