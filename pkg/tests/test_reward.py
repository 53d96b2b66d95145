import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixtraffic.reward import (RewardConfig, RewardWeights, desired_gap, f_eff, f_fuel, f_jerk,
                               f_speed, f_ttc, lognormal_pdf, total_reward)

CFG = RewardConfig()
# standard lognormal density ratio one log-unit above the mode, 50-digit mpmath
F_EFF_E_GOLDEN = 0.6065306597126334


def _mp_lognormal(s, mu, sigma):
    s, mu, sigma = mp.mpf(s), mp.mpf(mu), mp.mpf(sigma)
    return mp.exp(-(mp.log(s) - mu) ** 2 / (2 * sigma ** 2)) / (s * sigma * mp.sqrt(2 * mp.pi))


@pytest.mark.parametrize("ttc, expected", [(0.0, -1.0), (4.0, 0.0), (2.0, -0.75), (math.inf, 0.0)])
def test_f_ttc(ttc, expected):
    assert f_ttc(ttc, CFG) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("j, expected", [(0.0, 0.0), (60.0, -1.0), (3.75, -0.5), (-3.75, -0.5),
                                         (500.0, -1.0)])
def test_f_jerk(j, expected):
    assert f_jerk(j, CFG) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("v, T, expected", [(10, 1.5, 17.0), (0, 2, 2.0), (25, 1, 27.0)])
def test_desired_gap(v, T, expected):
    assert desired_gap(v, T, CFG) == pytest.approx(expected, abs=1e-9)


def test_f_eff_at_mode_and_tail():
    assert f_eff(17.0, 10.0, 1.5, CFG) == pytest.approx(1.0, abs=1e-12)
    assert f_eff(1e12, 10.0, 1.5, CFG) < 1e-50
    with pytest.raises(ValueError):
        f_eff(0.0, 10.0, 1.5, CFG)


def test_f_eff_one_log_unit_above_mode_matches_mpmath():
    mp.mp.dps = 50
    s_star = 17.0
    mu = math.log(s_star) + 1.0
    ref = _mp_lognormal(s_star * mp.e, mu, 1) / _mp_lognormal(s_star, mu, 1)
    assert float(ref) == pytest.approx(F_EFF_E_GOLDEN, abs=1e-15)
    assert f_eff(s_star * math.e, 10.0, 1.5, CFG) == pytest.approx(F_EFF_E_GOLDEN, rel=1e-6)


def test_lognormal_pdf_matches_mpmath():
    mp.mp.dps = 30
    for s, mu, sig in [(1.0, 0.0, 1.0), (17.0, 3.8, 1.0), (0.2, -1.0, 0.5)]:
        assert lognormal_pdf(s, mu, sig) == pytest.approx(float(_mp_lognormal(s, mu, sig)), rel=1e-12)


@given(st.floats(0.0, 40.0), st.floats(0.5, 3.0), st.floats(0.01, 0.99), st.floats(1.01, 50.0))
def test_f_eff_unimodal(v, T, below, above):
    s = desired_gap(v, T, CFG)
    assert f_eff(s * below, v, T, CFG) < f_eff(s * (below + 1) / 2, v, T, CFG) <= 1.0
    assert f_eff(s * above, v, T, CFG) < f_eff(s * (above + 1) / 2, v, T, CFG) <= 1.0


@pytest.mark.parametrize("v, expected", [(25.0, 0.0), (27.5, -0.01), (12.5, 0.0)])
def test_f_speed(v, expected):
    assert f_speed(v, CFG) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("ratio, expected", [(0.0, 0.0), (9.0, 1.0), (99.0, 32.0)])
def test_f_fuel(ratio, expected):
    rate = 0.001
    assert f_fuel(ratio * rate, rate, CFG) == pytest.approx(expected, abs=1e-9)


def test_total_reward():
    w = RewardWeights(2, 3, 4, 5, 6, 0.5)
    cfg = RewardConfig(weights=w)
    assert total_reward(-1, 1, -1, -1, 1, True, cfg).total == pytest.approx(-25.0)
    assert total_reward(0, 0, 0, 0, 0, False, CFG).total == 0.0
    assert total_reward(-1, 1, 0, 0, 1, False, CFG).total == pytest.approx(1.0)
    br = total_reward(-0.5, 0.8, -0.2, -0.1, 3.0, False, cfg)
    assert br.total == pytest.approx(2 * -0.5 + 3 * 0.8 + 4 * -0.2 + 5 * -0.1 + 6 * 3.0)


@given(st.lists(st.floats(-1, 1), min_size=5, max_size=5), st.floats(-3, 3), st.integers(0, 4))
def test_total_reward_is_linear(comps, delta, idx):
    base = total_reward(*comps, False, CFG).total
    bumped = list(comps)
    bumped[idx] += delta
    w = CFG.weights.as_tuple()[idx]
    assert total_reward(*bumped, False, CFG).total == pytest.approx(base + w * delta, abs=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        RewardConfig(sigma=2.0)
    with pytest.raises(ValueError):
        RewardConfig(collision_penalty=-10.0)
    with pytest.raises(ValueError):
        RewardConfig(log_base_m=1.0)
    with pytest.raises(ValueError):
        RewardWeights(w_eff=-1.0)
    assert RewardConfig(weights={"w_eff": 2.0}).weights.w_eff == 2.0


def test_f_eff_mode_on_grid():
    rng = np.random.default_rng(3)
    for v, T in zip(rng.uniform(0, 30, 20), rng.uniform(0.5, 3, 20)):
        s = desired_gap(v, T, CFG)
        grid = np.linspace(0.5, 3 * s, 3001)
        best = grid[np.argmax([f_eff(g, v, T, CFG) for g in grid])]
        assert abs(best - s) <= grid[1] - grid[0]
