import numpy as np
import pytest

from mixtraffic import experiments as ex
from mixtraffic.platoon import IDM, RL

TINY = {
    "n_seeds": 2,
    "trainer": {"episodes": 3, "hidden": [16, 16], "batch_size": 32, "warmup_steps": 100},
    "train_leaders": {"n": 2, "duration": 30.0},
    "eval_leaders": {"n": 2, "duration": 30.0},
    "platoon": {"n_followers": 8, "leader_duration": 240.0},
}


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    cfg = ex.config_from_dict(TINY)
    result, table, metrics = ex.run_train(cfg, out)
    return cfg.replace(policy=str(out / "policy.npz")), out, table, metrics


def test_presets_and_overrides(tmp_path):
    desk = ex.config_from_dict({})
    assert desk.trainer.episodes == 200 and desk.trainer.hidden == (64, 64)
    paper = ex.config_from_dict({"preset": "paper"})
    assert paper.trainer.hidden == (256, 256) and paper.trainer.episodes == 2000
    assert paper.reward.weights == desk.reward.weights
    cfg = ex.load_config(None, "desk", seed=7)
    assert cfg.seed == cfg.trainer.seed == 7 and cfg.seeds == [7, 8, 9]
    p = ex.dump_config(cfg, tmp_path / "c.yaml")
    assert ex.load_config(p) == cfg
    with pytest.raises(ValueError):
        ex.config_from_dict({"preset": "huge"})
    with pytest.raises(ValueError):
        ex.config_from_dict({"trainer": {"epochs": 3}})


def test_fingerprint_tracks_config():
    a = ex.config_from_dict({})
    assert ex.fingerprint(a, "x") == ex.fingerprint(ex.config_from_dict({}), "x")
    assert ex.fingerprint(a, "x") != ex.fingerprint(a.replace(seed=1), "x")
    assert ex.fingerprint(a, "x") != ex.fingerprint(a, "y")


def test_result_table_round_trip(tmp_path):
    t = ex.ResultTable("s", ["a", "b", "c"], [{"a": 1, "b": 0.1 + 0.2, "c": "RL"}], 3, "abc")
    back = ex.ResultTable.from_csv(t.to_csv(tmp_path / "t.csv"))
    assert back == t and back.rows[0]["b"] == 0.1 + 0.2
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "a,b,c,seed,fingerprint"


def test_learning_check():
    ok, share = ex.learning_check(np.r_[np.zeros(50), np.ones(50)])
    assert ok and share == 1.0
    assert not ex.learning_check(np.ones(100))[0]
    assert not ex.learning_check(np.r_[np.ones(50), np.zeros(50)])[0]


def test_train_outputs(trained):
    cfg, out, table, metrics = trained
    for name in ("policy.npz", "reward_curve.csv", "evaluation.json", "config.yaml",
                 "training_curve.png"):
        assert (out / name).exists()
    assert len(table.rows) == 3
    assert {"collisions", "runaways", "mean_reward", "mean_ttc_margin"} <= set(metrics)


def test_missing_policy_is_reported():
    with pytest.raises(FileNotFoundError, match="train"):
        ex.run_heterogeneity(ex.config_from_dict(TINY))


@pytest.fixture(scope="module")
def small_cfg(scenario_cfg):
    """The trained desk policy on short platoons."""
    return scenario_cfg.replace(n_seeds=2, platoon=ex.PlatoonConfig(n_followers=30, leader_duration=300.0))


def test_heterogeneity_and_penetration(small_cfg, tmp_path):
    cfg = small_cfg
    sc = ex.run_heterogeneity(cfg)
    assert [r["label"] for r in sc.summary.rows] == ["T=1", "T=1.5", "T=2"]
    assert len(sc.table.rows) == 3 * cfg.n_seeds
    out = ex.write_fd_scenario(sc, cfg, tmp_path / "het")
    for name in ("results.csv", "summary.csv", "fd_curves.csv", "config.yaml", "fd_overlay.png"):
        assert (out / name).exists()
    rp = ex.run_rl_penetration(cfg, rates=(0.0, 0.5))
    assert [r["capacity_gain_pct"] for r in rp.summary.rows][0] == 0.0
    with pytest.raises(ValueError):
        ex.run_t_penetration(cfg, mixes=[(0.5, 0.2, 0.2)])


def test_fuel_comparison(small_cfg):
    cfg = small_cfg
    events = ex.fuel_test_events(cfg)
    assert events
    sc = ex.run_fuel_comparison(cfg, events=events[:2])
    ctrl = {r["controller"] for r in sc.table.rows}
    assert ctrl == {RL, IDM}
    assert len(sc.rl) == len(sc.idm) == 2
    for r in sc.table.rows:
        assert r["km"] >= 0
        if r["km"] > 0:
            assert 0 <= r["positive_accel_fraction"] <= 1


def test_replay_reproduces_table(small_cfg, tmp_path):
    out = tmp_path / "rp"
    ex.run_scenario("rl_penetration", small_cfg.replace(n_seeds=1), out)
    stored, fresh = ex.replay(out)
    assert stored == fresh
