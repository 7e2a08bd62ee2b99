import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drlsched.errors import ConfigError, ContractViolation
from drlsched.sim import (
    DEFAULT_MCS_TABLE,
    HarqProcess,
    SchedulingEnv,
    SimConfig,
    UeContext,
    apply_olla,
    bler,
    decode_outcome,
    draw_channel,
    estimate_instantaneous_rate,
    load_mcs_table,
    max_rate_bits,
    reset,
    select_mcs,
    step_tti,
)
from drlsched.sim.env import ChannelSample
from drlsched.sim.mcs import McsEntry

TABLE = DEFAULT_MCS_TABLE


# -- config -------------------------------------------------------------
def test_config_defaults_valid_and_roundtrip():
    cfg = SimConfig().validate()
    assert cfg.n_ue == 5
    assert SimConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [
    {"n_ue": 1},
    {"target_bler": 0.0},
    {"olla_step_up_db": 0.2},
    {"n_rb": 60},
    {"fading_corr": 1.0},
    {"avg_snr_range_db": (5.0, 1.0)},
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        SimConfig(**bad).validate()


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"n_ues": 3})


def test_olla_ratio_scales_with_target():
    SimConfig(target_bler=0.2, olla_step_down_db=0.8, olla_step_up_db=0.2).validate()


# -- MCS ----------------------------------------------------------------
def test_table_shape():
    assert len(TABLE) == 15
    assert TABLE[0].spectral_efficiency == pytest.approx(0.1523)
    assert TABLE[-1].spectral_efficiency == pytest.approx(5.5547)
    se = [e.spectral_efficiency for e in TABLE]
    thr = [e.sinr_threshold_db for e in TABLE]
    assert se == sorted(se) and thr == sorted(thr)


def test_select_mcs_clamps_and_boundaries():
    assert select_mcs(-30.0, 0.0, TABLE) is TABLE[0]
    assert select_mcs(40.0, 0.0, TABLE) is TABLE[-1]
    for k in (0, 4, 9, 14):
        assert select_mcs(TABLE[k].sinr_threshold_db, 0.0, TABLE) is TABLE[k]
    assert select_mcs(TABLE[5].sinr_threshold_db - 1.0, 1.0, TABLE) is TABLE[5]
    assert select_mcs(TABLE[5].sinr_threshold_db - 1e-9, 0.0, TABLE) is TABLE[4]


@settings(max_examples=200, deadline=None)
@given(st.floats(-40, 40), st.floats(-10, 10))
def test_select_mcs_contract(sinr, off):
    e = select_mcs(sinr, off, TABLE)
    eff = sinr + off
    if e.index > 0:
        assert e.sinr_threshold_db <= eff
    if e.index < len(TABLE) - 1:
        assert TABLE[e.index + 1].sinr_threshold_db > eff


def test_bler_at_threshold_and_limits():
    for e in TABLE:
        assert bler(e, e.sinr_threshold_db) == pytest.approx(0.1, abs=1e-12)
    e = TABLE[7]
    assert bler(e, 1e6) == 0.0
    assert bler(e, -1e6) == 1.0
    rng = np.random.default_rng(0)
    assert all(decode_outcome(e, 500.0, rng) for _ in range(100))
    assert not any(decode_outcome(e, -500.0, rng) for _ in range(100))


def test_bler_sigmoid_formula():
    e = TABLE[3]
    shift = math.log(0.9 / 0.1)
    for d in (-2.0, -0.3, 0.0, 0.7, 3.0):
        expect = 1.0 / (1.0 + math.exp(d / 0.5 + shift))
        assert bler(e, e.sinr_threshold_db + d) == pytest.approx(expect, rel=1e-12)


def test_decode_at_threshold_monte_carlo():
    rng = np.random.default_rng(11)
    e = TABLE[6]
    nacks = sum(not decode_outcome(e, e.sinr_threshold_db, rng) for _ in range(10_000))
    assert abs(nacks / 10_000 - 0.1) <= 0.01


def test_load_mcs_table(tmp_path):
    p = tmp_path / "mcs.csv"
    p.write_text(
        "# test table\n"
        "index,modulation_order,code_rate,spectral_efficiency,sinr_threshold_db\n"
        "0,2,0.1,0.2,-5\n"
        "1,4,0.5,2.0,6\n"
    )
    t = load_mcs_table(p)
    assert t == (McsEntry(0, 2, 0.1, 0.2, -5.0), McsEntry(1, 4, 0.5, 2.0, 6.0))
    q = tmp_path / "mcs.txt"
    q.write_text("0 2 0.1 0.2 -5\n1 4 0.5 2.0 6\n")
    assert load_mcs_table(q) == t


@pytest.mark.parametrize("body", [
    "",
    "0 2 0.1 0.2\n",
    "0 2 0.1 0.2 -5\n1 4 0.5 0.1 6\n",
    "0 2 0.1 0.2 -5\n1 4 0.5 2.0 -6\n",
    "0 2 x 0.2 -5\n",
])
def test_load_mcs_table_rejects(tmp_path, body):
    p = tmp_path / "bad.txt"
    p.write_text(body)
    with pytest.raises(ConfigError):
        load_mcs_table(p)


def test_env_rejects_malformed_table():
    with pytest.raises(ConfigError):
        SchedulingEnv(SimConfig(), mcs_table=[])


# -- channel, OLLA, rates ----------------------------------------------
def test_channel_identity_case():
    ue = UeContext(0, 7.5)

    class UnitRng:
        def standard_normal(self, n):
            return np.array([1.0, 1.0])

    s = draw_channel(ue, UnitRng())
    assert s.fading_power == pytest.approx(1.0)
    assert s.sinr_true_db == pytest.approx(7.5)


def test_channel_unit_mean_and_independence():
    rng = np.random.default_rng(5)
    ues = [UeContext(0, 0.0), UeContext(1, 0.0)]
    p = np.array([[draw_channel(u, rng).fading_power for u in ues] for _ in range(100_000)])
    assert abs(p[:, 0].mean() - 1.0) <= 0.02
    assert abs(np.corrcoef(p[:10_000, 0], p[:10_000, 1])[0, 1]) < 0.05


def test_correlated_fading_keeps_unit_mean():
    rng = np.random.default_rng(6)
    ue = UeContext(0, 0.0)
    ue.gain = complex(*rng.standard_normal(2)) * math.sqrt(0.5)
    p = np.array([draw_channel(ue, rng, 0.9).fading_power for _ in range(200_000)])
    assert abs(p.mean() - 1.0) <= 0.05
    assert np.corrcoef(p[:-1], p[1:])[0, 1] > 0.5


def test_olla_steps_and_clamp():
    ue = UeContext(0, 0.0)
    assert apply_olla(ue, True) == pytest.approx(0.1)
    ue.olla_offset_db = 0.0
    assert apply_olla(ue, False) == pytest.approx(-0.9)
    ue.olla_offset_db = 9.95
    assert apply_olla(ue, True) == 10.0
    ue.olla_offset_db = -9.5
    assert apply_olla(ue, False) == -10.0


def test_rate_formula():
    e = McsEntry(0, 2, 0.5, 1.0, -100.0)
    ue = UeContext(0, 0.0, channel=ChannelSample(0, 1.0, 0.0, 0.0))
    assert estimate_instantaneous_rate(ue, (e,), 50, 180e3, 1e-3) == pytest.approx(9000.0)
    assert estimate_instantaneous_rate(ue, (e,), 100, 180e3, 1e-3) == pytest.approx(18000.0)
    ue.channel = ChannelSample(0, 1e-9, -90.0, -90.0)
    assert estimate_instantaneous_rate(ue, TABLE) > 0
    assert max_rate_bits(SimConfig()) == pytest.approx(5.5547 * 9000)


# -- environment --------------------------------------------------------
def _trace(env, actions):
    out = []
    for k in actions:
        res, obs = env.step(k)
        out.append((res.scheduled_ue, res.ack, res.delivered_bits, res.mcs, tuple(obs.inst_rate), tuple(obs.avg_rate)))
    return out


def test_reset_deterministic_and_shape():
    env, obs = reset(SimConfig(), 42)
    env2, obs2 = reset(SimConfig(), 42)
    assert obs.inst_rate.shape == (5,) and obs.avg_rate.shape == (5,)
    np.testing.assert_array_equal(obs.inst_rate, obs2.inst_rate)
    acts = [i % 5 for i in range(300)]
    assert _trace(env, acts) == _trace(env2, acts)


def test_reset_reuse_matches_fresh_env():
    env = SchedulingEnv(SimConfig())
    env.reset(1)
    _trace(env, [0] * 50)
    env.reset(9)
    fresh = SchedulingEnv(SimConfig())
    fresh.reset(9)
    acts = [2, 1, 0, 3] * 30
    assert _trace(env, acts) == _trace(fresh, acts)


def test_seeds_change_placement():
    a = SchedulingEnv(SimConfig())
    b = SchedulingEnv(SimConfig())
    a.reset(1)
    b.reset(2)
    assert [u.avg_snr_db for u in a.ues] != [u.avg_snr_db for u in b.ues]


def test_channels_independent_of_actions():
    a = SchedulingEnv(SimConfig())
    b = SchedulingEnv(SimConfig())
    a.reset(3)
    b.reset(3)
    rng = np.random.default_rng(0)
    for _ in range(500):
        a.step(0)
        b.step(int(rng.integers(5)))
        sa = [(c.fading_power, c.sinr_true_db, c.sinr_reported_db) for c in a.channel_samples()]
        sb = [(c.fading_power, c.sinr_true_db, c.sinr_reported_db) for c in b.channel_samples()]
        assert sa == sb


def test_feedback_delay():
    env = SchedulingEnv(SimConfig(feedback_delay_ttis=4))
    env.reset(0)
    true_hist = [[c.sinr_true_db for c in env.channel_samples()]]
    for t in range(20):
        env.step(t % 5)
        samples = env.channel_samples()
        true_hist.append([c.sinr_true_db for c in samples])
        if len(true_hist) > 4:
            assert [c.sinr_reported_db for c in samples] == true_hist[-5]


def test_unscheduled_ue_decays():
    env = SchedulingEnv(SimConfig())
    obs = env.reset(4)
    before = obs.avg_rate.copy()
    res, obs = env.step(2)
    others = [0, 1, 3, 4]
    np.testing.assert_allclose(obs.avg_rate[others], before[others] * 0.99, rtol=1e-12)
    expect = 0.99 * before[2] + res.delivered_bits / 100
    assert obs.avg_rate[2] == pytest.approx(expect, rel=1e-12)


def test_rates_positive_and_results_consistent():
    env = SchedulingEnv(SimConfig())
    obs = env.reset(8)
    rng = np.random.default_rng(1)
    for _ in range(2000):
        assert np.all(obs.inst_rate > 0)
        res, obs = env.step(int(rng.integers(5)))
        assert res.delivered_bits == 0 or res.ack
        assert len(res.per_ue_inst_rate) == 5
        for ue in env.ues:
            assert ue.harq.retx_count <= env.config.max_harq_retx
            if not ue.harq.active:
                assert ue.harq.retx_count == 0


def test_step_rejects_bad_index():
    env = SchedulingEnv(SimConfig())
    with pytest.raises(ContractViolation):
        env.step(0)
    env.reset(0)
    for bad in (-1, 5, True):
        with pytest.raises(ContractViolation):
            step_tti(env, bad)


def test_harq_drop_after_max_retx():
    env = SchedulingEnv(SimConfig(n_ue=2, max_harq_retx=3))
    env.reset(0)
    ue = env.ues[0]
    # force NACKs by decoding far below threshold
    ue.avg_snr_db = -200.0
    env._advance_channels()
    env._estimate_rates()
    results = [env.step(0)[0] for _ in range(4)]
    assert [r.retransmission for r in results] == [False, True, True, True]
    assert all(not r.ack and r.delivered_bits == 0 for r in results)
    assert len({r.mcs for r in results}) == 1
    assert not ue.harq.active and ue.harq.retx_count == 0
    assert env.step(0)[0].retransmission is False


def test_harq_retransmission_reuses_tb():
    env = SchedulingEnv(SimConfig(n_ue=2))
    env.reset(1)
    ue = env.ues[1]
    ue.harq.active = True
    ue.harq.mcs = 3
    ue.harq.tb_size_bits = 1234.0
    ue.avg_snr_db = 200.0
    env._advance_channels()
    res, _ = env.step(1)
    assert res.retransmission and res.ack
    assert res.mcs == 3 and res.delivered_bits == 1234.0
    assert ue.harq == HarqProcess()
