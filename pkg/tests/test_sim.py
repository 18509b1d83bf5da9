import math

import numpy as np
import pytest

from aoi_v2i.analytics import DM1, MM1, TrafficConfig, average_aoi
from aoi_v2i.channel import ChannelConfig
from aoi_v2i.errors import DivergenceError, NoDeliveryError, ValidationError
from aoi_v2i.sim import (
    GEOMETRIC_RETRY,
    MARKOV_CHANNEL,
    MarkovChannel,
    SimConfig,
    age_trace,
    run,
    run_replication,
)


def neutral(rho, discipline=MM1, **kw):
    return TrafficConfig(utilization=rho, discipline=discipline, collision_window=0.0, **kw)


def within_oracle(res, expected):
    return abs(res.empirical_aoi - expected) <= max(3 * res.aoi_stderr, 0.01 * expected)


@pytest.mark.slow
@pytest.mark.parametrize("discipline", [MM1, DM1])
@pytest.mark.parametrize("rho", [0.3, 0.5, 0.7])
def test_oracle_agreement(discipline, rho):
    traffic = neutral(rho, discipline)
    res = run(SimConfig(traffic=traffic, horizon=100_000, replications=10, seed=1))
    assert within_oracle(res, average_aoi(traffic).average_aoi)


def test_mm1_half_load_long_horizon():
    res = run(SimConfig(traffic=neutral(0.5), horizon=1_000_000, replications=10, seed=2))
    assert abs(res.empirical_aoi - 3.5) <= 3 * res.aoi_stderr


def test_dm1_reported_point():
    traffic = neutral(0.515, DM1)
    res = run(SimConfig(traffic=traffic, horizon=200_000, replications=10, seed=4))
    assert abs(res.empirical_aoi - 2.2526) <= 3 * res.aoi_stderr + 1e-3
    assert res.empirical_aoi == pytest.approx(2.25, abs=0.02)


def test_perfect_channel_single_attempt():
    res = run(SimConfig(traffic=neutral(0.6), horizon=20_000, replications=3))
    assert res.mean_attempts == 1.0


def test_result_ordering_and_sanity():
    for d in (MM1, DM1):
        traffic = neutral(0.4, d, drop_prob=0.2)
        res = run(SimConfig(traffic=traffic, horizon=50_000, replications=5, seed=6))
        assert res.empirical_aoi >= res.mean_system_time >= res.mean_wait >= 0
        assert res.mean_system_time >= 1 / traffic.service_rate
        for rep in res.per_replication:
            assert rep["empirical_aoi"] >= rep["mean_system_time"] >= rep["mean_wait"] >= 0
        n = res.delivered
        sigma = 1 / traffic.arrival_rate
        assert abs(res.mean_interarrival - 1 / traffic.arrival_rate) <= 3 * sigma / math.sqrt(n) + 1e-12


def test_retry_attempts_match_geometric_mean():
    traffic = neutral(0.3, drop_prob=0.4)
    res = run(SimConfig(traffic=traffic, horizon=100_000, replications=4, seed=8))
    assert res.mean_attempts == pytest.approx(1 / 0.6, rel=0.01)


def test_monotone_in_drop_probability():
    values = []
    for pd in (0.0, 0.15, 0.3, 0.45):
        traffic = neutral(0.3, drop_prob=pd)
        values.append(run(SimConfig(traffic=traffic, horizon=50_000, replications=5, seed=9)).empirical_aoi)
    assert all(b > a for a, b in zip(values, values[1:]))


def test_markov_channel_occupancy():
    ch = MarkovChannel(0.8, 0.6, fail_prob_poor=0.5, fail_prob_ideal=0.05)
    traffic = TrafficConfig(utilization=0.3, fleet_size=3, collision_window=0.05)
    cfg = SimConfig(traffic=traffic, channel=ch, fidelity=MARKOV_CHANNEL, slot_interval=0.1,
                    horizon=20_000, replications=6, seed=3)
    res = run(cfg)
    assert abs(res.channel_poor_fraction - ch.pi_poor) <= 3 * res.channel_poor_stderr
    assert res.mean_attempts > 1
    assert res.empirical_aoi >= res.mean_system_time >= res.mean_wait >= 0


def test_markov_channel_from_physical_config():
    traffic = neutral(0.4)
    cfg = SimConfig(traffic=traffic, channel=ChannelConfig(), fidelity=MARKOV_CHANNEL,
                    horizon=5_000, replications=2, seed=1)
    assert cfg.resolved_slot() == pytest.approx(8000 / 6e6)
    res = run(cfg)
    assert 0 <= res.channel_poor_fraction <= 1
    assert res.mean_attempts >= 1


def test_determinism():
    cfg = SimConfig(traffic=neutral(0.5, drop_prob=0.1), horizon=20_000, replications=3, seed=11)
    assert run(cfg) == run(cfg)
    other = SimConfig(traffic=neutral(0.5, drop_prob=0.1), horizon=20_000, replications=3, seed=12)
    assert run(other).empirical_aoi != run(cfg).empirical_aoi


def test_worker_pool_matches_serial():
    base = dict(traffic=neutral(0.5), horizon=10_000, replications=4, seed=5)
    assert run(SimConfig(workers=2, **base)) == run(SimConfig(**base))


def test_divergence_guard():
    traffic = neutral(0.9, drop_prob=0.5)
    with pytest.raises(DivergenceError):
        run(SimConfig(traffic=traffic, horizon=50_000, replications=1, queue_guard=100))


def test_no_delivery():
    with pytest.raises(NoDeliveryError):
        SimConfig(channel=MarkovChannel(0.5, 0.5, 1.0, 1.0), fidelity=MARKOV_CHANNEL, slot_interval=0.1)


@pytest.mark.parametrize(
    "kwargs",
    [{"fidelity": "exact"}, {"horizon": 10, "warmup": 10}, {"replications": 0},
     {"queue_guard": 0}, {"fidelity": MARKOV_CHANNEL}, {"horizon": 5, "warmup": 4}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        SimConfig(**kwargs)


def test_warmup_default():
    assert SimConfig(horizon=5000).warmup == 500


class TestAgeTrace:
    def test_full_resolution_matches_run(self):
        cfg = SimConfig(traffic=neutral(0.5, drop_prob=0.2), horizon=4000, replications=1, seed=7)
        tr = age_trace(cfg, max_points=100_000)
        rep = run_replication(cfg, 0)
        assert tr.error_bound == 0.0
        assert tr.integral == pytest.approx(rep.age_area, rel=1e-9)
        assert tr.empirical_aoi == pytest.approx(rep.empirical_aoi, rel=1e-12)

    def test_decimated_within_bound(self):
        cfg = SimConfig(traffic=neutral(0.6), horizon=50_000, replications=1, seed=7)
        tr = age_trace(cfg, max_points=501)
        assert len(tr.points) <= 501
        assert abs(tr.integral - tr.exact_integral) <= tr.error_bound
        assert tr.error_bound > 0

    def test_unit_slope_between_deliveries(self):
        tr = age_trace(SimConfig(traffic=neutral(0.4), horizon=2000, seed=2), max_points=10_000)
        t, age = tr.points[:, 0], tr.points[:, 1]
        # (0 -> 1), (2 -> 3), ... are the linear segments; (1 -> 2) ... are the resets
        rise_t = t[1::2] - t[0:-1:2]
        rise_a = age[1::2] - age[0:-1:2]
        assert np.all(rise_t > 0)
        np.testing.assert_allclose(rise_a, rise_t, rtol=1e-9, atol=1e-9)
        assert np.all(np.diff(t) >= 0)
        assert np.all(age[2::2] < age[1::2])

    def test_resets_to_system_time(self):
        # deterministic arrivals sit on a grid of spacing D, so after a reset
        # at time t the age t - a_i must put a_i back on that grid
        traffic = neutral(0.5, DM1)
        tr = age_trace(SimConfig(traffic=traffic, horizon=2000, seed=4), max_points=10_000)
        t, age = tr.points[2::2, 0], tr.points[2::2, 1]
        arrivals = (t - age) / traffic.deterministic_gap
        np.testing.assert_allclose(arrivals, np.round(arrivals), atol=1e-6)
        assert np.all(age > 0)

    def test_max_points_validation(self):
        with pytest.raises(ValidationError):
            age_trace(SimConfig(horizon=1000), max_points=2)
