import math

import numpy as np
import pytest
from scipy import stats

from aoi_v2i.arrivals import (
    DETERMINISTIC,
    HOMOGENEOUS,
    NONHOMOGENEOUS,
    ArrivalProcess,
    ArrivalSampler,
    count_measure,
    sample_interarrival,
)
from aoi_v2i.errors import UnboundedIntensityError, ValidationError
from aoi_v2i.rng import make_rng


def sampler(kind=HOMOGENEOUS, rate=1.0, seed=0, **kw):
    return ArrivalSampler(ArrivalProcess(kind=kind, rate=rate, seed=seed, **kw))


def test_deterministic_gap():
    s = sampler(DETERMINISTIC, rate=2.0)
    assert all(sample_interarrival(s, t) == 0.5 for t in (0, 1.3, 100))
    np.testing.assert_array_equal(s.interarrivals(5), np.full(5, 0.5))


def test_homogeneous_mean():
    rate, n = 3.0, 1_000_000
    gaps = sampler(rate=rate, seed=5).interarrivals(n)
    sigma = 1 / rate
    assert abs(gaps.mean() - 1 / rate) <= 3 * sigma / math.sqrt(n)


def test_homogeneous_cdf_ks():
    rate = 1.7
    gaps = sampler(rate=rate, seed=9).interarrivals(20_000)
    result = stats.kstest(gaps, lambda t: 1 - np.exp(-rate * t))
    assert result.pvalue > 0.01


def test_scalar_draws_match_distribution():
    s = sampler(rate=2.0, seed=3)
    gaps = np.array([s.sample_interarrival(0.0) for _ in range(5000)])
    assert stats.kstest(gaps, "expon", args=(0, 0.5)).pvalue > 0.01


def _counts(times, edges):
    return np.histogram(times, bins=edges)[0]


def test_poisson_counts_chi_square():
    rate, width = 2.0, 1.5
    times = sampler(rate=rate, seed=21).arrival_times(300_000)
    edges = np.arange(0, times[-1] - width, width)
    counts = _counts(times, edges)
    mean = rate * width
    kmax = 10
    observed = np.array([np.sum(counts == k) for k in range(kmax)] + [np.sum(counts >= kmax)])
    probs = np.append(stats.poisson.pmf(np.arange(kmax), mean), stats.poisson.sf(kmax - 1, mean))
    expected = probs * len(counts)
    chi2 = stats.chisquare(observed, expected)
    assert chi2.pvalue > 0.01


def test_independent_increments():
    times = sampler(rate=1.0, seed=33).arrival_times(250_000)
    edges = np.arange(0, 200_000 + 1, 1.0)
    counts = _counts(times, edges)[:200_000]
    first, second = counts[0::2], counts[1::2]
    r = np.corrcoef(first, second)[0, 1]
    assert abs(r) < 0.01


def test_seed_determinism():
    a = sampler(rate=1.3, seed=77).interarrivals(1000)
    b = sampler(rate=1.3, seed=77).interarrivals(1000)
    c = sampler(rate=1.3, seed=78).interarrivals(1000)
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_substreams_independent_and_stable():
    x = make_rng(5, 0, 1).random(4)
    y = make_rng(5, 0, 1).random(4)
    z = make_rng(5, 1, 1).random(4)
    np.testing.assert_array_equal(x, y)
    assert not np.array_equal(x, z)


def test_thinning_sine_intensity_counts():
    fn = lambda t: 2.0 + 1.5 * math.sin(t)
    proc = ArrivalProcess(kind=NONHOMOGENEOUS, intensity_fn=fn, intensity_bound=3.5, seed=4)
    s = ArrivalSampler(proc)
    times = s.arrival_times(20_000)
    horizon = float(times[-1])
    # compare with the integrated intensity on [0, T)
    expected = count_measure(proc, 0, horizon)
    assert abs(len(times) - expected) <= 4 * math.sqrt(expected)
    # time-rescaling: Lambda(A_i) increments are Exp(1)
    cum = np.array([2.0 * t - 1.5 * (math.cos(t) - 1.0) for t in times])
    assert stats.kstest(np.diff(cum), "expon").pvalue > 0.01


def test_thinning_estimated_bound():
    fn = lambda t: 1.0 + t / 100.0
    proc = ArrivalProcess(kind=NONHOMOGENEOUS, intensity_fn=fn, lookahead=2.0, seed=8)
    times = ArrivalSampler(proc).arrival_times(3000)
    expected = count_measure(proc, 0, float(times[-1]))
    assert abs(len(times) - expected) <= 4 * math.sqrt(expected)


def test_unbounded_intensity():
    proc = ArrivalProcess(kind=NONHOMOGENEOUS, intensity_fn=lambda t: 1.0 / (t - 0.5), lookahead=1.0)
    with pytest.raises(UnboundedIntensityError):
        ArrivalSampler(proc).sample_interarrival(0.0)


def test_bound_violation_detected():
    proc = ArrivalProcess(kind=NONHOMOGENEOUS, intensity_fn=lambda t: 5.0, intensity_bound=1.0)
    with pytest.raises(UnboundedIntensityError):
        ArrivalSampler(proc).interarrivals(50)


def test_count_measure_examples():
    assert count_measure(ArrivalProcess(rate=3.0), 0, 2) == 6.0
    ramp = ArrivalProcess(kind=NONHOMOGENEOUS, intensity_fn=lambda t: t)
    assert count_measure(ramp, 0, 2) == pytest.approx(2.0, abs=1e-12)
    assert count_measure(ramp, 1.5, 1.5) == 0.0
    assert count_measure(ArrivalProcess(kind=DETERMINISTIC, rate=4.0), 2.0, 2.0) == 0.0


def test_count_measure_bad_interval():
    with pytest.raises(ValidationError):
        count_measure(ArrivalProcess(), 2, 1)


@pytest.mark.parametrize(
    "kwargs",
    [{"kind": "bursty"}, {"rate": 0.0}, {"rate": -1.0}, {"kind": NONHOMOGENEOUS}],
)
def test_process_validation(kwargs):
    with pytest.raises(ValidationError):
        ArrivalProcess(**kwargs)
