import math

import numpy as np
import pytest
from scipy import integrate

from barronwave.montecarlo import (
    THREADS_ENV,
    GaussianProposal,
    HeavyTailProposal,
    InverseDistanceProposal,
    Mixture,
    MonteCarloConfig,
    SingularProposal,
    estimate,
    stream_rng,
)


@pytest.mark.parametrize("kwargs", [dict(sample_count=0), dict(sample_count=999), dict(stream_count=0),
                                    dict(seed=-1)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        MonteCarloConfig(**kwargs)


def test_streams_follow_documented_rule():
    a = stream_rng(5, 2, 3).random(4)
    b = np.random.default_rng(np.random.SeedSequence(5, spawn_key=(2, 3))).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, stream_rng(5, 2, 4).random(4))


def _draw(rng, n):
    return rng.standard_normal(n) + 1j * rng.random(n)


def test_estimate_matches_plain_statistics():
    mc = MonteCarloConfig(200_003, 1, 5)
    mean, err = estimate(_draw, mc)
    # rebuild the same samples stream by stream
    counts = [40_001, 40_001, 40_001, 40_000, 40_000]
    xs = []
    for j, c in enumerate(counts):
        rng = stream_rng(1, 0, j)
        left = c
        while left:
            n = min(left, 1 << 16)
            xs.append(_draw(rng, n))
            left -= n
    x = np.concatenate(xs)
    assert mean == pytest.approx(x.mean(), rel=1e-12)
    assert err == pytest.approx(x.std(ddof=1) / math.sqrt(x.size), rel=1e-10)


def test_thread_count_does_not_change_bits(monkeypatch):
    mc = MonteCarloConfig(300_000, 9, 6)
    monkeypatch.setenv(THREADS_ENV, "1")
    one = estimate(_draw, mc, term=3)
    monkeypatch.setenv(THREADS_ENV, "4")
    four = estimate(_draw, mc, term=3)
    assert one == four


def _total_mass(prop, radius_scale):
    # integrate the density over shells around its centre
    def shell(r):
        x = prop.center + np.array([[r, 0.0, 0.0]])
        return 4 * math.pi * r * r * float(prop.density(x)[0])
    a, _ = integrate.quad(shell, 0, radius_scale, limit=200)
    b, _ = integrate.quad(shell, radius_scale, math.inf, limit=200)
    return a + b


@pytest.mark.parametrize("prop", [SingularProposal([0.1, 0, 0], 0.7), InverseDistanceProposal([0, 1, 0], 1.3),
                                  HeavyTailProposal([0, 0, 0], 2.0), GaussianProposal([1, 1, 1], 0.5)])
def test_proposal_densities_normalised(prop):
    assert _total_mass(prop, 3.0) == pytest.approx(1.0, rel=1e-7)


@pytest.mark.parametrize("prop", [SingularProposal([0.1, 0, 0], 0.7), InverseDistanceProposal([0, 1, 0], 1.3),
                                  HeavyTailProposal([0, 0, 0], 2.0), GaussianProposal([1, 1, 1], 0.5)])
def test_proposal_sampler_matches_density(prop):
    # E_q[f/q] for a target narrower than every proposal must reproduce its integral
    rng = np.random.default_rng(0)
    x = prop.sample(rng, 400_000)
    f = lambda y: np.exp(-8.0 * np.sum((y - prop.center - 0.1) ** 2, axis=1))
    w = f(x) / prop.density(x)
    assert w.mean() == pytest.approx((math.pi / 8) ** 1.5, abs=4 * w.std() / math.sqrt(w.size))


def test_mixture_density_is_average():
    a, b = GaussianProposal([0, 0, 0], 1.0), HeavyTailProposal([0, 0, 0], 1.0)
    x = np.random.default_rng(1).normal(size=(10, 3))
    assert np.allclose(Mixture(a, b).density(x), 0.5 * (a.density(x) + b.density(x)))
