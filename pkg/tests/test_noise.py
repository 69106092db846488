import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochch import noise as nz
from stochch.errors import NotMultiplicative
from stochch.spectral import interval, rectangle


@pytest.fixture
def dom():
    return interval(1.0, 64)


def test_zero_model_gives_zero(dom):
    m = nz.zero_noise(dom)
    inc = nz.sample_increment(m, None, 1e-3, 0, 5)
    assert np.all(inc == 0.0)
    assert nz.growth_value(m) == 0.0


def test_power_law_layout(dom):
    m = nz.power_law(dom, 0.5, 2.0, truncation=4, mean_mode_sigma=0.1)
    assert m.sigma0 == 0.1
    assert np.allclose(m.sigma[1:4], 0.5 * np.arange(1, 4) ** -2.0)
    assert np.all(m.sigma[4:] == 0.0)


def test_power_law_2d_truncation():
    d = rectangle(1.0, 1.0, 16, 16)
    m = nz.power_law(d, 1.0, 1.0, truncation=3)
    assert np.count_nonzero(m.sigma) == 8


def test_multiplicative_needs_mean_free():
    with pytest.raises(ValueError):
        nz.power_law(interval(1.0, 16), 1.0, 1.0, mean_mode_sigma=0.2, multiplier=nz.Multiplier("tanh"))


def test_normals_are_keyed():
    a = nz.normals(3, 7, 10, 4, 33)
    b = nz.normals(3, 7, 12, 2, 33)
    assert np.array_equal(a[2:], b)
    assert not np.array_equal(nz.normals(3, 8, 10, 1, 33), a[:1])
    assert not np.array_equal(nz.normals(4, 7, 10, 1, 33), a[:1])


def test_normals_moments():
    z = nz.normals(0, 0, 0, 4000, 25).ravel()
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert abs(z.var() - 1) < 5 * math.sqrt(2 / z.size)
    # kurtosis of a standard normal
    assert abs(np.mean(z**4) - 3) < 0.1


def test_increment_variance(dom):
    m = nz.power_law(dom, 0.3, 1.0, truncation=6, mean_mode_sigma=0.2)
    dt = 1e-2
    incs = np.array([nz.sample_increment(m, None, dt, p, 0) for p in range(4000)])
    var = incs.var(axis=0)
    act = m.sigma > 0
    assert np.allclose(var[act] / (m.sigma[act] ** 2 * dt), 1.0, atol=0.1)
    assert np.all(var[~act] == 0.0)
    assert np.all(np.abs(incs.mean(axis=0)[act]) < 4 * m.sigma[act] * math.sqrt(dt / 4000))


def test_substeps_sum_fine_increments(dom):
    m = nz.power_law(dom, 0.3, 1.0)
    fine = [nz.sample_increment(m, None, 1e-3, 2, s) for s in (6, 7)]
    coarse = nz.sample_increment(m, None, 2e-3, 2, 3, substeps=2)
    assert np.allclose(coarse, fine[0] + fine[1], rtol=1e-13, atol=1e-16)


def test_constant_multiplier_matches_additive(dom):
    add = nz.power_law(dom, 0.3, 1.0, seed=5)
    one = nz.NoiseModel(dom, add.sigma, multiplier=nz.Multiplier("one"), seed=5)
    u = np.random.default_rng(1).standard_normal(dom.shape)
    for s in range(5):
        assert np.array_equal(nz.sample_increment(add, u, 1e-3, 1, s), nz.sample_increment(one, u, 1e-3, 1, s))


def test_smoothing_examples(dom):
    m = nz.single_mode(dom, 1, 0.7)
    assert nz.smooth_covariance(m, 0.0) is m
    s = nz.smooth_covariance(m, 1.0)
    assert s.sigma[1] == pytest.approx(0.7 / (1 + np.pi**2) ** 2, rel=1e-14)
    assert s.epsilon == 1.0


def test_smoothing_distance_closed_form(dom):
    m = nz.single_mode(dom, 1, 0.7)
    for eps in (1e-3, 1e-2, 1e-1):
        s = nz.smooth_covariance(m, eps)
        d = nz.hs_norm_h(dom, s.sigma - m.sigma)
        assert d == pytest.approx(0.7 * abs(1 - (1 + eps * np.pi**2) ** -2), rel=1e-12)


def test_lipschitz_defect_examples(dom):
    m = nz.power_law(dom, 0.3, 1.0, multiplier=nz.Multiplier("tanh", 2.0))
    u = np.random.default_rng(0).standard_normal(dom.shape)
    assert nz.lipschitz_defect(m, u, u) == 0.0
    one = nz.NoiseModel(dom, m.sigma, multiplier=nz.Multiplier("one"))
    assert nz.lipschitz_defect(one, u, 2 * u) == 0.0
    with pytest.raises(NotMultiplicative):
        nz.lipschitz_constant(nz.power_law(dom, 0.3, 1.0))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 10.0), kind=st.sampled_from(["tanh", "clamp"]))
def test_lipschitz_bound_property(seed, scale, kind):
    d = interval(1.0, 32)
    m = nz.power_law(d, 0.4, 0.5, multiplier=nz.Multiplier(kind, scale))
    rng = np.random.default_rng(seed)
    u1, u2 = rng.standard_normal((2, 32)) * rng.uniform(0.01, 10)
    assert nz.lipschitz_defect(m, u1, u2) <= nz.lipschitz_constant(m) * (1 + 1e-12)


def test_growth_examples(dom):
    m = nz.power_law(dom, 0.3, 1.0, truncation=5, mean_mode_sigma=0.1)
    u = np.random.default_rng(2).standard_normal(dom.shape)
    assert nz.growth_value(m, u) == nz.growth_value(m)
    assert nz.growth_value(m) == pytest.approx(math.sqrt(np.sum(m.sigma**2)), rel=1e-14)
    mult = nz.power_law(dom, 0.3, 1.0, multiplier=nz.Multiplier("tanh", 1.0))
    assert nz.growth_value(mult, u) <= nz.growth_bound(mult, u)


def test_multiplicative_increment_keeps_mean(dom):
    m = nz.power_law(dom, 0.3, 1.0, multiplier=nz.Multiplier("clamp", 3.0))
    u = np.random.default_rng(3).standard_normal(dom.shape)
    for p in range(5):
        assert nz.sample_increment(m, u, 1e-3, p, 0)[0] == 0.0


def test_hs_norm_dual_single_mode(dom):
    a = np.zeros(dom.shape)
    a[2] = 0.5
    assert float(nz.hs_norm_dual(dom, a)) == pytest.approx(0.5 / (2 * np.pi), rel=1e-14)
