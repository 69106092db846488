import math

import numpy as np
import pytest

from stochch import diagnostics as dg
from stochch import noise as nz
from stochch import potentials as pot
from stochch.spectral import ScalarField, gradient, interval, quadrature, random_bandlimited
from stochch.stepper import SimulationConfig, run_ensemble, run_trajectory, with_


@pytest.fixture
def dom():
    return interval(1.0, 64)


def cos0(d, a=0.5, m=0.0):
    return ScalarField.from_function(d, lambda x: m + a * np.cos(np.pi * x)).coeffs


def test_chemical_potential_examples(dom):
    z = ScalarField.constant(dom, 0.0)
    assert np.all(dg.chemical_potential(z, pot.regular(), 0.1).coeffs == 0.0)
    u = ScalarField.from_function(dom, lambda x: np.cos(np.pi * x))
    w = dg.chemical_potential(u, pot.linear(), 0.0)
    assert np.allclose(w.values, (np.pi**2 + 1) * u.values, atol=1e-11)


def test_chemical_potential_variational_identity():
    # int w phi = int grad u . grad phi + int (beta_lam(u) + pi(u) + g) phi
    d = interval(1.0, 256)
    rng = np.random.default_rng(4)
    P, lam = pot.regular(), 1e-2
    u = ScalarField(d, random_bandlimited(d, rng, band=8, amplitude=0.5))
    g = ScalarField(d, random_bandlimited(d, rng, band=8, amplitude=0.1))
    for _ in range(5):
        phi = ScalarField(d, random_bandlimited(d, rng, band=8))
        w = dg.chemical_potential(u, P, lam, g)
        lhs = quadrature(d, w.values * phi.values)
        (gu,), (gp,) = gradient(u), gradient(phi)
        nonlin = pot.yosida(P, lam, u.values) + P.pi(u.values) + g.values
        rhs = quadrature(d, gu * gp) + quadrature(d, nonlin * phi.values)
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_energy_examples(dom):
    assert dg.energy(ScalarField.constant(dom, 0.0), pot.regular(), 0.1) == 0.0
    u = ScalarField.from_function(dom, lambda x: np.cos(np.pi * x))
    # quadrature oracle on a fine midpoint grid
    x = (np.arange(100000) + 0.5) / 100000
    c = np.cos(np.pi * x)
    ref = 0.5 * np.mean((np.pi * np.sin(np.pi * x)) ** 2) + np.mean(c**4 / 4 - c**2 / 2)
    assert ref == pytest.approx(np.pi**2 / 4 + 3 / 32 - 1 / 4, rel=1e-9)
    assert dg.energy(u, pot.linear(2.0, pi_slope=1.0), 0.0) == pytest.approx(
        np.pi**2 / 4 + 0.5 - 0.25, rel=1e-12
    )
    assert dg.energy(u, pot.regular(), 0.0) == pytest.approx(ref, rel=1e-9)


def test_energy_monotone_in_lambda(dom):
    u = ScalarField(dom, random_bandlimited(dom, np.random.default_rng(1), amplitude=2.0))
    e = [dg.energy(u, pot.regular(), lam) for lam in (1.0, 1e-1, 1e-2, 1e-3)]
    assert np.all(np.diff(e) >= 0)


def test_estimates_vanish_on_zero_trajectory(dom):
    cfg = SimulationConfig(dom, pot.regular(), 1e-2, np.zeros(dom.shape), 1e-3, 0.01)
    rep = dg.estimate_suite(run_trajectory(cfg))
    assert rep.est1 == 0.0 and rep.est2 == 0.0 and rep.est2_star == 0.0


@pytest.mark.parametrize("make", [pot.regular, pot.logarithmic, pot.double_obstacle])
def test_fenchel_lower_bound_on_runs(dom, make):
    n = nz.power_law(dom, 0.3, 1.0, mean_mode_sigma=0.1, seed=6)
    cfg = SimulationConfig(dom, make(), 1e-2, cos0(dom, 0.4), 5e-4, 0.02, noise=n, scheme="stabilized")
    for r in run_ensemble(cfg, range(4)):
        rep = dg.estimate_suite(r)
        assert rep.fenchel_ok and rep.mean_law_ok and rep.nonnegative
        assert all(rep.checks().values())


def test_est1_lambda_uniform(dom):
    n = nz.power_law(dom, 0.5, 1.0, truncation=8, seed=8)
    base = SimulationConfig(dom, pot.regular(), 1e-1, cos0(dom, 0.3), 1e-3, 0.1, noise=n)
    means = []
    for lam in (1e-1, 1e-2, 1e-3):
        reps = [dg.estimate_suite(r) for r in run_ensemble(with_(base, lam=lam), range(16))]
        means.append(dg.mean_and_se([r.est1 for r in reps])[0])
    assert max(means) / min(means) < 1.2


def test_mean_and_se():
    assert dg.mean_and_se([2.0, 2.0, 2.0]) == (2.0, 0.0)
    m, se = dg.mean_and_se([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5 and se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)


def test_series_rows_follow_snapshots(dom):
    cfg = SimulationConfig(dom, pot.regular(), 1e-2, cos0(dom), 1e-3, 0.01, stride=5)
    rec = run_trajectory(cfg)
    rows = dg.series_rows(rec)
    assert [r[0] for r in rows] == pytest.approx([0.0, 0.005, 0.01])
    assert len(rows[0]) == len(dg.SERIES_COLUMNS)


def test_w_mean_identity(dom):
    n = nz.power_law(dom, 0.3, 1.0, mean_mode_sigma=0.1, seed=2)
    cfg = SimulationConfig(dom, pot.logarithmic(), 1e-2, cos0(dom, 0.4), 5e-4, 0.01, noise=n, scheme="stabilized")
    assert dg.w_mean_defect(run_trajectory(cfg)) < 1e-12


def test_variational_defect_first_order(dom):
    rng = np.random.default_rng(0)
    # low modes keep dt * mu^2 small, so the defect is in its asymptotic regime
    phis = random_bandlimited(dom, rng, band=3, size=(4,))
    mu = dom.eigenvalues
    sizes = []
    for dt in (1e-4, 5e-5, 2.5e-5):
        cfg = SimulationConfig(dom, pot.regular(), 1e-2, cos0(dom, 0.4), dt, 0.01)
        rec = run_trajectory(cfg)
        dfx = dg.variational_defect(rec, phis)
        # the scheme's defect is exactly -mu^2 (u^{n+1} - u^n) paired with phi
        exact = -(mu * mu * (rec.u[1:] - rec.u[:-1])) @ phis.T
        assert np.allclose(dfx, exact, rtol=1e-9, atol=1e-12)
        sizes.append(np.max(np.abs(dfx)))
    rates = np.log2(np.array(sizes[:-1]) / np.array(sizes[1:]))
    assert np.all(rates > 0.8)


def test_moment_check_frozen_mean(dom):
    n = nz.power_law(dom, 0.3, 1.0, seed=1)
    cfg = SimulationConfig(dom, pot.regular(), 1e-2, cos0(dom, 0.4, 0.3), 1e-3, 0.02, noise=n)
    recs = run_ensemble(cfg, range(8))
    rep = dg.moment_check(recs, alpha=2.0)
    m0 = recs[0].m[0]
    assert m0 == pytest.approx(0.3, rel=1e-14)
    assert rep.mean == 0.25 * (2.0 * m0) ** 4
    assert rep.se == 0.0 and rep.stable


def test_moment_check_gaussian_oracle(dom):
    # m(t) = sigma0 W(t) / sqrt(|D|), so E (alpha m)^4 / 4 = 3 alpha^4 sigma0^4 t^2 / (4 |D|^2)
    sigma0, alpha, dt, T = 0.8, 1.0, 1e-2, 0.5
    n = nz.NoiseModel(dom, np.eye(dom.n_modes)[0] * sigma0, seed=3)
    cfg = SimulationConfig(dom, pot.regular(), 1e-2, np.zeros(dom.shape), dt, T, noise=n)
    recs = run_ensemble(cfg, range(2000))
    rep = dg.moment_check(recs, alpha)
    t = dt * np.arange(1, cfg.n_steps + 1)
    exact = float(np.mean(3 * alpha**4 * sigma0**4 * t**2 / 4))
    assert abs(rep.mean - exact) <= 3 * rep.se
    assert abs(rep.mean - rep.half_mean) <= 3 * math.hypot(rep.se, rep.half_se)


def test_moment_check_unverifiable_for_singular(dom):
    cfg = SimulationConfig(dom, pot.logarithmic(), 1e-2, cos0(dom, 0.2), 1e-3, 0.01, scheme="stabilized")
    rep = dg.moment_check([run_trajectory(cfg)], 1.0)
    assert not rep.verifiable and not rep.stable


def test_hypothesis_flags():
    f = dg.hypothesis_flags(pot.double_obstacle(), 0.1)
    assert f == {"full_domain": False, "mean_free_noise": False, "growth": "unclassified"}
    assert dg.hypothesis_flags(pot.regular())["growth"] == "quadratic_derivative"
