import math

import numpy as np
import pytest

from stochch import experiments as ex
from stochch import noise as nz
from stochch import potentials as pot
from stochch.errors import MeanMismatch, NotMultiplicative, ValidationError
from stochch.output import read_csv
from stochch.spectral import ScalarField, interval
from stochch.stepper import SimulationConfig, run_ensemble


@pytest.fixture
def dom():
    return interval(1.0, 32)


def cos0(d, a=0.5, m=0.0):
    return ScalarField.from_function(d, lambda x: m + a * np.cos(np.pi * x)).coeffs


def base_cfg(d, T=0.05, dt=1e-3, lam=1e-1, noise=None, potential=None, **kw):
    noise = noise if noise is not None else nz.power_law(d, 0.2, 1.0, truncation=6, seed=2)
    return SimulationConfig(d, potential or pot.regular(), lam, cos0(d), dt, T, noise=noise, **kw)


def test_study_spec_validation(dom):
    cfg = base_cfg(dom)
    with pytest.raises(ValidationError):
        ex.StudySpec(cfg, (0.1, 0.2, 0.15))
    with pytest.raises(ValidationError):
        ex.StudySpec(cfg, ())
    s = ex.StudySpec(cfg, (0.1, 0.01), n_paths=3, coupled=False)
    assert s.path_ids(1) == [3, 4, 5]
    assert ex.StudySpec(cfg, (0.1,), n_paths=3).path_ids(1) == [0, 1, 2]


def test_identical_lambda_metric_zero(dom):
    cfg = ex._study_cfg(base_cfg(dom))
    a, b = run_ensemble(cfg, [0, 1]), run_ensemble(cfg, [0, 1])
    assert all(ex.coupled_metric(x, y) == 0.0 for x, y in zip(a, b))


def test_lambda_refinement_linear_model_scales_with_gap(dom):
    # beta = id has beta_lam = beta / (1 + lam), so the metric tracks the gap in lambda
    cfg = base_cfg(dom, potential=pot.linear())
    sched = (0.2, 0.1, 0.05, 0.025)
    tab = ex.lambda_refinement(ex.StudySpec(cfg, sched, n_paths=4))
    m = tab.column("metric_mean")
    gaps = np.abs(np.diff([1 / (1 + l) for l in sched]))
    r = m / gaps
    assert np.max(r) / np.min(r) < 1.5
    assert tab.passed


def test_lambda_refinement_regular_decreases(dom):
    tab = ex.lambda_refinement(ex.StudySpec(base_cfg(dom), (1e-1, 3e-2, 1e-2), n_paths=8))
    m = tab.column("metric_mean")
    assert m[-1] < m[0]
    assert tab.checks["coupled keys identical"]


def test_epsilon_smoothing_examples(dom):
    n = nz.single_mode(dom, 1, 0.5, seed=4)
    tab = ex.epsilon_smoothing(ex.StudySpec(base_cfg(dom, noise=n), (0.0, 1e-2, 3e-2), n_paths=4))
    assert tab.column("dist_mean")[0] == 0.0
    eps = tab.column("epsilon")
    assert np.allclose(tab.column("hs_H"), 0.5 * np.abs(1 - (1 + eps * np.pi**2) ** -2), rtol=1e-12)
    with pytest.raises(ValidationError):
        ex.epsilon_smoothing(ex.StudySpec(base_cfg(dom), (1e-3, 1e-2)))


def test_continuous_dependence_zero_delta(dom):
    tab = ex.continuous_dependence(ex.StudySpec(base_cfg(dom), (0.0,), n_paths=3))
    assert tab.column("lhs")[0] == 0.0


def test_continuous_dependence_mean_guard(dom):
    shift = np.zeros(dom.shape)
    shift[0] = 1.0
    with pytest.raises(MeanMismatch):
        ex.continuous_dependence(ex.StudySpec(base_cfg(dom), (0.1,), n_paths=2), direction=shift)
    with pytest.raises(MeanMismatch):
        ex.continuous_dependence(ex.StudySpec(base_cfg(dom), (0.1,), n_paths=2), direction=shift, target="B")


@pytest.mark.parametrize("target", ["g", "B"])
def test_continuous_dependence_other_targets(dom, target):
    tab = ex.continuous_dependence(ex.StudySpec(base_cfg(dom), (1e-1, 1e-2, 1e-3), n_paths=4), target=target)
    assert abs(tab.info["slope"] - 1.0) < 0.2
    assert tab.info["ratio_spread"] < 10


def test_perturbation_direction_unit(dom):
    from stochch.spectral import norm_coeffs

    phi = ex.perturbation_direction(dom, 2)
    assert float(norm_coeffs(dom, phi, "dual_star")) == pytest.approx(1.0, rel=1e-14)
    assert phi[0] == 0.0


def test_picard_constant_multiplier(dom):
    n = nz.power_law(dom, 0.2, 1.0, multiplier=nz.Multiplier("one"), seed=1)
    tab = ex.picard_contraction(ex.StudySpec(base_cfg(dom, noise=n), (0.05, 0.025), n_paths=4))
    assert np.all(tab.column("q") == 0.0)
    assert np.all(tab.column("d_last") <= 1e-8)


def test_picard_needs_multiplicative(dom):
    with pytest.raises(NotMultiplicative):
        ex.picard_contraction(ex.StudySpec(base_cfg(dom), (0.05,)))


def test_picard_tanh_contracts(dom):
    n = nz.power_law(dom, 0.2, 1.0, truncation=6, multiplier=nz.Multiplier("tanh", 5.0), seed=3)
    tab = ex.picard_contraction(ex.StudySpec(base_cfg(dom, noise=n, dt=5e-4), (0.05, 0.025), n_paths=8))
    q = tab.column("q")
    assert q[1] < q[0] < 1.0


def test_regularity_flags_obstacle(dom):
    cfg = base_cfg(dom, potential=pot.double_obstacle(), T=0.01, scheme="stabilized")
    tab = ex.regularity_study(ex.StudySpec(cfg, (1e-1, 1e-2), n_paths=2))
    assert tab.info["hypotheses_hold"] is False
    assert tab.info["growth"] == "unclassified"
    assert len(tab.rows) == 2 and np.all(np.isfinite(tab.column("sup_grad_u2")))
    assert tab.checks["deterministic energy dissipation"]


def test_regularity_deterministic_traces(dom):
    cfg = base_cfg(dom, noise=nz.zero_noise(dom), T=0.02)
    tab = ex.regularity_study(ex.StudySpec(cfg, (1e-1, 1e-2), n_paths=1))
    assert tab.checks["deterministic energy dissipation"]
    assert tab.info["hypotheses_hold"] is True


def test_self_convergence_needs_nesting(dom):
    with pytest.raises(ValidationError):
        ex.self_convergence(ex.StudySpec(base_cfg(dom), (4e-3, 3e-3, 1e-3)))


def test_key_audit_detects_uncoupled(dom):
    cfg = ex._study_cfg(base_cfg(dom, T=0.005))
    a, b = run_ensemble(cfg, [0, 1]), run_ensemble(cfg, [2, 3])
    assert ex.key_audit([a, a]) and not ex.key_audit([a, b])


def test_manufactured_source_oracle(dom):
    # independent form f = d_t u* + Lap^2 u* - Lap(beta_lam(u*) + pi(u*)); the source enters as -Lap g
    P, lam = pot.regular(), 1e-2
    d = interval(2.0, 64)
    source, exact = ex.manufactured_source(d, P, lam)
    x = d.nodes[0]
    mu1 = (np.pi / 2.0) ** 2
    for t in (0.0, 0.3):
        ustar = math.exp(-t) * np.cos(np.pi * x / 2.0)
        F = pot.yosida(P, lam, ustar) + P.pi(ustar)
        Fc = d.to_spectral(F)
        mu = d.eigenvalues
        f = d.to_spectral(-ustar + mu1 * mu1 * ustar) + mu * Fc
        g = source(t)
        assert np.allclose(mu[1:] * g[1:], -f[1:], atol=1e-10)
        assert np.allclose(exact(t), d.to_spectral(ustar), atol=1e-14)


def test_linear_benchmark_first_order(dom):
    tab = ex.linear_benchmark(interval(1.0, 32), [4e-4, 2e-4, 1e-4], 0.02)
    assert tab.passed and abs(tab.info["order"] - 1) < 0.1


def test_table_csv_and_summary(tmp_path):
    t = ex.Table("demo", ("a", "b"), [(1.0, 2.5), (0.1, math.nan)], {"ok": True}, {"slope": 1.0})
    t.to_csv(tmp_path / "t.csv")
    cols, data = read_csv(tmp_path / "t.csv")
    assert cols == ["a", "b"] and data[0, 1] == 2.5 and math.isnan(data[1, 1])
    assert "[PASS] ok" in t.summary() and "slope = 1" in t.summary()
    assert t.passed
