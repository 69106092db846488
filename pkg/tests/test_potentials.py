import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochch import potentials as pot
from stochch.errors import NotDifferentiable


# --- independent oracles -----------------------------------------------------


def bisect_root(f, a, b, tol=1e-13):
    fa = f(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
        if b - a < tol:
            break
    return 0.5 * (a + b)


def grid_min(obj, lo=-4.0, hi=4.0, h=1e-5):
    y = np.arange(lo, hi + h, h)
    return float(np.min(obj(y)))


def golden_section_max(f, a, b, iters=200):
    g = (math.sqrt(5) - 1) / 2
    for _ in range(iters):
        c, d = b - g * (b - a), a + g * (b - a)
        if f(c) > f(d):
            b = d
        else:
            a = c
    return f(0.5 * (a + b))


# --- resolvent ---------------------------------------------------------------


def test_regular_resolvent_forced_root():
    assert pot.resolvent(pot.regular(), 1.0, 2.0) == pytest.approx(1.0, abs=1e-14)


def test_obstacle_resolvent_is_projection():
    P = pot.double_obstacle()
    assert pot.resolvent(P, 0.5, 3.0) == 1.0
    assert pot.resolvent(P, 0.5, -3.0) == -1.0
    assert pot.resolvent(P, 0.5, 0.3) == pytest.approx(0.3)


def test_regular_resolvent_against_bisection():
    y = bisect_root(lambda y: y + 0.1 * y**3 - 1.5, 0.0, 1.5)
    assert float(pot.resolvent(pot.regular(), 0.1, 1.5)) == pytest.approx(y, abs=1e-12)


@pytest.mark.parametrize("make", [pot.regular, pot.logarithmic, pot.double_obstacle, pot.linear])
def test_resolvent_fixes_zero(make):
    assert float(pot.resolvent(make(), 0.3, 0.0)) == 0.0
    assert float(pot.yosida(make(), 0.3, 0.0)) == 0.0


def test_log_resolvent_against_bisection():
    P = pot.logarithmic()
    for lam, x in [(0.1, 0.5), (0.01, 3.0), (1.0, -2.0)]:
        y = bisect_root(lambda y: y + lam * math.log((1 + y) / (1 - y)) - x, -1 + 1e-15, 1 - 1e-15)
        assert float(pot.resolvent(P, lam, x)) == pytest.approx(y, abs=1e-11)


@settings(max_examples=200, deadline=None)
@given(
    lam=st.floats(1e-3, 1.0),
    x=st.floats(-5.0, 5.0),
    name=st.sampled_from(["regular", "logarithmic", "double_obstacle", "linear"]),
)
def test_resolvent_residual_property(lam, x, name):
    P = {"regular": pot.regular, "logarithmic": pot.logarithmic,
         "double_obstacle": pot.double_obstacle, "linear": pot.linear}[name]()
    assert float(pot.resolvent_residual(P, lam, x)) <= 1e-10


def test_piecewise_graph_resolvent():
    P = pot.piecewise_graph([-1.0, 0.0, 1.0], [-2.0, 0.0, 3.0])
    for lam, x in [(0.5, 1.0), (0.1, -4.0), (2.0, 0.7)]:
        y = float(pot.resolvent(P, lam, x))
        beta = np.interp(y, [-1, 0, 1], [-2, 0, 3]) if abs(y) <= 1 else (3 * y if y > 0 else 2 * y)
        assert y + lam * beta == pytest.approx(x, abs=1e-10)


# --- Yosida and Moreau --------------------------------------------------------


def test_yosida_examples():
    assert float(pot.yosida(pot.regular(), 1.0, 2.0)) == pytest.approx(1.0)
    assert float(pot.yosida(pot.double_obstacle(), 0.5, 3.0)) == pytest.approx(4.0)


@settings(max_examples=200, deadline=None)
@given(lam=st.floats(1e-3, 1.0), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_yosida_lipschitz_and_monotone(lam, a, b):
    for P in (pot.regular(), pot.logarithmic(), pot.double_obstacle()):
        ya, yb = float(pot.yosida(P, lam, a)), float(pot.yosida(P, lam, b))
        assert abs(ya - yb) <= abs(a - b) / lam * (1 + 1e-9) + 1e-9
        assert (ya - yb) * (a - b) >= -1e-9


def test_moreau_regular_grid_oracle():
    ref = grid_min(lambda y: (2.0 - y) ** 2 / 2.0 + y**4 / 4.0)
    assert ref == pytest.approx(0.75, abs=1e-9)
    assert float(pot.moreau(pot.regular(), 1.0, 2.0)) == pytest.approx(ref, abs=1e-9)


def test_moreau_obstacle_grid_oracle():
    P = pot.double_obstacle()
    y = np.arange(-1.0, 1.0 + 1e-5, 1e-5)
    ref = float(np.min((3.0 - y) ** 2 / (2 * 0.5) + P.j(y)))
    assert float(pot.moreau(P, 0.5, 3.0)) == pytest.approx(ref, abs=1e-8)
    assert ref == pytest.approx(4.0 + float(P.j(1.0)), abs=1e-8)


@pytest.mark.parametrize("make", [pot.regular, pot.logarithmic, pot.double_obstacle])
def test_moreau_zero_and_monotone(make):
    P = make()
    assert float(pot.moreau(P, 0.2, 0.0)) == 0.0
    xs = np.linspace(-0.9, 0.9, 41)
    seq = np.array([pot.moreau(P, lam, xs) for lam in (1e-1, 1e-2, 1e-3, 1e-4)])
    assert np.all(np.diff(seq, axis=0) >= -1e-12)
    assert np.all(seq <= P.j(xs) + 1e-12)
    gap = np.abs(seq - P.j(xs))
    assert np.all(gap[-1] <= gap[0]) and np.max(gap[-1]) <= 1e-3


# --- conjugate ----------------------------------------------------------------


def test_regular_conjugate_oracle():
    ref = golden_section_max(lambda x: x - x**4 / 4, -3, 3)
    assert ref == pytest.approx(0.75, abs=1e-10)
    assert float(pot.conjugate(pot.regular(), 1.0)) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("make", [pot.regular, pot.logarithmic, pot.double_obstacle, pot.linear])
def test_conjugate_at_zero(make):
    assert float(pot.conjugate(make(), 0.0)) == pytest.approx(0.0, abs=1e-12)


def test_fenchel_equality_along_resolvent():
    rng = np.random.default_rng(3)
    for P in (pot.regular(), pot.logarithmic(), pot.double_obstacle()):
        for lam in (1e-2, 1e-1, 1.0):
            x = rng.uniform(-4, 4, 50)
            J = pot.resolvent(P, lam, x)
            b = pot.yosida(P, lam, x)
            lhs = P.j(J) + pot.conjugate(P, b)
            assert np.allclose(lhs, J * b, rtol=1e-8, atol=1e-8)


# --- derivative ---------------------------------------------------------------


def test_yosida_derivative_regular_fd_oracle():
    P = pot.regular()
    h = 1e-6
    fd = (float(pot.yosida(P, 1.0, 2.0 + h)) - float(pot.yosida(P, 1.0, 2.0 - h))) / (2 * h)
    assert fd == pytest.approx(0.75, rel=1e-6)
    assert float(pot.yosida_derivative(P, 1.0, 2.0)) == pytest.approx(0.75, rel=1e-12)


def test_yosida_derivative_linear_closed_form():
    P = pot.linear()
    for lam in (0.0, 0.1, 2.0):
        assert np.allclose(pot.yosida_derivative(P, lam, np.linspace(-3, 3, 7)), 1.0 / (1.0 + lam))


def test_yosida_derivative_obstacle_kink():
    with pytest.raises(NotDifferentiable):
        pot.yosida_derivative(pot.double_obstacle(), 0.5, 1.0)


# --- perturbation and growth ------------------------------------------------------


def test_regular_perturbation():
    P = pot.regular()
    assert float(pot.perturbation(P, 2.0)) == -2.0
    assert float(pot.perturbation_primitive(P, 2.0)) == -2.0
    assert float(pot.perturbation_primitive(P, 0.0)) == 0.0
    assert P.c0 == abs(float(pot.perturbation(P, 0.0)))


def test_pi_lipschitz_sampled_matches_declared():
    for P in (pot.regular(), pot.logarithmic(), pot.double_obstacle()):
        assert pot.pi_lipschitz_sampled(P) <= P.pi_lipschitz * (1 + 1e-12)


def test_growth_classes():
    g = pot.classify_growth(pot.regular())
    assert g.kind is pot.GrowthKind.QUADRATIC_DERIVATIVE
    # sampled sup of 3r^2/(1+r^2) on [-100, 100]
    assert g.R == pytest.approx(3e4 / (1 + 1e4), rel=1e-12)
    assert pot.classify_growth(pot.double_obstacle()).kind is pot.GrowthKind.UNCLASSIFIED
    P = pot.custom_graph(
        beta=lambda x: x * np.exp(x * x),
        dbeta=lambda x: (1 + 2 * x * x) * np.exp(x * x),
    )
    g = pot.classify_growth(P, sample_box=(-3.0, 3.0))
    x = np.linspace(-3, 3, 10001)
    ratio = np.max((1 + 2 * x * x) * np.exp(x * x) / (1 + P.j(x)))
    assert g.kind is pot.GrowthKind.J_DOMINATED
    assert g.R == pytest.approx(ratio, rel=1e-6)


def test_symmetry_ratio_finite():
    assert pot.symmetry_ratio(pot.regular(), 50.0) == pytest.approx(1.0)
    assert math.isfinite(pot.symmetry_ratio(pot.logarithmic(), 0.99))
