"""Invariant suite run by ``stochch verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import noise as nz
from . import potentials as pot
from .spectral import ScalarField, dual_equivalence, interval, norm_coeffs, random_bandlimited, rectangle
from .stepper import SimulationConfig, lemma_constants, operator_coeffs, run_ensemble


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}" + (f"  ({self.detail})" if self.detail else "")


MODELS: dict[str, Callable[[], pot.PotentialModel]] = {
    "regular": pot.regular,
    "logarithmic": pot.logarithmic,
    "double_obstacle": pot.double_obstacle,
    "linear": pot.linear,
}


def _samples(rng, n):
    lam = 10.0 ** rng.uniform(-3, 0, n)
    x = rng.uniform(-5, 5, n)
    return lam, x


def potential_checks(n: int = 10_000, seed: int = 0) -> list[Check]:
    out = []
    rng = np.random.default_rng(seed)
    for name, make in MODELS.items():
        P = make()
        lam, x = _samples(rng, n)
        res = float(np.max(pot.resolvent_residual(P, lam, x)))
        out.append(Check(f"{name}: resolvent residual <= 1e-10", res <= 1e-10, f"max {res:.2e}"))
        x2 = x + rng.normal(0, 1, n)
        ya = pot.yosida(P, lam, x)
        yb = pot.yosida(P, lam, x2)
        lip = bool(np.all(np.abs(ya - yb) <= np.abs(x - x2) / lam + 1e-12 * (1 + np.abs(ya) + np.abs(yb))))
        mono = bool(np.all((ya - yb) * (x - x2) >= -1e-12))
        out.append(Check(f"{name}: Yosida monotone and 1/lambda-Lipschitz", lip and mono))
        # j_lam nondecreasing as lam decreases, bounded by j
        lam2 = lam * 10.0 ** rng.uniform(-2, 0, n)
        xs = rng.uniform(-0.99, 0.99, n)
        m1, m2 = pot.moreau(P, lam, xs), pot.moreau(P, lam2, xs)
        jx = P.j(xs)
        ok = bool(np.all(m2 >= m1 - 1e-12 * (1 + np.abs(m1))) and np.all(m2 <= jx + 1e-12 * (1 + jx)))
        out.append(Check(f"{name}: Moreau envelope monotone in lambda, below j", ok))
        J = pot.resolvent(P, lam, x)
        fy = P.j(J) + pot.conjugate(P, ya) - J * ya
        fy_err = float(np.max(np.abs(fy) / (1.0 + np.abs(J * ya))))
        out.append(Check(f"{name}: Fenchel equality along the resolvent", fy_err <= 1e-8, f"max {fy_err:.2e}"))
        if name != "double_obstacle":
            lamd = 10.0 ** rng.uniform(-2, 0, n)
            xd = rng.uniform(-3, 3, n)
            h = 1e-5
            fd = (pot.yosida(P, lamd, xd + h) - pot.yosida(P, lamd, xd - h)) / (2 * h)
            an = pot.yosida_derivative(P, lamd, xd)
            # relative error where the derivative is not lost in rounding
            big = np.abs(an) > 1e-3
            rel = np.abs(fd - an)[big] / np.abs(an)[big]
            ok = bool(np.all(np.abs(fd - an) <= 1e-6 * np.abs(an) + 1e-9))
            out.append(Check(f"{name}: derivative formula vs finite differences", ok, f"max rel {float(np.max(rel)):.2e}"))
    return out


def spectral_checks(n_fields: int = 200, seed: int = 0) -> list[Check]:
    out = []
    rng = np.random.default_rng(seed)
    for dom in (interval(1.0, 256), rectangle(1.0, 2.0, 64, 64)):
        c = rng.standard_normal((n_fields,) + dom.shape)
        mu = dom.eigenvalues
        inv = np.where(mu > 0, c / np.where(mu > 0, mu, 1.0), 0.0)
        back = mu * inv
        expect = c.copy()
        expect[(Ellipsis,) + dom.zero] = 0.0
        err = float(np.max(np.abs(back - expect)) / np.max(np.abs(c)))
        out.append(Check(f"{dom.shape}: -Lap N = I - mean", err <= 1e-12, f"{err:.1e}"))
        a, b = c[: n_fields // 2], c[n_fields // 2 :]
        a0, b0 = a.copy(), b.copy()
        a0[(Ellipsis,) + dom.zero] = 0.0
        b0[(Ellipsis,) + dom.zero] = 0.0
        na = np.where(mu > 0, a0 / np.where(mu > 0, mu, 1.0), 0.0)
        nb = np.where(mu > 0, b0 / np.where(mu > 0, mu, 1.0), 0.0)
        s1 = np.sum(a0 * nb, axis=dom.axes)
        s2 = np.sum(b0 * na, axis=dom.axes)
        err = float(np.max(np.abs(s1 - s2) / (np.abs(s1) + 1e-300)))
        out.append(Check(f"{dom.shape}: N symmetric", err <= 1e-12, f"{err:.1e}"))
        vals = dom.to_physical(a)
        quad = np.sum(vals * dom.to_physical(b), axis=dom.axes) * dom.cell
        spec = np.sum(a * b, axis=dom.axes)
        err = float(np.max(np.abs(quad - spec) / (1 + np.abs(spec))))
        out.append(Check(f"{dom.shape}: Parseval", err <= 1e-10, f"{err:.1e}"))
        lo, hi = dual_equivalence(dom)
        flo, fhi = dual_equivalence(dom, c)
        ok = lo * (1 - 1e-12) <= flo <= fhi <= hi * (1 + 1e-12)
        out.append(Check(f"{dom.shape}: dual norm equivalence", ok, f"sharp [{lo:.4f}, {hi:.4f}], fitted [{flo:.4f}, {fhi:.4f}]"))
    return out


def noise_checks(seed: int = 0) -> list[Check]:
    dom = interval(1.0, 64)
    add = nz.power_law(dom, 0.3, 1.0, seed=seed)
    one = nz.NoiseModel(dom, add.sigma, multiplier=nz.Multiplier("one"), seed=seed)
    u = np.random.default_rng(seed).standard_normal(dom.shape)
    same = all(
        np.array_equal(nz.sample_increment(add, u, 1e-3, p, s), nz.sample_increment(one, u, 1e-3, p, s))
        for p in range(4) for s in range(4)
    )
    mult = nz.power_law(dom, 0.3, 1.0, seed=seed, multiplier=nz.Multiplier("tanh", 3.0))
    rng = np.random.default_rng(seed + 1)
    ratios = [nz.lipschitz_defect(mult, rng.standard_normal(64), rng.standard_normal(64)) for _ in range(200)]
    cb = nz.lipschitz_constant(mult)
    mean_zero = all(nz.sample_increment(mult, u, 1e-3, p, 0)[0] == 0.0 for p in range(8))
    return [
        Check("h = 1 reproduces additive increments", same),
        Check("sampled Lipschitz ratio <= C_B", max(ratios) <= cb * (1 + 1e-12), f"{max(ratios):.3g} <= {cb:.3g}"),
        Check("multiplicative increments keep the mean", mean_zero),
    ]


def operator_checks(n_pairs: int = 200, seed: int = 0) -> list[Check]:
    out = []
    rng = np.random.default_rng(seed)
    dom = interval(1.0, 64)
    for name in ("regular", "logarithmic", "double_obstacle"):
        P = MODELS[name]()
        for lam in (1e-1, 1e-2):
            c, c1, c1p, f1, c2, f2 = lemma_constants(P, lam, dom, None)
            amp = 10.0 ** rng.uniform(-2, 1, (n_pairs, 1))
            v1 = random_bandlimited(dom, rng, size=(n_pairs,)) * amp
            v2 = random_bandlimited(dom, rng, size=(n_pairs,)) * amp
            a1 = operator_coeffs(P, lam, dom, v1)
            a2 = operator_coeffs(P, lam, dom, v2)
            d = v1 - v2
            h2 = norm_coeffs(dom, d, "H") ** 2
            lhs = np.sum((a1 - a2) * d, axis=-1)
            mono = bool(np.all(lhs >= -c * h2 - 1e-8 * (np.abs(lhs) + c * h2)))
            pv = np.sum(a1 * v1, axis=-1)
            rhs = c1 * norm_coeffs(dom, v1, "V2") ** 2 - c1p * norm_coeffs(dom, v1, "H") ** 2 - f1
            coer = bool(np.all(pv >= rhs - 1e-8 * (np.abs(pv) + np.abs(rhs))))
            an = norm_coeffs(dom, a1, "V2_dual")
            bd = c2 * norm_coeffs(dom, v1, "V2") + f2
            bnd = bool(np.all(an <= bd * (1 + 1e-8)))
            out.append(Check(f"{name} lambda={lam:g}: weak monotonicity, coercivity, boundedness", mono and coer and bnd))
    return out


def trajectory_checks(seed: int = 0) -> list[Check]:
    dom = interval(1.0, 64)
    u0 = ScalarField.from_function(dom, lambda x: 0.3 * np.cos(np.pi * x) + 0.1).coeffs
    noise = nz.power_law(dom, 0.2, 1.0, mean_mode_sigma=0.1, seed=seed)
    cfg = SimulationConfig(dom, pot.regular(), 1e-2, u0, 1e-3, 0.05, noise=noise)
    recs = run_ensemble(cfg, list(range(4)))
    defect = max(float(np.max(np.abs(r.series["mean"] - r.series["m"]))) for r in recs)
    sup_h = max(float(np.max(r.series["H_norm"])) for r in recs)
    res = max(float(np.max(r.series["residual"] / (1 + r.series["H_norm"]))) for r in recs)
    again = run_ensemble(cfg, list(range(4)))
    same = all(np.array_equal(a.u, b.u) for a, b in zip(recs, again))
    return [
        Check("discrete mean law", defect <= 1e-12 * (1 + sup_h), f"{defect:.1e}"),
        Check("integral-equation residual <= 1e-9", res <= 1e-9, f"{res:.1e}"),
        Check("replay is bit-identical", same),
    ]


def run_all(seed: int = 0) -> list[Check]:
    return (
        potential_checks(seed=seed)
        + spectral_checks(seed=seed)
        + noise_checks(seed=seed)
        + operator_checks(seed=seed)
        + trajectory_checks(seed=seed)
    )
