"""Estimate quantities along trajectories and the checks they must satisfy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import potentials as pot
from .spectral import ScalarField, laplacian, norm, quadrature
from .stepper import TrajectoryRecord

SERIES_COLUMNS = (
    "t", "mean", "H_norm", "V1_semi", "V2_norm", "dual_star", "energy",
    "j_integral", "jstar_integral", "w_V1_semi", "residual",
)


def chemical_potential(u: ScalarField, potential: pot.PotentialModel, lam: float, g: Optional[ScalarField] = None) -> ScalarField:
    """``-Lap u + beta_lam(u) + pi(u) + g``."""
    dom = u.domain
    vals = u.values
    F = dom.to_spectral(pot.yosida(potential, lam, vals) + potential.pi(vals))
    w = -laplacian(u).coeffs + F
    if g is not None:
        w = w + g.coeffs
    return ScalarField(dom, w)


def energy(u: ScalarField, potential: pot.PotentialModel, lam: float) -> float:
    """``F_lam(u) = 1/2 |grad u|^2 + int j_lam(u) + int pihat(u)``."""
    vals = u.values
    grad2 = float(norm(u, "V1_semi")) ** 2
    dens = pot.moreau(potential, lam, vals) + potential.pi_hat(vals)
    return 0.5 * grad2 + float(quadrature(u.domain, dens))


@dataclass
class EstimateReport:
    """Per-path estimate quantities.

    Sums over steps use the left endpoints ``n = 0 .. N-1`` except the
    ``V2`` part of ``est1``, which follows the implicit states ``n = 1 .. N``.
    """

    est1: float
    est2: float
    est2_star: float
    sup_grad_u2: float
    sup_j_lam: float
    grad_w_l2: float
    energy: np.ndarray
    w_trace: np.ndarray
    mean_defect: float
    sup_H: float
    residual_max: float
    flags: dict = field(default_factory=dict)

    @property
    def mean_law_ok(self) -> bool:
        return self.mean_defect <= 1e-12 * (1.0 + self.sup_H)

    @property
    def fenchel_ok(self) -> bool:
        return self.est2_star <= self.est2 + 1e-12 * (1.0 + abs(self.est2))

    @property
    def nonnegative(self) -> bool:
        vals = (self.est1, self.est2, self.sup_grad_u2, self.grad_w_l2, self.mean_defect, self.residual_max)
        return all(v >= 0 for v in vals) and self.est2_star >= -1e-12

    def checks(self) -> dict:
        return {"mean_law": self.mean_law_ok, "fenchel": self.fenchel_ok, "nonnegative": self.nonnegative}


def estimate_suite(record: TrajectoryRecord) -> EstimateReport:
    s = record.series
    if not s:
        raise ValueError("estimate_suite needs a tracked record")
    cfg = record.config
    dt = cfg.dt
    H = s["H_norm"]
    est1 = float(np.max(H**2) + dt * np.sum(s["V2_norm"][1:] ** 2))
    est2 = float(dt * np.sum(s["beta_u"][:-1]))
    est2s = float(dt * np.sum(s["jstar_integral"][:-1]))
    flags = dict(record.flags)
    flags["mean_free_noise"] = cfg.noise_model.sigma0 == 0.0
    return EstimateReport(
        est1=est1,
        est2=est2,
        est2_star=est2s,
        sup_grad_u2=float(np.max(s["V1_semi"] ** 2)),
        sup_j_lam=float(np.max(s["j_integral"])),
        grad_w_l2=float(dt * np.sum(s["w_V1_semi"][:-1] ** 2)),
        energy=s["energy"].copy(),
        w_trace=s["w_V1_semi"].copy(),
        mean_defect=float(np.max(np.abs(s["mean"] - s["m"]))),
        sup_H=float(np.max(H)),
        residual_max=float(np.max(s["residual"])),
        flags=flags,
    )


def mean_and_se(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    if x.size < 2 or np.all(x == x.flat[0]):
        return float(x.flat[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def ensemble_summary(reports: Sequence[EstimateReport]) -> dict:
    """Monte Carlo mean and standard error of each scalar estimate."""
    keys = ("est1", "est2", "est2_star", "sup_grad_u2", "sup_j_lam", "grad_w_l2", "mean_defect", "residual_max")
    return {k: mean_and_se([getattr(r, k) for r in reports]) for k in keys}


def series_rows(record: TrajectoryRecord) -> list[tuple]:
    """Rows of the time-series table at the record's snapshot steps."""
    s = record.series
    rows = []
    for n, t in zip(record.steps, record.times):
        rows.append((float(t),) + tuple(float(s[c][n]) for c in SERIES_COLUMNS[1:]))
    return rows


# ---------------------------------------------------------------------------
# Trajectory identities


def energy_increments(record: TrajectoryRecord) -> np.ndarray:
    """``F(u^{n+1}) - F(u^n)`` relative to ``1 + F(u^n)``."""
    e = record.series["energy"]
    return (e[1:] - e[:-1]) / (1.0 + np.abs(e[:-1]))


def w_mean_defect(record: TrajectoryRecord) -> float:
    """Largest gap between ``w_D`` and the mean of ``xi + pi(u) + g``."""
    cfg = record.config
    dom = cfg.domain
    gap = 0.0
    for i, n in enumerate(record.steps):
        vals = dom.to_physical(record.u[i])
        rhs = pot.yosida(cfg.potential, cfg.lam, vals) + cfg.potential.pi(vals)
        g = cfg.source_at(n * cfg.dt)
        if g is not None:
            rhs = rhs + dom.to_physical(g)
        expect = float(np.sum(rhs)) * dom.cell / dom.volume
        got = dom.mean_coeff(record.w[i]) / math.sqrt(dom.volume)
        gap = max(gap, abs(got - expect) / (1.0 + abs(expect)))
    return gap


def variational_defect(record: TrajectoryRecord, phis: np.ndarray) -> np.ndarray:
    """Defect of ``<d/dt (u - BW), phi> + int grad w . grad phi`` per step.

    ``phis`` holds test-function coefficients (one per row); the returned
    array has shape ``(n_steps, n_phi)``.  The discrete scheme pairs the
    increment with ``w`` at a mixture of levels, so the defect is O(dt).
    """
    cfg = record.config
    mu = cfg.domain.eigenvalues
    v = record.u - record.bw
    dv = (v[1:] - v[:-1]) / cfg.dt
    ax = tuple(range(-cfg.domain.ndim, 0))
    out = []
    for phi in phis:
        lhs = np.sum(dv * phi, axis=ax)
        grad = np.sum(mu * record.w[:-1] * phi, axis=ax)
        out.append(lhs + grad)
    return np.array(out).T


# ---------------------------------------------------------------------------
# Moments of the mean channel


@dataclass
class MomentReport:
    alpha: float
    verifiable: bool
    mean: float = float("nan")
    se: float = float("nan")
    half_mean: float = float("nan")
    half_se: float = float("nan")
    n_paths: int = 0

    @property
    def ratio(self) -> float:
        return self.mean / self.half_mean if self.half_mean else float("nan")

    @property
    def stable(self) -> bool:
        if not self.verifiable:
            return False
        if self.se == 0.0 and self.half_se == 0.0:
            return self.mean == self.half_mean
        return 0.5 <= self.ratio <= 2.0 and abs(self.mean - self.half_mean) <= 3.0 * math.hypot(self.se, self.half_se)


def polynomial_growth(potential: pot.PotentialModel) -> bool:
    return potential.kind == pot.PotentialKind.REGULAR or (
        potential.kind == pot.PotentialKind.CUSTOM and "slope" in potential.params
    )


def moment_check(records: Sequence[TrajectoryRecord], alpha: float, potential: Optional[pot.PotentialModel] = None) -> MomentReport:
    """Sample mean of the time average of ``j(alpha m(t))`` over paths.

    The first half of the ensemble is reported alongside the whole so the
    estimate can be checked for stability under doubling the path count.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    potential = potential or records[0].config.potential
    if not polynomial_growth(potential):
        return MomentReport(alpha=alpha, verifiable=False, n_paths=len(records))
    vals = []
    for r in records:
        m = r.series["m"] if r.series else r.m
        jm = potential.j(alpha * m)
        body = jm[1:] if jm.size > 1 else jm
        # a frozen mean channel reproduces j(alpha m0) exactly
        vals.append(float(body[0]) if np.all(body == body[0]) else float(np.mean(body)))
    vals = np.array(vals)
    mean, se = mean_and_se(vals)
    half = vals[: max(1, len(vals) // 2)]
    hm, hse = mean_and_se(half)
    return MomentReport(alpha=alpha, verifiable=True, mean=mean, se=se, half_mean=hm, half_se=hse, n_paths=len(vals))


def hypothesis_flags(potential: pot.PotentialModel, noise_sigma0: float = 0.0) -> dict:
    flags = {"full_domain": potential.full_domain, "mean_free_noise": noise_sigma0 == 0.0}
    flags["growth"] = pot.classify_growth(potential).kind.value
    return flags
