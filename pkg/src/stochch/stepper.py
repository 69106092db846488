"""Semi-implicit time stepping of the Yosida-regularised system.

Each step solves, mode by mode,

    (1 + dt mu^2 + s dt mu) u^{n+1} = u^n - dt mu (F(u^n) + g^n - s u^n) + dW^n

with ``F = beta_lam + pi`` evaluated on the grid.  ``s = 0`` is the linearly
implicit scheme; ``s > 0`` is the stabilised variant.  The constant mode has
``mu = 0`` and therefore only ever receives noise increments.

Paths are advanced together as a leading batch axis; each path consumes its
own keyed noise stream, so a path's trajectory does not depend on which
other paths share the batch.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import potentials as pot
from .errors import Blowup, ValidationError
from .noise import KeyLog, NoiseModel, coefficient_increments, normals, zero_noise
from .spectral import Domain, ScalarField, evaluate_pointwise, norm_coeffs

SourceLike = Union[None, np.ndarray, Callable[[float], np.ndarray]]

LINEAR = "linear"
STABILIZED = "stabilized"
SCHEMES = (LINEAR, STABILIZED)

_MAX_CHUNK_ENTRIES = 2_000_000


@dataclass(frozen=True)
class SimulationConfig:
    domain: Domain
    potential: pot.PotentialModel
    lam: float
    u0: np.ndarray
    dt: float
    T: float
    noise: Optional[NoiseModel] = None
    source: SourceLike = None
    scheme: str = LINEAR
    stabilizer: Optional[float] = None
    stabilizer_cap: float = 1e4
    stride: int = 1
    substeps: int = 1
    blowup_guard: float = 1e8
    dealias: bool = False
    track: bool = True
    store_w: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("Δt > 0")
        if not self.T >= self.dt * (1 - 1e-12):
            raise ValidationError("T ≥ Δt")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ValidationError("T must be an integer multiple of Δt")
        if self.lam < 0 or (self.lam == 0 and not self.potential.globally_lipschitz):
            raise ValidationError("λ > 0 unless β is globally Lipschitz")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"scheme must be one of {SCHEMES}")
        if self.stride < 1 or self.substeps < 1:
            raise ValidationError("stride and substeps must be positive")
        u0 = np.array(self.u0, dtype=float)
        if u0.shape != self.domain.shape:
            raise ValidationError("u0 must be a coefficient array on the domain grid")
        object.__setattr__(self, "u0", u0)
        if self.noise is not None and self.noise.domain != self.domain:
            raise ValidationError("noise model lives on a different domain")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def lipschitz_bound(self) -> float:
        """Lipschitz constant of the explicit nonlinearity ``beta_lam + pi``."""
        b = 1.0 / self.lam if self.lam > 0 else self.potential.beta_lipschitz
        return b + self.potential.pi_lipschitz

    @property
    def s(self) -> float:
        if self.scheme == LINEAR:
            return 0.0
        if self.stabilizer is not None:
            return float(self.stabilizer)
        return min(self.lipschitz_bound, self.stabilizer_cap)

    @property
    def noise_model(self) -> NoiseModel:
        return self.noise if self.noise is not None else zero_noise(self.domain)

    def source_at(self, t: float) -> Optional[np.ndarray]:
        if self.source is None:
            return None
        if callable(self.source):
            return np.asarray(self.source(t), dtype=float)
        return np.asarray(self.source, dtype=float)


@dataclass
class TrajectoryRecord:
    """Snapshots and per-step diagnostics of one path.

    ``u``, ``w``, ``xi`` and ``bw`` hold coefficient arrays at the snapshot
    steps ``steps``; ``series`` maps diagnostic names to per-step arrays
    (length ``n_steps + 1``) when tracking is on.
    """

    config: SimulationConfig
    path_id: int
    steps: np.ndarray
    times: np.ndarray
    u: np.ndarray
    bw: np.ndarray
    m: np.ndarray
    w: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None
    series: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    keys: tuple = ()

    @property
    def n_snapshots(self) -> int:
        return len(self.steps)

    def field(self, i: int) -> ScalarField:
        return ScalarField(self.config.domain, self.u[i])


# ---------------------------------------------------------------------------
# Nonlinear terms


@dataclass
class _Terms:
    F: np.ndarray  # coefficients of beta_lam(u) + pi(u)
    xi: np.ndarray  # coefficients of beta_lam(u)
    beta_u: Optional[np.ndarray] = None
    j_lam: Optional[np.ndarray] = None
    jstar: Optional[np.ndarray] = None
    pi_hat: Optional[np.ndarray] = None
    outside: Optional[np.ndarray] = None


def _terms(cfg: SimulationConfig, u: np.ndarray, track: bool) -> _Terms:
    dom, P, lam = cfg.domain, cfg.potential, cfg.lam
    vals = dom.to_physical(u)
    if cfg.dealias:
        xi = evaluate_pointwise(dom, u, lambda v: pot.yosida(P, lam, v), dealias=True)
        F = xi + evaluate_pointwise(dom, u, P.pi, dealias=True)
    else:
        bl = pot.yosida(P, lam, vals)
        xi = dom.to_spectral(bl)
        F = dom.to_spectral(bl + P.pi(vals))
    out = _Terms(F=F, xi=xi)
    if track:
        ax = dom.axes
        bl = pot.yosida(P, lam, vals)
        out.beta_u = np.sum(bl * vals, axis=ax) * dom.cell
        out.j_lam = np.sum(pot.moreau(P, lam, vals), axis=ax) * dom.cell
        out.jstar = np.sum(pot.conjugate(P, bl), axis=ax) * dom.cell
        out.pi_hat = np.sum(P.pi_hat(vals), axis=ax) * dom.cell
        if not P.full_domain:
            out.outside = np.sum(~P.in_domain_interior(vals), axis=ax)
    return out


def apply_A_lambda(u: ScalarField, potential: pot.PotentialModel, lam: float, g: Optional[ScalarField] = None) -> ScalarField:
    """``Lap^2 u - Lap(beta_lam(u) + pi(u) + g)`` as a coefficient array."""
    dom = u.domain
    mu = dom.eigenvalues
    vals = u.values
    F = dom.to_spectral(pot.yosida(potential, lam, vals) + potential.pi(vals))
    if g is not None:
        F = F + g.coeffs
    return ScalarField(dom, mu * mu * u.coeffs + mu * F)


def operator_coeffs(potential: pot.PotentialModel, lam: float, domain: Domain, u: np.ndarray, g: Optional[np.ndarray] = None) -> np.ndarray:
    """Batched coefficients of ``A_lam u``; the pairing with ``phi`` is the coefficient dot product."""
    mu = domain.eigenvalues
    vals = domain.to_physical(u)
    F = domain.to_spectral(pot.yosida(potential, lam, vals) + potential.pi(vals))
    if g is not None:
        F = F + g
    return mu * mu * u + mu * F


def lemma_constants(potential: pot.PotentialModel, lam: float, domain: Domain, g: Optional[np.ndarray] = None) -> tuple:
    """Monotonicity, coercivity and boundedness constants of ``A_lam``.

    Returns ``(c, c1, c1', f1, c2, f2)`` with

        <A v1 - A v2, v1 - v2> >= -c |v1 - v2|_H^2
        <A v, v> >= c1 |v|_V2^2 - c1' |v|_H^2 - f1
        |A v|_V2* <= c2 |v|_V2 + f2

    where ``L = 1/lam + C_pi`` bounds the slope of ``beta_lam + pi``.
    """
    L = (1.0 / lam if lam > 0 else potential.beta_lipschitz) + potential.pi_lipschitz
    gH = float(norm_coeffs(domain, g, "H")) if g is not None else 0.0
    C0 = potential.c0
    c = 0.5 + 0.5 * L * L
    c1 = 0.25
    c1p = 0.25 + L * L
    f1 = C0 * C0 * domain.volume + gH * gH
    c2 = 1.0 + L
    f2 = C0 * math.sqrt(domain.volume) + gH
    return c, c1, c1p, f1, c2, f2


def chemical_potential_coeffs(cfg: SimulationConfig, u: np.ndarray, F: np.ndarray, t: float) -> np.ndarray:
    w = cfg.domain.eigenvalues * u + F
    g = cfg.source_at(t)
    return w if g is None else w + g


# ---------------------------------------------------------------------------
# Integration


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CHS_THREADS", "1")))
    except ValueError:
        return 1


def _stability_check(cfg: SimulationConfig):
    if cfg.scheme == LINEAR and cfg.dt * cfg.lipschitz_bound > 2.0:
        warnings.warn(
            f"Δt·(1/λ + C_π) = {cfg.dt * cfg.lipschitz_bound:.3g} exceeds 2; "
            "the explicit nonlinearity may be unstable",
            RuntimeWarning,
            stacklevel=3,
        )


class _NoiseFeed:
    """Chunked keyed normals for a batch of paths."""

    def __init__(self, model: NoiseModel, path_ids: Sequence[int], substeps: int, n_steps: int):
        self.model = model
        self.paths = list(path_ids)
        self.substeps = substeps
        self.n_modes = model.domain.n_modes
        self.n_steps = n_steps
        per_step = len(self.paths) * substeps * self.n_modes
        self.chunk = max(1, min(n_steps, _MAX_CHUNK_ENTRIES // max(per_step, 1)))
        self.start = -1
        self.buf = None
        self.log = KeyLog()
        self.active = bool(np.any(model.sigma != 0.0))

    def xi_sum(self, n: int) -> np.ndarray:
        if self.buf is None or not (self.start <= n < self.start + self.chunk):
            self.start = n
            count = min(self.chunk, self.n_steps - n)
            s = self.substeps
            rows = []
            for p in self.paths:
                z = normals(self.model.seed, p, n * s, count * s, self.n_modes)
                self.log.add(p, n * s, count * s)
                rows.append(z.reshape(count, s, self.n_modes).sum(axis=1))
            self.buf = np.stack(rows, axis=1)  # (count, P, n_modes)
        return self.buf[n - self.start].reshape((len(self.paths),) + self.model.domain.shape)


def run_ensemble(
    cfg: SimulationConfig,
    path_ids: Sequence[int],
    noise_state: Optional[Callable[[int], np.ndarray]] = None,
) -> list[TrajectoryRecord]:
    """Integrate the paths ``path_ids`` jointly.

    ``noise_state(n)`` optionally supplies the batch of states at which a
    multiplicative noise coefficient is evaluated at step ``n`` (the frozen
    iterate of a Picard scheme); by default it is the current state.
    """
    _stability_check(cfg)
    dom = cfg.domain
    P = len(path_ids)
    N = cfg.n_steps
    dt, s = cfg.dt, cfg.s
    mu = dom.eigenvalues
    denom = 1.0 + dt * mu * mu + s * dt * mu
    model = cfg.noise_model
    feed = _NoiseFeed(model, path_ids, cfg.substeps, N)
    track = cfg.track

    u = np.broadcast_to(cfg.u0, (P,) + dom.shape).copy()
    bw = np.zeros_like(u)
    mean0 = dom.mean_coeff(u).copy()

    snap_steps = sorted(set(range(0, N + 1, cfg.stride)) | {N})
    snap_index = {n: i for i, n in enumerate(snap_steps)}
    S = len(snap_steps)
    U = np.empty((S, P) + dom.shape)
    BW = np.empty_like(U)
    W = np.empty_like(U) if cfg.store_w else None
    XI = np.empty_like(U) if cfg.store_w else None
    M = np.empty((S, P))

    names = ("mean", "H_norm", "V1_semi", "V2_norm", "dual_star", "energy", "j_integral",
             "jstar_integral", "w_V1_semi", "residual", "beta_u", "m")
    series = {k: np.empty((N + 1, P)) for k in names} if track else {}
    drift = np.zeros_like(u) if track else None
    outside = np.zeros(P, dtype=int)
    sqrt_vol = math.sqrt(dom.volume)

    for n in range(N + 1):
        t = n * dt
        terms = _terms(cfg, u, track)
        g = cfg.source_at(t)
        Fg = terms.F if g is None else terms.F + g
        if terms.outside is not None:
            outside += terms.outside
        if n in snap_index or track:
            w = mu * u + Fg
        if n in snap_index:
            i = snap_index[n]
            U[i] = u
            BW[i] = bw
            M[i] = (dom.mean_coeff(cfg.u0) + dom.mean_coeff(bw)) / sqrt_vol
            if W is not None:
                W[i] = w
                XI[i] = terms.xi
        if track:
            series["mean"][n] = dom.mean_coeff(u) / sqrt_vol
            series["m"][n] = (mean0 + dom.mean_coeff(bw)) / sqrt_vol
            series["H_norm"][n] = norm_coeffs(dom, u, "H")
            series["V1_semi"][n] = norm_coeffs(dom, u, "V1_semi")
            series["V2_norm"][n] = norm_coeffs(dom, u, "V2")
            series["dual_star"][n] = norm_coeffs(dom, u, "dual_star")
            series["energy"][n] = 0.5 * series["V1_semi"][n] ** 2 + terms.j_lam + terms.pi_hat
            series["j_integral"][n] = terms.j_lam
            series["jstar_integral"][n] = terms.jstar
            series["w_V1_semi"][n] = norm_coeffs(dom, w, "V1_semi")
            series["beta_u"][n] = terms.beta_u
            series["residual"][n] = norm_coeffs(dom, u - cfg.u0 + drift - bw, "dual_star")
        if n == N:
            break

        if feed.active:
            state = noise_state(n) if noise_state is not None else u
            dW = coefficient_increments(model, feed.xi_sum(n), dt, cfg.substeps, t, state)
        else:
            dW = 0.0
        u_new = (u - dt * mu * (Fg - s * u) + dW) / denom
        bw = bw + dW
        if track:
            drift = drift + dt * (mu * mu * u_new + s * mu * u_new + mu * (Fg - s * u))
        u = u_new
        h = norm_coeffs(dom, u, "H")
        if not np.all(np.isfinite(h)) or np.any(h > cfg.blowup_guard):
            raise Blowup(n + 1, float(np.nanmax(np.where(np.isfinite(h), h, np.inf))))

    steps = np.array(snap_steps)
    times = steps * dt
    records = []
    for p, pid in enumerate(path_ids):
        rec = TrajectoryRecord(
            config=cfg,
            path_id=int(pid),
            steps=steps,
            times=times,
            u=U[:, p].copy(),
            bw=BW[:, p].copy(),
            m=M[:, p].copy(),
            w=None if W is None else W[:, p].copy(),
            xi=None if XI is None else XI[:, p].copy(),
            series={k: v[:, p].copy() for k, v in series.items()},
            flags={
                "full_domain": cfg.potential.full_domain,
                "domain_exits": int(outside[p]),
            },
            keys=tuple(sorted((k, v) for k, v in feed.log.consumed.items() if k == pid)),
        )
        records.append(rec)
    return records


def run_trajectory(cfg: SimulationConfig, path_id: int = 0) -> TrajectoryRecord:
    return run_ensemble(cfg, [path_id])[0]


def run_paths(cfg: SimulationConfig, path_ids: Sequence[int], batch: int = 64) -> list[TrajectoryRecord]:
    """Run many paths in batches, optionally across ``CHS_THREADS`` threads."""
    chunks = [list(path_ids[i : i + batch]) for i in range(0, len(path_ids), batch)]
    nthreads = min(_threads(), len(chunks))
    if nthreads <= 1:
        out = []
        for c in chunks:
            out.extend(run_ensemble(cfg, c))
        return out
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(nthreads) as ex:
        parts = list(ex.map(lambda c: run_ensemble(cfg, c), chunks))
    return [r for part in parts for r in part]


def step(cfg: SimulationConfig, u: np.ndarray, n: int, dW=0.0) -> np.ndarray:
    """One update from ``u`` at step ``n`` with a given noise increment."""
    mu = cfg.domain.eigenvalues
    terms = _terms(cfg, u, track=False)
    g = cfg.source_at(n * cfg.dt)
    Fg = terms.F if g is None else terms.F + g
    s = cfg.s
    return (u - cfg.dt * mu * (Fg - s * u) + dW) / (1.0 + cfg.dt * mu * mu + s * cfg.dt * mu)


def residual(record: TrajectoryRecord, n: int) -> float:
    """Dual-star norm of the discrete integral-equation defect at step ``n``.

    Reconstructs ``u_n - u_0 + sum_{m<n} dt A(u) - (B.W)(t_n)`` from the
    stored snapshots, so it needs a record with stride 1.
    """
    cfg = record.config
    if not np.array_equal(record.steps, np.arange(cfg.n_steps + 1)):
        raise ValueError("residual needs every step recorded (stride 1)")
    if n == 0:
        return 0.0
    dom = cfg.domain
    mu = dom.eigenvalues
    s = cfg.s
    u = record.u
    drift = np.zeros(dom.shape)
    for m in range(n):
        terms = _terms(cfg, u[m], track=False)
        g = cfg.source_at(m * cfg.dt)
        Fg = terms.F if g is None else terms.F + g
        drift += cfg.dt * (mu * mu * u[m + 1] + s * mu * u[m + 1] + mu * (Fg - s * u[m]))
    r = u[n] - u[0] + drift - record.bw[n]
    return float(norm_coeffs(dom, r, "dual_star"))


def with_(cfg: SimulationConfig, **changes) -> SimulationConfig:
    return replace(cfg, **changes)
