"""Truncated cylindrical Wiener noise coloured by a diagonal covariance.

The additive operator maps the ``k``-th unit vector of ``U`` to
``sigma_k phi_k``; the multiplicative family maps it to
``sigma_k h(u_k) phi_k`` with ``u_k`` the ``k``-th cosine coefficient of the
state and ``h`` bounded and Lipschitz, so its range stays mean-free.

Standard normals are drawn from a Philox stream keyed by ``(seed, path_id)``
whose counter is addressed by the fine time-step index, which makes every
``(path, step, mode)`` draw reproducible and independent of how many steps
were consumed before it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from .errors import NotMultiplicative
from .spectral import Domain, norm_coeffs

_U53 = 2.0**-53


@dataclass(frozen=True)
class Multiplier:
    """Scalar nonlinearity ``h`` of the multiplicative family."""

    kind: str = "one"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("one", "tanh", "clamp"):
            raise ValueError(f"unknown multiplier {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "one":
            return np.ones_like(x)
        if self.kind == "tanh":
            return np.tanh(self.scale * x)
        return np.clip(self.scale * x, -1.0, 1.0)

    @property
    def lipschitz(self) -> float:
        return 0.0 if self.kind == "one" else abs(self.scale)

    @property
    def sup(self) -> float:
        return 1.0


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal Hilbert-Schmidt covariance on the cosine modes of ``domain``.

    ``sigma`` has the grid's mode shape; entry ``(0, ...)`` is the mean mode.
    ``epsilon`` records the smoothing already folded into ``sigma``.
    """

    domain: Domain
    sigma: np.ndarray
    multiplier: Optional[Multiplier] = None
    epsilon: float = 0.0
    seed: int = 0
    envelope: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        s = np.array(self.sigma, dtype=float)
        if s.shape != self.domain.shape:
            raise ValueError("sigma must have the domain's mode shape")
        if self.multiplier is not None and s[self.domain.zero] != 0.0:
            raise ValueError("multiplicative noise must leave the mean mode untouched (sigma_0 = 0)")
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)

    @property
    def multiplicative(self) -> bool:
        return self.multiplier is not None

    @property
    def sigma0(self) -> float:
        return float(self.sigma[self.domain.zero])

    @property
    def active(self) -> np.ndarray:
        return self.sigma != 0.0

    def hs_norm(self) -> float:
        """Truncated ``|B|_{L2(U,H)}`` of the additive covariance."""
        return float(np.sqrt(np.sum(self.sigma**2)))

    def hs_norm_vs(self, s: float) -> float:
        return float(np.sqrt(np.sum((1.0 + self.domain.eigenvalues) ** s * self.sigma**2)))


def zero_noise(domain: Domain, seed: int = 0) -> NoiseModel:
    return NoiseModel(domain, np.zeros(domain.shape), seed=seed)


def default_truncation(domain: Domain) -> int:
    return max(1, min(domain.shape) // 4)


def power_law(
    domain: Domain,
    amplitude: float,
    decay_exponent: float,
    truncation: Optional[int] = None,
    mean_mode_sigma: float = 0.0,
    multiplier: Optional[Multiplier] = None,
    seed: int = 0,
) -> NoiseModel:
    """``sigma_k = amplitude |k|^{-decay}`` on modes with every index below the truncation."""
    K = truncation if truncation is not None else default_truncation(domain)
    kk = domain.mode_index
    idx = np.meshgrid(*[np.arange(n) for n in domain.shape], indexing="ij")
    mask = np.all([i < K for i in idx], axis=0)
    sigma = np.zeros(domain.shape)
    nz = mask & (kk > 0)
    sigma[nz] = amplitude * kk[nz] ** (-decay_exponent)
    sigma[domain.zero] = mean_mode_sigma
    return NoiseModel(domain, sigma, multiplier=multiplier, seed=seed)


def from_list(
    domain: Domain,
    values,
    mean_mode_sigma: float = 0.0,
    multiplier: Optional[Multiplier] = None,
    seed: int = 0,
) -> NoiseModel:
    """Explicit amplitudes for modes ``1, 2, ...`` in flat (row-major) order."""
    values = np.asarray(values, dtype=float).ravel()
    sigma = np.zeros(domain.n_modes)
    if values.size > domain.n_modes - 1:
        raise ValueError("more amplitudes than modes")
    sigma[1 : 1 + values.size] = values
    sigma = sigma.reshape(domain.shape)
    sigma[domain.zero] = mean_mode_sigma
    return NoiseModel(domain, sigma, multiplier=multiplier, seed=seed)


def single_mode(domain: Domain, k, amplitude: float, seed: int = 0, multiplier=None) -> NoiseModel:
    sigma = np.zeros(domain.shape)
    sigma[tuple(np.atleast_1d(k))] = amplitude
    return NoiseModel(domain, sigma, multiplier=multiplier, seed=seed)


def smooth_covariance(model: NoiseModel, eps: float) -> NoiseModel:
    """Compose the covariance with ``(I - eps Lap)^{-2}``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0.0:
        return model
    mult = (1.0 + eps * model.domain.eigenvalues) ** -2
    return replace(model, sigma=model.sigma * mult, epsilon=model.epsilon + eps)


# ---------------------------------------------------------------------------
# Keyed normal draws


def _blocks(n_modes: int) -> int:
    return -(-n_modes // 4)


def normals(seed: int, path_id: int, step: int, n_steps: int, n_modes: int) -> np.ndarray:
    """Standard normals for fine steps ``step .. step+n_steps-1``, shape ``(n_steps, n_modes)``.

    Entry ``(s, k)`` depends only on ``(seed, path_id, step + s, k)``.
    """
    blocks = _blocks(n_modes)
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, path_id & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    counter = np.array([step * blocks, 0, 0, 0], dtype=np.uint64)
    bg = np.random.Philox(key=key, counter=counter)
    raw = bg.random_raw(n_steps * blocks * 4).reshape(n_steps, blocks * 4)[:, :n_modes]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
    return ndtri(u)


@dataclass
class KeyLog:
    """Ranges of fine steps consumed per path, for coupling audits."""

    consumed: dict = field(default_factory=dict)

    def add(self, path_id: int, start: int, count: int):
        lo, hi = self.consumed.get(path_id, (start, start))
        self.consumed[path_id] = (min(lo, start), max(hi, start + count))

    def keys(self) -> frozenset:
        return frozenset(self.consumed.items())


def coefficient_increments(
    model: NoiseModel,
    xi_sum: np.ndarray,
    dt: float,
    substeps: int,
    t: float,
    state_coeffs: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Noise increment coefficients from summed fine-step normals.

    ``xi_sum`` has shape ``batch + mode shape`` and holds the sum of
    ``substeps`` standard normals per mode, so the increment has variance
    ``sigma_k^2 dt``.
    """
    scale = math.sqrt(dt / substeps)
    if model.envelope is not None:
        scale *= float(model.envelope(t))
    if model.multiplier is None:
        return model.sigma * xi_sum * scale
    if state_coeffs is None:
        raise ValueError("multiplicative noise needs the state")
    return model.sigma * model.multiplier(state_coeffs) * xi_sum * scale


def sample_increment(
    model: NoiseModel,
    u_coeffs: Optional[np.ndarray],
    dt: float,
    path_id: int,
    step: int,
    substeps: int = 1,
    t: float = 0.0,
) -> np.ndarray:
    """Coefficients of ``B(u) dW`` over coarse step ``step`` of length ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    xi = normals(model.seed, path_id, step * substeps, substeps, model.domain.n_modes)
    xi_sum = xi.sum(axis=0).reshape(model.domain.shape)
    return coefficient_increments(model, xi_sum, dt, substeps, t, u_coeffs)


# ---------------------------------------------------------------------------
# Structural constants


def lipschitz_constant(model: NoiseModel) -> float:
    """``C_B = L_h max_{k != 0} |sigma_k|`` for the diagonal multiplicative family.

    Column ``k`` of ``B(u1) - B(u2)`` is ``sigma_k (h(u1_k) - h(u2_k)) phi_k``
    whose dual-star norm is ``|sigma_k| |h(u1_k) - h(u2_k)| / sqrt(mu_k)``, so
    the squared difference in ``L2(U, V1*)`` is at most
    ``(L_h max|sigma_k|)^2 sum_k |u1_k - u2_k|^2 / mu_k``.
    """
    if not model.multiplicative:
        raise NotMultiplicative("Lipschitz constant is defined for multiplicative noise")
    return model.multiplier.lipschitz * float(np.max(np.abs(model.sigma)))


def lipschitz_defect(model: NoiseModel, u1: np.ndarray, u2: np.ndarray) -> float:
    """``|B(u1) - B(u2)|_{L2(U, V1*)} / |u1 - u2|_{V1*}``."""
    if not model.multiplicative:
        raise NotMultiplicative("Lipschitz defect needs multiplicative noise")
    d = norm_coeffs(model.domain, u1 - u2, "dual_star")
    if d == 0.0:
        return 0.0
    diff = model.sigma * (model.multiplier(u1) - model.multiplier(u2))
    return float(hs_norm_dual(model.domain, diff)) / float(d)


def hs_norm_dual(domain: Domain, column_amplitudes: np.ndarray) -> np.ndarray:
    """``L2(U, V1*)`` norm of a diagonal operator with the given column amplitudes.

    Column ``k`` is ``a_k phi_k``; its dual-star norm is ``|a_k| / sqrt(mu_k)``
    for ``k != 0`` and ``|a_0| / sqrt(|D|)`` for the constant mode.
    """
    mu = domain.eigenvalues
    w = np.zeros_like(mu)
    w[mu > 0] = 1.0 / mu[mu > 0]
    w[domain.zero] = 1.0 / domain.volume
    return np.sqrt(np.sum(w * column_amplitudes**2, axis=domain.axes))


def hs_norm_h(domain: Domain, column_amplitudes: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(column_amplitudes**2, axis=domain.axes))


def column_amplitudes(model: NoiseModel, u_coeffs: Optional[np.ndarray] = None, t: float = 0.0) -> np.ndarray:
    env = float(model.envelope(t)) if model.envelope is not None else 1.0
    if model.multiplier is None:
        return model.sigma * env
    return model.sigma * model.multiplier(u_coeffs)


def growth_value(model: NoiseModel, u_coeffs: Optional[np.ndarray] = None) -> float:
    """Truncated ``|B(u)|_{L2(U,H)}``."""
    return float(hs_norm_h(model.domain, column_amplitudes(model, u_coeffs)))


def growth_offset(model: NoiseModel) -> float:
    """The constant ``f = sum |sigma_k| sup|h|`` used in the growth bound."""
    sup = model.multiplier.sup if model.multiplier is not None else 1.0
    return float(np.sum(np.abs(model.sigma))) * sup


def growth_bound(model: NoiseModel, u_coeffs: np.ndarray) -> float:
    cb = lipschitz_constant(model) if model.multiplicative else 0.0
    return growth_offset(model) + cb * float(norm_coeffs(model.domain, u_coeffs, "V1"))
