"""Neumann cosine spectra on intervals and rectangles.

Fields are stored by their coefficients in the H-orthonormal eigenbasis of
the Neumann Laplacian,

    phi_k(x) = prod_i c_{k_i} cos(k_i pi x_i / L_i),   c_0 = L_i^{-1/2}, c_k = (2/L_i)^{1/2},

so every linear operator of the problem is a mode-wise multiplier.  Grid
values live on cell-centred nodes ``x_j = (j + 1/2) L / n``, where the
orthonormal DCT-II is exactly the change of basis and the midpoint rule is
exact for products of band-limited fields (discrete Parseval).

All array-level helpers accept extra leading (batch) axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import fft

from .errors import DomainMismatch, DomainViolation

NORM_KINDS = ("H", "V1_semi", "V1", "V2", "dual_star", "V2_dual", "Vs")


@dataclass(frozen=True)
class Domain:
    """Axis-aligned interval or rectangle with its cosine grid."""

    extents: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        ext = tuple(float(v) for v in np.atleast_1d(self.extents))
        shp = tuple(int(v) for v in np.atleast_1d(self.shape))
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "shape", shp)
        if len(ext) not in (1, 2) or len(ext) != len(shp):
            raise ValueError("domain must be 1-D or 2-D with one extent per axis")
        for L, n in zip(ext, shp):
            if not L > 0:
                raise ValueError("extents must be positive")
            if n < 8 or n & (n - 1):
                raise ValueError("resolution must be a power of two >= 8")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.ndim, 0))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def cell(self) -> float:
        """Quadrature weight of one grid node."""
        return float(np.prod([L / n for L, n in zip(self.extents, self.shape)]))

    @cached_property
    def nodes(self) -> tuple[np.ndarray, ...]:
        return tuple((np.arange(n) + 0.5) * L / n for L, n in zip(self.extents, self.shape))

    @cached_property
    def grid(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.nodes, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis ``k_i pi / L_i`` broadcast to the mode grid."""
        ks = [np.arange(n) * math.pi / L for L, n in zip(self.extents, self.shape)]
        return tuple(np.meshgrid(*ks, indexing="ij"))

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Euclidean norm of the integer mode index."""
        ks = np.meshgrid(*[np.arange(n) for n in self.shape], indexing="ij")
        return np.sqrt(sum(k.astype(float) ** 2 for k in ks))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """``mu_k = pi^2 sum (k_i / L_i)^2``; ``mu_0 = 0``."""
        mu = sum(w * w for w in self.wavenumbers)
        mu.setflags(write=False)
        return mu

    @property
    def n_modes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def zero(self) -> tuple[int, ...]:
        return (0,) * self.ndim

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return fft.dctn(values, type=2, norm="ortho", axes=self.axes) * math.sqrt(self.cell)

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        return fft.idctn(coeffs, type=2, norm="ortho", axes=self.axes) / math.sqrt(self.cell)

    def mean_coeff(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs[(Ellipsis,) + self.zero]

    def check_shape(self, coeffs: np.ndarray):
        if tuple(np.shape(coeffs)[-self.ndim:]) != self.shape:
            raise DomainMismatch(f"array of shape {np.shape(coeffs)} does not live on grid {self.shape}")


def interval(length: float = 1.0, n: int = 64) -> Domain:
    return Domain((length,), (n,))


def rectangle(lx: float = 1.0, ly: float = 1.0, nx: int = 32, ny: int = 32) -> Domain:
    return Domain((lx, ly), (nx, ny))


# ---------------------------------------------------------------------------
# Array-level operators (coefficients in, coefficients out)


def to_spectral(domain: Domain, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    domain.check_shape(values)
    return domain.to_spectral(values)


def to_physical(domain: Domain, coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    domain.check_shape(coeffs)
    return domain.to_physical(coeffs)


def norm_coeffs(domain: Domain, coeffs: np.ndarray, kind: str = "H", s: float | None = None):
    """Spectral norm of (a batch of) coefficient arrays."""
    mu = domain.eigenvalues
    c2 = coeffs * coeffs
    ax = domain.axes
    if kind == "H":
        sq = c2.sum(axis=ax)
    elif kind == "V1_semi":
        sq = (mu * c2).sum(axis=ax)
    elif kind == "V1":
        mean = domain.mean_coeff(coeffs) / math.sqrt(domain.volume)
        sq = mean * mean + (mu * c2).sum(axis=ax)
    elif kind == "V2":
        sq = ((1.0 + mu * mu) * c2).sum(axis=ax)
    elif kind == "dual_star":
        mean = domain.mean_coeff(coeffs) / math.sqrt(domain.volume)
        inv = np.zeros_like(mu)
        inv[mu > 0] = 1.0 / mu[mu > 0]
        sq = (inv * c2).sum(axis=ax) + mean * mean
    elif kind == "V2_dual":
        sq = (c2 / (1.0 + mu * mu)).sum(axis=ax)
    elif kind == "Vs":
        if s is None or s < 0:
            raise ValueError("Vs norm needs s >= 0")
        sq = ((1.0 + mu) ** s * c2).sum(axis=ax)
    else:
        raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")
    return np.sqrt(sq)


def inverse_neumann_coeffs(domain: Domain, coeffs: np.ndarray) -> np.ndarray:
    mu = domain.eigenvalues
    out = np.zeros_like(coeffs)
    nz = mu > 0
    out[..., nz] = coeffs[..., nz] / mu[nz]
    return out


def gradient_values(domain: Domain, coeffs: np.ndarray) -> list[np.ndarray]:
    """Grid values of each partial derivative of a cosine series.

    Differentiating ``cos(k pi x/L)`` gives ``-(k pi/L) sin(k pi x/L)``; the
    sine series is synthesised with an orthonormal DST-III whose index is
    shifted by one.
    """
    out = []
    scale = 1.0 / math.sqrt(domain.cell)
    for i, ax in enumerate(domain.axes):
        b = -domain.wavenumbers[i] * coeffs
        b = np.roll(b, -1, axis=ax)
        idx = [slice(None)] * b.ndim
        idx[ax] = -1
        b[tuple(idx)] = 0.0
        other = tuple(a for a in domain.axes if a != ax)
        if other:
            b = fft.idctn(b, type=2, norm="ortho", axes=other)
        vals = fft.idst(b, type=2, norm="ortho", axis=ax)
        out.append(vals * scale)
    return out


def evaluate_pointwise(domain: Domain, coeffs: np.ndarray, f: Callable, dealias: bool = False) -> np.ndarray:
    """Coefficients of ``f(u)`` with ``f`` applied on the physical grid.

    With ``dealias`` the composition is evaluated on a 3/2-padded grid and
    truncated back to the original modes.
    """
    if not dealias:
        return domain.to_spectral(f(domain.to_physical(coeffs)))
    pshape = tuple(3 * n // 2 for n in domain.shape)
    pad = np.zeros(coeffs.shape[: coeffs.ndim - domain.ndim] + pshape)
    pad[(Ellipsis,) + tuple(slice(0, n) for n in domain.shape)] = coeffs
    pcell = float(np.prod([L / n for L, n in zip(domain.extents, pshape)]))
    vals = fft.idctn(pad, type=2, norm="ortho", axes=domain.axes) / math.sqrt(pcell)
    out = fft.dctn(f(vals), type=2, norm="ortho", axes=domain.axes) * math.sqrt(pcell)
    return out[(Ellipsis,) + tuple(slice(0, n) for n in domain.shape)]


# ---------------------------------------------------------------------------
# Field-level API


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real field on ``domain`` held by its cosine coefficients."""

    domain: Domain
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        self.domain.check_shape(c)
        if c.shape != self.domain.shape:
            raise DomainMismatch("a ScalarField holds exactly one field")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_values(cls, domain: Domain, values) -> "ScalarField":
        return cls(domain, to_spectral(domain, values))

    @classmethod
    def from_function(cls, domain: Domain, f: Callable) -> "ScalarField":
        return cls.from_values(domain, np.broadcast_to(f(*domain.grid), domain.shape))

    @classmethod
    def constant(cls, domain: Domain, c: float) -> "ScalarField":
        return cls.from_values(domain, np.full(domain.shape, float(c)))

    @property
    def values(self) -> np.ndarray:
        return self.domain.to_physical(self.coeffs)

    def _other(self, other):
        if isinstance(other, ScalarField):
            if other.domain != self.domain:
                raise DomainMismatch("fields live on different domains")
            return other.coeffs
        return None

    def __add__(self, other):
        oc = self._other(other)
        if oc is None:
            return ScalarField(self.domain, self.coeffs + ScalarField.constant(self.domain, other).coeffs)
        return ScalarField(self.domain, self.coeffs + oc)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, a):
        if isinstance(a, ScalarField):
            raise TypeError("use apply_pointwise for products of fields")
        return ScalarField(self.domain, self.coeffs * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.domain, -self.coeffs)


def _check(field: ScalarField, other: ScalarField):
    if field.domain != other.domain:
        raise DomainMismatch("fields live on different domains")


def laplacian(field: ScalarField) -> ScalarField:
    return ScalarField(field.domain, -field.domain.eigenvalues * field.coeffs)


def bilaplacian(field: ScalarField) -> ScalarField:
    mu = field.domain.eigenvalues
    return ScalarField(field.domain, mu * mu * field.coeffs)


def mean(field: ScalarField) -> float:
    return float(field.domain.mean_coeff(field.coeffs)) / math.sqrt(field.domain.volume)


def inverse_neumann(field: ScalarField) -> ScalarField:
    """Mean-zero solution of ``-Lap z = y - mean(y)`` with Neumann data."""
    return ScalarField(field.domain, inverse_neumann_coeffs(field.domain, field.coeffs))


def resolvent_power(field: ScalarField, delta: float, k: int) -> ScalarField:
    """``(I - delta Lap)^{-k}``."""
    if delta <= 0 or k < 1:
        raise ValueError("need delta > 0 and k >= 1")
    mult = (1.0 + delta * field.domain.eigenvalues) ** (-k)
    return ScalarField(field.domain, mult * field.coeffs)


def norm(field: ScalarField, kind: str = "H", s: float | None = None) -> float:
    return float(norm_coeffs(field.domain, field.coeffs, kind, s))


def inner(f: ScalarField, g: ScalarField) -> float:
    """``int_D f g`` via the spectral dot product."""
    _check(f, g)
    return float(np.sum(f.coeffs * g.coeffs))


def quadrature(domain: Domain, values: np.ndarray) -> float:
    """Midpoint rule on the cell-centred grid."""
    return float(np.sum(values) * domain.cell)


def gradient(field: ScalarField) -> list[np.ndarray]:
    return gradient_values(field.domain, field.coeffs)


def apply_pointwise(
    field: ScalarField,
    f: Callable,
    admissible: Callable[[np.ndarray], np.ndarray] | None = None,
    dealias: bool = False,
) -> ScalarField:
    """Compose ``f`` with the field on the grid and transform back.

    ``admissible`` (e.g. a potential's ``in_domain_interior``) guards
    restricted-domain nonlinearities.
    """
    if admissible is not None:
        vals = field.values
        if not np.all(admissible(vals)):
            raise DomainViolation("field leaves the domain of the nonlinearity")
    return ScalarField(field.domain, evaluate_pointwise(field.domain, field.coeffs, f, dealias))


def random_bandlimited(
    domain: Domain, rng: np.random.Generator, band: int | None = None, decay: float = 1.0,
    amplitude: float = 1.0, size: Sequence[int] = (), zero_mean: bool = False,
) -> np.ndarray:
    """Random coefficient arrays supported on modes with index below ``band``."""
    band = band if band is not None else max(2, min(domain.shape) // 4)
    kk = domain.mode_index
    mask = np.ones(domain.shape, dtype=bool)
    for i, n in enumerate(domain.shape):
        idx = np.meshgrid(*[np.arange(m) for m in domain.shape], indexing="ij")[i]
        mask &= idx < band
    weights = np.where(mask, (1.0 + kk) ** (-decay), 0.0)
    c = rng.standard_normal(tuple(size) + domain.shape) * weights * amplitude
    if zero_mean:
        c[(Ellipsis,) + domain.zero] = 0.0
    return c


def interpolation_constant(domain: Domain, coeffs: np.ndarray, eps: float) -> float:
    """Fitted ``C_eps = max (|v|_H^2 - eps |grad v|_H^2) / |v|_*^2`` over a batch."""
    h2 = norm_coeffs(domain, coeffs, "H") ** 2
    g2 = norm_coeffs(domain, coeffs, "V1_semi") ** 2
    d2 = norm_coeffs(domain, coeffs, "dual_star") ** 2
    return float(np.max((h2 - eps * g2) / d2))


def dual_equivalence(domain: Domain, coeffs: np.ndarray | None = None) -> tuple[float, float]:
    """Constants ``(a, b)`` with ``a |v|_{H1*} <= |v|_* <= b |v|_{H1*}``.

    ``|v|_{H1*}`` is the dual of the full norm ``sqrt(sum (1 + mu) c^2)``.  Without
    ``coeffs`` the sharp bounds over the discrete modes are returned; with a batch
    the ratio range observed on it.
    """
    mu = domain.eigenvalues
    if coeffs is None:
        r = np.full_like(mu, 1.0 / math.sqrt(domain.volume))
        r[mu > 0] = np.sqrt(1.0 + 1.0 / mu[mu > 0])
        return float(r.min()), float(r.max())
    c2 = coeffs * coeffs
    usual = np.sqrt((c2 / (1.0 + mu)).sum(axis=domain.axes))
    r = norm_coeffs(domain, coeffs, "dual_star") / usual
    return float(np.min(r)), float(np.max(r))
