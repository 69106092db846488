"""Double-well potentials split as a convex part plus a Lipschitz perturbation.

A potential ``psi = j + pi_hat`` is described by the convex function ``j``
(with ``j(0) = 0``), its subdifferential ``beta`` (a maximal monotone graph)
and the derivative ``pi`` of the concave perturbation.  All regularisation
operators (resolvent, Yosida approximation, Moreau envelope, conjugate) are
vectorised over ``x`` and work on plain numpy arrays; ``lam`` may be a
scalar or an array broadcast against ``x``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import NonConvergence, NotDifferentiable

__all__ = [
    "PotentialKind",
    "PotentialModel",
    "GrowthClass",
    "GrowthKind",
    "regular",
    "logarithmic",
    "double_obstacle",
    "linear",
    "custom_graph",
    "piecewise_graph",
    "resolvent",
    "resolvent_residual",
    "yosida",
    "moreau",
    "conjugate",
    "yosida_derivative",
    "perturbation",
    "perturbation_primitive",
    "classify_growth",
    "symmetry_ratio",
    "pi_lipschitz_sampled",
]

RESOLVENT_TOL = 1e-12
RESOLVENT_MAXITER = 100
CONJUGATE_LIMIT = 1e6


class PotentialKind(str, enum.Enum):
    REGULAR = "regular"
    LOGARITHMIC = "logarithmic"
    DOUBLE_OBSTACLE = "double_obstacle"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PotentialModel:
    """Convex part ``j``/``beta`` plus Lipschitz perturbation ``pi``.

    ``beta`` evaluates the minimal section of the graph; ``dbeta`` its
    derivative where it exists.  ``domain`` is the closure of ``D(j)``;
    ``open_domain`` tells whether ``beta`` blows up at finite endpoints.
    Closed forms, when present, take precedence over the generic solvers.
    """

    kind: PotentialKind
    beta: Callable[[np.ndarray], np.ndarray]
    j: Callable[[np.ndarray], np.ndarray]
    pi: Callable[[np.ndarray], np.ndarray]
    pi_hat: Callable[[np.ndarray], np.ndarray]
    pi_lipschitz: float
    dbeta: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: tuple[float, float] = (-math.inf, math.inf)
    open_domain: bool = False
    multivalued: bool = False
    beta_lipschitz: Optional[float] = None
    resolvent_closed: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    conjugate_closed: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kinks: tuple[float, ...] = ()
    params: dict = field(default_factory=dict, compare=False)

    @property
    def c0(self) -> float:
        """``|pi(0)|``."""
        return float(abs(self.pi(np.array(0.0))))

    @property
    def globally_lipschitz(self) -> bool:
        return self.beta_lipschitz is not None

    @property
    def full_domain(self) -> bool:
        return math.isinf(self.domain[0]) and math.isinf(self.domain[1])

    def in_domain_interior(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if self.open_domain:
            return (x > lo) & (x < hi)
        return (x >= lo) & (x <= hi)


class GrowthKind(str, enum.Enum):
    QUADRATIC_DERIVATIVE = "quadratic_derivative"
    J_DOMINATED = "j_dominated"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class GrowthClass:
    kind: GrowthKind
    R: float


def _linear_pi(slope: float, offset: float):
    def pi(x):
        return -slope * np.asarray(x, dtype=float) + offset

    def pi_hat(x):
        x = np.asarray(x, dtype=float)
        return -0.5 * slope * x * x + offset * x

    return pi, pi_hat


# ---------------------------------------------------------------------------
# Model factories


def _regular_resolvent(lam, x):
    # y + lam*y^3 = x, trigonometric-hyperbolic root of the depressed cubic
    x = np.asarray(x, dtype=float)
    if _is_zero(lam):
        return x.copy()
    r = np.sqrt(3.0 * lam)
    y = 2.0 / r * np.sinh(np.arcsinh(1.5 * x * r) / 3.0)
    # one Newton polish
    y = y - (y + lam * y**3 - x) / (1.0 + 3.0 * lam * y * y)
    return y


def regular() -> PotentialModel:
    """Quartic double well ``(r^2-1)^2/4`` split as ``r^4/4`` and ``-r^2/2``."""
    pi, pi_hat = _linear_pi(1.0, 0.0)
    return PotentialModel(
        kind=PotentialKind.REGULAR,
        beta=lambda x: np.asarray(x, dtype=float) ** 3,
        dbeta=lambda x: 3.0 * np.asarray(x, dtype=float) ** 2,
        j=lambda x: 0.25 * np.asarray(x, dtype=float) ** 4,
        pi=pi,
        pi_hat=pi_hat,
        pi_lipschitz=1.0,
        resolvent_closed=_regular_resolvent,
        conjugate_closed=lambda y: 0.75 * np.abs(np.asarray(y, dtype=float)) ** (4.0 / 3.0),
    )


def _log_j(x):
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, np.inf)
    inside = np.abs(x) <= 1.0
    xi = x[inside]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(xi > -1.0, (1.0 + xi) * np.log1p(xi), 0.0)
        b = np.where(xi < 1.0, (1.0 - xi) * np.log1p(-xi), 0.0)
    out[inside] = a + b
    return out


def _log_beta(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2.0 * np.arctanh(x)
    return np.where(np.abs(x) > 1.0, np.nan, out)


def _log_conjugate(y):
    y = np.asarray(y, dtype=float)
    # 2 log cosh(y/2), overflow-safe
    return 2.0 * (np.logaddexp(0.5 * y, -0.5 * y) - math.log(2.0))


def logarithmic(c: float = 1.5) -> PotentialModel:
    """Logarithmic potential with ``beta(r) = ln((1+r)/(1-r))`` on ``(-1, 1)``.

    The concave part is ``-c r^2``, so ``pi(r) = -2 c r``.
    """
    pi, pi_hat = _linear_pi(2.0 * c, 0.0)
    return PotentialModel(
        kind=PotentialKind.LOGARITHMIC,
        beta=_log_beta,
        dbeta=lambda x: 2.0 / (1.0 - np.asarray(x, dtype=float) ** 2),
        j=_log_j,
        pi=pi,
        pi_hat=pi_hat,
        pi_lipschitz=2.0 * c,
        domain=(-1.0, 1.0),
        open_domain=True,
        conjugate_closed=_log_conjugate,
        params={"c": c},
    )


def double_obstacle(c: float = 1.0) -> PotentialModel:
    """Indicator of ``[-1, 1]`` plus the concave part ``-c r^2``."""
    pi, pi_hat = _linear_pi(2.0 * c, 0.0)

    def j(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= 1.0, 0.0, np.inf)

    def beta(x):
        # minimal section: 0 inside, undefined outside
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= 1.0, 0.0, np.nan)

    return PotentialModel(
        kind=PotentialKind.DOUBLE_OBSTACLE,
        beta=beta,
        j=j,
        pi=pi,
        pi_hat=pi_hat,
        pi_lipschitz=2.0 * c,
        domain=(-1.0, 1.0),
        multivalued=True,
        resolvent_closed=lambda lam, x: np.clip(np.asarray(x, dtype=float), -1.0, 1.0),
        conjugate_closed=lambda y: np.abs(np.asarray(y, dtype=float)),
        kinks=(-1.0, 1.0),
        params={"c": c},
    )


def linear(slope: float = 1.0, pi_slope: float = 0.0, pi_offset: float = 0.0) -> PotentialModel:
    """Quadratic ``j = slope r^2 / 2``; the Yosida map has the closed form ``slope x/(1+lam slope)``."""
    if slope <= 0:
        raise ValueError("slope must be positive")
    pi, pi_hat = _linear_pi(pi_slope, pi_offset)
    return PotentialModel(
        kind=PotentialKind.CUSTOM,
        beta=lambda x: slope * np.asarray(x, dtype=float),
        dbeta=lambda x: np.full(np.shape(x), slope),
        j=lambda x: 0.5 * slope * np.asarray(x, dtype=float) ** 2,
        pi=pi,
        pi_hat=pi_hat,
        pi_lipschitz=abs(pi_slope),
        beta_lipschitz=slope,
        resolvent_closed=lambda lam, x: np.asarray(x, dtype=float) / (1.0 + lam * slope),
        conjugate_closed=lambda y: np.asarray(y, dtype=float) ** 2 / (2.0 * slope),
        params={"slope": slope},
    )


def custom_graph(
    beta: Callable,
    dbeta: Optional[Callable] = None,
    j: Optional[Callable] = None,
    pi_slope: float = 0.0,
    pi_offset: float = 0.0,
    beta_lipschitz: Optional[float] = None,
) -> PotentialModel:
    """Single-valued monotone ``beta`` on the whole line with ``beta(0) = 0``.

    Without ``j`` the primitive is integrated numerically; without ``dbeta``
    the derivative is a central difference of ``beta``.
    """
    if abs(float(beta(np.array(0.0)))) > 1e-14:
        raise ValueError("custom graph must satisfy beta(0) = 0")

    def beta_v(x):
        return np.asarray(beta(np.asarray(x, dtype=float)), dtype=float)

    if j is None:
        def j(x):
            x = np.asarray(x, dtype=float)
            flat = [integrate.quad(lambda s: float(beta_v(s)), 0.0, xi)[0] for xi in x.ravel()]
            return np.asarray(flat).reshape(x.shape)

    if dbeta is None:
        def dbeta(x):
            x = np.asarray(x, dtype=float)
            h = 1e-6 * np.maximum(1.0, np.abs(x))
            return (beta_v(x + h) - beta_v(x - h)) / (2.0 * h)

    pi, pi_hat = _linear_pi(pi_slope, pi_offset)
    return PotentialModel(
        kind=PotentialKind.CUSTOM,
        beta=beta_v,
        dbeta=dbeta,
        j=j,
        pi=pi,
        pi_hat=pi_hat,
        pi_lipschitz=abs(pi_slope),
        beta_lipschitz=beta_lipschitz,
    )


def piecewise_graph(
    xs, ys, pi_slope: float = 0.0, pi_offset: float = 0.0
) -> PotentialModel:
    """Monotone piecewise-linear graph through the breakpoints ``(xs, ys)``.

    ``xs`` must be strictly increasing, ``ys`` nondecreasing, and the graph
    must pass through the origin.  It is extended linearly beyond the first
    and last segments, so it is globally Lipschitz.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("breakpoints must be two 1-D arrays of equal length >= 2")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("breakpoint abscissae must be strictly increasing")
    if np.any(np.diff(ys) < 0):
        raise ValueError("breakpoint values must be nondecreasing")
    slopes = np.diff(ys) / np.diff(xs)
    if abs(float(_interp_lin(np.array(0.0), xs, ys))) > 1e-14:
        raise ValueError("graph must pass through the origin")

    def beta(x):
        return _interp_lin(np.asarray(x, dtype=float), xs, ys)

    def dbeta(x):
        x = np.asarray(x, dtype=float)
        if np.any(np.isin(x, xs)):
            raise NotDifferentiable("derivative requested at a breakpoint")
        return slopes[_segment(x, xs)]

    knots = np.unique(np.concatenate([xs, [0.0]]))
    # primitive of beta at every knot, measured from 0
    kvals = beta(knots)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (kvals[1:] + kvals[:-1]) * np.diff(knots))])
    cum -= cum[np.searchsorted(knots, 0.0)]

    def j(x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, knots.size - 1)
        return cum[i] + 0.5 * (kvals[i] + beta(x)) * (x - knots[i])

    def res(lam, x):
        x = np.asarray(x, dtype=float)
        if np.ndim(lam) == 0:
            return _interp_lin(x, xs + lam * ys, xs)
        return np.array([_interp_lin(v, xs + l * ys, xs) for l, v in zip(lam.ravel(), x.ravel())]).reshape(x.shape)

    flat_ends = slopes[0] == 0.0 or slopes[-1] == 0.0

    def conj(y):
        # j*(y) = x y - j(x) at any x in beta^{-1}(y)
        y = np.asarray(y, dtype=float)
        xstar = _interp_lin(y, ys, xs)
        return xstar * y - j(xstar)

    pi, pi_hat = _linear_pi(pi_slope, pi_offset)
    return PotentialModel(
        kind=PotentialKind.CUSTOM,
        beta=beta,
        dbeta=dbeta,
        j=j,
        pi=pi,
        pi_hat=pi_hat,
        pi_lipschitz=abs(pi_slope),
        beta_lipschitz=float(np.max(slopes)),
        resolvent_closed=res,
        conjugate_closed=None if (flat_ends or np.any(slopes == 0.0)) else conj,
        kinks=tuple(float(v) for v in xs),
        params={"xs": tuple(xs.tolist()), "ys": tuple(ys.tolist())},
    )


def _segment(x, xp):
    return np.clip(np.searchsorted(xp, x, side="right") - 1, 0, xp.size - 2)


def _interp_lin(x, xp, fp):
    """Piecewise-linear interpolation with linear extrapolation at both ends."""
    x = np.asarray(x, dtype=float)
    i = _segment(x, xp)
    x0, x1 = xp[i], xp[i + 1]
    return fp[i] + (x - x0) * (fp[i + 1] - fp[i]) / (x1 - x0)


# ---------------------------------------------------------------------------
# Operators


def _is_zero(lam) -> bool:
    return np.ndim(lam) == 0 and lam == 0.0


def _lam_x(lam, x):
    """Validate ``lam`` and broadcast it against ``x`` when it is an array."""
    x = np.asarray(x, dtype=float)
    if np.ndim(lam) == 0:
        lam = float(lam)
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        return lam, x
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("an array of lambdas must be positive")
    lam, x = np.broadcast_arrays(lam, x)
    return lam, x


def _newton_bisect(model: PotentialModel, lam: float, x: np.ndarray) -> np.ndarray:
    lo_dom, hi_dom = model.domain
    lo = np.maximum(np.minimum(x, 0.0), lo_dom)
    hi = np.minimum(np.maximum(x, 0.0), hi_dom)
    # near a singular edge Newton crawls, so open domains start mid-bracket
    y = 0.5 * (lo + hi) if model.open_domain else np.clip(x, lo, hi)
    dbeta = model.dbeta
    F_prev = np.full_like(y, np.inf)
    for _ in range(RESOLVENT_MAXITER):
        with np.errstate(all="ignore"):
            F = y + lam * model.beta(y) - x
            if dbeta is not None:
                dF = 1.0 + lam * dbeta(y)
                y_new = y - F / dF
            else:
                y_new = np.full_like(y, np.nan)
        hi = np.where(F > 0, y, hi)
        lo = np.where(F < 0, y, lo)
        # bisect when Newton leaves the bracket or fails to halve |F|
        bad = ~np.isfinite(y_new) | (y_new <= lo) | (y_new >= hi) | (np.abs(F) > 0.5 * F_prev)
        y_new = np.where(bad, 0.5 * (lo + hi), y_new)
        y_new = np.where(F == 0, y, y_new)
        F_prev = np.abs(F)
        scale = np.maximum(1.0, np.abs(y))
        done = (F == 0) | (hi - lo <= RESOLVENT_TOL * scale) | (
            (np.abs(y_new - y) <= RESOLVENT_TOL * scale) & (np.abs(F) <= RESOLVENT_TOL * (1.0 + np.abs(x)))
        )
        y = y_new
        if np.all(done):
            return y
    raise NonConvergence(f"resolvent solve did not converge in {RESOLVENT_MAXITER} iterations")


def resolvent(model: PotentialModel, lam, x):
    """``(I + lam beta)^{-1} x``.

    Uses the model's closed form when available, otherwise a safeguarded
    Newton iteration on ``y + lam beta(y) = x`` with a bisection fallback.
    The root is bracketed by ``0`` and ``x`` because ``0`` lies in ``beta(0)``.
    """
    lam, x = _lam_x(lam, x)
    if _is_zero(lam):
        if not model.globally_lipschitz:
            raise ValueError("lambda = 0 requires a globally Lipschitz beta")
        return x.copy()
    if model.resolvent_closed is not None:
        return np.asarray(model.resolvent_closed(lam, x), dtype=float)
    return _newton_bisect(model, lam, x)


def resolvent_residual(model: PotentialModel, lam, x, y=None):
    """Distance-to-root bound ``|y + lam beta(y) - x| / (1 + lam beta'(y))``.

    Measured in the units of ``y``: near a singular endpoint the exact root
    may not be representable, so the raw residual in ``x`` is meaningless
    there.  For open domains the distance to the edge on the root's side
    also bounds the error.
    """
    lam, x = _lam_x(lam, x)
    if y is None:
        y = resolvent(model, lam, x)
    y = np.asarray(y, dtype=float)
    if model.kind is PotentialKind.DOUBLE_OBSTACLE:
        # beta(+-1) is a half-line, so only the wrong-signed part of x - y counts
        d = np.where(np.abs(y) < 1.0, np.abs(x - y), 0.0)
        d = np.where(y == 1.0, np.maximum(0.0, y - x), d)
        d = np.where(y == -1.0, np.maximum(0.0, x - y), d)
        return np.where(np.abs(y) > 1.0, np.inf, d)
    with np.errstate(all="ignore"):
        F = y + lam * model.beta(y) - x
        if model.dbeta is None:
            return np.abs(F)
        d = np.abs(F) / (1.0 + lam * np.asarray(model.dbeta(y), dtype=float))
        if model.open_domain:
            # F blows up at the open edge, so the root lies between y and that edge
            lo, hi = model.domain
            d = np.minimum(d, np.where(F < 0, hi - y, np.where(F > 0, y - lo, 0.0)))
    return d


def yosida(model: PotentialModel, lam, x):
    """Yosida approximation ``(x - J_lam x) / lam``; ``beta`` itself when ``lam = 0``."""
    lam, x = _lam_x(lam, x)
    if _is_zero(lam):
        if not model.globally_lipschitz:
            raise ValueError("lambda = 0 requires a globally Lipschitz beta")
        return model.beta(x)
    return (x - resolvent(model, lam, x)) / lam


def moreau(model: PotentialModel, lam, x):
    """Moreau envelope ``j_lam(x) = |x - y|^2 / (2 lam) + j(y)`` at ``y = J_lam x``."""
    lam, x = _lam_x(lam, x)
    if _is_zero(lam):
        return model.j(x)
    y = resolvent(model, lam, x)
    return (x - y) ** 2 / (2.0 * lam) + model.j(y)


def _golden_max(f, a, b, tol=1e-12):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    xm = 0.5 * (a + b)
    return xm, f(xm)


def _conjugate_numeric(model: PotentialModel, y: float) -> float:
    def obj(x):
        v = float(model.j(np.array(x)))
        return -math.inf if not math.isfinite(v) else x * y - v

    lo_dom, hi_dom = model.domain
    half = 1.0
    while True:
        a = max(-half, lo_dom)
        b = min(half, hi_dom)
        xm, val = _golden_max(obj, a, b)
        interior = (xm - a > 1e-6 * half or a == lo_dom) and (b - xm > 1e-6 * half or b == hi_dom)
        if interior:
            return val
        if half > CONJUGATE_LIMIT:
            return math.inf
        half *= 2.0


def conjugate(model: PotentialModel, y):
    """Convex conjugate ``j*(y) = sup_x (x y - j(x))``; ``inf`` when unbounded."""
    y = np.asarray(y, dtype=float)
    if model.conjugate_closed is not None:
        return np.asarray(model.conjugate_closed(y), dtype=float)
    flat = np.array([_conjugate_numeric(model, float(v)) for v in y.ravel()])
    return flat.reshape(y.shape)


def yosida_derivative(model: PotentialModel, lam, x):
    """``beta'(J x) / (1 + lam beta'(J x))``."""
    lam, x = _lam_x(lam, x)
    if model.kind is PotentialKind.DOUBLE_OBSTACLE:
        if np.any(np.abs(x) == 1.0):
            raise NotDifferentiable("Yosida map of the obstacle has kinks at +-1")
        return np.where(np.abs(x) < 1.0, 0.0, 1.0 / lam)
    if model.dbeta is None:
        raise NotDifferentiable("model has no derivative")
    y = x if _is_zero(lam) else resolvent(model, lam, x)
    if model.kinks and np.any(np.isin(y, model.kinks)):
        raise NotDifferentiable("resolvent lands on a kink of the graph")
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.asarray(model.dbeta(y), dtype=float)
        if _is_zero(lam):
            return d
        out = d / (1.0 + lam * d)
    return np.where(np.isinf(d), 1.0 / lam, out)


def perturbation(model: PotentialModel, x):
    return model.pi(np.asarray(x, dtype=float))


def perturbation_primitive(model: PotentialModel, x):
    """``pi_hat(x) = int_0^x pi``."""
    return model.pi_hat(np.asarray(x, dtype=float))


def classify_growth(model: PotentialModel, sample_box=(-100.0, 100.0), n_samples=10001) -> GrowthClass:
    """Fit the growth class of ``beta'`` on a sample box.

    Both candidate inequalities are fitted (``R`` = sampled supremum of the
    ratio); the class with the smaller ``R`` wins, ties going to the
    quadratic-derivative class.  Multivalued graphs, restricted domains and
    models without a derivative are unclassified.
    """
    if model.multivalued or model.dbeta is None or not model.full_domain:
        return GrowthClass(GrowthKind.UNCLASSIFIED, math.inf)
    x = np.linspace(sample_box[0], sample_box[1], n_samples)
    x = x[~np.isin(x, model.kinks)] if model.kinks else x
    with np.errstate(all="ignore"):
        d = np.asarray(model.dbeta(x), dtype=float)
        rq = d / (1.0 + x * x)
        rj = d / (1.0 + model.j(x))
    Rq = float(np.max(rq)) if np.all(np.isfinite(rq)) else math.inf
    Rj = float(np.max(rj)) if np.all(np.isfinite(rj)) else math.inf
    if math.isinf(Rq) and math.isinf(Rj):
        return GrowthClass(GrowthKind.UNCLASSIFIED, math.inf)
    if Rq <= Rj * (1.0 + 1e-9):
        return GrowthClass(GrowthKind.QUADRATIC_DERIVATIVE, max(Rq, 0.0))
    return GrowthClass(GrowthKind.J_DOMINATED, max(Rj, 0.0))


def symmetry_ratio(model: PotentialModel, edge: float, n_samples: int = 1001) -> float:
    """Sampled ``sup j(x) / j(-x)`` over ``edge/2 <= |x| <= edge``."""
    x = np.linspace(0.5 * edge, edge, n_samples)
    x = np.concatenate([x, -x])
    with np.errstate(all="ignore"):
        r = model.j(x) / model.j(-x)
    r = r[np.isfinite(r)]
    return float(np.max(r)) if r.size else math.nan


def pi_lipschitz_sampled(model: PotentialModel, box=(-10.0, 10.0), n_samples=4001) -> float:
    """Largest sampled difference quotient of ``pi``."""
    x = np.linspace(box[0], box[1], n_samples)
    p = model.pi(x)
    return float(np.max(np.abs(np.diff(p)) / np.diff(x)))
