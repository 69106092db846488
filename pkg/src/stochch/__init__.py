"""Stochastic Cahn-Hilliard equation with singular potentials.

Modules:

- ``potentials``: convex/concave splits, resolvents, Yosida and Moreau maps.
- ``spectral``: Neumann cosine discretisation of intervals and rectangles.
- ``noise``: truncated Wiener noise, additive or diagonal multiplicative.
- ``stepper``: semi-implicit integration of the regularised system.
- ``diagnostics``: estimate quantities along trajectories.
- ``experiments``: coupled studies and deterministic benchmarks.
- ``config``, ``output``, ``plotting``, ``cli``: run orchestration.
"""

from .errors import (
    Blowup,
    DomainMismatch,
    DomainViolation,
    MeanMismatch,
    NonConvergence,
    NotDifferentiable,
    NotMultiplicative,
    ParseError,
    StochCHError,
    ValidationError,
)
from .potentials import PotentialModel, double_obstacle, linear, logarithmic, regular
from .spectral import Domain, ScalarField, interval, rectangle
from .noise import NoiseModel
from .stepper import SimulationConfig, TrajectoryRecord, run_ensemble, run_trajectory

__version__ = "0.1.0"
