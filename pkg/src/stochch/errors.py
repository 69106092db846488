"""Exception types raised across the package."""


class StochCHError(Exception):
    """Base class for all package errors."""


class NonConvergence(StochCHError):
    """A scalar resolvent solve exhausted its iteration budget."""


class NotDifferentiable(StochCHError):
    """A derivative was requested at a kink of a monotone graph."""


class DomainMismatch(StochCHError):
    """Two fields living on different domains were combined."""


class DomainViolation(StochCHError):
    """A grid value left the interior of the potential's effective domain."""


class Blowup(StochCHError):
    """The H-norm guard was exceeded during time stepping."""

    def __init__(self, step, norm):
        super().__init__(f"H-norm {norm:.3e} exceeded guard at step {step}")
        self.step = step
        self.norm = norm


class NotMultiplicative(StochCHError):
    """An operation that needs a state-dependent noise model got an additive one."""


class MeanMismatch(StochCHError):
    """A perturbation changed the spatial mean of the initial datum."""


class ParseError(StochCHError):
    """Malformed configuration text or an unknown key."""


class ValidationError(StochCHError):
    """A configuration value violates a documented invariant."""
