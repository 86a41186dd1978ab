"""Exception and warning types raised by portsolve."""


class PortsolveError(Exception):
    """Base class for all portsolve errors."""


class LengthMismatch(PortsolveError, ValueError):
    """Two signals do not live on the same (N, T) grid."""


class PoleOnGrid(PortsolveError):
    """A transfer function has a pole at a sampled nonzero frequency."""


class DomainViolation(PortsolveError, ValueError):
    """An operator was evaluated outside its domain."""


class BracketFailure(PortsolveError):
    """The scalar root finder could not bracket a root."""


class ResolventSingular(PortsolveError):
    """``I + alpha*S`` is singular at some sampled frequency."""


class NonFinite(PortsolveError, FloatingPointError):
    """An iterate contains NaN or Inf; the iteration diverged."""


class NoBackwardChild(PortsolveError):
    """A Sum node has no child whose resolvent can be evaluated."""


class InnerSolveFailed(PortsolveError):
    """An inner fixed-point solve of the naive nested method did not converge."""


class TrivialFixedPoint(UserWarning):
    """An oscillator solve collapsed onto the zero equilibrium."""
