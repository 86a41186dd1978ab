"""Circuit-element relations and their forward, resolvent and Cayley evaluations.

Relations are represented by how the splitting algorithms touch them: a
forward map for single-valued elements and a resolvent
``res_{alpha S} = (I + alpha S)^{-1}``.  Point-set arithmetic on relations is
never needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from portsolve import rootfind
from portsolve.errors import DomainViolation, PoleOnGrid, ResolventSingular
from portsolve.signal import Signal, angular_frequencies, inner, norm

__all__ = [
    "Gain",
    "StaticNonlinearity",
    "Lti",
    "Negated",
    "OffsetOutput",
    "OperatorSpec",
    "MonotonicityReport",
    "cubic",
    "saturation",
    "apply",
    "resolvent",
    "cayley",
    "check_monotone",
    "frequency_response",
    "has_dc_pole",
    "gaussian_sampler",
    "harmonic_pair_sampler",
    "default_sampler",
]

SINGULAR_TOL = 1e-12
VIOLATION_TOL = 1e-9


@dataclass(frozen=True)
class Gain:
    """Linear memoryless element ``x -> g*x``."""

    g: float


@dataclass(frozen=True)
class StaticNonlinearity:
    """Pointwise map ``x[k] -> f(x[k])``.

    ``f`` must accept numpy arrays.  ``monotone`` records the modeller's
    declaration; it is audited by :func:`check_monotone`, never trusted
    blindly by the root finder.
    """

    f: Callable[[np.ndarray], np.ndarray]
    df: Optional[Callable[[np.ndarray], np.ndarray]] = None
    monotone: bool = True
    label: str = field(default="", compare=False)


@dataclass(frozen=True)
class Lti:
    """Rational transfer function ``G(s) = num(s)/den(s)``.

    Coefficients are ordered from the highest power down, as in
    ``numpy.polyval``.  ``Lti((1, 0, 1), (1, 0))`` is ``(s^2 + 1)/s``.
    """

    num: tuple
    den: tuple

    def __post_init__(self):
        num = tuple(float(c) for c in np.atleast_1d(self.num))
        den = tuple(float(c) for c in np.atleast_1d(self.den))
        if not any(den):
            raise ValueError("denominator of a transfer function cannot be the zero polynomial")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)


@dataclass(frozen=True)
class Negated:
    """``x -> -R(x)``."""

    inner: "OperatorSpec"


@dataclass(frozen=True)
class OffsetOutput:
    """``x -> R(x) + offset``."""

    inner: "OperatorSpec"
    offset: Signal


OperatorSpec = Union[Gain, StaticNonlinearity, Lti, Negated, OffsetOutput]


def cubic(mu: float) -> StaticNonlinearity:
    """``v -> mu*v**3/3``, the van der Pol conductance."""
    mu = float(mu)
    return StaticNonlinearity(lambda v: mu * v**3 / 3, lambda v: mu * v**2,
                              monotone=mu >= 0, label=f"cubic {mu!r}")


def saturation(gain: float = 1.0, level: float = 1.0) -> StaticNonlinearity:
    """Smooth saturation ``v -> level*tanh(gain*v/level)``."""
    gain, level = float(gain), float(level)
    return StaticNonlinearity(
        lambda v: level * np.tanh(gain * v / level),
        lambda v: gain / np.cosh(gain * v / level) ** 2,
        monotone=gain >= 0,
        label=f"saturation {gain!r} {level!r}",
    )


# frequency-domain helpers

def frequency_response(op: Lti, n: int, period_T: float) -> np.ndarray:
    """``G(j*w_k)`` on the DFT grid.

    The DC entry is NaN when ``den(0) = 0``.  For even ``n`` the Nyquist
    entry is ``Re G``, which keeps real inputs real.
    """
    w = angular_frequencies(n, period_T)
    s = 1j * w
    den = np.polyval(op.den, s)
    num = np.polyval(op.num, s)
    pole = np.abs(den) < SINGULAR_TOL
    if pole[1:].any():
        k = int(np.flatnonzero(pole[1:])[0]) + 1
        raise PoleOnGrid(f"transfer function has a pole at sampled frequency w={w[k]!r}")
    G = np.empty(n, dtype=complex)
    G[1:] = num[1:] / den[1:]
    G[0] = np.nan if pole[0] else num[0] / den[0]
    if n % 2 == 0:
        # The Nyquist bin of a real signal is real and stands for both +w and
        # -w, so the response there is the average of G(jw) and G(-jw).
        G[n // 2] = G[n // 2].real
    return G


def has_dc_pole(op) -> bool:
    """True if the operator contains a transfer function with a pole at s=0."""
    if isinstance(op, Lti):
        return abs(np.polyval(op.den, 0.0)) < SINGULAR_TOL
    if isinstance(op, (Negated, OffsetOutput)):
        return has_dc_pole(op.inner)
    return False


def _zero_mean_tol(x: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(x))))


# forward application

def apply(op: OperatorSpec, x: Signal) -> Signal:
    """Evaluate a single-valued operator at ``x``.

    Raises
    ------
    PoleOnGrid
        Transfer function pole at a sampled nonzero frequency.
    DomainViolation
        Transfer function with a pole at DC applied to an input with nonzero mean.
    """
    if isinstance(op, Gain):
        return x.like(op.g * x.samples)
    if isinstance(op, StaticNonlinearity):
        return x.like(np.asarray(op.f(x.samples), dtype=float))
    if isinstance(op, Lti):
        G = frequency_response(op, x.n, x.period_T)
        X = np.fft.fft(x.samples)
        if np.isnan(G[0]):
            if abs(X[0].real) / x.n > _zero_mean_tol(x.samples):
                raise DomainViolation(
                    f"transfer function has a pole at DC but the input mean is {x.mean()!r}"
                )
            G[0] = 0.0
        return x.like(np.fft.ifft(G * X).real)
    if isinstance(op, Negated):
        return -apply(op.inner, x)
    if isinstance(op, OffsetOutput):
        return apply(op.inner, x) + op.offset
    raise TypeError(f"not an operator: {op!r}")


# resolvents

def _resolvent(op, alpha: float, z: Signal) -> Signal:
    # alpha may be negative here; Negated flips its sign
    if isinstance(op, Gain):
        d = 1.0 + alpha * op.g
        if abs(d) < SINGULAR_TOL:
            raise ResolventSingular(f"1 + alpha*g = {d!r}")
        return z.like(z.samples / d)
    if isinstance(op, StaticNonlinearity):
        return z.like(rootfind.solve_resolvent_equation(op.f, z.samples, alpha, op.df))
    if isinstance(op, Lti):
        G = frequency_response(op, z.n, z.period_T)
        d = 1.0 + alpha * G
        mult = np.empty_like(G)
        if np.isnan(G[0]):
            # limit of 1/(1 + alpha*G) as |G| -> inf: the DC component is removed
            mult[0] = 0.0
            rest = d[1:]
            sl = slice(1, None)
        else:
            rest = d
            sl = slice(None)
        if np.any(np.abs(rest) < SINGULAR_TOL):
            raise ResolventSingular("1 + alpha*G(jw) vanishes on the frequency grid")
        mult[sl] = 1.0 / rest
        return z.like(np.fft.ifft(mult * np.fft.fft(z.samples)).real)
    if isinstance(op, Negated):
        return _resolvent(op.inner, -alpha, z)
    if isinstance(op, OffsetOutput):
        return _resolvent(op.inner, alpha, z - alpha * op.offset)
    raise TypeError(f"not an operator: {op!r}")


def resolvent(op: OperatorSpec, alpha: float, z: Signal) -> Signal:
    """Return the unique ``x`` with ``x + alpha*op(x) = z``.

    Gains and transfer functions are inverted exactly (the latter bin by bin
    in the frequency domain); static nonlinearities are solved sample by
    sample with :func:`portsolve.rootfind.solve_resolvent_equation`.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return _resolvent(op, float(alpha), z)


def cayley(op: OperatorSpec, alpha: float, z: Signal) -> Signal:
    """Reflected resolvent ``2*res_{alpha op}(z) - z``."""
    return 2.0 * resolvent(op, alpha, z) - z


# monotonicity audit

@dataclass(frozen=True)
class MonotonicityReport:
    tested_pairs: int
    min_pairing: float
    verdict: str
    inconclusive: int = 0

    @property
    def monotone(self) -> bool:
        return self.verdict == "monotone-consistent"


def gaussian_sampler(n: int, period_T: float, scale: float = 1.0, zero_mean: bool = False):
    """Return ``sampler(rng) -> Signal`` drawing i.i.d. normal samples."""

    def sample(rng):
        x = scale * rng.standard_normal(n)
        if zero_mean:
            x -= x.mean()
        return Signal(x, period_T)

    return sample


def harmonic_pair_sampler(n: int, period_T: float, zero_mean: bool = True):
    """Return a sampler whose consecutive draws are sinusoids at one shared DFT bin.

    Draws ``2m`` and ``2m+1`` use the same bin, cycling through all bins, with
    random amplitude and phase.  Their difference is a single harmonic, so
    for a linear time-invariant operator the normalized pairing is exactly
    ``Re G(j w_k)``.
    """
    bins = list(range(0 if not zero_mean else 1, n // 2 + 1))
    t = np.arange(n) * (period_T / n)
    calls = [0]

    def sample(rng):
        k = bins[(calls[0] // 2) % len(bins)]
        calls[0] += 1
        a = rng.uniform(0.1, 2.0)
        if k == 0:
            return Signal(np.full(n, a * rng.choice([-1.0, 1.0])), period_T)
        x = a * np.cos(2 * np.pi * k * t / period_T + rng.uniform(0, 2 * np.pi))
        return Signal(x, period_T)

    return sample


def _contains_lti(op) -> bool:
    if isinstance(op, Lti):
        return True
    if isinstance(op, (Negated, OffsetOutput)):
        return _contains_lti(op.inner)
    return False


def default_sampler(op, n: int = 64, period_T: float = 1.0):
    """Harmonic pairs for operators containing a transfer function, Gaussian noise otherwise."""
    if _contains_lti(op):
        return harmonic_pair_sampler(n, period_T, zero_mean=has_dc_pole(op))
    return gaussian_sampler(n, period_T, zero_mean=has_dc_pole(op))


def check_monotone(op: OperatorSpec, sampler=None, trials: int = 200, seed=0) -> MonotonicityReport:
    """Audit monotonicity by sampling ``<u1-u2 | op(u1)-op(u2)>`` on random pairs.

    The pairing is normalized by ``||u1-u2||**2``.  A minimum below ``-1e-9``
    is reported as a violation.  Pairs whose evaluation raises are counted as
    inconclusive and skipped.

    Parameters
    ----------
    sampler : callable, optional
        ``sampler(rng) -> Signal``, called twice per trial.  Defaults to
        :func:`default_sampler` on a 64-point grid with ``T = 1``.
    """
    if sampler is None:
        sampler = default_sampler(op)
    rng = np.random.default_rng(seed)
    best = np.inf
    tested = inconclusive = 0
    for _ in range(trials):
        u1, u2 = sampler(rng), sampler(rng)
        du = u1 - u2
        nd = norm(du) ** 2
        if nd == 0:
            continue
        try:
            dy = apply(op, u1) - apply(op, u2)
        except (ArithmeticError, ValueError, DomainViolation, PoleOnGrid):
            inconclusive += 1
            continue
        tested += 1
        best = min(best, inner(du, dy) / nd)
    if tested == 0:
        best = float("nan")
        verdict = "monotone-consistent"
    else:
        verdict = "violation-found" if best < -VIOLATION_TOL else "monotone-consistent"
    return MonotonicityReport(tested, float(best), verdict, inconclusive)
