"""Two-operator splitting: forward/backward and Douglas-Rachford.

Both solve ``0 in M1(x) + M2(x) - d`` for a drive signal ``d`` and share
:func:`fixed_point_drive`, which stops once successive iterates are within
``epsilon`` of each other in the ``l2,T`` norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from portsolve import operators as ops
from portsolve.errors import DomainViolation, NonFinite, PoleOnGrid
from portsolve.signal import Signal, norm

__all__ = [
    "Sinusoid",
    "SolverConfig",
    "SolveResult",
    "initial_signal",
    "fixed_point_drive",
    "forward_backward",
    "dr_map",
    "douglas_rachford",
    "inclusion_residual",
]


@dataclass(frozen=True)
class Sinusoid:
    """Initialization ``amplitude * sum_h sin(2*pi*h*t/T)``."""

    amplitude: float = 2.0
    harmonics: tuple = (1,)


@dataclass(frozen=True)
class SolverConfig:
    """Step size(s), stopping tolerance, iteration cap and initialization.

    ``alpha`` is either one positive step size or a sequence of them, one per
    nesting level, innermost first.  ``init`` is ``"zero"``, a float
    constant, a :class:`Sinusoid` or a :class:`~portsolve.signal.Signal`.
    """

    alpha: Union[float, tuple] = 0.05
    epsilon: float = 0.01
    max_iter: int = 10_000
    init: Any = "zero"

    def __post_init__(self):
        alphas = tuple(float(a) for a in np.atleast_1d(self.alpha))
        if not alphas or not all(a > 0 and math.isfinite(a) for a in alphas):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alphas[0] if len(alphas) == 1 else alphas)
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        object.__setattr__(self, "max_iter", int(self.max_iter))

    @property
    def alphas(self) -> tuple:
        return self.alpha if isinstance(self.alpha, tuple) else (self.alpha,)

    @property
    def step(self) -> float:
        """The single step size used by two-operator methods."""
        return self.alphas[0]


@dataclass
class SolveResult:
    """Outcome of an iterative solve.

    ``residuals[j]`` is the distance between iterates ``j`` and ``j+1``, so
    ``len(residuals) == iterations``.  ``fixed_point_residual`` measures how
    well the returned solution satisfies the original inclusion; it is NaN
    when that cannot be evaluated.
    """

    solution: Any
    iterations: int
    residuals: np.ndarray
    converged: bool
    fixed_point_residual: float = float("nan")
    state: Any = None
    info: dict = field(default_factory=dict)


def initial_signal(init, n: int, period_T: float) -> Signal:
    if isinstance(init, Signal):
        if init.n != n or init.period_T != period_T:
            raise ValueError("initial signal does not match the problem grid")
        return init
    if init is None or init == "zero":
        return Signal.zeros(n, period_T)
    if isinstance(init, Sinusoid):
        t = np.arange(n) * (period_T / n)
        x = sum(np.sin(2 * np.pi * h * t / period_T) for h in init.harmonics)
        return Signal(init.amplitude * x, period_T)
    if isinstance(init, (int, float)):
        return Signal.constant(float(init), n, period_T)
    raise ValueError(f"unknown initialization policy {init!r}")


def fixed_point_drive(step: Callable, x0, cfg: SolverConfig, distance: Callable = None) -> SolveResult:
    """Iterate ``x <- step(x)`` until ``distance(x_new, x) <= cfg.epsilon``.

    ``x0`` may be a :class:`Signal` or any state object, in which case
    ``distance`` must be supplied.  Running out of iterations is not an
    error: the last iterate is returned with ``converged=False``.

    Raises
    ------
    NonFinite
        If an iterate contains NaN or Inf.
    """
    if distance is None:
        distance = lambda a, b: norm(a - b)  # noqa: E731
    x = x0
    residuals = []
    converged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.max_iter):
            try:
                x_new = step(x)
            except ValueError as exc:
                if "finite" in str(exc):
                    raise NonFinite(f"iteration {len(residuals) + 1} produced a non-finite iterate") from exc
                raise
            r = distance(x_new, x)
            if not math.isfinite(r):
                raise NonFinite(f"iteration {len(residuals) + 1} produced a non-finite iterate")
            residuals.append(r)
            x = x_new
            if r <= cfg.epsilon:
                converged = True
                break
    return SolveResult(x, len(residuals), np.array(residuals), converged)


def inclusion_residual(terms: Sequence, x: Signal, drive: Optional[Signal] = None) -> float:
    """``||sum_i op_i(x) - drive||`` with ``nan`` if some term cannot be evaluated.

    Operators with a pole at DC are evaluated on the zero-mean part of ``x``;
    their value at a zero-mean input contains every constant, so the mean of
    the sum is discarded in that case.
    """
    dc_free = any(ops.has_dc_pole(op) for op in terms)
    total = Signal.zeros(x.n, x.period_T)
    try:
        for op in terms:
            arg = x - x.mean() if ops.has_dc_pole(op) else x
            total = total + ops.apply(op, arg)
    except (PoleOnGrid, DomainViolation, ArithmeticError, ValueError):
        return float("nan")
    if drive is not None:
        total = total - drive
    if dc_free:
        total = total - total.mean()
    return norm(total)


def forward_backward(m1, m2, drive: Signal, cfg: SolverConfig) -> SolveResult:
    """Forward/backward splitting ``x <- res_{a M2}(x - a*M1(x) + a*d)``.

    ``m1`` must be single-valued; only the resolvent of ``m2`` is used.
    """
    a = cfg.step
    x0 = initial_signal(cfg.init, drive.n, drive.period_T)
    counter = {"resolvents": 0}

    def step(x):
        counter["resolvents"] += 1
        return ops.resolvent(m2, a, x - a * ops.apply(m1, x) + a * drive)

    res = fixed_point_drive(step, x0, cfg)
    res.fixed_point_residual = inclusion_residual([m1, m2], res.solution, drive)
    res.info.update(counter)
    return res


def dr_map(m1, m2, alpha: float) -> Callable[[Signal], Signal]:
    """Return ``z -> (z + R_{a M1}(R_{a M2}(z)))/2``, the Douglas-Rachford operator."""

    def T(z: Signal) -> Signal:
        return 0.5 * (z + ops.cayley(m1, alpha, ops.cayley(m2, alpha, z)))

    return T


def douglas_rachford(m1, m2, drive: Signal, cfg: SolverConfig) -> SolveResult:
    """Douglas-Rachford splitting for ``0 in M1(x) + M2(x) - d``.

    The drive is folded into ``M1`` as an output offset ``-d``.  The
    shadow sequence ``x = res_{a M2}(z)`` is the returned solution and the
    stopping test is applied to it.
    """
    a = cfg.step
    T = dr_map(ops.OffsetOutput(m1, -drive), m2, a)
    x0 = initial_signal(cfg.init, drive.n, drive.period_T)
    z0 = x0 + a * ops.apply(m2, x0) if _forward_ok(m2, x0) else x0

    def step(state):
        z, _ = state
        z_new = T(z)
        return z_new, ops.resolvent(m2, a, z_new)

    res = fixed_point_drive(step, (z0, ops.resolvent(m2, a, z0)), cfg,
                            distance=lambda s, t: norm(s[1] - t[1]))
    z, x = res.solution
    res.solution = x
    res.state = z
    res.fixed_point_residual = inclusion_residual([m1, m2], x, drive)
    return res


def _forward_ok(op, x: Signal) -> bool:
    try:
        ops.apply(op, x)
    except (PoleOnGrid, DomainViolation):
        return False
    return True
