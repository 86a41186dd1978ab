"""Mixed-monotone Douglas-Rachford for ``0 in A1(v) + A2(v) - B(v) - i``.

``A1`` and ``A2`` are maximal monotone and ``B`` is monotone and
single-valued; ``-B`` is the anti-monotone (positive feedback) path.  Each
iteration takes one Douglas-Rachford step on ``A1 - y + A2`` where ``y`` is
``B`` evaluated at the latest iterate, instead of inverting ``A1 + A2``
exactly.

The van der Pol oscillator is the case ``A1(s) = (s^2 + 1)/s``,
``A2(v) = mu*v^3/3``, ``B(v) = mu*v`` with no drive.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from portsolve import operators as ops
from portsolve.errors import TrivialFixedPoint
from portsolve.signal import Signal, norm, write_csv
from portsolve.splitting import (
    Sinusoid,
    SolverConfig,
    SolveResult,
    dr_map,
    fixed_point_drive,
    inclusion_residual,
    initial_signal,
)

__all__ = [
    "MixedProblem",
    "VdpParams",
    "mmdr",
    "vdp_problem",
    "vdp_period",
    "vdp_solve",
    "scan_period",
]


@dataclass(frozen=True)
class MixedProblem:
    a1: ops.OperatorSpec
    a2: ops.OperatorSpec
    b: ops.OperatorSpec
    drive: Signal

    @property
    def grid(self):
        return self.drive.n, self.drive.period_T

    def residual(self, x: Signal) -> float:
        """``||A1(x) + A2(x) - B(x) - drive||``, NaN where not evaluable."""
        return inclusion_residual([self.a1, self.a2, ops.Negated(self.b)], x, self.drive)


@dataclass(frozen=True)
class VdpParams:
    """van der Pol parameters.  ``period_T=None`` estimates the period by RK4."""

    mu: float
    period_T: Optional[float] = None
    n_samples: int = 5000
    amplitude_init: float = 2.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu!r}")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if self.period_T is not None and not self.period_T > 0:
            raise ValueError(f"period_T must be positive, got {self.period_T!r}")

    def resolved(self) -> "VdpParams":
        if self.period_T is not None:
            return self
        return replace(self, period_T=vdp_period(self.mu))


def mmdr(p: MixedProblem, x1: Signal, cfg: SolverConfig) -> SolveResult:
    """Run the mixed-monotone Douglas-Rachford iteration from ``x1``.

    With ``z_1 = x1 + a*A2(x1)`` (so that ``res_{a A2}(z_1) = x1``), repeat::

        x_{j+1} = res_{a A2}(z_j)
        y_{j+1} = B(x_{j+1})
        z_{j+1} = T_a(A1 - y_{j+1} - drive, A2)(z_j)

    until two successive ``x`` iterates are within ``cfg.epsilon``.  The
    result's ``state`` is the final ``z``.
    """
    a = cfg.step
    x1.check_grid(p.drive)
    try:
        z1 = x1 + a * ops.apply(p.a2, x1)
    except (ops.PoleOnGrid, ops.DomainViolation):
        z1 = x1

    def step(state):
        z, x = state
        y = ops.apply(p.b, x)
        a1j = ops.OffsetOutput(p.a1, -(y + p.drive))
        z_new = dr_map(a1j, p.a2, a)(z)
        return z_new, ops.resolvent(p.a2, a, z_new)

    res = fixed_point_drive(step, (z1, ops.resolvent(p.a2, a, z1)), cfg,
                            distance=lambda s, t: norm(s[1] - t[1]))
    z, x = res.solution
    res.solution = x
    res.state = z
    res.fixed_point_residual = p.residual(x)
    return res


def vdp_problem(params: VdpParams) -> MixedProblem:
    params = params.resolved()
    mu = float(params.mu)
    return MixedProblem(
        a1=ops.Lti((1.0, 0.0, 1.0), (1.0, 0.0)),
        a2=ops.cubic(mu),
        b=ops.Gain(mu),
        drive=Signal.zeros(params.n_samples, params.period_T),
    )


def _vdp_rhs(mu, v, w):
    return w, mu * (1.0 - v * v) * w - v


def vdp_period(mu: float, periods: int = 4) -> float:
    """Limit-cycle period of ``v'' - mu*(1 - v^2)*v' + v = 0`` by fixed-step RK4.

    Integration starts at ``(v, v') = (2, 0)``, which lies close to the limit
    cycle for every ``mu``.  After two settling periods the mean spacing of
    upward zero crossings over ``periods`` cycles is returned.
    """
    mu = float(mu)
    h = min(0.005, 0.05 / max(mu, 1.0))
    guess = 2 * math.pi if mu < 1 else (3 - 2 * math.log(2)) * mu + 2 * math.pi
    t_end = (periods + 3) * guess
    v, w, t = 2.0, 0.0, 0.0
    crossings = []
    while t < t_end and len(crossings) < periods + 3:
        k1v, k1w = _vdp_rhs(mu, v, w)
        k2v, k2w = _vdp_rhs(mu, v + 0.5 * h * k1v, w + 0.5 * h * k1w)
        k3v, k3w = _vdp_rhs(mu, v + 0.5 * h * k2v, w + 0.5 * h * k2w)
        k4v, k4w = _vdp_rhs(mu, v + h * k3v, w + h * k3w)
        vn = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        wn = w + h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
        if v < 0 <= vn:
            crossings.append(t + h * (-v) / (vn - v))
        v, w, t = vn, wn, t + h
    tc = np.array(crossings[2:])
    if tc.size < 2:
        raise RuntimeError(f"no limit cycle detected for mu={mu!r}")
    return float(np.mean(np.diff(tc)))


def vdp_solve(params: VdpParams, cfg: SolverConfig, csv_path=None) -> SolveResult:
    """Steady-state van der Pol waveform by :func:`mmdr`.

    Unless ``cfg.init`` is a signal or :class:`~portsolve.splitting.Sinusoid`,
    the iteration starts from ``amplitude_init * sin(2*pi*t/T)``; the zero
    signal is itself a fixed point.  A :class:`~portsolve.errors.TrivialFixedPoint`
    warning is issued if the result collapses to it anyway.
    """
    params = params.resolved()
    p = vdp_problem(params)
    init = cfg.init if isinstance(cfg.init, (Signal, Sinusoid)) else Sinusoid(params.amplitude_init)
    x1 = initial_signal(init, params.n_samples, params.period_T)
    res = mmdr(p, x1, cfg)
    res.info["period_T"] = params.period_T
    res.info["mu"] = params.mu
    res.info["trivial"] = bool(norm(res.solution) < 1e-3)
    if res.info["trivial"]:
        warnings.warn(
            f"van der Pol solve for mu={params.mu!r} collapsed to the zero equilibrium; "
            "check the period and the initialization",
            TrivialFixedPoint,
            stacklevel=2,
        )
    if csv_path is not None:
        write_csv(csv_path, res.solution)
    return res


def scan_period(params: VdpParams, cfg: SolverConfig, span: float = 0.05, num: int = 11) -> float:
    """Pick the period in ``T0*(1 +- span)`` whose converged solve has the smallest residual."""
    base = params.resolved().period_T
    best_T, best_r = base, math.inf
    for T in np.linspace(base * (1 - span), base * (1 + span), num):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TrivialFixedPoint)
            res = vdp_solve(replace(params, period_T=float(T)), cfg)
        r = res.fixed_point_residual
        if res.converged and not res.info["trivial"] and r < best_r:
            best_T, best_r = float(T), r
    return best_T
