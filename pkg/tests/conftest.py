"""Shared independent oracles for the test suite.

Nothing here imports the numerical internals of the package: the DFT oracle
is the O(N^2) definition, scalar roots come from plain bisection and van der
Pol reference waveforms come from scipy's adaptive integrator.
"""

from __future__ import annotations

import functools

import numpy as np
import pytest


def naive_dft(x):
    """Direct O(N^2) evaluation of ``X[k] = sum_n x[n] exp(-2 pi i k n / N)``."""
    x = np.asarray(x, dtype=complex)
    n = x.size
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def naive_idft(c):
    c = np.asarray(c, dtype=complex)
    n = c.size
    k = np.arange(n)
    return (np.exp(2j * np.pi * np.outer(k, k) / n) @ c) / n


def bisect_root(h, lo, hi, tol=1e-15, max_iter=200):
    """Root of an increasing scalar function on ``[lo, hi]`` by bisection."""
    hlo = h(lo)
    assert hlo <= 0 <= h(hi), "bracket does not contain a sign change"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if h(mid) <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def vdp_rhs(mu):
    def f(t, y):
        return [y[1], mu * (1 - y[0] ** 2) * y[1] - y[0]]

    return f


@functools.lru_cache(maxsize=None)
def vdp_reference(mu: float, n: int, period_T: float):
    """Van der Pol limit cycle sampled at ``n`` points over one period ``period_T``.

    The transient is integrated away first with DOP853 at tight tolerances.
    """
    from scipy.integrate import solve_ivp

    settle = 200.0 + 40.0 * mu
    sol = solve_ivp(vdp_rhs(mu), [0.0, settle + period_T], [2.0, 0.0], method="DOP853",
                    rtol=1e-11, atol=1e-11, dense_output=True)
    t = settle + np.arange(n) * (period_T / n)
    return sol.sol(t)[0]


@functools.lru_cache(maxsize=None)
def vdp_reference_period(mu: float) -> float:
    """Limit-cycle period from upward zero crossings of a DOP853 trajectory."""
    from scipy.integrate import solve_ivp

    settle = 200.0 + 40.0 * mu

    def crossing(t, y):
        return y[0]

    crossing.direction = 1.0
    sol = solve_ivp(vdp_rhs(mu), [0.0, settle + 12 * (2 * np.pi + 2 * mu)], [2.0, 0.0],
                    method="DOP853", rtol=1e-11, atol=1e-11, events=crossing)
    times = sol.t_events[0]
    times = times[times > settle]
    return float(np.mean(np.diff(times)))


def aligned_relative_error(x, ref):
    """Relative l2 error of ``x`` against the best cyclic shift of ``ref``."""
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    corr = np.fft.ifft(np.fft.fft(x) * np.conj(np.fft.fft(ref))).real
    best = int(np.argmax(corr))
    err = min(np.linalg.norm(np.roll(ref, s) - x) for s in range(best - 3, best + 4))
    return err / np.linalg.norm(ref)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
