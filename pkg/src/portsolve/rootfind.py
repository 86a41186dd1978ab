"""Vectorized safeguarded Newton-bisection for increasing scalar equations.

Every entry of the input arrays is an independent scalar problem.  The
iteration only ever mixes values belonging to the same entry, so the result
for a sample does not depend on the other samples.
"""

from __future__ import annotations

import numpy as np

from portsolve.errors import BracketFailure

MAX_ITER = 200
MAX_EXPANSIONS = 60
NEWTON_ITER = 25
_EPS4 = 4 * np.finfo(float).eps


def _fd_derivative(f, x):
    h = 1e-7 * (1.0 + np.abs(x))
    return (f(x + h) - f(x - h)) / (2 * h)


def solve_resolvent_equation(f, z, alpha, df=None, rtol=1e-12, max_iter=MAX_ITER):
    r"""Solve ``x + alpha*f(x) = z`` elementwise.

    The initial bracket is ``[z - alpha*|f(z)|, z + alpha*|f(z)|]``, which
    already contains the root when ``f`` is nondecreasing and ``alpha > 0``.
    When a derivative is supplied, plain Newton from ``x = z`` is tried first;
    the bracketed solver only runs if that fails to converge everywhere.
    It is doubled until the residual changes sign, at most ``MAX_EXPANSIONS``
    times.  Inside the bracket a Newton step is taken whenever it stays
    strictly inside, otherwise the interval is bisected.

    Parameters
    ----------
    f : callable
        Vectorized scalar map.
    z : ndarray
        Right-hand sides.
    alpha : float
        Step size.  May be negative (resolvents of negated operators), in
        which case a root is still found when a sign change can be bracketed.
    df : callable, optional
        Derivative of ``f``.  Central differences are used when omitted.
    rtol : float
        Stop once ``|x + alpha*f(x) - z| <= rtol*(1 + |z|)``.

    Returns
    -------
    ndarray
        The roots, same shape as ``z``.

    Raises
    ------
    BracketFailure
        If no sign change is found within the expansion limit.
    """
    z = np.asarray(z, dtype=float)
    shape = z.shape
    z = z.ravel()
    alpha = float(alpha)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = _newton(f, df, z, alpha, rtol)
        if x is None:
            x = _solve(f, df, z, alpha, rtol, max_iter)
    return x.reshape(shape)


def _newton(f, df, z, alpha, rtol, max_iter=NEWTON_ITER):
    """Plain Newton from ``x = z``; returns None unless every entry converges.

    Converged entries are frozen, so each entry still only depends on its own
    right-hand side.
    """
    if df is None:
        return None
    tol = rtol * (1.0 + np.abs(z))
    x = z
    hx = alpha * np.asarray(f(x), dtype=float)
    active = ~(np.abs(hx) <= tol)
    for _ in range(max_iter):
        if not active.any():
            return x
        xn = x - hx / (1.0 + alpha * df(x))
        x = np.where(active, xn, x)
        hx = x + alpha * f(x) - z
        active = ~(np.abs(hx) <= tol)
    return None


def _solve(f, df, z, alpha, rtol, max_iter):
    def h(x):
        return x + alpha * f(x) - z

    tol = rtol * (1.0 + np.abs(z))
    fz = np.asarray(f(z), dtype=float)
    hz = alpha * fz
    half = np.abs(hz)
    half = np.where(np.isfinite(half) & (half > 0), half, 1.0 + np.abs(z))
    lo, hi = z - half, z + half
    hlo, hhi = h(lo), h(hi)

    for _ in range(MAX_EXPANSIONS):
        bad = ~(hlo * hhi <= 0)  # also catches NaN from overflowing f
        if not bad.any():
            break
        width = np.where(bad, hi - lo, 0.0)
        lo, hi = lo - width, hi + width
        hlo, hhi = np.where(bad, h(lo), hlo), np.where(bad, h(hi), hhi)
    else:
        bad = ~(hlo * hhi <= 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise BracketFailure(
                f"could not bracket the root of x + alpha*f(x) = {z[i]!r} "
                f"(alpha={alpha!r}); is f really monotone?"
            )

    # orient so that h(lo) <= 0 <= h(hi)
    flip = hlo > 0
    lo, hi = np.where(flip, hi, lo), np.where(flip, lo, hi)

    x = z.copy()
    hx = hz
    active = ~(np.abs(hx) <= tol)
    for _ in range(max_iter):
        if not active.any():
            break
        neg = hx < 0
        lo = np.where(active & neg, x, lo)
        hi = np.where(active & ~neg, x, hi)
        d = df(x) if df is not None else _fd_derivative(f, x)
        step = x - hx / (1.0 + alpha * d)
        a, b = np.minimum(lo, hi), np.maximum(lo, hi)
        xn = np.where((step > a) & (step < b), step, 0.5 * (lo + hi))
        hn = h(xn)
        x = np.where(active, xn, x)
        hx = np.where(active, hn, hx)
        active &= ~(np.abs(hx) <= tol) & ((b - a) > _EPS4 * np.abs(xn))
    return x
