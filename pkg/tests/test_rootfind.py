import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bisect_root
from portsolve.errors import BracketFailure
from portsolve.rootfind import solve_resolvent_equation


def cube(v):
    return v**3


def dcube(v):
    return 3 * v**2


@pytest.mark.parametrize("df", [dcube, None])
def test_matches_bisection(df):
    z = np.array([-5.0, -1.0, 0.0, 0.3, 1.0, 40.0])
    x = solve_resolvent_equation(cube, z, 0.7, df)
    for xi, zi in zip(x, z):
        oracle = bisect_root(lambda t: t + 0.7 * t**3 - zi, -abs(zi) - 1, abs(zi) + 1)
        assert xi == pytest.approx(oracle, abs=1e-10)


def test_flat_then_steep():
    # piecewise: zero slope for |v| < 1, very steep outside; Newton alone overshoots
    f = lambda v: np.where(np.abs(v) < 1, 0.0, 1e6 * (v - np.sign(v)))
    z = np.linspace(-3, 3, 13)
    x = solve_resolvent_equation(f, z, 1.0)
    assert np.all(np.abs(x + f(x) - z) <= 1e-9 * (1 + np.abs(z)))


def test_shape_preserved():
    z = np.ones((2, 3))
    assert solve_resolvent_equation(cube, z, 1.0, dcube).shape == (2, 3)


def test_negative_alpha_when_bracketable():
    # x - 0.5*tanh(x) = z is still increasing
    z = np.array([-2.0, 0.1, 3.0])
    x = solve_resolvent_equation(np.tanh, z, -0.5)
    np.testing.assert_allclose(x - 0.5 * np.tanh(x), z, atol=1e-11)


def test_bracket_failure():
    with pytest.raises(BracketFailure):
        solve_resolvent_equation(lambda v: -np.exp(v), np.zeros(3), 1.0, lambda v: -np.exp(v))


@settings(max_examples=150, deadline=None)
@given(z=st.floats(-1e4, 1e4), alpha=st.floats(1e-3, 1e3), g=st.floats(0.0, 10.0), mu=st.floats(0.0, 5.0))
def test_residual_tolerance(z, alpha, g, mu):
    f = lambda v: g * v + mu * v**3 / 3
    df = lambda v: g + mu * v**2
    x = solve_resolvent_equation(f, np.array([z]), alpha, df)
    assert abs(x[0] + alpha * f(x[0]) - z) <= 1e-10 * (1 + abs(z)) + 1e-10 * abs(alpha * f(x[0]))
