import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bisect_root, naive_dft, naive_idft
from portsolve.errors import BracketFailure, DomainViolation, PoleOnGrid, ResolventSingular
from portsolve.operators import (
    Gain,
    Lti,
    Negated,
    OffsetOutput,
    StaticNonlinearity,
    apply,
    cayley,
    check_monotone,
    cubic,
    frequency_response,
    gaussian_sampler,
    harmonic_pair_sampler,
    has_dc_pole,
    resolvent,
    saturation,
)
from portsolve.signal import Signal, inner, norm

CUBE = StaticNonlinearity(lambda v: v**3, lambda v: 3 * v**2)
LOSSLESS = Lti((1, 0, 1), (1, 0))

# root of x + x^3 = 1, from the bisection oracle
ROOT_X3 = bisect_root(lambda x: x + x**3 - 1, 0.0, 1.0)


def const(c, n=4, T=1.0):
    return Signal.constant(c, n, T)


def test_bisection_oracle_value():
    # frozen value cross-checks the oracle itself
    assert ROOT_X3 == pytest.approx(0.6823278038280193, abs=1e-15)


class TestApply:
    def test_gain(self):
        np.testing.assert_array_equal(apply(Gain(3), const(2)).samples, 6.0)

    def test_static(self):
        x = Signal(np.array([-1.0, 0.0, 2.0]), 1.0)
        np.testing.assert_array_equal(apply(CUBE, x).samples, [-1.0, 0.0, 8.0])

    def test_lossless_annihilates_fundamental(self):
        x = Signal.sinusoid(1.0, 1000, 2 * math.pi)
        y = apply(LOSSLESS, x)
        assert norm(y) < 1e-6

    def test_lti_against_naive_dft(self, rng):
        op = Lti((1.0, 2.0), (1.0, 3.0, 2.0))
        x = Signal(rng.standard_normal(32), 2.0)
        k = np.arange(32)
        w = 2 * np.pi * np.where(k <= 16, k, k - 32) / 2.0
        G = (1j * w + 2.0) / ((1j * w) ** 2 + 3 * (1j * w) + 2.0)
        expected = naive_idft(G * naive_dft(x.samples)).real
        np.testing.assert_allclose(apply(op, x).samples, expected, atol=1e-12)

    def test_dc_pole_requires_zero_mean(self):
        with pytest.raises(DomainViolation):
            apply(LOSSLESS, const(1.0, 8))
        y = apply(LOSSLESS, Signal.sinusoid(1.0, 8, 1.0, harmonic=2))
        assert abs(y.mean()) < 1e-12

    def test_pole_on_grid(self):
        # poles at +-j, which is w_1 when T = 2*pi
        with pytest.raises(PoleOnGrid):
            apply(Lti((1.0,), (1.0, 0.0, 1.0)), Signal.zeros(8, 2 * math.pi))

    def test_zero_denominator_rejected(self):
        with pytest.raises(ValueError):
            Lti((1.0,), (0.0, 0.0))

    def test_wrappers(self):
        x = const(2.0)
        np.testing.assert_array_equal(apply(Negated(Gain(3)), x).samples, -6.0)
        np.testing.assert_array_equal(apply(OffsetOutput(Gain(3), const(1.0)), x).samples, 7.0)

    def test_has_dc_pole(self):
        assert has_dc_pole(LOSSLESS)
        assert has_dc_pole(Negated(OffsetOutput(LOSSLESS, const(0.0))))
        assert not has_dc_pole(Lti((1.0,), (1.0, 1.0)))
        assert not has_dc_pole(Gain(1))


class TestResolvent:
    def test_gain(self):
        np.testing.assert_allclose(resolvent(Gain(1), 1.0, const(2)).samples, 1.0)

    def test_cube_exact_root(self):
        np.testing.assert_allclose(resolvent(CUBE, 1.0, const(2)).samples, 1.0, atol=1e-12)

    def test_cube_bisection_oracle(self):
        np.testing.assert_allclose(resolvent(CUBE, 1.0, const(1)).samples, ROOT_X3, atol=1e-8)

    def test_cube_without_derivative(self):
        op = StaticNonlinearity(lambda v: v**3)
        np.testing.assert_allclose(resolvent(op, 1.0, const(1)).samples, ROOT_X3, atol=1e-8)

    def test_lossless_multiplier(self, rng):
        n, T, a = 64, 3.0, 0.05
        z = Signal(rng.standard_normal(n), T)
        k = np.arange(n)
        w = 2 * np.pi * np.where(k <= n // 2, k, k - n) / T
        mult = np.zeros(n, dtype=complex)
        s = 1j * w[1:]
        G = (s**2 + 1) / s
        G[n // 2 - 1] = G[n // 2 - 1].real  # Nyquist bin: the +w and -w responses averaged
        mult[1:] = 1.0 / (1.0 + a * G)
        expected = naive_idft(mult * naive_dft(z.samples)).real
        x = resolvent(LOSSLESS, a, z)
        np.testing.assert_allclose(x.samples, expected, atol=1e-12)
        assert abs(x.mean()) < 1e-14

    def test_offset_shifts_input(self):
        z = const(5.0)
        x = resolvent(OffsetOutput(Gain(1), const(1.0)), 1.0, z)
        # x + (x + 1) = 5
        np.testing.assert_allclose(x.samples, 2.0)

    def test_negated_gain(self):
        # x - 0.5*x = 1
        np.testing.assert_allclose(resolvent(Negated(Gain(0.5)), 1.0, const(1.0)).samples, 2.0)
        with pytest.raises(ResolventSingular):
            resolvent(Negated(Gain(1.0)), 1.0, const(1.0))

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError):
            resolvent(Gain(1), 0.0, const(1))

    def test_non_monotone_bracket_failure(self):
        # x - exp(x) never exceeds -1, so x + f(x) = 0 has no root
        op = StaticNonlinearity(lambda v: -np.exp(v), lambda v: -np.exp(v), monotone=False)
        with pytest.raises(BracketFailure):
            resolvent(op, 1.0, const(0.0, 2))

    @pytest.mark.parametrize("op", [Gain(2.5), CUBE, saturation(2.0, 0.5), cubic(1.5), LOSSLESS,
                                    Lti((1.0, 2.0), (1.0, 1.0))], ids=repr)
    def test_consistency(self, op, rng):
        z = Signal(rng.standard_normal(32), 2.0)
        if has_dc_pole(op):
            z = z - z.mean()
        for a in (0.05, 1.0, 7.0):
            x = resolvent(op, a, z)
            assert norm(x + a * apply(op, x) - z) <= 1e-8 * (1 + norm(z))

    def test_per_sample_independence(self, rng):
        z = rng.standard_normal(50) * 3
        full = resolvent(cubic(1.5), 0.3, Signal(z, 1.0)).samples
        for i in (0, 17, 49):
            alone = resolvent(cubic(1.5), 0.3, Signal(np.array([z[i], 0.0]), 1.0)).samples[0]
            assert alone == full[i]


class TestCayley:
    def test_zero_gain_is_identity(self, rng):
        z = Signal(rng.standard_normal(8), 1.0)
        np.testing.assert_array_equal(cayley(Gain(0), 0.7, z).samples, z.samples)

    def test_gain_one(self):
        np.testing.assert_allclose(cayley(Gain(1), 1.0, const(2)).samples, 0.0, atol=1e-15)

    def test_cube_oracle(self):
        np.testing.assert_allclose(cayley(CUBE, 1.0, const(1)).samples, 2 * ROOT_X3 - 1, atol=1e-7)
        assert 2 * ROOT_X3 - 1 == pytest.approx(0.3646556076560386, abs=1e-15)


_OPS = {
    "gain": Gain(1.7),
    "cubic": cubic(1.5),
    "saturation": saturation(3.0, 0.7),
    "lossless": LOSSLESS,
}


@pytest.mark.parametrize("name", sorted(_OPS))
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.01, 10.0), scale=st.floats(0.1, 10.0))
def test_firm_nonexpansive_and_cayley_nonexpansive(name, seed, alpha, scale):
    op = _OPS[name]
    rng = np.random.default_rng(seed)
    z1 = Signal(scale * rng.standard_normal(64), 1.0)
    z2 = Signal(scale * rng.standard_normal(64), 1.0)
    x1, x2 = resolvent(op, alpha, z1), resolvent(op, alpha, z2)
    dx, dz = x1 - x2, z1 - z2
    assert inner(dx, dz) >= norm(dx) ** 2 - 1e-9
    c = cayley(op, alpha, z1) - cayley(op, alpha, z2)
    assert norm(c) <= norm(dz) + 1e-9


class TestCheckMonotone:
    def test_gain(self):
        r = check_monotone(Gain(2), trials=50)
        assert r.monotone
        assert r.min_pairing == pytest.approx(2.0)
        assert r.tested_pairs == 50

    def test_negated_gain(self):
        r = check_monotone(Negated(Gain(1)), trials=50)
        assert r.verdict == "violation-found"
        assert r.min_pairing == pytest.approx(-1.0)

    def test_vdp_cubic(self):
        r = check_monotone(cubic(1.5), trials=200)
        assert r.monotone and r.min_pairing >= 0

    def test_lossless(self):
        r = check_monotone(LOSSLESS, trials=200)
        assert r.monotone
        assert r.min_pairing >= -1e-9
        assert abs(r.min_pairing) < 1e-9

    def test_inconclusive_counted(self):
        r = check_monotone(LOSSLESS, sampler=gaussian_sampler(16, 1.0), trials=20)
        assert r.inconclusive == 20 and r.tested_pairs == 0

    def test_sampler_is_deterministic(self):
        a = check_monotone(cubic(1.0), trials=30, seed=5)
        b = check_monotone(cubic(1.0), trials=30, seed=5)
        assert a == b

    @settings(max_examples=40, deadline=None)
    @given(num=st.lists(st.floats(-3, 3), min_size=1, max_size=3),
           den=st.lists(st.floats(0.1, 3), min_size=2, max_size=3))
    def test_lti_verdict_matches_real_part(self, num, den):
        # denominators with positive coefficients of degree <= 2 are Hurwitz,
        # so no pole sits on the imaginary axis
        op = Lti(tuple(num), tuple(den))
        n, T = 16, 1.0
        G = frequency_response(op, n, T)
        analytic = bool(np.all(G.real[: n // 2 + 1] >= -1e-9))
        rep = check_monotone(op, sampler=harmonic_pair_sampler(n, T, zero_mean=False), trials=2 * (n // 2 + 1))
        assert rep.monotone == analytic
        assert rep.min_pairing == pytest.approx(G.real[: n // 2 + 1].min(), abs=1e-9)
