import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cestac_volterra.backends import PLAIN
from cestac_volterra.quadrature import (
    QuadConfig,
    abel_basis_integral,
    abel_integral,
    simpson,
    simpson_weights,
)
from cestac_volterra.sa import SaConfig, SaContext, sa_mean, sa_ncsd

from oracles import abel_moment


def test_weights_pattern():
    assert simpson_weights(4).tolist() == [1, 4, 2, 4, 1]


@pytest.mark.parametrize("panels", [2, 4, 16, 512])
def test_exact_on_cubics(panels):
    # power-of-two panel counts make every node and product exact
    assert simpson(lambda s: s * s * s, 0.0, 1.0, panels) == 0.25


@pytest.mark.parametrize("panels", [6, 10, 500])
def test_cubics_up_to_rounding(panels):
    assert abs(simpson(lambda s: s * s * s, 0.0, 1.0, panels) - 0.25) <= 8 * np.spacing(0.25)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.integers(min_value=-8, max_value=8), min_size=4, max_size=4),
    st.integers(min_value=-4, max_value=4),
    st.integers(min_value=1, max_value=8),
    st.sampled_from([2, 4, 8, 16]),
)
def test_cubic_exactness_property(coef, lo, width, panels):
    a0, a1, a2, a3 = coef
    hi = lo + width
    f = lambda s: a0 + a1 * s + a2 * s * s + a3 * s * s * s  # noqa: E731
    F = lambda s: a0 * s + a1 * s**2 / 2 + a2 * s**3 / 3 + a3 * s**4 / 4  # noqa: E731
    exact = F(hi) - F(lo)
    assert simpson(f, float(lo), float(hi), panels) == pytest.approx(exact, rel=1e-13, abs=1e-12)


def test_sine_over_half_period():
    assert abs(simpson(np.sin, 0.0, math.pi, 500) - 2.0) <= 1e-10


def test_empty_interval():
    assert simpson(np.exp, 0.3, 0.3, 10) == 0.0


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        simpson(np.exp, 1.0, 0.0, 10)
    with pytest.raises(ValueError):
        simpson(np.exp, 0.0, 1.0, 7)
    with pytest.raises(ValueError):
        QuadConfig(panels=0)


def test_fourth_order_convergence():
    exact = math.e - 1
    errs = [abs(simpson(np.exp, 0.0, 1.0, n) - exact) for n in (4, 8, 16, 32)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(12 <= q <= 20 for q in ratios), ratios


dyadic = st.integers(min_value=-64, max_value=64).map(lambda k: k / 8)


@settings(max_examples=50, deadline=None)
@given(dyadic, dyadic)
def test_linear_in_the_integrand(alpha, beta):
    # dyadic data keep the weighted sums exact; only the closing h/3 rounds
    f = lambda s: s * s  # noqa: E731
    g = lambda s: s  # noqa: E731
    lhs = simpson(lambda s: alpha * f(s) + beta * g(s), 0.0, 1.0, 16)
    F, G = simpson(f, 0.0, 1.0, 16), simpson(g, 0.0, 1.0, 16)
    rhs = alpha * F + beta * G
    scale = max(abs(alpha * F), abs(beta * G), 1e-300)
    assert abs(lhs - rhs) <= 2 * np.spacing(scale)


def test_batched_bounds():
    lo = np.array([0.0, 1.0, 2.0])
    hi = np.array([1.0, 3.0, 2.5])
    got = simpson(lambda s: s * s, lo, hi, 20)
    assert np.allclose(got, (hi**3 - lo**3) / 3, rtol=1e-14)


class TestAbel:
    @pytest.mark.parametrize("j, expected", [(0, math.pi / 2), (1, 1.0), (2, math.pi / 4)])
    def test_unit_radius_moments(self, j, expected):
        assert abel_basis_integral(1.0, 0.0, j) == pytest.approx(expected, abs=1e-11)

    @pytest.mark.parametrize("r", [0.1, 0.5, 1.7])
    @pytest.mark.parametrize("j", range(8))
    def test_against_wallis(self, r, j):
        # even powers of sin are integrated to rounding level, odd ones to ~1e-12
        assert abel_basis_integral(r, 0.0, j) == pytest.approx(abel_moment(r, j), rel=2e-11, abs=1e-15)

    def test_zero_radius(self):
        assert abel_basis_integral(0.0, 0.5, 3) == pytest.approx((-0.5) ** 3 * math.pi / 2)

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            abel_basis_integral(-0.1, 0.0, 0)

    def test_cut_integrand_sanity(self):
        # direct Simpson on the singular form, stopped just short of s = r
        r, j = 0.8, 2
        cut = r * (1 - 1e-6)
        direct = simpson(lambda s: s**j / np.sqrt(r * r - s * s), 0.0, cut, 200_000)
        tail = math.sqrt(2 * r * r * 1e-6) * r**j / r  # leading-order remainder of the cut-off piece
        assert abs(direct + tail - abel_basis_integral(r, 0.0, j)) < 1e-3

    def test_generic_integrand(self):
        got = abel_integral(lambda s: 2 + s, 1.3)
        assert got == pytest.approx(math.pi + 1.3, abs=1e-11)


def test_stochastic_simpson_keeps_most_digits():
    ctx = SaContext(SaConfig(rng_seed=5))
    v = simpson(lambda s: ctx.func("sin", s), ctx.lift(0.0), ctx.lift(math.pi), 500, ctx)
    assert sa_mean(v) == pytest.approx(2.0, abs=1e-10)
    assert sa_ncsd(v, ctx.config) >= 12


def test_backends_agree():
    ctx = SaContext(SaConfig(rng_seed=9))
    plain = abel_basis_integral(0.7, 0.1, 4, backend=PLAIN)
    sa = abel_basis_integral(0.7, 0.1, 4, backend=ctx)
    assert sa_mean(sa) == pytest.approx(plain, rel=1e-13)
