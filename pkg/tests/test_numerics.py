import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intprocess.errors import DomainError, PoleError, QuadratureError
from intprocess.numerics import (
    GammaLawParams,
    QuadratureConfig,
    char_to_laplace,
    gamma_exponent,
    gamma_laplace,
    integrate_1d,
    integrate_nested,
    laplace_to_char,
    li2,
)

finite = st.floats(-4, 4, allow_nan=False)


def test_convention_helpers_are_inverse():
    for u in (0.0, 1.5, -2 + 1j):
        assert char_to_laplace(laplace_to_char(u)) == pytest.approx(u)
    assert char_to_laplace(2.0) == -2j


def test_gamma_law_params_validation_and_moments():
    p = GammaLawParams(kappa=2.0, alpha=3.0)
    assert p.mean == pytest.approx(1.5)
    assert p.variance == pytest.approx(0.75)
    for bad in ((0.0, 1.0), (1.0, -1.0), (math.nan, 1.0)):
        with pytest.raises(DomainError):
            GammaLawParams(*bad)


def test_gamma_laplace_values():
    p = GammaLawParams(1.0, 1.0)
    assert gamma_laplace(0.0, p) == 1.0
    assert gamma_laplace(1.0, p) == pytest.approx(0.5)
    assert gamma_laplace(1.0, GammaLawParams(2.0, 3.0)) == pytest.approx((2 / 3) ** 3)


def test_gamma_laplace_pole():
    with pytest.raises(PoleError):
        gamma_laplace(-1.0, GammaLawParams(1.0, 1.0))


@given(st.floats(0.1, 5), st.floats(0.1, 5), finite)
def test_gamma_exponent_matches_laplace(kappa, alpha, x):
    p = GammaLawParams(kappa, alpha)
    # exp(psi(u)) = E[exp(i u X)] = laplace(-i u)
    assert cmath.exp(complex(gamma_exponent(x, p))) == pytest.approx(complex(gamma_laplace(-1j * x, p)), rel=1e-12)


def test_gamma_exponent_vectorized():
    p = GammaLawParams(1.3, 0.7)
    xs = np.linspace(-3, 3, 7)
    vec = gamma_exponent(xs, p)
    assert vec.shape == xs.shape
    for x, v in zip(xs, vec):
        assert complex(gamma_exponent(float(x), p)) == pytest.approx(v)


# --- dilogarithm -----------------------------------------------------------


def test_li2_special_values():
    assert li2(0) == 0
    assert abs(li2(1) - math.pi**2 / 6) < 1e-14
    assert abs(li2(-1) + math.pi**2 / 12) < 1e-14
    assert abs(li2(0.5) - (math.pi**2 / 12 - math.log(2) ** 2 / 2)) < 1e-14


@settings(max_examples=300)
@given(st.floats(-6, 6), st.floats(-6, 6))
def test_li2_matches_mpmath(re, im):
    z = complex(re, im)
    ref = complex(mpmath.polylog(2, z))
    assert abs(complex(li2(z)) - ref) <= 1e-13 * max(1.0, abs(ref))


@pytest.mark.parametrize("x", [1.5, 2.0, 10.0])
def test_li2_real_cut_is_limit_from_below(x):
    ref = complex(mpmath.polylog(2, x))
    assert abs(complex(li2(x)) - ref) < 1e-13 * abs(ref)
    assert complex(li2(x)).imag == pytest.approx(-math.pi * math.log(x))


@given(st.floats(0.01, 0.99))
def test_li2_landen_and_reflection(x):
    # Landen: Li2(x) + Li2(x / (x - 1)) = -ln(1 - x)^2 / 2
    assert abs(li2(x) + li2(x / (x - 1)) + 0.5 * math.log(1 - x) ** 2) < 1e-12
    # Euler reflection
    assert abs(li2(x) + li2(1 - x) - (math.pi**2 / 6 - math.log(x) * math.log(1 - x))) < 1e-12


def test_li2_array():
    z = np.array([0.1, -2.0, 0.5 + 0.5j])
    out = li2(z)
    assert out.shape == (3,)
    assert out[1] == pytest.approx(complex(li2(-2.0)))


# --- quadrature --------------------------------------------------------------


@pytest.mark.parametrize("deg", range(0, 12))
def test_quadrature_exact_on_polynomials(deg):
    got = integrate_1d(lambda t: t**deg, -0.5, 2.0)
    exact = (2.0 ** (deg + 1) - (-0.5) ** (deg + 1)) / (deg + 1)
    assert abs(got - exact) <= 1e-14 * max(1.0, abs(exact))


def test_quadrature_complex_integrand():
    got = integrate_1d(lambda t: np.exp(1j * t), 0.0, math.pi)
    assert abs(got - 2j) < 1e-14


def test_quadrature_vector_integrand():
    got = integrate_1d(lambda t: np.stack([t, t * t], axis=-1), 0.0, 1.0)
    assert np.allclose(got, [0.5, 1.0 / 3.0], atol=1e-15)


def test_quadrature_breakpoints_handle_kinks():
    f = lambda t: np.abs(t - 0.3)
    got = integrate_1d(f, 0.0, 1.0, points=(0.3,))
    assert abs(got - (0.3**2 + 0.7**2) / 2) < 1e-15


def test_quadrature_reversed_and_empty_interval():
    assert integrate_1d(lambda t: t, 1.0, 1.0) == 0
    assert integrate_1d(lambda t: t, 1.0, 0.0) == pytest.approx(-0.5)


def test_quadrature_nonconvergence_raises():
    cfg = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=3)
    with pytest.raises(QuadratureError):
        integrate_1d(lambda t: np.sin(1.0 / t), 1e-4, 1.0, cfg)
    res = integrate_1d(lambda t: np.sin(1.0 / t), 1e-4, 1.0, cfg, full_output=True)
    assert not res.converged and res.error > 0


def test_quadrature_endpoint_singularity():
    # plain bisection without extrapolation: error falls like sqrt(width)
    got = integrate_1d(lambda t: 1.0 / np.sqrt(t), 0.0, 1.0,
                       QuadratureConfig(1e-7, 1e-7, 2000))
    assert abs(got - 2.0) < 1e-6


def test_nested_regions():
    upper = integrate_nested(lambda u, v: np.ones_like(v), 0.0, 1.0, region="upper")
    lower = integrate_nested(lambda u, v: v, 0.0, 1.0, region="lower")
    assert upper == pytest.approx(0.5, abs=1e-14)
    assert lower == pytest.approx(1.0 / 6.0, abs=1e-14)


@given(st.floats(0.1, 3.0))
def test_nested_with_outer_weight(b):
    # int_0^b (b - u) int_0^u v dv du = b^4 / 24
    got = integrate_nested(lambda u, v: v, 0.0, b, outer=lambda u, inner: (b - u) * inner, region="lower")
    assert abs(got - b**4 / 24) <= 1e-12 * max(1.0, b**4)
