import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intprocess.coeffs import (
    ZERO,
    Constant,
    Function,
    GaussianCoeffs,
    LinearDecay,
    PiecewiseConstant,
    Polynomial,
    Rational1OverTminus,
    SampledGrid,
    big_g,
    big_i,
    big_k,
    g_integral,
)
from intprocess.errors import DomainError
from intprocess.numerics import integrate_1d

VARIANTS = {
    "constant": Constant(0.7),
    "piecewise": PiecewiseConstant((0.5, 1.2), (0.2, -0.4, 1.1)),
    "polynomial": Polynomial((0.8,), ((0.1, 0.5, -0.2), (1.0, -0.3))),
    "rational": Rational1OverTminus(3.0, 0.5),
    "linear_decay": LinearDecay(0.3, 2.5),
    "sampled": SampledGrid((0.0, 0.6, 1.5, 2.1), (0.2, 0.9, 0.4, 0.5)),
    "function": Function(np.sin, antiderivative_fn=lambda t: -np.cos(t)),
}


@pytest.mark.parametrize("name", sorted(VARIANTS))
def test_integral_matches_quadrature(name):
    f = VARIANTS[name]
    a, b = 0.1, 2.0
    quad = integrate_1d(lambda u: f(u), a, b, points=f.breakpoints_in(a, b)).real
    assert f.integral(a, b) == pytest.approx(quad, abs=1e-13)


@pytest.mark.parametrize("name", sorted(VARIANTS))
def test_integral_is_additive(name):
    f = VARIANTS[name]
    assert f.integral(0.1, 0.9) + f.integral(0.9, 2.0) == pytest.approx(f.integral(0.1, 2.0), abs=1e-14)


def test_piecewise_constant_layout():
    f = PiecewiseConstant((1.0, 2.0), (1.0, 2.0, 3.0))
    assert list(f(np.array([0.0, 1.0, 1.5, 2.0, 5.0]))) == [1.0, 2.0, 2.0, 3.0, 3.0]
    assert f.integral(0.0, 3.0) == pytest.approx(1 + 2 + 3)


def test_validation_errors():
    with pytest.raises(DomainError):
        PiecewiseConstant((1.0, 0.5), (1, 2, 3))
    with pytest.raises(DomainError):
        PiecewiseConstant((1.0,), (1.0,))
    with pytest.raises(DomainError):
        SampledGrid((0.0,), (1.0,))
    with pytest.raises(DomainError):
        SampledGrid((0.0, 1.0), (1.0, 2.0))(1.5)
    with pytest.raises(DomainError):
        Rational1OverTminus(1.0)(1.0)


def test_rational_integral_reaches_singularity_only_from_below():
    f = Rational1OverTminus(1.0)
    assert f.integral(0.0, 0.5) == pytest.approx(math.log(2.0))
    with pytest.raises(DomainError):
        f.integral(0.0, 1.5)


def test_function_without_antiderivative_uses_quadrature():
    f = Function(lambda t: t**2)
    assert not f.has_exact_integral
    assert f.integral(0.0, 3.0) == pytest.approx(9.0, abs=1e-13)


def test_zero_detection():
    assert ZERO.is_zero
    assert PiecewiseConstant((1.0,), (0.0, 0.0)).is_zero
    assert not Constant(1e-300).is_zero


# --- kernels -------------------------------------------------------------------


@given(st.floats(0.0, 3.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_big_g_constant_beta(beta, s, dt):
    c = GaussianCoeffs(beta=Constant(beta))
    assert big_g(c, s, s + dt) == pytest.approx(math.exp(-beta * dt))
    assert big_g(c, s + dt, s) == pytest.approx(1.0 / big_g(c, s, s + dt))


@given(st.floats(0.0, 3.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_big_g_multiplicative(b1, m, dt):
    c = GaussianCoeffs(beta=PiecewiseConstant((1.0,), (b1, b1 + 0.5)))
    s, t = 0.0, m + dt
    assert big_g(c, s, m) * big_g(c, m, t) == pytest.approx(big_g(c, s, t), rel=1e-13)


@pytest.mark.parametrize("beta", [Constant(0.8), PiecewiseConstant((0.4,), (0.3, 1.2)),
                                  Polynomial((), ((0.5, 0.2),)), Rational1OverTminus(2.5)])
def test_g_integral_closed_vs_quadrature(beta):
    c = GaussianCoeffs(beta=beta)
    s = np.array([0.0, 0.3, 1.0])
    t = 1.7
    auto = np.asarray(g_integral(c, s, t))
    quad = np.asarray(g_integral(c, s, t, method="quad"))
    direct = [integrate_1d(lambda u: big_g(c, si, u), si, t, points=c.breakpoints_in(si, t)).real
              for si in s]
    assert np.allclose(auto, quad, atol=1e-13)
    assert np.allclose(auto, direct, atol=1e-13)


def test_big_i_closed_vs_quadrature():
    c = GaussianCoeffs(alpha=Constant(0.4), beta=Constant(0.9))
    for t in (0.5, 2.0):
        assert big_i(c, 0.0, t) == pytest.approx(big_i(c, 0.0, t, method="quad"), abs=1e-13)


def test_big_k_freezes_sigma_at_first_argument():
    sig = PiecewiseConstant((0.5,), (1.0, 3.0))
    c = GaussianCoeffs(beta=Constant(1.0), sigma=sig)
    # sigma(0.2) = 1 although sigma = 3 on most of [0.2, 2]
    assert big_k(c, 0.2, 2.0) == pytest.approx(1.0 - math.exp(-1.8))


def test_coefficient_breakpoints_union():
    c = GaussianCoeffs(alpha=PiecewiseConstant((1.0,), (0, 1)),
                       sigma=SampledGrid((0.0, 0.5, 2.0), (1, 2, 3)))
    assert c.breakpoints == (0.0, 0.5, 1.0, 2.0)
    assert c.breakpoints_in(0.0, 2.0) == [0.5, 1.0]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=4))
def test_polynomial_antiderivative_derivative(coefs):
    f = Polynomial((), (tuple(coefs),))
    h = 1e-6
    t = 0.7
    num = (f.antiderivative(np.array(t + h)) - f.antiderivative(np.array(t - h))) / (2 * h)
    assert num == pytest.approx(float(f(t)), abs=1e-7)
