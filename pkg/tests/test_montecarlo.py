import math

import numpy as np
import pytest

from intprocess.coeffs import Constant, GaussianCoeffs
from intprocess.cpoisson import CompoundPoissonSpec, Exponential, Gamma
from intprocess.errors import DomainError
from intprocess.gaussian import GaussianProcessSpec, law_integral
from intprocess.levy import BdlpHwSpec, GammaProcess, gamma_ou_closed_form
from intprocess.montecarlo import (
    McConfig,
    estimate_laplace,
    sample_cp_integral,
    sample_gamma_ou_integral,
    sample_gaussian_integral,
    sample_integral,
    supports,
)
from intprocess.numerics import GammaLawParams

OU = GaussianProcessSpec(GaussianCoeffs(beta=Constant(1.0), sigma=Constant(1.0)), 0.0, 1.0)


def test_config_validation():
    for bad in (dict(n_paths=0), dict(n_steps=0), dict(scheme="midpoint"), dict(seed=-1)):
        with pytest.raises(DomainError):
            McConfig(**bad)


def test_estimate_laplace_edge_cases():
    assert estimate_laplace([1.0, 2.0], 0.0).value == 1.0
    one = estimate_laplace([0.5], 1.0)
    assert one.stderr == 0.0 and one.value == pytest.approx(math.exp(-0.5))
    with pytest.raises(DomainError):
        estimate_laplace([], 1.0)
    with pytest.raises(DomainError):
        estimate_laplace([1.0], -1.0)


def test_zero_volatility_samples_are_deterministic():
    spec = GaussianProcessSpec(GaussianCoeffs(alpha=Constant(0.5), beta=Constant(1.0)), 0.0, 0.2)
    x = sample_gaussian_integral(spec, 1.5, McConfig(n_paths=50, n_steps=3))
    assert np.ptp(x) == 0.0
    assert x[0] == pytest.approx(law_integral(spec, 1.5).mean, abs=1e-13)


def test_brownian_integral_moments():
    spec = GaussianProcessSpec(GaussianCoeffs(sigma=Constant(1.0)), 0.0, 0.0)
    x = sample_gaussian_integral(spec, 1.0, McConfig(n_paths=200_000, n_steps=1, seed=3))
    assert abs(x.mean()) < 4 * math.sqrt(1 / 3 / x.size)
    assert x.var() == pytest.approx(1 / 3, rel=0.02)


def test_ou_exact_mean_and_transform():
    x = sample_gaussian_integral(OU, 1.0, McConfig(n_paths=200_000, n_steps=4, seed=1))
    law = law_integral(OU, 1.0)
    assert abs(x.mean() - (1 - math.exp(-1))) < 4 * math.sqrt(law.variance / x.size)
    assert x.var() == pytest.approx(law.variance, rel=0.02)
    assert estimate_laplace(x, 1.0).within(complex(OU.laplace(1.0, 1.0)).real, k=4)


def test_euler_bias_is_first_order():
    # with sigma = 0 every path equals the discretized mean, so the error is pure bias
    spec = GaussianProcessSpec(GaussianCoeffs(alpha=Constant(0.3), beta=Constant(2.0)), 0.0, 1.0)
    exact = law_integral(spec, 1.0).mean
    errs = [abs(sample_gaussian_integral(spec, 1.0, McConfig(1, n, 0, "euler"))[0] - exact)
            for n in (50, 100, 200)]
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.1)


def test_paths_do_not_depend_on_chunking():
    cfg = dict(n_paths=3001, n_steps=3, seed=11)
    a = sample_gaussian_integral(OU, 1.0, McConfig(**cfg))
    b = sample_gaussian_integral(OU, 1.0, McConfig(**cfg, chunk_size=257))
    assert np.array_equal(a, b)
    cp = CompoundPoissonSpec(2.0, Gamma(GammaLawParams(2.0, 0.5)), 0.0, 0.1)
    a = sample_cp_integral(cp, 1.0, McConfig(**cfg, scheme="exact_jumps"))
    b = sample_cp_integral(cp, 1.0, McConfig(**cfg, scheme="exact_jumps", chunk_size=100))
    assert np.array_equal(a, b)


def test_same_seed_same_samples():
    mc = McConfig(n_paths=1000, n_steps=2, seed=5)
    assert np.array_equal(sample_integral(OU, 1.0, mc), sample_integral(OU, 1.0, mc))


def test_cp_no_jump_fraction_and_state_shift():
    theta, t = 1.5, 1.0
    cp = CompoundPoissonSpec(theta, Exponential(1.0), 0.0, 0.0)
    mc = McConfig(n_paths=200_000, seed=2, scheme="exact_jumps")
    x = sample_cp_integral(cp, t, mc)
    p0 = math.exp(-theta * t)
    assert abs(np.mean(x == 0.0) - p0) < 4 * math.sqrt(p0 * (1 - p0) / x.size)
    # a starting state lambda_s adds exactly lambda_s * tau to every path
    shifted = sample_cp_integral(cp.conditioned(0.5, 2.0), 1.5, mc)
    assert np.allclose(shifted - x, 2.0, atol=1e-12)


def test_cp_transform_within_error():
    cp = CompoundPoissonSpec(3.0, Exponential(2.0), 0.0, 0.0)
    est = estimate_laplace(sample_cp_integral(cp, 1.0, McConfig(200_000, seed=4, scheme="exact_jumps")), 1.0)
    assert est.within(complex(cp.laplace(1.0, 1.0, route="closed")).real, k=4)


def test_cp_requires_exact_jumps_scheme():
    with pytest.raises(DomainError):
        sample_cp_integral(CompoundPoissonSpec(1.0, Exponential(1.0)), 1.0, McConfig(10))


def test_gamma_ou_without_jumps_is_deterministic():
    p = GammaLawParams(1.0, 1e-9)
    x = sample_gamma_ou_integral(p, 0.7, 2.0, 0.0, 1.0, McConfig(2000, 20, 1))
    assert np.allclose(x, 2.0 * -math.expm1(-0.7) / 0.7, atol=1e-6)


def test_gamma_ou_mean_and_transform():
    p, beta, lam = GammaLawParams(2.0, 1.5), 0.8, 0.3
    x = sample_gamma_ou_integral(p, beta, lam, 0.0, 1.0, McConfig(100_000, 50, 6))
    # mean from the derivative of the exponent at Laplace argument 0
    h = 1e-6
    mean = -(gamma_ou_closed_form(p, beta, lam, 0.0, 1.0, 1j * h).real) / h
    assert abs(x.mean() - mean) < 4 * x.std() / math.sqrt(x.size)
    ref = math.exp(gamma_ou_closed_form(p, beta, lam, 0.0, 1.0, 1j).real)
    assert estimate_laplace(x, 1.0).within(ref, k=4)


def test_support_and_dispatch():
    hw = BdlpHwSpec(GaussianCoeffs(beta=Constant(1.0), sigma=Constant(1.0)),
                    GammaProcess(GammaLawParams(1.0, 1.0)))
    assert supports(OU) and supports(hw)
    assert not supports(BdlpHwSpec(GaussianCoeffs(sigma=Constant(1.0)), GammaProcess(GammaLawParams(1.0, 1.0))))
    with pytest.raises(DomainError):
        sample_integral(object(), 1.0, McConfig(10))
