import math

import numpy as np
import pytest
from scipy.stats import norm

from intprocess.coeffs import Constant, GaussianCoeffs
from intprocess.cpoisson import CompoundPoissonSpec, Exponential
from intprocess.errors import DomainError
from intprocess.finance import (
    FAMILIES,
    DiscountCurve,
    SurvivalCurve,
    bond_price,
    calibrate,
    distribution,
    generate_curve,
    invert_distribution,
    read_discount_curve,
    survival_curve,
    write_discount_curve,
)
from intprocess.gaussian import GaussianProcessSpec, law_integral
from intprocess.levy import BdlpHwSpec, GammaProcess, LevySubordinatorSpec
from intprocess.numerics import GammaLawParams

OU = GaussianProcessSpec(GaussianCoeffs(beta=Constant(1.0), sigma=Constant(1.0)), 0.0, 1.0)


def test_curve_validation():
    with pytest.raises(DomainError):
        DiscountCurve([1.0, 0.5], [0.9, 0.95])
    with pytest.raises(DomainError):
        DiscountCurve([1.0, 2.0], [0.9, -0.1])
    with pytest.raises(DomainError):
        DiscountCurve([1.0], [0.9, 0.8])
    with pytest.raises(DomainError):
        SurvivalCurve([0.0, 1.0], [1.0, 0.9])
    assert DiscountCurve([1.0, 2.0], [1.001, 1.002]).has_negative_rates


def test_curve_csv_round_trip(tmp_path):
    curve = DiscountCurve([0.5, 1.0, 7.25], [0.99, 1 / 3, 0.7])
    path = tmp_path / "c.csv"
    write_discount_curve(path, curve)
    back = read_discount_curve(path)
    assert np.array_equal(back.maturities, curve.maturities)
    assert np.array_equal(back.discounts, curve.discounts)


def test_curve_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,0.9\n2,abc\n")
    with pytest.raises(DomainError):
        read_discount_curve(bad)
    bad.write_text("1,0.9,3\n")
    with pytest.raises(DomainError):
        read_discount_curve(bad)


def test_bond_price_is_laplace_at_one():
    assert bond_price(OU, 0.0) == 1.0
    assert bond_price(OU, 1.0) == pytest.approx(0.5780615440018313, abs=1e-12)


def test_negative_short_rates_give_prices_above_one():
    spec = GaussianProcessSpec(GaussianCoeffs(), 0.0, -0.01)
    assert bond_price(spec, 2.0) == pytest.approx(math.exp(0.02))


def test_survival_curve_uses_conditioning_state():
    spec = CompoundPoissonSpec(1.0, Exponential(2.0), 0.0, 0.0)
    curve = survival_curve(spec, 1.0, [0.5, 1.0], 0.3)
    ref = math.exp(-0.3 * 0.5) * complex(spec.laplace(0.5, 1.0, route="closed")).real
    assert curve.probabilities[0] == pytest.approx(ref, abs=1e-12)
    assert np.all(np.diff(curve.probabilities) < 0)


def test_memory_property():
    gou = BdlpHwSpec(GaussianCoeffs(beta=Constant(0.8), sigma=Constant(1.0)), GammaProcess(GammaLawParams(2.0, 1.5)))
    lev = LevySubordinatorSpec(GammaProcess(GammaLawParams(2.0, 1.5)))
    tenors = [0.5, 1.0, 3.0]
    a, b = (survival_curve(gou, 1.0, tenors, s).probabilities for s in (0.1, 1.0))
    assert np.max(np.abs(a - b)) > 1e-3
    a, b = (survival_curve(lev, 1.0, tenors, s).probabilities for s in (0.1, 1.0))
    assert np.array_equal(a, b)


def test_gaussian_inversion_matches_normal_cdf():
    law = law_integral(OU, 1.0)
    grid = np.linspace(law.mean - 4 * math.sqrt(law.variance), law.mean + 4 * math.sqrt(law.variance), 41)
    res = distribution(OU, 1.0, grid)
    ref = norm.cdf(grid, law.mean, math.sqrt(law.variance))
    assert np.max(np.abs(res.cdf - ref)) < 1e-8
    assert res.route == "quad" and res.truncation_bound <= 1e-12


def test_deterministic_integral_is_a_step():
    spec = GaussianProcessSpec(GaussianCoeffs(alpha=Constant(1.0)), 0.0, 0.0)
    # lambda_u = u, so Lambda = 1/2 surely
    res = distribution(spec, 1.0, [0.0, 0.49, 0.51, 0.6])
    assert list(res.cdf) == [0.0, 0.0, 1.0, 1.0]


def test_inversion_output_is_a_distribution_function():
    spec = CompoundPoissonSpec(2.0, Exponential(1.0), 0.0, 0.0)
    res = distribution(spec, 1.0, np.linspace(-0.5, 6.0, 27))
    assert res.route == "closed"
    assert np.all((res.cdf >= 0) & (res.cdf <= 1)) and np.all(np.diff(res.cdf) >= 0)
    assert res.cdf[0] < 1e-6
    assert res.max_adjustment < 1e-3


def test_inversion_argument_errors():
    with pytest.raises(DomainError):
        invert_distribution(lambda x: np.exp(-x), [])
    with pytest.raises(DomainError):
        invert_distribution(lambda x: np.exp(-x), [0.0], atom=(0.0, 1.5))


def test_scalar_transform_is_accepted():
    res = invert_distribution(lambda x: complex(np.exp(0.5 * x * x)), [0.0])
    assert res.cdf[0] == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("family,params", [
    ("ou", (0.6, 0.02, 0.03)),
    ("cp_exponential", (0.8, 40.0, 0.01)),
    ("constant", (0.025,)),
    ("gamma_ou", (50.0, 0.5, 0.7, 0.02)),
])
def test_calibration_reproduces_generated_curve(family, params):
    curve = generate_curve(family, params, [1, 2, 5, 10])
    res = calibrate(family, curve)
    assert res.residual_norm < 1e-8
    # the fitted spec reprices the curve through its own transform route
    spec = res.spec()
    for T, d in zip(curve.maturities, curve.discounts):
        assert bond_price(spec, T) == pytest.approx(d, abs=1e-7)


def test_calibration_with_fixed_parameter():
    curve = generate_curve("ou", (0.6, 0.02, 0.03), [1, 2, 5, 10])
    res = calibrate("ou", curve, fixed={"beta": 0.6})
    assert res.params["beta"] == 0.6 and res.residual_norm < 1e-8


def test_calibration_errors():
    curve = generate_curve("constant", (0.02,), [1.0])
    with pytest.raises(DomainError):
        calibrate("ou", curve)
    with pytest.raises(DomainError):
        calibrate("ou", curve, fixed={"rho": 1.0})
    with pytest.raises(DomainError):
        calibrate("constant", curve, lower=[0.1], upper=[0.0])


def test_families_price_at_zero_maturity_limit():
    for name, fam in FAMILIES.items():
        mid = tuple(0.5 * (l + u) for l, u in zip(fam.lower, fam.upper))
        assert fam.price(mid, 1e-12) == pytest.approx(1.0, abs=1e-9)
