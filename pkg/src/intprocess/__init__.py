"""Laplace transforms of integrated short-rate and intensity processes.

The canonical transform is ``phi(x) = E[exp(-x Lambda_{s,t})]`` with
``Lambda_{s,t} = int_s^t lambda_u du``; characteristic functions are
``phi(-i u)``. Families: Gaussian Hull-White (:mod:`.gaussian`), Levy-driven
Hull-White and integrated Levy processes (:mod:`.levy`), and integrated
compound Poisson processes (:mod:`.cpoisson`).
"""

from .errors import (
    ConfigError,
    DomainError,
    IntProcessError,
    NumericalError,
    PoleError,
    QuadratureError,
    SeriesConvergenceError,
)
from .numerics import GammaLawParams, QuadratureConfig, integrate_1d, li2
from .coeffs import Constant, GaussianCoeffs
from .gaussian import GaussianProcessSpec, NormalLaw, law_integral
from .levy import (
    BdlpHwSpec,
    BrownianDrift,
    CompoundPoisson,
    GammaProcess,
    IntegratedLevySpec,
    LevySubordinatorSpec,
    VarianceGamma,
)
from .cpoisson import CompoundPoissonSpec, Custom, Exponential, Gamma
from .montecarlo import McConfig, McEstimate, estimate_laplace, sample_integral
from .finance import DiscountCurve, SurvivalCurve, bond_price, calibrate, invert_distribution, survival_curve

__version__ = "0.1.0"
