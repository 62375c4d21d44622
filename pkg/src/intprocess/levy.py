"""Levy drivers and integrated Levy / Levy-driven Hull-White processes.

Exponents follow the characteristic convention
``psi_X(x) = ln E[exp(i x X_1)]`` with the Gaussian part entering as
``-sigma^2 x^2 / 2``. Laplace transforms are recovered as
``E[exp(-y Lambda)] = exp(psi_Lambda(i y))``.

For the Hull-White SDE driven by X,

    psi_{Lambda_{s,t}}(x) = i x M(s,t) + int_s^t psi_X(x K(u,t)) du,

with the same M and K as in the Gaussian case.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .coeffs import Constant, GaussianCoeffs, CoefficientFn, big_k
from .cpoisson import JumpLaw
from .errors import DomainError, PoleError
from .gaussian import GaussianProcessSpec, integral_mean
from .numerics import (
    DEFAULT_QUAD,
    GammaLawParams,
    QuadratureConfig,
    gamma_exponent,
    integrate_1d,
    li2,
)

_POLE_SAMPLES = 64
_POLE_REL_DIST = 1e-6


class LevyExponent:
    """Characteristic exponent of a Levy process, ``psi(0) == 0``."""

    def psi(self, x):
        raise NotImplementedError

    def poles(self):
        """(location, scale) pairs of poles of psi in the x-plane."""
        return ()

    def log_arguments(self, x):
        """Arguments fed to principal logarithms, for branch-crossing checks."""
        return None

    def __call__(self, x):
        return self.psi(x)


@dataclass(frozen=True)
class BrownianDrift(LevyExponent):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError("Brownian coefficient must be non-negative")

    def psi(self, x):
        x = np.asarray(x, dtype=complex)
        out = 1j * self.mu * x - 0.5 * self.sigma**2 * x * x
        return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GammaProcess(LevyExponent):
    """Gamma subordinator: X_1 ~ Gamma(shape alpha, rate kappa)."""

    params: GammaLawParams

    def psi(self, x):
        return gamma_exponent(x, self.params)

    def poles(self):
        return ((-1j * self.params.kappa, self.params.kappa),)

    def log_arguments(self, x):
        return self.params.kappa - 1j * np.asarray(x, dtype=complex)


@dataclass(frozen=True)
class CompoundPoisson(LevyExponent):
    """theta * (E[exp(i x Z)] - 1) for jump sizes Z with the given law."""

    theta: float
    jump: JumpLaw

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError("Poisson intensity must be positive")

    def psi(self, x):
        x = np.asarray(x, dtype=complex)
        out = self.theta * (np.asarray(self.jump.laplace(-1j * x)) - 1.0)
        return complex(out) if np.ndim(out) == 0 else out

    def poles(self):
        # laplace pole at -1j * x = p  <=>  x = 1j * p
        return tuple((1j * p, abs(p)) for p in self.jump.poles())


@dataclass(frozen=True)
class VarianceGamma(LevyExponent):
    """Brownian motion time-changed by a gamma subordinator."""

    params: GammaLawParams

    def psi(self, x):
        return variance_gamma_exponent(self.params, x)

    def poles(self):
        r = math.sqrt(2.0 * self.params.kappa)
        return ((1j * r, r), (-1j * r, r))

    def log_arguments(self, x):
        x = np.asarray(x, dtype=complex)
        return self.params.kappa + 0.5 * x * x

    @property
    def gamma_pair(self) -> GammaLawParams:
        """Parameters of the two independent gamma legs whose difference is VG."""
        return GammaLawParams(math.sqrt(2.0 * self.params.kappa), self.params.alpha)


def variance_gamma_exponent(p: GammaLawParams, x):
    """psi_gamma(i x^2 / 2): the VG exponent with unit-variance Brownian part."""
    x = np.asarray(x, dtype=complex)
    return gamma_exponent(0.5j * x * x, p)


# ---------------------------------------------------------------------------
# pole / branch guard
# ---------------------------------------------------------------------------


def _segment_distance(z, p):
    """Distance from ``p`` to each straight segment of the sampled path ``z``."""
    if z.size == 1:
        return np.abs(z - p)
    a, b = z[:-1], z[1:]
    d = b - a
    den = np.abs(d) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(den > 0, ((p - a) * d.conjugate()).real / den, 0.0)
    w = np.clip(w, 0.0, 1.0)
    return np.abs(a + w * d - p)


def check_path(driver: LevyExponent, z) -> None:
    """Raise PoleError if the polygon through the sampled arguments ``z``
    comes near a pole of the driver exponent, or if one of its logarithms
    crosses the branch cut between samples."""
    z = np.asarray(z, dtype=complex).ravel()
    for loc, scale in driver.poles():
        if np.min(_segment_distance(z, loc)) < _POLE_REL_DIST * scale:
            raise PoleError(f"exponent argument path passes within "
                            f"{_POLE_REL_DIST}*{scale} of the pole at {loc}")
    w = driver.log_arguments(z)
    if w is not None:
        neg = w.real < 0
        flips = np.signbit(w.imag[1:]) != np.signbit(w.imag[:-1])
        if np.any(neg[1:] & neg[:-1] & flips):
            raise PoleError("exponent argument path crosses a logarithm branch cut")


def _sample_nodes(s, t, n=_POLE_SAMPLES):
    return np.linspace(s, t, n)


# ---------------------------------------------------------------------------
# exponents of stochastic and time integrals
# ---------------------------------------------------------------------------


def psi_stochastic_integral(driver: LevyExponent, sigma_fn: CoefficientFn, s: float,
                            t: float, x, cfg: Optional[QuadratureConfig] = None) -> complex:
    """ln E[exp(i x int_s^t sigma(u) dX_u)] = int_s^t psi_X(sigma(u) x) du."""
    if t < s:
        raise DomainError("psi_stochastic_integral needs t >= s")
    x = complex(x)
    if x == 0 or t == s:
        return 0j
    check_path(driver, x * sigma_fn(_sample_nodes(s, t)))
    f = lambda u: driver.psi(x * sigma_fn(u))
    return integrate_1d(f, s, t, cfg, sigma_fn.breakpoints_in(s, t))


@dataclass(frozen=True)
class BdlpHwSpec:
    """Hull-White SDE driven by a Levy process, started at ``lambda_s``."""

    coeffs: GaussianCoeffs
    driver: LevyExponent
    s: float = 0.0
    lambda_s: float = 0.0

    family = "bdlp_hw"

    def conditioned(self, s: float, lambda_s: float) -> "BdlpHwSpec":
        return replace(self, s=float(s), lambda_s=float(lambda_s))

    def gamma_ou_params(self):
        """(GammaLawParams, beta) if this is a gamma-OU process, else None."""
        c = self.coeffs
        if not (isinstance(self.driver, GammaProcess) and c.alpha.is_zero
                and isinstance(c.beta, Constant) and c.beta.value > 0
                and isinstance(c.sigma, Constant) and c.sigma.value > 0):
            return None
        p = self.driver.params
        # sigma * gamma(kappa, alpha) is gamma(kappa / sigma, alpha)
        return GammaLawParams(p.kappa / c.sigma.value, p.alpha), c.beta.value

    def routes(self):
        return ("quad", "closed") if self.gamma_ou_params() else ("quad",)

    def psi(self, t, x, cfg=None, route="quad"):
        if route == "closed":
            got = self.gamma_ou_params()
            if got is None:
                raise DomainError("closed route needs a gamma-OU spec")
            p, beta = got
            return gamma_ou_closed_form(p, beta, self.lambda_s, self.s, t, x)
        return psi_integrated_hw(self, t, x, cfg)

    def laplace(self, t, x, cfg=None, route="auto"):
        route = "quad" if route == "auto" else route
        if route not in self.routes():
            raise DomainError(f"route {route!r} unavailable for BDLP Hull-White spec")
        return cmath.exp(self.psi(t, 1j * complex(x), cfg, route))


def psi_integrated_hw(spec: BdlpHwSpec, t: float, x,
                      cfg: Optional[QuadratureConfig] = None) -> complex:
    """i x M(s,t) + int_s^t psi_X(x K(u,t)) du with K(u,t) = sigma(u) int_u^t G(u,v) dv."""
    s = float(spec.s)
    t = float(t)
    if t < s:
        raise DomainError("psi_integrated_hw needs t >= s")
    x = complex(x)
    if x == 0 or t == s:
        return 0j
    cfg = cfg or DEFAULT_QUAD
    c = spec.coeffs
    mean = integral_mean(GaussianProcessSpec(c, s, spec.lambda_s), t, cfg)
    if c.sigma.is_zero:
        return 1j * x * mean
    inner_cfg = cfg.tightened()
    check_path(spec.driver, x * big_k(c, _sample_nodes(s, t), t, inner_cfg))
    f = lambda u: spec.driver.psi(x * big_k(c, u, t, inner_cfg))
    return 1j * x * mean + integrate_1d(f, s, t, cfg, c.breakpoints_in(s, t))


def gamma_ou_closed_form(p: GammaLawParams, beta: float, lambda_s: float, s: float,
                         t: float, x) -> complex:
    """Integrated gamma-OU exponent through the dilogarithm.

    For d lambda = -beta lambda dt + d gamma_t, gamma_1 ~ Gamma(alpha, kappa):

        i x lambda_s (1 - e^{-beta tau}) / beta + tau psi_gamma(x / beta)
        + (alpha / beta) (Li2(v) - Li2(v e^{-beta tau})),   v = -i x / (kappa beta - i x).

    The sign of the dilogarithm difference was checked against the nested
    quadrature of the general formula.
    """
    if beta <= 0:
        raise DomainError("gamma-OU needs beta > 0")
    if t < s:
        raise DomainError("gamma_ou_closed_form needs t >= s")
    x = complex(x)
    if x == 0:
        return 0j
    tau = float(t) - float(s)
    kb = p.kappa * beta
    denom = kb - 1j * x
    if abs(denom) < _POLE_REL_DIST * kb:
        raise PoleError("gamma-OU closed form at its pole kappa*beta = i x")
    v = -1j * x / denom
    decay = -math.expm1(-beta * tau) / beta
    drift = 1j * x * lambda_s * decay
    return (drift + tau * complex(gamma_exponent(x / beta, p))
            + p.alpha / beta * (li2(v) - li2(v * math.exp(-beta * tau))))


@dataclass(frozen=True)
class IntegratedLevySpec:
    """lambda itself is a Levy process with exponent ``driver``."""

    driver: LevyExponent
    s: float = 0.0
    lambda_s: float = 0.0

    family = "integrated_levy"

    def conditioned(self, s, lambda_s):
        return replace(self, s=float(s), lambda_s=float(lambda_s))

    def routes(self):
        if isinstance(self.driver, (GammaProcess, VarianceGamma)):
            return ("quad", "closed")
        return ("quad",)

    def psi(self, t, x, cfg=None, route="quad"):
        if route == "closed":
            tau = float(t) - float(self.s)
            drift = 1j * complex(x) * self.lambda_s * tau
            if isinstance(self.driver, GammaProcess):
                return drift + gamma_integrated_closed_form(self.driver.params, tau, x)
            if isinstance(self.driver, VarianceGamma):
                return integrated_vg_closed_form(self.driver.params, self.lambda_s, tau, x)
            raise DomainError("closed route needs a gamma or variance-gamma driver")
        return psi_integrated_levy(self.driver, self.lambda_s, self.s, t, x, cfg)

    def laplace(self, t, x, cfg=None, route="auto"):
        route = "quad" if route == "auto" else route
        if route not in self.routes():
            raise DomainError(f"route {route!r} unavailable for integrated Levy spec")
        return cmath.exp(self.psi(t, 1j * complex(x), cfg, route))


def psi_integrated_levy(driver: LevyExponent, lambda_s: float, s: float, t: float, x,
                        cfg: Optional[QuadratureConfig] = None) -> complex:
    """i x lambda_s (t-s) + int_s^t psi_lambda(x (t-u)) du."""
    if t < s:
        raise DomainError("psi_integrated_levy needs t >= s")
    x = complex(x)
    if x == 0 or t == s:
        return 0j
    check_path(driver, x * (t - _sample_nodes(s, t)))
    f = lambda u: driver.psi(x * (t - u))
    return 1j * x * lambda_s * (t - s) + integrate_1d(f, s, t, cfg)


def gamma_integrated_closed_form(p: GammaLawParams, tau: float, x,
                                 as_published: bool = False) -> complex:
    """int_0^tau psi_gamma(x w) dw in closed form.

    Derived value: ``alpha tau - (kappa / (i x)) psi_gamma(x tau) / phi(x tau)``
    where ``phi(y) = kappa / (kappa - i y)``. ``as_published=True`` returns
    the uncorrected variant ``(kappa/(i x)) psi/phi - alpha tau (1 - ln kappa)``,
    which disagrees with quadrature and is kept only to document that.
    """
    x = complex(x)
    if x == 0:
        return 0j
    k, a = p.kappa, p.alpha
    psi = complex(gamma_exponent(x * tau, p))
    phi1 = k / (k - 1j * x * tau)
    if as_published:
        return k / (1j * x) * psi / phi1 - a * tau * (1.0 - math.log(k))
    return a * tau - k / (1j * x) * psi / phi1


def integrated_vg_closed_form(p: GammaLawParams, lambda_s: float, tau: float, x) -> complex:
    """Integrated variance-gamma exponent as the sum of two integrated gamma legs."""
    q = GammaLawParams(math.sqrt(2.0 * p.kappa), p.alpha)
    x = complex(x)
    return (1j * x * lambda_s * tau + gamma_integrated_closed_form(q, tau, x)
            + gamma_integrated_closed_form(q, tau, -x))


@dataclass(frozen=True)
class LevySubordinatorSpec:
    """The integrated intensity Lambda is itself a Levy process (no memory)."""

    driver: LevyExponent
    s: float = 0.0
    lambda_s: float = 0.0

    family = "levy_direct"

    def conditioned(self, s, lambda_s):
        # increments are independent of the past: the state is irrelevant
        return replace(self, s=float(s))

    def routes(self):
        return ("closed",)

    def laplace(self, t, x, cfg=None, route="auto"):
        tau = float(t) - float(self.s)
        if tau < 0:
            raise DomainError("horizon precedes conditioning time")
        return cmath.exp(tau * complex(self.driver.psi(1j * complex(x))))
