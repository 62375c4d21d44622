"""Gaussian short-rate processes and their time integrals.

For the linear SDE with deterministic coefficients, both ``lambda_t`` and
``Lambda_{s,t} = int_s^t lambda_u du`` are Gaussian given ``lambda_s``.
This module computes those laws generically by quadrature, the Laplace
transform ``E[exp(-x Lambda_{s,t})] = exp(-M x + V x^2 / 2)``, and a small
registry of closed forms used as independent checks.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .coeffs import (
    Constant,
    Function,
    GaussianCoeffs,
    LinearDecay,
    Rational1OverTminus,
    ZERO,
    big_g,
    big_i,
    big_k,
    g_integral,
)
from .errors import DomainError
from .numerics import DEFAULT_QUAD, QuadratureConfig, integrate_1d, integrate_nested


@dataclass(frozen=True)
class NormalLaw:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance >= 0.0:
            raise DomainError(f"negative variance {self.variance}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


EXAMPLE_KINDS = ("rescaled_bm", "integrated_ou", "swap_bridge", "subordinated")


@dataclass(frozen=True)
class GaussianProcessSpec:
    """Linear Gaussian SDE started from ``lambda_s`` at time ``s``.

    ``example`` optionally names a closed-form registry entry
    ``(kind, params)`` describing the same process; it enables the
    ``closed`` route.
    """

    coeffs: GaussianCoeffs
    s: float = 0.0
    lambda_s: float = 0.0
    example: Optional[tuple] = field(default=None, compare=False)

    family = "gaussian"

    def conditioned(self, s: float, lambda_s: float) -> "GaussianProcessSpec":
        return replace(self, s=float(s), lambda_s=float(lambda_s))

    def routes(self):
        return ("quad", "closed") if self.example else ("quad",)

    def law_integral(self, t, cfg=None, route="quad"):
        if route == "closed":
            if not self.example:
                raise DomainError("no closed form registered for this spec")
            kind, params = self.example
            return closed_form(kind, {**params, "lambda_s": self.lambda_s}, self.s, t)
        return law_integral(self, t, cfg)

    def laplace(self, t, x, cfg=None, route="auto"):
        route = "quad" if route == "auto" else route
        if route not in self.routes():
            raise DomainError(f"route {route!r} unavailable for gaussian spec")
        return laplace_from_law(self.law_integral(t, cfg, route), x)


def _check_horizon(spec, t):
    if t < spec.s:
        raise DomainError(f"horizon t={t} precedes conditioning time s={spec.s}")


def law_lambda(spec: GaussianProcessSpec, t: float,
               cfg: Optional[QuadratureConfig] = None) -> NormalLaw:
    """Law of lambda_t given lambda_s."""
    _check_horizon(spec, t)
    c, s = spec.coeffs, float(spec.s)
    t = float(t)
    if t == s:
        return NormalLaw(spec.lambda_s, 0.0)
    mean = big_g(c, s, t, cfg) * (spec.lambda_s + big_i(c, s, t, cfg))
    if c.sigma.is_zero:
        return NormalLaw(float(mean), 0.0)
    var = integrate_1d(lambda u: c.sigma(u) ** 2 * big_g(c, u, t, cfg) ** 2,
                       s, t, cfg, c.breakpoints_in(s, t)).real
    return NormalLaw(float(mean), max(float(var), 0.0))


def _i_has_closed_form(c: GaussianCoeffs) -> bool:
    return c.alpha.is_zero or (isinstance(c.alpha, Constant)
                               and (c.beta.is_zero or isinstance(c.beta, Constant)))


def integral_mean(spec: GaussianProcessSpec, t: float,
                  cfg: Optional[QuadratureConfig] = None) -> float:
    """M(s,t) = (t-s) lambda_s + int_s^t (t-u)(alpha(u) - beta(u) G(s,u)(lambda_s + I(s,u))) du."""
    c, s, lam = spec.coeffs, float(spec.s), float(spec.lambda_s)
    t = float(t)
    if t == s:
        return 0.0
    if c.alpha.is_zero and c.beta.is_zero:
        return (t - s) * lam
    cfg = cfg or DEFAULT_QUAD
    pts = c.breakpoints_in(s, t)

    def outer(u, I_u):
        drift = c.alpha(u) - c.beta(u) * big_g(c, s, u, cfg) * (lam + I_u)
        return (t - u) * drift

    if _i_has_closed_form(c):
        val = integrate_1d(lambda u: outer(u, big_i(c, s, u, cfg)), s, t, cfg, pts)
    else:
        inner = lambda u, v: c.alpha(v) * big_g(c, v, s, cfg)
        val = integrate_nested(inner, s, t, outer=outer, cfg=cfg, region="lower", points=pts)
    return (t - s) * lam + float(np.real(val))


def integral_variance(spec: GaussianProcessSpec, t: float,
                      cfg: Optional[QuadratureConfig] = None) -> float:
    """V(s,t) = int_s^t K(u,t)^2 du."""
    c, s = spec.coeffs, float(spec.s)
    t = float(t)
    if t == s or c.sigma.is_zero:
        return 0.0
    cfg = cfg or DEFAULT_QUAD
    inner_cfg = cfg.tightened()
    val = integrate_1d(lambda u: big_k(c, u, t, inner_cfg) ** 2, s, t, cfg,
                       c.breakpoints_in(s, t))
    return max(float(np.real(val)), 0.0)


def law_integral(spec: GaussianProcessSpec, t: float,
                 cfg: Optional[QuadratureConfig] = None) -> NormalLaw:
    """Law of Lambda_{s,t} given lambda_s, by quadrature."""
    _check_horizon(spec, t)
    return NormalLaw(integral_mean(spec, t, cfg), integral_variance(spec, t, cfg))


def laplace_from_law(law: NormalLaw, x):
    """exp(-M x + x^2 V / 2) for scalar or array ``x``."""
    if np.ndim(x):
        x = np.asarray(x, dtype=complex)
        return np.exp(-law.mean * x + 0.5 * x * x * law.variance)
    x = complex(x)
    return cmath.exp(-law.mean * x + 0.5 * x * x * law.variance)


def laplace(spec: GaussianProcessSpec, t: float, x,
            cfg: Optional[QuadratureConfig] = None):
    """Laplace transform of Lambda_{s,t} given lambda_s."""
    return laplace_from_law(law_integral(spec, t, cfg), x)


# ---------------------------------------------------------------------------
# closed-form registry
# ---------------------------------------------------------------------------


def _ou_variance_factor(y: float) -> float:
    """2y - 3 + 4 e^{-y} - e^{-2y}, with a series where it cancels."""
    if y < 0.1:
        return sum((-y) ** n * (4.0 - 2.0**n) / math.factorial(n) for n in range(3, 24))
    return 2.0 * y - 3.0 + 4.0 * math.exp(-y) - math.exp(-2.0 * y)


def integrated_ou_variance_as_published(beta: float, sigma: float, tau: float) -> float:
    """Uncorrected integrated-OU variance formula in common circulation.

    Kept for documentation only: it is negative at beta = sigma = tau = 1.
    The correct expression is used by :func:`closed_form`.
    """
    e = math.exp(-beta * tau)
    return (sigma / (2.0 * beta)) ** 2 * (2.0 * tau + e / beta * (4.0 - e) - 6.0 / beta)


def _subordinated_coeffs(params):
    f = params["f"]
    theta_prime = params["theta_prime"]
    theta_inv = params["theta_inv"]

    def sigma(r):
        w = theta_inv(np.asarray(r, dtype=float))
        return np.asarray(f(w), dtype=float) / np.asarray(theta_prime(w), dtype=float)

    def log_abs_sigma(r):
        val = sigma(r)
        if np.any(val == 0):
            raise DomainError("subordinated volatility vanishes; beta = -sigma'/sigma undefined")
        return np.log(np.abs(val))

    def beta(r):
        r = np.asarray(r, dtype=float)
        h = 1e-4 * np.maximum(1.0, np.abs(r))
        # five-point stencil of -d/dr ln|sigma|
        d = (-log_abs_sigma(r + 2 * h) + 8 * log_abs_sigma(r + h)
             - 8 * log_abs_sigma(r - h) + log_abs_sigma(r - 2 * h)) / (12 * h)
        return -d

    return GaussianCoeffs(
        alpha=ZERO,
        beta=Function(beta, antiderivative_fn=lambda r: -log_abs_sigma(r)),
        sigma=Function(sigma),
    )


def subordinated_spec(params, s: float) -> tuple:
    """Rewrite int f(u) W_{theta(u)} du as the integral of sigma(r) W_r.

    Returns ``(spec, theta)`` where ``spec`` lives on the time-changed
    clock and is conditioned on ``W_{theta(s)} = params.get("w_s", 0)``.
    """
    theta = params["theta"]
    c = _subordinated_coeffs(params)
    r0 = float(theta(s))
    lam0 = float(c.sigma(r0)) * float(params.get("w_s", 0.0))
    return GaussianProcessSpec(c, r0, lam0), theta


def closed_form(kind: str, params: dict, s: float, t: float,
                cfg: Optional[QuadratureConfig] = None) -> NormalLaw:
    """(M, V) of Lambda_{s,t} from the closed-form registry.

    Kinds and their parameters:

    ``rescaled_bm``
        ``sigma``, ``lambda_s``.
    ``integrated_ou``
        ``beta``, ``sigma``, ``lambda_s`` (alpha = 0).
    ``swap_bridge``
        ``gamma``, ``sigma``, ``T``, ``lambda_s``; the horizon ``t`` must be ``T``.
    ``subordinated``
        ``f``, ``theta``, ``theta_prime``, ``theta_inv`` (vectorised
        callables) and optionally ``w_s``; delegates to :func:`law_integral`
        on the time-changed clock.
    """
    s = float(s)
    t = float(t)
    if t < s:
        raise DomainError("closed_form needs t >= s")
    tau = t - s
    lam = float(params.get("lambda_s", 0.0))
    if kind == "rescaled_bm":
        sigma = float(params["sigma"])
        return NormalLaw(tau * lam, sigma**2 * tau**3 / 3.0)
    if kind == "integrated_ou":
        beta = float(params["beta"])
        sigma = float(params["sigma"])
        if beta <= 0:
            raise DomainError("integrated_ou needs beta > 0")
        mean = lam * -math.expm1(-beta * tau) / beta
        var = sigma**2 / (2.0 * beta**3) * _ou_variance_factor(beta * tau)
        return NormalLaw(mean, max(var, 0.0))
    if kind == "swap_bridge":
        gamma = float(params["gamma"])
        sigma = float(params["sigma"])
        T = float(params["T"])
        if not s <= T:
            raise DomainError("swap_bridge needs s <= T")
        if not math.isclose(t, T, rel_tol=0.0, abs_tol=1e-14):
            raise DomainError("swap_bridge closed form only covers the horizon t = T")
        h = T - s
        return NormalLaw(lam * h / 2.0 + gamma * h**3 / 6.0, sigma**2 * h**3 / 12.0)
    if kind == "subordinated":
        spec, theta = subordinated_spec(params, s)
        return law_integral(spec, float(theta(t)), cfg)
    raise DomainError(f"unknown closed-form kind {kind!r}")


def example_spec(kind: str, params: dict, s: float = 0.0) -> GaussianProcessSpec:
    """Generic-route spec for a registry kind other than ``subordinated``, closed form attached."""
    lam = float(params.get("lambda_s", 0.0))
    rest = {k: v for k, v in params.items() if k != "lambda_s"}
    if kind == "rescaled_bm":
        c = GaussianCoeffs(sigma=Constant(float(params["sigma"])))
    elif kind == "integrated_ou":
        c = GaussianCoeffs(beta=Constant(float(params["beta"])),
                           sigma=Constant(float(params["sigma"])))
    elif kind == "swap_bridge":
        T = float(params["T"])
        c = GaussianCoeffs(alpha=LinearDecay(float(params["gamma"]), T),
                           beta=Rational1OverTminus(T),
                           sigma=Constant(float(params["sigma"])))
    else:
        raise DomainError(f"no generic spec for kind {kind!r}")
    return GaussianProcessSpec(c, float(s), lam, example=(kind, rest))
