"""Integrated compound Poisson processes.

``lambda_t = lambda_s + sum_{i <= N_t - N_s} X_i`` with Poisson arrivals of
intensity ``theta``. The Laplace transform of ``Lambda_{s,t}`` is available
through three independent routes:

* ``levy``   : one quadrature after resolving the jump-size integral,
               ``exp(-x lambda_s tau + theta int_0^tau (phi_X(x w) - 1) dw)``;
* ``series`` : the jump-time conditioning series, with the n-fold ordered
               integrals computed recursively on a fixed spectral grid;
* ``closed`` : exponential or gamma jump sizes in closed form.

All transforms here use the Laplace convention ``E[exp(-x Lambda)]``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.special import gammainc

from .errors import DomainError, PoleError, SeriesConvergenceError
from .numerics import (
    DEFAULT_QUAD,
    GammaLawParams,
    QuadratureConfig,
    clog1p,
    gamma_laplace,
    integrate_1d,
)

# ---------------------------------------------------------------------------
# jump laws
# ---------------------------------------------------------------------------


class JumpLaw:
    """Law of a single jump size, described by its Laplace transform."""

    def laplace(self, x):
        raise NotImplementedError

    def poles(self):
        """Pole locations of ``laplace`` in the x-plane."""
        return ()


@dataclass(frozen=True)
class Exponential(JumpLaw):
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("exponential jump rate must be positive")

    @property
    def gamma_params(self) -> GammaLawParams:
        return GammaLawParams(self.kappa, 1.0)

    @property
    def mean(self) -> float:
        return 1.0 / self.kappa

    def laplace(self, x):
        return gamma_laplace(x, self.gamma_params)

    def poles(self):
        return (-self.kappa,)


@dataclass(frozen=True)
class Gamma(JumpLaw):
    params: GammaLawParams

    @property
    def gamma_params(self) -> GammaLawParams:
        return self.params

    @property
    def mean(self) -> float:
        return self.params.mean

    def laplace(self, x):
        return gamma_laplace(x, self.params)

    def poles(self):
        return (-self.params.kappa,)


@dataclass(frozen=True, eq=False)
class Custom(JumpLaw):
    """User-supplied vectorised Laplace transform; must equal 1 at x = 0."""

    laplace_fn: Callable
    mean: Optional[float] = None

    def __post_init__(self):
        at0 = complex(np.asarray(self.laplace_fn(np.zeros(1, dtype=complex)))[0])
        if abs(at0 - 1.0) > 1e-12:
            raise DomainError(f"custom jump law has laplace(0) = {at0}, expected 1")

    def laplace(self, x):
        scalar = np.ndim(x) == 0
        out = np.asarray(self.laplace_fn(np.atleast_1d(np.asarray(x, dtype=complex))), dtype=complex)
        return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# spec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoissonSpec:
    """Compound Poisson intensity observed at ``lambda_s`` at time ``s``.

    ``indexed_jumps`` optionally lists the laws of the 1st, 2nd, ... jump
    after ``s`` (non-identical jumps); only the series route uses it.
    """

    theta: float
    jump: JumpLaw
    s: float = 0.0
    lambda_s: float = 0.0
    indexed_jumps: Optional[tuple] = field(default=None, compare=False)

    family = "compound_poisson"

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError("Poisson intensity theta must be positive")
        if self.lambda_s < 0:
            raise DomainError("compound Poisson intensity state must be non-negative")

    def conditioned(self, s: float, lambda_s: float) -> "CompoundPoissonSpec":
        return replace(self, s=float(s), lambda_s=float(lambda_s))

    def routes(self):
        if self.indexed_jumps is not None:
            return ("series",)
        out = ["levy", "series"]
        if _closed_available(self.jump):
            out.append("closed")
        return tuple(out)

    @property
    def atom_mass(self):
        """(location, mass) of the no-jump atom of Lambda_{s,t} as a function of t."""
        return lambda t: ((t - self.s) * self.lambda_s, math.exp(-self.theta * (t - self.s)))

    def laplace(self, t, x, cfg=None, route="auto"):
        route = "levy" if route == "auto" and self.indexed_jumps is None else route
        route = "series" if route == "auto" else route
        if route not in self.routes():
            raise DomainError(f"route {route!r} unavailable for compound Poisson spec")
        return laplace_shifted(self, t, x, route=route, cfg=cfg)


def _closed_available(jump) -> bool:
    return isinstance(jump, (Exponential, Gamma))


def _check_args(spec, t, x):
    if t < spec.s:
        raise DomainError(f"horizon t={t} precedes s={spec.s}")
    x = complex(x)
    if x.real < 0:
        raise DomainError("compound Poisson transforms need Re(x) >= 0")
    return float(t) - float(spec.s), x


# ---------------------------------------------------------------------------
# Levy route
# ---------------------------------------------------------------------------


def _levy_exponent_integral(theta, jump, tau, x, cfg):
    if x == 0 or tau == 0:
        return 0j
    for p in jump.poles():
        # pole at x w = p for some w in [0, tau]
        w = p / x
        if abs(w.imag) < 1e-12 * max(1.0, abs(w)) and 0 <= w.real <= tau:
            raise PoleError("jump-law pole on the integration path")
    f = lambda w: jump.laplace(x * w) - 1.0
    return theta * integrate_1d(f, 0.0, tau, cfg)


def laplace_levy_route(spec: CompoundPoissonSpec, t: float, x,
                       cfg: Optional[QuadratureConfig] = None) -> complex:
    """exp(-x lambda_s tau + theta int_0^tau (phi_X(x w) - 1) dw), tau = t - s."""
    tau, x = _check_args(spec, t, x)
    return cmath.exp(-x * spec.lambda_s * tau
                     + _levy_exponent_integral(spec.theta, spec.jump, tau, x, cfg))


# ---------------------------------------------------------------------------
# series route
# ---------------------------------------------------------------------------

_PANEL_DEGREE = 32
_TAIL_FLOOR = 1e-16
_N_PANELS = 8  # 8 panels x 32 intervals + 1 = 257 shared nodes


@lru_cache(maxsize=None)
def _cheb_cumulative(n: int):
    """Chebyshev-Lobatto nodes on [-1, 1] (ascending) and the matrix mapping
    nodal values to nodal values of the antiderivative vanishing at -1."""
    y = -np.cos(np.pi * np.arange(n + 1) / n)
    V = C.chebvander(y, n)
    Vinv = np.linalg.inv(V)
    integ = np.zeros((n + 2, n + 1))
    for j in range(n + 1):
        e = np.zeros(n + 1)
        e[j] = 1.0
        integ[:, j] = C.chebint(e, lbnd=-1.0)
    Q = C.chebvander(y, n + 1) @ integ @ Vinv
    return y, Q


def series_grid(tau: float):
    """Composite grid on [0, tau], panels graded geometrically towards tau."""
    y, _ = _cheb_cumulative(_PANEL_DEGREE)
    edges = [tau * (1.0 - 0.5**k) for k in range(_N_PANELS)] + [tau]
    nodes = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        pts = lo + 0.5 * (hi - lo) * (y + 1.0)
        nodes.append(pts if not nodes else pts[1:])
    return np.concatenate(nodes), edges


def _cumulative(values, edges):
    _, Q = _cheb_cumulative(_PANEL_DEGREE)
    n = _PANEL_DEGREE
    out = np.empty_like(values)
    offset = 0.0
    for p, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        seg = values[p * n: p * n + n + 1]
        cum = offset + 0.5 * (hi - lo) * (Q @ seg)
        out[p * n: p * n + n + 1] = cum
        offset = cum[-1]
    return out


@dataclass
class SeriesResult:
    """Truncated jump-time series: value, terms used and an a-priori tail bound."""

    value: complex
    n_terms: int
    tail_bound: float
    converged: bool

    def __complex__(self):
        return complex(self.value)


def _series_zero_started(theta, laws, tau, x, n_max, tol):
    """e^{-theta tau}(1 + sum_n theta^n int_{0<t_1<..<t_n<tau} prod phi_i(x(tau - t_i)))."""
    if tau == 0:
        return SeriesResult(1.0 + 0j, 0, 0.0, True)
    nodes, edges = series_grid(tau)
    lam = theta * tau
    cum = np.ones(nodes.shape, dtype=complex)
    partial = 1.0 + 0j
    n = 0
    converged = False
    phi_cache = {}
    for n in range(1, n_max + 1):
        law = laws(n)
        key = id(law)
        if key not in phi_cache:
            phi_cache[key] = np.asarray(law.laplace(x * (tau - nodes)), dtype=complex)
        h = theta * phi_cache[key] * cum
        cum = _cumulative(h, edges)
        term = cum[-1]
        partial += term
        if n >= lam and abs(term) < tol * abs(partial):
            converged = True
            # keep going while the omitted mass is still visible in double precision
            if gammainc(n + 1, lam) < _TAIL_FLOOR:
                break
    tail = float(gammainc(n + 1, lam))
    return SeriesResult(math.exp(-lam) * partial, n, tail, converged)


def laplace_series(spec: CompoundPoissonSpec, t: float, x, n_max: int = 40,
                   tol: float = 1e-8, strict: bool = True) -> SeriesResult:
    """Laplace transform of Lambda_{s,t} by the truncated jump-time series.

    The ordered n-fold integrals are built forward in time,
    ``C_k(u) = int_0^u theta phi_k(x(tau - r)) C_{k-1}(r) dr`` with
    ``C_0 = 1``, so the n-th term is ``C_n(tau)`` and each level costs one
    cumulative spectral integration over the shared 257-node grid. Laws of
    non-identical jumps come from ``spec.indexed_jumps``.

    The series counts as converged once the mode of the Poisson weights is
    passed and the latest term is below ``tol`` relative to the partial
    sum. Summation then continues, because terms are cheap, until the
    a-priori tail bound ``P(N_tau > n)`` drops below 1e-16 or ``n_max`` is
    hit. That bound holds because ``|phi_X| <= 1`` for ``Re(x) >= 0``, and
    it is returned as ``tail_bound``. With ``strict`` a
    :class:`SeriesConvergenceError` is raised if ``n_max`` is reached
    before convergence.
    """
    tau, x = _check_args(spec, t, x)
    if spec.indexed_jumps is not None:
        seq = tuple(spec.indexed_jumps)

        def laws(n):
            if n > len(seq):
                raise DomainError(f"indexed_jumps provides {len(seq)} laws, series needs jump {n}")
            return seq[n - 1]
    else:
        laws = lambda n: spec.jump
    res = _series_zero_started(spec.theta, laws, tau, x, int(n_max), float(tol))
    res.value = cmath.exp(-x * tau * spec.lambda_s) * res.value
    if strict and not res.converged:
        raise SeriesConvergenceError(
            f"series did not reach tol={tol} within n_max={n_max} terms", res)
    return res


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


_SMALL_Z = 1e-6


def _log1p_over(z: complex) -> complex:
    """log(1 + z) / z, with its Taylor expansion near 0 to avoid 0/0."""
    if abs(z) < _SMALL_Z:
        return 1.0 - z / 2.0 + z * z / 3.0
    return _clog1p_checked(z) / z


def _power_gap_over(z: complex, b: float) -> complex:
    """(1 - (1 + z)^{-b}) / (b z), expanded near 0."""
    if abs(z) < _SMALL_Z:
        return 1.0 - (b + 1.0) * z / 2.0 + (b + 1.0) * (b + 2.0) * z * z / 6.0
    return complex(-np.expm1(-b * _clog1p_checked(z))) / (b * z)


def _clog1p_checked(z: complex) -> complex:
    w = 1.0 + z
    if w.imag == 0 and w.real <= 0:
        raise PoleError("kappa + x t on the negative real axis")
    return complex(clog1p(z))


def closed_form_exp_jumps(kappa: float, theta: float, t: float, x) -> complex:
    """(e^{-t} (1 + x t / kappa)^{kappa / x})^theta for exponential(kappa) jumps.

    Evaluated as ``exp(theta (kappa/x log(1 + x t/kappa) - t))`` so the
    power follows the continuous branch; x = 0 returns the limit 1.
    """
    x = complex(x)
    if x == 0 or t == 0:
        return 1.0 + 0j
    # kappa/x log(1 + z) = t log(1 + z)/z with z = x t / kappa
    return cmath.exp(theta * t * (_log1p_over(x * t / kappa) - 1.0))


def closed_form_gamma_jumps(p: GammaLawParams, theta: float, t: float, x,
                            as_published: bool = False) -> complex:
    """Closed form for Gamma(kappa, alpha) jump sizes, alpha > 1.

    Default: ``exp(-theta (t - kappa/(x(alpha-1)) (1 - phi_gamma(x t; kappa, alpha-1))))``,
    which tends to 1 as x -> 0. ``as_published=True`` drops the ``1 - .``;
    that uncorrected version diverges at x -> 0 and exists only to
    document the discrepancy.
    """
    if not p.alpha > 1:
        raise DomainError("gamma-jump closed form needs alpha > 1 (alpha = 1 is the exponential case)")
    x = complex(x)
    k, a = p.kappa, p.alpha
    if as_published:
        if x == 0:
            return complex(math.inf)
        phi = gamma_laplace(x * t, GammaLawParams(k, a - 1.0))
        return cmath.exp(-theta * (t - k / (x * (a - 1.0)) * phi))
    if x == 0 or t == 0:
        return 1.0 + 0j
    return cmath.exp(-theta * t * (1.0 - _power_gap_over(x * t / k, a - 1.0)))


def _closed_zero_started(jump, theta, tau, x):
    if isinstance(jump, Exponential) or (isinstance(jump, Gamma) and jump.params.alpha == 1.0):
        return closed_form_exp_jumps(jump.gamma_params.kappa, theta, tau, x)
    if isinstance(jump, Gamma):
        if jump.params.alpha > 1.0:
            return closed_form_gamma_jumps(jump.params, theta, tau, x)
        raise DomainError("no closed form for gamma jumps with alpha < 1")
    raise DomainError("closed form needs exponential or gamma jumps")


def laplace_shifted(spec: CompoundPoissonSpec, t: float, x, route: str = "levy",
                    cfg: Optional[QuadratureConfig] = None, **series_kw) -> complex:
    """e^{-x (t-s) lambda_s} times the 0-started transform over t - s."""
    tau, x = _check_args(spec, t, x)
    zero = replace(spec, s=0.0, lambda_s=0.0)
    if route == "levy":
        base = laplace_levy_route(zero, tau, x, cfg)
    elif route == "series":
        base = laplace_series(zero, tau, x, **series_kw).value
    elif route == "closed":
        base = _closed_zero_started(spec.jump, spec.theta, tau, x)
    else:
        raise DomainError(f"unknown compound Poisson route {route!r}")
    return cmath.exp(-x * tau * spec.lambda_s) * base
