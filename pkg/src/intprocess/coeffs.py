"""Deterministic coefficient functions and the kernels G, I, K.

A :class:`CoefficientFn` is an immutable, vectorised function of time that
knows its own breakpoints and, for every variant except :class:`Function`,
its exact antiderivative. The kernels of the linear SDE

    d lambda_t = (alpha(t) - beta(t) lambda_t) dt + sigma(t) dX_t

are

    G(s, t) = exp(-int_s^t beta),
    I(s, t) = int_s^t alpha(u) G(u, s) du,
    K(s, t) = sigma(s) int_s^t G(s, u) du.

Note that K freezes sigma at its first argument; it is only ever used as
K(u, t) under an outer integral over u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError
from .numerics import DEFAULT_QUAD, QuadratureConfig, integrate_1d


class CoefficientFn:
    """Base class. Subclasses implement ``_eval`` and ``antiderivative``."""

    breakpoints = ()
    has_exact_integral = True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        self._check_domain(t)
        return self._eval(t)

    def _check_domain(self, t):
        pass

    def _eval(self, t):
        raise NotImplementedError

    def antiderivative(self, t):
        raise NotImplementedError

    def integral(self, a, b, cfg: Optional[QuadratureConfig] = None):
        """int_a^b f(u) du, broadcasting over ``a`` and ``b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.has_exact_integral:
            return self.antiderivative(b) - self.antiderivative(a)
        return _quad_integral(self, a, b, cfg)

    @property
    def is_zero(self) -> bool:
        return False

    def breakpoints_in(self, a, b):
        return [p for p in self.breakpoints if a < p < b]


def _quad_integral(fn, a, b, cfg):
    cfg = cfg or DEFAULT_QUAD
    a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)
    for idx in np.ndindex(a.shape):
        lo, hi = float(a[idx]), float(b[idx])
        out[idx] = integrate_1d(fn, lo, hi, cfg, fn.breakpoints_in(min(lo, hi), max(lo, hi))).real
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Constant(CoefficientFn):
    value: float

    def _eval(self, t):
        return np.full_like(t, self.value, dtype=float)

    def antiderivative(self, t):
        return self.value * np.asarray(t, dtype=float)

    @property
    def is_zero(self):
        return self.value == 0.0


def _check_knots(knots):
    knots = tuple(float(k) for k in knots)
    if any(b <= a for a, b in zip(knots[:-1], knots[1:])):
        raise DomainError("breakpoints must be strictly increasing")
    return knots


@dataclass(frozen=True)
class PiecewiseConstant(CoefficientFn):
    """``values[i]`` on ``[breakpoints[i-1], breakpoints[i])``, extended flat
    beyond the first and last breakpoint."""

    breakpoints: tuple = field()
    values: tuple = field()

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", _check_knots(self.breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.breakpoints) + 1:
            raise DomainError("PiecewiseConstant needs len(values) == len(breakpoints) + 1")

    def _eval(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right")
        return np.asarray(self.values)[idx]

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        knots = np.asarray(self.breakpoints)
        vals = np.asarray(self.values)
        if knots.size == 0:
            return vals[0] * t
        # cumulative integral from the first knot
        cum = np.concatenate([[0.0], np.cumsum(vals[1:-1] * np.diff(knots))])
        idx = np.searchsorted(knots, t, side="right")
        base = np.where(idx == 0, 0.0, cum[np.maximum(idx - 1, 0)])
        start = knots[np.maximum(idx - 1, 0)]
        return np.where(idx == 0, vals[0] * (t - knots[0]), base + vals[idx] * (t - start))

    @property
    def is_zero(self):
        return all(v == 0.0 for v in self.values)


@dataclass(frozen=True)
class Polynomial(CoefficientFn):
    """Piecewise polynomial in absolute time.

    ``coefficients[i]`` holds increasing-power coefficients for piece ``i``
    (same piece layout as :class:`PiecewiseConstant`).
    """

    breakpoints: tuple = field()
    coefficients: tuple = field()

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", _check_knots(self.breakpoints))
        coefs = tuple(tuple(float(c) for c in piece) for piece in self.coefficients)
        object.__setattr__(self, "coefficients", coefs)
        if len(coefs) != len(self.breakpoints) + 1 or any(len(c) == 0 for c in coefs):
            raise DomainError("Polynomial needs len(coefficients) == len(breakpoints) + 1")

    def _eval(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right")
        out = np.empty_like(t)
        for i, c in enumerate(self.coefficients):
            m = idx == i
            if np.any(m):
                out[m] = P.polyval(t[m], c)
        return out

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        knots = np.asarray(self.breakpoints)
        ints = [P.polyint(c) for c in self.coefficients]
        if knots.size == 0:
            return P.polyval(t, ints[0])
        offsets = [0.0]
        for i in range(1, len(knots)):
            offsets.append(offsets[-1] + P.polyval(knots[i], ints[i]) - P.polyval(knots[i - 1], ints[i]))
        idx = np.searchsorted(knots, t, side="right")
        out = np.empty_like(t)
        for i, c in enumerate(ints):
            m = idx == i
            if not np.any(m):
                continue
            if i == 0:
                out[m] = P.polyval(t[m], c) - P.polyval(knots[0], c)
            else:
                out[m] = offsets[i - 1] + P.polyval(t[m], c) - P.polyval(knots[i - 1], c)
        return out

    @property
    def is_zero(self):
        return all(all(v == 0.0 for v in c) for c in self.coefficients)


@dataclass(frozen=True)
class Rational1OverTminus(CoefficientFn):
    """scale / (T - t); only defined for t < T."""

    T: float
    scale: float = 1.0

    def _check_domain(self, t):
        if np.any(t >= self.T):
            raise DomainError(f"1/(T-t) coefficient evaluated at t >= T={self.T}")

    def _eval(self, t):
        return self.scale / (self.T - t)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.T):
            raise DomainError(f"1/(T-t) coefficient integrated beyond T={self.T}")
        with np.errstate(divide="ignore"):
            return -self.scale * np.log(self.T - t)


@dataclass(frozen=True)
class LinearDecay(CoefficientFn):
    """gamma * (T - t)."""

    gamma: float
    T: float

    def _eval(self, t):
        return self.gamma * (self.T - t)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        return self.gamma * (self.T * t - 0.5 * t * t)

    @property
    def is_zero(self):
        return self.gamma == 0.0


@dataclass(frozen=True)
class SampledGrid(CoefficientFn):
    """Linear interpolation on a time grid; extrapolation raises."""

    times: tuple
    values: tuple

    def __post_init__(self):
        times = _check_knots(self.times)
        if len(times) < 2:
            raise DomainError("SampledGrid needs at least two nodes")
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(times):
            raise DomainError("SampledGrid times and values differ in length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", vals)

    @property
    def breakpoints(self):
        return self.times

    def _check_domain(self, t):
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise DomainError(
                f"SampledGrid evaluated outside [{self.times[0]}, {self.times[-1]}]"
            )

    def _eval(self, t):
        return np.interp(t, self.times, self.values)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        self._check_domain(t)
        x = np.asarray(self.times)
        y = np.asarray(self.values)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))])
        idx = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
        yt = np.interp(t, x, y)
        return cum[idx] + 0.5 * (y[idx] + yt) * (t - x[idx])

    @property
    def is_zero(self):
        return all(v == 0.0 for v in self.values)


@dataclass(frozen=True, eq=False)
class Function(CoefficientFn):
    """Arbitrary vectorised callable, optionally with a known antiderivative."""

    fn: Callable
    antiderivative_fn: Optional[Callable] = None
    breakpoints: tuple = ()

    @property
    def has_exact_integral(self):
        return self.antiderivative_fn is not None

    def _eval(self, t):
        return np.asarray(self.fn(t), dtype=float) * np.ones_like(t)

    def antiderivative(self, t):
        if self.antiderivative_fn is None:
            raise NotImplementedError("no antiderivative supplied")
        return np.asarray(self.antiderivative_fn(np.asarray(t, dtype=float)), dtype=float)


ZERO = Constant(0.0)


@dataclass(frozen=True)
class GaussianCoeffs:
    """(alpha, beta, sigma) of the linear SDE."""

    alpha: CoefficientFn = ZERO
    beta: CoefficientFn = ZERO
    sigma: CoefficientFn = ZERO

    @property
    def breakpoints(self):
        return tuple(sorted(set(self.alpha.breakpoints) | set(self.beta.breakpoints)
                            | set(self.sigma.breakpoints)))

    def breakpoints_in(self, a, b):
        return [p for p in self.breakpoints if a < p < b]


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


def big_g(c: GaussianCoeffs, s, t, cfg: Optional[QuadratureConfig] = None):
    """G(s, t) = exp(-int_s^t beta); G(s, t) = 1 / G(t, s) for s > t."""
    if c.beta.is_zero:
        return np.ones(np.broadcast(np.asarray(s), np.asarray(t)).shape) if np.ndim(s) or np.ndim(t) else 1.0
    return np.exp(-c.beta.integral(s, t, cfg))


def _exact_g_integral(beta, s, t):
    """int_s^t G(s, u) du in closed form, or None when unavailable."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if beta.is_zero:
        return t - s
    if isinstance(beta, Constant):
        b = beta.value
        return -np.expm1(-b * (t - s)) / b
    if isinstance(beta, Rational1OverTminus):
        c = beta.scale
        T = beta.T
        ratio = (T - t) / (T - s)
        if c == -1.0:
            return (T - s) * -np.log(ratio)
        return (T - s) / (c + 1.0) * (1.0 - ratio ** (c + 1.0))
    return None


def g_integral(c: GaussianCoeffs, s, t, cfg: Optional[QuadratureConfig] = None,
               method: str = "auto"):
    """int_s^t G(s, u) du, broadcasting over ``s`` and ``t``.

    ``method="quad"`` forces quadrature even when a closed form exists.
    """
    if method == "auto":
        exact = _exact_g_integral(c.beta, s, t)
        if exact is not None:
            return exact if np.ndim(exact) else float(exact)
    cfg = cfg or DEFAULT_QUAD
    s_arr, t_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if not c.beta.breakpoints and s_arr.ndim:
        # one vector-valued pass for all (s, t) pairs
        flat_s, flat_t = s_arr.ravel(), t_arr.ravel()
        width = flat_t - flat_s

        def integrand(r):
            u = flat_s[None, :] + width[None, :] * r[:, None]
            return big_g(c, flat_s[None, :], u, cfg) * width[None, :]

        out = integrate_1d(integrand, 0.0, 1.0, cfg).real
        return out.reshape(s_arr.shape)
    out = np.empty(s_arr.shape)
    for idx in np.ndindex(s_arr.shape):
        lo, hi = float(s_arr[idx]), float(t_arr[idx])
        out[idx] = integrate_1d(lambda u: big_g(c, lo, u, cfg), lo, hi, cfg,
                                c.beta.breakpoints_in(min(lo, hi), max(lo, hi))).real
    return out if out.ndim else float(out)


def big_i(c: GaussianCoeffs, s, t, cfg: Optional[QuadratureConfig] = None,
          method: str = "auto"):
    """I(s, t) = int_s^t alpha(u) G(u, s) du (scalar ``s``; ``t`` may be an array)."""
    s = float(s)
    if c.alpha.is_zero:
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0
    if method == "auto" and isinstance(c.alpha, Constant) and (
            c.beta.is_zero or isinstance(c.beta, Constant)):
        a = c.alpha.value
        b = 0.0 if c.beta.is_zero else c.beta.value
        tau = np.asarray(t, dtype=float) - s
        out = a * tau if b == 0.0 else a * np.expm1(b * tau) / b
        return out if np.ndim(out) else float(out)
    cfg = cfg or DEFAULT_QUAD
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(ts.shape)
    for j, tj in enumerate(ts.ravel()):
        f = lambda u: c.alpha(u) * big_g(c, u, s, cfg)
        out.ravel()[j] = integrate_1d(f, s, tj, cfg,
                                      c.breakpoints_in(min(s, tj), max(s, tj))).real
    return out if np.ndim(t) else float(out[0])


def big_k(c: GaussianCoeffs, s, t, cfg: Optional[QuadratureConfig] = None,
          method: str = "auto"):
    """K(s, t) = sigma(s) * int_s^t G(s, u) du, with sigma frozen at ``s``."""
    if c.sigma.is_zero:
        return np.zeros(np.broadcast(np.asarray(s), np.asarray(t)).shape) if np.ndim(s) or np.ndim(t) else 0.0
    out = c.sigma(s) * g_integral(c, s, t, cfg, method)
    return out if np.ndim(out) else float(out)
