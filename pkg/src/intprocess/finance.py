"""Bond prices, survival curves, distribution recovery and curve calibration."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .coeffs import Constant, GaussianCoeffs
from .cpoisson import CompoundPoissonSpec, Exponential, closed_form_exp_jumps
from .errors import DomainError, NumericalError, QuadratureError
from .gaussian import GaussianProcessSpec, closed_form, law_integral
from .levy import BdlpHwSpec, GammaProcess, gamma_ou_closed_form
from .numerics import GammaLawParams, QuadratureConfig, integrate_1d

# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


def _ascending_positive(xs, what):
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise DomainError(f"{what} must be a non-empty 1-d sequence")
    if np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
        raise DomainError(f"{what} must be positive and strictly ascending")
    return xs


@dataclass(frozen=True)
class DiscountCurve:
    maturities: np.ndarray
    discounts: np.ndarray

    def __post_init__(self):
        m = _ascending_positive(self.maturities, "maturities")
        d = np.asarray(self.discounts, dtype=float)
        if d.shape != m.shape:
            raise DomainError("maturities and discounts differ in length")
        if np.any(d <= 0) or not np.all(np.isfinite(d)):
            raise DomainError("discount factors must be finite and positive")
        object.__setattr__(self, "maturities", m)
        object.__setattr__(self, "discounts", d)

    @property
    def has_negative_rates(self) -> bool:
        """Discounts above 1 imply negative yields; allowed, never clamped."""
        return bool(np.any(self.discounts > 1.0))


@dataclass(frozen=True)
class SurvivalCurve:
    tenors: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        t = _ascending_positive(self.tenors, "tenors")
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != t.shape:
            raise DomainError("tenors and probabilities differ in length")
        object.__setattr__(self, "tenors", t)
        object.__setattr__(self, "probabilities", p)


def _fmt(v: float) -> str:
    return repr(float(v))


def read_two_column_csv(path) -> tuple:
    """Read (x, y) rows; a non-numeric first row is taken as a header."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            row = [c.strip() for c in row if c.strip()]
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise DomainError(f"{path}: row {i + 1} does not have two columns")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                if xs or i > 0:
                    raise DomainError(f"{path}: non-numeric row {i + 1}") from None
                continue
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys)


def read_discount_curve(path) -> DiscountCurve:
    return DiscountCurve(*read_two_column_csv(path))


def write_csv(path, header: Sequence[str], rows, comments: Sequence[str] = ()) -> None:
    """CSV with shortest round-trip float formatting and optional ``#`` lines."""
    with open(path, "w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_discount_curve(path, curve: DiscountCurve) -> None:
    write_csv(path, ("maturity", "discount"), zip(curve.maturities, curve.discounts))


def write_survival_curve(path, curve: SurvivalCurve, comments=()) -> None:
    write_csv(path, ("tenor", "probability"), zip(curve.tenors, curve.probabilities), comments)


# ---------------------------------------------------------------------------
# pricing
# ---------------------------------------------------------------------------


def bond_price(spec, T: float, cfg: Optional[QuadratureConfig] = None,
               route: str = "auto") -> float:
    """Zero-coupon bond with short rate lambda: E[exp(-Lambda_{s,T})]."""
    if T == spec.s:
        return 1.0
    return float(np.real(spec.laplace(T, 1.0, cfg, route)))


def survival_curve(spec, t: float, tenors, lambda_t: float,
                   cfg: Optional[QuadratureConfig] = None, route: str = "auto") -> SurvivalCurve:
    """Q(tau > t + delta | tau > t) for each tenor delta, given lambda_t."""
    tenors = _ascending_positive(tenors, "tenors")
    cond = spec.conditioned(t, lambda_t)
    probs = [float(np.real(cond.laplace(t + d, 1.0, cfg, route))) for d in tenors]
    return SurvivalCurve(tenors, np.array(probs))


# ---------------------------------------------------------------------------
# Fourier inversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InversionResult:
    grid: np.ndarray
    cdf: np.ndarray
    raw: np.ndarray
    max_adjustment: float
    u_max: float
    truncation_bound: float
    atom: Optional[tuple] = None
    route: str = "custom"

    @property
    def raw_range(self) -> tuple:
        return float(self.raw.min()), float(self.raw.max())


INVERSION_QUAD = QuadratureConfig(abs_tol=1e-9, rel_tol=1e-9, max_subdivisions=100000)


def _vectorized(transform: Callable) -> Callable:
    probe = np.array([0.5 + 0j, 1.0 + 0j])
    try:
        out = np.asarray(transform(probe))
        if out.shape == probe.shape:
            return lambda z: np.asarray(transform(z), dtype=complex)
    except (TypeError, ValueError):
        pass
    return lambda z: np.array([complex(transform(complex(v))) for v in np.ravel(z)],
                              dtype=complex).reshape(np.shape(z))


def invert_distribution(transform: Callable, grid, atom: Optional[tuple] = None,
                        u_max: Optional[float] = None, trunc_tol: float = 1e-12,
                        u_cap: float = 1.0e4, cfg: QuadratureConfig = INVERSION_QUAD) -> InversionResult:
    """CDF of Lambda on ``grid`` from its Laplace transform ``transform``.

    Uses ``F(y) = 1/2 - (1/pi) int_0^U Im(exp(-i u y) phi(-i u)) / u du``.
    The cutoff ``U`` is the first power of two with ``|phi(-i u)| <= trunc_tol``
    at ``u`` and ``1.5 u``, capped at ``u_cap``; the modulus there is
    returned as ``truncation_bound``. An ``atom = (location, mass)`` is
    removed before inversion and added back as an exact step. The result
    is clipped to [0, 1] and made non-decreasing by a running maximum.
    """
    y = np.asarray(grid, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise DomainError("grid must be a non-empty 1-d array")
    phi = _vectorized(transform)
    loc, mass = (0.0, 0.0) if atom is None else (float(atom[0]), float(atom[1]))
    if not 0.0 <= mass <= 1.0:
        raise DomainError("atom mass must lie in [0, 1]")
    step = (y >= loc).astype(float)
    if mass > 1.0 - 1e-15:
        return InversionResult(y, step, step.copy(), 0.0, 0.0, 0.0, atom)

    def phi_char(u):
        u = np.asarray(u, dtype=float)
        val = phi(-1j * u)
        if mass:
            val = (val - mass * np.exp(1j * u * loc)) / (1.0 - mass)
        return val

    if u_max is None:
        u = 1.0
        while u < u_cap and np.max(np.abs(phi_char(np.array([u, 1.5 * u])))) > trunc_tol:
            u *= 2.0
        u_max = min(u, u_cap)
    bound = float(np.max(np.abs(phi_char(np.array([u_max])))))

    def integrand(u):
        vals = phi_char(u)
        return np.imag(np.exp(-1j * np.outer(u, y)) * vals[:, None]) / u[:, None]

    res = integrate_1d(integrand, 0.0, u_max, cfg, full_output=True)
    if not res.converged:
        raise QuadratureError("inversion integral did not converge", res.value, res.error)
    cont = 0.5 - np.real(res.value) / math.pi
    raw = mass * step + (1.0 - mass) * cont
    cdf = np.maximum.accumulate(np.clip(raw, 0.0, 1.0))
    return InversionResult(y, cdf, raw, float(np.max(np.abs(cdf - raw))), float(u_max), bound, atom)


def distribution(spec, t: float, grid, cfg: Optional[QuadratureConfig] = None,
                 route: str = "auto", **kw) -> InversionResult:
    """CDF of Lambda_{s,t} for a spec, removing any known atom first.

    With ``route="auto"`` compound Poisson specs use their closed form when
    one exists, since the inversion evaluates the transform many times.
    """
    if isinstance(spec, GaussianProcessSpec):
        route = "quad" if route == "auto" else route
        law = spec.law_integral(t, cfg, route)
        if law.variance == 0:
            res = invert_distribution(lambda x: np.exp(-law.mean * np.asarray(x)), grid,
                                      atom=(law.mean, 1.0))
        else:
            res = invert_distribution(
                lambda x: np.exp(-law.mean * np.asarray(x) + 0.5 * np.asarray(x) ** 2 * law.variance),
                grid, **kw)
        return replace(res, route=route)
    atom = None
    if isinstance(spec, CompoundPoissonSpec):
        atom = spec.atom_mass(t)
        if route == "auto":
            route = "closed" if "closed" in spec.routes() else spec.routes()[0]
        elif route == "quad":
            route = "levy"
    elif route == "auto":
        route = spec.routes()[0]
    res = invert_distribution(lambda x: spec.laplace(t, x, cfg, route), grid, atom=atom, **kw)
    return replace(res, route=route)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationFamily:
    """A parametric short-rate family priced in closed form for fast fitting.

    ``price(params, T)`` returns B(0, T); ``spec(params)`` builds the
    corresponding process spec so results can be re-priced by other routes.
    """

    name: str
    param_names: tuple
    lower: tuple
    upper: tuple
    price: Callable
    spec: Callable


def _ou_price(p, T):
    beta, sigma, lam0 = p
    law = closed_form("integrated_ou", {"beta": beta, "sigma": sigma, "lambda_s": lam0}, 0.0, T)
    return math.exp(-law.mean + 0.5 * law.variance)


def _ou_spec(p):
    beta, sigma, lam0 = p
    return GaussianProcessSpec(GaussianCoeffs(beta=Constant(beta), sigma=Constant(sigma)), 0.0, lam0)


def _cp_price(p, T):
    theta, kappa, lam0 = p
    return math.exp(-lam0 * T) * closed_form_exp_jumps(kappa, theta, T, 1.0).real


def _cp_spec(p):
    theta, kappa, lam0 = p
    return CompoundPoissonSpec(theta, Exponential(kappa), 0.0, lam0)


def _const_price(p, T):
    return math.exp(-p[0] * T)


def _const_spec(p):
    return GaussianProcessSpec(GaussianCoeffs(), 0.0, p[0])


def _gou_price(p, T):
    kappa, alpha, beta, lam0 = p
    return math.exp(gamma_ou_closed_form(GammaLawParams(kappa, alpha), beta, lam0, 0.0, T, 1j).real)


def _gou_spec(p):
    kappa, alpha, beta, lam0 = p
    return BdlpHwSpec(GaussianCoeffs(beta=Constant(beta), sigma=Constant(1.0)),
                      GammaProcess(GammaLawParams(kappa, alpha)), 0.0, lam0)


FAMILIES: Dict[str, CalibrationFamily] = {
    "ou": CalibrationFamily("ou", ("beta", "sigma", "lambda0"),
                            (1e-3, 0.0, -0.5), (5.0, 0.5, 0.5), _ou_price, _ou_spec),
    "cp_exponential": CalibrationFamily("cp_exponential", ("theta", "kappa", "lambda0"),
                                        (1e-3, 1.0, 0.0), (10.0, 1e4, 0.5), _cp_price, _cp_spec),
    "constant": CalibrationFamily("constant", ("lambda0",), (-0.5,), (0.5,), _const_price, _const_spec),
    "gamma_ou": CalibrationFamily("gamma_ou", ("kappa", "alpha", "beta", "lambda0"),
                                  (1.0, 1e-4, 1e-3, 0.0), (1e4, 10.0, 5.0, 0.5), _gou_price, _gou_spec),
}


@dataclass(frozen=True)
class CalibrationResult:
    family: str
    params: Dict[str, float]
    residual_norm: float
    errors: np.ndarray
    converged: bool
    n_starts: int
    message: str = ""
    fixed: Dict[str, float] = field(default_factory=dict)

    def spec(self):
        fam = FAMILIES[self.family]
        return fam.spec(tuple(self.params[n] for n in fam.param_names))


def generate_curve(family: str, params: Sequence[float], maturities) -> DiscountCurve:
    fam = FAMILIES[family]
    m = _ascending_positive(maturities, "maturities")
    return DiscountCurve(m, np.array([fam.price(tuple(params), T) for T in m]))


def calibrate(family, curve: DiscountCurve, n_starts: int = 8, seed: int = 0,
              lower: Optional[Sequence[float]] = None, upper: Optional[Sequence[float]] = None,
              fixed: Optional[Dict[str, float]] = None) -> CalibrationResult:
    """Least-squares fit of B(0, T_i) over the free parameters of ``family``.

    Multi-start: ``n_starts`` seeded uniform draws inside the bounds; the
    start with the smallest residual wins. ``fixed`` pins parameters by name.
    """
    fam = FAMILIES[family] if isinstance(family, str) else family
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(fam.param_names)
    if unknown:
        raise DomainError(f"unknown parameters for {fam.name}: {sorted(unknown)}")
    free = [i for i, n in enumerate(fam.param_names) if n not in fixed]
    lo = np.array(lower if lower is not None else [fam.lower[i] for i in free], dtype=float)
    hi = np.array(upper if upper is not None else [fam.upper[i] for i in free], dtype=float)
    if lo.shape != (len(free),) or hi.shape != (len(free),):
        raise DomainError("bounds must match the number of free parameters")
    if np.any(lo >= hi) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise DomainError("infeasible or unbounded parameter bounds")
    if curve.maturities.size < len(free):
        raise DomainError("fewer observations than free parameters")

    def full(theta):
        p = [0.0] * len(fam.param_names)
        for i, n in enumerate(fam.param_names):
            p[i] = fixed[n] if n in fixed else 0.0
        for j, i in enumerate(free):
            p[i] = theta[j]
        return tuple(p)

    def resid(theta):
        p = full(theta)
        try:
            return np.array([fam.price(p, T) for T in curve.maturities]) - curve.discounts
        except (DomainError, NumericalError, OverflowError, ValueError):
            return np.full(curve.maturities.size, 1e3)

    rng = np.random.default_rng(seed)
    starts = lo + (hi - lo) * rng.uniform(size=(n_starts, len(free)))
    best = None
    for x0 in starts:
        sol = least_squares(resid, x0, bounds=(lo, hi), method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000,
                            x_scale="jac")
        norm = float(np.linalg.norm(sol.fun))
        if best is None or norm < best[0]:
            best = (norm, sol)
    norm, sol = best
    p = full(sol.x)
    return CalibrationResult(fam.name, dict(zip(fam.param_names, map(float, p))), norm,
                             np.asarray(sol.fun, dtype=float), bool(sol.success), n_starts,
                             str(sol.message), fixed)
