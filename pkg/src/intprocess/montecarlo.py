"""Monte Carlo samplers for integrated processes.

Paths are processed in chunks. Every draw is addressed by its path index
through :class:`CounterRNG`, so the output is bit-identical for a given
seed regardless of the chunk size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coeffs import big_g, big_i, big_k, g_integral
from .cpoisson import CompoundPoissonSpec, Exponential, Gamma
from .errors import DomainError
from .gaussian import GaussianProcessSpec, integral_mean, integral_variance, law_lambda
from .numerics import DEFAULT_QUAD, GammaLawParams, QuadratureConfig, integrate_1d
from .rng import CounterRNG

SCHEMES = ("exact_gaussian_step", "euler", "exact_jumps")

_TAG_NORMAL = 1
_TAG_ARRIVAL = 2
_TAG_JUMP = 100       # gamma jump sizes use tags 100..165
_TAG_GAMMA_INC = 200  # gamma-OU increments use tags 200..265
_CHUNK = 1 << 16


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 100_000
    n_steps: int = 1
    seed: int = 0
    scheme: str = "exact_gaussian_step"
    chunk_size: int = _CHUNK

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1 or self.chunk_size < 1:
            raise DomainError("Monte Carlo counts must be positive")
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n: int

    def within(self, reference: float, k: float = 3.0) -> bool:
        return abs(self.value - reference) <= k * self.stderr


def _chunks(n: int, size: int):
    for lo in range(0, n, size):
        yield np.arange(lo, min(n, lo + size), dtype=np.uint64)


def estimate_laplace(samples, x: float) -> McEstimate:
    """Sample mean of ``exp(-x * Lambda)`` and its standard error."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise DomainError("estimate_laplace needs at least one sample")
    if x < 0:
        raise DomainError("Laplace argument must be non-negative")
    if x == 0:
        return McEstimate(1.0, 0.0, samples.size)
    w = np.exp(-x * samples)
    n = w.size
    se = float(np.std(w, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(float(np.mean(w)), se, n)


# ---------------------------------------------------------------------------
# Gaussian family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _GaussStep:
    g: float        # G(t_j, t_{j+1})
    m_lam: float    # lambda mean at t_{j+1} when lambda_j = 0
    m_int: float    # step integral mean when lambda_j = 0
    g_int: float    # int_{t_j}^{t_{j+1}} G(t_j, u) du
    chol: np.ndarray


def _gauss_steps(spec: GaussianProcessSpec, grid, cfg: QuadratureConfig):
    c = spec.coeffs
    out = []
    for a, b in zip(grid[:-1], grid[1:]):
        zero = GaussianProcessSpec(c, a, 0.0)
        v = law_lambda(zero, b, cfg).variance
        V = integral_variance(zero, b, cfg)
        if c.sigma.is_zero:
            cov = 0.0
        else:
            inner = cfg.tightened()
            cov = float(np.real(integrate_1d(
                lambda u: c.sigma(u) * big_g(c, u, b, inner) * big_k(c, u, b, inner),
                a, b, cfg, c.breakpoints_in(a, b))))
        mat = np.array([[v, cov], [cov, V]])
        # clip round-off so a rank-deficient step stays factorizable
        w, q = np.linalg.eigh(mat)
        chol = q * np.sqrt(np.clip(w, 0.0, None))
        out.append(_GaussStep(float(big_g(c, a, b, cfg)),
                              float(big_g(c, a, b, cfg) * big_i(c, a, b, cfg)),
                              integral_mean(zero, b, cfg),
                              float(g_integral(c, a, b, cfg)), chol))
    return out


def sample_gaussian_integral(spec: GaussianProcessSpec, t: float, mc: McConfig,
                             cfg: Optional[QuadratureConfig] = None) -> np.ndarray:
    """Samples of Lambda_{s,t} for a Gaussian Hull-White spec."""
    s = float(spec.s)
    if t < s:
        raise DomainError("horizon precedes conditioning time")
    cfg = cfg or DEFAULT_QUAD
    grid = np.linspace(s, t, mc.n_steps + 1)
    rng = CounterRNG(mc.seed)
    out = np.empty(mc.n_paths)
    c = spec.coeffs
    if mc.scheme == "exact_gaussian_step":
        steps = _gauss_steps(spec, grid, cfg)
    elif mc.scheme == "euler":
        dt = np.diff(grid)
        alpha, beta, sigma = (f(grid[:-1]) for f in (c.alpha, c.beta, c.sigma))
    else:
        raise DomainError(f"scheme {mc.scheme!r} does not apply to Gaussian specs")
    for paths in _chunks(mc.n_paths, mc.chunk_size):
        lam = np.full(paths.size, float(spec.lambda_s))
        acc = np.zeros(paths.size)
        for j in range(mc.n_steps):
            z = rng.normal_pair(j, _TAG_NORMAL, paths)
            if mc.scheme == "exact_gaussian_step":
                st = steps[j]
                noise = z @ st.chol.T
                acc += st.m_int + st.g_int * lam + noise[:, 1]
                lam = st.g * lam + st.m_lam + noise[:, 0]
            else:
                nxt = lam + (alpha[j] - beta[j] * lam) * dt[j] + sigma[j] * math.sqrt(dt[j]) * z[:, 0]
                acc += 0.5 * (lam + nxt) * dt[j]
                lam = nxt
        out[paths.astype(np.intp)] = acc
    return out


# ---------------------------------------------------------------------------
# compound Poisson
# ---------------------------------------------------------------------------


def _jump_sizes(law, rng, k, paths):
    if isinstance(law, Exponential):
        return rng.exponential(k, _TAG_JUMP, paths) / law.kappa
    if isinstance(law, Gamma):
        p = law.params
        return rng.gamma(p.alpha, k, _TAG_JUMP, paths) / p.kappa
    raise DomainError(f"no sampler for jump law {type(law).__name__}")


def sample_cp_integral(spec: CompoundPoissonSpec, t: float, mc: McConfig) -> np.ndarray:
    """Exact samples of Lambda_{s,t}: the path is piecewise constant between jumps."""
    if mc.scheme != "exact_jumps":
        raise DomainError("compound Poisson sampling uses scheme 'exact_jumps'")
    s = float(spec.s)
    tau = float(t) - s
    if tau < 0:
        raise DomainError("horizon precedes conditioning time")
    laws = spec.indexed_jumps
    rng = CounterRNG(mc.seed)
    out = np.empty(mc.n_paths)
    for paths in _chunks(mc.n_paths, mc.chunk_size):
        level = np.full(paths.size, float(spec.lambda_s))
        clock = np.zeros(paths.size)
        acc = np.zeros(paths.size)
        live = np.arange(paths.size)
        k = 0
        while live.size:
            arrival = clock[live] + rng.exponential(k, _TAG_ARRIVAL, paths[live]) / spec.theta
            end = np.minimum(arrival, tau)
            acc[live] += level[live] * (end - clock[live])
            jumped = arrival < tau
            live = live[jumped]
            if not live.size:
                break
            if laws is not None and k >= len(laws):
                raise DomainError(f"indexed_jumps provides {len(laws)} laws, path needs jump {k + 1}")
            law = spec.jump if laws is None else laws[k]
            clock[live] = arrival[jumped]
            level[live] += _jump_sizes(law, rng, k, paths[live])
            k += 1
        out[paths.astype(np.intp)] = acc
    return out


# ---------------------------------------------------------------------------
# gamma-OU
# ---------------------------------------------------------------------------


def sample_gamma_ou_integral(p: GammaLawParams, beta: float, lambda_s: float, s: float,
                             t: float, mc: McConfig) -> np.ndarray:
    """Samples of Lambda_{s,t} for d lambda = -beta lambda dt + d gamma_t.

    Gamma increments over each of ``n_steps`` uniform cells are exact; each
    increment is weighted by the cell average of ``(1 - exp(-beta (t-u))) / beta``.
    """
    if beta <= 0:
        raise DomainError("gamma-OU needs beta > 0")
    tau = float(t) - float(s)
    if tau < 0:
        raise DomainError("horizon precedes conditioning time")
    n = mc.n_steps
    dt = tau / n
    edges = np.linspace(0.0, tau, n + 1)
    # (1/dt) int_cell (1 - e^{-beta (tau-u)}) / beta du
    rem = tau - edges
    weights = (dt - (np.exp(-beta * rem[1:]) - np.exp(-beta * rem[:-1])) / beta) / (beta * dt)
    base = lambda_s * -math.expm1(-beta * tau) / beta
    rng = CounterRNG(mc.seed)
    shape = p.alpha * dt
    out = np.empty(mc.n_paths)
    for paths in _chunks(mc.n_paths, mc.chunk_size):
        acc = np.full(paths.size, base)
        for j in range(n):
            acc += weights[j] * rng.gamma(shape, j, _TAG_GAMMA_INC, paths) / p.kappa
        out[paths.astype(np.intp)] = acc
    return out


def supports(spec) -> bool:
    """Whether :func:`sample_integral` has a sampler for ``spec``."""
    from .levy import BdlpHwSpec

    if isinstance(spec, GaussianProcessSpec):
        return True
    if isinstance(spec, CompoundPoissonSpec):
        laws = spec.indexed_jumps or (spec.jump,)
        return all(isinstance(j, (Exponential, Gamma)) for j in laws)
    return isinstance(spec, BdlpHwSpec) and spec.gamma_ou_params() is not None


def sample_integral(spec, t: float, mc: McConfig,
                    cfg: Optional[QuadratureConfig] = None) -> np.ndarray:
    """Dispatch to the sampler matching the spec family."""
    from .levy import BdlpHwSpec

    if isinstance(spec, GaussianProcessSpec):
        return sample_gaussian_integral(spec, t, mc, cfg)
    if isinstance(spec, CompoundPoissonSpec):
        return sample_cp_integral(spec, t, mc)
    if isinstance(spec, BdlpHwSpec) and spec.gamma_ou_params() is not None:
        p, beta = spec.gamma_ou_params()
        return sample_gamma_ou_integral(p, beta, spec.lambda_s, spec.s, t, mc)
    raise DomainError(f"no Monte Carlo sampler for {type(spec).__name__}")
