"""INI run configuration: parsed and validated in full before any computation.

Times are in years and rates per year. Sections:

``[process]``
    ``family`` is one of ``gaussian``, ``compound_poisson``, ``bdlp_hw``,
    ``integrated_levy``, ``levy_direct``; plus ``s`` and ``lambda_s``.
    Coefficients (``alpha``, ``beta``, ``sigma``) are written as a variant
    name followed by ``;``-separated groups of comma-separated numbers::

        beta = constant 0.5
        alpha = piecewise_constant 1, 2 ; 0.1, 0.2, 0.3
        sigma = polynomial 1 ; 0.2, 0.1 ; 0.3
        beta = rational 2.0, 1.0          # scale / (T - t): T, scale
        alpha = linear_decay 0.1, 2.0     # gamma (T - t): gamma, T
        sigma = sampled 0, 1, 2 ; 0.2, 0.3, 0.25

    Gaussian closed-form examples: ``example = integrated_ou`` with
    ``example_params = beta=1, sigma=1``. Drivers: ``brownian mu, sigma``,
    ``gamma kappa, alpha``, ``variance_gamma kappa, alpha``,
    ``compound_poisson theta ; exponential kappa``. Compound Poisson uses
    ``theta`` and ``jump = exponential kappa`` or ``jump = gamma kappa, alpha``.
``[task]``
    ``t``, ``x``, ``maturities``, ``tenors``, ``states``, ``grid``
    (``lo, hi, n``), and for calibration ``family`` with either ``curve``
    (CSV path, relative to the config file) or ``generate_params``.
``[numerics]``
    quadrature tolerances, ``verify_tol``, and Monte Carlo settings
    ``mc_paths``, ``mc_steps``, ``mc_scheme``, ``seed``.
``[output]``
    ``dir``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import coeffs as cf
from .cpoisson import CompoundPoissonSpec, Exponential, Gamma
from .errors import ConfigError, IntProcessError
from .finance import FAMILIES, DiscountCurve, generate_curve, read_discount_curve
from .gaussian import EXAMPLE_KINDS, GaussianProcessSpec, example_spec
from .levy import (
    BdlpHwSpec,
    BrownianDrift,
    CompoundPoisson,
    GammaProcess,
    IntegratedLevySpec,
    LevySubordinatorSpec,
    VarianceGamma,
)
from .montecarlo import SCHEMES, McConfig
from .numerics import GammaLawParams, QuadratureConfig

PROCESS_FAMILIES = ("gaussian", "compound_poisson", "bdlp_hw", "integrated_levy", "levy_direct")
COMMANDS = ("eval", "verify", "price", "survival", "calibrate", "invert")
ROUTES = ("auto", "closed", "quad", "series", "mc")

_KNOWN = {
    "process": {"family", "s", "lambda_s", "alpha", "beta", "sigma", "example",
                "example_params", "driver", "theta", "jump"},
    "task": {"command", "t", "x", "maturities", "tenors", "states", "grid", "family",
             "curve", "generate_params", "start"},
    "numerics": {"abs_tol", "rel_tol", "max_subdivisions", "verify_tol", "mc_paths",
                 "mc_steps", "mc_scheme", "seed", "n_starts"},
    "output": {"dir"},
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec: Optional[object]
    task: dict
    quad: QuadratureConfig
    mc: Optional[McConfig]
    verify_tol: float
    out_dir: Path
    route: str = "auto"
    extras: dict = field(default_factory=dict)


def _numbers(text: str, what: str) -> list:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{what}: expected numbers, got {text!r}") from None


def _variant(text: str, what: str):
    text = text.strip()
    if not text:
        raise ConfigError(f"{what}: empty value")
    name, _, rest = text.partition(" ")
    groups = [g for g in rest.split(";")] if rest.strip() else []
    return name.lower(), groups


def parse_coefficient(text: str, what: str = "coefficient") -> cf.CoefficientFn:
    name, groups = _variant(text, what)
    nums = [_numbers(g, what) for g in groups]
    try:
        if name == "constant" and len(nums) == 1 and len(nums[0]) == 1:
            return cf.Constant(nums[0][0])
        if name == "piecewise_constant" and len(nums) == 2:
            return cf.PiecewiseConstant(tuple(nums[0]), tuple(nums[1]))
        if name == "polynomial" and len(nums) >= 2:
            return cf.Polynomial(tuple(nums[0]), tuple(tuple(g) for g in nums[1:]))
        if name == "rational" and len(nums) == 1 and len(nums[0]) in (1, 2):
            return cf.Rational1OverTminus(*nums[0])
        if name == "linear_decay" and len(nums) == 1 and len(nums[0]) == 2:
            return cf.LinearDecay(*nums[0])
        if name == "sampled" and len(nums) == 2:
            return cf.SampledGrid(tuple(nums[0]), tuple(nums[1]))
    except (IntProcessError, ValueError, TypeError) as exc:
        raise ConfigError(f"{what}: {exc}") from None
    raise ConfigError(f"{what}: cannot parse {text!r}")


def parse_jump(text: str, what: str = "jump"):
    name, groups = _variant(text, what)
    nums = _numbers(";".join(groups).replace(";", ","), what) if groups else []
    try:
        if name == "exponential" and len(nums) == 1:
            return Exponential(nums[0])
        if name == "gamma" and len(nums) == 2:
            return Gamma(GammaLawParams(*nums))
    except (IntProcessError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from None
    raise ConfigError(f"{what}: cannot parse {text!r}")


def parse_driver(text: str):
    name, groups = _variant(text, "driver")
    try:
        if name == "compound_poisson" and len(groups) == 2:
            theta = _numbers(groups[0], "driver")
            if len(theta) != 1:
                raise ConfigError("driver: compound_poisson needs one intensity")
            return CompoundPoisson(theta[0], parse_jump(groups[1], "driver jump"))
        nums = _numbers(",".join(groups), "driver") if groups else []
        if name == "brownian" and len(nums) == 2:
            return BrownianDrift(*nums)
        if name == "gamma" and len(nums) == 2:
            return GammaProcess(GammaLawParams(*nums))
        if name == "variance_gamma" and len(nums) == 2:
            return VarianceGamma(GammaLawParams(*nums))
    except ConfigError:
        raise
    except (IntProcessError, ValueError) as exc:
        raise ConfigError(f"driver: {exc}") from None
    raise ConfigError(f"driver: cannot parse {text!r}")


def _keyvals(text: str, what: str) -> dict:
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        k, sep, v = item.partition("=")
        if not sep:
            raise ConfigError(f"{what}: expected key=value, got {item!r}")
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"{what}: {k.strip()} is not a number") from None
    return out


def _float(sec, key, default=None):
    if key not in sec:
        if default is None:
            raise ConfigError(f"missing key {key!r} in [{sec.name}]")
        return default
    try:
        return float(sec[key])
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key}: not a number: {sec[key]!r}") from None


def _int(sec, key, default):
    if key not in sec:
        return default
    try:
        return int(sec[key])
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key}: not an integer: {sec[key]!r}") from None


def build_process(sec) -> object:
    family = sec.get("family", "").strip()
    if family not in PROCESS_FAMILIES:
        raise ConfigError(f"[process] family must be one of {PROCESS_FAMILIES}, got {family!r}")
    s = _float(sec, "s", 0.0)
    lam = _float(sec, "lambda_s", 0.0)
    coeff_keys = [k for k in ("alpha", "beta", "sigma") if k in sec]
    try:
        if family in ("gaussian", "bdlp_hw"):
            if "example" in sec:
                if family != "gaussian" or coeff_keys:
                    raise ConfigError("[process] example excludes explicit coefficients")
                kind = sec["example"].strip()
                if kind not in EXAMPLE_KINDS[:3]:
                    raise ConfigError(f"[process] example must be one of {EXAMPLE_KINDS[:3]}")
                params = _keyvals(sec.get("example_params", ""), "example_params")
                return example_spec(kind, {**params, "lambda_s": lam}, s)
            c = cf.GaussianCoeffs(**{k: parse_coefficient(sec[k], k) for k in coeff_keys})
            if family == "gaussian":
                return GaussianProcessSpec(c, s, lam)
            if "driver" not in sec:
                raise ConfigError("[process] bdlp_hw needs a driver")
            return BdlpHwSpec(c, parse_driver(sec["driver"]), s, lam)
        if family == "compound_poisson":
            if "jump" not in sec:
                raise ConfigError("[process] compound_poisson needs a jump law")
            return CompoundPoissonSpec(_float(sec, "theta"), parse_jump(sec["jump"]), s, lam)
        if "driver" not in sec:
            raise ConfigError(f"[process] {family} needs a driver")
        drv = parse_driver(sec["driver"])
        cls = IntegratedLevySpec if family == "integrated_levy" else LevySubordinatorSpec
        return cls(drv, s, lam)
    except ConfigError:
        raise
    except (IntProcessError, ValueError) as exc:
        raise ConfigError(f"[process] {exc}") from None


def _check_keys(cp):
    for name in cp.sections():
        if name not in _KNOWN:
            raise ConfigError(f"unknown section [{name}]")
        extra = set(cp[name]) - _KNOWN[name]
        if extra:
            raise ConfigError(f"[{name}] unknown keys: {sorted(extra)}")


def _grid(text: str) -> np.ndarray:
    nums = _numbers(text, "[task] grid")
    if len(nums) != 3 or nums[2] < 2 or int(nums[2]) != nums[2] or nums[1] <= nums[0]:
        raise ConfigError("[task] grid must be 'lo, hi, n' with hi > lo and integer n >= 2")
    return np.linspace(nums[0], nums[1], int(nums[2]))


def load(path, command: str, seed: Optional[int] = None, out: Optional[str] = None,
         route: str = "auto") -> RunConfig:
    """Parse and validate ``path`` for ``command``; raises ConfigError."""
    path = Path(path)
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if route not in ROUTES:
        raise ConfigError(f"unknown route {route!r}")
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",), interpolation=None)
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    _check_keys(cp)
    for name in _KNOWN:
        if not cp.has_section(name):
            cp.add_section(name)
    task_sec, num, outsec = cp["task"], cp["numerics"], cp["output"]
    declared = task_sec.get("command", command).strip()
    if declared != command:
        raise ConfigError(f"[task] command is {declared!r} but {command!r} was invoked")

    spec = None if command == "calibrate" else build_process(cp["process"])

    try:
        quad = QuadratureConfig(_float(num, "abs_tol", 1e-13), _float(num, "rel_tol", 1e-12),
                                _int(num, "max_subdivisions", 400))
    except (IntProcessError, ValueError) as exc:
        raise ConfigError(f"[numerics] {exc}") from None
    verify_tol = _float(num, "verify_tol", 1e-8)
    mc = None
    n_paths = _int(num, "mc_paths", 0)
    if n_paths:
        scheme = num.get("mc_scheme", "").strip() or _default_scheme(spec)
        if scheme not in SCHEMES:
            raise ConfigError(f"[numerics] mc_scheme must be one of {SCHEMES}")
        try:
            mc = McConfig(n_paths, _int(num, "mc_steps", 1), seed if seed is not None else _int(num, "seed", 0),
                          scheme)
        except IntProcessError as exc:
            raise ConfigError(f"[numerics] {exc}") from None
    if route == "mc" and mc is None:
        raise ConfigError("route 'mc' needs [numerics] mc_paths > 0")

    task = {}
    nonneg = lambda xs, what: xs if all(v >= 0 for v in xs) else _raise(f"[task] {what} must be >= 0")
    if command in ("eval", "verify", "invert", "price", "survival"):
        task["start"] = spec.s
    if command in ("eval", "verify"):
        task["t"] = _float(task_sec, "t")
        task["x"] = nonneg(_numbers(task_sec.get("x", "1"), "[task] x"), "x")
    if command == "invert":
        task["t"] = _float(task_sec, "t")
        if "grid" not in task_sec:
            raise ConfigError("[task] invert needs grid = lo, hi, n")
        task["grid"] = _grid(task_sec["grid"])
    if command == "price":
        task["maturities"] = nonneg(_numbers(task_sec.get("maturities", ""), "[task] maturities"), "maturities")
        if not task["maturities"]:
            raise ConfigError("[task] price needs maturities")
    if command == "survival":
        task["t"] = _float(task_sec, "t", spec.s)
        task["tenors"] = _numbers(task_sec.get("tenors", ""), "[task] tenors")
        task["states"] = _numbers(task_sec.get("states", ""), "[task] states")
        if not task["tenors"] or not task["states"]:
            raise ConfigError("[task] survival needs tenors and states")
        if any(v <= 0 for v in task["tenors"]) or any(np.diff(task["tenors"]) <= 0):
            raise ConfigError("[task] tenors must be positive and ascending")
    if command == "calibrate":
        fam = task_sec.get("family", "").strip()
        if fam not in FAMILIES:
            raise ConfigError(f"[task] family must be one of {tuple(FAMILIES)}")
        task["family"] = fam
        task["n_starts"] = _int(num, "n_starts", 8)
        try:
            if "curve" in task_sec:
                curve_path = (path.parent / task_sec["curve"].strip()).resolve()
                if not curve_path.is_file():
                    raise ConfigError(f"[task] curve file not found: {curve_path}")
                task["curve"] = read_discount_curve(curve_path)
            elif "generate_params" in task_sec:
                params = _numbers(task_sec["generate_params"], "[task] generate_params")
                if len(params) != len(FAMILIES[fam].param_names):
                    raise ConfigError(f"[task] generate_params needs {FAMILIES[fam].param_names}")
                mats = _numbers(task_sec.get("maturities", "1, 2, 5, 10"), "[task] maturities")
                task["curve"] = generate_curve(fam, params, mats)
            else:
                raise ConfigError("[task] calibrate needs curve or generate_params")
        except ConfigError:
            raise
        except (IntProcessError, ValueError) as exc:
            raise ConfigError(f"[task] {exc}") from None
        if not isinstance(task["curve"], DiscountCurve):
            raise ConfigError("[task] invalid curve")
    if "t" in task and spec is not None and task["t"] < spec.s:
        raise ConfigError("[task] t precedes the process start s")

    out_dir = Path(out if out is not None else outsec.get("dir", "out"))
    if not out_dir.is_absolute() and out is None:
        out_dir = path.parent / out_dir
    run_seed = seed if seed is not None else _int(num, "seed", 0)
    return RunConfig(command, spec, task, quad, mc, verify_tol, out_dir, route, {"seed": run_seed})


def _raise(msg):
    raise ConfigError(msg)


def _default_scheme(spec) -> str:
    if isinstance(spec, GaussianProcessSpec):
        return "exact_gaussian_step"
    return "exact_jumps"
