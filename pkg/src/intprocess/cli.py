"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import finance, montecarlo
from .cpoisson import CompoundPoissonSpec
from .errors import ConfigError, IntProcessError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4


def _route_for(spec, route: str) -> str:
    """Map the generic --route names onto the spec's own route names."""
    if route == "auto":
        return spec.routes()[0]
    if isinstance(spec, CompoundPoissonSpec) and route == "quad":
        route = "levy"
    if route not in spec.routes():
        raise ConfigError(f"route {route!r} unavailable; {spec.family} supports {spec.routes()}")
    return route


def _meta(run, route, **extra) -> str:
    items = {"route": route, "family": run.spec.family if run.spec is not None else "-", **extra}
    return " ".join(f"{k}={v}" for k, v in items.items())


def _out(run, name: str) -> Path:
    run.out_dir.mkdir(parents=True, exist_ok=True)
    return run.out_dir / name


def cmd_eval(run) -> int:
    spec, t = run.spec, run.task["t"]
    rows = []
    if run.route == "mc":
        if not montecarlo.supports(spec):
            raise ConfigError(f"no Monte Carlo sampler for {spec.family}")
        samples = montecarlo.sample_integral(spec, t, run.mc, run.quad)
        for x in run.task["x"]:
            est = montecarlo.estimate_laplace(samples, x)
            rows.append((float(x), est.value, 0.0, est.stderr))
        header = ("x", "re", "im", "stderr")
        route = "mc"
    else:
        route = _route_for(spec, run.route)
        for x in run.task["x"]:
            v = complex(spec.laplace(t, x, run.quad, route)) if x else 1 + 0j
            rows.append((float(x), v.real, v.imag))
        header = ("x", "re", "im")
    path = _out(run, "eval.csv")
    finance.write_csv(path, header, rows, [_meta(run, route, t=repr(float(t)))])
    print(path)
    return EXIT_OK


def cmd_verify(run) -> int:
    spec, t = run.spec, run.task["t"]
    routes = list(spec.routes())
    use_mc = run.mc is not None and montecarlo.supports(spec)
    if len(routes) + use_mc < 2:
        raise ConfigError(f"{spec.family} spec offers fewer than two routes to compare")
    samples = montecarlo.sample_integral(spec, t, run.mc, run.quad) if use_mc else None
    rows, failed = [], False
    for x in run.task["x"]:
        vals = {r: complex(spec.laplace(t, x, run.quad, r)) for r in routes}
        ref = vals[routes[0]]
        for r in routes:
            diff = abs(vals[r] - ref)
            ok = diff <= run.verify_tol
            failed |= not ok
            rows.append((float(x), r, vals[r].real, vals[r].imag, diff, 0.0, "ok" if ok else "FAIL"))
        if use_mc:
            est = montecarlo.estimate_laplace(samples, x)
            diff = abs(est.value - ref.real)
            ok = diff <= 3.0 * est.stderr or diff == 0.0
            failed |= not ok
            rows.append((float(x), "mc", est.value, 0.0, diff, est.stderr, "ok" if ok else "FAIL"))
    path = _out(run, "verify.csv")
    finance.write_csv(path, ("x", "route", "re", "im", "abs_diff", "stderr", "status"), rows,
                      [_meta(run, "+".join(routes + (["mc"] if use_mc else [])), t=repr(float(t)),
                             reference=routes[0], tol=repr(run.verify_tol))])
    for r in rows:
        print(",".join(map(str, r)))
    print(path)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_price(run) -> int:
    spec = run.spec
    route = _route_for(spec, run.route) if run.route != "mc" else "mc"
    rows = []
    for T in run.task["maturities"]:
        horizon = spec.s + T
        if route == "mc":
            est = montecarlo.estimate_laplace(montecarlo.sample_integral(spec, horizon, run.mc, run.quad), 1.0)
            rows.append((float(T), est.value))
        else:
            rows.append((float(T), finance.bond_price(spec, horizon, run.quad, route)))
    flag = any(v > 1.0 for _, v in rows)
    path = _out(run, "price.csv")
    finance.write_csv(path, ("maturity", "price"), rows,
                      [_meta(run, route, negative_rates=str(flag).lower())])
    print(path)
    return EXIT_OK


def cmd_survival(run) -> int:
    spec = run.spec
    route = _route_for(spec, run.route)
    rows = []
    for state in run.task["states"]:
        curve = finance.survival_curve(spec, run.task["t"], run.task["tenors"], state, run.quad, route)
        rows.extend((float(state), float(d), float(p)) for d, p in zip(curve.tenors, curve.probabilities))
    path = _out(run, "survival.csv")
    finance.write_csv(path, ("state", "tenor", "probability"), rows,
                      [_meta(run, route, t=repr(float(run.task["t"])))])
    print(path)
    return EXIT_OK


def cmd_calibrate(run) -> int:
    curve = run.task["curve"]
    res = finance.calibrate(run.task["family"], curve, n_starts=run.task["n_starts"],
                            seed=run.extras["seed"])
    if not np.isfinite(res.residual_norm):
        raise IntProcessError("calibration produced a non-finite residual")
    rows = [(k, v) for k, v in res.params.items()]
    rows += [("residual_norm", res.residual_norm), ("converged", str(res.converged).lower())]
    path = _out(run, "calibrate.csv")
    finance.write_csv(path, ("name", "value"), rows, [f"family={res.family} n_starts={res.n_starts}"])
    err_path = _out(run, "calibrate_errors.csv")
    finance.write_csv(err_path, ("maturity", "market", "model", "error"),
                      [(float(T), float(m), float(m + e), float(e))
                       for T, m, e in zip(curve.maturities, curve.discounts, res.errors)])
    print(path)
    print(f"residual_norm={res.residual_norm!r}")
    return EXIT_OK


def cmd_invert(run) -> int:
    spec, t, grid = run.spec, run.task["t"], run.task["grid"]
    res = finance.distribution(spec, t, grid, run.quad, run.route)
    route = res.route
    path = _out(run, "invert.csv")
    finance.write_csv(path, ("y", "cdf", "raw"), zip(res.grid, res.cdf, res.raw),
                      [_meta(run, route, t=repr(float(t)), u_max=repr(res.u_max),
                             max_adjustment=repr(res.max_adjustment))])
    print(path)
    return EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "verify": cmd_verify,
    "price": cmd_price,
    "survival": cmd_survival,
    "calibrate": cmd_calibrate,
    "invert": cmd_invert,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="intprocess",
                                description="Transforms, prices and distributions of integrated processes.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--seed", type=int, help="Monte Carlo seed (overrides [numerics] seed)")
    p.add_argument("--route", default="auto", choices=config_mod.ROUTES)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        run = config_mod.load(args.config, args.command, seed=args.seed, out=args.out, route=args.route)
        if run.spec is not None and run.route not in ("auto", "mc"):
            _route_for(run.spec, run.route)
        if run.route == "mc" and args.command not in ("eval", "price"):
            raise ConfigError(f"route 'mc' is not offered by {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(all="ignore"):
            return COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntProcessError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
