"""Command line entry point: ``glsemigroup <subcommand> [options]``.

Structured results are printed as JSON, series as CSV.  Exit status is 0
on success, 1 when a computation or validation fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import acceptance as acc
from .bernstein import classify, log_wphi, model_to_dict, wphi_residual
from .distributions import MOMENT_KINDS, density_m, moments
from .errors import ClockOverrun, ConvergenceFailure, DomainError, IdentityViolation, IllConditioned, SlowDecay
from .intertwining import verify_intertwining
from .localtime_krein import TAGS, krein_atoms, krein_reconstruction, phi_subordinator
from .models import resolve_model
from .montecarlo import HittingLaplace, KilledSemigroup, PathConfig, StationaryMoment, estimate
from .polys import Poly, ThetaShiftedPoly, set_precision
from .spectral import apply_semigroup, eigenpoly

_FAILURES = (DomainError, ConvergenceFailure, SlowDecay, IllConditioned, IdentityViolation, ClockOverrun,
             ArithmeticError, ValueError)


def _emit(obj, out) -> None:
    out.write(json.dumps(obj, indent=2) + "\n")


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _coeffs(poly) -> list:
    return [float(c) for c in poly.coeffs]


def _cmd_inspect(args, out):
    model = resolve_model(args.model)
    info = classify(model)
    info["config"] = model_to_dict(model)
    _emit(info, out)


def _cmd_moments(args, out):
    model = resolve_model(args.model)
    if args.series:
        writer = csv.writer(out)
        writer.writerow(["n", "moment"])
        for n in range(args.n + 1):
            writer.writerow([n, repr(moments(model, args.kind, n))])
    else:
        _emit(moments(model, args.kind, args.n), out)


def _cmd_wphi(args, out):
    model = resolve_model(args.model)
    z = complex(args.z.replace(" ", ""))
    arg = z.real if z.imag == 0 else z
    lw = log_wphi(model, arg)
    val = np.exp(lw)
    _emit({
        "z": [z.real, z.imag],
        "log_wphi": [float(np.real(lw)), float(np.imag(lw))],
        "wphi": [float(np.real(val)), float(np.imag(val))],
        "residual": wphi_residual(model, arg),
    }, out)


def _cmd_density(args, out):
    model = resolve_model(args.model)
    x = np.geomspace(args.x_min, args.x_max, args.points) if args.log else np.linspace(args.x_min, args.x_max, args.points)
    vals, err = density_m(model, x, with_error=True)
    writer = csv.writer(out)
    writer.writerow(["x", "density", "error_estimate"])
    for row in zip(x, vals, np.broadcast_to(err, x.shape)):
        writer.writerow([repr(float(v)) for v in row])


def _cmd_eigen(args, out):
    model = resolve_model(args.model)
    p = eigenpoly(model, args.n, args.variant)
    base = p.poly if isinstance(p, ThetaShiftedPoly) else p
    result = {"n": args.n, "variant": args.variant, "coefficients": _coeffs(base)}
    if isinstance(p, ThetaShiftedPoly):
        result["x_power"] = p.theta
    _emit(result, out)


def _cmd_apply(args, out):
    model = resolve_model(args.model)
    base = Poly(tuple(_floats(args.coeffs)))
    f = ThetaShiftedPoly(base, model.require_theta()) if args.which in ("P_dag", "Q_dag") else base
    g = apply_semigroup(model, f, args.t, args.which)
    gp = g.poly if isinstance(g, ThetaShiftedPoly) else g
    result = {"which": args.which, "t": args.t, "coefficients": _coeffs(gp)}
    if isinstance(g, ThetaShiftedPoly):
        result["x_power"] = g.theta
    if args.x is not None:
        result["value"] = float(g(args.x))
    _emit(result, out)


def _cmd_verify(args, out):
    model = resolve_model(args.model)
    rng = np.random.default_rng(args.seed)
    rows = []
    worst = 0.0
    for i in range(args.count):
        f = Poly(tuple(rng.uniform(-1, 1, args.degree + 1)))
        for t in _floats(args.t):
            reflected = verify_intertwining(model, f, t)
            killed = verify_intertwining(model, ThetaShiftedPoly(f, model.require_theta()), t, killed=True)
            worst = max(worst, reflected, killed)
            rows.append({"poly": i, "t": t, "reflected": reflected, "killed": killed})
    _emit({"tolerance": args.tol, "max_deviation": worst, "rows": rows}, out)
    return 0 if worst < args.tol else 1


def _cmd_phi(args, out):
    model = resolve_model(args.model) if (args.model_given or args.theta is None) else None
    q = _floats(args.q)
    vals = phi_subordinator(args.tag, model, np.array(q), theta=args.theta)
    vals = [float(v) for v in np.atleast_1d(vals)]
    _emit(vals[0] if len(vals) == 1 else vals, out)


def _cmd_krein(args, out):
    if args.q is not None:
        q = _floats(args.q)
        exact = phi_subordinator("X_laguerre", None, np.array(q), theta=args.theta)
        rows = [{"q": v, "reconstruction": krein_reconstruction(args.theta, v, args.n), "exact": float(e)}
                for v, e in zip(q, exact)]
        _emit(rows, out)
        return
    writer = csv.writer(out)
    writer.writerow(["location", "weight"])
    for loc, w in krein_atoms(args.theta, args.n):
        writer.writerow([repr(loc), repr(w)])


def _cmd_simulate(args, out):
    model = resolve_model(args.model)
    cfg = PathConfig(dt=args.dt, horizon=args.horizon, eps_absorb=args.eps, seed=args.seed, replicas=args.replicas)
    theta = model.require_theta()
    if args.observable == "killed_semigroup":
        coeffs = _floats(args.coeffs)
        obs = KilledSemigroup(ThetaShiftedPoly(Poly(tuple(coeffs)), theta), args.x, args.t)
    elif args.observable == "hitting_laplace":
        obs = HittingLaplace(args.q, args.x)
    else:
        obs = StationaryMoment(args.k, args.x)
    est = estimate(model, obs, cfg, threads=args.threads)
    config = {
        "model": model_to_dict(model),
        "observable": args.observable,
        "t": args.t, "x": args.x, "q": args.q, "k": args.k, "coeffs": args.coeffs,
        "dt": cfg.dt, "horizon": cfg.horizon, "eps": cfg.eps_absorb, "replicas": cfg.replicas,
        "seed": cfg.seed, "threads": args.threads,
    }
    _emit({"value": est.value, "stderr": est.stderr, "config": config}, out)


def _cmd_acceptance(args, out):
    only = [int(v) for v in args.only.split(",")] if args.only else None

    def report(res):
        out.write(res.line() + "\n")
        out.flush()

    results = acc.run_acceptance(seed=args.seed, threads=args.threads, only=only, report=report)
    passed = sum(r.passed for r in results)
    out.write(f"{passed}/{len(results)} criteria passed\n")
    return 0 if passed == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default=argparse.SUPPRESS,
                        help="builtin name (model-c, model-j) or JSON model file")
    common.add_argument("--precision", choices=("double", "extended"), default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="glsemigroup", description=__doc__.splitlines()[0])
    parser.add_argument("--model", default="model-j", help="builtin name (model-c, model-j) or JSON model file")
    parser.add_argument("--precision", choices=("double", "extended"), default="extended")
    parser.add_argument("--seed", type=int, default=20240601)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", parents=[common], help="theta, flags and frakb of a model")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("moments", parents=[common], help="moment M(n+1) of one of the attached laws")
    p.add_argument("--kind", choices=MOMENT_KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--series", action="store_true", help="CSV of all moments up to n")
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("wphi", parents=[common], help="W_phi(z) and its functional-equation residual")
    p.add_argument("--z", required=True, help="real or complex, e.g. 2.5 or 0.5+5j")
    p.set_defaults(func=_cmd_wphi)

    p = sub.add_parser("density", parents=[common], help="invariant density on a grid (CSV)")
    p.add_argument("--x-min", type=float, default=0.1)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--log", action="store_true", help="geometric grid")
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("eigen", parents=[common], help="coefficients of an eigenpolynomial")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--variant", choices=("P", "P_dag"), default="P")
    p.set_defaults(func=_cmd_eigen)

    p = sub.add_parser("apply", parents=[common], help="apply a semigroup to a polynomial")
    p.add_argument("--coeffs", required=True, help="comma-separated coefficients, constant first")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--which", choices=("P", "Q", "P_dag", "Q_dag"), default="P")
    p.add_argument("--x", type=float, help="also evaluate the result at x")
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser("verify", parents=[common], help="intertwining deviations on random polynomials")
    p.add_argument("--degree", type=int, default=10)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--t", default="0.1,1,5", help="comma-separated times")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("phi", parents=[common], help="inverse local time exponent")
    p.add_argument("--tag", choices=TAGS, required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--q", required=True, help="one value or a comma-separated list")
    p.set_defaults(func=_cmd_phi)

    p = sub.add_parser("krein", parents=[common], help="Krein atoms (CSV) or reconstruction at --q")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--q", help="comma-separated q values to reconstruct Phi_X at")
    p.set_defaults(func=_cmd_krein)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate with standard error")
    p.add_argument("--observable", choices=("killed_semigroup", "hitting_laplace", "stationary_moment"), required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1.0, help="power for stationary_moment")
    p.add_argument("--coeffs", default="1", help="polynomial multiplying x^theta for killed_semigroup")
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--horizon", type=float, default=200.0, help="time horizon for stationary_moment")
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--replicas", type=int, default=10_000)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("acceptance", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_acceptance)
    return parser


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.model_given = any(a == "--model" or a.startswith("--model=") for a in argv)
    set_precision(args.precision)
    try:
        code = args.func(args, out)
    except _FAILURES as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    finally:
        set_precision("extended")
    return 0 if code is None else code


def main() -> None:
    sys.exit(run())


__all__ = ["build_parser", "run", "main"]
