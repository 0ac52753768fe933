"""Command line interface: ``suphun {fit,select,risk,rate,theory,check-omega}``."""
from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import theory
from .config import load_config, parse_ints
from .densities import get_density, registry, sample_density
from .dyadic import as_level
from .experiment import rate_slope, read_csv, risk_experiment
from .hun import ModelSpec, hun_fit, hun_objective
from .selection import ModelCollection, PenaltyConfig, model_bandwidth, moshun_select
from .seminorm import ClassConfig, Sample, bernstein_margin, gamma_cap


def read_points(path: str) -> Sample:
    """Whitespace or comma separated point cloud, one point per line."""
    with (sys.stdin if path == "-" else open(path)) as fh:
        text = fh.read().replace(",", " ")
    pts = np.loadtxt(io.StringIO(text), ndmin=2)
    return Sample(pts)


def _sample_from_args(args) -> Sample:
    if args.points:
        return read_points(args.points)
    if args.density is None or args.n is None or args.seed is None:
        raise SystemExit("give --points FILE, or --density, --n and --seed")
    return sample_density(get_density(args.density), args.n, args.seed)


def _vector_arg(text: str, d: int) -> tuple:
    """Comma list of per-axis integers; a single value applies to every axis."""
    vals = parse_ints(text)
    return as_level(vals[0] if len(vals) == 1 else vals, d)


def _emit(obj, path):
    text = json.dumps(obj, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_fit(args) -> int:
    s = _sample_from_args(args)
    model = ModelSpec(_vector_arg(args.degrees, s.d), _vector_arg(args.level, s.d))
    h = args.h or model_bandwidth(model)
    fit = hun_fit(s, model, args.refine_l)
    diag = {
        "n": s.n,
        "level": list(model.level),
        "degrees": list(model.degrees),
        "refine_l": args.refine_l,
        "h": h,
        "objective": hun_objective(fit.estimate, fit.histogram, h),
        "empty_sample": fit.empty,
    }
    _emit(fit.estimate.to_dict(), args.out)
    _emit(diag, args.diagnostics)
    return 0


def cmd_select(args) -> int:
    s = _sample_from_args(args)
    d = s.d
    coll = ModelCollection.dyadic(
        d, _vector_arg(args.degrees, d), _vector_arg(args.j_min, d), _vector_arg(args.j_max, d),
        isotropic=not args.anisotropic,
    )
    est, model, report = moshun_select(s, coll, PenaltyConfig(a=args.a), args.refine_l, args.mode)
    _emit(est.to_dict(), args.out)
    _emit(report.to_dict(), args.diagnostics)
    return 0


def cmd_risk(args) -> int:
    cfg = load_config(
        args.config,
        base_seed=args.seed,
        density=args.density,
        estimator=args.estimator,
        n_values=parse_ints(args.n) if args.n else None,
        reps=args.reps,
    )
    report = risk_experiment(cfg)
    if args.out:
        report.write_csv(args.out)
    else:
        sys.stdout.write(report.to_csv())
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json() + "\n")
    return 0


def cmd_rate(args) -> int:
    print(repr(rate_slope(read_csv(args.csv))))
    return 0


def _vec(text):
    return parse_ints(text)


THEORY = {
    "gamma_cap": (gamma_cap, (int, int)),
    "gamma_rd": (theory.gamma_rd, (float, int, int)),
    "theta_shrink": (theory.theta_shrink, (float, float, int, int)),
    "model_bandwidth": (lambda r, j: model_bandwidth(ModelSpec(r, j)), (_vec, _vec)),
    "psi_lower": (lambda m, L, n: theory.psi_lower(theory.PartitionSpec(m), L, n), (lambda t: tuple(float(v) for v in t.split(",")), float, int)),
    "minimax_floor": (theory.minimax_floor, (float, float, int)),
    "b_factor": (theory.b_factor, (_vec,)),
    "kappa_star_floor": (theory.kappa_star_floor, (_vec,)),
}


def cmd_theory(args) -> int:
    func, types = THEORY[args.name]
    if len(args.args) != len(types):
        raise SystemExit(f"{args.name} takes {len(types)} arguments")
    print(repr(func(*[t(a) for t, a in zip(types, args.args)])))
    return 0


def cmd_check_omega(args) -> int:
    spec = get_density(args.density)
    s = sample_density(spec, args.n, args.seed)
    cfg = ClassConfig(spec.d, 0, args.j_max)
    margin = bernstein_margin(s, spec, args.x, cfg)
    print(json.dumps({"holds": margin <= 0.0, "margin": margin, "n": s.n, "x": args.x}))
    return 0


def _add_sample_args(p):
    p.add_argument("--points", help="point cloud file ('-' for stdin)")
    p.add_argument("--density", choices=sorted(registry()))
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--degrees", default="0")
    p.add_argument("--refine-l", type=int, default=1)
    p.add_argument("--out", help="density JSON output (default stdout)")
    p.add_argument("--diagnostics", help="diagnostics JSON output (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="suphun", description="Sup-norm density estimation on dyadic models.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="single-model hun estimate")
    _add_sample_args(p)
    p.add_argument("--level", default="3")
    p.add_argument("--h", type=float, help="bandwidth (default: model bandwidth)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="moshun model selection")
    _add_sample_args(p)
    p.add_argument("--j-min", default="0")
    p.add_argument("--j-max", default="6")
    p.add_argument("--anisotropic", action="store_true", help="all per-axis level combinations")
    p.add_argument("--mode", choices=("candidate-set", "exact-lp"), default="candidate-set")
    p.add_argument("--a", type=float, default=1.0)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("risk", help="Monte Carlo risk experiment (CSV)")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--density")
    p.add_argument("--estimator", choices=("hun", "moshun"))
    p.add_argument("--n", help="comma list or 2^a..2^b")
    p.add_argument("--reps", type=int)
    p.add_argument("--out")
    p.add_argument("--json", help="diagnostics JSON including wall times")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("rate", help="rate slope from a risk CSV")
    p.add_argument("csv")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("theory", help="evaluate a constant")
    p.add_argument("name", choices=sorted(THEORY))
    p.add_argument("args", nargs="*")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("check-omega", help="Bernstein event on a simulated sample")
    p.add_argument("--density", choices=sorted(registry()), default="uniform")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--x", type=float, default=2.0)
    p.add_argument("--j-max", type=int, default=8)
    p.set_defaults(func=cmd_check_omega)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        ap.exit(2, f"suphun {args.command}: error: {exc}\n")


if __name__ == "__main__":
    raise SystemExit(main())
