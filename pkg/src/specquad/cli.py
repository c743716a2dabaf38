"""Command-line front end: ``specquad {dos,trace,bounds,experiment}``."""

import argparse
import json
import os
import sys

import numpy as np

from .estimator import (
    EstimateConfig,
    bound_cesm_tail,
    bound_required_degree_wasserstein,
    bound_trace_tail,
    bound_wasserstein_tail,
    estimate_spectrum,
    report_to_json,
)
from .experiments import EXPERIMENTS, run_experiment
from .measures import DiscreteDistribution, write_csv
from .operators import load_matrix_market
from .orthopoly import parse_measure
from .problems import SizeLimitError, parse_problem

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
METHOD_ALIASES = {"kpm": "aq"}


class UsageError(Exception):
    """Invalid combination of flags detected after argument parsing."""


def _add_estimate_flags(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", help="built-in problem, e.g. uniform(1000) or kneser(8,3)")
    src.add_argument("--matrix", help="Matrix Market file with a real symmetric matrix")
    p.add_argument("--method", default="slq", choices=["slq", "iq", "aq", "aaq", "kpm"],
                   help="quadrature; kpm is an alias of aq")
    p.add_argument("--damping", default="none", choices=["none", "jackson"])
    p.add_argument("--k", type=int, default=None, help="Lanczos steps or matvecs (default: ceil(s/2) or 10)")
    p.add_argument("--s", type=int, default=None, help="moment degree (default 2k)")
    p.add_argument("--nv", type=int, default=10, help="number of random vectors")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), default=None,
                   help="spectrum interval for the Chebyshev path (default: estimated)")
    p.add_argument("--measure", default=None, help="reference measure, e.g. chebU(0,2)")
    p.add_argument("--moment-path", default="cheb", choices=["cheb", "lanczos"])
    p.add_argument("--reorth", action="store_true", help="full reorthogonalization in Lanczos")
    p.add_argument("--aaq-nodes", type=int, default=None, help="Gauss nodes for aaq (default 8(s+1))")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: SPECQUAD_THREADS or cores)")
    p.add_argument("--out", default=".", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="specquad", description="Randomized quadrature for spectral densities.")
    sub = parser.add_subparsers(dest="command", required=True)

    dos = sub.add_parser("dos", help="approximate the spectral distribution")
    _add_estimate_flags(dos)
    dos.add_argument("--grid", type=int, default=1000, help="points for density/cdf output of series methods")

    trace = sub.add_parser("trace", help="estimate tr(f(A))")
    _add_estimate_flags(trace)
    trace.add_argument("--f", action="append", required=True, dest="functions",
                       help="function spec, e.g. log or exp_neg(2); repeatable")

    bounds = sub.add_parser("bounds", help="a priori degree and tail-probability bounds")
    bounds.add_argument("--n", type=int, required=True, help="matrix dimension")
    bounds.add_argument("--nv", type=int, default=1)
    bounds.add_argument("--eps", type=float, required=True)
    bounds.add_argument("--range", type=float, nargs=2, metavar=("LMIN", "LMAX"), required=True,
                        help="spectrum range [lambda_min, lambda_max]")
    bounds.add_argument("--frange", type=float, nargs=2, metavar=("FMIN", "FMAX"), default=None,
                        help="range of f on the spectrum (default: the spectrum range)")
    bounds.add_argument("--dtv", type=float, default=1.0, help="total variation of the averaged output")
    bounds.add_argument("--out", default=None, help="directory for bounds.json")

    exp = sub.add_parser("experiment", help="run a desk-scale preset experiment")
    exp.add_argument("name", choices=sorted(EXPERIMENTS))
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--full", action="store_true", help="heat-capacity: use N=12 sites instead of 8")
    exp.add_argument("--out", default=".", help="output directory")
    return parser


def _operator(args):
    if args.matrix is not None:
        return load_matrix_market(args.matrix)
    try:
        return parse_problem(args.problem, seed=args.seed)
    except SizeLimitError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config(args, functions=()):
    method = METHOD_ALIASES.get(args.method, args.method)
    k, s = args.k, args.s
    if k is None:
        k = max(1, (s + 1) // 2) if s is not None else 10
    try:
        measure = parse_measure(args.measure) if args.measure else None
        return EstimateConfig(
            method=method, k=k, s=s, n_v=args.nv, seed=args.seed, damping=args.damping,
            reorth=args.reorth, measure=measure, interval=args.interval,
            moment_path=args.moment_path, aaq_nodes=args.aaq_nodes,
            functions=tuple(functions), threads=args.threads,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_report(report, out):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(report_to_json(report))


def cmd_dos(args):
    cfg = _config(args)
    A = _operator(args)
    report = estimate_spectrum(A, cfg)
    out = args.out
    os.makedirs(out, exist_ok=True)
    avg = report.average
    if isinstance(avg, DiscreteDistribution):
        write_csv(os.path.join(out, "nodes.csv"), avg.nodes, avg.weights, ("node", "weight"))
        written = ["nodes.csv"]
    else:
        a, b = avg.support
        # interior points; the Chebyshev density is infinite at the endpoints
        x = np.linspace(a, b, args.grid + 2)[1:-1]
        write_csv(os.path.join(out, "density.csv"), x, avg.density(x), ("x", "value"))
        write_csv(os.path.join(out, "cdf.csv"), x, avg.cdf(x), ("x", "value"))
        written = ["density.csv", "cdf.csv"]
    _write_report(report, out)
    print(f"wrote {', '.join(written)} and report.json to {out}")
    return EXIT_OK


def cmd_trace(args):
    cfg = _config(args, args.functions)
    A = _operator(args)
    report = estimate_spectrum(A, cfg)
    for name, value in report.sums.items():
        samples = " ".join(format(A.dim * v, ".10g") for v in report.sample_sums[name])
        print(f"{name}\t{value:.17g}")
        print(f"  per-sample n*int f: {samples}")
    _write_report(report, args.out)
    return EXIT_OK


def cmd_bounds(args):
    lmin, lmax = args.range
    if not lmax > lmin:
        raise UsageError("--range needs LMIN < LMAX")
    fmin, fmax = args.frange if args.frange else (lmin, lmax)
    width = lmax - lmin
    rows = {
        "inputs": {
            "n": args.n, "nv": args.nv, "eps": args.eps, "range": [lmin, lmax],
            "frange": [fmin, fmax], "dtv": args.dtv,
        },
        "required_degree": {
            "g": bound_required_degree_wasserstein("g", args.eps, lambda_range=width),
            "i/a": bound_required_degree_wasserstein("i", args.eps, lambda_range=width, d_tv=args.dtv),
            "damped": bound_required_degree_wasserstein("damped", args.eps, a=lmin, b=lmax),
        },
        "tail_probability": {
            "trace": bound_trace_tail(args.n, args.nv, args.eps, fmin, fmax),
            "cesm_pointwise": bound_cesm_tail(args.n, args.nv, args.eps, pointwise=True),
            "cesm_uniform": bound_cesm_tail(args.n, args.nv, args.eps, pointwise=False),
            "wasserstein": bound_wasserstein_tail(args.n, args.nv, args.eps, lmin, lmax),
        },
    }
    for section, vals in rows.items():
        print(section)
        for key, val in vals.items():
            print(f"  {key:<16} {val}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "bounds.json"), "w") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_experiment(args):
    kwargs = {}
    if args.name != "runge":
        kwargs["seed"] = args.seed
    if args.full:
        if args.name != "heat-capacity":
            raise UsageError("--full applies only to heat-capacity")
        kwargs["N"] = 12
    run_experiment(args.name, out=args.out, **kwargs)
    print(f"wrote {args.name} data to {args.out}")
    return EXIT_OK


COMMANDS = {"dos": cmd_dos, "trace": cmd_trace, "bounds": cmd_bounds, "experiment": cmd_experiment}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"specquad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"specquad: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
