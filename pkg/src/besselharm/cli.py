"""Command-line interface: evaluate kernels, transform sampled functions,
compute square/maximal functionals, run experiments, re-render reports.

Exit codes: 0 success / all-pass, 1 experiment or report failure, 2 usage or
configuration error.  Numeric output is printed with full round-trip
precision (repr).  Input/output files use the corpus columnar format
(node1 node2 value per line).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

USAGE_ERROR = 2
FAILURE = 1


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="besselharm",
        description="Numerical toolkit for product harmonic analysis on the weighted half-line",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="evaluate a kernel at a point")
    k.add_argument("--kind", required=True,
                   choices=["poisson", "conj_poisson", "heat", "dt_poisson", "dx_poisson",
                            "t_dt_poisson", "dt_heat", "psi", "triangle"])
    k.add_argument("--lambda", dest="lam", type=float, required=True)
    k.add_argument("--t", type=float, default=None)
    k.add_argument("--x", type=float, required=True)
    k.add_argument("--y", type=float, required=True)
    k.add_argument("--z", type=float, default=None, help="third side for the triangle density")

    t = sub.add_parser("transform", help="apply an operator to a sampled 2D function file")
    t.add_argument("--op", required=True,
                   choices=["identity", "poisson", "heat", "conj_poisson", "riesz", "hankel"])
    t.add_argument("--lambda", dest="lam", type=float, required=True)
    t.add_argument("--t", type=float, default=1.0)
    t.add_argument("--axis", choices=["both", "1", "2"], default="both")
    t.add_argument("--input", required=True)
    t.add_argument("--output", required=True)

    lp = sub.add_parser("lp", help="compute a Littlewood-Paley functional of a 2D function file")
    lp.add_argument("--func", required=True, choices=["g", "S", "S_u", "S_d"])
    lp.add_argument("--lambda", dest="lam", type=float, required=True)
    lp.add_argument("--semigroup", choices=["poisson", "heat"], default="poisson")
    lp.add_argument("--k-min", type=int, default=-6)
    lp.add_argument("--k-max", type=int, default=6)
    lp.add_argument("--subsamples", type=int, default=2)
    lp.add_argument("--aperture", type=float, default=1.0)
    lp.add_argument("--input", required=True)
    lp.add_argument("--output", required=True)

    mx = sub.add_parser("maximal", help="compute a maximal function of a 2D function file")
    mx.add_argument("--func", required=True, choices=["R_P", "N_P", "R_h", "N_h", "M_S", "M1", "M2"])
    mx.add_argument("--lambda", dest="lam", type=float, required=True)
    mx.add_argument("--k-min", type=int, default=-6)
    mx.add_argument("--k-max", type=int, default=6)
    mx.add_argument("--subsamples", type=int, default=2)
    mx.add_argument("--aperture", type=float, default=1.0)
    mx.add_argument("--input", required=True)
    mx.add_argument("--output", required=True)

    ex = sub.add_parser("experiment", help="run a named experiment (E1..E7)")
    ex.add_argument("--id", required=True)
    ex.add_argument("--config", default=None, help="INI config file")
    ex.add_argument("--lambda", dest="lam", type=float, default=None)
    ex.add_argument("--p", dest="p_exp", type=float, default=None)
    ex.add_argument("--seed", type=int, default=None)
    ex.add_argument("--corpus-count", type=int, default=None)
    ex.add_argument("--grid-1d", dest="n_1d", type=int, default=None)
    ex.add_argument("--grid-2d", dest="n_2d", type=int, default=None)
    ex.add_argument("--k-min", type=int, default=None)
    ex.add_argument("--k-max", type=int, default=None)
    ex.add_argument("--subsamples", type=int, default=None)
    ex.add_argument("--output-dir", default=None)
    ex.add_argument("--threads", type=int, default=None)
    ex.add_argument("--plots", action="store_true", default=None)
    ex.add_argument("--sweep-lambda", dest="lambda_sweep", action="store_true", default=None)

    rp = sub.add_parser("report", help="re-render verdicts from report files")
    rp.add_argument("--dir", required=True)
    rp.add_argument("--id", default=None, help="restrict to one experiment id")
    return ap


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_kernel(args) -> int:
    from .geometry import BesselParam
    from .kernels import evaluate_kernel, triangle_density

    try:
        p = BesselParam(args.lam)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    if args.kind == "triangle":
        if args.z is None:
            print("error: kernel --kind triangle needs --z", file=sys.stderr)
            return USAGE_ERROR
        val = float(triangle_density(p, args.x, args.y, args.z))
        print(_fmt(val))
        print(f"# kind=triangle lambda={args.lam} rule=closed form (stable area)", file=sys.stderr)
        return 0
    if args.t is None:
        print("error: this kernel kind needs --t", file=sys.stderr)
        return USAGE_ERROR
    try:
        ev = evaluate_kernel(p, args.kind, args.t, args.x, args.y)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    print(_fmt(ev.value))
    print(f"# kind={ev.kind} lambda={args.lam} t={args.t} rule={ev.rule}", file=sys.stderr)
    return 0


def _load_2d(p, path):
    from .atoms import load_function

    try:
        return load_function(p, path)
    except FileNotFoundError:
        print(f"error: no such input file: {path}", file=sys.stderr)
        return None
    except ValueError as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return None


def cmd_transform(args) -> int:
    from .atoms import save_function
    from .geometry import BesselParam
    from . import operators as ops

    p = BesselParam(args.lam)
    f = _load_2d(p, args.input)
    if f is None:
        return USAGE_ERROR
    axes = {"both": (0, 1), "1": (0,), "2": (1,)}[args.axis]
    if args.op == "identity":
        out = f
    elif args.op == "riesz":
        out = f
        for ax in axes:
            out = ops.riesz_transform_2d(p, out, axis=ax).function
    elif args.op == "hankel":
        from .kernels import unit_bump_profile

        prof = unit_bump_profile(p)
        out = f
        for ax in axes:
            out = ops.apply_axis(p, "hankel", args.t, out, axis=ax, profile=prof)
    else:
        if args.t <= 0:
            print("error: --t must be positive", file=sys.stderr)
            return USAGE_ERROR
        out = f
        for ax in axes:
            out = ops.apply_axis(p, args.op, args.t, out, axis=ax)
    save_function(args.output, out)
    return 0


def cmd_lp(args) -> int:
    from .atoms import save_function
    from .geometry import BesselParam, DyadicConfig
    from .lp_analysis import (
        ScaleSet,
        area_function_S,
        area_function_Su,
        discrete_square_function,
        g_function,
    )

    p = BesselParam(args.lam)
    f = _load_2d(p, args.input)
    if f is None:
        return USAGE_ERROR
    try:
        scales = ScaleSet(args.k_min, args.k_max, args.subsamples, args.aperture)
        if args.func == "g":
            out = g_function(p, scales, f, args.semigroup)
        elif args.func == "S":
            out = area_function_S(p, scales, f, args.semigroup)
        elif args.func == "S_u":
            out = area_function_Su(p, scales, f)
        else:
            out = discrete_square_function(p, DyadicConfig(args.k_min, args.k_max), f)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    save_function(args.output, out)
    return 0


def cmd_maximal(args) -> int:
    from .atoms import save_function
    from .geometry import BesselParam
    from .lp_analysis import ScaleSet
    from .maximal import hl_maximal_axis, nontangential_maximal, radial_maximal, strong_maximal

    p = BesselParam(args.lam)
    f = _load_2d(p, args.input)
    if f is None:
        return USAGE_ERROR
    try:
        scales = ScaleSet(args.k_min, args.k_max, args.subsamples, args.aperture)
        if args.func == "M_S":
            out = strong_maximal(p, f)
        elif args.func in ("M1", "M2"):
            out = hl_maximal_axis(p, f, axis=0 if args.func == "M1" else 1)
        else:
            semigroup = "poisson" if args.func.endswith("P") else "heat"
            if args.func.startswith("R"):
                out = radial_maximal(p, scales, f, semigroup).values
            else:
                out = nontangential_maximal(p, scales, f, semigroup).values
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    save_function(args.output, out)
    return 0


def cmd_experiment(args) -> int:
    from .harness import EXPERIMENTS, config_from_ini, run_experiment

    if args.id not in EXPERIMENTS:
        print(f"error: unknown experiment id {args.id!r} (choose from {sorted(EXPERIMENTS)})",
              file=sys.stderr)
        return USAGE_ERROR
    overrides = {
        k: getattr(args, k)
        for k in ("lam", "p_exp", "seed", "corpus_count", "n_1d", "n_2d", "k_min",
                  "k_max", "subsamples", "output_dir", "threads", "plots", "lambda_sweep")
    }
    try:
        cfg = config_from_ini(args.config, **overrides)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return USAGE_ERROR
    rep = run_experiment(args.id, cfg)
    rep.write(cfg.output_dir)
    if cfg.plots:
        from .plots import write_plots

        write_plots(rep, cfg.output_dir)
    print(rep.summary_text(), end="")
    return 0 if rep.passed else FAILURE


def cmd_report(args) -> int:
    from .reporting import recompute_verdicts

    if not os.path.isdir(args.dir):
        print(f"error: no such report directory: {args.dir}", file=sys.stderr)
        return USAGE_ERROR
    summaries = sorted(
        f for f in os.listdir(args.dir)
        if f.endswith("_summary.txt") and (args.id is None or f.startswith(args.id))
    )
    if not summaries:
        print("error: no summaries found", file=sys.stderr)
        return USAGE_ERROR
    all_ok = True
    for name in summaries:
        verdicts = recompute_verdicts(os.path.join(args.dir, name))
        ok = all(v.passed for v in verdicts)
        all_ok &= ok
        print(f"{name}: {'PASS' if ok else 'FAIL'} ({sum(v.passed for v in verdicts)}/{len(verdicts)})")
        for v in verdicts:
            if not v.passed:
                print("  " + v.line())
    return 0 if all_ok else FAILURE


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    handlers = {
        "kernel": cmd_kernel,
        "transform": cmd_transform,
        "lp": cmd_lp,
        "maximal": cmd_maximal,
        "experiment": cmd_experiment,
        "report": cmd_report,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
