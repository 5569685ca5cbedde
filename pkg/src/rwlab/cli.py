"""Command line entry point ``rwlab``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bergman import KernelSeries, block_norm_equivalence, decomposition_for, kernel_eval, project_mode
from .classes import dcheck_search, dhat_profile
from .errors import RwlabError
from .grids import grid_from_min
from .muckenhoupt import ap_profile, mp_profile
from .operators import parse_profile
from .opnorm import opnorm_estimate
from .scenarios import Scenario, _clean, emit, profile_csv, run_scenario
from .weights import parse_weight, power_tail_weight


def _dump(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def cmd_classes(a):
    w = parse_weight(a.weight)
    grid = grid_from_min(a.grid_min, a.refinements)
    out = {"weight": w.to_spec(), "Dhat": dhat_profile(w, grid).to_dict(),
           "Dcheck": dcheck_search(w, grid=grid).to_dict()}
    return _dump(out), True


def _profile_cmd(kind):
    def run(a):
        omega, nu = parse_weight(a.omega), parse_weight(a.nu)
        grid = grid_from_min(a.grid_min, a.refinements)
        fn = ap_profile if kind == "ap" else mp_profile
        prof = fn(omega, nu, a.p, grid)
        if a.format == "csv":
            return profile_csv(prof.radii, prof.values, "A_p" if kind == "ap" else "M_p"), True
        d = prof.to_dict()
        d.update(omega=omega.to_spec(), nu=nu.to_spec(), p=a.p)
        return _dump(d), True
    return run


def cmd_opnorm(a):
    omega, nu = parse_weight(a.omega), parse_weight(a.nu)
    est = opnorm_estimate(a.op, omega, nu, a.p, n=a.grid, seed=a.seed)
    d = est.to_dict()
    d.update(omega=omega.to_spec(), nu=nu.to_spec(), p=a.p,
             note="lower_bound is realized by a test profile; heuristic_estimate is not an upper bound")
    return _dump(d), True


def cmd_kernel(a):
    w = parse_weight(a.weight)
    K = KernelSeries(w)
    u = complex(a.u.replace(" ", ""))
    vals, N, bnd = K.evaluate(np.array([u]), a.tol)
    d = {"weight": w.to_spec(), "u": [u.real, u.imag], "value": [vals[0].real, vals[0].imag],
         "terms": int(N[0]), "tail_bound": float(bnd[0])}
    return _dump(d), True


def cmd_project(a):
    w = parse_weight(a.weight)
    g = parse_profile(a.g)
    c = project_mode(w, g, a.mode)
    d = {"weight": w.to_spec(), "g": a.g, "mode": a.mode, "coefficient": c,
         "note": "negative modes project to 0" if a.mode < 0 else None}
    return _dump(d), True


def cmd_blocks(a):
    omega = parse_weight(a.omega)
    nu = power_tail_weight(omega, a.alpha)
    d = decomposition_for(omega, a.degree)
    rows = []
    for n, lo, hi in d.blocks:
        if lo > a.degree:
            break
        f = np.zeros(lo + 1)
        f[lo] = 1.0
        rows.append({"block": n, "lo": lo, "hi": hi,
                     "monomial_ratio": block_norm_equivalence(omega, nu, f, a.p, d)})
    ones = block_norm_equivalence(omega, nu, np.ones(a.degree + 1), a.p, d)
    out = {"omega": omega.to_spec(), "nu": nu.to_spec(), "p": a.p, "degree": a.degree,
           "decomposition": d.to_dict(), "blocks": rows, "all_ones_ratio": ones}
    return _dump(out), True


def cmd_verify(a):
    s = Scenario.load(a.scenario)
    rep = run_scenario(s)
    return emit(rep, a.format), rep.passed


def build_parser():
    ap = argparse.ArgumentParser(prog="rwlab", description="Radial weights, Muckenhoupt constants and Bergman projections.")
    sub = ap.add_subparsers(dest="command", required=True)

    def grid_args(p):
        p.add_argument("--grid-min", type=float, default=None, help="innermost radius, e.g. 0.99999999")
        p.add_argument("--refinements", type=int, default=3)

    p = sub.add_parser("classes", help="doubling diagnostics")
    p.add_argument("--weight", required=True)
    grid_args(p)
    p.set_defaults(fn=cmd_classes)

    for kind in ("ap", "mp"):
        p = sub.add_parser(kind, help=f"{kind.upper()} constant profile")
        p.add_argument("--omega", required=True)
        p.add_argument("--nu", required=True)
        p.add_argument("--p", type=float, required=True)
        grid_args(p)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.set_defaults(fn=_profile_cmd(kind))

    p = sub.add_parser("opnorm", help="operator norm lower bound and estimate")
    p.add_argument("--op", choices=("h", "hstar", "stieltjes", "maximal", "calderon"), required=True)
    p.add_argument("--omega", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--grid", type=int, default=256, help="number of nodes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(fn=cmd_opnorm)

    p = sub.add_parser("kernel", help="Bergman kernel value")
    p.add_argument("--weight", required=True)
    p.add_argument("--u", required=True, help="complex number, e.g. 0.5 or 0.3+0.2j")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(fn=cmd_kernel)

    p = sub.add_parser("project", help="projection coefficient of one Fourier mode")
    p.add_argument("--weight", required=True)
    p.add_argument("--mode", type=int, required=True)
    p.add_argument("--g", required=True, help="const:<v>, poly:<c0,c1,...> or table:<path.csv>")
    p.set_defaults(fn=cmd_project)

    p = sub.add_parser("blocks", help="dyadic blocks and norm-equivalence ratios")
    p.add_argument("--omega", required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--degree", type=int, required=True)
    p.set_defaults(fn=cmd_blocks)

    p = sub.add_parser("verify", help="run a scenario and write its report")
    p.add_argument("--scenario", required=True, help="TOML file or built-in name")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text, ok = args.fn(args)
    except (RwlabError, ValueError, IndexError, OSError) as exc:
        print(f"rwlab: error: {exc}", file=sys.stderr)
        return 2
    if getattr(args, "out", "-") not in (None, "-"):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader closed early (e.g. piped into head)
            sys.stderr.close()
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
