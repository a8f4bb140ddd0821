"""Command-line front end.

Every command prints (or writes to ``--out``) one report whose envelope is
described by ``schemas/report.schema.json``. Exit status: 0 when a value was
computed or a verdict holds, 2 when a verdict fails, 1 on input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._json import jsonable, number
from .curvature import check_pathwise, check_tcd_infty, check_tcde, check_tmcp
from .distortion import DEFAULT_STEPS, Potential, sigma, tau
from .errors import CausalOTError, InputError
from .inequalities import (bishop_gromov, bonnet_myers_diameter, brunn_minkowski, hawking_check,
                           hawking_threshold, schneider, schneider_check)
from .io import (flatten, read_index_set, read_json, read_kappa, read_measure, read_plan, read_spacetime,
                 read_weights, spacetime_meta, write_csv, write_json, write_spacetime)
from .localization import (check_ray, decompose, distance_potential, localize_mean_zero, segment_inequality)
from .spacetime import generate, verify_axioms
from .transport import kantorovich_dual_l1, lp_geodesic, solve_lp

EXIT_OK, EXIT_INPUT, EXIT_VIOLATED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are input errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return parse


def _dimension(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("N must be a number") from None
    if not v > 1:
        raise argparse.ArgumentTypeError("N must exceed 1")
    return v


def _exponent(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("p must be a number") from None
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("p must lie in (0, 1]")
    return v


def _unit(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("t must be a number") from None
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError("t must lie in [0, 1]")
    return v


# --- command handlers ----------------------------------------------------------
# Each returns (report dict, verdict or None, {table name: (header, rows)}).


def _load(args):
    return read_spacetime(args.spacetime, model=args.model, separation=args.separation,
                          link_radius=args.link_radius)


def _k(args, st):
    return read_weights(args.k_file, st.n, "k") if getattr(args, "k_file", None) else st.k


def cmd_spacetime_gen(args):
    config = read_json(args.config)
    try:
        st = generate(config)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CausalOTError):
            raise
        raise InputError(f"invalid model parameters ({exc})", args.config) from None
    out = Path(args.out or ".")
    paths = write_spacetime(st, out / "events.csv", spacetime_meta(st, config))
    report = {"model": st.model_tag, "n": st.n, "dim": st.dim, "files": [str(p) for p in paths]}
    return report, None, {}


def cmd_spacetime_verify(args):
    st = _load(args)
    rep = verify_axioms(st, args.tol, args.limit)
    report = {"n": st.n, "model": st.model_tag, "ok": rep.ok,
              "violations": {"diagonal": rep.diagonal, "antisymmetry": rep.antisymmetry,
                             "reverse_triangle": rep.reverse_triangle, "finiteness": rep.finiteness}}
    rows = [(kind, json.dumps(item)) for kind, item in rep.violations]
    return report, rep.ok, {"violations": (["kind", "witness"], rows)}


def cmd_ot_solve(args):
    st = _load(args)
    mu, nu = read_measure(args.mu, st.n), read_measure(args.nu, st.n)
    res = solve_lp(mu, nu, args.p, st)
    report = {"p": args.p, "value": number(res.value), "objective": number(res.objective),
              "feasible": res.coupling is not None}
    tables = {}
    if res.coupling is not None:
        tables["coupling"] = (["i", "j", "weight"], res.coupling.pairs())
    if args.dual:
        dual = kantorovich_dual_l1(mu, nu, np.union1d(mu.support, nu.support) if args.dual_domain is None
                                   else read_index_set(args.dual_domain, st.n), st)
        report["dual"] = {"value": dual.value, "primal": dual.primal}
        tables["potential"] = (["id", "u"], list(zip(dual.domain.tolist(), dual.values.tolist())))
    if args.geodesic:
        plan, _ = lp_geodesic(mu, nu, args.p, args.steps, st, args.geodesic_tol)
        report["plan"] = plan.to_dict()
    return report, None, tables


def _tcd_table(rep):
    lhs, rhs, mar = (np.atleast_2d(a) for a in (rep.lhs, rep.rhs, rep.margins))
    rows = []
    for a in range(mar.shape[0]):
        for c, t in enumerate(rep.stamps):
            rows.append((a, float(t), lhs[a, c], rhs[a, c], mar[a, c]))
    return ["atom", "t", "lhs", "rhs", "margin"], rows


def cmd_tcd_check(args):
    st = _load(args)
    k = _k(args, st)
    stamps = None if args.stamps is None else [float(s) for s in args.stamps.split(",")]
    if args.tmcp:
        if args.apex is None or args.mu0 is None:
            raise InputError("--tmcp needs --apex and --mu0")
        mu0 = read_measure(args.mu0, st.n)
        reports = [check_tmcp(mu0, args.apex, st, k, args.N, args.steps, args.direction, stamps, args.tol)]
    else:
        if args.plan is not None:
            plan = read_plan(args.plan, st)
        elif args.mu0 is not None and args.mu1 is not None:
            plan, _ = lp_geodesic(read_measure(args.mu0, st.n), read_measure(args.mu1, st.n), args.p,
                                  args.steps, st, args.geodesic_tol)
        else:
            raise InputError("give --plan, or --mu0 and --mu1")
        reports = [check_tcde(plan, st, k, args.N, stamps, args.tol)]
        if args.pathwise:
            reports.append(check_pathwise(plan, st, k, args.N, stamps, args.tol))
        if args.infty:
            reports.append(check_tcd_infty(plan, st, k, stamps, args.tol))
    verdict = all(r.verdict for r in reports)
    report = {"checks": [r.to_dict() for r in reports], "verdict": verdict}
    tables = {f"margins_{r.kind}": _tcd_table(r) for r in reports}
    return report, verdict, tables


def cmd_localize(args):
    st = _load(args)
    f = read_weights(args.f, st.n, "value")
    res = localize_mean_zero(f, st, args.tol)
    dec = res.decomposition
    k = _k(args, st)
    needles = [check_ray(st, dec, a, args.N, k, tol=args.needle_tol, steps=args.needle_steps)
               for a in range(len(dec.rays))]
    report = {"rays": dec.to_dict(), "ray_means": [float(x) for x in res.ray_means],
              "residual_mass": res.residual_mass, "transport_mass": dec.mass,
              "needles": [n.to_dict() for n in needles]}
    verdict = all(n.verdict for n in needles)
    rows = [(a, n.min_margin, n.comparison_min_margin, n.verdict) for a, n in enumerate(needles)]
    tables = {"margins": (["ray", "min_margin", "comparison_min_margin", "verdict"], rows)}
    if args.segment:
        if args.A is None or args.psi is None or args.K is None:
            raise InputError("--segment needs --A, --psi, --T, --delta and --K")
        V = read_index_set(args.A, st.n)
        sp = distance_potential(st, V)
        seg_dec = decompose(st, sp.domain, sp.u, args.tol)
        psi = read_weights(args.psi, st.n, "value")
        seg = segment_inequality(st, seg_dec, V, psi, args.T, args.delta, args.K, args.N, k)
        report["segment"] = {"lhs": seg.lhs, "rhs": seg.rhs, "factor": seg.factor,
                             "footpoint_mass": seg.footpoint_mass,
                             "curvature_bound_holds": seg.curvature_bound_holds, "verdict": seg.verdict}
        verdict = verdict and seg.verdict
    report["verdict"] = verdict
    return report, verdict, tables


def cmd_ineq(args):
    which = args.which
    tables = {}
    if which == "schneider":
        bound = schneider(args.R, args.beta, args.direction)
        if args.spacetime is None:
            return {"bound": bound}, None, {}
        st = _load(args)
        if args.o is None:
            raise InputError("--o is required with --spacetime")
        rep = schneider_check(st, args.o, args.R, args.beta, args.N, _k(args, st), args.direction, args.tol)
        return rep.to_dict(), rep.verdict, {}
    if which == "hawking":
        if args.spacetime is None:
            if args.K is None:
                raise InputError("--K is required without --spacetime")
            return {"threshold": hawking_threshold(args.K, args.N, args.T, args.delta, args.beta)}, None, {}
        st = _load(args)
        if args.V is None:
            raise InputError("--V is required with --spacetime")
        V = read_index_set(args.V, st.n)
        sp = distance_potential(st, V)
        dec = decompose(st, sp.domain, sp.u)
        rep = hawking_check(st, dec, V, _k(args, st), args.T, args.delta, args.beta, args.N, args.K, args.tol)
        return rep.to_dict(), rep.verdict, {}
    if args.spacetime is None:
        raise InputError(f"ineq {which} needs --spacetime")
    st = _load(args)
    k = _k(args, st)
    if which == "bm":
        if args.A0 is None or args.A1 is None:
            raise InputError("ineq bm needs --A0 and --A1")
        rep = brunn_minkowski(st, read_index_set(args.A0, st.n), read_index_set(args.A1, st.n), args.t, k,
                              args.N, args.sharp, args.tol)
    elif which == "bonnet":
        rep = bonnet_myers_diameter(st, k, args.N)
    else:
        if args.x is None or args.E is None or args.r is None or args.R is None:
            raise InputError("ineq bg needs --x, --E, --r and --R")
        rep, prof = bishop_gromov(st, args.x, read_index_set(args.E, st.n), args.r, args.R, k, args.N,
                                  args.bin_width, args.tol)
        tables["volume_profile"] = (["r", "v", "s", "model_integral"], prof.rows())
    return rep.to_dict(), rep.verdict, tables


def cmd_distort_sigma(args):
    if (args.kappa is None) == (args.kappa_file is None):
        raise InputError("give exactly one of --kappa and --kappa-file")
    if args.kappa is not None:
        p = Potential.constant(args.kappa, args.theta)
    else:
        r, kap = read_kappa(args.kappa_file)
        if abs(r[-1] - args.theta) > 1e-9 * max(1.0, args.theta):
            raise InputError(f"samples end at r = {r[-1]:g}, not at θ = {args.theta:g}", args.kappa_file)
        grid = np.linspace(0.0, args.theta, 2 * args.steps + 1)
        p = Potential(args.theta, np.interp(grid, r, kap))
    report = {"theta": args.theta, "t": args.t, "sigma": number(sigma(p, args.t, args.steps))}
    if args.N is not None:
        report["N"] = args.N
        report["sigma_over_N"] = number(sigma(p.scaled(1.0 / args.N), args.t, args.steps))
        report["tau"] = number(tau(p, args.t, args.N, args.steps))
    return report, None, {}


# --- parser --------------------------------------------------------------------


def _spacetime_args(p, required=True):
    p.add_argument("--spacetime", required=required, help="event CSV or JSON generation config")
    p.add_argument("--model", choices=("minkowski", "warped-sqrt", "custom"),
                   help="how to rebuild l (default: the file's header comment, else minkowski)")
    p.add_argument("--separation", help="i,j,l CSV for custom models (default: <events>.sep.csv)")
    p.add_argument("--link-radius", type=_positive("link radius"), help="link radius for warped-sqrt")
    p.add_argument("--k-file", help="CSV id,k overriding the k column")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="causal-ot", description="Causal optimal transport and curvature checks on finite spacetimes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json", help="report encoding (default json)")
    common.add_argument("--out", help="output directory for the report and tables (default: report to stdout)")
    sub = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    sp = sub.add_parser("spacetime", help="generate or verify spacetimes")
    spsub = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    gen = spsub.add_parser("gen", parents=[common], help="sample a model spacetime from a JSON config")
    gen.add_argument("--config", required=True, help="JSON with model, dim, n_samples, seed, box")
    gen.set_defaults(func=cmd_spacetime_gen)
    ver = spsub.add_parser("verify", parents=[common], help="check the axioms of l")
    _spacetime_args(ver)
    ver.add_argument("--tol", type=_positive("tol"), default=1e-12, help="relative slack (default 1e-12)")
    ver.add_argument("--limit", type=int, default=1000, help="violations listed per kind (default 1000)")
    ver.set_defaults(func=cmd_spacetime_verify)

    ot = sub.add_parser("ot", help="optimal transport")
    otsub = ot.add_subparsers(dest="action", required=True, parser_class=_Parser)
    solve = otsub.add_parser("solve", parents=[common], help="maximize Σ π l^p over causal couplings")
    _spacetime_args(solve)
    solve.add_argument("--p", type=_exponent, required=True, help="exponent in (0, 1]")
    solve.add_argument("--mu", required=True, help="CSV id,weight")
    solve.add_argument("--nu", required=True, help="CSV id,weight")
    solve.add_argument("--dual", action="store_true", help="also return the ℓ1 Kantorovich potential")
    solve.add_argument("--dual-domain", help="index set E for the potential (default: both supports)")
    solve.add_argument("--geodesic", action="store_true", help="lift the coupling to a plan of discrete geodesics")
    solve.add_argument("--steps", type=int, default=10, help="time stamps of the plan minus one (default 10)")
    solve.add_argument("--geodesic-tol", type=_positive("geodesic tol"), default=1e-6,
                       help="relative chain saturation tolerance (default 1e-6)")
    solve.set_defaults(func=cmd_ot_solve)

    tcd = sub.add_parser("tcd", help="curvature-dimension checks along plans")
    tcdsub = tcd.add_subparsers(dest="action", required=True, parser_class=_Parser)
    chk = tcdsub.add_parser("check", parents=[common], help="check TCD inequalities on a plan")
    _spacetime_args(chk)
    chk.add_argument("--plan", help="plan JSON (times, atoms with chain and weight)")
    chk.add_argument("--mu0", help="CSV id,weight; with --mu1 the plan is built by ot geodesic")
    chk.add_argument("--mu1", help="CSV id,weight")
    chk.add_argument("--p", type=_exponent, default=1.0, help="exponent for building the plan (default 1)")
    chk.add_argument("--steps", type=int, default=10, help="time stamps minus one when building a plan (default 10)")
    chk.add_argument("--geodesic-tol", type=_positive("geodesic tol"), default=1e-6,
                     help="relative chain saturation tolerance (default 1e-6)")
    chk.add_argument("--N", type=_dimension, required=True, help="dimension bound N > 1")
    chk.add_argument("--stamps", help="comma-separated stamps to check (default: all)")
    chk.add_argument("--pathwise", action="store_true", help="also run the per-atom density check")
    chk.add_argument("--infty", action="store_true", help="also run the entropy (N = ∞) check")
    chk.add_argument("--tmcp", action="store_true", help="measure contraction towards --apex instead")
    chk.add_argument("--apex", type=int, help="event the contraction ends at")
    chk.add_argument("--direction", choices=("future", "past"), default="future")
    chk.add_argument("--tol", type=_positive("tol"), default=1e-6, help="verdict tolerance (default 1e-6)")
    chk.set_defaults(func=cmd_tcd_check)

    loc = sub.add_parser("localize", parents=[common], help="needle decomposition of a mean-zero function")
    _spacetime_args(loc)
    loc.add_argument("--f", required=True, help="CSV id,value with Σ f m = 0")
    loc.add_argument("--N", type=_dimension, required=True, help="dimension bound N > 1")
    loc.add_argument("--tol", type=_positive("tol"), default=1e-9, help="mean-zero and relation tolerance (default 1e-9)")
    loc.add_argument("--needle-tol", type=_positive("needle tol"), default=1e-6,
                     help="needle check tolerance (default 1e-6)")
    loc.add_argument("--needle-steps", type=int, default=512, help="RK4 steps per needle solve (default 512)")
    loc.add_argument("--segment", action="store_true", help="also run the segment inequality")
    loc.add_argument("--A", help="index set anchoring the segment rays")
    loc.add_argument("--psi", help="CSV id,value, the integrand ψ ≥ 0")
    loc.add_argument("--T", type=_positive("T"), default=1.0, help="segment length (default 1)")
    loc.add_argument("--delta", type=_positive("delta"), default=1.0, help="reach margin δ (default 1)")
    loc.add_argument("--K", type=float, help="negative lower curvature bound")
    loc.set_defaults(func=cmd_localize)

    ineq = sub.add_parser("ineq", help="geometric inequalities and thresholds")
    isub = ineq.add_subparsers(dest="which", required=True, parser_class=_Parser)
    for name, text in (("bm", "Brunn-Minkowski"), ("bonnet", "Bonnet-Myers diameter"),
                       ("schneider", "Schneider diameter bound"), ("bg", "Bishop-Gromov volume ratio"),
                       ("hawking", "Hawking-type threshold")):
        q = isub.add_parser(name, parents=[common], help=text)
        _spacetime_args(q, required=False)
        q.add_argument("--N", type=_dimension, default=2.0, help="dimension bound N > 1 (default 2)")
        q.add_argument("--tol", type=_positive("tol"), default=1e-9, help="verdict tolerance (default 1e-9)")
        q.set_defaults(func=cmd_ineq)
        if name == "bm":
            q.add_argument("--A0", help="index set (CSV with id column or inline list)")
            q.add_argument("--A1", help="index set")
            q.add_argument("--t", type=_unit, default=0.5, help="interpolation time (default 0.5)")
            q.add_argument("--sharp", action="store_true", help="use τ coefficients")
        elif name == "schneider":
            q.add_argument("--R", type=_positive("R"), required=True)
            q.add_argument("--beta", type=_positive("beta"), required=True)
            q.add_argument("--o", type=int, help="reference event")
            q.add_argument("--direction", choices=("future", "past"), default="future")
        elif name == "bg":
            q.add_argument("--x", type=int, help="apex event")
            q.add_argument("--E", help="star-shaped index set")
            q.add_argument("--r", type=_positive("r"))
            q.add_argument("--R", type=_positive("R"))
            q.add_argument("--bin-width", type=_positive("bin width"), help="l-bin width (default R_x/max(8,√|E|))")
        elif name == "hawking":
            q.add_argument("--K", type=float, help="lower curvature bound K < 0")
            q.add_argument("--T", type=_positive("T"), required=True)
            q.add_argument("--delta", type=_positive("delta"), required=True)
            q.add_argument("--beta", type=_positive("beta"), required=True)
            q.add_argument("--V", help="achronal index set the rays start from")

    dist = sub.add_parser("distort", help="distortion coefficients")
    dsub = dist.add_subparsers(dest="action", required=True, parser_class=_Parser)
    sig = dsub.add_parser("sigma", parents=[common], help="σ_κ^(t)(θ), and τ with --N")
    sig.add_argument("--kappa", type=float, help="constant κ")
    sig.add_argument("--kappa-file", help="CSV r,kappa sampled on [0, θ]")
    sig.add_argument("--theta", type=_positive("theta"), required=True)
    sig.add_argument("--t", type=_unit, required=True)
    sig.add_argument("--N", type=_dimension, help="also report σ_{κ/N} and τ_{κ,N}")
    sig.add_argument("--steps", type=int, default=DEFAULT_STEPS, help=f"RK4 steps (default {DEFAULT_STEPS})")
    sig.set_defaults(func=cmd_distort_sigma)
    return parser


def _command_name(args) -> str:
    parts = [args.group]
    for attr in ("action", "which"):
        if getattr(args, attr, None):
            parts.append(getattr(args, attr))
    return " ".join(parts)


def _emit(args, envelope: dict, tables: dict) -> list[str]:
    envelope = jsonable(envelope)
    written = []
    if args.out:
        out = Path(args.out)
        for name, (header, rows) in tables.items():
            path = out / f"{name}.csv"
            write_csv(path, header, rows)
            written.append(str(path))
        envelope["artifacts"] = envelope.get("artifacts", []) + written
        if args.format == "json":
            write_json(out / "report.json", envelope)
        else:
            write_csv(out / "report.csv", ["key", "value"], flatten(envelope))
    else:
        if args.format == "json":
            sys.stdout.write(json.dumps(envelope, indent=2, sort_keys=True, allow_nan=False) + "\n")
        else:
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerows(flatten(envelope))
    return written


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help and --version
        return int(exc.code or 0)
    try:
        report, verdict, tables = args.func(args)
    except (CausalOTError, ValueError, IndexError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    envelope = {"command": _command_name(args), "version": __version__,
                "status": "violated" if verdict is False else "ok",
                "verdict": verdict, "report": report, "artifacts": report.pop("files", [])}
    try:
        _emit(args, envelope, tables)
    except OSError as exc:
        print(f"error: cannot write output ({exc})", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_VIOLATED if verdict is False else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
