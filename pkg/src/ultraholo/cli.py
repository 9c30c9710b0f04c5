"""Command-line entry point: ultraholo <subcommand> [options]."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import checks
from . import extension as ext
from . import flatkernel as fk
from . import weightseq as ws
from .conjugate import lower_star, phi_star, upper_star
from .errors import UltraholoError
from .indices import check_index_identities, gamma_fn, gamma_seq
from .weightfn import UpperStarOf, diagnostics, parse_spec
from .wmatrix import WeightMatrix, check_absorption, check_mg_across_levels, matrix_equivalence

EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR = 0, 1, 2


def _emit(text: str, args, name: str):
    """Write to --out/name when --out is set, else to stdout."""
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _emit_json(obj, args, name: str):
    _emit(json.dumps(checks._jsonable(obj), indent=2, ensure_ascii=False) + "\n", args, name)


def _grid(lo, hi, n):
    return np.logspace(math.log10(lo), math.log10(hi), n)


# ---------------------------------------------------------------------------
# subcommands

def _sequence(args):
    if args.file:
        text = Path(args.file).read_text(encoding="utf-8")
        return ws.from_json(text) if args.file.endswith(".json") else ws.from_csv(text, Path(args.file).stem)
    if args.pathological:
        return ws.pathological_sequence(P=args.horizon or 1440)
    return ws.gevrey(args.gevrey, args.horizon or 200)


def cmd_seq(args):
    M = _sequence(args)
    if args.predicates:
        for pid in ("lc", "slc", "mg", "gamma1", "beta1"):
            rep = ws.predicate(M, pid)
            where = "" if rep.index is None else f" at p={rep.index}"
            print(f"{pid:7s} {rep.verdict}{where}")
    if args.compare:
        other = ws.gevrey(float(args.compare), M.horizon)
        print(f"relation to gevrey({args.compare}): {ws.relation(M, other).verdict}")
    if args.out or not args.predicates:
        _emit(ws.to_csv(M), args, "sequence.csv")
    return EXIT_OK


def cmd_weight(args):
    omega = parse_spec(args.weight, args.horizon)
    t = _grid(args.tmin, args.tmax, args.n)
    w = omega.eval(t)
    _emit(checks.rows_to_csv([{"t": a, "omega": b} for a, b in zip(t, w)]), args, "weight.csv")
    if args.diagnose:
        verdicts = diagnostics(omega).verdicts
        print(json.dumps(verdicts), file=sys.stderr)
    return EXIT_OK


def cmd_conj(args):
    omega = parse_spec(args.weight, args.horizon)
    rows = []
    star = UpperStarOf(omega)
    for t in _grid(args.tmin, args.tmax, args.n):
        t = float(t)
        w = float(omega.eval(t))
        # (w*)_star is the least concave majorant: equal to w for concave w
        recovered = lower_star(star, t)
        rows.append({
            "t": t,
            "omega": w,
            "phi_star(t)": phi_star(omega, t) if args.phi else "",
            "upper_star(t)": upper_star(omega, t),
            "lower_star_of_upper_star(t)": recovered,
            "residual": recovered - w,
        })
    _emit(checks.rows_to_csv(rows), args, "conj.csv")
    return EXIT_OK


def cmd_matrix(args):
    omega = parse_spec(args.weight, args.horizon)
    levels = [float(v) for v in args.levels.split(",")]
    P = args.horizon or 60
    mat = WeightMatrix(omega, grid=levels, P=P)
    rows = []
    for p in range(P + 1):
        rows.append({"p": p, **{f"log W^{x:g}": float(mat.level(x, P).log_terms[p]) for x in levels}})
    _emit(checks.rows_to_csv(rows), args, "matrix.csv")
    status = EXIT_OK
    report = {}
    if args.mg:
        for l in levels:
            fit = check_mg_across_levels(mat, l, min(P, 60))
            report[f"mg l={l:g}"] = fit.summary()
            if not fit.passed:
                status = EXIT_CHECK_FAILED
    if args.absorption:
        report["absorption"] = check_absorption(mat, args.absorption, levels[0], P).summary()
    if args.equiv_to:
        other = WeightMatrix(parse_spec(args.equiv_to, args.horizon), grid=levels, P=P)
        rel = matrix_equivalence(mat, other)
        report["equivalence"] = {"verdict": rel.verdict, "forward": rel.forward, "backward": rel.backward}
    if report:
        _emit_json(report, args, "matrix-report.json") if args.out else print(
            json.dumps(checks._jsonable(report), ensure_ascii=False), file=sys.stderr)
    return status


def cmd_index(args):
    if args.gevrey is not None:
        target = ws.gevrey(args.gevrey, args.horizon or 400)
        est = gamma_seq(target)
    else:
        target = parse_spec(args.weight, args.horizon)
        est = gamma_fn(target)
    out = {"value": est.value, "method": est.method, "stability": est.stability}
    if args.identities:
        out["identities"] = check_index_identities(target)
    _emit_json(out, args, "index.json")
    return EXIT_OK


def cmd_flat(args):
    tau = parse_spec(args.weight, args.horizon)
    model = fk.build_model(tau, args.gamma, args.a)
    rays = fk.default_rays(model.gamma, args.rays)
    radii = fk.default_radii(args.radii)
    rows = []
    for th in rays:
        lg = fk.log_G(model, radii, np.full(radii.shape, th))
        rows += [{"theta": float(th), "r": float(r), "log_abs_G": float(v.real), "arg_G": float(v.imag)}
                 for r, v in zip(radii, lg)]
    _emit(checks.rows_to_csv(rows), args, "flat.csv")
    fit = fk.verify_flat_sandwich(model, rays, radii)
    report = {"model": model.to_dict(), "sandwich": {**fit.summary(), "details": fit.details}}
    if args.moments:
        mfit = fk.verify_moment_sandwich(model, args.moments, fit)
        report["moments"] = {**mfit.summary(), "details": mfit.details}
    if args.out:
        _emit_json(report, args, "flat-report.json")
    else:
        print(json.dumps(checks._jsonable(report["sandwich"]), ensure_ascii=False), file=sys.stderr)
    return EXIT_OK


def cmd_extend(args):
    job = json.loads(Path(args.job).read_text(encoding="utf-8"))
    if job.get("version", 1) != 1:
        raise ValueError(f"unsupported job version {job['version']}")
    if args.precision:
        job["precision"] = args.precision
    model, _ = ext.run_job(job, args.horizon)
    bits = int(job.get("precision", ext.DEFAULT_BITS))
    radii = np.logspace(-3, math.log10(model.R0), args.n)
    rays = ext.default_rays(model.flat.gamma, 3)
    rows = []
    for th in rays:
        z = radii * np.exp(1j * th)
        f = ext.eval_f(model, z, precision=bits)
        rows += [{"theta": float(th), "r": float(r), "re_f": float(v.real), "im_f": float(v.imag)}
                 for r, v in zip(radii, np.atleast_1d(f))]
    _emit(checks.rows_to_csv(rows), args, "interpolant.csv")
    rem = ext.remainder_check(model, precision=bits)
    bor = ext.borel_check(model, precision=bits)
    if args.out:
        _emit_json({**rem.summary(), "details": rem.details}, args, "remainder.json")
        _emit_json(bor, args, "borel.json")
    else:
        print(json.dumps(checks._jsonable({"remainder": rem.summary(), "borel_passed": bor["passed"]})),
              file=sys.stderr)
    return EXIT_OK if bor["passed"] else EXIT_CHECK_FAILED


def cmd_verify(args):
    if args.list:
        for c in checks.REGISTRY.values():
            print(f"{c.id:24s} {c.strategy:26s} [{c.topic}] {c.quote}")
        return EXIT_OK
    ids = "all" if args.all or not args.id else args.id
    kwargs = {"precision": args.precision or ext.DEFAULT_BITS, "seed": args.seed, "tol": args.tol}
    ctx = checks.default_context(args.weight, args.horizon or 200, **kwargs)
    results = checks.run(ids, ctx)
    for r in results:
        print(checks.format_line(r))
    if args.out:
        path = checks.write_bundle(results, args.out, ctx, meta=not args.no_meta)
        print(f"report: {path}")
    return checks.exit_status(results)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--weight", default="power:0.5",
                        help="weight spec (power:0.5, logpower:2, gevrey:1, pathological) or JSON file")
    common.add_argument("--horizon", type=int, default=None, help="sequence horizon N")
    common.add_argument("--precision", type=int, default=None, help="extended precision in bits")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--tol", type=float, default=None, help="tolerance override for identity checks")
    common.add_argument("--no-meta", action="store_true", help="omit timestamps and timings")

    parser = argparse.ArgumentParser(prog="ultraholo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seq", parents=[common], help="build and inspect weight sequences")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--gevrey", type=float, default=1.0)
    src.add_argument("--pathological", action="store_true")
    src.add_argument("--file")
    p.add_argument("--predicates", action="store_true")
    p.add_argument("--compare", help="Gevrey order to relate against")
    p.set_defaults(func=cmd_seq)

    p = sub.add_parser("weight", parents=[common], help="evaluate a weight function")
    p.add_argument("--tmin", type=float, default=1e-2)
    p.add_argument("--tmax", type=float, default=1e6)
    p.add_argument("-n", type=int, default=81)
    p.add_argument("--diagnose", action="store_true")
    p.set_defaults(func=cmd_weight)

    p = sub.add_parser("conj", parents=[common], help="Legendre conjugates and duality residuals")
    p.add_argument("--tmin", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=1e3)
    p.add_argument("-n", type=int, default=31)
    p.add_argument("--phi", action="store_true", help="also tabulate the Young conjugate")
    p.set_defaults(func=cmd_conj)

    p = sub.add_parser("matrix", parents=[common], help="weight matrices and their checks")
    p.add_argument("--levels", default="0.5,1,2")
    p.add_argument("--mg", action="store_true")
    p.add_argument("--absorption", type=float, default=None, metavar="H")
    p.add_argument("--equiv-to", default=None, metavar="SPEC")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("index", parents=[common], help="growth index estimates")
    p.add_argument("--gevrey", type=float, default=None, help="estimate gamma(M) of a Gevrey sequence")
    p.add_argument("--identities", action="store_true")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("flat", parents=[common], help="flat functions and sandwich fits")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--rays", type=int, default=5)
    p.add_argument("--radii", type=int, default=60)
    p.add_argument("--moments", type=int, default=0, metavar="P", help="also run the moment sandwich")
    p.set_defaults(func=cmd_flat)

    p = sub.add_parser("extend", parents=[common], help="extension operator from a job spec")
    p.add_argument("--job", required=True)
    p.add_argument("-n", type=int, default=25)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("verify", parents=[common], help="run the checks registry")
    p.add_argument("--all", action="store_true")
    p.add_argument("--id", action="append", help="check id (repeatable)")
    p.add_argument("--list", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UltraholoError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
