"""Command-line front end.

Reports are JSON documents tagged ``"schema": "ds3/1"``.  Lambda values and
objectives are expressed in the units of the matrix actually solved, i.e.
after normalization unless ``--no-normalize`` is given; ``scale_factor``
records the divisor.
"""

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from ds3 import regpath
from ds3.admm import SolverError, SolverSettings, solve
from ds3.matrix import MatrixFormatError, load_matrix, normalize, save_matrix
from ds3.outliers import (OUTLIER_LABEL_THRESHOLD, OutlierConfig,
                          solve_with_outliers)
from ds3.selection import extract_representatives, hard_assign, soft_assign
from ds3.testbed import gen_gaussian_mixture

SCHEMA = "ds3/1"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_NOT_CONVERGED = 4

log = logging.getLogger("ds3")


class InputError(Exception):
    pass


def _floats(values):
    return [float(x) for x in np.asarray(values).ravel()]


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, "
                                         "got %r" % text) from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, "
                                         "got %r" % text) from None


def _points(text):
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        xy = _float_list(chunk)
        if len(xy) != 2:
            raise argparse.ArgumentTypeError("each mean needs two coordinates, "
                                             "got %r" % chunk)
        pts.append(xy)
    if not pts:
        raise argparse.ArgumentTypeError("no means given")
    return pts


def _add_matrix_args(p):
    p.add_argument("--dissim", required=True, help="dissimilarity matrix file")
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.add_argument("--no-normalize", action="store_true",
                   help="solve on the raw matrix instead of dividing by its "
                        "largest absolute entry")


def _add_solver_args(p, lam=True):
    p.add_argument("--p", choices=("2", "inf"), default="inf")
    if lam:
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--lambda", dest="lam", type=float)
        g.add_argument("--alpha", type=float,
                       help="lambda as a fraction of lambda_max for --p")
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=100000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--emit-z", action="store_true")
    p.add_argument("--rep-threshold", type=float, default=0.01)
    p.add_argument("--out", help="write the JSON report here instead of "
                                 "stdout")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ds3", description="Dissimilarity-based sparse subset selection.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="select representatives")
    _add_matrix_args(p)
    _add_solver_args(p)

    p = sub.add_parser("lambda", help="print regularization thresholds")
    _add_matrix_args(p)
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="solve over a list of alpha values")
    _add_matrix_args(p)
    _add_solver_args(p, lam=False)
    p.add_argument("--alphas", type=_float_list,
                   default=[0.01, 0.05, 0.1, 0.5])

    p = sub.add_parser("outliers", help="select representatives and flag "
                                        "outlying targets")
    _add_matrix_args(p)
    _add_solver_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--w", type=float, help="constant outlier weight")
    g.add_argument("--beta", type=float,
                   help="adaptive weight scale (needs --tau)")
    p.add_argument("--tau", type=float)

    p = sub.add_parser("assign", help="assign targets to representatives")
    _add_matrix_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--reps", type=_int_list,
                   help="comma-separated representative indices")
    g.add_argument("--report", help="solve report to take representatives "
                                    "(and Z, for --soft) from")
    p.add_argument("--soft", action="store_true",
                   help="also emit the soft assignment (needs a report "
                        "written with --emit-z)")
    p.add_argument("--out")

    p = sub.add_parser("synth", help="generate a Gaussian-mixture scene")
    p.add_argument("--means", type=_points, required=True,
                   help="source means as x1,y1;x2,y2;...")
    p.add_argument("--target-means", type=_points,
                   help="target means; omit for identical source and target "
                        "sets")
    p.add_argument("--std", type=float, default=1.0)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True,
                   help="output prefix; writes PREFIX_dissim.csv, "
                        "PREFIX_points.csv and PREFIX_labels.csv")
    return parser


def _load(args):
    if not os.path.exists(args.dissim):
        raise InputError("no such file: %s" % args.dissim)
    try:
        D = load_matrix(args.dissim, args.format)
    except (MatrixFormatError, ValueError, UnicodeDecodeError) as exc:
        raise InputError("%s: %s" % (args.dissim, exc)) from None
    return D if args.no_normalize else normalize(D)


def _settings(args):
    try:
        return SolverSettings(mu=args.mu, eps=args.eps, max_iter=args.max_iter,
                              p=args.p, workers=args.threads)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _settings_echo(args):
    # worker count is deliberately left out: output must not depend on it
    return {"p": args.p, "mu": args.mu, "eps": args.eps,
            "max_iter": args.max_iter, "rep_threshold": args.rep_threshold,
            "normalize": not args.no_normalize}


def _lambda(args, D):
    lmax = regpath.lambda_max(D, args.p)
    if args.lam is not None:
        lam = args.lam
    else:
        lam = args.alpha * lmax.lambda_max
    if not lam >= 0 or not math.isfinite(lam):
        raise InputError("lambda must be a nonnegative number")
    return lam, lmax


def _solution_report(args, D, lam, lmax, Z, sol):
    reps = extract_representatives(Z, args.rep_threshold)
    report = {
        "schema": SCHEMA,
        "representatives": list(reps.indices),
        "row_norms": _floats(reps.row_norms),
        "assignment_hard": [int(i) for i in hard_assign(D, reps)],
        "outliers": None,
        "objective": float(sol.objective),
        "lambda_used": float(lam),
        "lambda_max": float(lmax.lambda_max),
        "l_star": int(lmax.l_star),
        "scale_factor": float(D.scale_factor),
        "iterations": int(sol.iterations),
        "converged": bool(sol.converged),
        "residual_final": [float(sol.state.error1), float(sol.state.error2)],
        "settings": _settings_echo(args),
    }
    if args.emit_z:
        report["Z"] = [_floats(row) for row in Z]
    return report


def _emit(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args):
    D = _load(args)
    lam, lmax = _lambda(args, D)
    sol = solve(D, lam, _settings(args))
    report = _solution_report(args, D, lam, lmax, sol.Z, sol)
    _emit(report, args.out)
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def cmd_lambda(args):
    D = _load(args)
    out = {"schema": SCHEMA, "scale_factor": float(D.scale_factor)}
    for p in ("2", "inf"):
        r = regpath.lambda_max(D, p)
        out["lambda_max_%s" % p] = r.lambda_max
        out["degenerate_%s" % p] = r.degenerate
        out["l_star"] = r.l_star
    try:
        out["lambda_min"] = regpath.lambda_min(D)
    except regpath.AssumptionError as exc:
        out["lambda_min"] = None
        out["lambda_min_note"] = str(exc)
    _emit(out, args.out)
    return EXIT_OK


def cmd_sweep(args):
    D = _load(args)
    if any(not a > 0 for a in args.alphas):
        raise InputError("alphas must be positive")
    results = regpath.sweep(D, args.p, args.alphas, _settings(args))
    lmax = regpath.lambda_max(D, args.p)
    reports, summary = [], []
    ok = True
    for alpha, lam, sol in results:
        rep = _solution_report(args, D, lam, lmax, sol.Z, sol)
        rep["alpha"] = alpha
        reports.append(rep)
        summary.append({"alpha": alpha,
                        "n_representatives": len(rep["representatives"]),
                        "objective": rep["objective"]})
        ok = ok and sol.converged
    sys.stderr.write("%10s %8s %16s\n" % ("alpha", "#reps", "objective"))
    for row in summary:
        sys.stderr.write("%10g %8d %16.8g\n" % (
            row["alpha"], row["n_representatives"], row["objective"]))
    _emit({"schema": SCHEMA, "reports": reports, "summary": summary},
          args.out)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_outliers(args):
    if args.w is None and (args.beta is None or args.tau is None):
        raise InputError("adaptive outlier weights need both --beta and --tau")
    if args.w is not None and args.tau is not None:
        raise InputError("--tau only applies with --beta")
    D = _load(args)
    lam, lmax = _lambda(args, D)
    try:
        config = (OutlierConfig(w=args.w) if args.w is not None
                  else OutlierConfig(beta=args.beta, tau=args.tau))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    sol = solve_with_outliers(D, lam, config, _settings(args))
    report = _solution_report(args, D, lam, lmax, sol.Z, sol)
    report["outliers"] = _floats(sol.e)
    report["outlier_labels"] = [bool(x) for x in sol.outlier_labels]
    report["outlier_threshold"] = OUTLIER_LABEL_THRESHOLD
    report["outlier_weights"] = _floats(sol.weights)
    report["settings"]["outlier_mode"] = (
        {"w": args.w} if args.w is not None
        else {"beta": args.beta, "tau": args.tau})
    _emit(report, args.out)
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def cmd_assign(args):
    D = _load(args)
    Z = None
    if args.report:
        try:
            with open(args.report, encoding="utf-8") as fh:
                doc = json.load(fh)
            reps = doc["representatives"]
            Z = doc.get("Z")
        except (OSError, ValueError, KeyError) as exc:
            raise InputError("cannot read report %s: %s"
                             % (args.report, exc)) from None
    else:
        reps = args.reps
    m = D.shape[0]
    if not reps or any(not 0 <= r < m for r in reps):
        raise InputError("representative indices must lie in [0, %d)" % m)
    try:
        hard = hard_assign(D, reps)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = {"schema": SCHEMA, "representatives": sorted(set(reps)),
           "assignment_hard": [int(i) for i in hard]}
    if args.soft:
        if Z is None:
            raise InputError("--soft needs a report written with --emit-z")
        Z = np.asarray(Z, dtype=np.float64)
        if Z.shape != D.shape:
            raise InputError("report Z has shape %r, matrix is %r"
                             % (Z.shape, D.shape))
        out["assignment_soft"] = [_floats(r) for r in soft_assign(Z, reps, D)]
    _emit(out, args.out)
    return EXIT_OK


def cmd_synth(args):
    if not args.std > 0 or args.count < 1:
        raise InputError("--std must be positive and --count at least 1")
    scene = gen_gaussian_mixture(args.means, args.count, args.std, args.seed,
                                 target_means=args.target_means)
    save_matrix(scene.dissimilarity(), args.out + "_dissim.csv")
    with open(args.out + "_points.csv", "w", encoding="utf-8") as fh:
        fh.write("role,index,x,y\n")
        for role, pts in (("source", scene.source_points),
                          ("target", scene.target_points)):
            for i, (x, y) in enumerate(pts):
                fh.write("%s,%d,%r,%r\n" % (role, i, float(x), float(y)))
    with open(args.out + "_labels.csv", "w", encoding="utf-8") as fh:
        fh.write("role,index,label\n")
        for role, labels in (("source", scene.labels_x),
                             ("target", scene.labels_y)):
            for i, lab in enumerate(labels):
                fh.write("%s,%d,%d\n" % (role, i, int(lab)))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "lambda": cmd_lambda,
    "sweep": cmd_sweep,
    "outliers": cmd_outliers,
    "assign": cmd_assign,
    "synth": cmd_synth,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        sys.stderr.write("ds3 %s: error: %s\n" % (args.command, exc))
        return EXIT_INPUT
    except SolverError as exc:
        sys.stderr.write("ds3 %s: numeric failure: %s\n" % (args.command, exc))
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
