"""Command-line interface.

Exit codes: 0 success, 1 verification invariant violated, 2 input error,
3 numerical failure, 4 non-simple eigenpair.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from . import __version__
from .backward import backward_error_report, rayleigh_quotient
from .conditioning import check_norm, condition_report
from .errors import ConvergenceError, InputError, NepvError, NonSimpleError
from .experiments import (
    bifurcation_sweep,
    fmt,
    wilkinson_report,
    write_branch_csv,
    write_wilkinson_csv,
)
from .io import load_problem, read_vector, read_weights
from .model import Eigenpair, assemble_matrix
from .solvers import SolveOptions, newton_solve, scf_solve
from .spectral import TOL_EIGENPAIR
from .verify import monte_carlo_backward_check, monte_carlo_condition_check

log = logging.getLogger("nepvcond")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_NUMERIC, EXIT_NONSIMPLE = 0, 1, 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(rows, as_json: bool, out=None):
    out = out or sys.stdout
    if as_json:
        json.dump(rows, out, indent=2, default=float)
        out.write("\n")
    else:
        width = max(len(k) for k in rows)
        for k, x in rows.items():
            out.write(f"{k:<{width}}  {fmt(x) if isinstance(x, float) else x}\n")


def _load_pair(args):
    problem = load_problem(args.problem)
    v = read_vector(args.vector)
    if v.size != problem.n:
        raise InputError(f"vector has {v.size} entries, problem has n = {problem.n}")
    weights = read_weights(args.weights)
    return problem, v, weights


def _check_eigenpair(problem, lam, v):
    A = assemble_matrix(problem, v)
    r = np.linalg.norm(A @ v - lam * v)
    if r > TOL_EIGENPAIR * (np.linalg.norm(A, 2) + abs(lam)) * np.linalg.norm(v):
        raise InputError(f"(lambda, v) is not an eigenpair: residual {r:.3e}")


def cmd_cond(args) -> int:
    problem, v, weights = _load_pair(args)
    norm = check_norm(args.norm)
    _check_eigenpair(problem, args.lam, v)
    rep = condition_report(problem, args.lam, v, weights, "absolute" if args.absolute else "relative")
    if args.symmetric:
        kl = rep.kappa_lambda_sym_2 if norm == "2" else rep.kappa_lambda_sym_F
        kv = rep.kappa_v_sym_2 if norm == "2" else rep.kappa_v_sym_F
    else:
        kl, kv = rep.kappa_lambda, rep.kappa_v
    rows = {
        "class": "symmetric" if args.symmetric else "arbitrary",
        "norm": norm,
        "mode": "absolute" if args.absolute else "relative",
        "kappa_lambda": kl,
        "kappa_v": kv,
        "u_dot_v": rep.u_dot_v,
        "theta": rep.theta,
        "beta": rep.beta,
    }
    _emit(rows, args.json)
    return EXIT_OK


def cmd_backward(args) -> int:
    problem, v, weights = _load_pair(args)
    norm = check_norm(args.norm)
    if args.rayleigh:
        lam = rayleigh_quotient(problem, v)
    elif args.lam is None:
        raise InputError("--lambda is required unless --rayleigh is given")
    else:
        lam = args.lam
    rep = backward_error_report(problem, lam, v, weights)
    if args.symmetric:
        eta = rep.eta_sym_2 if norm == "2" else rep.eta_sym_F
    else:
        eta = rep.eta
    _emit({"class": "symmetric" if args.symmetric else "arbitrary", "norm": norm,
           "lambda": float(lam), "eta": eta, "vartheta": rep.vartheta, "gamma": rep.gamma}, False)
    return EXIT_OK


def _initial_vector(spec: str, n: int) -> np.ndarray:
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad random seed in {spec!r}") from None
        return np.random.default_rng(seed).standard_normal(n)
    v = read_vector(spec)
    if v.size != n:
        raise InputError(f"initial vector has {v.size} entries, problem has n = {n}")
    return v


def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    v0 = _initial_vector(args.v0, problem.n)
    opts = SolveOptions(max_iter=args.max_iter, tol_backward=args.tol)
    if args.method == "newton":
        lam0 = rayleigh_quotient(problem, v0) if args.lambda0 is None else args.lambda0
        res = newton_solve(problem, lam0, v0, opts)
        pair, iters = res.eigenpair, res.iterations
    else:
        selector = "smallest" if args.lambda0 is None else args.lambda0
        pair, iters = scf_solve(problem, v0, selector, opts), None
    rep = backward_error_report(problem, pair.lam, pair.v)
    rows = {"method": args.method, "lambda": pair.lam, "eta": rep.eta}
    if iters is not None:
        rows["iterations"] = iters
    _emit(rows, False)
    sys.stdout.write("v\n" + "".join(f"{fmt(x)}\n" for x in pair.v))
    return EXIT_OK


def _open_out(path):
    return open(path, "w", newline="") if path else None


def cmd_wilkinson(args) -> int:
    t = time.perf_counter()
    rows = wilkinson_report(args.n)
    log.info("wilkinson report in %.3f s", time.perf_counter() - t)
    out = _open_out(args.out)
    try:
        write_wilkinson_csv(rows, out or sys.stdout)
    finally:
        if out:
            out.close()
    return EXIT_OK


def cmd_bifurcation(args) -> int:
    t = time.perf_counter()
    data = bifurcation_sweep(args.delta_min, args.delta_max, args.steps)
    log.info("continuation in %.2f s, %d branches", time.perf_counter() - t, len(data.branches))
    out = _open_out(args.out)
    try:
        write_branch_csv(data, out or sys.stdout)
    finally:
        if out:
            out.close()
    for tp in data.turning_points:
        sys.stderr.write(f"turning point: delta={fmt(tp.delta)} lambda={fmt(tp.lam)} "
                         f"branch={tp.branch} partner={tp.partner}\n")
    for zc in data.zero_crossings:
        sys.stderr.write(f"zero eigenvalue: delta={fmt(zc.delta)} branch={zc.branch}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    problem, v, weights = _load_pair(args)
    _check_eigenpair(problem, args.lam, v)
    pair = Eigenpair.from_vector(problem, args.lam, v)
    symmetric = args.cls == "symmetric"
    ok = True
    rows = {"class": args.cls, "norm": check_norm(args.norm), "samples": args.samples, "seed": args.seed}
    for quantity in ("eigenvalue", "eigenvector"):
        rep = monte_carlo_condition_check(problem, pair, weights, symmetric, args.norm, args.samples,
                                          args.eps, args.seed, quantity, resolve=min(args.samples, 10))
        key = "lambda" if quantity == "eigenvalue" else "v"
        rows[f"kappa_{key}"] = rep.predicted_kappa
        rows[f"max_ratio_{key}"] = rep.max_ratio
        rows[f"attained_ratio_{key}"] = rep.attained_ratio
        rows[f"resolve_error_{key}"] = rep.resolve_error
        ok &= rep.holds()
    # backward error of a nearby approximate pair
    rng = np.random.default_rng([args.seed, args.samples])
    v_t = pair.v + args.eps * rng.standard_normal(problem.n)
    bw = monte_carlo_backward_check(problem, pair.lam, v_t, weights, symmetric, args.norm,
                                    args.samples, args.seed)
    rows["eta"] = bw.predicted_eta
    rows["min_sampled_eps"] = bw.min_eps
    ok &= bw.holds()
    rows["holds"] = "true" if ok else "false"
    _emit(rows, False)
    return EXIT_OK if ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nepvcond", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def pair_args(p, lam_required=True):
        p.add_argument("--problem", required=True, metavar="FILE", help="problem JSON file")
        p.add_argument("--lambda", dest="lam", type=float, required=lam_required, metavar="REAL")
        p.add_argument("--vector", required=True, metavar="FILE", help="one real per line")
        p.add_argument("--weights", default="relative", metavar="relative|unit|FILE")
        p.add_argument("--norm", default="2", choices=["2", "fro"])

    p = sub.add_parser("cond", help="condition numbers of an eigenpair")
    pair_args(p)
    p.add_argument("--symmetric", action="store_true", help="restrict to symmetric perturbations")
    p.add_argument("--absolute", action="store_true", help="absolute eigenvalue condition number")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cond)

    p = sub.add_parser("backward", help="backward error of an approximate eigenpair")
    pair_args(p, lam_required=False)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--rayleigh", action="store_true", help="use the Rayleigh quotient as lambda")
    p.set_defaults(func=cmd_backward)

    p = sub.add_parser("solve", help="compute an eigenpair")
    p.add_argument("--problem", required=True, metavar="FILE")
    p.add_argument("--method", default="newton", choices=["newton", "scf"])
    p.add_argument("--lambda0", type=float, metavar="REAL",
                   help="initial eigenvalue (newton) or target eigenvalue (scf)")
    p.add_argument("--v0", default="random:0", metavar="FILE|random:SEED")
    p.add_argument("--tol", type=float, default=1e-13, metavar="REAL", help="backward error tolerance")
    p.add_argument("--max-iter", type=int, default=100, metavar="N")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("wilkinson", help="condition of lambda = n for the Wilkinson family")
    p.add_argument("--n", type=_int_list, default=[2, 5, 10, 20, 30], metavar="N1,N2,...")
    p.add_argument("--out", metavar="FILE.csv")
    p.set_defaults(func=cmd_wilkinson)

    p = sub.add_parser("bifurcation", help="continuation sweep of the 3x3 bifurcation family")
    p.add_argument("--delta-min", type=float, default=-5.0)
    p.add_argument("--delta-max", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--out", metavar="FILE.csv")
    p.set_defaults(func=cmd_bifurcation)

    p = sub.add_parser("verify", help="Monte-Carlo check of condition numbers and backward errors")
    pair_args(p)
    p.add_argument("--samples", type=int, required=True, metavar="N")
    p.add_argument("--eps", type=float, required=True, metavar="REAL")
    p.add_argument("--seed", type=int, required=True, metavar="N")
    p.add_argument("--class", dest="cls", default="arbitrary", choices=["arbitrary", "symmetric"])
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NonSimpleError as exc:
        log.error("%s", exc)
        return EXIT_NONSIMPLE
    except ConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except (NepvError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
