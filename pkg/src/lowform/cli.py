"""Command-line front end: detection, reduction, solving, approximation.

Every command reads JSON inputs, writes a ``report.json`` plus a
``manifest.json`` (input digests, seed, tolerances, version, wall time) into
the output directory, and prints the report to stdout.  Reports are
deterministic per seed; manifests additionally record wall time.

Exit codes: 0 success, 2 parse/validation error, 3 infeasible or unbounded
domain, 4 solver non-convergence (a partial report is still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .approx import (
    CubatureConstructionError,
    build_cubature,
    choose_m,
    conditional_expectation_cubature,
    conditional_expectation_exact,
    l2_error,
    solve_Q,
    split_spectrum,
)
from .detection import (
    RankNotStabilizedError,
    SparseForm,
    detect_exact,
    detect_randomized,
    extract_sparse_form,
    verify_sparse_form,
)
from .generate import generate_instance
from .linalg import sym_eig
from .poly import Polynomial
from .polytope import (
    InfeasibleDomainError,
    Polytope,
    UnboundedDomainError,
    box_cut_loop,
    cut_loop,
    simplex_reduce,
)
from .solvers import (
    Hrep,
    InfeasibleRegionError,
    SolveOptions,
    UnboundedRegionError,
    minimize_ball,
    minimize_polytope,
    minimize_sphere,
)
from .sphere import lift_minimizer, reduce_sphere

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_NO_CONVERGENCE = 4


class CliInputError(ValueError):
    pass


# ----------------------------------------------------------------------
# JSON plumbing
# ----------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read JSON from {path}: {exc}") from exc


def _load_polynomial(path: str) -> Polynomial:
    data = _load_json(path)
    try:
        return Polynomial.from_json_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliInputError(f"{path} is not a valid polynomial file: {exc}") from exc


def _load_matrix(path: str) -> np.ndarray:
    data = _load_json(path)
    try:
        mat = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise CliInputError(f"{path} is not a numeric matrix: {exc}") from exc
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    return mat


def _load_sparse_form(path: str) -> SparseForm:
    data = _load_json(path)
    try:
        f = Polynomial.from_json_dict(data["f"])
        ell = np.asarray(data["ell"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliInputError(f"{path} is not a valid sparse-form file: {exc}") from exc
    if ell.ndim != 2 or ell.shape[1] != f.num_vars:
        raise CliInputError(f"{path}: ell shape {ell.shape} does not match f")
    return SparseForm(f=f, ell=ell)


def _dump(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _threads() -> int:
    raw = os.environ.get("LOWFORM_THREADS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise CliInputError(f"LOWFORM_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise CliInputError("LOWFORM_THREADS must be >= 1")
    return value


def _write_outputs(args, report: dict, inputs: list[str], started: float) -> None:
    threads = _threads()  # validate before any file is written
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "report.json")
    _dump(report_path, report)
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "inputs": {os.path.basename(p): _digest(p) for p in inputs},
        "seed": getattr(args, "seed", None),
        "tolerances": {
            "rank_tol": getattr(args, "rank_tol", None),
            "tol": getattr(args, "tol", None),
        },
        "threads": threads,
        "version": __version__,
        "wall_time_s": time.monotonic() - started,
    }
    _dump(os.path.join(args.out, "manifest.json"), manifest)
    print(json.dumps(_jsonable(report), indent=2, sort_keys=True))


def _solve_options(args) -> SolveOptions:
    return SolveOptions(
        starts=args.starts, max_iter=args.max_iter, tol=args.tol, seed=args.seed
    )


# ----------------------------------------------------------------------
# command implementations
# ----------------------------------------------------------------------


def _detect_report(h: Polynomial, args) -> dict:
    if args.method == "randomized":
        try:
            rep = detect_randomized(h, seed=args.seed, rank_tol=args.rank_tol)
        except RankNotStabilizedError:
            rep = detect_exact(h, rank_tol=args.rank_tol)
    else:
        rep = detect_exact(h, rank_tol=args.rank_tol)
    return {
        "m": rep.m,
        "basis": rep.basis,
        "spectrum": rep.spectrum,
        "method": rep.method,
        "samples_used": rep.samples_used,
        "rank_tol": rep.rank_tol,
    }


def cmd_detect(args) -> int:
    started = time.monotonic()
    h = _load_polynomial(args.input)
    report = _detect_report(h, args)
    _write_outputs(args, report, [args.input], started)
    return EXIT_OK


def cmd_extract(args) -> int:
    started = time.monotonic()
    h = _load_polynomial(args.input)
    rep = _load_json(args.report)
    try:
        basis = np.asarray(rep["basis"], dtype=float).reshape(h.num_vars, -1)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliInputError(f"{args.report} is not a detection report: {exc}") from exc
    sf = extract_sparse_form(h, basis)
    residual = verify_sparse_form(h, sf, num_points=200, seed=args.seed)
    report = {"f": sf.f.to_json_dict(), "ell": sf.ell, "residual": residual}
    _write_outputs(args, report, [args.input, args.report], started)
    return EXIT_OK


def cmd_reduce_sphere(args) -> int:
    started = time.monotonic()
    sf = _load_sparse_form(args.sparse)
    prob = reduce_sphere(sf)
    report = {"g": prob.g.to_json_dict(), "L": prob.L}
    _write_outputs(args, report, [args.sparse], started)
    return EXIT_OK


def cmd_reduce_polytope(args) -> int:
    started = time.monotonic()
    sf = _load_sparse_form(args.sparse)
    opts = _solve_options(args)
    inputs = [args.sparse]
    if args.preset == "simplex":
        result = simplex_reduce(sf, opts)
    elif args.preset == "box":
        result = box_cut_loop(sf, opts, tol=args.sep_tol)
    else:
        if not (args.A and args.b):
            raise CliInputError("general polytopes need --A and --b (or use --preset)")
        poly = Polytope(a=_load_matrix(args.A), b=np.asarray(_load_json(args.b), dtype=float))
        inputs += [args.A, args.b]
        result = cut_loop(sf, poly, opts, tol=args.sep_tol)
    report = {
        "rho": result.rho,
        "X_star": result.x_star,
        "cuts": [
            {"u": c.u, "rhs": c.rhs, "lambda": c.lam} for c in result.cuts.cuts
        ],
        "iterations": result.iterations,
        "converged": result.converged,
        "inner_values": result.inner_values,
        "witness": result.witness,
        "witness_gap": result.witness_gap,
    }
    _write_outputs(args, report, inputs, started)
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_solve(args) -> int:
    started = time.monotonic()
    p = _load_polynomial(args.objective)
    opts = _solve_options(args)
    inputs = [args.objective]
    if args.domain == "ball":
        res = minimize_ball(p, opts)
    elif args.domain == "sphere":
        res = minimize_sphere(p, opts, half=args.half)
    else:
        data = _load_json(args.domain)
        try:
            region = Hrep(
                a_ub=np.asarray(data.get("a_ub", []), dtype=float).reshape(-1, p.num_vars),
                b_ub=np.asarray(data.get("b_ub", []), dtype=float),
                lo=np.asarray(data["lo"], dtype=float),
                hi=np.asarray(data["hi"], dtype=float),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CliInputError(f"{args.domain} is not a valid region file: {exc}") from exc
        inputs.append(args.domain)
        res = minimize_polytope(p, region, opts)
    report = {
        "value": res.value,
        "point": res.point,
        "status": res.status,
        "iterations": res.iterations,
        "starts_used": res.starts_used,
    }
    _write_outputs(args, report, inputs, started)
    return EXIT_OK if res.status == "converged" else EXIT_NO_CONVERGENCE


def cmd_approx(args) -> int:
    started = time.monotonic()
    h = _load_polynomial(args.input)
    n = h.num_vars
    if n < 2:
        raise CliInputError("approx needs a polynomial in at least 2 variables")
    if args.m is not None:
        if not 1 <= args.m <= n - 1:
            raise CliInputError(f"--m must be in [1, {n - 1}], got {args.m}")
        m = args.m
    else:
        m = max(1, min(choose_m(h, threshold=args.m_threshold), n - 1))
    split = split_spectrum(h, m)
    path = args.path
    if path == "cubature":
        try:
            rule = build_cubature(n - m, args.degree or h.degree(), seed=args.seed)
            fhat = conditional_expectation_cubature(h, split, rule)
        except CubatureConstructionError:
            path = "exact"  # fall back when no rule reaches tolerance
            fhat = conditional_expectation_exact(h, split)
        except ValueError as exc:
            raise CliInputError(f"cubature path rejected: {exc}") from exc
    else:
        fhat = conditional_expectation_exact(h, split)
    opts = _solve_options(args)
    minimum = solve_Q(fhat, opts)
    err = l2_error(h, fhat, split, num_samples=args.l2_samples, seed=args.seed)
    report = {
        "m": m,
        "path": path,
        "fhat": fhat.poly.to_json_dict(),
        "split": {
            "ell": split.ell,
            "s": split.s,
            "eigenvalues_head": split.lambda_head,
            "eigenvalues_tail": split.lambda_tail,
        },
        "rho": minimum.rho,
        "rho_plus": minimum.rho_plus,
        "rho_minus": minimum.rho_minus,
        "point": minimum.point,
        "l2_error": {"value": err.value, "stderr": err.stderr},
    }
    _write_outputs(args, report, [args.input], started)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    started = time.monotonic()
    h = _load_polynomial(args.input)
    n = h.num_vars
    inputs = [args.input]
    opts = _solve_options(args)

    detect = _detect_report(h, args)
    m = detect["m"]
    sf = extract_sparse_form(h, np.asarray(detect["basis"], dtype=float).reshape(n, -1))
    residual = verify_sparse_form(h, sf, num_points=200, seed=args.seed)
    if detect["method"] == "exact":
        spectrum = np.asarray(detect["spectrum"], dtype=float)
    else:
        from .detection import moment_matrix

        spectrum = sym_eig(moment_matrix(h)).eigenvalues
    total = float(spectrum.sum())
    tail_ratio = float(spectrum[m:].sum()) / total if total > 0 else 0.0

    exact_route = (
        m < n and residual < args.route_residual_tol and tail_ratio < args.route_tail_tol
    )
    report = {
        "detect": detect,
        "residual": residual,
        "tail_ratio": tail_ratio,
        "route": None,
    }
    status = EXIT_OK
    if exact_route:
        if args.domain == "sphere":
            report["route"] = "exact/sphere"
            prob = reduce_sphere(sf)
            res = minimize_ball(prob.g, opts)
            x_star = lift_minimizer(prob, res.point)
            report["reduced"] = {"g": prob.g.to_json_dict(), "L": prob.L}
            report["rho"] = res.value
            report["y_star"] = res.point
            report["x_star"] = x_star
            report["h_at_x_star"] = h.evaluate(x_star)
            if res.status != "converged":
                status = EXIT_NO_CONVERGENCE
        else:
            report["route"] = f"exact/{args.domain}"
            if args.domain == "simplex":
                result = simplex_reduce(sf, opts)
            elif args.domain == "box":
                result = box_cut_loop(sf, opts)
            else:
                if not (args.A and args.b):
                    raise CliInputError("polytope domain needs --A and --b")
                poly = Polytope(
                    a=_load_matrix(args.A),
                    b=np.asarray(_load_json(args.b), dtype=float),
                )
                inputs += [args.A, args.b]
                result = cut_loop(sf, poly, opts)
            report["rho"] = result.rho
            report["X_star"] = result.x_star
            report["iterations"] = result.iterations
            report["converged"] = result.converged
            report["witness"] = result.witness
            if not result.converged:
                status = EXIT_NO_CONVERGENCE
    else:
        report["route"] = "approx"
        m_approx = max(1, min(m if 1 <= m < n else choose_m(h), n - 1))
        split = split_spectrum(h, m_approx)
        fhat = conditional_expectation_exact(h, split)
        minimum = solve_Q(fhat, opts)
        err = l2_error(h, fhat, split, num_samples=args.l2_samples, seed=args.seed)
        report["m_approx"] = m_approx
        report["fhat"] = fhat.poly.to_json_dict()
        report["rho"] = minimum.rho
        report["rho_plus"] = minimum.rho_plus
        report["rho_minus"] = minimum.rho_minus
        report["l2_error"] = {"value": err.value, "stderr": err.stderr}
    _write_outputs(args, report, inputs, started)
    return status


def cmd_gen(args) -> int:
    started = time.monotonic()
    if args.m > args.n or args.m < 0 or args.n < 1 or args.degree < 1:
        raise CliInputError(
            f"need 0 <= m <= n, n >= 1, degree >= 1; got n={args.n} m={args.m} degree={args.degree}"
        )
    inst = generate_instance(args.seed, args.n, args.m, args.degree, args.epsilon)
    os.makedirs(args.out, exist_ok=True)
    h_path = os.path.join(args.out, "h.json")
    _dump(h_path, inst.h.to_json_dict())
    truth = {
        "f0": inst.f0.to_json_dict(),
        "ell0": inst.ell0,
        "g0": inst.g0.to_json_dict() if inst.g0 is not None else None,
        "epsilon": inst.epsilon,
        "n": inst.n,
        "m": inst.m,
        "degree": inst.degree,
        "seed": inst.seed,
    }
    _dump(os.path.join(args.out, "truth.json"), truth)
    report = {"h_file": "h.json", "truth_file": "truth.json", **{k: truth[k] for k in ("n", "m", "degree", "epsilon", "seed")}}
    _write_outputs(args, report, [h_path], started)
    return EXIT_OK


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lowform",
        description="Detect and exploit few-linear-forms structure in polynomials.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--rank-tol", type=float, default=1e-8)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--out", default=".")
    common.add_argument("--starts", type=int, default=32)
    common.add_argument("--max-iter", type=int, default=500)

    p = sub.add_parser("detect", parents=[common], help="detect sparse structure")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["exact", "randomized"], default="exact")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("extract", parents=[common], help="extract f from a detection report")
    p.add_argument("--input", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("reduce-sphere", parents=[common], help="build the reduced ball problem")
    p.add_argument("--sparse", required=True)
    p.set_defaults(func=cmd_reduce_sphere)

    p = sub.add_parser("reduce-polytope", parents=[common], help="cut-generation reduction")
    p.add_argument("--sparse", required=True)
    p.add_argument("--A")
    p.add_argument("--b")
    p.add_argument("--preset", choices=["simplex", "box"])
    p.add_argument("--sep-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_reduce_polytope)

    p = sub.add_parser("solve", parents=[common], help="minimize a polynomial on a domain")
    p.add_argument("--objective", required=True)
    p.add_argument("--domain", required=True, help="ball | sphere | region.json")
    p.add_argument("--half", choices=["none", "y_nonneg", "y_nonpos"], default="none")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("approx", parents=[common], help="conditional-expectation surrogate")
    p.add_argument("--input", required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--m-threshold", type=float, default=1e-2)
    p.add_argument("--path", choices=["exact", "cubature"], default="exact")
    p.add_argument("--degree", type=int)
    p.add_argument("--l2-samples", type=int, default=100_000)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("pipeline", parents=[common], help="detect, route, reduce, solve")
    p.add_argument("--input", required=True)
    p.add_argument("--domain", required=True, help="sphere | simplex | box | polytope")
    p.add_argument("--A")
    p.add_argument("--b")
    p.add_argument("--method", choices=["exact", "randomized"], default="exact")
    p.add_argument("--route-residual-tol", type=float, default=1e-8)
    p.add_argument("--route-tail-tol", type=float, default=1e-10)
    p.add_argument("--l2-samples", type=int, default=100_000)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("gen", parents=[common], help="generate a test instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InfeasibleDomainError, UnboundedDomainError,
            InfeasibleRegionError, UnboundedRegionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
