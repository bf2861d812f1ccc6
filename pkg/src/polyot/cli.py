"""Command line interface: solve, estimate-d, diagnose, generate.

Exit codes: 0 success, 1 input error, 2 degenerate weights, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import fileio
from .exceptions import (InstanceTooLarge, MaxBacktracks, NotCoprime,
                         PolyotError, ProblemFormatError, SingularHessian)
from .measure import evaluate_G
from .solvers import (CONVERGED, DEGENERATE, SolverConfig, compute_M0,
                      damped_newton, estimate_CL, gradient_descent_reg,
                      report_bounds, two_stage)
from .subsetsum import approx_d, exact_d, rational_lower_bound, resolve_separation
from .diagnostics import fitted_order, hausdorff_cells, symmetric_difference_mu

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGENERATE = 2
EXIT_SOLVER = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyot",
        description="semi-discrete optimal transport on disconnected polygonal domains")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the two-stage solver on a problem file")
    p.add_argument("--problem", required=True)
    p.add_argument("--tol", type=float, required=True)
    p.add_argument("--out", default=None, help="result JSON path")
    p.add_argument("--log", default=None, help="iteration log CSV path")
    p.add_argument("--svg", default=None, help="cell plot SVG path")
    p.add_argument("--cl", type=float, default=None,
                   help="override the Lipschitz constant of G")
    p.add_argument("--max-iters", type=int, default=50000)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--newton-only", action="store_true")
    mode.add_argument("--gd-only", action="store_true")

    p = sub.add_parser("estimate-d", help="estimate the weight separation constant")
    p.add_argument("--problem", required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--rational", nargs=2, type=int, metavar=("N", "M"), default=None)

    p = sub.add_parser("diagnose", help="compare the cells of two price vectors")
    p.add_argument("--problem", required=True)
    p.add_argument("--psi-a", required=True, help="result file of the first prices")
    p.add_argument("--psi-b", required=True, help="result file of the reference prices")

    p = sub.add_parser("generate", help="write a built-in problem instance")
    p.add_argument("--case", required=True,
                   choices=["two-squares", "one-square", "three-components"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def _random_sites(rng, boxes, counts, min_sep=0.05):
    while True:
        pts = []
        for (x0, y0, x1, y1), k in zip(boxes, counts):
            mx = 0.1 * (x1 - x0)
            my = 0.1 * (y1 - y0)
            pts.append(np.column_stack([rng.uniform(x0 + mx, x1 - mx, k),
                                        rng.uniform(y0 + my, y1 - my, k)]))
        pts = np.vstack(pts)
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        if d2.min() >= min_sep ** 2:
            return pts


def _random_weights(rng, n, chi, floor=1e-3):
    while True:
        w = rng.dirichlet(np.ones(n))
        if exact_d(w, chi).value > floor:
            return w


def generate_problem(case: str, n: int, seed: int) -> dict:
    """Built-in instances; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    square = lambda x0, y0: [[x0, y0], [x0 + 1.0, y0], [x0 + 1.0, y0 + 1.0], [x0, y0 + 1.0]]
    if case == "one-square":
        comps = [(square(0.0, 0.0), 1.0)]
        chi = np.array([1.0])
        if n == 2:
            pts = np.array([[0.25, 0.5], [0.75, 0.5]])
            w = np.array([0.5, 0.5])
        else:
            pts = _random_sites(rng, [(0.0, 0.0, 1.0, 1.0)], [n])
            w = _random_weights(rng, n, chi)
    elif case == "two-squares":
        comps = [(square(0.0, 0.0), 0.5), (square(2.0, 0.0), 0.5)]
        chi = np.array([0.5, 0.5])
        counts = [n - n // 2, n // 2]
        pts = _random_sites(rng, [(0, 0, 1, 1), (2, 0, 3, 1)], counts)
        w = _random_weights(rng, n, chi)
    elif case == "three-components":
        comps = [(square(0.0, 0.0), 1 / 3), (square(2.0, 0.0), 1 / 3),
                 (square(4.0, 0.0), 1 / 3)]
        chi = np.full(3, 1 / 3)
        counts = [(n + 2) // 3, (n + 1) // 3, n // 3]
        pts = _random_sites(rng, [(0, 0, 1, 1), (2, 0, 3, 1), (4, 0, 5, 1)], counts)
        w = _random_weights(rng, n, chi)
    else:
        raise ValueError(f"unknown case {case!r}")
    return fileio.problem_to_dict(comps, pts, w)


def _cmd_solve(args) -> int:
    problem = fileio.load_problem(args.problem)
    domain, target = problem.domain, problem.target
    n = len(target)
    sep = resolve_separation(target.weights, domain.chi)
    cfg = SolverConfig(tol_final=args.tol, d_lambda=sep, lipschitz_CL=args.cl,
                       max_outer_iters=args.max_iters)

    try:
        if args.newton_only:
            t0 = time.perf_counter()
            report = damped_newton(domain, target, np.zeros(n), args.tol, cfg)
            report.stage_seconds = {2: time.perf_counter() - t0}
            report.constants_used.update({"d_lambda": sep.value,
                                          "d_lambda_mode": sep.mode})
        elif args.gd_only:
            d = sep.conservative_value
            if d <= 0.0:
                report = two_stage(domain, target, cfg)  # yields the degenerate report
            else:
                m0 = compute_M0(domain, target)
                cl = args.cl if args.cl is not None else estimate_CL(domain, target)
                gamma = d / (8.0 * m0 * np.sqrt(n))
                h = 2.0 / (cl + 2.0 * gamma)
                t0 = time.perf_counter()
                report = gradient_descent_reg(domain, target, np.zeros(n),
                                              args.tol, gamma, h, cfg)
                report.stage_seconds = {1: time.perf_counter() - t0}
                report.constants_used.update({"M0": m0, "CL": cl, "gamma": gamma,
                                              "h": h, "d_lambda": sep.value,
                                              "d_lambda_mode": sep.mode})
        else:
            report = two_stage(domain, target, cfg)
    except (SingularHessian, MaxBacktracks) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    diagram = evaluate_G(domain, target, report.final_psi)
    if args.out:
        fileio.write_json(args.out, fileio.result_to_dict(report, diagram))
    if args.log:
        fileio.write_iteration_log(args.log, report)
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(fileio.render_svg(diagram) + "\n")

    print(f"status={report.status} residual={report.final_residual:.6e} "
          f"iterations={len(report.iterates)}")
    if len(report.stage_iterates(2)) >= 3:
        errs = [r.grad_norm for r in report.stage_iterates(2)]
        print(f"stage-2 fitted local order: {fitted_order(errs):.2f}")
    if report.status == DEGENERATE:
        return EXIT_DEGENERATE
    if report.status != CONVERGED:
        print("solver failure: iteration cap reached; consider --max-iters",
              file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_estimate_d(args) -> int:
    problem = fileio.load_problem(args.problem)
    lam = problem.target.weights
    chi = problem.domain.chi
    if args.exact:
        try:
            result = exact_d(lam, chi)
        except InstanceTooLarge as exc:
            print(f"{exc}; drop --exact to use the approximation", file=sys.stderr)
            return EXIT_SOLVER
    elif args.eps is not None:
        result = approx_d(lam, chi, args.eps)
    else:
        result = resolve_separation(lam, chi)

    print(f"d_lambda = {result.value:.17g} (mode={result.mode})")
    if result.mode == "approximate":
        print(f"guaranteed range: [{max(result.value - result.eps, 0.0):.17g}, "
              f"{result.value:.17g}]  (eps={result.eps:g}, "
              f"max list size {result.max_list_size})")
    if result.witness is not None:
        i_set, j_set = result.witness
        print(f"witness: lambda indices {list(i_set)}, chi indices {list(j_set)}")
    if result.value == 0.0:
        print("warning: weights are degenerate (d_lambda = 0); "
              "solver guarantees are void")
    if args.rational is not None:
        bound = rational_lower_bound(*args.rational)
        print(f"rational lower bound: d_lambda >= {bound.value:.17g}")
    if problem.domain.pw_data is not None:
        cfg = SolverConfig(d_lambda=result)
        print(report_bounds(problem.domain, problem.target, cfg))
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    problem = fileio.load_problem(args.problem)
    domain, target = problem.domain, problem.target
    res_a = fileio.load_result(args.psi_a)
    res_b = fileio.load_result(args.psi_b)
    psi_a = np.asarray(res_a["psi"], dtype=float)
    psi_b = np.asarray(res_b["psi"], dtype=float)
    if len(psi_a) != len(target) or len(psi_b) != len(target):
        raise ProblemFormatError("price vectors do not match the problem's N")

    diag_a = evaluate_G(domain, target, psi_a)
    diag_b = evaluate_G(domain, target, psi_b)
    mu = symmetric_difference_mu(diag_a, diag_b, domain, target=target)
    haus = hausdorff_cells(diag_a, diag_b)

    print("cell  delta_mu        hausdorff")
    for i in range(len(target)):
        print(f"{i:>4d}  {mu.delta_mu[i]:.8e}  {haus.hausdorff[i]:.8e}")
    print(f"total delta_mu   = {mu.sum_delta_mu:.8e}")
    print(f"max hausdorff    = {haus.max_hausdorff:.8e}")
    print(f"bound 4N|grad|_1 = {mu.bound_rhs:.8e} (+ reference slack "
          f"{mu.reference_slack:.3e})")
    return EXIT_OK


def _cmd_generate(args) -> int:
    doc = generate_problem(args.case, args.n, args.seed)
    fileio.write_json(args.out, doc)
    print(f"wrote {args.case} instance with {args.n} sites to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"solve": _cmd_solve, "estimate-d": _cmd_estimate_d,
                "diagnose": _cmd_diagnose, "generate": _cmd_generate}
    try:
        return handlers[args.command](args)
    except (NotCoprime, ProblemFormatError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PolyotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
