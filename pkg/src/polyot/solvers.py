"""Dual maximization: damped Newton, regularized gradient ascent, and the
two-stage driver that chains them.

Stage 1 ascends the gamma-regularized functional with a fixed step until the
residual enters the Newton zone of radius d/(2 sqrt N) fixed by the weight
separation constant; stage 2 runs damped Newton with the halving line search
whose acceptance rule is |grad(psi_next)| <= (1 - 2^-(l+1)) |grad(psi)|.
All constants used are recorded in the report.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import MaxBacktracks, MissingPWData, SingularHessian
from .measure import SourceDomain, TargetMeasure, evaluate_DG, evaluate_G
from .subsetsum import SeparationResult, resolve_separation
from .validation import as_price_vector, canonical_prices

CONVERGED = "converged"
MAX_ITERS = "max_iters"
DEGENERATE = "degenerate"

# Hessian eigenvalues below this (beyond the constant-vector kernel) mean the
# facet graph has effectively disconnected: the iterate left the theory's zone.
SINGULAR_EIG_TOL = 1e-13


@dataclass
class SolverConfig:
    tol_final: float = 1e-8
    d_lambda: SeparationResult | None = None
    lipschitz_CL: float | None = None
    max_outer_iters: int = 50000
    max_backtracks: int = 40
    gamma_override: float | None = None
    zeta1_override: float | None = None
    h_override: float | None = None
    cl_samples: int = 16
    cl_seed: int = 0

    def __post_init__(self):
        if self.tol_final <= 0.0:
            raise ValueError("tol_final must be positive")
        if self.lipschitz_CL is not None and self.lipschitz_CL <= 0.0:
            raise ValueError("lipschitz_CL must be positive")


@dataclass
class IterateRecord:
    stage: int
    k: int
    psi: np.ndarray
    grad_norm: float
    backtrack_exponent: int | None
    cells_empty: int


@dataclass
class SolveReport:
    iterates: list = field(default_factory=list)
    final_psi: np.ndarray | None = None
    final_residual: float = math.inf
    constants_used: dict = field(default_factory=dict)
    status: str = MAX_ITERS
    stage_seconds: dict = field(default_factory=dict)

    def stage_iterates(self, stage: int):
        return [r for r in self.iterates if r.stage == stage]


def compute_M0(domain: SourceDomain, target: TargetMeasure) -> float:
    """Bound sqrt(N) * max_x (max_y c - min_y c) on zero-sum prices with no
    empty cell. The inner max-min is a maximum of affine functions of x, so
    it is evaluated exactly at the component vertices."""
    n = len(target)
    if n == 1:
        return 0.0
    verts = np.vstack([poly.vertices for poly, _ in domain.components])
    diff = verts[:, None, :] - target.points[None, :, :]
    costs = 0.5 * (diff ** 2).sum(axis=2)
    spread = costs.max(axis=1) - costs.min(axis=1)
    return math.sqrt(n) * float(spread.max())


def _spectral_norm(mat: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(mat)).max())


def estimate_CL(domain: SourceDomain, target: TargetMeasure,
                samples: int = 16, seed: int = 0) -> float:
    """Practical stand-in for the Lipschitz constant of G: twice the largest
    spectral norm of DG over psi = 0 and ``samples`` draws from the zero-sum
    box of radius M0. An estimate, not a certificate."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    m0 = compute_M0(domain, target)
    rng = np.random.default_rng(seed)
    n = len(target)
    trial_psis = [np.zeros(n)]
    for _ in range(samples):
        psi = rng.uniform(-m0, m0, size=n)
        trial_psis.append(psi - psi.mean())
    best = 0.0
    for psi in trial_psis:
        diagram = evaluate_G(domain, target, psi)
        best = max(best, _spectral_norm(evaluate_DG(diagram, target)))
    return 2.0 * best


def _newton_direction(dg: np.ndarray, grad: np.ndarray) -> np.ndarray:
    # DG kills the constant vector; pin that direction with a rank-one term
    # and solve on its orthogonal complement, reproducing the pseudoinverse.
    n = len(grad)
    eigs = np.sort(np.abs(np.linalg.eigvalsh(dg)))
    if eigs[1] < SINGULAR_EIG_TOL:
        raise SingularHessian(
            "transport Hessian is singular beyond its kernel; an empty cell "
            "has likely disconnected the facet graph outside the Newton zone")
    sigma = float(np.abs(dg).sum(axis=1).max())
    aug = dg - sigma * np.full((n, n), 1.0 / n)
    rhs = -(grad - grad.mean())
    step = np.linalg.solve(aug, rhs)
    return step - step.mean()


def damped_newton(domain: SourceDomain, target: TargetMeasure, psi0,
                  zeta: float, cfg: SolverConfig) -> SolveReport:
    """Damped Newton iteration on Phi, stopping at |grad Phi| < zeta.

    Each step takes the minimal halving exponent l whose trial iterate
    reduces the gradient norm by the factor (1 - 2^-(l+1)).
    """
    if zeta <= 0.0:
        raise ValueError("tolerance must be positive")
    psi = as_price_vector(psi0, n=len(target)).copy()
    w = target.weights
    diagram = evaluate_G(domain, target, psi)
    grad = diagram.masses - w
    gnorm = float(np.linalg.norm(grad))
    report = SolveReport(status=CONVERGED)
    report.iterates.append(IterateRecord(2, 0, psi.copy(), gnorm, None,
                                         len(diagram.empty_cells())))
    k = 0
    while gnorm >= zeta:
        if k >= cfg.max_outer_iters:
            report.status = MAX_ITERS
            break
        dg = evaluate_DG(diagram, target)
        step = _newton_direction(dg, grad)
        accepted = None
        for ell in range(cfg.max_backtracks + 1):
            trial = psi + (0.5 ** ell) * step
            trial_diagram = evaluate_G(domain, target, trial)
            trial_gnorm = float(np.linalg.norm(trial_diagram.masses - w))
            if trial_gnorm <= (1.0 - 0.5 ** (ell + 1)) * gnorm:
                accepted = ell
                break
        if accepted is None:
            raise MaxBacktracks(
                f"no acceptable Newton step within {cfg.max_backtracks} halvings "
                f"at iterate {k} (residual {gnorm:.3e})")
        psi, diagram, gnorm = trial, trial_diagram, trial_gnorm
        grad = diagram.masses - w
        k += 1
        report.iterates.append(IterateRecord(2, k, psi.copy(), gnorm, accepted,
                                             len(diagram.empty_cells())))
    report.final_psi = canonical_prices(psi)
    report.final_residual = gnorm
    return report


def gradient_descent_reg(domain: SourceDomain, target: TargetMeasure, psi0,
                         zeta: float, gamma: float, h: float,
                         cfg: SolverConfig) -> SolveReport:
    """Fixed-step ascent on the gamma-regularized functional.

    Iterates psi <- psi + h * (G(psi) - lambda - gamma psi) until the
    regularized gradient norm drops below zeta. Zero-sum prices stay zero-sum.
    """
    if zeta <= 0.0 or gamma <= 0.0 or h <= 0.0:
        raise ValueError("zeta, gamma and h must be positive")
    psi = as_price_vector(psi0, n=len(target)).copy()
    if abs(float(psi.sum())) > 1e-9 * max(1.0, float(np.abs(psi).max())):
        raise ValueError("stage-1 start must have zero price sum")
    w = target.weights
    report = SolveReport(status=CONVERGED)
    k = 0
    while True:
        diagram = evaluate_G(domain, target, psi)
        grad = diagram.masses - w - gamma * psi
        gnorm = float(np.linalg.norm(grad))
        report.iterates.append(IterateRecord(1, k, psi.copy(), gnorm, None,
                                             len(diagram.empty_cells())))
        if gnorm < zeta:
            break
        if k >= cfg.max_outer_iters:
            report.status = MAX_ITERS
            break
        if k >= 2:
            # psi returning to its position two steps ago is a fixed-step
            # 2-cycle (step too large for the local curvature); burning the
            # rest of the budget cannot help
            wobble = float(np.abs(psi - report.iterates[k - 2].psi).max())
            if wobble <= 1e-10 * (1.0 + float(np.abs(psi).max())):
                report.status = MAX_ITERS
                break
        psi = psi + h * grad
        k += 1
    report.final_psi = canonical_prices(psi)
    report.final_residual = float(report.iterates[-1].grad_norm)
    return report


def two_stage(domain: SourceDomain, target: TargetMeasure,
              cfg: SolverConfig) -> SolveReport:
    """Regularized ascent into the Newton zone, then damped Newton to tol.

    Stage 1 runs with zeta = d/(4 sqrt N), gamma = d/(8 M0 sqrt N) and
    h = 2/(CL + 2 gamma); its output is guaranteed to satisfy
    |G(psi) - lambda| < d/(2 sqrt N), the entry condition for stage 2. Two
    recoveries guard the sampled CL: a converged stage 1 that misses the zone
    halves gamma (at most thrice), and a stagnant budget-exhausted stage 1
    doubles the working CL (at most thrice), both recorded in the report.
    """
    n = len(target)
    sep = cfg.d_lambda if cfg.d_lambda is not None else \
        resolve_separation(target.weights, domain.chi)
    d = sep.conservative_value
    constants = {"d_lambda": sep.value, "d_lambda_mode": sep.mode,
                 "d_lambda_used": d}

    if d <= 0.0:
        psi0 = np.zeros(n)
        residual = float(np.linalg.norm(evaluate_G(domain, target, psi0).masses
                                        - target.weights))
        return SolveReport(final_psi=psi0, final_residual=residual,
                           constants_used=constants, status=DEGENERATE)

    m0 = compute_M0(domain, target)
    if cfg.lipschitz_CL is not None:
        cl = cfg.lipschitz_CL
        constants["CL_source"] = "override"
    else:
        cl = estimate_CL(domain, target, cfg.cl_samples, cfg.cl_seed)
        constants["CL_source"] = "estimated"
    if cl <= 0.0:
        raise ValueError("Lipschitz estimate of G came out zero; supply lipschitz_CL")

    root_n = math.sqrt(n)
    zeta1 = cfg.zeta1_override if cfg.zeta1_override is not None else d / (4.0 * root_n)
    gamma = cfg.gamma_override if cfg.gamma_override is not None else d / (8.0 * m0 * root_n)
    zone = d / (2.0 * root_n)

    t0 = time.perf_counter()
    handoff_ok = False
    restarts = 0
    cl_doublings = 0
    while True:
        h = cfg.h_override if cfg.h_override is not None else 2.0 / (cl + 2.0 * gamma)
        stage1 = gradient_descent_reg(domain, target, np.zeros(n), zeta1, gamma,
                                      h, cfg)
        psi_t = stage1.final_psi
        handoff = float(np.linalg.norm(evaluate_G(domain, target, psi_t).masses
                                       - target.weights))
        if handoff < zone:
            handoff_ok = True
            break
        if stage1.status != CONVERGED:
            # a stagnant residual under an exhausted budget is the signature
            # of a fixed-step 2-cycle: the sampled Lipschitz estimate missed
            # the curvature along this trajectory, so halve the step
            norms = [r.grad_norm for r in stage1.iterates]
            stagnant = norms[-1] > 0.9 * norms[3 * len(norms) // 4]
            adaptable = cfg.lipschitz_CL is None and cfg.h_override is None
            if stagnant and adaptable and cl_doublings < 3:
                cl *= 2.0
                cl_doublings += 1
                continue
            break
        # converged yet outside the zone: shrink the regularization bias
        if restarts >= 3 or cfg.gamma_override is not None:
            break
        gamma *= 0.5
        restarts += 1
    t1 = time.perf_counter()

    constants.update({"M0": m0, "CL": cl, "gamma": gamma, "zeta1": zeta1,
                      "h": h, "newton_zone": zone, "handoff_residual": handoff,
                      "handoff_ok": handoff_ok, "stage1_restarts": restarts,
                      "cl_doublings": cl_doublings})

    if not handoff_ok and stage1.status == MAX_ITERS:
        return SolveReport(iterates=stage1.iterates, final_psi=psi_t,
                           final_residual=handoff, constants_used=constants,
                           status=MAX_ITERS,
                           stage_seconds={1: time.perf_counter() - t0})

    stage2 = damped_newton(domain, target, psi_t, cfg.tol_final, cfg)
    t2 = time.perf_counter()

    report = SolveReport(
        iterates=stage1.iterates + stage2.iterates,
        final_psi=stage2.final_psi,
        final_residual=stage2.final_residual,
        constants_used=constants,
        status=stage2.status,
        stage_seconds={1: t1 - t0, 2: t2 - t1},
    )
    return report


def report_bounds(domain: SourceDomain, target: TargetMeasure,
                  cfg: SolverConfig) -> str:
    """Certified constants of the convergence theory for this instance."""
    if domain.pw_data is None:
        raise MissingPWData("bound reporting needs pw_data = (q, kappa) on the domain")
    q, kappa = domain.pw_data
    sep = cfg.d_lambda if cfg.d_lambda is not None else \
        resolve_separation(target.weights, domain.chi)
    d = sep.conservative_value
    n = len(target)
    m = domain.n_components

    verts = np.vstack([poly.vertices for poly, _ in domain.components])
    diff = verts[:, None, :] - target.points[None, :, :]
    c_grad = float(np.sqrt((diff ** 2).sum(axis=2)).max())

    denom = c_grad * m ** (1.0 / q) * n ** 4 * kappa
    eig_bound = 2.0 ** (3.0 - 1.0 / q) * d ** (1.0 / q) / denom
    beta = 2.0 ** (3.0 - 2.0 / q) * d ** (1.0 / q) / denom
    delta = 0.5 * float(target.weights.min())
    zone = d / (2.0 * math.sqrt(n))

    lines = [
        f"d_lambda              = {d:.12g}  ({sep.mode})",
        f"C_grad (sup |x - y|)  = {c_grad:.12g}",
        f"spectral gap bound    = {eig_bound:.12g}",
        f"beta (strong concav.) = {beta:.12g}",
        f"delta (half min lam)  = {delta:.12g}",
        f"newton zone radius    = {zone:.12g}",
    ]
    return "\n".join(lines)
