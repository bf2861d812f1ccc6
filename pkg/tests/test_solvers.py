import math

import numpy as np
import pytest

import polyot
from polyot.exceptions import MaxBacktracks, MissingPWData, SingularHessian
from polyot.measure import SourceDomain, TargetMeasure
from polyot.solvers import (CONVERGED, DEGENERATE, SolverConfig, compute_M0,
                            damped_newton, estimate_CL, gradient_descent_reg,
                            report_bounds, two_stage)

UNIT_SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]
SQUARE_B = [[2, 0], [3, 0], [3, 1], [2, 1]]


@pytest.fixture(scope="module")
def split_domain():
    return SourceDomain([(UNIT_SQUARE, 0.5), (SQUARE_B, 0.5)])


class TestComputeM0:
    def test_two_site_square(self, unit_square_domain, two_site_target):
        # |c1 - c2| = |x1 - 0.5| / 2, maximal at the hull vertices
        got = compute_M0(unit_square_domain, two_site_target)
        assert got == pytest.approx(math.sqrt(2) * 0.25, abs=1e-14)

    def test_single_site(self, unit_square_domain):
        target = TargetMeasure([[0.5, 0.5]], [1.0])
        assert compute_M0(unit_square_domain, target) == 0.0

    def test_translation_invariance(self):
        shift = np.array([3.7, -1.2])
        moved_square = (np.array(UNIT_SQUARE) + shift).tolist()
        dom_a = SourceDomain([(UNIT_SQUARE, 1.0)])
        dom_b = SourceDomain([(moved_square, 1.0)])
        tgt_a = TargetMeasure([[0.25, 0.5], [0.75, 0.5]], [0.5, 0.5])
        tgt_b = TargetMeasure(np.array([[0.25, 0.5], [0.75, 0.5]]) + shift,
                              [0.5, 0.5])
        assert compute_M0(dom_a, tgt_a) == pytest.approx(
            compute_M0(dom_b, tgt_b), rel=1e-12)


class TestEstimateCL:
    def test_two_site_square_lower_bound(self, unit_square_domain, two_site_target):
        # |DG(0)| = 4 is in the sample set, so the doubled estimate is >= 4
        got = estimate_CL(unit_square_domain, two_site_target, samples=8, seed=0)
        assert got >= 4.0

    def test_deterministic(self, unit_square_domain, two_site_target):
        a = estimate_CL(unit_square_domain, two_site_target, samples=6, seed=3)
        b = estimate_CL(unit_square_domain, two_site_target, samples=6, seed=3)
        assert a == b

    def test_relabeling_invariance(self, unit_square_domain):
        tgt = TargetMeasure([[0.25, 0.5], [0.75, 0.5]], [0.5, 0.5])
        tgt_swapped = TargetMeasure([[0.75, 0.5], [0.25, 0.5]], [0.5, 0.5])
        a = estimate_CL(unit_square_domain, tgt, samples=8, seed=1)
        b = estimate_CL(unit_square_domain, tgt_swapped, samples=8, seed=1)
        assert abs(a - b) < 1e-12


class TestDampedNewton:
    def test_single_affine_step(self, unit_square_domain):
        target = TargetMeasure([[0.25, 0.5], [0.75, 0.5]], [0.6, 0.4])
        cfg = SolverConfig(tol_final=1e-10)
        report = damped_newton(unit_square_domain, target, [0.0, 0.0], 1e-10, cfg)
        assert report.status == CONVERGED
        assert len(report.iterates) == 2  # start plus one full step
        assert report.iterates[1].backtrack_exponent == 0
        assert np.abs(report.final_psi - [-0.025, 0.025]).max() < 1e-12

    def test_zero_iterations_at_maximizer(self, unit_square_domain):
        target = TargetMeasure([[0.25, 0.5], [0.75, 0.5]], [0.6, 0.4])
        cfg = SolverConfig(tol_final=1e-10)
        first = damped_newton(unit_square_domain, target, [0.0, 0.0], 1e-10, cfg)
        again = damped_newton(unit_square_domain, target, first.final_psi, 1e-10, cfg)
        assert len(again.iterates) == 1
        assert again.final_residual == first.final_residual

    def test_logged_acceptance_inequality(self, two_squares_solved):
        _, _, report = two_squares_solved
        stage2 = report.stage_iterates(2)
        assert len(stage2) >= 2
        for prev, cur in zip(stage2, stage2[1:]):
            ell = cur.backtrack_exponent
            assert ell is not None
            assert cur.grad_norm <= (1.0 - 2.0 ** -(ell + 1)) * prev.grad_norm

    def test_shift_equivariance(self, unit_square_domain):
        target = TargetMeasure([[0.2, 0.3], [0.7, 0.6], [0.5, 0.9]], [0.3, 0.3, 0.4])
        cfg = SolverConfig(tol_final=1e-11)
        base = damped_newton(unit_square_domain, target, np.zeros(3), 1e-11, cfg)
        shifted = damped_newton(unit_square_domain, target,
                                np.zeros(3) + 0.5, 1e-11, cfg)
        assert np.abs(base.final_psi - shifted.final_psi).max() < 1e-9
        assert abs(base.final_psi.sum()) < 1e-12
        assert abs(shifted.final_psi.sum()) < 1e-12

    def test_unique_maximizer_from_two_starts(self, unit_square_domain):
        target = TargetMeasure([[0.2, 0.3], [0.7, 0.6], [0.5, 0.9]], [0.3, 0.3, 0.4])
        cfg = SolverConfig(tol_final=1e-11)
        a = damped_newton(unit_square_domain, target, np.zeros(3), 1e-11, cfg)
        b = damped_newton(unit_square_domain, target, [0.02, -0.01, -0.01],
                          1e-11, cfg)
        assert np.abs(a.final_psi - b.final_psi).max() < 1e-7

    def test_singular_hessian_outside_zone(self, split_domain):
        # one site per component and no cross facet at psi = 0
        target = TargetMeasure([[0.5, 0.5], [2.5, 0.5]], [0.7, 0.3])
        cfg = SolverConfig(tol_final=1e-8)
        with pytest.raises(SingularHessian):
            damped_newton(split_domain, target, [0.0, 0.0], 1e-8, cfg)

    def test_max_backtracks_is_structured(self, split_domain):
        # a sliver facet makes the Newton step enormous; with no halvings
        # allowed the step cannot be accepted
        target = TargetMeasure([[0.5, 0.5], [2.5, 0.5]], [0.7, 0.3])
        cfg = SolverConfig(tol_final=1e-8, max_backtracks=0)
        with pytest.raises(MaxBacktracks):
            damped_newton(split_domain, target, [1.04, 0.0], 1e-8, cfg)

    def test_iteration_cap_reported(self, unit_square_domain):
        target = TargetMeasure([[0.2, 0.3], [0.7, 0.6], [0.5, 0.9]], [0.3, 0.3, 0.4])
        cfg = SolverConfig(tol_final=1e-13, max_outer_iters=1)
        report = damped_newton(unit_square_domain, target, np.zeros(3), 1e-13, cfg)
        assert report.status == polyot.MAX_ITERS


class TestGradientDescent:
    def test_symmetric_fixed_point(self, split_domain):
        target = TargetMeasure([[0.5, 0.5], [2.5, 0.5]], [0.5, 0.5])
        cfg = SolverConfig()
        report = gradient_descent_reg(split_domain, target, np.zeros(2),
                                      1e-9, 0.01, 0.1, cfg)
        assert report.status == CONVERGED
        assert len(report.iterates) == 1
        assert report.final_residual == 0.0

    def test_requires_zero_sum_start(self, split_domain):
        target = TargetMeasure([[0.5, 0.5], [2.5, 0.5]], [0.5, 0.5])
        with pytest.raises(ValueError):
            gradient_descent_reg(split_domain, target, [0.5, 0.0], 1e-6, 0.01,
                                 0.1, SolverConfig())

    def test_stage1_envelope_and_budget(self, two_squares_solved):
        problem, sep, report = two_squares_solved
        c = report.constants_used
        cl, gamma, m0 = c["CL"], c["gamma"], c["M0"]
        b = cl / (cl + 2.0 * gamma)
        stage1 = report.stage_iterates(1)
        prefactor = (cl + gamma) * m0  # psi0 = 0
        for r in stage1:
            assert r.grad_norm <= prefactor * b ** r.k + 1e-12
        budget = math.log(c["zeta1"] / prefactor) / math.log(b)
        assert stage1[-1].k <= math.ceil(budget)

    def test_envelope_geometric_decay(self, two_squares_solved):
        # regularized gradient norms contract at worst like b per step
        _, _, report = two_squares_solved
        c = report.constants_used
        b = c["CL"] / (c["CL"] + 2.0 * c["gamma"])
        norms = [r.grad_norm for r in report.stage_iterates(1)]
        for prev, cur in zip(norms, norms[1:]):
            assert cur <= b * prev + 1e-15


class TestTwoStage:
    def test_converges_on_two_squares(self, two_squares_solved):
        _, _, report = two_squares_solved
        assert report.status == CONVERGED
        assert report.final_residual < 1e-12  # converged implies residual < tol
        assert report.constants_used["handoff_ok"]
        assert abs(report.final_psi.sum()) < 1e-12
        assert set(report.stage_seconds) == {1, 2}

    def test_handoff_inside_newton_zone(self, two_squares_solved):
        problem, sep, report = two_squares_solved
        n = len(problem.target)
        zone = sep.value / (2.0 * math.sqrt(n))
        assert report.constants_used["handoff_residual"] < zone

    def test_stage1_budget_formula(self, two_squares_solved):
        problem, sep, report = two_squares_solved
        c = report.constants_used
        n = len(problem.target)
        budget = 32.0 * n * c["M0"] ** 2 * c["CL"] ** 2 / sep.value ** 2
        assert len(report.stage_iterates(1)) <= budget

    def test_stage1_count_is_tolerance_independent(self, two_squares_problem):
        domain, target = two_squares_problem.domain, two_squares_problem.target
        sep = polyot.exact_d(target.weights, domain.chi)
        counts = []
        for tol in (1e-6, 1e-10):
            rep = two_stage(domain, target, SolverConfig(tol_final=tol, d_lambda=sep))
            counts.append(len(rep.stage_iterates(1)))
        assert counts[0] == counts[1]

    def test_cycle_rescue_doubles_lipschitz_estimate(self):
        # clustered sites make the true curvature along the trajectory exceed
        # the sampled Lipschitz estimate; the fixed step then locks into a
        # 2-cycle, which is detected and retried with a halved step
        comp_a = [[0.990747, 0.016378], [0.505822, 0.266597],
                  [-0.063824, 0.885901], [-0.33938, -0.294655],
                  [0.248013, -0.61483], [0.547205, -0.702691],
                  [0.545677, -0.344342], [0.670825, -0.234556]]
        comp_b = [[4.886023, 1.301549], [4.005424, 1.001662],
                  [3.088818, 0.51221], [2.857524, 0.219306],
                  [3.954475, -0.062644], [4.106915, -0.131649],
                  [4.342941, -0.30626], [4.99157, 0.369848]]
        sites = [[-0.110141, -0.241668], [-0.10284, 0.315338],
                 [0.267252, -0.078639], [3.626199, 0.702199],
                 [3.565038, 0.340744], [3.779551, 0.72298]]
        weights = [0.42903397, 0.11609927, 0.06079896, 0.20673038,
                   0.13600716, 0.05133026]
        domain = SourceDomain([(comp_a, 1.0), (comp_b, 1.0)], normalize=True)
        target = TargetMeasure(sites, weights)
        sep = polyot.exact_d(target.weights, domain.chi)
        report = two_stage(domain, target,
                           SolverConfig(tol_final=1e-9, d_lambda=sep,
                                        max_outer_iters=20000))
        assert report.status == CONVERGED
        assert report.final_residual < 1e-9
        assert report.constants_used["cl_doublings"] >= 1

    def test_exhausted_stage1_reports_max_iters(self):
        # far components with a tiny imbalance: stage 1 cannot bridge the
        # price gap within a small budget, and Newton is not attempted
        domain = SourceDomain([(UNIT_SQUARE, 0.5),
                               ([[4, 0], [5, 0], [5, 1], [4, 1]], 0.5)])
        target = TargetMeasure([[0.5, 0.5], [4.5, 0.5]], [0.5005, 0.4995])
        sep = polyot.exact_d(target.weights, domain.chi)
        cfg = SolverConfig(tol_final=1e-9, d_lambda=sep, max_outer_iters=300)
        report = two_stage(domain, target, cfg)
        assert report.status == polyot.MAX_ITERS
        assert report.stage_iterates(2) == []
        assert not report.constants_used["handoff_ok"]

    def test_degenerate_weights_short_circuit(self, split_domain):
        target = TargetMeasure([[0.3, 0.5], [0.7, 0.5], [2.3, 0.5], [2.7, 0.5]],
                               [0.25, 0.25, 0.25, 0.25])
        sep = polyot.exact_d(target.weights, split_domain.chi)
        assert sep.value == 0.0
        report = two_stage(split_domain, target, SolverConfig(d_lambda=sep))
        assert report.status == DEGENERATE
        assert report.iterates == []

    def test_nonconvex_component(self):
        # triangulated L-shape plus a far square, solved end to end
        l_shape = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]
        square = [[4, 0], [5, 0], [5, 1], [4, 1]]
        domain = SourceDomain([(l_shape, 1 / 6), (square, 0.5)])
        target = TargetMeasure([[0.4, 0.4], [1.6, 0.6], [0.5, 1.6], [4.5, 0.5]],
                               [0.2, 0.22, 0.18, 0.4])
        sep = polyot.exact_d(target.weights, domain.chi)
        assert sep.value > 0.01
        report = two_stage(domain, target,
                           SolverConfig(tol_final=1e-9, d_lambda=sep))
        assert report.status == CONVERGED
        assert report.final_residual < 1e-9

    def test_superlinear_tail(self, two_squares_solved):
        _, _, report = two_squares_solved
        errs = [r.grad_norm for r in report.stage_iterates(2)
                if r.grad_norm > 1e2 * np.finfo(float).eps]
        assert len(errs) >= 3
        r1 = errs[-2] / errs[-3]
        r2 = errs[-1] / errs[-2]
        assert r2 < r1

    def test_phi_maximized_at_solution(self, two_squares_solved):
        problem, _, report = two_squares_solved
        domain, target = problem.domain, problem.target
        best = polyot.evaluate_Phi(domain, target, report.final_psi)
        rng = np.random.default_rng(12)
        for _ in range(20):
            psi = report.final_psi + 0.2 * rng.normal(size=len(target))
            assert polyot.evaluate_Phi(domain, target, psi) <= best + 1e-12

    def test_prescribed_constants(self, two_squares_solved):
        problem, sep, report = two_squares_solved
        c = report.constants_used
        n = len(problem.target)
        assert c["zeta1"] == pytest.approx(sep.value / (4 * math.sqrt(n)), rel=1e-12)
        assert c["gamma"] == pytest.approx(
            sep.value / (8 * c["M0"] * math.sqrt(n)), rel=1e-12)
        assert c["h"] == pytest.approx(2 / (c["CL"] + 2 * c["gamma"]), rel=1e-12)


class TestReportBounds:
    def domain_with_pw(self):
        return SourceDomain([(UNIT_SQUARE, 1.0)], pw_data=(2.0, 1.0))

    def test_requires_pw_data(self, unit_square_domain, two_site_target):
        cfg = SolverConfig(d_lambda=polyot.SeparationResult(0.5, "exact"))
        with pytest.raises(MissingPWData):
            report_bounds(unit_square_domain, two_site_target, cfg)

    def test_formula_values(self, two_site_target):
        domain = self.domain_with_pw()
        cfg = SolverConfig(d_lambda=polyot.SeparationResult(0.5, "exact"))
        text = report_bounds(domain, two_site_target, cfg)
        verts = np.array(UNIT_SQUARE, dtype=float)
        c_grad = max(np.linalg.norm(v - y) for v in verts
                     for y in two_site_target.points)
        expected = 2 ** 2.5 * math.sqrt(0.5) / (c_grad * 16.0)
        line = [l for l in text.splitlines() if "spectral gap" in l][0]
        assert float(line.split("=")[1].strip()) == pytest.approx(expected, rel=1e-9)

    def test_monotone_in_separation(self, two_site_target):
        domain = self.domain_with_pw()
        vals = []
        for d in (0.1, 0.3, 0.5):
            cfg = SolverConfig(d_lambda=polyot.SeparationResult(d, "exact"))
            text = report_bounds(domain, two_site_target, cfg)
            line = [l for l in text.splitlines() if "spectral gap" in l][0]
            vals.append(float(line.split("=")[1].strip()))
        assert vals[0] < vals[1] < vals[2]

    def test_delta_is_half_min_weight(self):
        domain = self.domain_with_pw()
        target = TargetMeasure([[0.25, 0.5], [0.75, 0.5]], [0.6, 0.4])
        cfg = SolverConfig(d_lambda=polyot.SeparationResult(0.4, "exact"))
        text = report_bounds(domain, target, cfg)
        line = [l for l in text.splitlines() if "delta" in l][0]
        assert float(line.split("=")[1].strip()) == pytest.approx(0.2, abs=1e-15)
