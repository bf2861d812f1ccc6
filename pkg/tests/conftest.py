import pytest

import polyot
from polyot import fileio
from polyot.cli import generate_problem

UNIT_SQUARE = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]


@pytest.fixture(scope="session")
def unit_square_domain():
    return polyot.SourceDomain([(UNIT_SQUARE, 1.0)])


@pytest.fixture(scope="session")
def two_site_target():
    return polyot.TargetMeasure([[0.25, 0.5], [0.75, 0.5]], [0.5, 0.5])


@pytest.fixture(scope="session")
def two_squares_problem():
    return fileio.parse_problem(generate_problem("two-squares", 4, 7))


@pytest.fixture(scope="session")
def two_squares_solved(two_squares_problem):
    domain, target = two_squares_problem.domain, two_squares_problem.target
    sep = polyot.exact_d(target.weights, domain.chi)
    cfg = polyot.SolverConfig(tol_final=1e-12, d_lambda=sep)
    report = polyot.two_stage(domain, target, cfg)
    assert report.status == polyot.CONVERGED
    return two_squares_problem, sep, report
