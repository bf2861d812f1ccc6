"""Scikit-learn style front end for the two-stage transport solver."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning, NotFittedError

from .exceptions import DegenerateInstance
from .measure import SourceDomain, TargetMeasure, evaluate_G
from .solvers import CONVERGED, DEGENERATE, SolverConfig, two_stage
from .validation import as_points_array


class SemiDiscreteTransport(BaseEstimator):
    """Optimal transport map from a polygonal source measure to point masses.

    ``fit(X, y)`` takes the source domain and target measure and solves the
    dual problem for the prices of the optimal Laguerre diagram. ``predict``
    assigns query points to their target site, ``transform`` moves them there.

    Parameters
    ----------
    tol : float
        Final residual tolerance on |G(psi) - lambda|.
    lipschitz_cl : float or None
        Override for the Lipschitz constant of G; estimated when None.
    max_outer_iters, max_backtracks : int
        Iteration and line-search caps.
    cl_samples, random_state : int
        Sampling budget and seed for the Lipschitz estimate.
    """

    def __init__(self, tol=1e-8, lipschitz_cl=None, max_outer_iters=50000,
                 max_backtracks=40, cl_samples=16, random_state=0):
        self.tol = tol
        self.lipschitz_cl = lipschitz_cl
        self.max_outer_iters = max_outer_iters
        self.max_backtracks = max_backtracks
        self.cl_samples = cl_samples
        self.random_state = random_state

    def fit(self, X: SourceDomain, y: TargetMeasure):
        if not isinstance(X, SourceDomain):
            raise TypeError("X must be a SourceDomain")
        if not isinstance(y, TargetMeasure):
            raise TypeError("y must be a TargetMeasure")
        cfg = SolverConfig(tol_final=self.tol, lipschitz_CL=self.lipschitz_cl,
                           max_outer_iters=self.max_outer_iters,
                           max_backtracks=self.max_backtracks,
                           cl_samples=self.cl_samples, cl_seed=self.random_state)
        report = two_stage(X, y, cfg)
        if report.status == DEGENERATE:
            raise DegenerateInstance(
                "the weight separation constant is zero; perturb the target weights")
        if report.status != CONVERGED:
            warnings.warn("two-stage solver hit its iteration cap before the "
                          f"tolerance (residual {report.final_residual:.3e})",
                          ConvergenceWarning)
        self.domain_ = X
        self.target_ = y
        self.report_ = report
        self.psi_ = report.final_psi
        self.diagram_ = evaluate_G(X, y, report.final_psi)
        self.masses_ = self.diagram_.masses
        self.n_sites_ = len(y)
        return self

    def _check_fitted(self):
        if not hasattr(self, "psi_"):
            raise NotFittedError("call fit before predict/transform")

    def predict(self, P) -> np.ndarray:
        """Index of the target site whose Laguerre cell contains each point."""
        self._check_fitted()
        pts = as_points_array(P)
        y = self.target_.points
        cost = 0.5 * ((pts[:, None, :] - y[None, :, :]) ** 2).sum(axis=2) + self.psi_
        return cost.argmin(axis=1)

    def transform(self, P) -> np.ndarray:
        """Apply the fitted transport map: each point goes to its site."""
        return self.target_.points[self.predict(P)]
