"""Semi-discrete optimal transport on disconnected polygonal domains."""

from .diagnostics import (CellComparison, fitted_order, hausdorff_cells,
                          rate_report, symmetric_difference_mu)
from .estimator import SemiDiscreteTransport
from .geometry import (Facet, HalfPlane, Polygon, clip_polygon, laguerre_cell,
                       polygon_area, polygon_quadratic_moment, shared_facet)
from .measure import (LaguerreDiagram, SourceDomain, TargetMeasure, evaluate_DG,
                      evaluate_G, evaluate_Phi, evaluate_Phi_reg, montecarlo_G)
from .solvers import (CONVERGED, DEGENERATE, MAX_ITERS, IterateRecord,
                      SolveReport, SolverConfig, compute_M0, damped_newton,
                      estimate_CL, gradient_descent_reg, report_bounds,
                      two_stage)
from .subsetsum import (SeparationResult, approx_d, exact_d,
                        rational_lower_bound, resolve_separation,
                        stability_gap, trim)
from .validation import canonical_prices

__version__ = "0.1.0"

__all__ = [
    "CellComparison", "fitted_order", "hausdorff_cells", "rate_report",
    "symmetric_difference_mu", "SemiDiscreteTransport", "Facet", "HalfPlane",
    "Polygon", "clip_polygon", "laguerre_cell", "polygon_area",
    "polygon_quadratic_moment", "shared_facet", "LaguerreDiagram",
    "SourceDomain", "TargetMeasure", "evaluate_DG", "evaluate_G",
    "evaluate_Phi", "evaluate_Phi_reg", "montecarlo_G", "CONVERGED",
    "DEGENERATE", "MAX_ITERS", "IterateRecord", "SolveReport", "SolverConfig",
    "compute_M0", "damped_newton", "estimate_CL", "gradient_descent_reg",
    "report_bounds", "two_stage", "SeparationResult", "approx_d", "exact_d",
    "rational_lower_bound", "resolve_separation", "stability_gap", "trim",
    "canonical_prices",
]
