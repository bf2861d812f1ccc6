"""Cell-convergence metrics between Laguerre diagrams and rate extraction.

The mass of the per-cell symmetric difference is exact (convex-piece polygon
intersections); Hausdorff distances use vertex-to-boundary maxima. Both
vanish together as the prices approach the maximizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .exceptions import DimensionMismatch, TooFewIterates
from .measure import LaguerreDiagram, SourceDomain, TargetMeasure
from .solvers import SolveReport


@dataclass
class CellComparison:
    delta_mu: np.ndarray | None = None
    hausdorff: np.ndarray | None = None
    sum_delta_mu: float | None = None
    max_hausdorff: float | None = None
    bound_rhs: float | None = None
    reference_slack: float | None = None
    infinite_cells: tuple = ()


def _check_same_shape(diag_a: LaguerreDiagram, diag_b: LaguerreDiagram):
    if len(diag_a.masses) != len(diag_b.masses):
        raise DimensionMismatch("diagrams have different target sizes")
    if len(diag_a.cell_pieces[0]) != len(diag_b.cell_pieces[0]):
        raise DimensionMismatch("diagrams come from different domains")


def symmetric_difference_mu(diag_a: LaguerreDiagram, diag_b: LaguerreDiagram,
                            domain: SourceDomain,
                            target: TargetMeasure | None = None) -> CellComparison:
    """Per-cell mu(A xor B), exact via mu(A) + mu(B) - 2 mu(A ∩ B).

    With ``target`` given, bound_rhs = 4N |G_a - lambda|_1 (the theoretical
    ceiling when diag_b sits at the maximizer) and reference_slack the same
    expression for diag_b, covering an imperfect reference.
    """
    _check_same_shape(diag_a, diag_b)
    n = len(diag_a.masses)
    delta = np.zeros(n)
    for i in range(n):
        inter = 0.0
        for a, b, piece in zip(diag_a.cell_pieces[i], diag_b.cell_pieces[i],
                               domain.convex_pieces):
            if a is None or b is None:
                continue
            common = geometry.convex_intersection(a, b)
            if common is not None:
                inter += piece.density * geometry.polygon_area(common)
        delta[i] = max(diag_a.masses[i] + diag_b.masses[i] - 2.0 * inter, 0.0)
    comp = CellComparison(delta_mu=delta, sum_delta_mu=float(delta.sum()))
    if target is not None:
        comp.bound_rhs = 4.0 * n * float(np.abs(diag_a.masses - target.weights).sum())
        comp.reference_slack = 4.0 * n * float(np.abs(diag_b.masses - target.weights).sum())
    return comp


def hausdorff_cells(diag_a: LaguerreDiagram, diag_b: LaguerreDiagram) -> CellComparison:
    """Per-cell Hausdorff distances; empty-vs-nonempty pairs are infinite and
    excluded from the reported maximum (flagged in infinite_cells)."""
    _check_same_shape(diag_a, diag_b)
    n = len(diag_a.masses)
    haus = np.zeros(n)
    infinite = []
    for i in range(n):
        a_pieces = diag_a.cell(i)
        b_pieces = diag_b.cell(i)
        if not a_pieces and not b_pieces:
            haus[i] = 0.0
        elif not a_pieces or not b_pieces:
            haus[i] = math.inf
            infinite.append(i)
        else:
            haus[i] = geometry.hausdorff_distance(a_pieces, b_pieces)
    finite = haus[np.isfinite(haus)]
    return CellComparison(hausdorff=haus,
                          max_hausdorff=float(finite.max()) if len(finite) else 0.0,
                          infinite_cells=tuple(infinite))


def fitted_order(errors) -> float:
    """Local convergence order from the last three errors of a sequence."""
    e = [float(x) for x in errors[-3:]]
    if len(e) < 3 or min(e) <= 0.0:
        return math.nan
    num = math.log(e[2] / e[1])
    den = math.log(e[1] / e[0])
    if den == 0.0:
        return math.nan
    return num / den


def rate_report(report: SolveReport) -> str:
    """Per-stage error sequences, ratios, and the fitted local order."""
    sections = []
    for stage in (1, 2):
        records = report.stage_iterates(stage)
        if len(records) < 3:
            continue
        errs = [r.grad_norm for r in records]
        lines = [f"stage {stage}: {len(records)} iterates"]
        for k, r in enumerate(records):
            ratio = errs[k] / errs[k - 1] if k > 0 and errs[k - 1] > 0 else math.nan
            lines.append(f"  k={r.k:<4d} e={errs[k]:.6e}  ratio={ratio:.6f}")
        lines.append(f"  fitted local order (last 3): {fitted_order(errs):.3f}")
        sections.append("\n".join(lines))
    if not sections:
        raise TooFewIterates("rate extraction needs a stage with at least 3 iterates")
    return "\n".join(sections)
