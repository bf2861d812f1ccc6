"""Source and target measures plus exact evaluators for the dual problem.

The source measure is a union of pairwise-disjoint polygonal components with
constant densities; the target measure is a weighted finite point set. For
prices psi, ``evaluate_G`` builds the Laguerre diagram and the cell masses
G(psi), ``evaluate_DG`` the (negative semidefinite) mass Jacobian from the
facet graph, and ``evaluate_Phi`` the dual functional, all in closed form.
``montecarlo_G`` is an independent sampling oracle for G.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .exceptions import DimensionMismatch, DuplicateSites, OverlappingComponents
from .geometry import Facet, Polygon
from .validation import as_price_vector, as_weight_vector


@dataclass
class DomainPiece:
    """One convex piece of a component: the unit of all cell computations."""

    component: int
    polygon: Polygon
    density: float


class SourceDomain:
    """Disjoint polygonal components with constant densities, total mass 1."""

    def __init__(self, components, pw_data=None, normalize: bool = False,
                 mass_tol: float = 1e-9):
        if not components:
            raise ValueError("source domain needs at least one component")
        polys = []
        densities = []
        for idx, (poly, density) in enumerate(components):
            if not isinstance(poly, Polygon):
                poly = Polygon(poly)
            if not geometry.is_simple(poly):
                raise ValueError(f"component {idx} is self-intersecting")
            density = float(density)
            if not density > 0.0:
                raise ValueError(f"component {idx} density must be positive")
            polys.append(poly)
            densities.append(density)

        areas = np.array([geometry.polygon_area(p) for p in polys])
        masses = areas * np.array(densities)
        total = float(masses.sum())
        if normalize:
            densities = [d / total for d in densities]
            masses = masses / total
        elif abs(total - 1.0) > mass_tol:
            raise ValueError(
                f"component masses sum to {total!r}, not 1; pass normalize=True to rescale")

        self.components = [(p, d) for p, d in zip(polys, densities)]
        self.chi = as_weight_vector(masses, total_tol=max(mass_tol, 1e-12), name="chi")
        self.areas = areas
        if pw_data is not None:
            q, kappa = float(pw_data[0]), float(pw_data[1])
            if q < 1.0 or kappa <= 0.0:
                raise ValueError("pw_data must satisfy q >= 1 and kappa > 0")
            pw_data = (q, kappa)
        self.pw_data = pw_data

        self.convex_pieces: list[DomainPiece] = []
        for j, (poly, density) in enumerate(self.components):
            if geometry.is_convex(poly):
                pieces = [poly]
            else:
                pieces = geometry.triangulate(poly)
            self.convex_pieces.extend(DomainPiece(j, p, density) for p in pieces)

        self._check_disjoint()
        self._sampler = None

    @property
    def n_components(self) -> int:
        return len(self.components)

    def _check_disjoint(self):
        pieces = self.convex_pieces
        boxes = [geometry.polygon_bbox(p.polygon) for p in pieces]
        for a in range(len(pieces)):
            for b in range(a + 1, len(pieces)):
                if pieces[a].component == pieces[b].component:
                    continue
                ba, bb = boxes[a], boxes[b]
                if ba[2] < bb[0] or bb[2] < ba[0] or ba[3] < bb[1] or bb[3] < ba[1]:
                    continue
                inter = geometry.convex_intersection(pieces[a].polygon, pieces[b].polygon)
                if inter is not None and geometry.polygon_area(inter) > 1e-12:
                    raise OverlappingComponents(
                        f"components {pieces[a].component} and {pieces[b].component} overlap")

    def bounding_box(self):
        boxes = np.array([geometry.polygon_bbox(p.polygon) for p in self.convex_pieces])
        return float(boxes[:, 0].min()), float(boxes[:, 1].min()), \
            float(boxes[:, 2].max()), float(boxes[:, 3].max())

    def _triangle_sampler(self):
        # triangles with selection probabilities rho * area (sums to 1)
        if self._sampler is None:
            tris = []
            probs = []
            comps = []
            for piece in self.convex_pieces:
                for t in geometry.triangulate(piece.polygon):
                    tris.append(t.vertices)
                    probs.append(piece.density * geometry.polygon_area(t))
                    comps.append(piece.component)
            tris = np.array(tris)
            probs = np.array(probs)
            self._sampler = (tris, probs / probs.sum(), np.array(comps))
        return self._sampler


class TargetMeasure:
    """Finite target support: sites y_i with positive weights summing to 1."""

    def __init__(self, points, weights):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise ValueError("target points must be an (N, 2) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("target points must be finite")
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        s = pts[order]
        if len(pts) > 1 and np.any(np.all(s[1:] == s[:-1], axis=1)):
            raise DuplicateSites("target sites must be pairwise distinct")
        w = as_weight_vector(weights, name="target weights")
        if len(w) != len(pts):
            raise DimensionMismatch("one weight per target point is required")
        if np.any(w <= 0.0):
            raise ValueError("target weights must be strictly positive")
        self.points = pts
        self.weights = w

    def __len__(self) -> int:
        return len(self.points)


class LaguerreDiagram:
    """Cells, masses, and (lazily) the facet graph of a price vector."""

    def __init__(self, domain: SourceDomain, target: TargetMeasure, psi: np.ndarray,
                 cell_pieces, masses: np.ndarray):
        self.domain = domain
        self.target = target
        self.psi = psi
        self.cell_pieces = cell_pieces  # [site][piece] -> Polygon or None
        self.masses = masses
        self._facets = None

    def cell(self, i: int):
        """Nonempty convex pieces of cell i, across all domain pieces."""
        return [p for p in self.cell_pieces[i] if p is not None]

    def component_cell(self, i: int, component: int):
        """Nonempty pieces of cell i restricted to one component."""
        return [p for p, piece in zip(self.cell_pieces[i], self.domain.convex_pieces)
                if p is not None and piece.component == component]

    def empty_cells(self):
        return [i for i in range(len(self.masses)) if not self.cell(i)]

    @property
    def facets(self):
        if self._facets is None:
            self._facets = _build_facets(self)
        return self._facets


def _build_facets(diagram: LaguerreDiagram):
    sites = diagram.target.points
    psi = diagram.psi
    n = len(sites)
    found: dict = {}
    for p_idx, piece in enumerate(diagram.domain.convex_pieces):
        cells = [diagram.cell_pieces[i][p_idx] for i in range(n)]
        present = [i for i in range(n) if cells[i] is not None]
        boxes = {i: geometry.polygon_bbox(cells[i]) for i in present}
        for a in range(len(present)):
            i = present[a]
            for b in range(a + 1, len(present)):
                j = present[b]
                bi, bj = boxes[i], boxes[j]
                pad = 1e-12
                if bi[2] < bj[0] - pad or bj[2] < bi[0] - pad \
                        or bi[3] < bj[1] - pad or bj[3] < bi[1] - pad:
                    continue
                hp = geometry.bisector_halfplane(sites, psi, i, j)
                facet = geometry.shared_facet(cells[i], cells[j], hp, i, j)
                if facet.rho_length <= 0.0:
                    continue
                agg = found.setdefault((i, j), Facet(i, j))
                agg.segments.extend(facet.segments)
                agg.rho_length += piece.density * facet.rho_length
    return [found[key] for key in sorted(found)]


def evaluate_G(domain: SourceDomain, target: TargetMeasure, psi) -> LaguerreDiagram:
    """Build the Laguerre diagram of ``psi`` and its exact cell masses."""
    psi = as_price_vector(psi, n=len(target))
    n = len(target)
    normals, offsets = geometry.bisector_arrays(target.points, psi)
    # clipping near sites first shrinks the cell quickly, so the remaining
    # halfplanes mostly hit the all-inside fast path
    dist2 = (normals ** 2).sum(axis=2)
    orders = np.argsort(dist2, axis=1)
    cell_pieces = [[None] * len(domain.convex_pieces) for _ in range(n)]
    masses = np.zeros(n)
    eye = np.eye(n, dtype=bool)
    for p_idx, piece in enumerate(domain.convex_pieces):
        pv = piece.polygon.vertices
        # classify every halfplane against the whole piece in one shot;
        # skipping a piece-containing halfplane is a no-op for the clip
        depth = np.einsum("vd,ikd->ikv", pv, normals) - offsets[:, :, None]
        contains_piece = (depth <= 0.0).all(axis=2)
        excludes_piece = (depth >= 0.0).all(axis=2) & ~eye
        for i in range(n):
            if excludes_piece[i].any():
                continue
            verts = pv
            for k in orders[i]:
                if k == i or contains_piece[i, k]:
                    continue
                verts = geometry._clip_vertices(verts, normals[i, k], offsets[i, k])
                if verts is None:
                    break
            if verts is not None:
                cell = Polygon(verts, check=False)
                cell_pieces[i][p_idx] = cell
                masses[i] += piece.density * geometry.polygon_area(cell)
    return LaguerreDiagram(domain, target, psi.copy(), cell_pieces, masses)


def evaluate_DG(diagram: LaguerreDiagram, target: TargetMeasure) -> np.ndarray:
    """Mass Jacobian DG(psi) from the facet graph.

    Off-diagonal entries are (density-weighted facet length) / |y_i - y_j|;
    each diagonal entry is minus its off-diagonal row sum, so rows kill the
    constant vector by construction.
    """
    n = len(target)
    w = np.zeros((n, n))
    for facet in diagram.facets:
        dist = float(np.linalg.norm(target.points[facet.i] - target.points[facet.j]))
        w[facet.i, facet.j] = w[facet.j, facet.i] = facet.rho_length / dist
    dg = w.copy()
    np.fill_diagonal(dg, -w.sum(axis=1))
    return dg


def evaluate_Phi(domain: SourceDomain, target: TargetMeasure, psi,
                 diagram: LaguerreDiagram | None = None) -> float:
    """Dual functional Phi(psi), exact via per-cell quadratic moments."""
    psi = as_price_vector(psi, n=len(target))
    if diagram is None:
        diagram = evaluate_G(domain, target, psi)
    cost = 0.0
    for i in range(len(target)):
        yi = target.points[i]
        for cell, piece in zip(diagram.cell_pieces[i], domain.convex_pieces):
            if cell is not None:
                cost += piece.density * geometry.polygon_quadratic_moment(cell, yi)
    return cost + float(psi @ diagram.masses) - float(psi @ target.weights)


def evaluate_Phi_reg(domain: SourceDomain, target: TargetMeasure, psi, gamma: float,
                     diagram: LaguerreDiagram | None = None):
    """Regularized functional and its gradient, from one diagram evaluation.

    Returns (Phi(psi) - gamma/2 |psi|^2, G(psi) - lambda - gamma psi).
    """
    psi = as_price_vector(psi, n=len(target))
    if diagram is None:
        diagram = evaluate_G(domain, target, psi)
    value = evaluate_Phi(domain, target, psi, diagram=diagram) \
        - 0.5 * gamma * float(psi @ psi)
    grad = diagram.masses - target.weights - gamma * psi
    return value, grad


def montecarlo_G(domain: SourceDomain, target: TargetMeasure, psi,
                 samples: int, seed: int) -> np.ndarray:
    """Empirical cell masses from uniform sampling of the source measure.

    Components are drawn with probability chi_j, then points uniformly from
    the component's triangulation, then assigned to the cheapest site.
    Deterministic for a fixed seed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    psi = as_price_vector(psi, n=len(target))
    rng = np.random.default_rng(seed)
    tris, probs, comps = domain._triangle_sampler()

    comp_draw = rng.choice(domain.n_components, size=samples, p=domain.chi)
    points = np.empty((samples, 2))
    for j in range(domain.n_components):
        mask = comp_draw == j
        count = int(mask.sum())
        if count == 0:
            continue
        sel = comps == j
        p_local = probs[sel] / probs[sel].sum()
        t_idx = rng.choice(np.flatnonzero(sel), size=count, p=p_local)
        u = rng.random(count)
        v = rng.random(count)
        flip = u + v > 1.0
        u[flip] = 1.0 - u[flip]
        v[flip] = 1.0 - v[flip]
        a = tris[t_idx, 0]
        points[mask] = a + u[:, None] * (tris[t_idx, 1] - a) \
            + v[:, None] * (tris[t_idx, 2] - a)

    counts = np.zeros(len(target), dtype=np.int64)
    chunk = 1 << 17
    y = target.points
    for start in range(0, samples, chunk):
        block = points[start:start + chunk]
        cost = 0.5 * ((block[:, None, :] - y[None, :, :]) ** 2).sum(axis=2) + psi
        counts += np.bincount(cost.argmin(axis=1), minlength=len(target))
    return counts / float(samples)
