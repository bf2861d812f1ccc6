"""Exact 2-D polygon primitives and power-diagram (Laguerre cell) construction.

Polygons are simple counterclockwise vertex loops stored as (n, 2) float
arrays. Cells of the quadratic-cost Laguerre diagram are built by clipping a
convex domain piece against the N-1 bisector halfplanes of the competing
sites; areas and quadratic moments come out in closed form, so the transport
functional and its derivatives are exact up to rounding.

All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DuplicateSites

# Polygons whose area falls below this are numerical noise, treated as empty.
AREA_EPS = 1e-14


class Polygon:
    """Simple polygon with counterclockwise orientation and positive area."""

    __slots__ = ("vertices",)

    def __init__(self, vertices, check: bool = True):
        v = np.asarray(vertices, dtype=float)
        if check:
            if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
                raise ValueError("a polygon needs at least three (x, y) vertices")
            if not np.all(np.isfinite(v)):
                raise ValueError("polygon vertices must be finite")
            if np.any(np.all(v == np.roll(v, -1, axis=0), axis=1)):
                raise ValueError("polygon has two equal consecutive vertices")
            if signed_area(v) <= 0.0:
                raise ValueError("polygon must be counterclockwise with positive area")
        self.vertices = v

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Polygon({self.vertices.tolist()!r})"


@dataclass
class HalfPlane:
    """The set {x : normal . x <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=float)
        self.offset = float(self.offset)
        if self.normal.shape != (2,) or not np.any(self.normal):
            raise ValueError("halfplane normal must be a nonzero 2-vector")


@dataclass
class Facet:
    """Shared boundary between cells i and j, lying on their bisector line."""

    i: int
    j: int
    segments: list = field(default_factory=list)
    rho_length: float = 0.0


def signed_area(vertices) -> float:
    """Shoelace signed area; positive for counterclockwise loops."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def polygon_area(poly: Polygon) -> float:
    return signed_area(poly.vertices)


def polygon_bbox(poly: Polygon):
    v = poly.vertices
    return v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max()


def polygon_centroid(poly: Polygon) -> np.ndarray:
    v = poly.vertices
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = cr.sum() / 2.0
    return np.array([((x + xn) * cr).sum(), ((y + yn) * cr).sum()]) / (6.0 * a)


def bisector_arrays(sites: np.ndarray, psi: np.ndarray):
    """All pairwise bisector halfplanes at once: cell i lies in
    {x : normals[i, k] . x <= offsets[i, k]} for every k != i."""
    half_sq = 0.5 * (sites ** 2).sum(axis=1)
    normals = sites[None, :, :] - sites[:, None, :]
    offsets = (half_sq[None, :] - half_sq[:, None]) + (psi[None, :] - psi[:, None])
    return normals, offsets


def _clip_vertices(v: np.ndarray, normal, offset):
    """Clip a vertex loop against {x : normal . x <= offset}; None when empty."""
    d = v @ normal - offset
    if np.all(d <= 0.0):
        return v
    if np.all(d >= 0.0):
        return None
    out = []
    n = len(v)
    for k in range(n):
        knext = (k + 1) % n
        a, b = v[k], v[knext]
        da, db = d[k], d[knext]
        if da <= 0.0:
            out.append(a)
            if db > 0.0:
                t = da / (da - db)
                out.append(a + t * (b - a))
        elif db < 0.0:
            t = da / (da - db)
            out.append(a + t * (b - a))
    if len(out) < 3:
        return None
    w = np.array(out)
    keep = np.any(w != np.roll(w, 1, axis=0), axis=1)
    w = w[keep]
    if len(w) < 3 or signed_area(w) < AREA_EPS:
        return None
    return w


def clip_polygon(poly: Polygon, hp: HalfPlane):
    """Intersect ``poly`` with the halfplane; returns None when empty.

    Boundary points are kept (the inside test is <=). Convexity is preserved.
    """
    v = _clip_vertices(poly.vertices, hp.normal, hp.offset)
    if v is None:
        return None
    if v is poly.vertices:
        return poly
    return Polygon(v, check=False)


def _check_distinct_sites(sites: np.ndarray):
    order = np.lexsort((sites[:, 1], sites[:, 0]))
    s = sites[order]
    if np.any(np.all(s[1:] == s[:-1], axis=1)):
        raise DuplicateSites("target sites must be pairwise distinct")


def bisector_halfplane(sites: np.ndarray, psi: np.ndarray, i: int, k: int) -> HalfPlane:
    """Halfplane containing cell i against cell k for cost |x-y|^2 / 2."""
    yi, yk = sites[i], sites[k]
    normal = yk - yi
    offset = 0.5 * (yk @ yk - yi @ yi) + (psi[k] - psi[i])
    return HalfPlane(normal, offset)


def _cell_vertices(i: int, piece_vertices: np.ndarray, normals: np.ndarray,
                   offsets: np.ndarray, order) -> np.ndarray | None:
    v = piece_vertices
    for k in order:
        if k == i:
            continue
        v = _clip_vertices(v, normals[i, k], offsets[i, k])
        if v is None:
            return None
    return v


def laguerre_cell(i: int, sites, psi, domain_poly: Polygon):
    """Cell of site i in the power diagram of ``sites`` with prices ``psi``,
    clipped to the convex ``domain_poly``; None when the cell misses it."""
    y = np.asarray(sites, dtype=float)
    p = np.asarray(psi, dtype=float)
    _check_distinct_sites(y)
    normals, offsets = bisector_arrays(y, p)
    v = _cell_vertices(i, domain_poly.vertices, normals, offsets, range(len(y)))
    if v is None:
        return None
    if v is domain_poly.vertices:
        return domain_poly
    return Polygon(v, check=False)


def polygon_quadratic_moment(poly: Polygon, center) -> float:
    """Integral of |x - center|^2 / 2 over the polygon.

    Exact: the polygon is fanned into signed triangles from its centroid and
    each triangle's second moment about ``center`` is evaluated in closed form.
    """
    c = np.asarray(center, dtype=float)
    v = poly.vertices - c
    g = polygon_centroid(poly) - c
    u1 = v
    u2 = np.roll(v, -1, axis=0)
    r1 = u1 - g
    r2 = u2 - g
    area2 = r1[:, 0] * r2[:, 1] - r1[:, 1] * r2[:, 0]
    s = (g @ g) + (u1 * u1).sum(axis=1) + (u2 * u2).sum(axis=1) \
        + ((g + u1 + u2) ** 2).sum(axis=1)
    return float((area2 * s).sum()) / 48.0


def _convex_line_interval(poly: Polygon, p0: np.ndarray, u: np.ndarray):
    """Parameter range t such that p0 + t*u lies in the convex polygon.

    ``u`` must be a unit vector. Edges (near-)parallel to the line need a
    tolerance: a cell edge that lies exactly on a bisector line produces pure
    rounding noise in its offset, which must not empty the interval.
    """
    v = poly.vertices
    tlo, thi = -np.inf, np.inf
    n = len(v)
    for k in range(n):
        a = v[k]
        e = v[(k + 1) % n] - a
        elen = np.hypot(e[0], e[1])
        c1 = e[0] * u[1] - e[1] * u[0]
        c0 = e[0] * (p0[1] - a[1]) - e[1] * (p0[0] - a[0])
        if abs(c1) <= 1e-12 * elen:
            # parallel edge: outside only when the line clears it for real
            dist_tol = 1e-9 * (1.0 + abs(a[0]) + abs(a[1]) + abs(p0[0]) + abs(p0[1]))
            if c0 < -dist_tol * elen:
                return None
            continue
        t = -c0 / c1
        if c1 > 0.0:
            tlo = max(tlo, t)
        else:
            thi = min(thi, t)
        if tlo > thi:
            return None
    return tlo, thi


def shared_facet(cell_i: Polygon, cell_j: Polygon, bisector: HalfPlane,
                 i: int = 0, j: int = 1) -> Facet:
    """Portion of the bisector line shared by both (convex) cell boundaries.

    The recorded length is Euclidean; density weighting is the caller's job.
    An empty facet comes back with rho_length 0 and no segments.
    """
    n = bisector.normal
    nn = float(n @ n)
    p0 = bisector.offset * n / nn
    u = np.array([-n[1], n[0]]) / np.sqrt(nn)
    facet = Facet(i, j)
    ival = _convex_line_interval(cell_i, p0, u)
    if ival is None:
        return facet
    jval = _convex_line_interval(cell_j, p0, u)
    if jval is None:
        return facet
    lo = max(ival[0], jval[0])
    hi = min(ival[1], jval[1])
    if hi - lo > 0.0:
        facet.segments.append((p0 + lo * u, p0 + hi * u))
        facet.rho_length = hi - lo
    return facet


def convex_intersection(p: Polygon, q: Polygon):
    """Intersection of two convex polygons, or None when empty."""
    out = p
    v = q.vertices
    n = len(v)
    for k in range(n):
        a = v[k]
        e = v[(k + 1) % n] - a
        hp = HalfPlane((e[1], -e[0]), e[1] * a[0] - e[0] * a[1])
        out = clip_polygon(out, hp)
        if out is None:
            return None
    return out


def is_convex(poly: Polygon) -> bool:
    """True when every turn is left or straight (within rounding noise)."""
    v = poly.vertices
    e = np.roll(v, -1, axis=0) - v
    en = np.roll(e, -1, axis=0)
    cr = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    tol = 1e-12 * max(1.0, float(np.abs(cr).max()))
    return bool(np.all(cr >= -tol))


def is_simple(poly: Polygon) -> bool:
    """Brute-force check that no two non-adjacent edges intersect."""
    v = poly.vertices
    n = len(v)
    segs = [(v[k], v[(k + 1) % n]) for k in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            if b == a + 1 or (a == 0 and b == n - 1):
                continue
            if _segments_intersect(*segs[a], *segs[b]):
                return False
    return True


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    if d1 == 0 and on_seg(q1, q2, p1):
        return True
    if d2 == 0 and on_seg(q1, q2, p2):
        return True
    if d3 == 0 and on_seg(p1, p2, q1):
        return True
    if d4 == 0 and on_seg(p1, p2, q2):
        return True
    return False


def _point_in_triangle(p, a, b, c, tol: float) -> bool:
    d1 = _orient(a, b, p)
    d2 = _orient(b, c, p)
    d3 = _orient(c, a, p)
    return d1 >= -tol and d2 >= -tol and d3 >= -tol


def triangulate(poly: Polygon) -> list:
    """Convex polygons fan from the first vertex; the rest are ear-clipped."""
    v = poly.vertices
    if is_convex(poly):
        return [Polygon(np.array([v[0], v[k], v[k + 1]]), check=False)
                for k in range(1, len(v) - 1)]
    return _ear_clip(v)


def _ear_clip(v: np.ndarray) -> list:
    n = len(v)
    scale = float(np.abs(v).max()) or 1.0
    tol = 1e-12 * scale * scale
    idx = list(range(n))
    tris = []
    while len(idx) > 3:
        found = False
        for pos in range(len(idx)):
            a = idx[pos - 1]
            b = idx[pos]
            c = idx[(pos + 1) % len(idx)]
            pa, pb, pc = v[a], v[b], v[c]
            if _orient(pa, pb, pc) <= tol:
                continue
            blocked = False
            for m in idx:
                if m in (a, b, c):
                    continue
                if _point_in_triangle(v[m], pa, pb, pc, tol):
                    blocked = True
                    break
            if not blocked:
                tris.append((a, b, c))
                del idx[pos]
                found = True
                break
        if not found:
            raise ValueError("ear clipping failed; is the polygon simple?")
    tris.append(tuple(idx))
    return [Polygon(v[list(t)], check=False) for t in tris]


def point_in_polygon(point, poly: Polygon) -> bool:
    """Even-odd rule; points on the boundary may land on either side."""
    x, y = float(point[0]), float(point[1])
    v = poly.vertices
    n = len(v)
    inside = False
    for k in range(n):
        x1, y1 = v[k]
        x2, y2 = v[(k + 1) % n]
        if (y1 > y) != (y2 > y):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xint:
                inside = not inside
    return inside


def point_segment_distance(p, a, b) -> float:
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _point_to_union_distance(p, pieces) -> float:
    best = np.inf
    for poly in pieces:
        if point_in_polygon(p, poly):
            return 0.0
        v = poly.vertices
        n = len(v)
        for k in range(n):
            d = point_segment_distance(p, v[k], v[(k + 1) % n])
            if d < best:
                best = d
    return best


def hausdorff_distance(pieces_a, pieces_b) -> float:
    """Hausdorff distance between two unions of polygons.

    Uses vertex-to-boundary maxima in both directions, which is exact for
    convex polygons.
    """
    best = 0.0
    for src, dst in ((pieces_a, pieces_b), (pieces_b, pieces_a)):
        for poly in src:
            for vert in poly.vertices:
                d = _point_to_union_distance(vert, dst)
                if d > best:
                    best = d
    return best
