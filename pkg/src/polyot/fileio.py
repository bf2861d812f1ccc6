"""Problem and result files (JSON), iteration logs (CSV), cell plots (SVG).

Floats are emitted with 17 significant digits so every file round-trips to
the exact same doubles it was written from.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ProblemFormatError
from .measure import LaguerreDiagram, SourceDomain, TargetMeasure
from .solvers import SolveReport


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("cannot serialize non-finite float")
    return format(float(x), ".17g")


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {dumps(v, indent + 1)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (int, float, bool)) or v is None for v in seq)
        if flat:
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        items = [f"{pad}  {dumps(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


@dataclass
class Problem:
    domain: SourceDomain
    target: TargetMeasure
    normalize: bool = False


def problem_to_dict(components, points, weights, pw=None, normalize=False) -> dict:
    doc = {
        "cost": "quadratic",
        "components": [
            {"polygon": [[float(x), float(y)] for x, y in poly],
             "density": float(density)}
            for poly, density in components
        ],
        "targets": {
            "points": [[float(x), float(y)] for x, y in points],
            "weights": [float(w) for w in weights],
        },
    }
    if pw is not None:
        doc["pw"] = {"q": float(pw[0]), "kappa": float(pw[1])}
    if normalize:
        doc["normalize"] = True
    return doc


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ProblemFormatError(f"missing field '{key}' in {where}")
    return doc[key]


def parse_problem(doc: dict) -> Problem:
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem file must contain a JSON object")
    cost = _require(doc, "cost", "problem")
    if cost != "quadratic":
        raise ProblemFormatError(f"unsupported cost {cost!r}; only 'quadratic'")
    comps_doc = _require(doc, "components", "problem")
    if not isinstance(comps_doc, list) or not comps_doc:
        raise ProblemFormatError("field 'components' must be a nonempty list")
    components = []
    for idx, comp in enumerate(comps_doc):
        where = f"components[{idx}]"
        poly = _require(comp, "polygon", where)
        density = _require(comp, "density", where)
        try:
            components.append((np.asarray(poly, dtype=float), float(density)))
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError(f"bad numbers in {where}: {exc}") from exc
    targets = _require(doc, "targets", "problem")
    points = _require(targets, "points", "targets")
    weights = _require(targets, "weights", "targets")
    pw = None
    if "pw" in doc and doc["pw"] is not None:
        pw = (_require(doc["pw"], "q", "pw"), _require(doc["pw"], "kappa", "pw"))
    normalize = bool(doc.get("normalize", False))
    try:
        domain = SourceDomain(components, pw_data=pw, normalize=normalize)
        target = TargetMeasure(points, weights)
    except ProblemFormatError:
        raise
    except Exception as exc:
        raise ProblemFormatError(str(exc)) from exc
    return Problem(domain, target, normalize)


def load_problem(path) -> Problem:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ProblemFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path} is not valid JSON: {exc}") from exc
    return parse_problem(doc)


def result_to_dict(report: SolveReport, diagram: LaguerreDiagram) -> dict:
    grad = diagram.masses - diagram.target.weights
    constants = report.constants_used
    return {
        "psi": [float(v) for v in report.final_psi],
        "G": [float(v) for v in diagram.masses],
        "residual_l2": float(np.linalg.norm(grad)),
        "residual_l1": float(np.abs(grad).sum()),
        "constants": {
            "M0": constants.get("M0"),
            "CL": constants.get("CL"),
            "gamma": constants.get("gamma"),
            "zeta1": constants.get("zeta1"),
            "h": constants.get("h"),
            "d_lambda": constants.get("d_lambda"),
            "d_lambda_mode": constants.get("d_lambda_mode"),
        },
        "status": report.status,
        "timing": {f"stage{k}_seconds": float(v)
                   for k, v in sorted(report.stage_seconds.items())},
    }


def load_result(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFormatError(f"cannot read result {path}: {exc}") from exc
    if "psi" not in doc:
        raise ProblemFormatError(f"result file {path} has no 'psi' field")
    return doc


CSV_HEADER = "stage,k,grad_norm,backtrack_l,empty_cells"


def write_iteration_log(path, report: SolveReport):
    lines = [CSV_HEADER]
    for r in report.iterates:
        ell = "" if r.backtrack_exponent is None else str(r.backtrack_exponent)
        lines.append(f"{r.stage},{r.k},{_fmt_float(r.grad_norm)},{ell},{r.cells_empty}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def render_svg(diagram: LaguerreDiagram, width: float = 640.0) -> str:
    """One path per nonempty (cell, component) pair plus one dot per site."""
    xmin, ymin, xmax, ymax = diagram.domain.bounding_box()
    span_x = xmax - xmin
    span_y = ymax - ymin
    pad = 0.04 * max(span_x, span_y)
    xmin, ymin, xmax, ymax = xmin - pad, ymin - pad, xmax + pad, ymax + pad
    scale = width / (xmax - xmin)
    height = (ymax - ymin) * scale

    def tx(p):
        return (p[0] - xmin) * scale, (ymax - p[1]) * scale

    n = len(diagram.masses)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'viewBox="0 0 {width:.1f} {height:.1f}">']
    stroke = max(width, height) * 0.0015
    for i in range(n):
        color = f"hsl({(i * 360) // max(n, 1)},65%,72%)"
        for comp in range(diagram.domain.n_components):
            pieces = diagram.component_cell(i, comp)
            if not pieces:
                continue
            subpaths = []
            for poly in pieces:
                coords = " L ".join(f"{x:.4f},{y:.4f}"
                                    for x, y in (tx(v) for v in poly.vertices))
                subpaths.append(f"M {coords} Z")
            parts.append(f'<path d="{" ".join(subpaths)}" fill="{color}" '
                         f'stroke="#333" stroke-width="{stroke:.3f}"/>')
    for site in diagram.target.points:
        x, y = tx(site)
        parts.append(f'<circle cx="{x:.4f}" cy="{y:.4f}" '
                     f'r="{3.0 * stroke:.3f}" fill="#111"/>')
    parts.append("</svg>")
    return "\n".join(parts)
