"""Small input-validation helpers shared by the library and the estimator."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch


def as_weight_vector(entries, total_tol: float = 1e-12, name: str = "weights") -> np.ndarray:
    """Validate a vector of weights in [0, 1] summing to 1 within total_tol."""
    w = np.asarray(entries, dtype=float)
    if w.ndim != 1 or len(w) == 0:
        raise ValueError(f"{name} must be a nonempty 1-d vector")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} must be finite")
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    if abs(float(w.sum()) - 1.0) > total_tol:
        raise ValueError(f"{name} must sum to 1 within {total_tol:g} (got {w.sum()!r})")
    return w


def as_price_vector(entries, n: int | None = None) -> np.ndarray:
    psi = np.asarray(entries, dtype=float)
    if psi.ndim != 1:
        raise ValueError("prices must be a 1-d vector")
    if not np.all(np.isfinite(psi)):
        raise ValueError("prices must be finite")
    if n is not None and len(psi) != n:
        raise DimensionMismatch(f"expected {n} prices, got {len(psi)}")
    return psi


def canonical_prices(psi) -> np.ndarray:
    """Shift prices so they sum to zero (the canonical representative)."""
    psi = np.asarray(psi, dtype=float)
    return psi - psi.mean()


def as_points_array(points) -> np.ndarray:
    """Coerce to an (n, 2) float array of finite planar points."""
    p = np.asarray(points, dtype=float)
    if p.ndim == 1 and p.shape == (2,):
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of planar points")
    if not np.all(np.isfinite(p)):
        raise ValueError("points must be finite")
    return p
