"""Separation of subset sums: the constant that sizes the Newton zone.

``exact_d`` enumerates the distance between the proper nonempty subset sums
of the target weights and all subset sums of the component masses.
``approx_d`` is the trimmed-list approximation with a one-sided guarantee
x - eps <= d <= x, usable when enumeration is out of budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (DimensionMismatch, EmptyInput, InstanceTooLarge,
                         NotCoprime)

EXACT_BUDGET = 26  # enumeration cap on N + M


@dataclass
class SeparationResult:
    value: float
    mode: str  # "exact" | "approximate" | "lower_bound"
    eps: float | None = None
    witness: tuple | None = None
    max_list_size: int | None = None

    @property
    def conservative_value(self) -> float:
        """A value guaranteed not to exceed the true separation constant."""
        if self.mode == "approximate":
            return max(self.value - self.eps, 0.0)
        return self.value


def _subset_sums(values: np.ndarray) -> np.ndarray:
    """Sums over all subsets, indexed by bitmask (bit k = entry k included)."""
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums


def exact_d(lam, chi) -> SeparationResult:
    """Exact separation between proper nonempty sums of lam and sums of chi."""
    lam = np.asarray(lam, dtype=float)
    chi = np.asarray(chi, dtype=float)
    n, m = len(lam), len(chi)
    if n < 2:
        raise ValueError("need at least two target weights")
    if n + m > EXACT_BUDGET:
        raise InstanceTooLarge(
            f"N + M = {n + m} exceeds the enumeration budget {EXACT_BUDGET}; use approx_d")

    lam_sums = _subset_sums(lam)
    chi_sums = _subset_sums(chi)
    order = np.argsort(chi_sums)
    sorted_chi = chi_sums[order]

    proper = lam_sums[1:-1]  # masks 1 .. 2^n - 2
    pos = np.searchsorted(sorted_chi, proper)
    best_val = np.inf
    best_lam_mask = best_chi_pos = -1
    for cand in (np.minimum(pos, len(sorted_chi) - 1), np.maximum(pos - 1, 0)):
        diffs = np.abs(proper - sorted_chi[cand])
        k = int(diffs.argmin())
        if diffs[k] < best_val:
            best_val = float(diffs[k])
            best_lam_mask = k + 1
            best_chi_pos = int(cand[k])

    chi_mask = int(order[best_chi_pos])
    witness = (tuple(i for i in range(n) if best_lam_mask >> i & 1),
               tuple(j for j in range(m) if chi_mask >> j & 1))
    return SeparationResult(best_val, "exact", witness=witness)


def trim(sorted_values, eps: float):
    """Sparsify an ascending list: kept values are >= eps apart and every
    input value is within eps of a kept one. The first element is kept."""
    if len(sorted_values) == 0:
        raise EmptyInput("trim needs a nonempty list")
    if eps <= 0.0:
        raise ValueError("trim tolerance must be positive")
    vals = list(sorted_values)
    if any(b < a for a, b in zip(vals, vals[1:])):
        raise ValueError("trim input must be ascending")
    out = [vals[0]]
    last = vals[0]
    for r in vals[1:]:
        if r >= last + eps:
            out.append(r)
            last = r
    return out


def _trim_array(sorted_arr: np.ndarray, eps: float) -> np.ndarray:
    out = [sorted_arr[0]]
    last = sorted_arr[0]
    for r in sorted_arr[1:]:
        if r >= last + eps:
            out.append(r)
            last = r
    return np.array(out)


def approx_d(lam, chi, eps: float) -> SeparationResult:
    """Trimmed-list approximation: returns x with x - eps <= d <= x.

    The anchor weight lam[0] stays out of the processed list, and 0 is
    dropped before the chi phase, so every surviving value is a genuine
    proper-subset difference. Trim tolerance is eps / (N + M) per merge.
    """
    lam = np.asarray(lam, dtype=float)
    chi = np.asarray(chi, dtype=float)
    n, m = len(lam), len(chi)
    if n < 2:
        raise ValueError("need at least two target weights")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    delta = eps / (n + m)

    lst = np.zeros(1)
    max_size = 1
    for w in lam[1:]:
        merged = np.sort(np.concatenate([lst, lst + w]), kind="stable")
        lst = _trim_array(merged, delta)
        max_size = max(max_size, len(lst))
    lst = lst[1:]  # the leading 0 is the empty lambda-subset
    # dropping 0 orphans any true sum that trimming had merged into it; such
    # a sum s satisfies min(lam[1:]) <= s <= (N-1) delta, so reinserting the
    # smallest single weight keeps every true sum within the trim error
    smallest = lam[1:].min()
    pos = int(np.searchsorted(lst, smallest))
    if pos == len(lst) or lst[pos] != smallest:
        lst = np.insert(lst, pos, smallest)
    for c in chi:
        merged = np.sort(np.concatenate([lst - c, lst]), kind="stable")
        lst = _trim_array(merged, delta)
        max_size = max(max_size, len(lst))
    x = float(np.abs(lst).min())
    return SeparationResult(x, "approximate", eps=eps, max_list_size=max_size)


def rational_lower_bound(n_tilde: int, m_tilde: int) -> SeparationResult:
    """Lower bound 1/(N~ M~) valid when N~ lam_i and M~ chi_j are integers
    with gcd(N~, M~) = 1."""
    n_tilde, m_tilde = int(n_tilde), int(m_tilde)
    if n_tilde < 1 or m_tilde < 1:
        raise ValueError("denominators must be positive integers")
    if math.gcd(n_tilde, m_tilde) != 1:
        raise NotCoprime(f"gcd({n_tilde}, {m_tilde}) != 1")
    return SeparationResult(1.0 / (n_tilde * m_tilde), "lower_bound")


def stability_gap(lambda1, lambda2) -> float:
    """l1 distance between weight vectors: a certified bound on |d_1 - d_2|."""
    l1 = np.asarray(lambda1, dtype=float)
    l2 = np.asarray(lambda2, dtype=float)
    if l1.shape != l2.shape:
        raise DimensionMismatch("weight vectors must have the same length")
    return float(np.abs(l1 - l2).sum())


def resolve_separation(lam, chi) -> SeparationResult:
    """Pick exact enumeration when in budget, else the approximation with
    eps = min(lam)/10. Solvers should use ``conservative_value``."""
    lam = np.asarray(lam, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if len(lam) + len(chi) <= EXACT_BUDGET:
        return exact_d(lam, chi)
    return approx_d(lam, chi, eps=float(lam.min()) / 10.0)
