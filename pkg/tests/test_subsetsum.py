import bisect
import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from polyot.exceptions import (DimensionMismatch, EmptyInput, InstanceTooLarge,
                               NotCoprime)
from polyot.subsetsum import (approx_d, exact_d, rational_lower_bound,
                              resolve_separation, stability_gap, trim)


def brute_force_d(lam, chi):
    """Independent oracle: explicit enumeration over index subsets."""
    n, m = len(lam), len(chi)
    chi_sums = sorted(sum(chi[j] for j in idx)
                      for r in range(m + 1) for idx in combinations(range(m), r))
    best = math.inf
    for r in range(1, n):
        for idx in combinations(range(n), r):
            s = sum(lam[i] for i in idx)
            pos = bisect.bisect_left(chi_sums, s)
            for q in (pos - 1, pos):
                if 0 <= q < len(chi_sums):
                    best = min(best, abs(s - chi_sums[q]))
    return best


def random_instance(rng, max_total=16):
    n = int(rng.integers(2, max_total - 1))
    m = int(rng.integers(1, max_total - n + 1))
    lam = rng.dirichlet(np.ones(n))
    chi = rng.dirichlet(np.ones(m))
    return lam, chi


class TestExactD:
    def test_half_half_against_single_component(self):
        res = exact_d([0.5, 0.5], [1.0])
        assert res.value == 0.5
        assert res.mode == "exact"

    def test_uneven_pair(self):
        res = exact_d([0.3, 0.7], [0.5, 0.5])
        assert res.value == pytest.approx(0.2, abs=1e-15)

    def test_thirds_against_halves(self):
        res = exact_d([1 / 3, 1 / 3, 1 / 3], [0.5, 0.5])
        assert res.value == pytest.approx(1 / 6, abs=1e-15)

    def test_witness_reproduces_value(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            lam, chi = random_instance(rng, max_total=12)
            res = exact_d(lam, chi)
            i_set, j_set = res.witness
            assert 0 < len(i_set) < len(lam)
            reproduced = abs(sum(lam[list(i_set)]) - sum(chi[list(j_set)]))
            assert reproduced == pytest.approx(res.value, abs=1e-15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            lam, chi = random_instance(rng, max_total=12)
            assert exact_d(lam, chi).value == pytest.approx(
                brute_force_d(lam, chi), abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        lam, chi = random_instance(rng, max_total=10)
        base = exact_d(lam, chi).value
        for _ in range(5):
            assert exact_d(rng.permutation(lam), rng.permutation(chi)).value \
                == pytest.approx(base, abs=1e-15)

    def test_bounded_by_min_weight(self):
        # 0 is a chi subset sum and every single weight is a proper sum
        rng = np.random.default_rng(3)
        for _ in range(30):
            lam, chi = random_instance(rng)
            assert exact_d(lam, chi).value <= lam.min() + 1e-15

    def test_budget_guard(self):
        lam = np.full(20, 1 / 20)
        chi = np.full(10, 1 / 10)
        with pytest.raises(InstanceTooLarge):
            exact_d(lam, chi)

    def test_needs_two_weights(self):
        with pytest.raises(ValueError):
            exact_d([1.0], [0.5, 0.5])


class TestTrim:
    def test_hand_trace(self):
        assert trim([0.10, 0.11, 0.12, 0.20], 0.015) == [0.10, 0.12, 0.20]

    def test_singleton(self):
        assert trim([0.5], 0.3) == [0.5]

    def test_eps_larger_than_range(self):
        assert trim([0.1, 0.2, 0.3], 5.0) == [0.1]

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            trim([], 0.1)

    def test_requires_ascending(self):
        with pytest.raises(ValueError):
            trim([0.3, 0.1], 0.05)

    def test_output_properties(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            values = np.sort(rng.random(rng.integers(1, 60)))
            eps = float(rng.uniform(0.005, 0.2))
            out = trim(values, eps)
            out_arr = np.asarray(out)
            # ascending subset with eps-separated keeps
            assert all(v in values for v in out)
            assert np.all(np.diff(out_arr) >= eps)
            assert out[0] == values[0]
            # every input value is within eps of a kept value
            for v in values:
                assert np.abs(out_arr - v).min() <= eps


# The sandwich x - eps <= d <= x is exact in real arithmetic; enumeration and
# trimmed lists associate float additions differently, so allow IEEE noise.
FLOAT_NOISE = 1e-13


class TestApproxD:
    def test_example_sandwich_01(self):
        res = approx_d([0.3, 0.7], [0.5, 0.5], 0.1)
        assert 0.2 - FLOAT_NOISE <= res.value <= 0.3 + FLOAT_NOISE

    def test_example_sandwich_001(self):
        res = approx_d([0.5, 0.5], [1.0], 0.01)
        assert 0.5 - FLOAT_NOISE <= res.value <= 0.51 + FLOAT_NOISE

    def test_sandwich_property(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            lam, chi = random_instance(rng)
            d = exact_d(lam, chi).value
            for eps in (1e-1, 1e-2):
                res = approx_d(lam, chi, eps)
                assert res.value - eps - FLOAT_NOISE <= d <= res.value + FLOAT_NOISE
                assert res.max_list_size <= 2 * (len(lam) + len(chi)) / eps

    def test_extreme_anchor_weight(self):
        # every non-anchor weight below the trim tolerance
        lam = np.array([0.9999, 0.00004, 0.00006])
        chi = np.array([0.5, 0.5])
        d = exact_d(lam, chi).value
        res = approx_d(lam, chi, 0.05)
        assert res.value - 0.05 <= d <= res.value


class TestRationalBound:
    def test_three_two(self):
        assert rational_lower_bound(3, 2).value == pytest.approx(1 / 6, abs=1e-18)

    def test_seven_five(self):
        assert rational_lower_bound(7, 5).value == pytest.approx(1 / 35, abs=1e-18)

    def test_not_coprime(self):
        with pytest.raises(NotCoprime):
            rational_lower_bound(2, 4)

    def test_bound_is_valid_for_equal_weights(self):
        # exact rational enumeration: d >= 1/(M N) whenever gcd(N, M) = 1
        for n in range(2, 7):
            for m in range(1, 6):
                if math.gcd(n, m) != 1:
                    continue
                lam = [Fraction(1, n)] * n
                chi = [Fraction(1, m)] * m
                d = min(abs(Fraction(a, n) - Fraction(b, m))
                        for a in range(1, n) for b in range(m + 1))
                assert d >= Fraction(1, m * n)


class TestStabilityGap:
    def test_identical_vectors(self):
        assert stability_gap([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_simple_pair(self):
        assert stability_gap([0.3, 0.7], [0.4, 0.6]) == pytest.approx(0.2, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            stability_gap([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_bounds_separation_change(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            chi = rng.dirichlet(np.ones(rng.integers(1, 4)))
            l1 = rng.dirichlet(np.ones(n))
            l2 = rng.dirichlet(np.ones(n))
            gap = abs(exact_d(l1, chi).value - exact_d(l2, chi).value)
            assert gap <= stability_gap(l1, l2) + 1e-12


class TestResolveSeparation:
    def test_small_instances_use_enumeration(self):
        res = resolve_separation(np.array([0.3, 0.7]), np.array([0.5, 0.5]))
        assert res.mode == "exact"

    def test_large_instances_fall_back(self):
        lam = np.full(30, 1 / 30)
        chi = np.full(2, 0.5)
        res = resolve_separation(lam, chi)
        assert res.mode == "approximate"
        assert res.eps == pytest.approx(lam.min() / 10)
        assert res.conservative_value <= res.value
