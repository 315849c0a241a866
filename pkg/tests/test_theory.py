import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clustclass.theory import (generalization_gap, min_sample_size,
                               sample_size_rhs, vc_bound)


class TestMinSampleSize:
    def test_known_small_case(self):
        # independent oracle: direct scan of the inequality
        n = min_sample_size(Q=1, D=2, epsilon=0.5, delta=0.1)
        assert n == 627
        assert n >= sample_size_rhs(n, 1, 2, 0.5, 0.1)
        assert n - 1 < sample_size_rhs(n - 1, 1, 2, 0.5, 0.1)

    def test_minimality_on_random_tuples(self, rng):
        for _ in range(10):
            Q = int(rng.integers(1, 8))
            D = int(rng.integers(Q, 30))
            eps = float(rng.uniform(0.05, 0.5))
            delta = float(rng.uniform(0.01, 0.2))
            n = min_sample_size(Q, D, eps, delta)
            assert n >= sample_size_rhs(n, Q, D, eps, delta)
            if n > 1:
                assert n - 1 < sample_size_rhs(n - 1, Q, D, eps, delta)

    def test_halving_epsilon_grows_fast(self):
        n1 = min_sample_size(Q=3, D=3, epsilon=0.5, delta=0.1)
        n2 = min_sample_size(Q=3, D=3, epsilon=0.25, delta=0.1)
        assert n2 > 4 * n1

    def test_monotone_in_dimension(self):
        sizes = [min_sample_size(Q=2, D=D, epsilon=0.2, delta=0.1)
                 for D in (2, 5, 20, 100)]
        assert sizes == sorted(sizes)
        assert sizes[0] < sizes[-1]

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            min_sample_size(Q=0, D=2, epsilon=0.5, delta=0.1)
        with pytest.raises(ValueError):
            min_sample_size(Q=3, D=2, epsilon=0.5, delta=0.1)
        with pytest.raises(ValueError):
            min_sample_size(Q=1, D=2, epsilon=0.5, delta=1.5)


class TestVcBound:
    def test_two_clusters_one_dim(self):
        expected = 3 * 2 * 2 * math.log(3 * math.e)
        assert abs(vc_bound(2, 1) - expected) < 1e-12
        assert abs(vc_bound(2, 1) - 25.18335) < 1e-4

    def test_paper_scale_dimensions(self):
        expected = 4 * 3 * 213 * math.log(6 * math.e)
        assert abs(vc_bound(3, 212) - expected) < 1e-9
        assert abs(vc_bound(3, 212) - 7135.7372) < 1e-3

    def test_single_cluster_reduces_to_linear(self):
        for D in (1, 5, 212):
            assert abs(vc_bound(1, D) - 2 * (D + 1)) < 1e-12

    @given(st.integers(1, 12), st.integers(1, 300))
    @settings(max_examples=40, deadline=None)
    def test_strictly_increasing(self, L, D):
        assert vc_bound(L + 1, D) > vc_bound(L, D)
        assert vc_bound(L, D + 1) > vc_bound(L, D)


class TestGeneralizationGap:
    def test_vanishes_with_samples(self):
        V, rho = 25.18, 0.05
        gaps = [generalization_gap(n, V, rho) for n in (10**3, 10**5, 10**7)]
        assert gaps == sorted(gaps, reverse=True)
        assert gaps[-1] < 0.02

    def test_direct_formula_value(self):
        V, N, rho = 25.18, 10**5, 0.05
        expected = 2 * math.sqrt(
            2 * (V * math.log(2 * math.e * N / V) + math.log(2 / rho)) / N)
        assert abs(generalization_gap(N, V, rho) - expected) < 1e-15

    def test_monotone_in_capacity(self):
        assert generalization_gap(10**4, 50.0, 0.05) > generalization_gap(
            10**4, 25.0, 0.05)

    def test_vacuous_bound_still_returned(self):
        # finite but useless when N barely clears V/(2e)
        assert generalization_gap(50, 100.0, 0.05) > 1.0
        # below that regime no finite bound exists
        assert generalization_gap(10, 100.0, 0.05) == float("inf")


@pytest.fixture
def rng():
    return np.random.default_rng(99)
