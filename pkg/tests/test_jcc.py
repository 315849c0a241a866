import numpy as np
import pytest

from clustclass.errors import EnumerationSizeError, InfeasibilityError
from clustclass.jcc import (JccInstance, canonical_assignments,
                            intra_cluster_penalty, jcc_objective,
                            load_instance, save_instance, solve_exact,
                            verify_mip_equivalence)
from clustclass.svm import (LinearModel, SvmConstrainedParams,
                            train_constrained)


def planted_instance(rng, spread=0.3, shift=4.0, n_per=3, n_neg=6, L=2,
                     T=2.0, rho_c=0.0):
    """Two positive blobs, each separable from the negatives on its own axis."""
    pos1 = rng.normal(0, spread, (n_per, 2))
    pos1[:, 0] += shift
    pos2 = rng.normal(0, spread, (n_per, 2))
    pos2[:, 1] += shift
    neg = rng.normal(0, spread, (n_neg, 2))
    params = SvmConstrainedParams(1.0, 1.0, T)
    return JccInstance(positives=np.vstack([pos1, pos2]), negatives=neg,
                       L=L, params=params, intra_weight=rho_c)


def random_instance(rng, n_pos=5, n_neg=5, d=2, L=2, rho_c=0.0):
    params = SvmConstrainedParams(float(rng.uniform(0.5, 2.0)),
                                  float(rng.uniform(0.5, 2.0)),
                                  float(rng.uniform(0.5, 2.5)))
    return JccInstance(positives=rng.normal(size=(n_pos, d)),
                       negatives=rng.normal(size=(n_neg, d)),
                       L=L, params=params, intra_weight=rho_c)


class TestObjective:
    def test_single_cluster_collapses_to_plain_training(self, rng):
        inst = random_instance(rng, L=1)
        sol = train_constrained(inst.positives, inst.negatives, inst.params)
        obj = jcc_objective(inst, np.zeros(inst.n_pos, dtype=int), [sol.model])
        assert abs(obj - sol.objective) < 1e-8

    def test_label_permutation_symmetry(self, rng):
        inst = random_instance(rng, L=2)
        a = np.array([0, 0, 1, 1, 0])
        m0 = LinearModel(beta=np.array([0.3, -0.2]), beta0=0.1)
        m1 = LinearModel(beta=np.array([-0.1, 0.4]), beta0=-0.3)
        direct = jcc_objective(inst, a, [m0, m1])
        swapped = jcc_objective(inst, 1 - a, [m1, m0])
        assert abs(direct - swapped) < 1e-12

    def test_intra_penalty_counts_unordered_pairs_once(self):
        pos = np.array([[0.0, 0.0], [3.0, 4.0]])  # distance 5
        inst = JccInstance(positives=pos, negatives=np.array([[9.0, 9.0]]),
                           L=1, params=SvmConstrainedParams(1.0, 1.0, 1.0),
                           intra_weight=1.0)
        assert intra_cluster_penalty(inst, [0, 0]) == pytest.approx(25.0)
        assert intra_cluster_penalty(inst, [0, 1] if inst.L > 1 else [0, 0]) >= 0

    def test_split_pair_pays_no_penalty(self, rng):
        inst = planted_instance(rng, L=2, rho_c=1.0)
        a_same = np.zeros(inst.n_pos, dtype=int)
        a_split = np.array([0] * 3 + [1] * 3)
        assert intra_cluster_penalty(inst, a_split) < intra_cluster_penalty(inst, a_same)

    def test_budget_violation_is_infeasible(self, rng):
        inst = random_instance(rng, L=1)
        fat = LinearModel(beta=np.full(2, 10.0), beta0=0.0)
        with pytest.raises(InfeasibilityError):
            jcc_objective(inst, np.zeros(inst.n_pos, dtype=int), [fat])


class TestEnumeration:
    def test_canonical_count_quotients_permutations(self):
        # 4 items into at most 2 blocks: 2^4 / 2 = 8 canonical assignments
        assert len(list(canonical_assignments(4, 2))) == 8
        # at most 3 blocks over 4 items: Stirling sums 1 + 7 + 6 = 14
        assert len(list(canonical_assignments(4, 3))) == 14

    def test_identical_points_group_together(self, rng):
        pos = np.array([[2.0, 0.0], [2.0, 0.0]])
        neg = rng.normal(0, 0.2, (4, 2)) - np.array([2.0, 0.0])
        inst = JccInstance(positives=pos, negatives=neg, L=2,
                           params=SvmConstrainedParams(1.0, 1.0, 2.0),
                           intra_weight=0.5)
        sol = solve_exact(inst)
        assert sol.assignment[0] == sol.assignment[1]

    def test_planted_geometry_recovered(self, rng):
        inst = planted_instance(rng)
        sol = solve_exact(inst)
        np.testing.assert_array_equal(sol.assignment, [0, 0, 0, 1, 1, 1])
        # each recovered classifier leans on its own blob's axis
        b0, b1 = sol.models[0].beta, sol.models[1].beta
        assert abs(b0[0]) > 5 * abs(b0[1])
        assert abs(b1[1]) > 5 * abs(b1[0])

    def test_single_cluster_equals_direct_training(self, rng):
        inst = random_instance(rng, L=1)
        sol = solve_exact(inst)
        direct = train_constrained(inst.positives, inst.negatives, inst.params)
        assert abs(sol.objective - direct.objective) < 1e-8

    def test_objective_decomposition_invariant(self, rng):
        inst = random_instance(rng, n_pos=4, L=2, rho_c=0.3)
        sol = solve_exact(inst)
        recomputed = jcc_objective(inst, sol.assignment, sol.models)
        assert abs(sol.objective - recomputed) < 1e-8
        assert abs(sol.objective
                   - (sum(sol.per_cluster_objectives) + sol.intra_penalty)) < 1e-8

    def test_more_clusters_never_hurt(self, rng):
        inst1 = random_instance(rng, n_pos=4, n_neg=4, L=1)
        inst2 = JccInstance(positives=inst1.positives, negatives=inst1.negatives,
                            L=2, params=inst1.params)
        inst3 = JccInstance(positives=inst1.positives, negatives=inst1.negatives,
                            L=3, params=inst1.params)
        z1 = solve_exact(inst1).objective
        z2 = solve_exact(inst2).objective
        z3 = solve_exact(inst3).objective
        assert z2 <= z1 + 1e-8
        assert z3 <= z2 + 1e-8

    def test_cap_exceeded(self, rng):
        inst = random_instance(rng, n_pos=5, L=3)
        with pytest.raises(EnumerationSizeError, match="alternating"):
            solve_exact(inst, enumeration_cap=10)

    def test_instance_file_round_trip(self, rng, tmp_path):
        inst = random_instance(rng, rho_c=0.25)
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        np.testing.assert_array_equal(loaded.positives, inst.positives)
        np.testing.assert_array_equal(loaded.negatives, inst.negatives)
        assert loaded.params == inst.params
        assert loaded.intra_weight == inst.intra_weight
        assert abs(solve_exact(loaded).objective - solve_exact(inst).objective) < 1e-12


class TestMipEquivalence:
    def test_small_random_instances(self, rng):
        for _ in range(5):
            inst = random_instance(rng, n_pos=int(rng.integers(2, 5)),
                                   n_neg=int(rng.integers(2, 5)),
                                   L=int(rng.integers(1, 3)))
            report = verify_mip_equivalence(inst)
            assert report.passed, report.detail
            assert report.difference <= 1e-8
            assert report.max_unassigned_slack <= 1e-8

    def test_single_cluster_trivially_equal(self, rng):
        report = verify_mip_equivalence(random_instance(rng, L=1))
        assert report.passed and report.difference <= 1e-10

    def test_one_positive_per_cluster(self, rng):
        inst = JccInstance(positives=rng.normal(size=(2, 2)),
                           negatives=rng.normal(size=(3, 2)), L=2,
                           params=SvmConstrainedParams(1.0, 1.0, 1.5))
        report = verify_mip_equivalence(inst)
        assert report.passed
        assert report.max_unassigned_slack <= 1e-8
        assert report.min_big_m >= 0.0
