import numpy as np
import pytest

from clustclass.errors import ConfigError
from clustclass.evaluate import roc_curve
from clustclass.jcc import JccInstance, solve_exact
from clustclass.svm import SvmConstrainedParams
from clustclass.synth import (PlantedTruth, SynthConfig, generate_planted,
                              recovery_accuracy)


class TestGenerator:
    def test_deterministic_per_seed(self):
        cfg = SynthConfig(D=6, L_true=2, support_size=2, N=200, seed=4)
        d1, t1 = generate_planted(cfg)
        d2, t2 = generate_planted(cfg)
        np.testing.assert_array_equal(d1.features, d2.features)
        np.testing.assert_array_equal(t1.assignment, t2.assignment)
        d3, _ = generate_planted(SynthConfig(D=6, L_true=2, support_size=2,
                                             N=200, seed=5))
        assert not np.array_equal(d1.features, d3.features)

    def test_class_ratio_within_one_over_n(self):
        for ratio in (0.1697, 0.3, 0.45):
            cfg = SynthConfig(D=4, L_true=2, support_size=1, N=500,
                              positive_ratio=ratio, seed=1)
            d, _ = generate_planted(cfg)
            assert abs((d.labels == 1).mean() - ratio) <= 1.0 / cfg.N

    def test_disjoint_supports(self):
        cfg = SynthConfig(D=10, L_true=3, support_size=2, N=100, seed=0)
        _, truth = generate_planted(cfg)
        flat = [j for s in truth.supports for j in s]
        assert len(flat) == len(set(flat)) == 6

    def test_infeasible_supports_rejected(self):
        with pytest.raises(ConfigError):
            SynthConfig(D=3, L_true=2, support_size=2, N=100)

    def test_cluster_means_shifted_on_support(self):
        cfg = SynthConfig(D=6, L_true=2, support_size=2, N=4000,
                          positive_ratio=0.4, separation=5.0, seed=2)
        d, truth = generate_planted(cfg)
        pos = d.features[d.labels == 1]
        for l, support in enumerate(truth.supports):
            members = pos[truth.assignment == l]
            on = members[:, list(support)].mean()
            off = np.delete(members, list(support), axis=1).mean()
            assert on > 4.0 and abs(off) < 0.5

    def test_poisson_family_counts(self):
        cfg = SynthConfig(D=5, L_true=2, support_size=2, N=300, seed=3,
                          family="poisson", noise_sd=1.0, separation=3.0)
        d, _ = generate_planted(cfg)
        assert (d.features >= 0).all()
        assert np.allclose(d.features, np.round(d.features))

    def test_skewed_cluster_sizes(self):
        cfg = SynthConfig(D=6, L_true=2, support_size=2, N=400,
                          positive_ratio=0.5, seed=6, cluster_skew=(3.0, 1.0))
        _, truth = generate_planted(cfg)
        counts = np.bincount(truth.assignment, minlength=2)
        assert counts[0] > 2 * counts[1]

    def test_zero_separation_is_chance_level(self):
        cfg = SynthConfig(D=5, L_true=2, support_size=1, N=3000,
                          separation=0.0, seed=7)
        d, _ = generate_planted(cfg)
        # score by any fixed direction: labels carry no signal
        scores = d.features @ np.ones(5)
        auc = roc_curve(scores, d.labels).auc
        assert abs(auc - 0.5) < 0.05


class TestRecoveryHelpers:
    def test_permutation_invariant_accuracy(self):
        planted = np.array([0, 0, 1, 1])
        assert recovery_accuracy(np.array([1, 1, 0, 0]), planted, 2) == 1.0
        assert recovery_accuracy(np.array([0, 1, 0, 1]), planted, 2) == 0.5

    def test_exact_solver_recovers_planted_structure(self):
        cfg = SynthConfig(D=2, L_true=2, support_size=1, N=40,
                          positive_ratio=0.2, separation=8.0, seed=11)
        d, truth = generate_planted(cfg)
        inst = JccInstance(positives=d.positives(), negatives=d.negatives(),
                           L=2, params=SvmConstrainedParams(1.0, 1.0, 2.0))
        sol = solve_exact(inst)
        assert recovery_accuracy(sol.assignment, truth.assignment, 2) == 1.0
