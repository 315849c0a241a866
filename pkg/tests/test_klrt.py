import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clustclass.data import QuantizedDataset
from clustclass.errors import FitError
from clustclass.klrt import (feature_importance, fit_lrt, row_log_ratios,
                             score_klrt, score_rows)


def make_quantized(levels, labels, level_counts=None):
    levels = np.atleast_2d(np.asarray(levels, dtype=np.int64))
    if level_counts is None:
        level_counts = tuple(int(levels[:, j].max()) + 1
                             for j in range(levels.shape[1]))
    return QuantizedDataset(levels=levels, level_counts=level_counts,
                            labels=np.asarray(labels))


class TestFit:
    def test_empirical_frequencies(self):
        q = make_quantized([[0], [0], [1], [0]], [1, 1, 1, -1], level_counts=(2,))
        m = fit_lrt(q, smoothing=0.0)
        np.testing.assert_allclose(m.tables[0][1], [2 / 3, 1 / 3])
        np.testing.assert_allclose(m.tables[0][0], [1.0, 0.0])

    def test_additive_smoothing(self):
        q = make_quantized([[0], [0], [1], [0]], [1, 1, 1, -1], level_counts=(2,))
        m = fit_lrt(q, smoothing=1.0)
        np.testing.assert_allclose(m.tables[0][1], [3 / 5, 2 / 5])

    def test_pmfs_sum_to_one(self, rng):
        levels = rng.integers(0, 4, size=(30, 5))
        labels = np.where(rng.random(30) < 0.4, 1, -1)
        labels[:2] = [1, -1]
        m = fit_lrt(make_quantized(levels, labels, (4,) * 5), smoothing=0.7)
        for t in m.tables:
            np.testing.assert_allclose(t.sum(axis=1), 1.0, atol=1e-12)
            assert (t > 0).all()

    def test_missing_class_errors(self):
        q = make_quantized([[0], [1]], [1, 1], level_counts=(2,))
        with pytest.raises(FitError):
            fit_lrt(q)

    def test_unseen_level_zero_mass_without_smoothing(self):
        q = make_quantized([[0], [0]], [1, -1], level_counts=(3,))
        m = fit_lrt(q, smoothing=0.0)
        assert m.tables[0][1][2] == 0.0


class TestScore:
    def test_full_k_equals_naive_bayes_log_ratio(self, rng):
        levels = rng.integers(0, 3, size=(40, 4))
        labels = np.where(rng.random(40) < 0.45, 1, -1)
        labels[:2] = [1, -1]
        q = make_quantized(levels, labels, (3,) * 4)
        m = fit_lrt(q, smoothing=1.0)
        # brute-force oracle: product of per-level pmf ratios, in logs
        for i in range(5):
            row = levels[i]
            expected = 0.0
            for j in range(4):
                expected += (np.log(m.tables[j][1][row[j]])
                             - np.log(m.tables[j][0][row[j]]))
            got, feats = score_klrt(m, row, K=4)
            assert abs(got - expected) < 1e-10
            assert sorted(feats) == [0, 1, 2, 3]

    def test_top_k_sort_and_sum(self):
        # craft binary tables whose level-0 log-ratios are 2.0, -1.0, 0.5
        from clustclass.klrt import LrtModel

        def table_with_log_ratio(lr):
            p = np.exp(lr) / (1 + np.exp(lr))  # log(p / (1-p)) = lr
            return np.stack([np.array([1 - p, p]), np.array([p, 1 - p])])

        m = LrtModel(tables=tuple(table_with_log_ratio(lr) for lr in (2.0, -1.0, 0.5)),
                     level_counts=(2, 2, 2), smoothing=1.0)
        ratios = row_log_ratios(m, [0, 0, 0])
        np.testing.assert_allclose(ratios, [2.0, -1.0, 0.5], atol=1e-12)
        score, feats = score_klrt(m, [0, 0, 0], K=2)
        assert abs(score - 2.5) < 1e-12
        assert feats == [0, 2]

    def test_ties_break_to_lower_index(self):
        from clustclass.klrt import LrtModel
        t = np.array([[0.5, 0.5], [0.5, 0.5]])
        m = LrtModel(tables=(t, t, t), level_counts=(2, 2, 2), smoothing=1.0)
        score, feats = score_klrt(m, [0, 0, 0], K=2)
        assert score == 0.0
        assert feats == [0, 1]

    def test_k_out_of_range(self):
        q = make_quantized([[0], [1]], [1, -1], level_counts=(2,))
        m = fit_lrt(q)
        with pytest.raises(ValueError):
            score_klrt(m, [0], K=0)
        with pytest.raises(ValueError):
            score_klrt(m, [0], K=2)

    def test_infinite_ratio_conventions(self):
        q = make_quantized([[0], [1]], [1, -1], level_counts=(3,))
        m = fit_lrt(q, smoothing=0.0)
        ratios = row_log_ratios(m, [0])
        assert ratios[0] == np.inf  # seen only in the positive class
        ratios = row_log_ratios(m, [1])
        assert ratios[0] == -np.inf
        ratios = row_log_ratios(m, [2])  # unseen in both: treated as 0
        assert ratios[0] == 0.0

    def test_score_rows_matches_single(self, rng):
        levels = rng.integers(0, 3, size=(25, 6))
        labels = np.where(rng.random(25) < 0.5, 1, -1)
        labels[:2] = [1, -1]
        q = make_quantized(levels, labels, (3,) * 6)
        m = fit_lrt(q, smoothing=0.5)
        batch = score_rows(m, q, K=3)
        singles = [score_klrt(m, row, K=3)[0] for row in levels]
        np.testing.assert_allclose(batch, singles, atol=1e-12)

    @given(st.integers(1, 6))
    @settings(max_examples=12, deadline=None)
    def test_top_set_nested_in_k(self, k):
        rng = np.random.default_rng(3)
        levels = rng.integers(0, 3, size=(30, 6))
        labels = np.where(rng.random(30) < 0.5, 1, -1)
        labels[:2] = [1, -1]
        m = fit_lrt(make_quantized(levels, labels, (3,) * 6), smoothing=1.0)
        row = levels[0]
        _, feats_k = score_klrt(m, row, K=k)
        if k < 6:
            _, feats_k1 = score_klrt(m, row, K=k + 1)
            assert set(feats_k) <= set(feats_k1)

    def test_smoothing_keeps_scores_finite(self, rng):
        levels = rng.integers(0, 4, size=(50, 8))
        labels = np.where(rng.random(50) < 0.2, 1, -1)
        labels[:2] = [1, -1]
        q = make_quantized(levels, labels, (4,) * 8)
        m = fit_lrt(q, smoothing=1.0)
        assert np.isfinite(score_rows(m, q, K=8)).all()


class TestImportance:
    def test_dominant_feature_ranks_first(self, rng):
        n = 200
        labels = np.concatenate([np.ones(60, dtype=int), -np.ones(140, dtype=int)])
        signal = np.where(labels == 1,
                          rng.integers(2, 4, size=n), rng.integers(0, 2, size=n))
        noise = rng.integers(0, 4, size=(n, 3))
        levels = np.column_stack([signal, noise])
        q = make_quantized(levels, labels, (4,) * 4)
        m = fit_lrt(q, smoothing=1.0)
        ranking = feature_importance(m, q)
        assert ranking[0][0] == 0
        scores = [s for _, s in ranking]
        assert scores == sorted(scores, reverse=True)

    def test_identical_features_tie(self, rng):
        labels = np.where(rng.random(100) < 0.4, 1, -1)
        labels[:2] = [1, -1]
        col = rng.integers(0, 3, size=100)
        levels = np.column_stack([col, col])
        q = make_quantized(levels, labels, (3, 3))
        m = fit_lrt(q, smoothing=1.0)
        ranking = dict(feature_importance(m, q))
        assert abs(ranking[0] - ranking[1]) < 1e-9

    def test_ranked_table_shape(self, rng):
        levels = rng.integers(0, 3, size=(80, 10))
        labels = np.where(rng.random(80) < 0.4, 1, -1)
        labels[:2] = [1, -1]
        q = make_quantized(levels, labels, (3,) * 10)
        m = fit_lrt(q, smoothing=1.0)
        ranking = feature_importance(m, q)
        assert len(ranking) == 10
        scores = [s for _, s in ranking]
        assert scores == sorted(scores, reverse=True)
