"""Tests for the prequential harness, metrics and record persistence."""

import numpy as np
import pytest
import sklearn.metrics

from dmtree.evaluation import (
    PrequentialRecord,
    count_parameters,
    count_splits,
    export_records,
    f1_score,
    load_records,
    prequential_run,
    records_to_csv,
    rolling_stats,
    sliding_aggregate,
)


class TestF1:
    def test_perfect_prediction(self):
        assert f1_score([0, 1, 1, 0], [0, 1, 1, 0], 2) == 1.0

    def test_all_negative_prediction(self):
        assert f1_score([0, 0, 1, 1], [0, 0, 0, 0], 2) == 0.0

    def test_hand_computed_confusion(self):
        # tp=3, fp=1, fn=2: precision .75, recall .6, F1 = 2*.45/1.35
        y_true = [1, 1, 1, 1, 1, 0, 0, 0]
        y_pred = [1, 1, 1, 0, 0, 1, 0, 0]
        assert f1_score(y_true, y_pred, 2) == pytest.approx(2 * 0.45 / 1.35)
        assert f1_score(y_true, y_pred, 2) == pytest.approx(0.6667, abs=5e-5)

    def test_macro_on_binary_counts_both_classes(self):
        # constant prediction on a balanced batch: 2/3 for the predicted
        # class, 0 for the other
        score = f1_score([0, 1, 0, 1], [0, 0, 0, 0], 2, average="macro")
        assert score == pytest.approx(1.0 / 3.0)

    def test_macro_excludes_classes_absent_from_truth(self):
        # class 2 never occurs in the truth: denominator is two classes
        score = f1_score([0, 1, 0, 1], [0, 1, 0, 2], 3, average="macro")
        by_hand = (1.0 + 2 / 3) / 2
        assert score == pytest.approx(by_hand)

    def test_matches_sklearn_on_random_batches(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            c = int(rng.integers(2, 6))
            n = int(rng.integers(2, 60))
            y_true = rng.integers(0, c, n)
            y_pred = rng.integers(0, c, n)
            expected = sklearn.metrics.f1_score(
                y_true, y_pred, labels=np.unique(y_true), average="macro",
                zero_division=0)
            assert f1_score(y_true, y_pred, c, average="macro") == \
                pytest.approx(expected, abs=1e-12)
            if c == 2:
                binary = sklearn.metrics.f1_score(y_true, y_pred,
                                                  zero_division=0)
                assert f1_score(y_true, y_pred, 2) == pytest.approx(
                    binary, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            f1_score([0, 1], [0], 2)


class TestCounts:
    def test_binary_tree_counting(self):
        report = {"n_inner": 2, "n_leaves": 3, "n_features": 4,
                  "leaf_parameter_count": 5}
        assert count_splits(report, 2) == 5

    def test_multiclass_leaf_counting(self):
        report = {"n_inner": 0, "n_leaves": 1, "n_features": 4,
                  "leaf_parameter_count": 30}
        assert count_splits(report, 6) == 6

    def test_fresh_binary_tree_counts_one(self):
        report = {"n_inner": 0, "n_leaves": 1, "n_features": 3,
                  "leaf_parameter_count": 4}
        assert count_splits(report, 2) == 1

    def test_parameter_conventions(self):
        report = {"n_inner": 1, "n_leaves": 2, "n_features": 3,
                  "leaf_parameter_count": 4}
        assert count_parameters(report, 2, "reported") == 1 + 2 * 3
        assert count_parameters(report, 2, "internal") == 1 + 2 * 4
        fresh = {"n_inner": 0, "n_leaves": 1, "n_features": 50,
                 "leaf_parameter_count": 51}
        assert count_parameters(fresh, 2, "reported") == 50

    def test_unknown_convention(self):
        with pytest.raises(ValueError, match="convention"):
            count_parameters({"n_inner": 0, "n_leaves": 1, "n_features": 1,
                              "leaf_parameter_count": 2}, 2, "folklore")


class _SpyLearner:
    """Records the call order and predicts a constant class."""

    def __init__(self, constant=0):
        self.constant = constant
        self.calls = []
        self.trained_batches = 0

    def predict(self, X):
        self.calls.append(("predict", self.trained_batches))
        return np.full(X.shape[0], self.constant, dtype=np.int64)

    def partial_fit(self, X, y):
        self.calls.append(("fit", self.trained_batches))
        self.trained_batches += 1
        return self

    def describe(self):
        return {"n_inner": 0, "n_leaves": 1, "n_features": 2,
                "leaf_parameter_count": 3}


class _OracleLearner(_SpyLearner):
    def __init__(self):
        super().__init__()
        self._next = None

    def predict(self, X):
        return self._pending

    def partial_fit(self, X, y):
        return self

    def feed(self, y):
        self._pending = y


def balanced_batches(n_batches, batch_size=10, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_batches):
        X = rng.random((batch_size, 2))
        y = np.tile([0, 1], batch_size // 2)
        out.append((X, y))
    return out


class TestPrequentialRun:
    def test_predict_happens_before_train_each_iteration(self):
        spy = _SpyLearner()
        prequential_run(spy, balanced_batches(5), 2)
        assert spy.calls == [(kind, i) for i in range(5)
                             for kind in ("predict", "fit")]

    def test_constant_learner_on_balanced_binary_macro(self):
        spy = _SpyLearner(constant=0)
        records = prequential_run(spy, balanced_batches(8), 2)
        for record in records:
            assert record.f1 == pytest.approx(1.0 / 3.0)

    def test_perfect_oracle_scores_one(self):
        oracle = _OracleLearner()
        batches = balanced_batches(4)

        def feeding():
            for X, y in batches:
                oracle.feed(y)
                yield X, y

        records = prequential_run(oracle, feeding(), 2)
        assert all(r.f1 == 1.0 for r in records)

    def test_records_carry_iteration_order_and_sizes(self):
        spy = _SpyLearner()
        records = prequential_run(spy, balanced_batches(6, batch_size=14), 2)
        assert [r.iteration for r in records] == list(range(6))
        assert all(r.batch_size == 14 for r in records)
        assert all(r.n_splits == 1 for r in records)

    def test_empty_stream_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            prequential_run(_SpyLearner(), [], 2)

    def test_injected_timer_is_used(self):
        spy = _SpyLearner()
        records = prequential_run(spy, balanced_batches(3), 2,
                                  timer=lambda: 0.0)
        assert all(r.elapsed == 0.0 for r in records)


class TestSlidingAggregation:
    def test_constant_series(self):
        means, stds = rolling_stats([2.0] * 10, window=4)
        np.testing.assert_allclose(means, 2.0)
        np.testing.assert_allclose(stds, 0.0)

    def test_window_one_returns_raw_series(self):
        series = [0.5, 0.1, 0.9]
        means, stds = rolling_stats(series, window=1)
        np.testing.assert_allclose(means, series)
        np.testing.assert_allclose(stds, 0.0)

    def test_alternating_series_population_convention(self):
        means, stds = rolling_stats([0.0, 1.0] * 4, window=2)
        np.testing.assert_allclose(means[1:], 0.5)
        np.testing.assert_allclose(stds[1:], 0.5)

    def test_prefix_windows_use_available_data(self):
        means, _ = rolling_stats([1.0, 3.0, 5.0, 7.0], window=3)
        np.testing.assert_allclose(means, [1.0, 2.0, 3.0, 5.0])

    def test_shift_linearity(self):
        rng = np.random.default_rng(4)
        series = rng.random(30)
        base, _ = rolling_stats(series, window=5)
        shifted, _ = rolling_stats(series + 1.5, window=5)
        np.testing.assert_allclose(shifted, base + 1.5, atol=1e-12)

    def test_aggregates_all_record_fields(self):
        records = [PrequentialRecord(i, 0.5, 3, 7, 0.01, 10)
                   for i in range(25)]
        series = sliding_aggregate(records, window=20)
        assert set(series) == {"f1_mean", "f1_std", "n_splits_mean",
                               "n_splits_std", "n_parameters_mean",
                               "n_parameters_std", "elapsed_mean",
                               "elapsed_std"}
        np.testing.assert_allclose(series["f1_mean"], 0.5)

    def test_bad_window(self):
        with pytest.raises(ValueError, match="window"):
            rolling_stats([1.0], window=0)


class TestPersistence:
    def _sample_records(self):
        return [
            PrequentialRecord(0, 1 / 3, 5, 17, 0.25, 100),
            PrequentialRecord(1, 0.7531863417234, 6, 19, 0.125, 100),
        ]

    def test_header_only_for_empty(self, tmp_path):
        path = tmp_path / "metrics.csv"
        export_records([], path)
        assert path.read_text() == ("iteration,f1,n_splits,n_parameters,"
                                    "elapsed,batch_size\n")

    def test_csv_round_trip_is_lossless(self, tmp_path):
        path = tmp_path / "metrics.csv"
        records = self._sample_records()
        export_records(records, path)
        assert load_records(path) == records

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "metrics.json"
        records = self._sample_records()
        export_records(records, path, format="json")
        assert load_records(path) == records

    def test_column_order_is_stable(self):
        text = records_to_csv(self._sample_records())
        header, first, _ = text.splitlines()[:3]
        assert header == "iteration,f1,n_splits,n_parameters,elapsed,batch_size"
        assert first.split(",")[0] == "0"

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            export_records([], tmp_path / "x", format="xml")
