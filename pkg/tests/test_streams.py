"""Tests for the synthetic generators and CSV ingestion."""

import numpy as np
import pytest

from dmtree import LinearModelClassifier
from dmtree.evaluation import prequential_run
from dmtree.streams import (
    SEA_THRESHOLDS,
    DriftEvent,
    DriftSchedule,
    GeneratorConfig,
    IngestionError,
    export_stream_csv,
    generate,
    ingest_csv,
)


def collect(config):
    batches = list(generate(config))
    X = np.vstack([b.features for b in batches])
    y = np.concatenate([b.labels for b in batches])
    concepts = (np.concatenate([b.concept_ids for b in batches])
                if batches[0].concept_ids is not None else None)
    return X, y, concepts


class TestSchedule:
    def test_events_must_be_ordered(self):
        with pytest.raises(ValueError, match="ordered"):
            DriftSchedule((DriftEvent(100, 100, 1), DriftEvent(50, 50, 2)))

    def test_window_must_not_be_reversed(self):
        with pytest.raises(ValueError, match="ordered"):
            DriftSchedule((DriftEvent(100, 50, 1),))

    def test_from_points_cycles_concepts(self):
        schedule = DriftSchedule.from_drift_points([10, 20, 30, 40], 4)
        assert [e.concept for e in schedule.events] == [1, 2, 3, 0]

    def test_concept_out_of_range_rejected(self):
        schedule = DriftSchedule((DriftEvent(5, 5, 9),))
        with pytest.raises(ValueError, match="concept"):
            GeneratorConfig(kind="sea", n_samples=10, schedule=schedule)


class TestSea:
    def test_shapes_and_ranges(self):
        X, y, _ = collect(GeneratorConfig(kind="sea", n_samples=2500,
                                          batch_size=400, seed=0))
        assert X.shape == (2500, 3)
        assert set(np.unique(y)) <= {0, 1}
        assert X.min() >= 0.0 and X.max() <= 1.0

    def test_noiseless_labels_follow_rule(self):
        schedule = DriftSchedule.from_drift_points([1000, 2000], 4)
        config = GeneratorConfig(kind="sea", n_samples=3000, batch_size=250,
                                 noise_probability=0.0, seed=1,
                                 schedule=schedule, emit_concept_ids=True)
        X, y, concepts = collect(config)
        raw = X * 10.0
        thresholds = np.asarray(SEA_THRESHOLDS)[concepts]
        expected = (raw[:, 0] + raw[:, 1] <= thresholds).astype(int)
        np.testing.assert_array_equal(y, expected)

    def test_abrupt_schedule_fidelity(self):
        schedule = DriftSchedule.from_drift_points([500, 1200], 4)
        config = GeneratorConfig(kind="sea", n_samples=2000, batch_size=300,
                                 seed=2, schedule=schedule,
                                 emit_concept_ids=True)
        _, _, concepts = collect(config)
        np.testing.assert_array_equal(concepts[:500], 0)
        np.testing.assert_array_equal(concepts[500:1200], 1)
        np.testing.assert_array_equal(concepts[1200:], 2)

    def test_noise_perturbs_some_labels_off_rule(self):
        config = GeneratorConfig(kind="sea", n_samples=20000, batch_size=1000,
                                 noise_probability=0.1, seed=3)
        X, y, _ = collect(config)
        raw = X * 10.0
        rule = (raw[:, 0] + raw[:, 1] <= SEA_THRESHOLDS[0]).astype(int)
        disagree = float(np.mean(rule != y))
        # one of three features is redrawn for ~10% of samples, and only
        # redraws of the first two features can cross the boundary
        assert 0.005 < disagree < 0.10

    def test_determinism(self):
        config = dict(kind="sea", n_samples=1500, batch_size=200, seed=9)
        a = collect(GeneratorConfig(**config))
        b = collect(GeneratorConfig(**config))
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


class TestAgrawal:
    def test_shapes_and_ranges(self):
        X, y, _ = collect(GeneratorConfig(kind="agrawal", n_samples=4000,
                                          batch_size=500, seed=4))
        assert X.shape == (4000, 9)
        assert X.min() >= 0.0 and X.max() <= 1.0
        assert set(np.unique(y)) == {0, 1}

    def test_all_rules_produce_both_classes(self):
        for concept in range(4):
            schedule = DriftSchedule((DriftEvent(0, 0, concept),))
            X, y, _ = collect(GeneratorConfig(
                kind="agrawal", n_samples=3000, batch_size=500, seed=5,
                noise_probability=0.0, schedule=schedule))
            assert 0.02 < y.mean() < 0.98, f"rule {concept} degenerate"

    def test_incremental_window_mixes_concepts(self):
        schedule = DriftSchedule.from_windows([(1000, 5000)], 4)
        assert schedule.events == (DriftEvent(1000, 5000, 1),)
        config = GeneratorConfig(kind="agrawal", n_samples=6000,
                                 batch_size=500, seed=6, schedule=schedule,
                                 emit_concept_ids=True)
        _, _, concepts = collect(config)
        np.testing.assert_array_equal(concepts[:1000], 0)
        window = concepts[1000:5000]
        assert set(np.unique(window)) == {0, 1}
        first_half = window[:2000].mean()
        second_half = window[2000:].mean()
        assert first_half < 0.5 < second_half  # ramp leans over time
        np.testing.assert_array_equal(concepts[5000:], 1)

    def test_categorical_feature_indices_exposed(self):
        config = GeneratorConfig(kind="agrawal", n_samples=10, seed=0)
        assert config.categorical_features == (3, 4, 5)
        X, _, _ = collect(GeneratorConfig(kind="agrawal", n_samples=2000,
                                          batch_size=500, seed=7))
        for idx, cardinality in ((3, 5), (4, 20), (5, 9)):
            assert len(np.unique(X[:, idx])) <= cardinality


class TestHyperplane:
    def test_stationary_stream_is_learnable_by_plain_model(self):
        config = GeneratorConfig(kind="hyperplane", n_samples=40000,
                                 batch_size=25, noise_probability=0.0,
                                 seed=8, n_features=5, drift_magnitude=0.0)
        learner = LinearModelClassifier(n_features=5, n_classes=2,
                                        learning_rate=0.3)
        records = prequential_run(learner, generate(config), 2)
        late = np.array([r.f1 for r in records[len(records) // 2:]])
        assert late.mean() >= 0.95

    @staticmethod
    def _separable(X, y):
        """Feasibility of a unit-margin separating hyperplane through the
        cube centre; the margin is scale-free, so this is plain
        separability."""
        from scipy.optimize import linprog
        signs = np.where(y == 1, 1.0, -1.0)
        A = -(X - 0.5) * signs[:, None]
        res = linprog(c=np.zeros(X.shape[1]), A_ub=A,
                      b_ub=np.full(len(y), -1.0),
                      bounds=[(None, None)] * X.shape[1], method="highs")
        return bool(res.success)

    def test_zero_magnitude_keeps_labels_consistent(self):
        config = GeneratorConfig(kind="hyperplane", n_samples=3000,
                                 batch_size=500, noise_probability=0.0,
                                 seed=9, n_features=5, drift_magnitude=0.0)
        X, y, _ = collect(config)
        assert self._separable(X, y)

    def test_drift_moves_the_boundary(self):
        config = GeneratorConfig(kind="hyperplane", n_samples=20000,
                                 batch_size=1000, noise_probability=0.0,
                                 seed=10, n_features=5, drift_magnitude=0.01)
        X, y, _ = collect(config)
        assert not self._separable(X, y)


class TestCsv:
    def test_string_column_first_appearance_codes(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("color,label\na,0\nb,1\na,0\n")
        batches, schema = ingest_csv(path, batch_size=10)
        X = batches[0].features
        np.testing.assert_array_equal(X[:, 0], [0.0, 1.0, 0.0])
        assert schema.categorical_features == (0,)

    def test_minmax_scaling_full_pass(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("v,label\n2,0\n4,1\n6,0\n")
        batches, _ = ingest_csv(path, batch_size=10)
        np.testing.assert_allclose(batches[0].features[:, 0], [0.0, 0.5, 1.0])

    def test_supplied_ranges_clamp(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("v,label\n-5,0\n5,1\n20,0\n")
        batches, _ = ingest_csv(path, batch_size=10,
                                feature_ranges={"v": (0.0, 10.0)})
        np.testing.assert_allclose(batches[0].features[:, 0], [0.0, 0.5, 1.0])

    def test_fractional_batching_matches_row_arithmetic(self, tmp_path):
        path = tmp_path / "big.csv"
        n = 45312
        rows = "\n".join(f"{i % 7},{i % 2}" for i in range(n))
        path.write_text("v,label\n" + rows + "\n")
        batches, schema = ingest_csv(path, batch_fraction=0.001)
        assert schema.n_rows == n
        assert batches[0].features.shape[0] == 45  # floor(45312 * 0.001)
        assert len(batches) == 1007  # ceil(45312 / 45)
        assert batches[-1].features.shape[0] == n - 45 * 1006
        assert sum(b.features.shape[0] for b in batches) == n

    def test_missing_label_column(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(IngestionError, match="label"):
            ingest_csv(path)

    def test_non_finite_value_reports_row(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("v,label\n1,0\nnan,1\n3,0\n")
        with pytest.raises(IngestionError, match="row 1"):
            ingest_csv(path)

    def test_export_round_trip(self, tmp_path):
        config = GeneratorConfig(kind="sea", n_samples=500, batch_size=100,
                                 seed=11)
        path = tmp_path / "out.csv"
        written = export_stream_csv(generate(config), path)
        assert written == 500
        batches, schema = ingest_csv(path, batch_size=100,
                                     feature_ranges={f"f{j}": (0.0, 1.0)
                                                     for j in range(3)})
        again = np.vstack([b.features for b in batches])
        original = np.vstack([b.features for b in generate(config)])
        np.testing.assert_array_equal(again, original)
        assert schema.n_classes == 2

    def test_concept_debug_column(self, tmp_path):
        config = GeneratorConfig(
            kind="sea", n_samples=300, batch_size=100, seed=12,
            schedule=DriftSchedule.from_drift_points([150], 4),
            emit_concept_ids=True)
        path = tmp_path / "out.csv"
        export_stream_csv(generate(config), path, include_concept_ids=True)
        header = path.read_text().splitlines()[0]
        assert header == "f0,f1,f2,label,concept"
        batches, schema = ingest_csv(path, batch_size=100,
                                     exclude_columns=("concept",))
        assert schema.n_features == 3

    def test_shuffle_is_seeded(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("v,label\n" + "\n".join(f"{i},{i % 2}"
                                                for i in range(50)) + "\n")
        a, _ = ingest_csv(path, batch_size=50, shuffle_seed=3)
        b, _ = ingest_csv(path, batch_size=50, shuffle_seed=3)
        c, _ = ingest_csv(path, batch_size=50, shuffle_seed=4)
        np.testing.assert_array_equal(a[0].features, b[0].features)
        assert not np.array_equal(a[0].features, c[0].features)


class TestCsvEdgeCases:
    def test_constant_column_normalizes_to_zero(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("a,b,label\n3,1,0\n3,2,1\n3,3,0\n")
        batches, _ = ingest_csv(path, batch_size=10)
        np.testing.assert_array_equal(batches[0].features[:, 0], 0.0)
        np.testing.assert_allclose(batches[0].features[:, 1], [0, 0.5, 1.0])

    def test_invalid_batch_controls_rejected(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("a,label\n1,0\n2,1\n")
        with pytest.raises(ValueError, match="batch_size"):
            ingest_csv(path, batch_size=0)
        with pytest.raises(ValueError, match="batch_fraction"):
            ingest_csv(path, batch_fraction=0.0)
        with pytest.raises(ValueError, match="not both"):
            ingest_csv(path, batch_size=1, batch_fraction=0.5)

    def test_single_class_file_rejected(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("a,label\n1,0\n2,0\n")
        with pytest.raises(IngestionError, match="classes"):
            ingest_csv(path, batch_size=1)
