"""Schema, CSV round trips, scaling, windowing and the synthetic generator."""

import numpy as np
import pytest

from proact.data import (
    FeatureSchema,
    Normalizer,
    RawSeries,
    SynthConfig,
    apply_normalizer,
    chronological_split,
    fit_normalizer,
    load_csv,
    load_labels,
    load_schema,
    make_windows,
    one_hot,
    one_hot_codes,
    save_csv,
    save_labels,
    save_schema,
    synth_generate,
)
from proact.errors import ConfigError, DataError


def small_schema():
    return FeatureSchema(("a", "b"), (("s", 3),))


class TestFeatureSchema:
    def test_counts_and_default_embedding(self):
        schema = FeatureSchema(("x",), (("u", 2), ("v", 5)))
        assert schema.c == 1
        assert schema.d == 2
        assert schema.cardinalities == (2, 5)
        assert schema.embedding_dim == 5

    def test_duplicate_names_rejected(self):
        with pytest.raises(ConfigError):
            FeatureSchema(("x", "x"), ())

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            FeatureSchema((), ())

    def test_embedding_below_cardinality_rejected(self):
        with pytest.raises(ConfigError):
            FeatureSchema((), (("u", 4),), embedding_dim=3)

    def test_dict_roundtrip(self, tmp_path):
        schema = FeatureSchema(("x", "y"), (("u", 2),), embedding_dim=4)
        again = FeatureSchema.from_dict(schema.to_dict())
        assert again == schema
        save_schema(schema, tmp_path / "schema.json")
        assert load_schema(tmp_path / "schema.json") == schema


class TestRawSeries:
    def test_width_mismatch(self):
        with pytest.raises(DataError):
            RawSeries(np.zeros((4, 2)), small_schema())

    def test_non_finite_reports_position(self):
        values = np.zeros((4, 3))
        values[2, 1] = np.nan
        with pytest.raises(DataError, match="row 2"):
            RawSeries(values, small_schema())

    def test_non_integer_code_rejected(self):
        values = np.zeros((3, 3))
        values[1, 2] = 0.5
        with pytest.raises(DataError, match="non-integer"):
            RawSeries(values, small_schema())

    def test_code_out_of_cardinality(self):
        values = np.zeros((3, 3))
        values[0, 2] = 3
        with pytest.raises(DataError, match="cardinality"):
            RawSeries(values, small_schema())

    def test_label_length_checked(self):
        with pytest.raises(DataError):
            RawSeries(np.zeros((3, 3)), small_schema(), labels=np.zeros(2, dtype=int))

    def test_labels_binary(self):
        with pytest.raises(DataError):
            RawSeries(np.zeros((3, 3)), small_schema(), labels=np.array([0, 2, 0]))

    def test_values_frozen(self):
        series = RawSeries(np.zeros((3, 3)), small_schema())
        with pytest.raises(ValueError):
            series.values[0, 0] = 1.0

    def test_views(self):
        values = np.array([[1.0, 2.0, 1], [3.0, 4.0, 2]])
        series = RawSeries(values, small_schema())
        assert np.array_equal(series.continuous(), [[1.0, 2.0], [3.0, 4.0]])
        assert series.discrete_codes().dtype == np.int64
        assert np.array_equal(series.discrete_codes(), [[1], [2]])


class TestCsv:
    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        values = np.concatenate([rng.normal(0, 3, (20, 2)), rng.integers(0, 3, (20, 1))], axis=1)
        series = RawSeries(values, small_schema())
        save_csv(series, tmp_path / "x.csv")
        again = load_csv(tmp_path / "x.csv", small_schema())
        assert np.array_equal(again.values, series.values)

    def test_columns_mapped_by_name(self, tmp_path):
        (tmp_path / "x.csv").write_text("s,b,a\n1,2.5,0.5\n")
        series = load_csv(tmp_path / "x.csv", small_schema())
        assert np.array_equal(series.values, [[0.5, 2.5, 1.0]])

    def test_missing_column(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="missing column"):
            load_csv(tmp_path / "x.csv", small_schema())

    def test_bad_cell_reports_position(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b,s\n1,2,0\n1,oops,0\n")
        with pytest.raises(DataError, match="row 1"):
            load_csv(tmp_path / "x.csv", small_schema())

    def test_labels_roundtrip(self, tmp_path):
        labels = np.array([0, 1, 1, 0, 1])
        save_labels(labels, tmp_path / "labels.csv")
        assert np.array_equal(load_labels(tmp_path / "labels.csv"), labels)

    def test_labels_binary_checked(self, tmp_path):
        (tmp_path / "labels.csv").write_text("0\n2\n")
        with pytest.raises(DataError):
            load_labels(tmp_path / "labels.csv")


class TestOneHot:
    def test_positions(self):
        codes = np.array([[0, 2], [1, 0]])
        out = one_hot_codes(codes, 4)
        assert out.shape == (2, 2, 4)
        assert out[0, 0, 0] == 1.0 and out[0, 1, 2] == 1.0
        assert out[1, 0, 1] == 1.0 and out[1, 1, 0] == 1.0
        assert out.sum() == 4.0

    def test_padding_slots_zero(self):
        schema = FeatureSchema((), (("u", 2),), embedding_dim=5)
        series = RawSeries(np.array([[1.0], [0.0]]), schema)
        out = one_hot(series)
        assert np.all(out[:, :, 2:] == 0.0)

    def test_requires_discrete(self):
        series = RawSeries(np.zeros((2, 1)), FeatureSchema(("x",), ()))
        with pytest.raises(DataError):
            one_hot(series)


class TestNormalizer:
    def test_minmax_to_unit_interval(self):
        rng = np.random.default_rng(1)
        values = rng.normal(5, 10, (50, 2))
        series = RawSeries(values, FeatureSchema(("x", "y"), ()))
        norm = fit_normalizer(series)
        scaled = apply_normalizer(norm, series)
        assert scaled.values.min() >= 0.0 and scaled.values.max() <= 1.0
        assert np.isclose(scaled.values.max(axis=0), 1.0).all()
        assert np.isclose(scaled.values.min(axis=0), 0.0).all()

    def test_constant_column_maps_to_zero(self):
        values = np.column_stack([np.full(10, 7.0), np.arange(10.0)])
        series = RawSeries(values, FeatureSchema(("x", "y"), ()))
        norm = fit_normalizer(series)
        scaled = apply_normalizer(norm, series)
        assert np.all(scaled.values[:, 0] == 0.0)

    def test_inverse_roundtrip(self):
        rng = np.random.default_rng(2)
        cont = rng.normal(0, 4, (30, 3))
        norm = Normalizer(cont.min(axis=0), cont.max(axis=0))
        assert np.allclose(norm.inverse_continuous(norm.transform_continuous(cont)), cont)

    def test_discrete_untouched(self):
        values = np.column_stack([np.arange(10.0), np.arange(10) % 3])
        series = RawSeries(values, FeatureSchema(("x",), (("s", 3),)))
        scaled = apply_normalizer(fit_normalizer(series), series)
        assert np.array_equal(scaled.values[:, 1], values[:, 1])

    def test_needs_two_timesteps(self):
        series = RawSeries(np.zeros((1, 1)), FeatureSchema(("x",), ()))
        with pytest.raises(DataError):
            fit_normalizer(series)


class TestWindows:
    def test_shapes_and_values(self):
        values = np.arange(24.0).reshape(8, 3)
        series = RawSeries(values, FeatureSchema(("x", "y", "z"), ()))
        batch = make_windows(series, 5)
        assert batch.inputs.shape == (3, 5, 3)
        assert batch.targets.shape == (3, 3)
        for i in range(3):
            assert np.array_equal(batch.inputs[i], values[i : i + 5])
            assert np.array_equal(batch.targets[i], values[i + 5])

    def test_too_short(self):
        series = RawSeries(np.zeros((5, 1)), FeatureSchema(("x",), ()))
        with pytest.raises(DataError, match="too short"):
            make_windows(series, 5)

    def test_horizon_fixed(self):
        series = RawSeries(np.zeros((10, 1)), FeatureSchema(("x",), ()))
        with pytest.raises(ConfigError):
            make_windows(series, 5, horizon=2)

    def test_split_chronological(self):
        values = np.arange(10.0)[:, None]
        labels = np.array([0] * 9 + [1])
        series = RawSeries(values, FeatureSchema(("x",), ()), labels)
        head, tail = chronological_split(series, 0.2)
        assert head.timesteps == 8 and tail.timesteps == 2
        assert np.array_equal(tail.values[:, 0], [8.0, 9.0])
        assert tail.labels.sum() == 1


class TestSynth:
    def test_deterministic(self):
        cfg = SynthConfig(train_length=200, test_length=150, anomaly_count=1, anomaly_length=8)
        a_train, a_test = synth_generate(cfg, seed=9)
        b_train, b_test = synth_generate(cfg, seed=9)
        assert np.array_equal(a_train.values, b_train.values)
        assert np.array_equal(a_test.values, b_test.values)
        assert np.array_equal(a_test.labels, b_test.labels)

    def test_shapes_and_schema(self):
        cfg = SynthConfig(
            continuous_channels=2, cardinalities=(2,), train_length=100, test_length=80,
            anomaly_count=1, anomaly_length=5,
        )
        train, test = synth_generate(cfg, seed=0)
        assert train.values.shape == (100, 3)
        assert test.values.shape == (80, 3)
        assert train.labels is None
        assert test.labels.shape == (80,)
        assert train.schema.continuous_cols == ("v0", "v1")
        assert train.schema.discrete_cols == (("s0", 2),)

    def test_injection_is_level_shift_plus_ramp(self):
        cfg = SynthConfig(train_length=300, test_length=400, anomaly_count=2,
                          anomaly_length=10, anomaly_magnitude=6.0, precursor_length=5)
        clean_cfg = SynthConfig(train_length=300, test_length=400, anomaly_count=0,
                                anomaly_length=10, anomaly_magnitude=6.0, precursor_length=5)
        _, test = synth_generate(cfg, seed=4)
        _, clean = synth_generate(clean_cfg, seed=4)
        c = cfg.continuous_channels
        delta = test.values[:, :c] - clean.values[:, :c]
        labeled = test.labels == 1
        assert np.allclose(delta[labeled], 6.0)
        # precursor ramps up to half the magnitude just before each segment
        starts = np.flatnonzero(np.diff(np.concatenate([[0], test.labels])) == 1)
        for s in starts:
            ramp = delta[s - 5 : s, 0]
            assert np.all(np.diff(ramp) > 0)
            assert np.isclose(ramp[-1], 3.0)
        # everything else untouched
        near = np.zeros(400, dtype=bool)
        for s in starts:
            near[s - 5 : s] = True
        assert np.allclose(delta[~labeled & ~near], 0.0)
        assert np.array_equal(test.values[:, c:], clean.values[:, c:])

    def test_labels_match_segment_spec(self):
        cfg = SynthConfig(train_length=200, test_length=600, anomaly_count=3, anomaly_length=12)
        _, test = synth_generate(cfg, seed=5)
        assert test.labels.sum() == 36
        runs = np.flatnonzero(np.diff(np.concatenate([[0], test.labels, [0]])))
        assert len(runs) == 6  # three [start, end) pairs

    def test_all_anomalous_rejected(self):
        with pytest.raises(ConfigError):
            SynthConfig(test_length=100, anomaly_count=2, anomaly_length=50)

    def test_segments_must_fit(self):
        with pytest.raises(ConfigError):
            SynthConfig(test_length=50, anomaly_count=3, anomaly_length=10)

    def test_discrete_codes_within_cardinality(self):
        cfg = SynthConfig(train_length=150, test_length=120, anomaly_count=1,
                          cardinalities=(2, 4), anomaly_length=6)
        train, test = synth_generate(cfg, seed=6)
        codes = np.concatenate([train.discrete_codes(), test.discrete_codes()])
        assert codes[:, 0].max() <= 1 and codes[:, 1].max() <= 3
        assert codes.min() >= 0

    def test_config_dict_roundtrip(self):
        cfg = SynthConfig(train_length=300, test_length=200, anomaly_count=2, period=30.0)
        assert SynthConfig.from_dict(cfg.to_dict()) == cfg
