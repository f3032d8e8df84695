"""Segment spectra, basis sets and convex-hull membership.

The DFT is checked against numpy's FFT and the LP-based hull test against a
cross-product geometric oracle in two dimensions.
"""

import numpy as np
import pytest

from proact.data import FeatureSchema, RawSeries
from proact.errors import DataError
from proact.spectral import (
    BASIS_EPS,
    LP_TOL,
    SEGMENT_LENGTH,
    anomaly_end_indices,
    basis_set,
    extract_segments,
    forecastability_report,
    hull_membership,
    irdft,
    rdft,
    spectral_sample,
    superset_equal,
)


def hull_2d(points):
    """Andrew's monotone chain, counter-clockwise."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def point_on_segment(a, b, q, tol):
    ab = np.subtract(b, a)
    aq = np.subtract(q, a)
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*aq)) <= tol
    t = float(np.clip(aq @ ab / denom, 0.0, 1.0))
    return float(np.hypot(*(aq - t * ab))) <= tol


def oracle_inside_2d(points, q, tol=1e-9):
    """Half-plane membership test against every hull edge."""
    hull = hull_2d(points)
    if len(hull) == 1:
        return bool(np.hypot(q[0] - hull[0][0], q[1] - hull[0][1]) <= tol)
    if len(hull) == 2:
        return point_on_segment(hull[0], hull[1], q, tol)
    for a, b in zip(hull, hull[1:] + hull[:1]):
        edge = np.subtract(b, a)
        cross = edge[0] * (q[1] - a[1]) - edge[1] * (q[0] - a[0])
        if cross < -tol * max(1.0, float(np.hypot(*edge))):
            return False
    return True


class TestExtractSegments:
    def test_train_window_count(self):
        segs = extract_segments(np.arange(10.0), None, "train")
        assert len(segs) == 5
        assert np.array_equal(segs[0], np.arange(6.0))
        assert np.array_equal(segs[4], np.arange(4.0, 10.0))

    def test_anomaly_needs_full_history(self):
        values = np.arange(6.0)
        labels = np.array([0, 0, 0, 0, 0, 1])
        segs = extract_segments(values, labels, "anomaly")
        assert len(segs) == 1
        assert np.array_equal(segs[0], values)

    def test_anomaly_too_early_rejected(self):
        values = np.arange(6.0)
        labels = np.array([0, 0, 0, 1, 0, 0])
        with pytest.raises(DataError, match="no qualifying windows"):
            extract_segments(values, labels, "anomaly")

    def test_anomaly_window_ends_at_label(self):
        values = np.arange(20.0)
        labels = np.zeros(20, dtype=int)
        labels[8] = 1
        labels[15] = 1
        segs = extract_segments(values, labels, "anomaly")
        assert len(segs) == 2
        assert np.array_equal(segs[0], values[3:9])
        assert np.array_equal(segs[1], values[10:16])
        assert anomaly_end_indices(labels) == [8, 15]

    def test_train_too_short(self):
        with pytest.raises(DataError, match="no qualifying windows"):
            extract_segments(np.arange(5.0), None, "train")

    def test_validation(self):
        with pytest.raises(DataError):
            extract_segments(np.zeros((4, 2)), None, "train")
        with pytest.raises(DataError):
            extract_segments(np.arange(10.0), None, "test")
        with pytest.raises(DataError):
            extract_segments(np.arange(10.0), None, "anomaly")


class TestRdft:
    def test_constant_segment(self):
        coeffs = rdft(np.full(6, 2.5))
        assert coeffs[0] == pytest.approx(15.0, rel=1e-14)
        assert np.allclose(np.abs(coeffs[1:]), 0.0, atol=1e-12)

    def test_single_cosine_magnitude(self):
        t = np.arange(6)
        coeffs = rdft(np.cos(2 * np.pi * t / 6))
        mags = np.abs(coeffs)
        assert abs(mags[1] - 3.0) < 1e-9
        assert mags[0] < 1e-12 and mags[2] < 1e-12 and mags[3] < 1e-12

    def test_matches_numpy_fft(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            seg = rng.normal(0, 3, 6)
            assert np.allclose(rdft(seg), np.fft.rfft(seg), atol=1e-12)

    def test_inverse_roundtrip(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            seg = rng.normal(0, 3, 6)
            assert np.max(np.abs(irdft(rdft(seg)) - seg)) < 1e-10

    def test_parseval_with_edge_weights(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            seg = rng.normal(0, 2, 6)
            mags2 = np.abs(rdft(seg)) ** 2
            weighted = (mags2 * np.array([1.0, 2.0, 2.0, 1.0])).sum() / 6.0
            assert abs(weighted - np.sum(seg * seg)) < 1e-9

    def test_length_checked(self):
        with pytest.raises(DataError):
            rdft(np.zeros(5))
        with pytest.raises(DataError):
            irdft(np.zeros(3, dtype=complex))

    def test_other_segment_length(self):
        seg = np.random.default_rng(3).normal(size=8)
        assert np.allclose(rdft(seg, 8), np.fft.rfft(seg), atol=1e-12)
        assert np.max(np.abs(irdft(rdft(seg, 8), 8) - seg)) < 1e-10


class TestBasisSet:
    def test_strictly_greater_than_eps(self):
        mags = np.array([2e-9, 1e-9, 0.0, 5.0])
        assert basis_set(mags) == frozenset({0, 3})

    def test_sample_carries_basis(self):
        t = np.arange(6)
        sample = spectral_sample(np.cos(2 * np.pi * t / 6))
        assert sample.basis == frozenset({1})
        const = spectral_sample(np.full(6, 3.0))
        assert const.basis == frozenset({0})

    def test_superset_examples(self):
        t = np.arange(6)
        cos_s = spectral_sample(np.cos(2 * np.pi * t / 6))
        const_s = spectral_sample(np.full(6, 3.0))
        both_s = spectral_sample(2.0 + np.cos(2 * np.pi * t / 6))
        assert both_s.basis == frozenset({0, 1})
        assert superset_equal([cos_s, const_s], [both_s]) is True
        assert superset_equal([cos_s, const_s], [cos_s]) is False
        assert superset_equal([cos_s], [both_s]) is False

    def test_superset_needs_samples(self):
        t = np.arange(6)
        s = spectral_sample(np.cos(2 * np.pi * t / 6))
        with pytest.raises(DataError):
            superset_equal([], [s])
        with pytest.raises(DataError):
            superset_equal([s], [])


class TestHullMembership:
    def test_vertices_and_midpoints(self):
        pts = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
        for p in pts:
            assert hull_membership(pts, p) is True
        assert hull_membership(pts, np.array([1.0, 1.0])) is True
        assert hull_membership(pts, np.array([2.0, 0.0])) is True
        assert hull_membership(pts, np.array([3.0, 3.0])) is False
        assert hull_membership(pts, np.array([-0.5, 1.0])) is False

    def test_bbox_prefilter(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert hull_membership(pts, np.array([5.0, 0.5])) is False
        assert hull_membership(pts, np.array([0.5, -5.0])) is False

    def test_agreement_with_geometric_oracle(self):
        agreements = 0
        for i in range(100):
            rng = np.random.default_rng(1000 + i)
            pts = rng.normal(0, 1, (int(rng.integers(5, 25)), 2))
            # a convex combination is inside by construction
            w = rng.dirichlet(np.ones(pts.shape[0]))
            q_in = w @ pts
            # beyond a supporting hyperplane is outside by construction
            d = rng.normal(0, 1, 2)
            d /= np.hypot(*d)
            q_out = d * (float((pts @ d).max()) + 0.5)
            for q, expect in ((q_in, True), (q_out, False)):
                lp = hull_membership(pts, q)
                assert lp is expect
                assert oracle_inside_2d(pts, q) is expect
                agreements += 1
            # arbitrary probe: truth unknown, both routes must agree
            q = rng.normal(0, 1.2, 2)
            assert hull_membership(pts, q) is oracle_inside_2d(pts, q)
        assert agreements == 200

    def test_reorder_invariance(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(0, 1, (12, 3))
        queries = [rng.dirichlet(np.ones(12)) @ pts for _ in range(5)]
        queries += [rng.normal(0, 1.5, 3) for _ in range(5)]
        for q in queries:
            base = hull_membership(pts, q)
            shuffled = pts[rng.permutation(12)]
            assert hull_membership(shuffled, q) is base

    def test_convexity_closure(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(0, 1, (15, 4))
        a = rng.dirichlet(np.ones(15)) @ pts
        b = rng.dirichlet(np.ones(15)) @ pts
        assert hull_membership(pts, a) is True
        assert hull_membership(pts, b) is True
        for lam in (0.25, 0.5, 0.75):
            assert hull_membership(pts, lam * a + (1 - lam) * b) is True

    def test_four_dimensional_combos_and_exceeders(self):
        rng = np.random.default_rng(6)
        pts = rng.normal(0, 1, (30, 4))
        for _ in range(10):
            q = rng.dirichlet(np.ones(30)) @ pts
            assert hull_membership(pts, q) is True
        for j in range(4):
            q = pts.mean(axis=0)
            q[j] = pts[:, j].max() + 1.0
            assert hull_membership(pts, q) is False

    def test_degenerate_identical_points(self):
        pts = np.tile([2.0, 3.0], (6, 1))
        assert hull_membership(pts, np.array([2.0, 3.0])) is True
        assert hull_membership(pts, np.array([2.0, 3.1])) is False

    def test_degenerate_collinear(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        assert hull_membership(pts, np.array([1.5, 1.5])) is True
        assert hull_membership(pts, np.array([1.5, 1.6])) is False

    def test_single_point(self):
        pts = np.array([[1.0, -1.0, 2.0]])
        assert hull_membership(pts, np.array([1.0, -1.0, 2.0])) is True
        assert hull_membership(pts, np.array([1.0, -1.0, 2.5])) is False

    def test_one_dimensional_interval(self):
        pts = np.array([[1.0], [5.0], [3.0]])
        assert hull_membership(pts, np.array([2.2])) is True
        assert hull_membership(pts, np.array([5.0])) is True
        assert hull_membership(pts, np.array([5.2])) is False

    def test_validation(self):
        pts = np.zeros((3, 2))
        with pytest.raises(DataError):
            hull_membership(pts, np.zeros(3))
        with pytest.raises(DataError):
            hull_membership(np.zeros((0, 2)), np.zeros(2))
        bad = pts.copy()
        bad[1, 1] = np.nan
        with pytest.raises(DataError):
            hull_membership(bad, np.zeros(2))
        with pytest.raises(DataError):
            hull_membership(pts, np.array([0.0, np.inf]))


def sine_series(t0, length, schema, labels=None, amplitude=1.0):
    t = np.arange(t0, t0 + length, dtype=np.float64)
    cols = [amplitude * np.sin(2 * np.pi * t / 12.0)]
    if schema.c == 2:
        cols.append(amplitude * np.cos(2 * np.pi * t / 12.0))
    return RawSeries(np.column_stack(cols), schema, labels)


class TestForecastabilityReport:
    def test_same_process_is_fully_inside(self):
        schema = FeatureSchema(("v0",), ())
        train = sine_series(0, 100, schema)
        labels = np.zeros(50, dtype=int)
        labels[[10, 23, 41]] = 1
        test = sine_series(100, 50, schema, labels)
        report = forecastability_report(train, test)
        assert report.pooled_outside_count == 0
        assert report.pooled_outside_fraction == 0.0
        (feature,) = report.features
        assert feature.feature == "v0"
        assert feature.train_samples == 95
        assert feature.anomaly_samples == 3
        assert feature.superset_equal is True
        assert all(s.inside for s in feature.samples)

    def test_spike_lands_outside(self):
        schema = FeatureSchema(("v0",), ())
        train = sine_series(0, 100, schema)
        values = sine_series(100, 50, schema).values.copy()
        labels = np.zeros(50, dtype=int)
        labels[[20, 35]] = 1
        values[20, 0] += 10.0  # far beyond anything in training
        test = RawSeries(values, schema, labels)
        report = forecastability_report(train, test)
        (feature,) = report.features
        verdicts = {s.end_index: s.inside for s in feature.samples}
        assert verdicts[20] is False
        assert report.pooled_outside_count >= 1
        assert report.pooled_outside_fraction == pytest.approx(
            report.pooled_outside_count / report.pooled_anomaly_samples
        )

    def test_two_channels_pool(self):
        schema = FeatureSchema(("v0", "v1"), ())
        train = sine_series(0, 100, schema)
        labels = np.zeros(50, dtype=int)
        labels[[12, 30]] = 1
        test = sine_series(100, 50, schema, labels)
        report = forecastability_report(train, test)
        assert len(report.features) == 2
        assert report.pooled_anomaly_samples == 4
        assert report.segment_length == SEGMENT_LENGTH
        assert report.epsilon == BASIS_EPS

    def test_report_document_shape(self):
        schema = FeatureSchema(("v0",), ())
        train = sine_series(0, 100, schema)
        labels = np.zeros(50, dtype=int)
        labels[15] = 1
        report = forecastability_report(train, sine_series(100, 50, schema, labels))
        doc = report.to_dict()
        assert set(doc) == {
            "features", "pooled_anomaly_samples", "pooled_outside_count",
            "pooled_outside_fraction", "segment_length", "epsilon",
        }
        assert set(doc["features"][0]) == {
            "feature", "train_samples", "anomaly_samples", "superset_equal",
            "outside_count", "outside_fraction",
        }

    def test_requires_labels(self):
        schema = FeatureSchema(("v0",), ())
        with pytest.raises(DataError):
            forecastability_report(sine_series(0, 100, schema), sine_series(100, 50, schema))

    def test_requires_continuous_channel(self):
        schema = FeatureSchema((), (("s", 2),))
        values = np.zeros((60, 1))
        labels = np.zeros(60, dtype=int)
        labels[30] = 1
        with pytest.raises(DataError):
            forecastability_report(
                RawSeries(values, schema), RawSeries(values, schema, labels)
            )
