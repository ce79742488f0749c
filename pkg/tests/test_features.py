import numpy as np
import pytest

from roadroughness.core import AlignedSegment
from roadroughness.features import (CHANNELS, EXTRACTOR_NAMES,
                                    _ecdf_percentile, build_feature_matrix,
                                    extract_channel_features, feature_names,
                                    resample_segment, standardize_apply,
                                    standardize_fit)


def _segment(acc, speed=None, dt=0.1, iri=1.0, window_id=0):
    acc = np.asarray(acc, dtype=float)
    if speed is None:
        speed = np.full(len(acc), 10.0)
    t = np.arange(len(acc)) * dt
    return AlignedSegment(window_id, t, acc, speed, iri)


class TestResample:
    def test_preserves_endpoints_and_length(self):
        seg = _segment(np.sin(np.arange(30)))
        out = resample_segment(seg, 250)
        assert out.n_points == 250
        assert out.t[0] == seg.t[0]
        assert out.t[-1] == seg.t[-1]
        assert out.acc_z[0] == seg.acc_z[0]
        assert out.acc_z[-1] == seg.acc_z[-1]

    def test_linear_signal_invariant(self):
        t = np.arange(11) * 0.5
        seg = AlignedSegment(0, t, 2.0 * t + 1.0, np.full(11, 5.0), 1.0)
        out = resample_segment(seg, 101)
        assert np.allclose(out.acc_z, 2.0 * out.t + 1.0)

    def test_too_short_target_rejected(self):
        with pytest.raises(ValueError):
            resample_segment(_segment(np.zeros(5)), 1)


class TestEcdfPercentile:
    def test_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.normal(size=int(rng.integers(3, 40)))
            p = float(rng.uniform(0.01, 0.99))
            xs = np.sort(x)
            ecdf = np.arange(1, len(xs) + 1) / len(xs)
            expected = xs[int(np.argmax(ecdf >= p))]
            assert _ecdf_percentile(x, p) == expected

    def test_small_example(self):
        # ECDF of [1,2,3,4] is 0.25/0.5/0.75/1.0.
        assert _ecdf_percentile(np.array([4.0, 1.0, 3.0, 2.0]), 0.5) == 2.0
        assert _ecdf_percentile(np.array([4.0, 1.0, 3.0, 2.0]), 0.51) == 3.0


class TestExtractorValues:
    def test_hand_computed_basics(self):
        x = np.array([1.0, 2.0, 4.0, 2.0, 1.0])
        t = np.arange(5.0)
        f = extract_channel_features(x, t)
        assert f["mean"] == 2.0
        assert f["median"] == 2.0
        assert f["min"] == 1.0
        assert f["max"] == 4.0
        assert f["variance"] == pytest.approx(np.var(x))  # population
        assert f["std"] == pytest.approx(np.sqrt(np.var(x)))
        assert f["mean_abs_dev"] == pytest.approx(np.mean(np.abs(x - 2.0)))
        assert f["median_abs_dev"] == pytest.approx(1.0)
        assert f["sum_abs_diff"] == pytest.approx(1 + 2 + 2 + 1)
        assert f["peak_to_peak"] == 3.0
        assert f["pos_turning_points"] == 1.0
        assert f["neg_turning_points"] == 0.0

    def test_energy_family(self):
        x = np.array([3.0, 0.0, 4.0])
        t = np.array([0.0, 1.0, 2.0])
        f = extract_channel_features(x, t)
        assert f["abs_energy"] == 25.0
        assert f["total_energy"] == 12.5
        assert f["rms"] == pytest.approx(np.sqrt(25.0 / 3.0))
        assert f["auc"] == pytest.approx(np.trapezoid(x, t))
        assert f["total_distance"] == pytest.approx(
            np.sqrt(1 + 9) + np.sqrt(1 + 16))

    def test_zero_mean_variants(self):
        x = np.array([1.0, 2.0, 4.0, 2.0, 1.0]) + 100.0
        t = np.arange(5.0)
        f = extract_channel_features(x, t)
        xc = x - x.mean()
        assert f["rms_zm"] == pytest.approx(np.sqrt(np.mean(xc ** 2)))
        assert f["abs_energy_zm"] == pytest.approx(np.sum(xc ** 2))
        assert f["auc_zm"] == pytest.approx(np.trapezoid(xc, t))
        # The zero-mean variants are shift invariant, the raw ones are not.
        g = extract_channel_features(x - 100.0, t)
        assert f["rms_zm"] == pytest.approx(g["rms_zm"])
        assert f["abs_energy"] != pytest.approx(g["abs_energy"])

    def test_autocorr_of_alternating_sequence(self):
        x = np.array([1.0, -1.0] * 10)
        f = extract_channel_features(x, np.arange(20.0))
        assert f["autocorr_lag1"] == pytest.approx(-19.0 / 20.0)

    def test_slope_of_line(self):
        t = np.arange(10.0)
        f = extract_channel_features(3.0 * t + 2.0, t)
        assert f["slope"] == pytest.approx(3.0)

    def test_entropy_limits(self):
        f = extract_channel_features(np.ones(100), np.arange(100.0))
        assert f["entropy"] == 0.0
        # Uniform spread over 10 bins -> log2(10) bits.
        x = np.repeat(np.arange(10.0), 10) + 0.001
        f = extract_channel_features(x, np.arange(100.0))
        assert f["entropy"] == pytest.approx(np.log2(10), abs=1e-9)

    def test_kurtosis_and_skewness_of_gaussian(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=100_000)
        f = extract_channel_features(x, np.arange(len(x), dtype=float))
        assert abs(f["kurtosis"]) < 0.1
        assert abs(f["skewness"]) < 0.05

    def test_neighbourhood_peaks(self):
        x = np.zeros(50)
        x[15] = 1.0
        x[35] = 2.0
        f = extract_channel_features(x, np.arange(50.0))
        assert f["neighbourhood_peaks"] == 2.0

    def test_time_reversal_flips_slope(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=40)
        t = np.arange(40.0)
        f = extract_channel_features(x, t)
        g = extract_channel_features(x[::-1], t)
        assert g["slope"] == pytest.approx(-f["slope"])
        assert g["variance"] == pytest.approx(f["variance"])
        assert g["pos_turning_points"] == f["pos_turning_points"]

    def test_short_channel_rejected(self):
        with pytest.raises(ValueError):
            extract_channel_features([1.0, 2.0], [0.0, 1.0])


class TestFeatureMatrix:
    def test_names_and_shape(self):
        names = feature_names()
        assert len(names) == 68
        assert names[0] == "mean@acc_z"
        assert names[34] == "mean@speed"
        assert len(set(names)) == 68

    def test_matrix_row_order(self):
        segs = [_segment(np.sin(np.arange(30)) * (i + 1), iri=0.5 + 1.25 * i,
                         window_id=i) for i in range(3)]
        ds = build_feature_matrix(segs)
        assert ds.X.shape == (3, 68)
        assert list(ds.y) == [0.5, 1.75, 3.0]
        assert list(ds.level) == [0, 1, 2]
        col = ds.feature_names.index("std@acc_z")
        assert ds.X[0, col] < ds.X[2, col]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            build_feature_matrix([])


class TestStandardizer:
    def test_two_four_six(self):
        x = np.array([[2.0], [4.0], [6.0]])
        s = standardize_fit(x)
        out = standardize_apply(s, x)
        expected = np.array([-1.0, 0.0, 1.0]) * np.sqrt(1.5)
        assert np.allclose(out[:, 0], expected)
        assert out[0, 0] == pytest.approx(-1.224744871391589)

    def test_population_std(self):
        x = np.array([[1.0], [3.0]])
        s = standardize_fit(x)
        assert s.std[0] == 1.0  # population, not sample (which would be sqrt 2)

    def test_constant_column_rejected(self):
        with pytest.raises(ValueError):
            standardize_fit(np.array([[1.0, 5.0], [2.0, 5.0]]))

    def test_apply_uses_train_statistics(self):
        x_train = np.array([[0.0], [2.0]])
        s = standardize_fit(x_train)
        out = standardize_apply(s, np.array([[4.0]]))
        assert out[0, 0] == pytest.approx(3.0)
