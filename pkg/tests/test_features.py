import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shmnovelty.errors import InvalidInputError
from shmnovelty.features import (
    CSV_CHANNEL_ORDER,
    AccelRecord,
    AccelSegment,
    EtaGrid,
    FeatureVector,
    apply_normalizer,
    build_feature_vector,
    cumulative_intensity,
    feature_matrix,
    fit_normalizer,
    read_accel_csv,
    segment_record,
    write_accel_csv,
)


def make_segment(channels: dict, sample_rate: float = 100.0) -> AccelSegment:
    data = np.stack([channels[name] for name in CSV_CHANNEL_ORDER], axis=0)
    return AccelSegment(sample_rate=sample_rate, data=data, record_id="t", segment_index=0)


class TestCumulativeIntensity:
    def test_constant_one_over_60s(self):
        # 60 s span, endpoint-inclusive: trapezoid is exact for constants.
        a = np.ones(6001)
        for eta in (0.1, 1.0, 4.3, 10.0):
            assert cumulative_intensity(a, eta, 0.01) == pytest.approx(60.0, abs=1e-9)

    def test_constant_two_eta_two(self):
        a = np.full(301, 2.0)
        assert cumulative_intensity(a, 2.0, 0.01) == pytest.approx(12.0, abs=1e-9)

    def test_linear_ramp_exact(self):
        t = np.linspace(0.0, 1.0, 1001)
        assert cumulative_intensity(t, 1.0, 1e-3) == pytest.approx(0.5, abs=1e-6)

    def test_full_period_sin_squared(self):
        # Uniform sampling over whole periods makes the trapezoid rule exact
        # for sin^2 (endpoint values coincide).
        t = np.arange(1000) / 1000.0
        a = np.sin(2.0 * np.pi * 5.0 * t)
        full = np.concatenate([a, [a[0]]])
        assert cumulative_intensity(full, 2.0, 1e-3) == pytest.approx(0.5, abs=1e-12)

    def test_quadratic_against_quadrature(self):
        # Independent oracle: analytic integral of t^2 on [0, 2].
        t = np.linspace(0.0, 2.0, 4001)
        got = cumulative_intensity(t**2, 1.0, t[1] - t[0])
        assert got == pytest.approx(8.0 / 3.0, rel=1e-6)

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            cumulative_intensity(np.ones(1), 1.0, 0.01)
        with pytest.raises(InvalidInputError):
            cumulative_intensity(np.ones(10), 0.0, 0.01)
        with pytest.raises(InvalidInputError):
            cumulative_intensity(np.ones(10), -1.0, 0.01)
        with pytest.raises(InvalidInputError):
            cumulative_intensity(np.ones(10), 1.0, 0.0)

    @given(
        a=arrays(np.float64, st.integers(2, 60),
                 elements=st.floats(-5, 5, allow_nan=False)),
        eta=st.floats(0.1, 10.0),
        c=st.floats(0.01, 100.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_scaling_property(self, a, eta, c):
        base = cumulative_intensity(a, eta, 0.01)
        scaled = cumulative_intensity(c * a, eta, 0.01)
        assert scaled == pytest.approx((c**eta) * base, rel=1e-9, abs=1e-12)

    @given(
        a=arrays(np.float64, st.integers(3, 80),
                 elements=st.floats(-3, 3, allow_nan=False)),
        eta=st.floats(0.1, 10.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_prefix_monotone_in_T(self, a, eta):
        # Integral over a longer prefix never decreases.
        shorter = cumulative_intensity(a[:-1], eta, 0.01)
        longer = cumulative_intensity(a, eta, 0.01)
        assert longer >= shorter - 1e-12


class TestEtaGrid:
    def test_default_grid(self):
        grid = EtaGrid()
        assert len(grid) == 100
        assert grid.values[0] == pytest.approx(0.1, abs=1e-12)
        assert grid.values[-1] == pytest.approx(10.0, abs=1e-12)
        assert np.allclose(np.diff(grid.values), 0.1, atol=1e-12)

    def test_rejects_bad_grids(self):
        with pytest.raises(InvalidInputError):
            EtaGrid(values=np.array([1.0, 1.0]))
        with pytest.raises(InvalidInputError):
            EtaGrid(values=np.array([0.0, 1.0]))
        with pytest.raises(InvalidInputError):
            EtaGrid(values=np.array([]))


class TestSegmentRecord:
    def _record(self, seconds: float, rate: float = 100.0) -> AccelRecord:
        n = int(round(seconds * rate))
        data = np.arange(4 * n, dtype=float).reshape(4, n)
        return AccelRecord(sample_rate=rate, data=data, record_id="r")

    def test_counts(self):
        # 2880 minutes at 100 Hz in 60 s segments.
        rec = self._record(2880 * 60.0)
        assert len(segment_record(rec, 60.0)) == 2880

    def test_ten_minutes(self):
        rec = self._record(600.0)
        segs = segment_record(rec, 60.0)
        assert len(segs) == 10
        assert [s.segment_index for s in segs] == list(range(10))

    def test_too_short_gives_empty(self):
        rec = self._record(59.0)
        assert segment_record(rec, 60.0) == []

    def test_trailing_partial_dropped(self):
        rec = self._record(150.0)
        segs = segment_record(rec, 60.0)
        assert len(segs) == 2
        np.testing.assert_array_equal(segs[0].data, rec.data[:, :6000])
        np.testing.assert_array_equal(segs[1].data, rec.data[:, 6000:12000])

    def test_non_integer_segment_samples(self):
        rec = self._record(10.0)
        with pytest.raises(InvalidInputError):
            segment_record(rec, 0.505)


class TestBuildFeatureVector:
    def test_zero_segment(self):
        seg = make_segment({n: np.zeros(200) for n in CSV_CHANNEL_ORDER})
        v = build_feature_vector(seg, EtaGrid(values=np.array([0.5, 1.0, 2.0])))
        np.testing.assert_array_equal(v.values, np.zeros(12))

    def test_constant_one_segment(self):
        # 60 s endpoint-inclusive span.
        seg = make_segment({n: np.ones(6001) for n in CSV_CHANNEL_ORDER})
        v = build_feature_vector(seg, EtaGrid(values=np.array([1.0])))
        np.testing.assert_allclose(v.values, [60.0] * 4, atol=1e-9)

    def test_default_grid_length_400(self):
        seg = make_segment({n: np.random.default_rng(0).normal(size=100) for n in CSV_CHANNEL_ORDER})
        assert len(build_feature_vector(seg, EtaGrid())) == 400

    def test_layout_direction1_then_direction2(self):
        # Distinct constants per channel expose the stacking order.
        seg = make_segment(
            {
                "base_d1": np.full(201, 1.0),
                "top_d1": np.full(201, 2.0),
                "base_d2": np.full(201, 3.0),
                "top_d2": np.full(201, 4.0),
            }
        )
        grid = EtaGrid(values=np.array([1.0, 2.0]))
        v = build_feature_vector(seg, grid)
        expected = [
            1.0 * 2, 1.0 * 2,     # base_d1 at eta 1, 2 over the 2 s span
            2.0 * 2, 4.0 * 2,     # top_d1
            3.0 * 2, 9.0 * 2,     # base_d2
            4.0 * 2, 16.0 * 2,    # top_d2
        ]
        np.testing.assert_allclose(v.values, expected, rtol=1e-12)

    def test_matches_scalar_op(self):
        rng = np.random.default_rng(7)
        chans = {n: rng.normal(size=500) for n in CSV_CHANNEL_ORDER}
        seg = make_segment(chans)
        grid = EtaGrid(values=np.array([0.3, 1.7]))
        v = build_feature_vector(seg, grid)
        k = 0
        for name in ("base_d1", "top_d1", "base_d2", "top_d2"):
            for eta in grid.values:
                assert v.values[k] == pytest.approx(
                    cumulative_intensity(chans[name], float(eta), 0.01), rel=1e-12
                )
                k += 1


class TestNormalizer:
    def test_midpoint(self):
        vs = [FeatureVector(np.array([0.0])), FeatureVector(np.array([10.0]))]
        n = fit_normalizer(vs)
        assert apply_normalizer(n, FeatureVector(np.array([5.0]))).values[0] == 0.5

    def test_min_to_zero_max_to_one(self):
        rng = np.random.default_rng(1)
        vs = [FeatureVector(rng.uniform(0, 9, size=6)) for _ in range(8)]
        n = fit_normalizer(vs)
        X = feature_matrix(vs)
        lo = apply_normalizer(n, FeatureVector(X.min(axis=0))).values
        hi = apply_normalizer(n, FeatureVector(X.max(axis=0))).values
        np.testing.assert_allclose(lo, 0.0, atol=1e-15)
        np.testing.assert_allclose(hi, 1.0, atol=1e-15)

    def test_degenerate_feature_maps_to_zero(self):
        vs = [FeatureVector(np.array([3.0, 1.0])), FeatureVector(np.array([3.0, 2.0]))]
        n = fit_normalizer(vs)
        out = apply_normalizer(n, FeatureVector(np.array([42.0, 1.5])))
        assert out.values[0] == 0.0
        assert out.values[1] == 0.5

    def test_out_of_range_not_clipped(self):
        vs = [FeatureVector(np.array([0.0])), FeatureVector(np.array([1.0]))]
        n = fit_normalizer(vs)
        assert apply_normalizer(n, FeatureVector(np.array([2.0]))).values[0] == 2.0
        assert apply_normalizer(n, FeatureVector(np.array([-1.0]))).values[0] == -1.0

    def test_dimension_mismatch(self):
        vs = [FeatureVector(np.zeros(3)), FeatureVector(np.ones(3))]
        n = fit_normalizer(vs)
        with pytest.raises(InvalidInputError):
            apply_normalizer(n, FeatureVector(np.zeros(4)))

    def test_needs_two_vectors(self):
        with pytest.raises(InvalidInputError):
            fit_normalizer([FeatureVector(np.zeros(3))])

    @given(
        data=arrays(
            np.float64, (5, 4),
            elements=st.floats(-100, 100, allow_nan=False),
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_training_data_lands_in_unit_box(self, data):
        vs = [FeatureVector(row) for row in data]
        n = fit_normalizer(vs)
        for v in vs:
            out = apply_normalizer(n, v).values
            assert np.all(out >= -1e-12) and np.all(out <= 1.0 + 1e-12)


class TestCsvRoundtrip:
    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        rec = AccelRecord(
            sample_rate=100.0, data=rng.normal(size=(4, 250)), record_id="x"
        )
        path = str(tmp_path / "rec.csv")
        write_accel_csv(path, rec, header_comments=["config_sha256=deadbeef"])
        back = read_accel_csv(path, record_id="x")
        assert back.sample_rate == pytest.approx(100.0, rel=1e-9)
        np.testing.assert_array_equal(back.data, rec.data)

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,a,b,c,d\n0.0,1,1,1,1\n0.01,1,1,1,1\n")
        with pytest.raises(InvalidInputError):
            read_accel_csv(str(path))

    def test_rejects_nonuniform_time(self, tmp_path):
        path = tmp_path / "bad.csv"
        rows = ["time,base_d1,base_d2,top_d1,top_d2"]
        rows += ["0.0,0,0,0,0", "0.01,0,0,0,0", "0.025,0,0,0,0"]
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(InvalidInputError):
            read_accel_csv(str(path))

    def test_byte_identical_rewrites(self, tmp_path):
        rng = np.random.default_rng(9)
        rec = AccelRecord(sample_rate=50.0, data=rng.normal(size=(4, 64)))
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        write_accel_csv(p1, rec)
        write_accel_csv(p2, rec)
        assert open(p1, "rb").read() == open(p2, "rb").read()


class TestRecordValidation:
    def test_bad_shapes(self):
        with pytest.raises(InvalidInputError):
            AccelRecord(sample_rate=100.0, data=np.zeros((3, 10)))
        with pytest.raises(InvalidInputError):
            AccelRecord(sample_rate=100.0, data=np.zeros((4, 1)))
        with pytest.raises(InvalidInputError):
            AccelRecord(sample_rate=0.0, data=np.zeros((4, 10)))
