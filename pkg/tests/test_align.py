import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from harp.align import (
    AxisMap,
    GravityFilterParams,
    align,
    convert_units,
    remap_spans,
    resample,
    separate_gravity,
)
from harp.core import STANDARD_GRAVITY, RawRecording, SignalUnit, validate_raw
from harp.errors import NonMonotonicTimestampsError, TooShortError


def lerp_oracle(grid, t, values):
    """Independent point-by-point linear interpolation."""
    out = np.empty(len(grid))
    for k, x in enumerate(grid):
        j = np.searchsorted(t, x, side="right") - 1
        j = min(max(j, 0), len(t) - 2)
        w = (x - t[j]) / (t[j + 1] - t[j])
        out[k] = values[j] + w * (values[j + 1] - values[j])
    return out


class TestConvertUnits:
    def test_one_g_is_standard_gravity(self):
        out = convert_units(np.array([[1.0, 0.0, -1.0]]), SignalUnit("g"))
        np.testing.assert_array_equal(out, [[9.80665, 0.0, -9.80665]])

    def test_zero_stays_zero_in_any_unit(self):
        zeros = np.zeros((4, 3))
        for unit in (SignalUnit("g"), SignalUnit("milli_g"), SignalUnit("raw_counts", 0.0039)):
            np.testing.assert_array_equal(convert_units(zeros, unit), zeros)

    def test_raw_counts_match_desk_multiplication(self):
        out = convert_units(np.full((1, 3), 256.0), SignalUnit("raw_counts", 0.0039))
        expected = 256.0 * 0.0039 * 9.80665  # ≈ 9.7911
        assert np.allclose(out, expected, rtol=1e-12)
        assert abs(expected - 9.7911) < 1e-3

    def test_milli_g(self):
        out = convert_units(np.array([[1000.0, 0.0, 0.0]]), SignalUnit("milli_g"))
        assert np.allclose(out[0, 0], STANDARD_GRAVITY, rtol=1e-12)

    def test_identity_unit_is_bitwise(self):
        data = np.random.default_rng(0).standard_normal((50, 3))
        assert np.array_equal(convert_units(data, SignalUnit("m_per_s2")), data)

    @given(
        arrays(
            np.float64,
            (7, 3),
            elements=st.floats(-50, 50).map(lambda v: 0.0 if abs(v) < 1e-9 else v),
        ),
        st.floats(min_value=0.25, max_value=8.0),
    )
    def test_linearity(self, data, a):
        unit = SignalUnit("g")
        np.testing.assert_allclose(convert_units(a * data, unit), a * convert_units(data, unit), rtol=1e-12)


class TestResample:
    def test_constant_100hz_one_second_to_50hz(self):
        samples = np.full((101, 3), 5.0)
        out = resample(samples, 100.0, 50.0)
        assert out.shape == (51, 3)
        np.testing.assert_array_equal(out, np.full((51, 3), 5.0))

    def test_equal_rate_identity_is_bitwise(self):
        data = np.random.default_rng(1).standard_normal((97, 3))
        out = resample(data, 50.0, 50.0)
        assert out.shape == data.shape
        assert np.array_equal(out, data)

    def test_two_hz_sine_100_to_50(self):
        # analytic oracle on the new grid; bound from (h²/8)·max|f''|
        t_in = np.arange(201) / 100.0
        samples = np.stack([np.sin(2 * math.pi * 2 * t_in)] * 3, axis=1)
        out = resample(samples, 100.0, 50.0)
        t_out = np.arange(len(out)) / 50.0
        oracle = np.sin(2 * math.pi * 2 * t_out)
        assert np.max(np.abs(out[:, 0] - oracle)) < 2e-3

    def test_band_limited_error_bound_on_offset_grid(self):
        # 100 Hz → 64 Hz puts most output points between input samples
        src, dst, f, amp = 100.0, 64.0, 2.0, 1.5
        t_in = np.arange(301) / src
        samples = np.stack([amp * np.sin(2 * math.pi * f * t_in)] * 3, axis=1)
        out = resample(samples, src, dst)
        t_out = np.arange(len(out)) / dst
        bound = (1.0 / (8.0 * src**2)) * (2 * math.pi * f) ** 2 * amp
        assert np.max(np.abs(out[:, 0] - amp * np.sin(2 * math.pi * f * t_out))) <= bound + 1e-12

    def test_timestamp_input_rebased_to_zero(self):
        ts = 100.0 + np.arange(11) / 10.0
        samples = np.tile(np.linspace(0, 1, 11)[:, None], (1, 3))
        out = resample(samples, ts, 10.0)
        assert out.shape == (11, 3)
        oracle = lerp_oracle(np.arange(11) / 10.0, ts - ts[0], samples[:, 0])
        np.testing.assert_allclose(out[:, 0], oracle, rtol=0, atol=1e-15)

    def test_too_short(self):
        with pytest.raises(TooShortError):
            resample(np.ones((1, 3)), 50.0, 50.0)

    def test_non_monotonic_timestamps(self):
        with pytest.raises(NonMonotonicTimestampsError):
            resample(np.ones((3, 3)), np.array([0.0, 0.2, 0.1]), 50.0)


class TestRemapSpans:
    def test_full_coverage_survives_downsampling(self):
        spans = [(0, 100, "a"), (100, 201, "b")]
        out = remap_spans(spans, 100.0, 201, 50.0, 101)
        assert out == [(0, 50, "a"), (50, 101, "b")]

    def test_collapsed_span_is_dropped(self):
        # one input sample wide at 100 Hz → zero grid cells at 2 Hz
        out = remap_spans([(50, 51, "blip")], 100.0, 201, 2.0, 5)
        assert out == []

    def test_bounds_clipped(self):
        out = remap_spans([(0, 10, "a")], 10.0, 10, 50.0, 46)
        assert out == [(0, 46, "a")]


class TestSeparateGravity:
    def test_constant_input_is_a_fixed_point(self):
        samples = np.tile([0.0, 0.0, 9.80665], (500, 1))
        gravity, linear = separate_gravity(samples, 50.0)
        assert np.array_equal(gravity, samples)
        assert np.array_equal(linear, np.zeros_like(samples))

    def test_all_zero_input(self):
        samples = np.zeros((100, 3))
        gravity, linear = separate_gravity(samples, 50.0)
        assert np.array_equal(gravity, samples)
        assert np.array_equal(linear, samples)

    def test_ten_hz_sine_leaks_less_than_fifty_milli_g(self):
        # closed-form ballpark: |H(10 Hz)| ≈ cutoff/f ≈ 0.03 for the
        # first-order filter, so the gravity estimate should wobble well
        # under 0.05 once the transient has settled.
        rate = 50.0
        t = np.arange(int(12 * rate)) / rate
        samples = np.zeros((len(t), 3))
        samples[:, 0] = np.sin(2 * math.pi * 10 * t)
        samples[:, 2] = 9.80665
        params = GravityFilterParams()
        alpha = params.alpha(rate)
        w = 2 * math.pi * 10 / rate
        gain = alpha / abs(1 - (1 - alpha) * complex(math.cos(w), -math.sin(w)))
        assert gain < 0.05  # the analytic attenuation itself
        gravity, _ = separate_gravity(samples, rate, params)
        settled = t >= 10.0
        assert np.max(np.abs(gravity[settled, 0])) < 0.05
        assert np.max(np.abs(gravity[settled, 2] - 9.80665)) < 0.05
        assert np.max(np.abs(gravity[settled, 1])) < 0.05

    def test_reconstruction_is_exact_for_gravity_scale_signals(self):
        rng = np.random.default_rng(42)
        samples = rng.uniform(6.5, 9.9, size=(400, 3))
        gravity, linear = separate_gravity(samples, 50.0)
        assert np.array_equal(gravity + linear, samples)

    def test_reconstruction_exact_on_gravity_plus_sine(self):
        t = np.arange(500) / 50.0
        samples = np.tile([0.0, 0.0, 9.80665], (500, 1))
        samples[:, 2] += 2.0 * np.sin(2 * math.pi * 1.0 * t)
        gravity, linear = separate_gravity(samples, 50.0)
        assert np.array_equal(gravity + linear, samples)

    def test_cutoff_must_sit_below_nyquist(self):
        with pytest.raises(ValueError):
            separate_gravity(np.ones((10, 3)), 50.0, GravityFilterParams(cutoff_hz=30.0))


class TestAxisMap:
    def test_identity(self):
        data = np.arange(12, dtype=float).reshape(4, 3)
        assert np.array_equal(AxisMap().apply(data), data)

    def test_negate_and_swap(self):
        m = AxisMap(("x", "-z", "y"))
        out = m.apply(np.array([[1.0, 2.0, 3.0]]))
        np.testing.assert_array_equal(out, [[1.0, -3.0, 2.0]])
        assert abs(np.linalg.det(m.matrix())) == 1.0

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            AxisMap(("x", "x", "y"))
        with pytest.raises(ValueError):
            AxisMap(("x", "y", "q"))


def make_raw(samples, unit="m_per_s2", rate=50.0, spans=None, gravity=True, timestamps=None):
    return RawRecording(
        dataset_id="ds",
        source_path="f",
        subject_id="s",
        sensor_kind="accelerometer",
        declared_unit=SignalUnit.parse(unit),
        includes_gravity=gravity,
        samples=samples,
        declared_rate_hz=None if timestamps is not None else rate,
        timestamps=timestamps,
        raw_label_spans=spans or [],
    )


class TestAlign:
    def test_identity_pipeline_leaves_samples_untouched(self):
        data = np.random.default_rng(3).uniform(-5, 15, (120, 3))
        rec = make_raw(data, spans=[(0, 120, "walk")])
        out = align(rec)
        assert np.array_equal(out.samples, data)
        assert out.label_spans == [(0, 120, "walk")]
        assert out.includes_gravity is True
        assert out.rate_hz == 50.0

    def test_g_at_100hz_composes_the_two_stage_oracles(self):
        rng = np.random.default_rng(4)
        data = rng.uniform(-2, 2, (201, 3))
        rec = make_raw(data, unit="g", rate=100.0, spans=[(0, 201, "walk")])
        out = align(rec)
        t_in = np.arange(201) / 100.0
        grid = np.arange(101) / 50.0
        for axis in range(3):
            oracle = lerp_oracle(grid, t_in, data[:, axis] * 9.80665)
            np.testing.assert_allclose(out.samples[:, axis], oracle, rtol=1e-12, atol=1e-12)
        assert out.label_spans == [(0, 101, "walk")]

    def test_axis_flip(self):
        rec = make_raw(np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]))
        out = align(rec, axis_map=AxisMap(("-x", "y", "z")))
        np.testing.assert_array_equal(out.samples, [[-1.0, 2.0, 3.0], [-1.0, 2.0, 3.0]])

    def test_strip_gravity_on_constant_input_yields_zeros(self):
        rec = make_raw(np.tile([0.0, 0.0, 9.80665], (100, 1)))
        out = align(rec, policy="strip_gravity")
        assert out.includes_gravity is False
        assert np.array_equal(out.samples, np.zeros((100, 3)))

    def test_strip_gravity_noop_when_gravity_absent(self):
        data = np.random.default_rng(5).standard_normal((60, 3))
        rec = make_raw(data, gravity=False)
        out = align(rec, policy="strip_gravity")
        assert out.includes_gravity is False
        assert np.array_equal(out.samples, data)

    def test_single_sample_recording_survives(self):
        rec = make_raw(np.array([[1.0, 2.0, 3.0]]), spans=[(0, 1, "sit")])
        out = align(rec)
        assert np.array_equal(out.samples, [[1.0, 2.0, 3.0]])
        assert out.label_spans == [(0, 1, "sit")]

    def test_valid_raw_always_aligns(self):
        # overlapping raw spans are legal input; align resolves them
        rec = make_raw(np.ones((50, 3)), spans=[(0, 30, "a"), (20, 50, "b")])
        assert validate_raw(rec) == []
        out = align(rec)
        assert out.label_spans == [(0, 30, "a"), (30, 50, "b")]
