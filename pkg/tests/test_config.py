import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radargen.config import (
    ChirpFrame,
    RadarConfig,
    ScalingParams,
    TargetState,
    blank_prefix,
    default_config,
    desk_config,
    fit_scaling_params,
    scale_distance_for_critic,
    scale_distance_for_generator,
    scale_frame,
    unscale_frame,
)
from radargen.errors import ConfigError, ContractError, RangeError, ShapeError

PARAMS = ScalingParams(
    data_min=-2048.0, data_max=2048.0,
    dist_min=0.0, dist_max=25.0, dist_mean=12.5, dist_std=7.2,
)


def frame_of(values, scaled=False, label=10.0):
    return ChirpFrame(samples=np.asarray(values, dtype=np.float64), scaled=scaled,
                      distance_label=label)


class TestRadarConfig:
    def test_default_is_valid_and_derives_rates(self):
        cfg = default_config()
        assert cfg.sample_rate == pytest.approx(8e6)
        assert cfg.range_bin_width == pytest.approx(299792458.0 / 600e6, rel=1e-12)
        # ~156.25 kHz at 10 m (exactly that for c = 3e8)
        assert cfg.beat_frequency(10.0) == pytest.approx(156_250.0, rel=1e-3)

    def test_desk_preset_keeps_bin_math(self):
        cfg = desk_config()
        assert cfg.range_bin_width == default_config().range_bin_width
        # target at 10 m lands on bin 20 for both presets
        assert cfg.beat_frequency(10.0) * cfg.samples_per_chirp / cfg.sample_rate == pytest.approx(20.014, abs=0.1)

    def test_nyquist_violation_rejected(self):
        with pytest.raises(ConfigError):
            RadarConfig(
                carrier_freq=77e9, bandwidth=300e6, chirp_duration=128e-6,
                samples_per_chirp=64, num_channels=16,
                antenna_spacing_wavelengths=0.5, blanked_prefix=0, max_range=25.0,
            )

    def test_blanked_prefix_bounds(self):
        with pytest.raises(ConfigError):
            RadarConfig(
                carrier_freq=77e9, bandwidth=300e6, chirp_duration=128e-6,
                samples_per_chirp=1024, num_channels=16,
                antenna_spacing_wavelengths=0.5, blanked_prefix=1024, max_range=25.0,
            )

    def test_json_round_trip(self):
        cfg = default_config()
        assert RadarConfig.from_json(cfg.to_json()) == cfg


class TestTargetState:
    def test_rejects_negative_range(self):
        with pytest.raises(RangeError):
            TargetState(range=-1.0, azimuth=0.0, amplitude=1.0)

    def test_rejects_grazing_azimuth(self):
        with pytest.raises(RangeError):
            TargetState(range=1.0, azimuth=np.pi / 2, amplitude=1.0)

    def test_rejects_nonpositive_amplitude(self):
        with pytest.raises(RangeError):
            TargetState(range=1.0, azimuth=0.0, amplitude=0.0)


class TestScaleFrame:
    def test_midpoint_maps_to_zero(self):
        out = scale_frame(frame_of([[0.0]]), PARAMS)
        assert out.samples[0, 0] == 0.0
        assert out.scaled

    def test_linear_map(self):
        out = scale_frame(frame_of([[1024.0]]), PARAMS)
        assert out.samples[0, 0] == pytest.approx(0.5)

    def test_clamps_out_of_range(self):
        out = scale_frame(frame_of([[2048.0 + 100.0]]), PARAMS)
        assert out.samples[0, 0] == 1.0

    def test_rejects_already_scaled(self):
        with pytest.raises(ContractError):
            scale_frame(frame_of([[0.0]], scaled=True), PARAMS)

    def test_endpoints(self):
        assert unscale_frame(frame_of([[1.0]], scaled=True), PARAMS).samples[0, 0] == PARAMS.data_max
        assert unscale_frame(frame_of([[-1.0]], scaled=True), PARAMS).samples[0, 0] == PARAMS.data_min

    @given(
        st.lists(st.floats(min_value=-2048.0, max_value=2048.0), min_size=1, max_size=32)
    )
    @settings(max_examples=50, deadline=None)
    def test_round_trip_identity(self, values):
        frame = frame_of([values])
        back = unscale_frame(scale_frame(frame, PARAMS), PARAMS)
        assert np.allclose(back.samples, frame.samples, rtol=1e-6, atol=1e-9)

    def test_strictly_monotone(self):
        values = np.linspace(-2048, 2048, 101)[None, :]
        scaled = scale_frame(frame_of(values), PARAMS).samples
        assert np.all(np.diff(scaled[0]) > 0)


class TestDistanceScaling:
    def test_critic_midpoint(self):
        assert scale_distance_for_critic(12.5, PARAMS) == 0.0

    def test_critic_range_error(self):
        with pytest.raises(RangeError):
            scale_distance_for_critic(25.5, PARAMS)

    def test_generator_mean_maps_to_zero(self):
        assert scale_distance_for_generator(12.5, PARAMS) == 0.0

    def test_generator_one_sigma(self):
        assert scale_distance_for_generator(19.7, PARAMS) == pytest.approx(1.0)


class TestBlankPrefix:
    def test_zeroes_prefix_only(self, cfg):
        frame = frame_of(np.ones((cfg.num_channels, cfg.samples_per_chirp)))
        out = blank_prefix(frame, cfg)
        assert not out.samples[:, :250].any()
        assert np.all(out.samples[:, 250:] == 1.0)

    def test_noop_when_prefix_zero(self):
        cfg = RadarConfig(
            carrier_freq=77e9, bandwidth=300e6, chirp_duration=128e-6,
            samples_per_chirp=1024, num_channels=2,
            antenna_spacing_wavelengths=0.5, blanked_prefix=0, max_range=25.0,
        )
        frame = frame_of(np.ones((2, 1024)))
        assert np.array_equal(blank_prefix(frame, cfg).samples, frame.samples)

    def test_idempotent(self, cfg):
        rng = np.random.default_rng(0)
        frame = frame_of(rng.normal(size=(cfg.num_channels, cfg.samples_per_chirp)))
        once = blank_prefix(frame, cfg)
        twice = blank_prefix(once, cfg)
        assert np.array_equal(once.samples, twice.samples)


class TestFitScalingParams:
    def test_bounds_map_exactly(self):
        frames = [frame_of([[-3.0, 1.0]], label=5.0), frame_of([[0.5, 7.0]], label=20.0)]
        params = fit_scaling_params(frames)
        assert params.data_min == -3.0
        assert params.data_max == 7.0
        lo = scale_frame(frames[0], params).samples
        hi = scale_frame(frames[1], params).samples
        assert lo[0, 0] == -1.0
        assert hi[0, 1] == 1.0
        assert params.dist_min == 5.0 and params.dist_max == 20.0
        assert params.dist_mean == 12.5

    def test_empty_dataset_rejected(self):
        with pytest.raises(ContractError):
            fit_scaling_params([])

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(ConfigError):
            ScalingParams(data_min=1.0, data_max=1.0, dist_min=0, dist_max=1,
                          dist_mean=0.5, dist_std=1.0)


class TestChirpFrame:
    def test_shape_check(self, cfg):
        frame = frame_of(np.zeros((3, 5)))
        with pytest.raises(ShapeError):
            frame.check_shape(cfg)

    def test_scaling_params_json_round_trip(self):
        assert ScalingParams.from_json(PARAMS.to_json()) == PARAMS
