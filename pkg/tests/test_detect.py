import numpy as np
import pytest

from radargen.config import blank_prefix, unscale_frame
from radargen.detect import (
    Detection,
    DetectorParams,
    adaptive_threshold,
    detect_primary_range,
    extract_regions,
)
from radargen.dsp import RangeAzimuthMap, compute_ra_map
from radargen.errors import ParameterError, ShapeError

from conftest import make_noise_frame, make_target_frame


def synthetic_map(values, cfg):
    values = np.asarray(values, dtype=np.float64)
    return RangeAzimuthMap(
        magnitude_db=values,
        range_axis=np.arange(values.shape[0]) * cfg.range_bin_width,
        azimuth_axis=np.arcsin(
            2.0 * (np.arange(values.shape[1]) - values.shape[1] // 2) / values.shape[1]
        ),
        config_ref=cfg,
    )


class TestAdaptiveThreshold:
    def test_flat_map_marks_nothing(self, cfg):
        ra = synthetic_map(np.full((40, 40), 7.5), cfg)
        assert not adaptive_threshold(ra, DetectorParams()).any()

    def test_isolated_impulse_marks_exactly_that_cell(self, cfg):
        values = np.zeros((40, 40))
        values[20, 20] = 40.0
        ra = synthetic_map(values, cfg)
        mask = adaptive_threshold(ra, DetectorParams(threshold_k=4.0))
        assert mask[20, 20]
        assert mask.sum() == 1

    def test_oracle_target_region_contains_peak(self, dcfg):
        hits = 0
        for seed in range(20):
            frame = make_target_frame(dcfg, target_range=10.0, noise_std=0.05, seed=seed)
            ra = compute_ra_map(frame, dcfg)
            mask = adaptive_threshold(ra, DetectorParams())
            peak = np.unravel_index(np.argmax(ra.magnitude_db), ra.magnitude_db.shape)
            if mask[peak]:
                hits += 1
        assert hits >= 18

    def test_monotone_in_threshold(self, dcfg):
        frame = make_target_frame(dcfg, target_range=10.0, noise_std=0.05, seed=1)
        ra = compute_ra_map(frame, dcfg)
        counts = [
            adaptive_threshold(ra, DetectorParams(threshold_k=k)).sum()
            for k in (1.0, 2.0, 3.0, 4.0, 6.0)
        ]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_db_offset_invariance(self, dcfg):
        frame = make_target_frame(dcfg, target_range=10.0, noise_std=0.05, seed=2)
        ra = compute_ra_map(frame, dcfg)
        shifted = synthetic_map(ra.magnitude_db + 17.0, dcfg)
        params = DetectorParams()
        assert np.array_equal(
            adaptive_threshold(ra, params), adaptive_threshold(shifted, params)
        )

    def test_window_larger_than_map(self, cfg):
        ra = synthetic_map(np.zeros((10, 10)), cfg)
        with pytest.raises(ParameterError):
            adaptive_threshold(ra, DetectorParams(window_cells=12))

    def test_param_validation(self):
        with pytest.raises(ParameterError):
            DetectorParams(guard_cells=6, window_cells=6)
        with pytest.raises(ParameterError):
            DetectorParams(threshold_k=0.0)
        with pytest.raises(ParameterError):
            DetectorParams(min_region_cells=0)


class TestExtractRegions:
    def test_empty_mask(self, cfg):
        ra = synthetic_map(np.zeros((30, 30)), cfg)
        assert extract_regions(np.zeros((30, 30), bool), ra, DetectorParams()) == []

    def test_two_disjoint_blobs(self, cfg):
        values = np.zeros((40, 40))
        mask = np.zeros((40, 40), bool)
        for r, c in ((10, 10), (30, 30)):
            values[r - 1 : r + 2, c - 1 : c + 2] = 30.0
            mask[r - 1 : r + 2, c - 1 : c + 2] = True
        ra = synthetic_map(values, cfg)
        detections = extract_regions(mask, ra, DetectorParams(min_region_cells=3))
        assert len(detections) == 2

    def test_symmetric_blob_centroid(self, cfg):
        # 3x3 blob of equal power centered on (range bin 20, center azimuth):
        # hand-computed weighted mean = the center cell exactly
        values = np.full((64, 64), -300.0)
        mask = np.zeros((64, 64), bool)
        values[19:22, 31:34] = 30.0
        mask[19:22, 31:34] = True
        ra = synthetic_map(values, cfg)
        (det,) = extract_regions(mask, ra, DetectorParams())
        assert det.range == pytest.approx(20.0 * cfg.range_bin_width)
        assert det.azimuth == pytest.approx(0.0, abs=1e-12)
        assert det.cell_count == 9
        assert det.peak_power_db == 30.0

    def test_min_region_cells_filters(self, cfg):
        values = np.zeros((40, 40))
        values[5, 5] = 30.0
        mask = np.zeros((40, 40), bool)
        mask[5, 5] = True
        ra = synthetic_map(values, cfg)
        assert extract_regions(mask, ra, DetectorParams(min_region_cells=2)) == []

    def test_sorted_by_peak_power(self, cfg):
        values = np.zeros((40, 40))
        mask = np.zeros((40, 40), bool)
        values[10:13, 10:13] = 20.0
        values[30:33, 30:33] = 50.0
        mask[10:13, 10:13] = mask[30:33, 30:33] = True
        ra = synthetic_map(values, cfg)
        detections = extract_regions(mask, ra, DetectorParams())
        assert detections[0].peak_power_db == 50.0

    def test_shape_mismatch(self, cfg):
        ra = synthetic_map(np.zeros((30, 30)), cfg)
        with pytest.raises(ShapeError):
            extract_regions(np.zeros((31, 30), bool), ra, DetectorParams())


class TestDetectPrimaryRange:
    def test_oracle_target_within_one_bin(self, dcfg):
        frame = make_target_frame(dcfg, target_range=10.0, noise_std=0.05, seed=3)
        detected = detect_primary_range(frame, dcfg)
        assert detected == pytest.approx(10.0, abs=0.5)

    def test_noise_only_returns_none(self, dcfg):
        clean = 0
        for seed in range(20):
            frame = make_noise_frame(dcfg, noise_std=0.05, seed=seed)
            if detect_primary_range(frame, dcfg) is None:
                clean += 1
        assert clean >= 18

    def test_noise_free_grid_error_below_bin_width(self, dcfg):
        for target_range in np.arange(2.0, 25.1, 1.0):
            frame = make_target_frame(dcfg, target_range=float(target_range))
            detected = detect_primary_range(frame, dcfg)
            assert detected is not None
            assert abs(detected - target_range) <= dcfg.range_bin_width

    def test_scaled_frame_requires_scaling(self, dcfg):
        from radargen.config import fit_scaling_params, scale_frame

        frame = make_target_frame(dcfg, target_range=10.0, noise_std=0.05, seed=4)
        other = make_target_frame(dcfg, target_range=20.0, noise_std=0.05, seed=5)
        scaling = fit_scaling_params([frame, other])
        scaled = scale_frame(frame, scaling)
        with pytest.raises(ParameterError):
            detect_primary_range(scaled, dcfg)
        detected = detect_primary_range(scaled, dcfg, scaling=scaling)
        assert detected == pytest.approx(10.0, abs=0.5)
