"""FFT processing: chirp frames to range spectra and Range-Azimuth maps.

Range comes from an FFT over the fast-time samples of each channel, azimuth
from an FFT across the channels of a uniform linear array. The same code path
serves simulated and generated frames; nothing here inspects provenance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ChirpFrame, RadarConfig
from .errors import ParameterError, ShapeError

DB_EPS = 1e-12  # floor inside 20*log10 so all-zero frames stay finite

WINDOWS = ("rect", "hann")


@dataclass(frozen=True)
class RangeSpectrum:
    """One-sided range FFT per channel: num_channels x K_r complex bins."""

    bins: np.ndarray
    range_axis: np.ndarray  # meters, strictly increasing from 0


@dataclass(frozen=True)
class RangeAzimuthMap:
    """Magnitude grid [dB] over range bins x azimuth bins with axis metadata."""

    magnitude_db: np.ndarray  # K_r x K_a
    range_axis: np.ndarray  # meters
    azimuth_axis: np.ndarray  # radians, symmetric about 0
    config_ref: RadarConfig


def _window(name: str, length: int) -> np.ndarray:
    if name == "rect":
        return np.ones(length)
    if name == "hann":
        return np.hanning(length)
    raise ParameterError(f"unknown window {name!r}; expected one of {WINDOWS}")


def range_fft(frame: ChirpFrame, config: RadarConfig, window: str = "rect") -> RangeSpectrum:
    """Per-channel range FFT of a blanked, raw-unit frame.

    The per-channel mean over the unblanked region is removed first (the
    blanked prefix plus any offset would otherwise dominate bin 0), then the
    window is applied over the full chirp and a length-N_s FFT taken, keeping
    the one-sided bins [0, N_s/2).
    """
    frame.check_shape(config)
    n = config.samples_per_chirp
    data = frame.samples.astype(np.float64, copy=True)
    live = data[:, config.blanked_prefix :]
    live -= live.mean(axis=1, keepdims=True)
    data *= _window(window, n)[None, :]
    spectrum = np.fft.fft(data, axis=1)[:, : n // 2]
    range_axis = np.arange(n // 2) * config.range_bin_width
    return RangeSpectrum(bins=spectrum, range_axis=range_axis)


def compute_ra_map(
    frame: ChirpFrame,
    config: RadarConfig,
    k_azimuth: int = 64,
    window: str = "hann",
) -> RangeAzimuthMap:
    """Range-Azimuth magnitude map [dB] from one multi-channel frame.

    For each range bin the M channel values are zero-padded to ``k_azimuth``,
    FFT'd across channels and centered so boresight lands on the middle bin.
    The window applies to both FFT axes: with a rect window the 16-element
    pattern has exact nulls on the padded grid (arbitrarily deep dB cells that
    wreck local statistics downstream), so maps default to hann. The azimuth
    axis follows sin(theta_k) = 2k / K_a for half-wavelength element spacing.
    """
    if config.num_channels < 2:
        raise ParameterError("azimuth processing needs at least 2 channels")
    if k_azimuth < config.num_channels:
        raise ParameterError(
            f"k_azimuth {k_azimuth} must be >= num_channels {config.num_channels}"
        )
    spectrum = range_fft(frame, config, window=window)
    # channels x K_r -> K_r x K_a
    channel_window = _window(window, config.num_channels)[:, None]
    azimuth_fft = np.fft.fft(spectrum.bins * channel_window, n=k_azimuth, axis=0)
    azimuth_fft = np.fft.fftshift(azimuth_fft, axes=0).T
    magnitude_db = 20.0 * np.log10(np.abs(azimuth_fft) + DB_EPS)
    k = np.arange(k_azimuth) - k_azimuth // 2
    azimuth_axis = np.arcsin(2.0 * k / k_azimuth)
    return RangeAzimuthMap(
        magnitude_db=magnitude_db,
        range_axis=spectrum.range_axis,
        azimuth_axis=azimuth_axis,
        config_ref=config,
    )
