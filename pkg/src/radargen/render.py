"""PGM rendering of RA maps and chirp waveforms (no imaging dependencies)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import ChirpFrame
from .dsp import RangeAzimuthMap
from .storage import atomic_writer


def write_pgm(image: np.ndarray, path: str | Path) -> None:
    """Write a 2-D uint8 array as a binary (P5) PGM image."""
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError("write_pgm expects a 2-D uint8 array")
    with atomic_writer(path) as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii"))
        fh.write(image.tobytes(order="C"))


def ra_map_to_image(ra_map: RangeAzimuthMap) -> np.ndarray:
    """8-bit rendering of a map: dB clipped to its [p1, p99] percentiles.

    Row index = range bin, column index = azimuth bin.
    """
    mag = ra_map.magnitude_db
    lo, hi = np.percentile(mag, [1.0, 99.0])
    if hi <= lo:
        return np.zeros(mag.shape, dtype=np.uint8)
    scaled = np.clip((mag - lo) / (hi - lo), 0.0, 1.0)
    return np.round(scaled * 255.0).astype(np.uint8)


def chirps_to_image(frame: ChirpFrame, height: int = 256) -> np.ndarray:
    """All channels overlaid as white polylines on black, oscilloscope style.

    Column i spans the amplitude interval between samples i and i+1 of each
    channel, so steep segments stay connected.
    """
    samples = frame.samples
    width = samples.shape[1]
    lo = float(samples.min())
    hi = float(samples.max())
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    # amplitude -> row, top row = max amplitude
    rows = (hi - samples) / (hi - lo) * (height - 1)
    rows = np.clip(np.round(rows).astype(int), 0, height - 1)
    image = np.zeros((height, width), dtype=np.uint8)
    for channel_rows in rows:
        for i in range(width):
            j = min(i + 1, width - 1)
            top = min(channel_rows[i], channel_rows[j])
            bottom = max(channel_rows[i], channel_rows[j])
            image[top : bottom + 1, i] = 255
    return image
