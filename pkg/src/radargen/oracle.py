"""Point-target IF signal oracle: the training-data source and DSP ground truth.

Synthesizes the intermediate-frequency signal an FMCW front end would see for
ideal point reflectors. A target at range R produces a beat tone at
f_b = 2 * (B / T_c) * R / c on every channel, with a per-channel phase ramp
from the array geometry and a constant per-frame phase from the carrier
round trip. No multipath, clutter or extended-object scattering: this is the
cheap reference the learned model is judged against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import C_LIGHT, ChirpFrame, RadarConfig, TargetState, blank_prefix
from .errors import RangeError

# Per-frame seed stream increment (golden-ratio constant): frame k draws its
# noise from Philox(rng_seed XOR k * _SEED_STRIDE), independent of schedule.
_SEED_STRIDE = 0x9E3779B97F4A7C15
_U64 = 1 << 64


@dataclass(frozen=True)
class SceneSpec:
    """Targets plus additive-noise level and the seed for its draw."""

    targets: tuple[TargetState, ...] = ()
    noise_std: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.noise_std < 0:
            raise RangeError("noise_std must be >= 0")


def frame_noise_seed(rng_seed: int, frame_index: int) -> int:
    """Seed for frame ``frame_index`` of a dataset generated from ``rng_seed``."""
    return (rng_seed ^ (frame_index * _SEED_STRIDE)) % _U64


def synthesize_frame(
    scene: SceneSpec,
    config: RadarConfig,
    range_attenuation: bool = False,
) -> ChirpFrame:
    """Synthesize one raw (unscaled, unblanked) multi-channel chirp frame.

    Each target contributes, on channel m at sample i,
        A * cos(2*pi*f_b*t_i + 2*pi*m*(d/lambda)*sin(azimuth) + phi_R)
    with t_i = i / sample_rate and phi_R = 4*pi*carrier_freq*R/c. Gaussian
    noise with std ``scene.noise_std`` is added per sample, drawn from a
    counter-based generator keyed on ``scene.rng_seed``. The distance label is
    the range of the nearest target (0 for a noise-only scene).

    With ``range_attenuation`` the effective amplitude falls off as A / R^2.
    """
    m_idx = np.arange(config.num_channels, dtype=np.float64)[:, None]
    t = np.arange(config.samples_per_chirp, dtype=np.float64)[None, :] / config.sample_rate
    samples = np.zeros((config.num_channels, config.samples_per_chirp))

    for target in scene.targets:
        if target.range > config.max_range:
            raise RangeError(
                f"target range {target.range} m exceeds max_range {config.max_range} m"
            )
        f_beat = config.beat_frequency(target.range)
        phi_r = 4.0 * np.pi * config.carrier_freq * target.range / C_LIGHT
        channel_phase = (
            2.0 * np.pi * m_idx * config.antenna_spacing_wavelengths * np.sin(target.azimuth)
        )
        amplitude = target.amplitude
        if range_attenuation:
            amplitude = amplitude / max(target.range, 1e-6) ** 2
        samples += amplitude * np.cos(2.0 * np.pi * f_beat * t + channel_phase + phi_r)

    if scene.noise_std > 0:
        rng = np.random.Generator(np.random.Philox(key=scene.rng_seed % _U64))
        samples += rng.normal(0.0, scene.noise_std, size=samples.shape)

    label = min((tgt.range for tgt in scene.targets), default=0.0)
    return ChirpFrame(samples=samples, distance_label=float(label), scaled=False)


def generate_trajectory_dataset(
    config: RadarConfig,
    range_start: float,
    range_end: float,
    num_frames: int,
    azimuth: float = 0.0,
    amplitude: float = 1.0,
    noise_std: float = 0.05,
    rng_seed: int = 0,
    range_attenuation: bool = False,
    range_profile: str = "linear",
) -> list[ChirpFrame]:
    """Frames for a single target moving from range_start to range_end [m].

    Frame k's target range is interpolated between the endpoints: ``linear``
    spaces them evenly, ``quadratic`` compresses spacing toward the start
    (a decelerating pass, useful as a distinct held-out run). Every frame
    gets an independent noise draw from the per-frame seed stream, is blanked,
    and is labeled with its true range.
    """
    if num_frames < 2:
        raise RangeError("num_frames must be >= 2")
    for r in (range_start, range_end):
        if not 0 <= r <= config.max_range:
            raise RangeError(f"trajectory range {r} m outside [0, {config.max_range}] m")
    if range_profile == "linear":
        fractions = np.linspace(0.0, 1.0, num_frames)
    elif range_profile == "quadratic":
        fractions = np.linspace(0.0, 1.0, num_frames) ** 2
    else:
        raise RangeError(f"unknown range_profile {range_profile!r}")
    ranges = range_start + (range_end - range_start) * fractions

    frames = []
    for k, r in enumerate(ranges):
        scene = SceneSpec(
            targets=(TargetState(range=float(r), azimuth=azimuth, amplitude=amplitude),),
            noise_std=noise_std,
            rng_seed=frame_noise_seed(rng_seed, k),
        )
        frame = synthesize_frame(scene, config, range_attenuation=range_attenuation)
        frames.append(blank_prefix(frame, config))
    return frames
