"""Radar parameterization, the chirp frame container and amplitude/distance scaling.

Everything downstream (simulation, GAN, DSP, detection, evaluation) consumes
the types defined here. All types are immutable value objects and all
operations are pure functions returning new frames.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, ContractError, RangeError, ShapeError

C_LIGHT = 299_792_458.0  # speed of light [m/s]


@dataclass(frozen=True)
class RadarConfig:
    """Parametric description of the emulated FMCW sensor.

    Attributes:
        carrier_freq: carrier frequency [Hz]
        bandwidth: sweep bandwidth [Hz]
        chirp_duration: sweep duration [s]
        samples_per_chirp: IF samples per chirp (N_s)
        num_channels: simultaneous chirps / array elements (M)
        antenna_spacing_wavelengths: element spacing d/lambda (0.5 = half wave)
        blanked_prefix: leading samples zeroed out of every chirp
        max_range: maximum target range covered by the sensor [m]
    """

    carrier_freq: float
    bandwidth: float
    chirp_duration: float
    samples_per_chirp: int
    num_channels: int
    antenna_spacing_wavelengths: float
    blanked_prefix: int
    max_range: float

    def __post_init__(self):
        if self.bandwidth <= 0 or self.chirp_duration <= 0:
            raise ConfigError("bandwidth and chirp_duration must be positive")
        if not 0 <= self.blanked_prefix < self.samples_per_chirp:
            raise ConfigError(
                f"blanked_prefix {self.blanked_prefix} must be in "
                f"[0, samples_per_chirp={self.samples_per_chirp})"
            )
        if self.num_channels < 1:
            raise ConfigError("num_channels must be >= 1")
        if self.max_range <= 0:
            raise ConfigError("max_range must be positive")
        # Beat frequency at max range must stay below Nyquist.
        if self.beat_frequency(self.max_range) >= self.sample_rate / 2:
            raise ConfigError(
                f"beat frequency at max_range "
                f"({self.beat_frequency(self.max_range):.0f} Hz) violates "
                f"Nyquist for sample rate {self.sample_rate:.0f} Hz"
            )

    @property
    def sample_rate(self) -> float:
        """ADC sample rate [Hz], derived as samples_per_chirp / chirp_duration."""
        return self.samples_per_chirp / self.chirp_duration

    @property
    def sweep_slope(self) -> float:
        """Chirp frequency slope [Hz/s]."""
        return self.bandwidth / self.chirp_duration

    @property
    def range_bin_width(self) -> float:
        """Range covered by one FFT bin [m]: c / (2 * bandwidth)."""
        return C_LIGHT / (2.0 * self.bandwidth)

    def beat_frequency(self, target_range: float) -> float:
        """IF tone frequency [Hz] produced by a target at the given range [m]."""
        return 2.0 * self.sweep_slope * target_range / C_LIGHT

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "RadarConfig":
        return cls(**json.loads(text))


def default_config() -> RadarConfig:
    """77 GHz, 16-channel sensor: 1024 samples per 128 us chirp, 0.5 m range bins."""
    return RadarConfig(
        carrier_freq=77e9,
        bandwidth=300e6,
        chirp_duration=128e-6,
        samples_per_chirp=1024,
        num_channels=16,
        antenna_spacing_wavelengths=0.5,
        blanked_prefix=250,
        max_range=25.0,
    )


def desk_config() -> RadarConfig:
    """Reduced-rate variant for desk-scale model training.

    Same bandwidth, chirp duration and range-bin math as default_config (a
    10 m target still lands on bin 20), but 256 samples per chirp at 2 MHz so
    adversarial training fits a small CPU budget. The blanked prefix keeps
    the same fraction of the chirp.
    """
    return RadarConfig(
        carrier_freq=77e9,
        bandwidth=300e6,
        chirp_duration=128e-6,
        samples_per_chirp=256,
        num_channels=16,
        antenna_spacing_wavelengths=0.5,
        blanked_prefix=62,
        max_range=25.0,
    )


@dataclass(frozen=True)
class ChirpFrame:
    """One radar sample: num_channels x samples_per_chirp real IF amplitudes.

    ``scaled`` marks whether samples are in raw ADC-normalized units or mapped
    to [-1, 1]. Frames are treated as immutable; operations return copies.
    """

    samples: np.ndarray
    distance_label: float
    scaled: bool = False

    def __post_init__(self):
        if self.samples.ndim != 2:
            raise ShapeError(f"samples must be 2-D, got shape {self.samples.shape}")

    @property
    def num_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def samples_per_chirp(self) -> int:
        return self.samples.shape[1]

    def check_shape(self, config: RadarConfig) -> None:
        expected = (config.num_channels, config.samples_per_chirp)
        if self.samples.shape != expected:
            raise ShapeError(
                f"frame shape {self.samples.shape} does not match config {expected}"
            )


@dataclass(frozen=True)
class ScalingParams:
    """Amplitude and distance normalization fitted on a training split.

    data_min/data_max bound the raw IF amplitudes; dist_* summarize the
    distance labels. Frames and critic-side distances map to [-1, 1],
    generator-side distances are standardized.
    """

    data_min: float
    data_max: float
    dist_min: float
    dist_max: float
    dist_mean: float
    dist_std: float

    def __post_init__(self):
        if not self.data_max > self.data_min:
            raise ConfigError("data_max must exceed data_min")
        if not self.dist_max > self.dist_min:
            raise ConfigError("dist_max must exceed dist_min")
        if not self.dist_std > 0:
            raise ConfigError("dist_std must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "ScalingParams":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class TargetState:
    """A point reflector: range [m], azimuth [rad, boresight = 0], amplitude."""

    range: float
    azimuth: float
    amplitude: float

    def __post_init__(self):
        if self.range < 0:
            raise RangeError(f"target range {self.range} must be >= 0")
        if not abs(self.azimuth) < np.pi / 2:
            raise RangeError(f"azimuth {self.azimuth} must satisfy |azimuth| < pi/2")
        if self.amplitude <= 0:
            raise RangeError("target amplitude must be positive")


def fit_scaling_params(frames: list[ChirpFrame]) -> ScalingParams:
    """Fit scaling bounds on a training split: global sample min/max, label stats.

    The fitted params map the split's global minimum to -1 and maximum to +1
    exactly; distance stats come from the labels (population std).
    """
    if not frames:
        raise ContractError("cannot fit scaling params on an empty dataset")
    data_min = min(float(f.samples.min()) for f in frames)
    data_max = max(float(f.samples.max()) for f in frames)
    labels = np.array([f.distance_label for f in frames], dtype=np.float64)
    return ScalingParams(
        data_min=data_min,
        data_max=data_max,
        dist_min=float(labels.min()),
        dist_max=float(labels.max()),
        dist_mean=float(labels.mean()),
        dist_std=float(labels.std()),
    )


def scale_frame(frame: ChirpFrame, params: ScalingParams) -> ChirpFrame:
    """Map raw amplitudes to [-1, 1]: 2*(x - min)/(max - min) - 1, clamped.

    Clamping (rather than erroring) tolerates inference-time samples that
    marginally exceed the training bounds.
    """
    if frame.scaled:
        raise ContractError("scale_frame expects a raw (unscaled) frame")
    span = params.data_max - params.data_min
    scaled = 2.0 * (frame.samples - params.data_min) / span - 1.0
    np.clip(scaled, -1.0, 1.0, out=scaled)
    return ChirpFrame(samples=scaled, distance_label=frame.distance_label, scaled=True)


def unscale_frame(frame: ChirpFrame, params: ScalingParams) -> ChirpFrame:
    """Inverse of scale_frame for in-range values."""
    if not frame.scaled:
        raise ContractError("unscale_frame expects a scaled frame")
    span = params.data_max - params.data_min
    raw = (frame.samples + 1.0) * span / 2.0 + params.data_min
    return ChirpFrame(samples=raw, distance_label=frame.distance_label, scaled=False)


def scale_distance_for_critic(distance: float, params: ScalingParams) -> float:
    """Map a distance to [-1, 1] over the observed label range (critic input)."""
    if not params.dist_min <= distance <= params.dist_max:
        raise RangeError(
            f"distance {distance} m outside training range "
            f"[{params.dist_min}, {params.dist_max}] m"
        )
    return 2.0 * (distance - params.dist_min) / (params.dist_max - params.dist_min) - 1.0


def scale_distance_for_generator(distance: float, params: ScalingParams) -> float:
    """Standardize a distance to zero mean / unit variance (generator input)."""
    return (distance - params.dist_mean) / params.dist_std


def blank_prefix(frame: ChirpFrame, config: RadarConfig) -> ChirpFrame:
    """Zero the first ``config.blanked_prefix`` samples of every channel.

    Idempotent, channel-independent, and valid in either amplitude domain
    (the zeroed region is by definition carried as exact zeros).
    """
    samples = frame.samples.copy()
    samples[:, : config.blanked_prefix] = 0.0
    return ChirpFrame(
        samples=samples, distance_label=frame.distance_label, scaled=frame.scaled
    )
