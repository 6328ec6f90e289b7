"""Distance-conditioned generator and critic over multi-channel chirp frames.

Both networks are 1-D convolutional: the generator expands a latent vector
(with the standardized target distance appended) through transposed
convolutions to a tanh-bounded 16-channel frame; the critic mirrors it with
strided convolutions, reading the distance as a constant extra input channel,
and emits one unbounded realness score. Parameters live in the bundle as
plain float32 arrays so checkpoints stay framework-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
import torch
from torch import nn

from .config import (
    ChirpFrame,
    RadarConfig,
    ScalingParams,
    scale_distance_for_critic,
    scale_distance_for_generator,
)
from .errors import ConfigError, ContractError, RangeError


@dataclass(frozen=True)
class GeneratorSpec:
    """Architecture of the upsampling generator.

    The dense stem maps latent_dim + 1 inputs to base_channels x initial_len,
    where initial_len = output_len / stride**num_upsample_layers (must divide
    exactly); channels halve per layer down to output_channels at the end.
    """

    latent_dim: int = 100
    base_channels: int = 256
    num_upsample_layers: int = 3
    kernel_size: int = 25
    stride: int = 4
    output_channels: int = 16
    output_len: int = 1024

    def __post_init__(self):
        total = self.stride**self.num_upsample_layers
        if self.output_len % total != 0:
            raise ConfigError(
                f"output_len {self.output_len} not divisible by "
                f"stride^layers = {total}"
            )
        if self.base_channels % 2 ** (self.num_upsample_layers - 1) != 0:
            raise ConfigError("base_channels must halve cleanly across layers")

    @property
    def initial_len(self) -> int:
        return self.output_len // self.stride**self.num_upsample_layers

    @property
    def channel_plan(self) -> list[int]:
        """Channel counts entering each upsample layer, then the output."""
        plan = [self.base_channels // 2**i for i in range(self.num_upsample_layers)]
        return plan + [self.output_channels]


@dataclass(frozen=True)
class CriticSpec:
    """Architecture of the downsampling critic (mirror of the generator)."""

    latent_dim: int = 100  # unused by the critic, kept for mirrored bookkeeping
    base_channels: int = 256
    num_downsample_layers: int = 3
    kernel_size: int = 25
    stride: int = 4
    input_channels: int = 16
    input_len: int = 1024
    leaky_slope: float = 0.2

    def __post_init__(self):
        total = self.stride**self.num_downsample_layers
        if self.input_len % total != 0:
            raise ConfigError(
                f"input_len {self.input_len} not divisible by stride^layers = {total}"
            )

    @property
    def final_len(self) -> int:
        return self.input_len // self.stride**self.num_downsample_layers

    @property
    def channel_plan(self) -> list[int]:
        """Channel counts after each conv layer (input gets +1 distance channel)."""
        return [
            self.base_channels // 2 ** (self.num_downsample_layers - 1 - i)
            for i in range(self.num_downsample_layers)
        ]


def mirrored_specs(
    config: RadarConfig,
    latent_dim: int = 100,
    base_channels: int = 256,
    num_layers: int = 3,
    kernel_size: int = 25,
    stride: int = 4,
) -> tuple[GeneratorSpec, CriticSpec]:
    """Generator/critic pair sized for a radar config."""
    gen = GeneratorSpec(
        latent_dim=latent_dim,
        base_channels=base_channels,
        num_upsample_layers=num_layers,
        kernel_size=kernel_size,
        stride=stride,
        output_channels=config.num_channels,
        output_len=config.samples_per_chirp,
    )
    critic = CriticSpec(
        latent_dim=latent_dim,
        base_channels=base_channels,
        num_downsample_layers=num_layers,
        kernel_size=kernel_size,
        stride=stride,
        input_channels=config.num_channels,
        input_len=config.samples_per_chirp,
        leaky_slope=0.2,
    )
    return gen, critic


class Generator(nn.Module):
    def __init__(self, spec: GeneratorSpec):
        super().__init__()
        self.spec = spec
        k, s = spec.kernel_size, spec.stride
        pad = (k - s + 1) // 2
        out_pad = 2 * pad - (k - s)
        self.fc = nn.Linear(spec.latent_dim + 1, spec.base_channels * spec.initial_len)
        layers: list[nn.Module] = []
        plan = spec.channel_plan
        for i in range(spec.num_upsample_layers):
            layers.append(nn.ReLU())
            layers.append(
                nn.ConvTranspose1d(
                    plan[i], plan[i + 1], k, stride=s, padding=pad, output_padding=out_pad
                )
            )
        layers.append(nn.Tanh())
        self.net = nn.Sequential(*layers)

    def forward(self, latent_and_distance: torch.Tensor) -> torch.Tensor:
        h = self.fc(latent_and_distance)
        h = h.view(-1, self.spec.base_channels, self.spec.initial_len)
        return self.net(h)


class Critic(nn.Module):
    def __init__(self, spec: CriticSpec):
        super().__init__()
        self.spec = spec
        k, s = spec.kernel_size, spec.stride
        pad = k // 2
        layers: list[nn.Module] = []
        in_ch = spec.input_channels + 1  # data channels + broadcast distance
        for out_ch in spec.channel_plan:
            layers.append(nn.Conv1d(in_ch, out_ch, k, stride=s, padding=pad))
            layers.append(nn.LeakyReLU(spec.leaky_slope))
            in_ch = out_ch
        self.net = nn.Sequential(*layers)
        self.fc = nn.Linear(spec.base_channels * spec.final_len, 1)

    def forward(self, frames: torch.Tensor, distances_scaled: torch.Tensor) -> torch.Tensor:
        """Score frames (B x C x N, scaled units) conditioned on distances (B,)."""
        channel = distances_scaled.view(-1, 1, 1).expand(-1, 1, frames.shape[-1])
        h = self.net(torch.cat([frames, channel], dim=1))
        return self.fc(h.flatten(1)).squeeze(1)


@dataclass(frozen=True)
class TrainingMeta:
    """Provenance of a trained bundle: epoch count, seed and loss curves."""

    epochs: int = 0
    seed: int = 0
    # one row per optimizer update: [step, critic_loss, gen_loss, gp]
    loss_history: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), np.float32))


@dataclass(frozen=True)
class GanBundle:
    """Everything needed to run (or resume judging) a trained GAN."""

    generator_params: dict[str, np.ndarray]
    critic_params: dict[str, np.ndarray]
    generator_spec: GeneratorSpec
    critic_spec: CriticSpec
    scaling: ScalingParams
    radar_config: RadarConfig
    training_meta: TrainingMeta = field(default_factory=TrainingMeta)


def params_to_numpy(module: nn.Module) -> dict[str, np.ndarray]:
    return {
        name: tensor.detach().cpu().numpy().astype(np.float32, copy=True)
        for name, tensor in module.state_dict().items()
    }


def load_params(module: nn.Module, params: dict[str, np.ndarray]) -> None:
    state = {name: torch.from_numpy(np.ascontiguousarray(arr)) for name, arr in params.items()}
    module.load_state_dict(state)


def build_generator(bundle: GanBundle) -> Generator:
    gen = Generator(bundle.generator_spec)
    load_params(gen, bundle.generator_params)
    gen.eval()
    return gen


def build_critic(bundle: GanBundle) -> Critic:
    critic = Critic(bundle.critic_spec)
    load_params(critic, bundle.critic_params)
    critic.eval()
    return critic


def generate(
    bundle: GanBundle,
    distance: float,
    count: int,
    seed: int,
    batch_size: int = 256,
) -> list[ChirpFrame]:
    """Draw ``count`` frames conditioned on a distance [m].

    Latents come from a seeded generator, so identical (bundle, distance,
    count, seed) calls are bit-identical. Outputs are scaled (tanh range),
    labeled with the requested distance, and have the blanked prefix forced
    to zero.
    """
    scaling = bundle.scaling
    if not scaling.dist_min <= distance <= scaling.dist_max:
        raise RangeError(
            f"distance {distance} m outside training range "
            f"[{scaling.dist_min}, {scaling.dist_max}] m"
        )
    gen = build_generator(bundle)
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.standard_normal((count, bundle.generator_spec.latent_dim), dtype=np.float32)
    cond = np.float32(scale_distance_for_generator(distance, scaling))
    inputs = np.concatenate([z, np.full((count, 1), cond, dtype=np.float32)], axis=1)

    prefix = bundle.radar_config.blanked_prefix
    frames = []
    with torch.no_grad():
        for start in range(0, count, batch_size):
            batch = torch.from_numpy(inputs[start : start + batch_size])
            out = gen(batch).numpy()
            out[:, :, :prefix] = 0.0
            for row in out:
                frames.append(
                    ChirpFrame(samples=row.astype(np.float32), distance_label=distance, scaled=True)
                )
    return frames


def generate_batch(
    bundle: GanBundle,
    distances: np.ndarray,
    seed: int,
    batch_size: int = 256,
) -> list[ChirpFrame]:
    """Like generate, but one frame per entry of ``distances`` [m].

    Builds the generator once, so sampling a whole mixed-distance set (e.g.
    matching a dataset's empirical label distribution) stays cheap.
    """
    scaling = bundle.scaling
    distances = np.asarray(distances, dtype=np.float64)
    for d in distances:
        if not scaling.dist_min <= d <= scaling.dist_max:
            raise RangeError(
                f"distance {d} m outside training range "
                f"[{scaling.dist_min}, {scaling.dist_max}] m"
            )
    gen = build_generator(bundle)
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.standard_normal((len(distances), bundle.generator_spec.latent_dim), dtype=np.float32)
    cond = np.array(
        [scale_distance_for_generator(d, scaling) for d in distances], dtype=np.float32
    )
    inputs = np.concatenate([z, cond[:, None]], axis=1)

    prefix = bundle.radar_config.blanked_prefix
    frames = []
    with torch.no_grad():
        for start in range(0, len(distances), batch_size):
            batch = torch.from_numpy(inputs[start : start + batch_size])
            out = gen(batch).numpy()
            out[:, :, :prefix] = 0.0
            for row, d in zip(out, distances[start : start + batch_size]):
                frames.append(
                    ChirpFrame(samples=row.astype(np.float32), distance_label=float(d), scaled=True)
                )
    return frames


def criticize(bundle: GanBundle, frame: ChirpFrame, distance: float) -> float:
    """Critic score for one scaled frame at a conditioning distance [m]."""
    if not frame.scaled:
        raise ContractError("criticize expects a scaled frame")
    frame.check_shape(bundle.radar_config)
    critic = build_critic(bundle)
    x = torch.from_numpy(frame.samples.astype(np.float32)).unsqueeze(0)
    d = torch.tensor([scale_distance_for_critic(distance, bundle.scaling)], dtype=torch.float32)
    with torch.no_grad():
        return float(critic(x, d).item())


def generator_spec_to_dict(spec: GeneratorSpec) -> dict:
    return asdict(spec)


def critic_spec_to_dict(spec: CriticSpec) -> dict:
    return asdict(spec)
