"""Adversarial training loop: Wasserstein objective with gradient penalty.

Per outer iteration the critic takes ``critic_steps_per_gen_step`` updates on
fresh real minibatches (fakes conditioned on the same labels), then the
generator takes one update at distances drawn from the empirical label
distribution. All randomness (shuffling, latents, interpolation factors,
distance draws) flows from one numpy generator so runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .config import (
    ChirpFrame,
    RadarConfig,
    ScalingParams,
    scale_distance_for_critic,
    scale_distance_for_generator,
)
from .errors import ConfigError, ContractError, DataError, TrainingError
from .gan import (
    Critic,
    CriticSpec,
    GanBundle,
    Generator,
    GeneratorSpec,
    TrainingMeta,
    params_to_numpy,
)

# Columns of the per-update loss history.
LOSS_COLUMNS = ("step", "critic_loss", "gen_loss", "gp")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one adversarial training run."""

    epochs: int = 300
    batch_size: int = 64
    critic_steps_per_gen_step: int = 5
    gp_lambda: float = 10.0
    learning_rate: float = 1e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.9
    seed: int = 0
    checkpoint_every: int = 50

    def __post_init__(self):
        for name in ("epochs", "batch_size", "critic_steps_per_gen_step", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.gp_lambda < 0:
            raise ConfigError("gp_lambda must be >= 0")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must be in [0, 1)")


def gradient_penalty(
    critic_fn: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
    real: torch.Tensor,
    fake: torch.Tensor,
    distances: torch.Tensor,
    rng: np.random.Generator,
) -> torch.Tensor:
    """Mean squared deviation of the critic's input-gradient norm from 1.

    Evaluated at per-sample random interpolates eps*real + (1-eps)*fake with
    eps ~ U(0, 1). The gradient is taken with respect to the interpolated data
    channels only; the broadcast distance conditioning is excluded.
    """
    if real.shape != fake.shape:
        raise ContractError(f"batch shapes differ: {tuple(real.shape)} vs {tuple(fake.shape)}")
    eps = torch.from_numpy(
        rng.uniform(0.0, 1.0, size=(real.shape[0], 1, 1)).astype(np.float32)
    ).to(real.dtype)
    interp = (eps * real + (1.0 - eps) * fake).requires_grad_(True)
    scores = critic_fn(interp, distances)
    grads = torch.autograd.grad(
        outputs=scores.sum(), inputs=interp, create_graph=True
    )[0]
    norms = grads.flatten(1).norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean()


def critic_loss(
    critic_fn: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
    generator_fn: Callable[[int, torch.Tensor], torch.Tensor],
    real: torch.Tensor,
    distances: torch.Tensor,
    gp_lambda: float,
    rng: np.random.Generator,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Wasserstein critic loss: mean fake score - mean real score + gp term.

    Returns (loss, gradient_penalty_value).
    """
    fake = generator_fn(real.shape[0], distances)
    gp = gradient_penalty(critic_fn, real, fake, distances, rng)
    loss = critic_fn(fake, distances).mean() - critic_fn(real, distances).mean()
    return loss + gp_lambda * gp, gp


def generator_loss(
    critic_fn: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
    generator_fn: Callable[[int, torch.Tensor], torch.Tensor],
    batch_size: int,
    distances: torch.Tensor,
) -> torch.Tensor:
    """Negative mean critic score over a fresh generated batch."""
    return -critic_fn(generator_fn(batch_size, distances), distances).mean()


class _BatchStream:
    """Endless shuffled minibatches over frame indices."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.batch_size = batch_size
        self.rng = rng
        self._order = rng.permutation(n)
        self._pos = 0

    def next_indices(self) -> np.ndarray:
        if self._pos + self.batch_size > self.n:
            self._order = self.rng.permutation(self.n)
            self._pos = 0
        idx = self._order[self._pos : self._pos + self.batch_size]
        self._pos += self.batch_size
        return idx


def train(
    dataset: Sequence[ChirpFrame],
    generator_spec: GeneratorSpec,
    critic_spec: CriticSpec,
    config: TrainConfig,
    scaling: ScalingParams,
    radar_config: RadarConfig,
    out_dir: str | Path | None = None,
    deterministic: bool = False,
    on_epoch: Callable[[int, dict], None] | None = None,
) -> GanBundle:
    """Fit the generator/critic pair to a scaled, blanked, labeled dataset.

    Writes a checkpoint every ``config.checkpoint_every`` epochs when
    ``out_dir`` is given and returns the final bundle. Aborts (after dumping a
    diagnostic checkpoint) if any loss turns non-finite. ``deterministic``
    forces single-threaded execution for bitwise reproducibility.
    """
    from .storage import save_checkpoint  # deferred: storage imports gan types

    if len(dataset) == 0:
        raise DataError("training dataset is empty")
    if len(dataset) < config.batch_size:
        raise DataError(
            f"dataset has {len(dataset)} frames, fewer than batch_size {config.batch_size}"
        )
    for frame in dataset:
        if not frame.scaled:
            raise ContractError("training frames must be scaled to [-1, 1]")
        frame.check_shape(radar_config)

    if deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(config.seed)
    rng = np.random.Generator(np.random.PCG64(config.seed))

    frames = np.stack([f.samples for f in dataset]).astype(np.float32)
    labels_m = np.array([f.distance_label for f in dataset], dtype=np.float64)
    x_all = torch.from_numpy(frames)
    cond_critic_all = torch.from_numpy(
        np.array([scale_distance_for_critic(d, scaling) for d in labels_m], dtype=np.float32)
    )
    cond_gen_all = torch.from_numpy(
        np.array([scale_distance_for_generator(d, scaling) for d in labels_m], dtype=np.float32)
    )

    generator = Generator(generator_spec)
    critic = Critic(critic_spec)
    generator.train()
    critic.train()
    opt_g = torch.optim.Adam(
        generator.parameters(), lr=config.learning_rate,
        betas=(config.adam_beta1, config.adam_beta2),
    )
    opt_c = torch.optim.Adam(
        critic.parameters(), lr=config.learning_rate,
        betas=(config.adam_beta1, config.adam_beta2),
    )

    prefix = radar_config.blanked_prefix
    latent_dim = generator_spec.latent_dim

    def run_generator(count: int, cond_gen: torch.Tensor) -> torch.Tensor:
        z = torch.from_numpy(rng.standard_normal((count, latent_dim), dtype=np.float32))
        out = generator(torch.cat([z, cond_gen.view(-1, 1)], dim=1))
        if prefix:
            mask = torch.ones(out.shape[-1], dtype=out.dtype)
            mask[:prefix] = 0.0
            out = out * mask
        return out

    stream = _BatchStream(len(dataset), config.batch_size, rng)
    iters_per_epoch = math.ceil(len(dataset) / config.batch_size)
    history: list[tuple[float, float, float, float]] = []
    step = 0
    last_closs = math.nan
    last_gloss = math.nan
    last_gp = math.nan

    def record(closs: float, gloss: float, gp: float, fresh: tuple[float, ...], epoch: int):
        """Append one history row; abort if a freshly computed loss is non-finite."""
        nonlocal step
        step += 1
        history.append((float(step), closs, gloss, gp))
        if not all(math.isfinite(v) for v in fresh):
            if out_dir is not None:
                save_checkpoint(snapshot(epoch), Path(out_dir) / "diagnostic_nan.ckpt")
            raise TrainingError(f"non-finite loss at step {step}; training aborted")

    def snapshot(epochs_done: int) -> GanBundle:
        return GanBundle(
            generator_params=params_to_numpy(generator),
            critic_params=params_to_numpy(critic),
            generator_spec=generator_spec,
            critic_spec=critic_spec,
            scaling=scaling,
            radar_config=radar_config,
            training_meta=TrainingMeta(
                epochs=epochs_done,
                seed=config.seed,
                loss_history=np.array(history, dtype=np.float32).reshape(-1, 4),
            ),
        )

    for epoch in range(1, config.epochs + 1):
        for _ in range(iters_per_epoch):
            for _ in range(config.critic_steps_per_gen_step):
                idx = stream.next_indices()
                real = x_all[idx]
                d_critic = cond_critic_all[idx]
                d_gen = cond_gen_all[idx]
                with torch.no_grad():
                    fake = run_generator(len(idx), d_gen)
                gp = gradient_penalty(critic, real, fake, d_critic, rng)
                loss_c = (
                    critic(fake, d_critic).mean()
                    - critic(real, d_critic).mean()
                    + config.gp_lambda * gp
                )
                opt_c.zero_grad()
                loss_c.backward()
                opt_c.step()
                last_closs, last_gp = float(loss_c.item()), float(gp.item())
                record(last_closs, last_gloss, last_gp, (last_closs, last_gp), epoch)

            # generator update at distances drawn from the empirical labels
            draw = rng.integers(0, len(dataset), size=config.batch_size)
            d_gen = cond_gen_all[draw]
            d_critic = cond_critic_all[draw]
            loss_g = -critic(run_generator(config.batch_size, d_gen), d_critic).mean()
            opt_g.zero_grad()
            loss_g.backward()
            opt_g.step()
            last_gloss = float(loss_g.item())
            record(last_closs, last_gloss, last_gp, (last_gloss,), epoch)

        if on_epoch is not None:
            on_epoch(epoch, {"critic_loss": last_closs, "gen_loss": last_gloss, "gp": last_gp})
        if out_dir is not None and epoch % config.checkpoint_every == 0 and epoch < config.epochs:
            save_checkpoint(snapshot(epoch), Path(out_dir) / f"checkpoint_epoch_{epoch:05d}.ckpt")

    return snapshot(config.epochs)
