"""Evaluation battery for generated chirp data.

A small distance-regression CNN doubles as the feature extractor: its
pre-dense activations feed a Frechet distance between feature Gaussians of
two sample sets. Nearest-neighbor novelty, conditioning consistency through
the detector, and generation throughput complete the picture.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .config import ChirpFrame, RadarConfig, ScalingParams, scale_distance_for_generator
from .detect import DetectorParams, detect_primary_range
from .errors import ConfigError, ContractError, DataError
from .gan import GanBundle, generate
from .storage import load_model_file, save_model_file


@dataclass(frozen=True)
class RegressorSpec:
    """Conv stack of the distance regressor / feature extractor."""

    input_channels: int = 16
    input_len: int = 1024
    conv_channels: tuple[int, ...] = (32, 64, 64, 128)
    kernel_size: int = 16
    stride: int = 4
    dense_hidden: int = 64
    l2_lambda: float = 0.5

    def __post_init__(self):
        total = self.stride ** len(self.conv_channels)
        if self.input_len % total != 0:
            raise ConfigError(
                f"input_len {self.input_len} not divisible by stride^blocks = {total}"
            )

    @property
    def final_len(self) -> int:
        return self.input_len // self.stride ** len(self.conv_channels)

    @property
    def feature_dim(self) -> int:
        return self.conv_channels[-1] * self.final_len


class Regressor(nn.Module):
    """Distance prediction CNN; ``features`` taps the flattened last conv."""

    def __init__(self, spec: RegressorSpec):
        super().__init__()
        self.spec = spec
        pad = (spec.kernel_size - spec.stride) // 2
        blocks: list[nn.Module] = []
        in_ch = spec.input_channels
        for out_ch in spec.conv_channels:
            blocks.append(nn.Conv1d(in_ch, out_ch, spec.kernel_size, stride=spec.stride, padding=pad))
            blocks.append(nn.ReLU())
            in_ch = out_ch
        self.convs = nn.Sequential(*blocks)
        self.fc1 = nn.Linear(spec.feature_dim, spec.dense_hidden)
        self.fc2 = nn.Linear(spec.dense_hidden, 1)

    def features(self, x: torch.Tensor) -> torch.Tensor:
        return self.convs(x).flatten(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = torch.relu(self.fc1(self.features(x)))
        return self.fc2(h).squeeze(1)

    def kernel_l2(self) -> torch.Tensor:
        """Sum of squared conv/dense kernel weights (biases excluded)."""
        total = torch.zeros(())
        for name, p in self.named_parameters():
            if name.endswith("weight"):
                total = total + (p**2).sum()
        return total


@dataclass(frozen=True)
class RegressorBundle:
    """Trained regressor parameters plus the scaling they were trained under."""

    params: dict[str, np.ndarray]
    spec: RegressorSpec
    scaling: ScalingParams

    @property
    def feature_dim(self) -> int:
        return self.spec.feature_dim


def _build(bundle: RegressorBundle) -> Regressor:
    model = Regressor(bundle.spec)
    model.load_state_dict({k: torch.from_numpy(v) for k, v in bundle.params.items()})
    model.eval()
    return model


def train_regressor(
    frames: list[ChirpFrame],
    scaling: ScalingParams,
    epochs: int = 60,
    seed: int = 0,
    holdout_frac: float = 0.2,
    learning_rate: float = 1e-3,
    batch_size: int = 64,
    deterministic: bool = False,
) -> tuple[RegressorBundle, float]:
    """Supervised distance regression on scaled frames.

    The network predicts the standardized label (so the heavy L2 penalty on
    kernels stays compatible with O(1) outputs) and the held-out MAE is
    reported back in meters. Returns (bundle, holdout_mae_m).
    """
    if not frames:
        raise DataError("regressor needs a non-empty dataset")
    labels = np.array([f.distance_label for f in frames], dtype=np.float64)
    if labels.max() == labels.min():
        raise DataError("degenerate labels: all distances are equal")
    for f in frames:
        if not f.scaled:
            raise ContractError("regressor expects scaled frames")

    if deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(seed)
    rng = np.random.Generator(np.random.PCG64(seed))

    spec = RegressorSpec(
        input_channels=frames[0].num_channels, input_len=frames[0].samples_per_chirp
    )
    model = Regressor(spec)
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=learning_rate)

    x = torch.from_numpy(np.stack([f.samples for f in frames]).astype(np.float32))
    y = torch.from_numpy(
        ((labels - scaling.dist_mean) / scaling.dist_std).astype(np.float32)
    )
    order = rng.permutation(len(frames))
    n_hold = max(1, int(round(holdout_frac * len(frames)))) if holdout_frac > 0 else 0
    hold_idx, train_idx = order[:n_hold], order[n_hold:]
    if len(train_idx) == 0:
        raise DataError("holdout fraction leaves no training frames")

    for _ in range(epochs):
        perm = rng.permutation(len(train_idx))
        for start in range(0, len(train_idx), batch_size):
            idx = train_idx[perm[start : start + batch_size]]
            pred = model(x[idx])
            loss = torch.mean((pred - y[idx]) ** 2) + spec.l2_lambda * model.kernel_l2()
            opt.zero_grad()
            loss.backward()
            opt.step()

    model.eval()
    bundle = RegressorBundle(
        params={k: v.detach().numpy().astype(np.float32, copy=True) for k, v in model.state_dict().items()},
        spec=spec,
        scaling=scaling,
    )
    if n_hold:
        pred_m = predict_distance(bundle, [frames[i] for i in hold_idx])
        mae = float(np.mean(np.abs(pred_m - labels[hold_idx])))
    else:
        mae = math.nan
    return bundle, mae


def predict_distance(bundle: RegressorBundle, frames: list[ChirpFrame]) -> np.ndarray:
    """Predicted distances [m] for scaled frames."""
    model = _build(bundle)
    x = torch.from_numpy(np.stack([f.samples for f in frames]).astype(np.float32))
    with torch.no_grad():
        pred = model(x).numpy().astype(np.float64)
    return pred * bundle.scaling.dist_std + bundle.scaling.dist_mean


def extract_features(
    bundle: RegressorBundle, frames: list[ChirpFrame], batch_size: int = 256
) -> np.ndarray:
    """Flattened last-conv activations, one row per frame."""
    for f in frames:
        if not f.scaled:
            raise ContractError("feature extraction expects scaled frames")
    model = _build(bundle)
    rows = []
    with torch.no_grad():
        for start in range(0, len(frames), batch_size):
            chunk = frames[start : start + batch_size]
            x = torch.from_numpy(np.stack([f.samples for f in chunk]).astype(np.float32))
            rows.append(model.features(x).numpy())
    return np.concatenate(rows).astype(np.float64)


def save_regressor(bundle: RegressorBundle, path: str | Path) -> None:
    save_model_file(
        "regressor",
        {
            "regressor_spec": asdict(bundle.spec),
            "scaling": asdict(bundle.scaling),
            "feature_dim": bundle.feature_dim,
        },
        bundle.params,
        path,
    )


def load_regressor(path: str | Path) -> RegressorBundle:
    header, params = load_model_file("regressor", path)
    spec_dict = dict(header["regressor_spec"])
    spec_dict["conv_channels"] = tuple(spec_dict["conv_channels"])
    return RegressorBundle(
        params=params,
        spec=RegressorSpec(**spec_dict),
        scaling=ScalingParams(**header["scaling"]),
    )


# ---------------------------------------------------------------------------
# Frechet distance between feature Gaussians


def compute_fid(features_a: np.ndarray, features_b: np.ndarray) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}).

    The cross term is evaluated through the symmetrized product
    S_b^{1/2} S_a S_b^{1/2} (same nonzero spectrum as S_a S_b, but symmetric,
    so a real eigendecomposition applies); covariances get a small diagonal
    shrinkage for small-sample stability and tiny negative eigenvalues are
    clamped to zero.
    """
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DataError("feature sets must be 2-D with matching dimension")
    if len(a) < 2 or len(b) < 2:
        raise DataError("need at least 2 rows per feature set")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    dim = a.shape[1]
    shrink = 1e-6 * np.eye(dim)
    sigma_a = np.cov(a, rowvar=False).reshape(dim, dim) + shrink
    sigma_b = np.cov(b, rowvar=False).reshape(dim, dim) + shrink

    vals_b, vecs_b = np.linalg.eigh(sigma_b)
    sqrt_b = (vecs_b * np.sqrt(np.maximum(vals_b, 0.0))) @ vecs_b.T
    product = sqrt_b @ sigma_a @ sqrt_b
    eigvals = np.linalg.eigvalsh((product + product.T) / 2.0)
    eigvals = np.where(eigvals < 0.0, 0.0, eigvals)

    mean_term = float(np.dot(mu_a - mu_b, mu_a - mu_b))
    trace_term = float(np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * np.sum(np.sqrt(eigvals)))
    return max(mean_term + trace_term, 0.0)


# ---------------------------------------------------------------------------
# nearest-neighbor novelty


def _flatten(frames: list[ChirpFrame]) -> np.ndarray:
    return np.stack([f.samples.reshape(-1) for f in frames]).astype(np.float64)


def _min_distances(queries: np.ndarray, refs: np.ndarray, mask_diagonal: bool) -> np.ndarray:
    """Euclidean distance from each query row to its nearest reference row."""
    q_norm = (queries**2).sum(axis=1)[:, None]
    r_norm = (refs**2).sum(axis=1)[None, :]
    d2 = q_norm + r_norm - 2.0 * (queries @ refs.T)
    np.maximum(d2, 0.0, out=d2)
    if mask_diagonal:
        np.fill_diagonal(d2, np.inf)
    return np.sqrt(d2.min(axis=1))


def nn_novelty(
    gen_frames: list[ChirpFrame],
    train_frames: list[ChirpFrame],
    exclude_self: bool = False,
) -> tuple[float, float]:
    """(normalized, raw) nearest-neighbor distance of generations to training.

    raw is the mean over generated frames of the minimum Euclidean distance
    (flattened frames) to any training frame; it is normalized by the training
    set's own self-excluded nearest-neighbor distance. ``exclude_self`` runs
    the same self-excluded protocol on the query set (for the identity check
    gen == train, which then yields exactly 1.0). Both sets must carry
    identical preprocessing (scaled, blanked).
    """
    if len(train_frames) < 2:
        raise DataError("need at least 2 training frames for the NN baseline")
    if exclude_self and len(gen_frames) != len(train_frames):
        raise ContractError("exclude_self requires index-aligned equal-size sets")
    gen = _flatten(gen_frames)
    train = _flatten(train_frames)
    raw = float(_min_distances(gen, train, mask_diagonal=exclude_self).mean())
    baseline = float(_min_distances(train, train, mask_diagonal=True).mean())
    return raw / baseline, raw


def nn_baseline(train_frames: list[ChirpFrame]) -> float:
    """Mean self-excluded nearest-neighbor distance within the training set."""
    if len(train_frames) < 2:
        raise DataError("need at least 2 training frames for the NN baseline")
    train = _flatten(train_frames)
    return float(_min_distances(train, train, mask_diagonal=True).mean())


# ---------------------------------------------------------------------------
# conditioning consistency and throughput


def distance_consistency(
    bundle: GanBundle,
    detector_params: DetectorParams,
    distances: list[float],
    n_per_distance: int,
    seed: int,
    k_azimuth: int = 64,
) -> tuple[float, float]:
    """(MAE [m], detection-failure rate) of detected vs requested distances.

    Generates ``n_per_distance`` frames per requested distance, unscales and
    runs the detector; the MAE covers frames with a detection, the failure
    rate counts frames without one.
    """
    errors = []
    misses = 0
    total = 0
    for i, requested in enumerate(distances):
        frames = generate(bundle, requested, n_per_distance, seed=seed + i)
        for frame in frames:
            total += 1
            detected = detect_primary_range(
                frame, bundle.radar_config, detector_params,
                k_azimuth=k_azimuth, scaling=bundle.scaling,
            )
            if detected is None:
                misses += 1
            else:
                errors.append(abs(detected - requested))
    mae = float(np.mean(errors)) if errors else math.nan
    return mae, misses / total if total else math.nan


def hardware_descriptor() -> str:
    """Best-effort CPU/RAM summary for throughput reports."""
    model = "unknown CPU"
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.startswith("model name"):
                    model = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    mem = ""
    try:
        with open("/proc/meminfo") as fh:
            for line in fh:
                if line.startswith("MemTotal"):
                    kb = int(line.split()[1])
                    mem = f", {kb / 1024 / 1024:.0f} GB RAM"
                    break
    except OSError:
        pass
    return f"{model} x{os.cpu_count() or 1}{mem}"


def benchmark_generation(
    bundle: GanBundle, count: int, batch_size: int = 256, seed: int = 0
) -> tuple[float, str]:
    """(milliseconds per generated sample, hardware descriptor)."""
    distance = (bundle.scaling.dist_min + bundle.scaling.dist_max) / 2.0
    start = time.perf_counter()
    generate(bundle, distance, count, seed=seed, batch_size=batch_size)
    elapsed = time.perf_counter() - start
    return elapsed * 1000.0 / count, hardware_descriptor()


# ---------------------------------------------------------------------------
# report


SET_NAMES = ("train", "test", "gen")


@dataclass(frozen=True)
class EvalReport:
    """FID matrix, NN novelty, conditioning error and throughput in one place."""

    fid: list[list[float]]  # 3x3 over (train, test, gen)
    nn: dict[str, float]  # normalized, train == 1.0 by protocol
    nn_baseline: float
    distance_mae: float | None = None
    detection_failure_rate: float | None = None
    throughput_ms_per_sample: float | None = None
    hardware: str | None = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls(**json.loads(text))


def _split_fid(features: np.ndarray) -> float:
    """Self-FID of a set via its even/odd interleaved halves."""
    return compute_fid(features[0::2], features[1::2])


def build_report(
    regressor: RegressorBundle,
    train_frames: list[ChirpFrame],
    test_frames: list[ChirpFrame],
    gen_frames: list[ChirpFrame],
    gan_bundle: GanBundle | None = None,
    detector_params: DetectorParams | None = None,
    consistency_distances: list[float] | None = None,
    n_per_distance: int = 25,
    seed: int = 0,
    bench_count: int | None = None,
    bench_batch: int = 256,
    meta: dict | None = None,
) -> EvalReport:
    """Assemble the full evaluation report over (train, test, gen) sets.

    Diagonal FID entries use the even/odd split of one set (the only protocol
    under which a self-FID is nonzero); NN values are normalized by the
    training set's self-excluded baseline. Conditioning MAE and throughput are
    filled only when a GAN bundle is supplied.
    """
    sets = {"train": train_frames, "test": test_frames, "gen": gen_frames}
    feats = {name: extract_features(regressor, frames) for name, frames in sets.items()}

    fid = [[0.0] * 3 for _ in range(3)]
    for i, a in enumerate(SET_NAMES):
        for j, b in enumerate(SET_NAMES):
            if i == j:
                fid[i][j] = _split_fid(feats[a])
            elif i < j:
                fid[i][j] = compute_fid(feats[a], feats[b])
            else:
                fid[i][j] = fid[j][i]

    baseline = nn_baseline(train_frames)
    nn = {
        "train": 1.0,
        "test": nn_novelty(test_frames, train_frames)[0],
        "gen": nn_novelty(gen_frames, train_frames)[0],
    }

    distance_mae = None
    failure_rate = None
    throughput = None
    hardware = None
    if gan_bundle is not None:
        distance_mae, failure_rate = distance_consistency(
            gan_bundle,
            detector_params or DetectorParams(),
            consistency_distances or [5.0, 10.0, 15.0, 20.0],
            n_per_distance,
            seed,
        )
        if bench_count:
            throughput, hardware = benchmark_generation(gan_bundle, bench_count, bench_batch)

    return EvalReport(
        fid=fid,
        nn=nn,
        nn_baseline=baseline,
        distance_mae=distance_mae,
        detection_failure_rate=failure_rate,
        throughput_ms_per_sample=throughput,
        hardware=hardware,
        meta=meta or {},
    )
