"""Bit-exact persistence: chirp dataset container and model checkpoints.

Both file kinds share a layout: a 4-byte magic, a little-endian u32 header
length, a UTF-8 JSON header, then a binary payload. Datasets ("RDC1") carry
frame records (f32 label + channel-major f32 samples); checkpoints ("RCK1")
carry named parameter blocks (name, shape, f32 data) so any language can
parse them. All multi-byte values are little-endian; writes go to a temp file
followed by an atomic rename.
"""

from __future__ import annotations

import contextlib
import json
import os
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .config import ChirpFrame, RadarConfig, ScalingParams
from .errors import ContractError, FormatError
from .gan import CriticSpec, GanBundle, GeneratorSpec, TrainingMeta

DATASET_MAGIC = b"RDC1"
CHECKPOINT_MAGIC = b"RCK1"
FORMAT_VERSION = 1

_LOSS_BLOCK = "meta/loss_history"


@contextlib.contextmanager
def atomic_writer(path: str | Path):
    """Open a temp file next to ``path`` and atomically rename on success."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _write_header(fh, magic: bytes, header: dict) -> None:
    payload = json.dumps(header, sort_keys=True).encode("utf-8")
    fh.write(magic)
    fh.write(struct.pack("<I", len(payload)))
    fh.write(payload)


def _read_header(data: bytes, magic: bytes, path: Path) -> tuple[dict, int]:
    if len(data) < 8:
        raise FormatError(f"{path}: truncated file ({len(data)} bytes, need >= 8)")
    if data[:4] != magic:
        raise FormatError(
            f"{path}: bad magic {data[:4]!r} at offset 0, expected {magic!r}"
        )
    (header_len,) = struct.unpack_from("<I", data, 4)
    if 8 + header_len > len(data):
        raise FormatError(
            f"{path}: header length {header_len} at offset 4 exceeds file size {len(data)}"
        )
    try:
        header = json.loads(data[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: invalid JSON header at offset 8: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported format version {header.get('format_version')!r}, "
            f"this reader supports {FORMAT_VERSION}"
        )
    return header, 8 + header_len


# ---------------------------------------------------------------------------
# dataset container


def write_dataset(
    frames: list[ChirpFrame],
    path: str | Path,
    radar_config: RadarConfig,
    scaling: ScalingParams | None = None,
    creation_seed: int | None = None,
) -> None:
    """Write frames as an RDC1 dataset file.

    Frames must be homogeneous in shape and scaled-flag; per-frame payload is
    a little-endian f32 distance label followed by the channel-major f32
    sample matrix.
    """
    if not frames:
        raise ContractError("refusing to write an empty dataset")
    shape = frames[0].samples.shape
    scaled = frames[0].scaled
    for f in frames:
        if f.samples.shape != shape or f.scaled != scaled:
            raise ContractError("frames must be homogeneous in shape and scaled-flag")
    prefix = radar_config.blanked_prefix
    blanked = all(not f.samples[:, :prefix].any() for f in frames)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "dataset",
        "frame_count": len(frames),
        "channels": int(shape[0]),
        "samples_per_chirp": int(shape[1]),
        "radar_config": asdict(radar_config),
        "scaling_params": asdict(scaling) if scaling is not None else None,
        "blanked": blanked,
        "scaled": scaled,
        "creation_seed": creation_seed,
    }
    with atomic_writer(path) as fh:
        _write_header(fh, DATASET_MAGIC, header)
        for f in frames:
            fh.write(struct.pack("<f", f.distance_label))
            fh.write(f.samples.astype("<f4", copy=False).tobytes(order="C"))


@dataclass(frozen=True)
class DatasetFile:
    """A parsed dataset: frames plus the header metadata they were written with."""

    frames: list[ChirpFrame]
    radar_config: RadarConfig
    scaling: ScalingParams | None
    blanked: bool
    creation_seed: int | None


def read_dataset(path: str | Path) -> DatasetFile:
    """Read an RDC1 dataset, validating header counts against the file size."""
    path = Path(path)
    data = path.read_bytes()
    header, offset = _read_header(data, DATASET_MAGIC, path)
    if header.get("kind") != "dataset":
        raise FormatError(f"{path}: kind {header.get('kind')!r} is not a dataset")
    count = header["frame_count"]
    channels = header["channels"]
    samples = header["samples_per_chirp"]
    record = 4 + channels * samples * 4
    expected = offset + count * record
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload size mismatch: expected {count} records of {record} bytes "
            f"ending at offset {expected}, file has {len(data)} bytes"
        )
    scaled = header["scaled"]
    frames = []
    for k in range(count):
        base = offset + k * record
        (label,) = struct.unpack_from("<f", data, base)
        matrix = np.frombuffer(
            data, dtype="<f4", count=channels * samples, offset=base + 4
        ).reshape(channels, samples).copy()
        frames.append(ChirpFrame(samples=matrix, distance_label=label, scaled=scaled))
    scaling = header["scaling_params"]
    return DatasetFile(
        frames=frames,
        radar_config=RadarConfig(**header["radar_config"]),
        scaling=ScalingParams(**scaling) if scaling is not None else None,
        blanked=header["blanked"],
        creation_seed=header["creation_seed"],
    )


# ---------------------------------------------------------------------------
# parameter blocks (shared by GAN and regressor checkpoints)


def write_param_blocks(fh, params: dict[str, np.ndarray]) -> None:
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        encoded = name.encode("utf-8")
        fh.write(struct.pack("<I", len(encoded)))
        fh.write(encoded)
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes(order="C"))


def read_param_blocks(data: bytes, offset: int, count: int, path: Path) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}
    pos = offset
    for _ in range(count):
        if pos + 4 > len(data):
            raise FormatError(f"{path}: truncated param block header at offset {pos}")
        (name_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + name_len + 4 > len(data):
            raise FormatError(f"{path}: truncated param block name at offset {pos}")
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + 4 * ndim > len(data):
            raise FormatError(f"{path}: truncated param block shape at offset {pos}")
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        if pos + 4 * size > len(data):
            raise FormatError(
                f"{path}: param block {name!r} data overruns file at offset {pos}"
            )
        params[name] = (
            np.frombuffer(data, dtype="<f4", count=size, offset=pos).reshape(shape).copy()
        )
        pos += 4 * size
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes after offset {pos}")
    return params


# ---------------------------------------------------------------------------
# GAN checkpoints


def save_checkpoint(bundle: GanBundle, path: str | Path) -> None:
    """Write a self-describing GAN checkpoint (specs, scaling, config, params)."""
    params = {f"generator/{k}": v for k, v in bundle.generator_params.items()}
    params.update({f"critic/{k}": v for k, v in bundle.critic_params.items()})
    params[_LOSS_BLOCK] = bundle.training_meta.loss_history.astype(np.float32)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "gan",
        "radar_config": asdict(bundle.radar_config),
        "scaling": asdict(bundle.scaling),
        "generator_spec": asdict(bundle.generator_spec),
        "critic_spec": asdict(bundle.critic_spec),
        "training_meta": {
            "epochs": bundle.training_meta.epochs,
            "seed": bundle.training_meta.seed,
        },
        "param_count": len(params),
    }
    with atomic_writer(path) as fh:
        _write_header(fh, CHECKPOINT_MAGIC, header)
        write_param_blocks(fh, params)


def load_checkpoint(path: str | Path) -> GanBundle:
    """Read a GAN checkpoint written by save_checkpoint."""
    path = Path(path)
    data = path.read_bytes()
    header, offset = _read_header(data, CHECKPOINT_MAGIC, path)
    if header.get("kind") != "gan":
        raise FormatError(f"{path}: kind {header.get('kind')!r} is not a GAN checkpoint")
    params = read_param_blocks(data, offset, header["param_count"], path)
    loss_history = params.pop(_LOSS_BLOCK, np.zeros((0, 4), np.float32)).reshape(-1, 4)
    generator = {
        k.removeprefix("generator/"): v for k, v in params.items() if k.startswith("generator/")
    }
    critic = {k.removeprefix("critic/"): v for k, v in params.items() if k.startswith("critic/")}
    meta = header["training_meta"]
    return GanBundle(
        generator_params=generator,
        critic_params=critic,
        generator_spec=GeneratorSpec(**header["generator_spec"]),
        critic_spec=CriticSpec(**header["critic_spec"]),
        scaling=ScalingParams(**header["scaling"]),
        radar_config=RadarConfig(**header["radar_config"]),
        training_meta=TrainingMeta(
            epochs=meta["epochs"], seed=meta["seed"], loss_history=loss_history
        ),
    )


def save_model_file(kind: str, header_extra: dict, params: dict[str, np.ndarray], path) -> None:
    """Generic RCK1 writer for other model kinds (e.g. the regressor)."""
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "param_count": len(params),
        **header_extra,
    }
    with atomic_writer(path) as fh:
        _write_header(fh, CHECKPOINT_MAGIC, header)
        write_param_blocks(fh, params)


def load_model_file(kind: str, path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Generic RCK1 reader; returns (header, params) after validating ``kind``."""
    path = Path(path)
    data = path.read_bytes()
    header, offset = _read_header(data, CHECKPOINT_MAGIC, path)
    if header.get("kind") != kind:
        raise FormatError(f"{path}: kind {header.get('kind')!r}, expected {kind!r}")
    params = read_param_blocks(data, offset, header["param_count"], path)
    return header, params
