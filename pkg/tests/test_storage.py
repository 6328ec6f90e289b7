import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from radargen.config import ChirpFrame, ScalingParams, fit_scaling_params
from radargen.errors import ContractError, FormatError
from radargen.gan import GanBundle, TrainingMeta, generate, mirrored_specs
from radargen.storage import (
    load_checkpoint,
    read_dataset,
    save_checkpoint,
    write_dataset,
)


def f32_frames(dcfg, count=3, seed=0, scaled=False):
    rng = np.random.default_rng(seed)
    frames = []
    for k in range(count):
        samples = rng.normal(size=(dcfg.num_channels, dcfg.samples_per_chirp))
        samples[:, : dcfg.blanked_prefix] = 0.0
        if scaled:
            samples = np.clip(samples, -1.0, 1.0)
        frames.append(
            ChirpFrame(samples=samples.astype(np.float32), distance_label=2.0 + k,
                       scaled=scaled)
        )
    return frames


def tiny_bundle(dcfg, seed=0):
    import torch

    from radargen.gan import Critic, Generator, params_to_numpy

    torch.manual_seed(seed)
    gen_spec, critic_spec = mirrored_specs(dcfg, latent_dim=8, base_channels=16)
    scaling = ScalingParams(-1.5, 1.5, 2.0, 25.0, 13.5, 6.6)
    return GanBundle(
        generator_params=params_to_numpy(Generator(gen_spec)),
        critic_params=params_to_numpy(Critic(critic_spec)),
        generator_spec=gen_spec,
        critic_spec=critic_spec,
        scaling=scaling,
        radar_config=dcfg,
        training_meta=TrainingMeta(epochs=3, seed=seed,
                                   loss_history=np.arange(12, dtype=np.float32).reshape(3, 4)),
    )


class TestDatasetRoundTrip:
    def test_bit_identical(self, dcfg, tmp_path):
        frames = f32_frames(dcfg)
        path = tmp_path / "data.rdc"
        write_dataset(frames, path, radar_config=dcfg, creation_seed=11)
        loaded = read_dataset(path)
        assert loaded.radar_config == dcfg
        assert loaded.creation_seed == 11
        assert loaded.blanked
        for orig, back in zip(frames, loaded.frames):
            assert np.array_equal(orig.samples, back.samples)
            assert back.distance_label == orig.distance_label
            assert back.scaled == orig.scaled

    def test_scaled_flag_and_scaling_round_trip(self, dcfg, tmp_path):
        frames = f32_frames(dcfg, scaled=True)
        scaling = fit_scaling_params(f32_frames(dcfg))
        path = tmp_path / "scaled.rdc"
        write_dataset(frames, path, radar_config=dcfg, scaling=scaling)
        loaded = read_dataset(path)
        assert loaded.scaling == scaling
        assert all(f.scaled for f in loaded.frames)

    def test_file_size_formula(self, dcfg, tmp_path):
        frames = f32_frames(dcfg, count=10)
        path = tmp_path / "sized.rdc"
        write_dataset(frames, path, radar_config=dcfg)
        header_len = int.from_bytes(path.read_bytes()[4:8], "little")
        per_frame = 4 + dcfg.num_channels * dcfg.samples_per_chirp * 4
        assert path.stat().st_size == 4 + 4 + header_len + 10 * per_frame

    def test_byte_layout(self, dcfg, tmp_path):
        frames = f32_frames(dcfg, count=1)
        path = tmp_path / "layout.rdc"
        write_dataset(frames, path, radar_config=dcfg)
        data = path.read_bytes()
        assert data[:4] == b"RDC1"
        header_len = int.from_bytes(data[4:8], "little")
        offset = 8 + header_len
        label = np.frombuffer(data, dtype="<f4", count=1, offset=offset)[0]
        assert label == np.float32(frames[0].distance_label)
        first_row = np.frombuffer(data, dtype="<f4", count=4, offset=offset + 4)
        assert np.array_equal(first_row, frames[0].samples[0, :4])

    @given(
        samples=arrays(np.float32, (2, 8), elements=st.floats(-1e6, 1e6, width=32)),
        label=st.floats(0.0, 100.0, width=32),
    )
    @settings(max_examples=25, deadline=None)
    def test_any_f32_payload_round_trips(self, tmp_path_factory, samples, label):
        from radargen.config import RadarConfig

        cfg = RadarConfig(
            carrier_freq=77e9, bandwidth=300e6, chirp_duration=1e-6,
            samples_per_chirp=8, num_channels=2,
            antenna_spacing_wavelengths=0.5, blanked_prefix=0, max_range=1.0,
        )
        path = tmp_path_factory.mktemp("hyp") / "f.rdc"
        frame = ChirpFrame(samples=samples, distance_label=float(label))
        write_dataset([frame], path, radar_config=cfg)
        back = read_dataset(path).frames[0]
        assert np.array_equal(back.samples, samples)
        assert np.float32(back.distance_label) == np.float32(label)


class TestDatasetValidation:
    def test_truncated_payload_detected(self, dcfg, tmp_path):
        frames = f32_frames(dcfg)
        path = tmp_path / "trunc.rdc"
        write_dataset(frames, path, radar_config=dcfg)
        data = path.read_bytes()
        path.write_bytes(data[:-4])
        with pytest.raises(FormatError, match="payload size"):
            read_dataset(path)

    def test_bad_magic(self, dcfg, tmp_path):
        path = tmp_path / "bad.rdc"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(FormatError, match="magic"):
            read_dataset(path)

    def test_heterogeneous_frames_rejected(self, dcfg, tmp_path):
        frames = f32_frames(dcfg)
        frames[1] = ChirpFrame(samples=frames[1].samples, distance_label=3.0, scaled=True)
        with pytest.raises(ContractError):
            write_dataset(frames, tmp_path / "x.rdc", radar_config=dcfg)

    def test_empty_rejected(self, dcfg, tmp_path):
        with pytest.raises(ContractError):
            write_dataset([], tmp_path / "x.rdc", radar_config=dcfg)

    def test_version_mismatch(self, dcfg, tmp_path):
        frames = f32_frames(dcfg, count=1)
        path = tmp_path / "v.rdc"
        write_dataset(frames, path, radar_config=dcfg)
        data = bytearray(path.read_bytes())
        # bump the version integer inside the JSON header
        idx = data.find(b'"format_version": 1')
        data[idx : idx + len(b'"format_version": 1')] = b'"format_version": 9'
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="version"):
            read_dataset(path)


class TestCheckpointRoundTrip:
    def test_generate_bit_identical_after_reload(self, dcfg, tmp_path):
        bundle = tiny_bundle(dcfg)
        before = generate(bundle, 12.0, 4, seed=7)
        path = tmp_path / "gan.ckpt"
        save_checkpoint(bundle, path)
        reloaded = load_checkpoint(path)
        after = generate(reloaded, 12.0, 4, seed=7)
        for a, b in zip(before, after):
            assert np.array_equal(a.samples, b.samples)

    def test_metadata_round_trip(self, dcfg, tmp_path):
        bundle = tiny_bundle(dcfg)
        path = tmp_path / "gan.ckpt"
        save_checkpoint(bundle, path)
        reloaded = load_checkpoint(path)
        assert reloaded.generator_spec == bundle.generator_spec
        assert reloaded.critic_spec == bundle.critic_spec
        assert reloaded.scaling == bundle.scaling
        assert reloaded.radar_config == bundle.radar_config
        assert reloaded.training_meta.epochs == 3
        assert np.array_equal(reloaded.training_meta.loss_history,
                              bundle.training_meta.loss_history)

    def test_epoch_checkpoints_differ_only_where_expected(self, dcfg, tmp_path):
        from dataclasses import replace

        bundle_100 = tiny_bundle(dcfg)
        bundle_200 = replace(
            bundle_100,
            training_meta=TrainingMeta(epochs=200, seed=0,
                                       loss_history=bundle_100.training_meta.loss_history),
        )
        save_checkpoint(bundle_100, tmp_path / "e100.ckpt")
        save_checkpoint(bundle_200, tmp_path / "e200.ckpt")
        a = load_checkpoint(tmp_path / "e100.ckpt")
        b = load_checkpoint(tmp_path / "e200.ckpt")
        assert a.training_meta.epochs != b.training_meta.epochs
        assert a.generator_spec == b.generator_spec
        assert a.scaling == b.scaling
        assert a.radar_config == b.radar_config
        for name in a.generator_params:
            assert np.array_equal(a.generator_params[name], b.generator_params[name])

    def test_dataset_as_checkpoint_rejected(self, dcfg, tmp_path):
        frames = f32_frames(dcfg, count=1)
        path = tmp_path / "data.rdc"
        write_dataset(frames, path, radar_config=dcfg)
        with pytest.raises(FormatError, match="magic"):
            load_checkpoint(path)

    def test_checkpoint_as_dataset_rejected(self, dcfg, tmp_path):
        path = tmp_path / "gan.ckpt"
        save_checkpoint(tiny_bundle(dcfg), path)
        with pytest.raises(FormatError, match="magic"):
            read_dataset(path)

    def test_truncated_param_block_detected(self, dcfg, tmp_path):
        path = tmp_path / "gan.ckpt"
        save_checkpoint(tiny_bundle(dcfg), path)
        data = path.read_bytes()
        path.write_bytes(data[:-17])
        with pytest.raises(FormatError):
            load_checkpoint(path)
