import numpy as np
import pytest

from radargen.config import TargetState, blank_prefix, default_config, desk_config
from radargen.oracle import SceneSpec, synthesize_frame


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def dcfg():
    return desk_config()


def make_target_frame(config, target_range=10.0, azimuth=0.0, amplitude=1.0,
                      noise_std=0.0, seed=0, blanked=True):
    scene = SceneSpec(
        targets=(TargetState(range=target_range, azimuth=azimuth, amplitude=amplitude),),
        noise_std=noise_std,
        rng_seed=seed,
    )
    frame = synthesize_frame(scene, config)
    return blank_prefix(frame, config) if blanked else frame


def make_noise_frame(config, noise_std=0.05, seed=0):
    frame = synthesize_frame(SceneSpec(targets=(), noise_std=noise_std, rng_seed=seed), config)
    return blank_prefix(frame, config)
