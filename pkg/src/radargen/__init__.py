"""Synthetic raw FMCW radar data: oracle simulation, conditional GAN, DSP,
detection and evaluation."""

from .config import (
    ChirpFrame,
    RadarConfig,
    ScalingParams,
    TargetState,
    blank_prefix,
    default_config,
    desk_config,
    fit_scaling_params,
    scale_distance_for_critic,
    scale_distance_for_generator,
    scale_frame,
    unscale_frame,
)
from .detect import (
    Detection,
    DetectorParams,
    adaptive_threshold,
    detect_primary_range,
    extract_regions,
)
from .dsp import RangeAzimuthMap, RangeSpectrum, compute_ra_map, range_fft
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    FormatError,
    ParameterError,
    RadarGenError,
    RangeError,
    ShapeError,
    TrainingError,
)
from .evaluate import (
    EvalReport,
    RegressorBundle,
    benchmark_generation,
    build_report,
    compute_fid,
    distance_consistency,
    extract_features,
    nn_novelty,
    train_regressor,
)
from .gan import CriticSpec, GanBundle, GeneratorSpec, criticize, generate, mirrored_specs
from .oracle import SceneSpec, generate_trajectory_dataset, synthesize_frame
from .storage import load_checkpoint, read_dataset, save_checkpoint, write_dataset
from .training import TrainConfig, critic_loss, generator_loss, gradient_penalty, train

__version__ = "0.1.0"
