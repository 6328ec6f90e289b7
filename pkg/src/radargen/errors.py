"""Exception types shared across the toolkit."""


class RadarGenError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RadarGenError):
    """Invalid radar or model configuration (e.g. Nyquist violation)."""


class ShapeError(RadarGenError):
    """Array shape does not match the governing configuration."""


class RangeError(RadarGenError):
    """A physical quantity is outside its allowed interval."""


class ParameterError(RadarGenError):
    """Algorithm parameters are inconsistent (e.g. window smaller than guard)."""


class ContractError(RadarGenError):
    """An API precondition was violated (e.g. unscaled frame where scaled required)."""


class DataError(RadarGenError):
    """Dataset is unusable: empty, degenerate or undersized."""


class FormatError(RadarGenError):
    """A file does not conform to the container format."""


class TrainingError(RadarGenError):
    """Training diverged (non-finite loss) and was aborted."""
