"""Random convolutional kernel features for time-series classification, with
numerical checks of their sensing, sparsity and robustness properties."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DatasetParseError,
    DimensionError,
    RocketLabError,
    SpanError,
    UndefinedCoherenceError,
    ValidationError,
)
from .kernels import (  # noqa: E402
    FeatureMatrix,
    KernelSpec,
    TransformConfig,
    convolve,
    generate_kernels,
    ppv,
    transform,
)
from .series import Dataset, LabeledSeries, TimeSeries, load_dataset, standardize  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "DatasetParseError",
    "DimensionError",
    "RocketLabError",
    "SpanError",
    "UndefinedCoherenceError",
    "ValidationError",
    "FeatureMatrix",
    "KernelSpec",
    "TransformConfig",
    "convolve",
    "generate_kernels",
    "ppv",
    "transform",
    "Dataset",
    "LabeledSeries",
    "TimeSeries",
    "load_dataset",
    "standardize",
]
