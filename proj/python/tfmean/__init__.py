"""Transformed Frechet means in Hadamard spaces."""

from ._tfmean import (
    ConfigError,
    DomainError,
    InapplicableError,
    MissingMomentError,
    NumericError,
    ShapeError,
    Space,
    TfmError,
    Transform,
    estimate,
    median_tail_bound,
    objective,
    power_rate_constants,
    run_experiment,
    sample,
    tail_bound,
    threehalfs_bound,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "InapplicableError",
    "MissingMomentError",
    "NumericError",
    "ShapeError",
    "Space",
    "TfmError",
    "Transform",
    "estimate",
    "median_tail_bound",
    "objective",
    "power_rate_constants",
    "run_experiment",
    "sample",
    "tail_bound",
    "threehalfs_bound",
]
