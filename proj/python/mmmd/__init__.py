"""Multiple-kernel MMD two-sample tests."""

from ._mmmd import (
    ConfigError,
    InputError,
    IoError,
    NumericalError,
    median_heuristic,
    methods,
    mmd2_unbiased,
    null_covariance,
    run_experiment,
    scenario_names,
    simulate,
    two_sample_test,
)

__all__ = [
    "ConfigError",
    "InputError",
    "IoError",
    "NumericalError",
    "median_heuristic",
    "methods",
    "mmd2_unbiased",
    "null_covariance",
    "run_experiment",
    "scenario_names",
    "simulate",
    "two_sample_test",
]
