"""Benchmarks: coordinate conversion, UNGM and reentry tracking."""

from .experiments import (
    REENTRY_FILTERS,
    UNGM_FILTERS,
    BenchmarkResult,
    FilterSpec,
    MetricsSummary,
    PolarConfig,
    PolarResult,
    polar_experiment,
    reentry_benchmark,
    ungm_benchmark,
)
from .metrics import bootstrap_ci, inclination, nll, rmse, skl
from .models import (
    ReentryConfig,
    UngmConfig,
    polar2cartesian,
    reentry_discrete_dynamics,
    reentry_simulate_truth,
    ungm_simulate,
)

__all__ = [
    "REENTRY_FILTERS",
    "UNGM_FILTERS",
    "BenchmarkResult",
    "FilterSpec",
    "MetricsSummary",
    "PolarConfig",
    "PolarResult",
    "polar_experiment",
    "reentry_benchmark",
    "ungm_benchmark",
    "bootstrap_ci",
    "inclination",
    "nll",
    "rmse",
    "skl",
    "ReentryConfig",
    "UngmConfig",
    "polar2cartesian",
    "reentry_discrete_dynamics",
    "reentry_simulate_truth",
    "ungm_simulate",
]
