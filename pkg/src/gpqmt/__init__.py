"""Gaussian process quadrature moment transforms and sigma-point filters."""

from .classical import (
    GaussianDensity,
    MomentTransformResult,
    QuadratureTransform,
    VectorFunction,
    affine_map_points,
    classical_transform,
    mc_transform,
)
from .errors import GpqError, InvalidParameterError, NumericalError
from .filtering import FilterRun, StateSpaceModel, predict, run_filter, update
from .gpq import (
    GPQTransform,
    GpqWeights,
    RbfKernelParams,
    gp_posterior,
    gpq_transform,
    gpq_weights,
    integral_variance,
)
from .sigma_points import UnitPointSet, gh_points, hermite_rule_1d, scaled_ut_points, sr_points, ut_points

__all__ = [
    "GaussianDensity",
    "MomentTransformResult",
    "QuadratureTransform",
    "VectorFunction",
    "affine_map_points",
    "classical_transform",
    "mc_transform",
    "GpqError",
    "InvalidParameterError",
    "NumericalError",
    "FilterRun",
    "StateSpaceModel",
    "predict",
    "run_filter",
    "update",
    "GPQTransform",
    "GpqWeights",
    "RbfKernelParams",
    "gp_posterior",
    "gpq_transform",
    "gpq_weights",
    "integral_variance",
    "UnitPointSet",
    "gh_points",
    "hermite_rule_1d",
    "scaled_ut_points",
    "sr_points",
    "ut_points",
]

__version__ = "0.1.0"
