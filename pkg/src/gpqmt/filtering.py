"""Local Gaussian (sigma-point) filtering with pluggable moment transforms.

A *transform* is any callable ``transform(g, density) -> MomentTransformResult``;
:class:`~gpqmt.classical.QuadratureTransform` and :class:`~gpqmt.gpq.GPQTransform`
both qualify.  Dynamics and observation get separate transforms so they can
use different kernel parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as la

from .classical import GaussianDensity, VectorFunction
from .errors import FilterStepError, GpqError, InvalidParameterError, SingularInnovationError
from .linalg import is_psd, jitter_cholesky, symmetrize


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Additive-noise state-space model.

    ``x_k = f(x_{k-1}, k) + q``, ``z_k = h(x_k) + r``.

    With ``vectorized=True`` both `dynamics` and `observation` accept an
    ``(D, N)`` matrix of column states (and return column outputs).
    """

    dynamics: Callable
    observation: Callable
    process_noise_cov: np.ndarray
    measurement_noise_cov: np.ndarray
    initial: GaussianDensity
    vectorized: bool = False

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.process_noise_cov, dtype=float))
        R = np.atleast_2d(np.asarray(self.measurement_noise_cov, dtype=float))
        for name, M in (("process", Q), ("measurement", R)):
            if M.shape[0] != M.shape[1] or not np.allclose(M, M.T) or not is_psd(M):
                raise InvalidParameterError(f"{name} noise covariance must be symmetric PSD")
        if Q.shape[0] != self.initial.dim:
            raise InvalidParameterError("process noise dimension does not match the state")
        object.__setattr__(self, "process_noise_cov", Q)
        object.__setattr__(self, "measurement_noise_cov", R)

    @property
    def state_dim(self):
        return self.initial.dim

    @property
    def meas_dim(self):
        return self.measurement_noise_cov.shape[0]

    def dynamics_at(self, k):
        """The dynamics with the time index bound, as a :class:`VectorFunction`."""
        f = self.dynamics
        D = self.state_dim
        return VectorFunction(lambda x: f(x, k), D, D, self.vectorized)

    def observation_fn(self):
        return VectorFunction(self.observation, self.state_dim, self.meas_dim, self.vectorized)


@dataclass(frozen=True, eq=False)
class FilterRun:
    """Per-step moments of one filter pass; arrays are indexed by step ``k - 1``."""

    predicted_means: np.ndarray  # (K, D)
    predicted_covs: np.ndarray  # (K, D, D)
    filtered_means: np.ndarray  # (K, D)
    filtered_covs: np.ndarray  # (K, D, D)
    innovation_means: np.ndarray  # (K, E)
    innovation_covs: np.ndarray  # (K, E, E)

    def __len__(self):
        return self.filtered_means.shape[0]


def predict(transform, posterior, dynamics, process_noise_cov, k=None):
    """Time update: push `posterior` through the dynamics and add process noise.

    `dynamics` is either a one-argument function of the state or, when `k`
    is given, a function ``f(x, k)``.
    """
    g = dynamics if k is None else (lambda x: dynamics(x, k))
    res = transform(g, posterior)
    return GaussianDensity(res.out_mean, symmetrize(res.out_cov + process_noise_cov))


def _innovation_jitter(S):
    return 1e-12 * max(np.trace(S), 0.0) / S.shape[0]


def update(transform, prior, observation, measurement_noise_cov, z, return_innovation=False):
    """Measurement update of `prior` with observation `z`.

    ``S = S0 + R``, gain ``G = C S^-1``, ``m+ = m + G (z - zhat)`` and
    ``P+ = P - G S G^T`` (symmetrized).
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not np.all(np.isfinite(z)):
        raise InvalidParameterError("measurement must be finite")
    res = transform(observation, prior)
    S = symmetrize(res.out_cov + measurement_noise_cov)
    L, _ = jitter_cholesky(S, _innovation_jitter(S), SingularInnovationError, "innovation covariance")
    G = la.cho_solve((L, True), res.cross_cov.T, check_finite=False).T
    m = prior.mean + G @ (z - res.out_mean)
    P = symmetrize(prior.cov - G @ S @ G.T)
    post = GaussianDensity(m, P)
    if return_innovation:
        return post, GaussianDensity(res.out_mean, S)
    return post


def run_filter(model: StateSpaceModel, transform_dyn, transform_obs, measurements):
    """Alternate :func:`predict` and :func:`update` over `measurements`.

    The first measurement is ``z_1``; the dynamics at step ``k`` receive ``k``.
    Any failure is re-raised as :class:`FilterStepError` carrying the step.
    """
    Z = np.asarray(measurements, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None] if model.meas_dim == 1 else Z[None, :]
    K = Z.shape[0]
    if K == 0:
        raise InvalidParameterError("no measurements to filter")
    D, E = model.state_dim, model.meas_dim
    out = {
        "pm": np.empty((K, D)), "pc": np.empty((K, D, D)),
        "fm": np.empty((K, D)), "fc": np.empty((K, D, D)),
        "zm": np.empty((K, E)), "zc": np.empty((K, E, E)),
    }
    h = model.observation_fn()
    post = model.initial
    for k in range(1, K + 1):
        stage = "predict"
        try:
            prior = predict(transform_dyn, post, model.dynamics_at(k), model.process_noise_cov)
            stage = "update"
            post, innov = update(transform_obs, prior, h, model.measurement_noise_cov, Z[k - 1], True)
        except (GpqError, np.linalg.LinAlgError) as exc:
            raise FilterStepError(k, stage, exc) from exc
        i = k - 1
        out["pm"][i], out["pc"][i] = prior.mean, prior.cov
        out["fm"][i], out["fc"][i] = post.mean, post.cov
        out["zm"][i], out["zc"][i] = innov.mean, innov.cov
    return FilterRun(out["pm"], out["pc"], out["fm"], out["fc"], out["zm"], out["zc"])
