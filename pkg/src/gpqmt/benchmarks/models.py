"""Benchmark nonlinearities, state-space models and truth simulators.

Model functions accept either a single state vector ``(D,)`` or a matrix of
column states ``(D, N)``, so the same code serves scalar evaluation and the
vectorized transforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..classical import GaussianDensity
from ..errors import InvalidParameterError
from ..filtering import StateSpaceModel


def run_rng(seed, run):
    """Generator for Monte Carlo run `run` under master `seed`.

    Seeds are split as ``SeedSequence([seed, run])``, so any subset of runs can
    be reproduced independently and in any order.
    """
    return np.random.default_rng([int(seed), int(run)])


def polar2cartesian(x):
    """``(r, theta) -> (r cos theta, r sin theta)``."""
    x = np.asarray(x, dtype=float)
    return np.stack([x[0] * np.cos(x[1]), x[0] * np.sin(x[1])])


# ---------------------------------------------------------------------------
# univariate non-stationary growth model


@dataclass(frozen=True)
class UngmConfig:
    steps: int = 500
    n_runs: int = 25
    process_noise_var: float = 10.0
    meas_noise_var: float = 1.0
    init_mean: float = 0.0
    init_var: float = 5.0
    seed: int = 0
    obs_lag: bool = False  # True: z_k = x_{k-1}**2 / 20 + r_k

    def __post_init__(self):
        if min(self.process_noise_var, self.meas_noise_var, self.init_var) <= 0:
            raise InvalidParameterError("UNGM variances must be positive")
        if self.steps < 1 or self.n_runs < 1:
            raise InvalidParameterError("steps and n_runs must be positive")


def ungm_dynamics(x, k):
    return 0.5 * x + 25.0 * x / (1.0 + x**2) + 8.0 * np.cos(1.2 * k)


def ungm_observation(x):
    return x**2 / 20.0


def ungm_model(config: UngmConfig):
    """Filter model for the UNGM; the filter always uses ``z_k = h(x_k)``."""
    return StateSpaceModel(
        ungm_dynamics,
        ungm_observation,
        [[config.process_noise_var]],
        [[config.meas_noise_var]],
        GaussianDensity(config.init_mean, config.init_var),
        vectorized=True,
    )


def ungm_trajectory(x0, process_noise, meas_noise, obs_lag=False):
    """Deterministic UNGM trajectory for given initial state and noise draws.

    Returns
    -------
    states, measurements : (K,) ndarray
        ``x_1..x_K`` and ``z_1..z_K``.
    """
    q = np.asarray(process_noise, dtype=float)
    r = np.asarray(meas_noise, dtype=float)
    K = q.size
    xs = np.empty(K)
    zs = np.empty(K)
    x = float(x0)
    for k in range(1, K + 1):
        x_prev = x
        x = ungm_dynamics(x, k) + q[k - 1]
        xs[k - 1] = x
        zs[k - 1] = ungm_observation(x_prev if obs_lag else x) + r[k - 1]
    return xs, zs


@dataclass(frozen=True, eq=False)
class SimulatedRuns:
    """Truth and measurements for a batch of runs.

    ``initial`` is ``(M, D)``, ``states`` ``(M, K, D)``, ``measurements`` ``(M, K, E)``.
    """

    initial: np.ndarray
    states: np.ndarray
    measurements: np.ndarray


def ungm_simulate_run(config: UngmConfig, run):
    rng = run_rng(config.seed, run)
    x0 = config.init_mean + np.sqrt(config.init_var) * rng.standard_normal()
    q = np.sqrt(config.process_noise_var) * rng.standard_normal(config.steps)
    r = np.sqrt(config.meas_noise_var) * rng.standard_normal(config.steps)
    xs, zs = ungm_trajectory(x0, q, r, config.obs_lag)
    return x0, xs, zs


def ungm_simulate(config: UngmConfig):
    runs = [ungm_simulate_run(config, m) for m in range(config.n_runs)]
    return SimulatedRuns(
        np.array([[r[0]] for r in runs]),
        np.array([r[1] for r in runs])[..., None],
        np.array([r[2] for r in runs])[..., None],
    )


# ---------------------------------------------------------------------------
# ballistic reentry tracking, units km, km/s, s


@dataclass(frozen=True)
class ReentryConfig:
    gamma: float = 0.164
    radar: tuple = (30.0, 30.0)
    meas_noise_var: float = 9.2903e-4
    dt: float = 0.1
    duration: float = 30.0
    truth_init_mean: tuple = (90.0, 6.0, 1.5)
    truth_init_var: tuple = (0.0929, 1.4865, 1e-4)
    filter_init_mean: tuple = (90.0, 6.0, 1.7)
    filter_init_var: tuple = (0.0929, 1.4865, 10.0)
    process_noise_var: tuple = (1e-10, 1e-10, 1e-8)
    n_runs: int = 20
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError("dt must be positive")
        steps = self.duration / self.dt
        if steps < 1 or abs(steps - round(steps)) > 1e-9 * max(steps, 1.0):
            raise InvalidParameterError("duration must be a positive multiple of dt")
        if self.n_runs < 1:
            raise InvalidParameterError("n_runs must be positive")

    @property
    def steps(self):
        return int(round(self.duration / self.dt))


def reentry_drift(x, gamma=0.164):
    """Continuous-time drift ``(-v, -v**2 theta exp(-gamma p), 0)``."""
    p, v, th = x[0], x[1], x[2]
    return np.stack([-v, -(v**2) * th * np.exp(-gamma * p), np.zeros_like(th)])


def rk4_step(x, dt, gamma=0.164):
    k1 = reentry_drift(x, gamma)
    k2 = reentry_drift(x + 0.5 * dt * k1, gamma)
    k3 = reentry_drift(x + 0.5 * dt * k2, gamma)
    k4 = reentry_drift(x + dt * k3, gamma)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def reentry_discrete_dynamics(x, dt=0.1, noise=None, gamma=0.164):
    """One Euler step of the reentry dynamics plus optional additive noise."""
    x = np.asarray(x, dtype=float)
    p, v, th = x[0], x[1], x[2]
    out = np.stack([p - dt * v, v - dt * v**2 * th * np.exp(-gamma * p), th])
    if noise is not None:
        out = out + np.asarray(noise, dtype=float).reshape((3,) + (1,) * (out.ndim - 1))
    return out


def reentry_range(x, radar=(30.0, 30.0)):
    sx, sy = radar
    return np.sqrt(sx**2 + (sy - x[0]) ** 2)


def reentry_model(config: ReentryConfig):
    dt, gamma, radar = config.dt, config.gamma, config.radar
    return StateSpaceModel(
        lambda x, k: reentry_discrete_dynamics(x, dt, gamma=gamma),
        lambda x: reentry_range(x, radar),
        np.diag(config.process_noise_var),
        [[config.meas_noise_var]],
        GaussianDensity(config.filter_init_mean, np.diag(config.filter_init_var)),
        vectorized=True,
    )


def reentry_simulate_run(config: ReentryConfig, run):
    """Truth by RK4 on the noise-free drift from a random initial state."""
    rng = run_rng(config.seed, run)
    x = np.asarray(config.truth_init_mean) + np.sqrt(config.truth_init_var) * rng.standard_normal(3)
    x0 = x.copy()
    K = config.steps
    xs = np.empty((K, 3))
    for k in range(K):
        x = rk4_step(x, config.dt, config.gamma)
        xs[k] = x
    zs = reentry_range(xs.T, config.radar) + np.sqrt(config.meas_noise_var) * rng.standard_normal(K)
    return x0, xs, zs


def reentry_simulate_truth(config: ReentryConfig):
    runs = [reentry_simulate_run(config, m) for m in range(config.n_runs)]
    return SimulatedRuns(
        np.array([r[0] for r in runs]),
        np.array([r[1] for r in runs]),
        np.array([r[2] for r in runs])[..., None],
    )
