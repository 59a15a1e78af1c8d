"""Estimation-quality metrics.

Array conventions: a single run is ``(K, D)`` for states and means and
``(K, D, D)`` for covariances; an ensemble adds a leading run axis ``M``.
One-dimensional inputs are treated as scalar-state sequences.
"""

from __future__ import annotations

import numpy as np

from ..classical import GaussianDensity
from ..errors import DegenerateEnsembleError, InvalidParameterError, SingularCovarianceError


def _as_states(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def _as_covs(P, K, D):
    P = np.asarray(P, dtype=float)
    return P.reshape(K, D, D)


def rmse(truth, estimates):
    """``sqrt(1/K sum_k ||x_k - m_k||^2)``."""
    x, m = _as_states(truth), _as_states(estimates)
    if x.shape != m.shape or x.shape[0] < 1:
        raise InvalidParameterError("truth and estimates must have the same non-empty shape")
    return float(np.sqrt(np.mean(np.sum((x - m) ** 2, axis=1))))


def _quad_forms(e, P, what):
    """``e_k^T P_k^-1 e_k`` and ``log det P_k`` for stacked `e` (.., D), `P` (.., D, D)."""
    try:
        L = np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise SingularCovarianceError(f"{what} is not positive definite") from None
    u = np.linalg.solve(L, e[..., None])[..., 0]
    logdet = 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1)
    return np.sum(u * u, axis=-1), logdet


def nll(truth, means, covs):
    """Time-averaged ``1/2 [log|2 pi P_k| + e_k^T P_k^-1 e_k]``."""
    x, m = _as_states(truth), _as_states(means)
    K, D = x.shape
    P = _as_covs(covs, K, D)
    maha, logdet = _quad_forms(x - m, P, "estimate covariance")
    return float(np.mean(0.5 * (D * np.log(2.0 * np.pi) + logdet + maha)))


def mse_matrices(errors):
    """Per-step sample mean-square-error matrices ``Sigma_k`` across runs.

    ``errors`` is ``(M, K, D)``; returns ``(K, D, D)``.  Errors are not
    centred: this is the MSE matrix, not the sample covariance.
    """
    e = np.asarray(errors, dtype=float)
    return np.einsum("mki,mkj->kij", e, e) / e.shape[0]


def inclination_terms(truth_runs, mean_runs, cov_runs):
    """``10 log10(e^T P^-1 e / e^T Sigma_k^-1 e)`` per run and step, ``(M, K)``."""
    x = np.asarray(truth_runs, dtype=float)
    m = np.asarray(mean_runs, dtype=float)
    if x.ndim == 2:
        x, m = x[..., None], m[..., None]
    M, K, D = x.shape
    if M < 2:
        raise DegenerateEnsembleError("inclination needs at least two runs")
    P = np.asarray(cov_runs, dtype=float).reshape(M, K, D, D)
    e = x - m
    Sigma = mse_matrices(e)
    if np.any(np.linalg.matrix_rank(Sigma) < D):
        raise DegenerateEnsembleError("sample MSE matrix is singular at some step")
    a, _ = _quad_forms(e, P, "filter covariance")
    b, _ = _quad_forms(e, np.broadcast_to(Sigma, P.shape), "sample MSE matrix")
    with np.errstate(divide="ignore", invalid="ignore"):
        return 10.0 * np.log10(a / b)


def inclination(truth_runs, mean_runs, cov_runs):
    """Inclination indicator averaged over steps and runs.

    Positive values mean the filter covariance is smaller than the actual
    error (optimistic); zero is perfectly credible.
    """
    return float(np.nanmean(inclination_terms(truth_runs, mean_runs, cov_runs)))


def inclination_per_run(truth_runs, mean_runs, cov_runs):
    return np.nanmean(inclination_terms(truth_runs, mean_runs, cov_runs), axis=1)


def inclination_per_component(truth_runs, mean_runs, cov_runs):
    """Per-step, per-component inclination curves ``(K, D)``.

    For a scalar component the error cancels and the term reduces to
    ``10 log10(Sigma_k[d, d] / P_k[d, d])`` averaged over runs.
    """
    e = np.asarray(truth_runs, dtype=float) - np.asarray(mean_runs, dtype=float)
    Sigma = np.einsum("mkd,mkd->kd", e, e) / e.shape[0]
    var = np.diagonal(np.asarray(cov_runs, dtype=float), axis1=-2, axis2=-1)
    if np.any(Sigma <= 0):
        raise DegenerateEnsembleError("zero mean-square error for some component")
    return np.mean(10.0 * np.log10(Sigma[None] / var), axis=0)


def skl(g1: GaussianDensity, g2: GaussianDensity):
    """Symmetrized KL divergence between two Gaussians of equal dimension."""
    if g1.dim != g2.dim:
        raise InvalidParameterError("densities must have the same dimension")
    d = g1.mean - g2.mean
    try:
        i1 = np.linalg.inv(np.linalg.cholesky(g1.cov))
        i2 = np.linalg.inv(np.linalg.cholesky(g2.cov))
    except np.linalg.LinAlgError:
        raise SingularCovarianceError("SKL needs positive definite covariances") from None
    inv1 = i1.T @ i1
    inv2 = i2.T @ i2
    val = d @ inv1 @ d + d @ inv2 @ d + np.sum(inv1 * g2.cov) + np.sum(inv2 * g1.cov) - 2 * g1.dim
    return float(max(0.25 * val, 0.0))


def bootstrap_ci(values, n_resamples=1000, seed=0):
    """Mean of `values` and a bootstrap band of two standard deviations.

    Returns
    -------
    mean : float
    band : float
        ``2 * std`` of the means of `n_resamples` resamples drawn with replacement.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise InvalidParameterError("bootstrap needs at least two values")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, v.size, size=(int(n_resamples), v.size))
    return float(v.mean()), float(2.0 * v[idx].mean(axis=1).std())
