"""Gaussian densities, vector functions and the classical weighted-sum transform."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EvaluationError, InvalidParameterError, SingularCovarianceError
from .linalg import jitter_cholesky, min_eig_ratio, symmetrize
from .sigma_points import UnitPointSet

#: Relative jitter (times trace(P)/D) used for the single Cholesky retry.
COV_JITTER = 1e-12


@dataclass(frozen=True, eq=False)
class GaussianDensity:
    """Mean and covariance of a multivariate Gaussian.

    Scalars are promoted to 1-D, so ``GaussianDensity(1.0, 4.0)`` is the
    univariate ``N(1, 4)``.  Construction checks symmetry (1e-10 relative)
    and that no eigenvalue is below ``-1e-9`` times the largest.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        P = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if m.ndim != 1 or P.shape != (m.size, m.size):
            raise InvalidParameterError(f"mean shape {m.shape} does not match cov shape {P.shape}")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(P))):
            raise InvalidParameterError("mean and covariance must be finite")
        scale = np.max(np.abs(P))
        if scale > 0 and np.max(np.abs(P - P.T)) > 1e-10 * scale:
            raise InvalidParameterError("covariance is not symmetric")
        if min_eig_ratio(P) < -1e-9:
            raise SingularCovarianceError("covariance has a significantly negative eigenvalue")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", P)

    @property
    def dim(self):
        return self.mean.size

    def cholesky(self):
        """Lower factor ``L`` with ``P = L L^T`` (jittered once if needed)."""
        P = self.cov
        jitter = COV_JITTER * max(np.trace(P), 0.0) / self.dim
        L, _ = jitter_cholesky(P, jitter, SingularCovarianceError, "input covariance")
        return L


@dataclass(frozen=True)
class VectorFunction:
    """A map ``R^in_dim -> R^out_dim``.

    With ``vectorized=False`` the callable takes a single ``(in_dim,)`` vector.
    With ``vectorized=True`` it takes an ``(in_dim, N)`` matrix of column
    points and returns ``(out_dim, N)``.
    """

    fn: Callable
    in_dim: int
    out_dim: int
    vectorized: bool = False

    def __call__(self, x):
        return self.fn(x)

    def evaluate(self, X):
        X = np.asarray(X, dtype=float)
        if self.vectorized:
            Y = np.asarray(self.fn(X), dtype=float).reshape(self.out_dim, X.shape[1])
        else:
            Y = np.empty((self.out_dim, X.shape[1]))
            for i in range(X.shape[1]):
                Y[:, i] = self.fn(X[:, i])
        return Y


def evaluate_points(g, X):
    """Evaluate `g` on every column of `X`, returning an ``(E, N)`` array.

    `g` is a :class:`VectorFunction` or a plain callable on single vectors.
    Raises :class:`EvaluationError` naming the first point that produced a
    non-finite value.
    """
    if isinstance(g, VectorFunction):
        Y = g.evaluate(X)
    else:
        Y = np.column_stack([np.atleast_1d(np.asarray(g(X[:, i]), dtype=float)) for i in range(X.shape[1])])
    bad = ~np.all(np.isfinite(Y), axis=0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError(f"non-finite function value at point {i}: x = {X[:, i]!r}", i, X[:, i].copy())
    return Y


@dataclass(frozen=True, eq=False)
class MomentTransformResult:
    """Output moments of a transform.

    Attributes
    ----------
    out_mean : (E,) ndarray
    out_cov : (E, E) ndarray
    cross_cov : (D, E) ndarray
        Input-output cross-covariance ``Cov[x, g(x)]``.
    extra : dict
        Diagnostics, e.g. ``points``, ``values`` and for GPQ ``sigma_bar_sq``.
    """

    out_mean: np.ndarray
    out_cov: np.ndarray
    cross_cov: np.ndarray
    extra: dict = field(default_factory=dict)

    def output_density(self):
        return GaussianDensity(self.out_mean, self.out_cov)

    def joint_cov(self, in_cov):
        C = self.cross_cov
        return np.block([[in_cov, C], [C.T, self.out_cov]])


def affine_map_points(density, unit_points):
    """Map unit sigma-points to ``m + L xi`` with ``P = L L^T`` (lower Cholesky)."""
    xi = np.atleast_2d(np.asarray(unit_points, dtype=float))
    if xi.shape[0] != density.dim:
        raise InvalidParameterError(f"points have dimension {xi.shape[0]}, density {density.dim}")
    return density.mean[:, None] + density.cholesky() @ xi


def classical_transform(g, density, rule: UnitPointSet):
    """Propagate `density` through `g` with a weighted-sum quadrature rule.

    Mean uses ``rule.mean_weights``; output covariance and cross-covariance
    use ``rule.cov_weights``.
    """
    X = affine_map_points(density, rule.points)
    Y = evaluate_points(g, X)
    mu = Y @ rule.mean_weights
    dY = Y - mu[:, None]
    dX = X - density.mean[:, None]
    wc = rule.cov_weights
    S = symmetrize((dY * wc) @ dY.T)
    C = (dX * wc) @ dY.T
    return MomentTransformResult(mu, S, C, {"points": X, "values": Y})


def mc_transform(g, density, n_samples, seed=None):
    """Monte Carlo moments from `n_samples` draws of ``N(m, P)``.

    Uses unbiased (``n - 1``) sample covariances.  Vectorized functions are
    evaluated in a single call, which matters for large sample counts.
    """
    if n_samples < 2:
        raise InvalidParameterError("n_samples must be at least 2")
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((density.dim, int(n_samples)))
    X = density.mean[:, None] + density.cholesky() @ xi
    Y = evaluate_points(g, X)
    mu = Y.mean(axis=1)
    dY = Y - mu[:, None]
    dX = X - X.mean(axis=1, keepdims=True)
    n1 = n_samples - 1
    S = symmetrize(dY @ dY.T / n1)
    C = dX @ dY.T / n1
    return MomentTransformResult(mu, S, C, {"n_samples": int(n_samples)})


class QuadratureTransform:
    """Callable ``(g, density) -> MomentTransformResult`` bound to a fixed rule."""

    def __init__(self, rule: UnitPointSet):
        self.rule = rule

    def __call__(self, g, density):
        return classical_transform(g, density, self.rule)

    def __repr__(self):
        return f"QuadratureTransform({self.rule.rule_name}, N={self.rule.n_points})"


class MonteCarloTransform:
    """Sampling transform; each call draws fresh samples from its own generator."""

    def __init__(self, n_samples, seed=None):
        self.n_samples = n_samples
        self._rng = np.random.default_rng(seed)

    def __call__(self, g, density):
        return mc_transform(g, density, self.n_samples, self._rng)
