"""Gaussian process quadrature moment transform with an RBF (ARD) kernel.

Everything here works in unit sigma-point space, i.e. after the change of
variables ``x = m + L xi`` that turns the input density into ``N(0, I)``.
The kernel is

    k(xi, xi') = alpha**2 exp(-1/2 (xi - xi')^T Lam^{-1} (xi - xi')),
    Lam = diag(lengthscales**2),

and its Gaussian expectations are available in closed form, so the GPQ
weights depend only on the unit points and the kernel parameters.  They are
computed once and reused for every input density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .classical import GaussianDensity, MomentTransformResult, affine_map_points, evaluate_points
from .errors import IllConditionedKernelError, InvalidParameterError, NumericalError
from .linalg import cond_estimate, jitter_cholesky, symmetrize
from .sigma_points import UnitPointSet

#: Kernel-matrix jitter, relative to alpha**2, used on the single retry.
KERNEL_JITTER = 1e-8
#: Round-off allowance (relative to alpha**2) before a negative variance is an error.
VARIANCE_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RbfKernelParams:
    """Kernel scaling `alpha` and per-dimension `lengthscales`."""

    alpha: float
    lengthscales: np.ndarray

    def __post_init__(self):
        ell = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidParameterError(f"alpha must be positive, got {self.alpha}")
        if ell.ndim != 1 or not np.all(np.isfinite(ell) & (ell > 0)):
            raise InvalidParameterError(f"lengthscales must be positive, got {ell}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "lengthscales", _frozen(ell))

    @property
    def variance(self):
        return self.alpha**2

    def for_dim(self, dim):
        """Lengthscales broadcast to `dim` entries (a single value is repeated)."""
        ell = self.lengthscales
        if ell.size == dim:
            return ell
        if ell.size == 1:
            return np.full(dim, ell[0])
        raise InvalidParameterError(f"{ell.size} lengthscales given for dimension {dim}")


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    K: np.ndarray
    jitter_used: float
    chol: np.ndarray
    cond: float = 1.0

    @property
    def roundoff(self):
        """Relative accuracy to expect from quantities like ``alpha**2 - k^T K^-1 k``."""
        return max(VARIANCE_TOL, self.K.shape[0] * self.cond * np.finfo(float).eps)

    def solve(self, B):
        return la.cho_solve((self.chol, True), B, check_finite=False)


@dataclass(frozen=True, eq=False)
class GpqWeights:
    """Precomputed GPQ weights for fixed unit points and kernel parameters.

    ``w_mean = K^-1 q``, ``w_cov = K^-1 Q K^-1``, ``w_cross = R K^-1`` and
    ``sigma_bar_sq = kbar - tr(Q K^-1)``, the input-averaged GP variance.

    The transform itself uses the whitened form with ``K = L L^T``:
    ``b = L^-1 q``, ``G = R L^-T`` and the PSD matrix
    ``core = L^-1 Q L^-T - b b^T``.  With ``v = L^-1 y`` the output covariance
    is ``v^T core v``, which stays positive semi-definite even when ``K`` is
    badly conditioned and the explicit ``w_cov`` has lost all accuracy.
    """

    w_mean: np.ndarray
    w_cov: np.ndarray
    w_cross: np.ndarray
    sigma_bar_sq: float
    unit_points: np.ndarray
    kernel_params: RbfKernelParams
    jitter_used: float = 0.0
    chol: np.ndarray = None
    whitened_mean: np.ndarray = None
    whitened_cross: np.ndarray = None
    core: np.ndarray = None

    @property
    def dim(self):
        return self.unit_points.shape[0]

    @property
    def n_points(self):
        return self.unit_points.shape[1]

    def whiten(self, y):
        """``L^-1 y`` for function values `y` of shape ``(N, E)``."""
        return la.solve_triangular(self.chol, y, lower=True, check_finite=False)


def _points(points):
    if isinstance(points, UnitPointSet):
        points = points.points
    return np.atleast_2d(np.asarray(points, dtype=float))


def _inv_lam(points, params):
    return 1.0 / params.for_dim(points.shape[0]) ** 2


def rbf_kernel(xi, xj, params):
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xj = np.atleast_1d(np.asarray(xj, dtype=float))
    d = xi - xj
    return params.alpha**2 * float(np.exp(-0.5 * np.sum(d * d / params.for_dim(d.size) ** 2)))


def rbf_cross(A, B, params):
    """Kernel values between the columns of `A` (D, n) and `B` (D, m)."""
    il = _inv_lam(A, params)
    a = A * np.sqrt(il)[:, None]
    b = B * np.sqrt(il)[:, None]
    d2 = np.sum(a * a, 0)[:, None] + np.sum(b * b, 0)[None, :] - 2.0 * a.T @ b
    return params.alpha**2 * np.exp(-0.5 * np.maximum(d2, 0.0))


def kernel_matrix(points, params):
    """Gram matrix of the kernel on the columns of `points`.

    A single retry adds ``1e-8 alpha**2 I`` when the plain Cholesky fails.
    Duplicate columns are rejected up front since they make ``K`` singular.
    """
    X = _points(points)
    n = X.shape[1]
    if n > 1:
        # exact duplicates: sort columns lexicographically and compare neighbours
        order = np.lexsort(X[::-1])
        Xs = X[:, order]
        if np.any(np.all(Xs[:, 1:] == Xs[:, :-1], axis=0)):
            raise IllConditionedKernelError("duplicate points make the kernel matrix singular")
    K = symmetrize(rbf_cross(X, X, params))
    L, used = jitter_cholesky(K, KERNEL_JITTER * params.alpha**2, IllConditionedKernelError, "kernel matrix")
    if used:
        K = K + used * np.eye(n)
    return KernelMatrix(K, used, L, cond_estimate(L, K))


def kernel_mean_vector(points, params):
    """``q_i = E[k(xi, xi_i)]`` for ``xi ~ N(0, I)``."""
    X = _points(points)
    il = _inv_lam(X, params)
    lam = 1.0 / il
    det = np.prod(il + 1.0)
    quad = np.sum(X * X / (lam + 1.0)[:, None], axis=0)
    return params.alpha**2 * det**-0.5 * np.exp(-0.5 * quad)


def kernel_cov_matrix(points, params):
    """``Q_ij = E[k(xi, xi_i) k(xi, xi_j)]`` for ``xi ~ N(0, I)``."""
    X = _points(points)
    il = _inv_lam(X, params)
    c = 2.0 * il + 1.0
    s = np.sum(X * X * il[:, None], axis=0)
    Z = X * il[:, None]
    # z_ij^T (2 Lam^-1 + I)^-1 z_ij with z_ij = Lam^-1 (xi_i + xi_j), expanded
    Zc = Z / np.sqrt(c)[:, None]
    g = np.sum(Zc * Zc, axis=0)
    zz = g[:, None] + g[None, :] + 2.0 * Zc.T @ Zc
    Q = params.alpha**4 * np.prod(c) ** -0.5 * np.exp(-0.5 * (s[:, None] + s[None, :] - zz))
    return symmetrize(Q)


def kernel_cross_matrix(points, params):
    """``R[:, j] = E[xi k(xi, xi_j)] = q_j (Lam + I)^-1 xi_j``, shape ``(D, N)``."""
    X = _points(points)
    lam = params.for_dim(X.shape[0]) ** 2
    return kernel_mean_vector(X, params)[None, :] * X / (lam + 1.0)[:, None]


def expected_kernel_diag(params):
    """``kbar = E[k(xi, xi)]``; constant ``alpha**2`` for a stationary kernel."""
    return params.alpha**2


def expected_kernel_double(dim, params):
    """``E[k(xi, xi')]`` with `xi`, `xi'` independent standard Gaussians."""
    il = 1.0 / params.for_dim(dim) ** 2
    return params.alpha**2 * np.prod(2.0 * il + 1.0) ** -0.5


def _clamp_variance(v, params, what, rel_tol=VARIANCE_TOL):
    tol = rel_tol * params.alpha**2
    if v < -tol:
        raise NumericalError(f"{what} is negative ({v:.3e}) beyond round-off")
    return max(float(v), 0.0)


def _psd_part(A, tol, what):
    """Clip round-off negative eigenvalues of symmetric `A`; larger ones are an error."""
    ev, V = np.linalg.eigh(symmetrize(A))
    if ev[0] >= 0.0:
        return symmetrize(A)
    if ev[0] < -tol:
        raise IllConditionedKernelError(f"{what} has eigenvalue {ev[0]:.3e}; kernel matrix too ill-conditioned")
    return symmetrize((V * np.maximum(ev, 0.0)) @ V.T)


def gpq_weights(unit_points, params):
    """Compute :class:`GpqWeights` for the given unit points and kernel."""
    X = _points(unit_points)
    km = kernel_matrix(X, params)
    L = km.chol
    q = kernel_mean_vector(X, params)
    Q = kernel_cov_matrix(X, params)
    R = kernel_cross_matrix(X, params)

    def lsolve(B):
        return la.solve_triangular(L, B, lower=True, check_finite=False)

    b = lsolve(q)
    G = lsolve(R.T).T
    B = symmetrize(lsolve(lsolve(Q).T))
    # Cov[u] - E[u xi^T] E[xi u^T] for u = L^-1 k(xi): PSD in exact arithmetic
    tol = 10.0 * km.roundoff * params.alpha**2
    resid = _psd_part(B - np.outer(b, b) - G.T @ G, tol, "whitened kernel covariance")
    core = resid + G.T @ G
    sbar = _clamp_variance(expected_kernel_diag(params) - np.trace(B), params, "expected GP variance", km.roundoff)

    def rsolve(A):
        # A L^-1
        return la.solve_triangular(L, A.T, lower=True, trans="T", check_finite=False).T

    w_mean = la.solve_triangular(L, b, lower=True, trans="T", check_finite=False)
    w_cov = symmetrize(rsolve(rsolve(core + np.outer(b, b)).T))
    w_cross = rsolve(G)
    return GpqWeights(
        _frozen(w_mean), _frozen(w_cov), _frozen(w_cross), sbar, _frozen(X), params, km.jitter_used,
        _frozen(L), _frozen(b), _frozen(G), _frozen(core),
    )


def gpq_transform(g, density: GaussianDensity, weights: GpqWeights):
    """GPQ moment transform of `density` through `g`.

    Function values ``y`` (N x E) are taken at ``x_i = m + L xi_i``.  In unit
    space the input mean is zero, so

        mean  = y^T w_mean
        cov   = y^T w_cov y - mean mean^T + sigma_bar_sq I
        cross = L (w_cross y)

    The ``sigma_bar_sq I`` term accounts for the integration error of the
    shared GP model.  Evaluation goes through the whitened weights (see
    :class:`GpqWeights`), which gives the same moments.
    """
    X = affine_map_points(density, weights.unit_points)
    y = evaluate_points(g, X).T
    v = weights.whiten(y)
    mu = v.T @ weights.whitened_mean
    S = symmetrize(v.T @ weights.core @ v) + weights.sigma_bar_sq * np.eye(y.shape[1])
    C = density.cholesky() @ (weights.whitened_cross @ v)
    extra = {"points": X, "values": y.T, "sigma_bar_sq": weights.sigma_bar_sq}
    return MomentTransformResult(mu, S, C, extra)


def gp_posterior(points, values, params, query):
    """Noiseless GP predictive mean and variance at a single `query` point."""
    X = _points(points)
    y = np.asarray(values, dtype=float).reshape(X.shape[1])
    km = kernel_matrix(X, params)
    k = rbf_cross(X, np.atleast_1d(np.asarray(query, dtype=float))[:, None], params)[:, 0]
    mean = float(k @ km.solve(y))
    var = params.alpha**2 - float(k @ km.solve(k))
    return mean, _clamp_variance(var, params, "GP predictive variance", km.roundoff)


def integral_variance(points, params):
    """Posterior variance of ``E[f(xi)]`` under the GP prior, ``xi ~ N(0, I)``.

    ``E[k(xi, xi')] - q^T K^-1 q``; independent of the function values.
    """
    X = _points(points)
    km = kernel_matrix(X, params)
    q = kernel_mean_vector(X, params)
    v = expected_kernel_double(X.shape[0], params) - float(q @ km.solve(q))
    return _clamp_variance(v, params, "integral variance", km.roundoff)


class GPQTransform:
    """Callable ``(g, density) -> MomentTransformResult`` with precomputed weights."""

    def __init__(self, unit_points, params: RbfKernelParams):
        self.weights = gpq_weights(unit_points, params)
        self.rule_name = getattr(unit_points, "rule_name", "custom")

    def __call__(self, g, density):
        return gpq_transform(g, density, self.weights)

    def __repr__(self):
        p = self.weights.kernel_params
        return f"GPQTransform({self.rule_name}, alpha={p.alpha}, lengthscales={list(p.lengthscales)})"
