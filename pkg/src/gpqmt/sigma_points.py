"""Unit sigma-point sets of the classical Gaussian quadrature rules.

All rules live in standard-Gaussian space: a rule integrates ``f(xi)`` against
``N(xi; 0, I)`` as ``sum_i w_i f(xi_i)``.  Points are stored column-wise, so a
rule in ``D`` dimensions with ``N`` points carries a ``(D, N)`` matrix.

Column ordering is fixed so results are reproducible bit for bit:

* UT:  ``[0, c e_1, ..., c e_D, -c e_1, ..., -c e_D]``
* SR:  ``[c e_1, ..., c e_D, -c e_1, ..., -c e_D]``
* GH:  row-major Cartesian product, first coordinate varying slowest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ResourceLimitError

#: Largest tensor grid :func:`gh_points` builds unless told otherwise.
DEFAULT_MAX_POINTS = 100_000


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UnitPointSet:
    """Unit sigma-points with their mean and covariance weights.

    Attributes
    ----------
    points : (D, N) ndarray
        Unit sigma-points, one per column.
    mean_weights : (N,) ndarray
    cov_weights : (N,) ndarray
        Equal to `mean_weights` for every rule except the scaled UT.
    rule_name : str
    """

    points: np.ndarray
    mean_weights: np.ndarray
    cov_weights: np.ndarray
    rule_name: str

    def __post_init__(self):
        pts = np.atleast_2d(self.points)
        wm = np.atleast_1d(self.mean_weights)
        wc = np.atleast_1d(self.cov_weights)
        if pts.ndim != 2 or wm.shape != (pts.shape[1],) or wc.shape != wm.shape:
            raise InvalidParameterError(
                f"inconsistent shapes: points {pts.shape}, weights {wm.shape}/{wc.shape}"
            )
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "mean_weights", _frozen(wm))
        object.__setattr__(self, "cov_weights", _frozen(wc))

    @property
    def dim(self):
        return self.points.shape[0]

    @property
    def n_points(self):
        return self.points.shape[1]

    def table(self):
        """Rows ``(index, xi_1..xi_D, w_mean, w_cov)`` as an ``(N, D + 3)`` array."""
        idx = np.arange(self.n_points, dtype=float)
        return np.column_stack([idx, self.points.T, self.mean_weights, self.cov_weights])


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise InvalidParameterError(f"dimension must be a positive integer, got {dim!r}")
    return int(dim)


def _symmetric_set(dim, c):
    pts = np.zeros((dim, 2 * dim))
    idx = np.arange(dim)
    pts[idx, idx] = c
    pts[idx, dim + idx] = -c
    return pts


def ut_points(dim, kappa=0.0):
    """Unscented transform points ``[0, c I, -c I]`` with ``c = sqrt(dim + kappa)``.

    Weights are ``kappa / (dim + kappa)`` for the centre and
    ``1 / (2 (dim + kappa))`` for the rest.

    >>> ut_points(1, 0.0).mean_weights
    array([0. , 0.5, 0.5])
    """
    dim = _check_dim(dim)
    s = dim + kappa
    if not s > 0:
        raise InvalidParameterError(f"dim + kappa must be positive, got {s}")
    pts = np.hstack([np.zeros((dim, 1)), _symmetric_set(dim, math.sqrt(s))])
    w = np.full(2 * dim + 1, 1.0 / (2.0 * s))
    w[0] = kappa / s
    return UnitPointSet(pts, w, w, "ut")


def scaled_ut_points(dim, kappa=0.0, alpha_ut=1.0, beta_ut=2.0):
    """Scaled unscented transform with distinct covariance weights.

    Uses ``lam = alpha_ut**2 (dim + kappa) - dim``; the centre covariance weight
    is ``lam / (dim + lam) + 1 - alpha_ut**2 + beta_ut``.  With ``alpha_ut = 1``
    the points and mean weights coincide with :func:`ut_points`.
    """
    dim = _check_dim(dim)
    lam = alpha_ut**2 * (dim + kappa) - dim
    s = dim + lam
    if not s > 0:
        raise InvalidParameterError(f"dim + lambda must be positive, got {s}")
    pts = np.hstack([np.zeros((dim, 1)), _symmetric_set(dim, math.sqrt(s))])
    wm = np.full(2 * dim + 1, 1.0 / (2.0 * s))
    wm[0] = lam / s
    wc = wm.copy()
    wc[0] += 1.0 - alpha_ut**2 + beta_ut
    return UnitPointSet(pts, wm, wc, "sut")


def sr_points(dim):
    """Third-degree spherical-radial (cubature) rule: ``2 dim`` points, equal weights."""
    dim = _check_dim(dim)
    w = np.full(2 * dim, 1.0 / (2 * dim))
    return UnitPointSet(_symmetric_set(dim, math.sqrt(dim)), w, w, "sr")


def _hermite_e(n, x):
    """``(He_n(x), He_{n-1}(x))`` for ``n >= 1`` by the three-term recurrence."""
    h_prev, h = np.ones_like(x), x.copy()
    for k in range(1, n):
        h_prev, h = h, x * h - k * h_prev
    return h, h_prev


def hermite_rule_1d(order):
    """Gauss-Hermite rule of the given order for the standard Gaussian weight.

    Nodes are the roots of the probabilists' Hermite polynomial ``He_r``,
    obtained as eigenvalues of the symmetric Jacobi matrix (off-diagonal
    ``sqrt(k)``) and polished by one Newton step.  Weights follow ``r! / (r He_{r-1}(x_i))**2``, evaluated in
    log space so large orders do not overflow.

    Returns
    -------
    nodes, weights : (r,) ndarray
        Nodes in increasing order.
    """
    if int(order) != order or order < 1:
        raise InvalidParameterError(f"order must be a positive integer, got {order!r}")
    r = int(order)
    if r == 1:
        return np.zeros(1), np.ones(1)
    off = np.sqrt(np.arange(1, r, dtype=float))
    J = np.diag(off, 1) + np.diag(off, -1)
    x = np.linalg.eigvalsh(J)
    h_r, h = _hermite_e(r, x)
    x = x - h_r / (r * h)
    # roots are symmetric about 0; remove round-off asymmetry
    x = 0.5 * (x - x[::-1])
    h = _hermite_e(r, x)[1]
    w = np.exp(math.lgamma(r + 1) - 2.0 * (math.log(r) + np.log(np.abs(h))))
    return x, 0.5 * (w + w[::-1])


def gh_points(dim, order, max_points=DEFAULT_MAX_POINTS):
    """Tensor-product Gauss-Hermite rule with ``order**dim`` points."""
    dim = _check_dim(dim)
    n = int(order) ** dim
    if n > max_points:
        raise ResourceLimitError(
            f"GH rule of order {order} in {dim} dimensions needs {n} points (budget {max_points})"
        )
    x, w = hermite_rule_1d(order)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.vstack([g.ravel() for g in grids])
    weights = np.prod(np.vstack([g.ravel() for g in wgrids]), axis=0)
    return UnitPointSet(pts, weights, weights, f"gh{int(order)}")


def make_rule(name, dim, kappa=0.0, order=3, alpha_ut=1.0, beta_ut=2.0, max_points=DEFAULT_MAX_POINTS):
    """Build a rule by name: ``ut``, ``sut`` (scaled UT), ``sr`` or ``gh``."""
    name = name.lower()
    if name == "ut":
        return ut_points(dim, kappa)
    if name == "sut":
        return scaled_ut_points(dim, kappa, alpha_ut, beta_ut)
    if name == "sr":
        return sr_points(dim)
    if name == "gh":
        return gh_points(dim, order, max_points=max_points)
    raise InvalidParameterError(f"unknown rule {name!r}; expected ut, sut, sr or gh")
