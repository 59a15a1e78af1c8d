"""Small linear-algebra helpers shared by the transforms and the filter."""

from __future__ import annotations

import numpy as np
import scipy.linalg as la

from .errors import SingularCovarianceError


def symmetrize(A):
    return 0.5 * (A + A.T)


def jitter_cholesky(A, jitter, error=SingularCovarianceError, what="matrix"):
    """Lower Cholesky factor of `A`, retrying once with ``jitter * I`` added.

    Parameters
    ----------
    A : (n, n) ndarray
        Symmetric matrix expected to be positive definite.
    jitter : float
        Diagonal load used for the single retry.
    error : type
        Exception class raised when the retry fails as well.
    what : str
        Name of the matrix, used in the error message.

    Returns
    -------
    L : (n, n) ndarray
        Lower triangular factor with ``L @ L.T == A + used * I``.
    used : float
        The jitter that was actually added (0.0 when none was needed).
    """
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise error(f"{what} contains non-finite entries")
    try:
        return la.cholesky(A, lower=True, check_finite=False), 0.0
    except la.LinAlgError:
        pass
    try:
        L = la.cholesky(A + jitter * np.eye(A.shape[0]), lower=True, check_finite=False)
    except la.LinAlgError:
        raise error(f"{what} is not positive definite, even with jitter {jitter:.3g}") from None
    return L, float(jitter)


def cond_estimate(L, A):
    """1-norm condition number of SPD `A` estimated from its lower factor `L` (LAPACK pocon)."""
    rcond, info = la.lapack.dpocon(L, np.linalg.norm(A, 1), uplo="L")
    return np.inf if info != 0 or rcond <= 0 else 1.0 / rcond


def min_eig_ratio(A):
    """Smallest eigenvalue of symmetric `A` divided by its spectral norm (0 for A = 0)."""
    ev = np.linalg.eigvalsh(symmetrize(np.atleast_2d(A)))
    scale = np.max(np.abs(ev))
    if scale == 0.0:
        return 0.0
    return float(ev[0] / scale)


def is_psd(A, rtol=1e-9):
    return min_eig_ratio(A) >= -rtol
