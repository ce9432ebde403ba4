"""Symmetric-matrix primitives: svec/smat, eigenvalue cone checks, Schur complements.

Conventions
-----------
svec scans the lower triangle row by row and scales off-diagonal entries by
sqrt(2), so that dot(svec(A), svec(B)) == trace(A @ B) for symmetric A, B.
All checks that involve "is this PSD" are relative to max(1, spectral radius)
to stay scale-invariant.
"""

import numpy as np

SQRT2 = np.sqrt(2.0)


class DimensionError(ValueError):
    """Shape or length inconsistency."""


class NumericError(ValueError):
    """Non-finite data where finite values are required."""


class SingularBlockError(ValueError):
    """A matrix block that must be invertible is (numerically) singular."""


def tril_indices(d):
    """Row-by-row lower-triangle index pair arrays for order d."""
    return np.tril_indices(d)


def svec_len(d: int) -> int:
    return d * (d + 1) // 2


def svec_scale(d: int) -> np.ndarray:
    """Per-entry scaling of the lower-triangle scan (sqrt(2) off diagonal)."""
    ii, jj = np.tril_indices(d)
    return np.where(ii == jj, 1.0, SQRT2)


def check_symmetric(M: np.ndarray, tol: float = 0.0) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.abs(M - M.T) <= tol):
        raise DimensionError("matrix is not symmetric")
    return M


def svec(M: np.ndarray) -> np.ndarray:
    """Symmetric matrix -> packed vector of length d(d+1)/2."""
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    ii, jj = np.tril_indices(d)
    return M[ii, jj] * svec_scale(d)


def smat(v: np.ndarray) -> np.ndarray:
    """Inverse of svec.  Raises DimensionError on an invalid length.

    Roundtrips are exact on the diagonal; off-diagonal entries go through the
    sqrt(2) scaling twice and can move by one ulp.
    """
    v = np.asarray(v, dtype=float)
    ln = v.shape[0]
    d = int(round((np.sqrt(8 * ln + 1) - 1) / 2))
    if svec_len(d) != ln:
        raise DimensionError(f"length {ln} is not d(d+1)/2 for any integer d")
    ii, jj = np.tril_indices(d)
    M = np.zeros((d, d))
    vals = v / svec_scale(d)
    M[ii, jj] = vals
    M[jj, ii] = vals
    return M


def eigvals_sym(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise NumericError("matrix has non-finite entries")
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def min_eigenvalue(M: np.ndarray) -> float:
    return float(eigvals_sym(M)[0])


def spectral_radius(M: np.ndarray) -> float:
    w = eigvals_sym(M)
    return float(max(abs(w[0]), abs(w[-1])))


def is_psd(M: np.ndarray, tol: float = 1e-8) -> bool:
    """min eig >= -tol * max(1, spectral radius)."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    w = eigvals_sym(M)
    rad = max(abs(w[0]), abs(w[-1])) if w.size else 0.0
    return bool(w.size == 0 or w[0] >= -tol * max(1.0, rad))


def psd_margin(M: np.ndarray) -> float:
    """Smallest eigenvalue relative to max(1, spectral radius); >= 0 means PSD."""
    w = eigvals_sym(M)
    if w.size == 0:
        return 0.0
    rad = max(abs(w[0]), abs(w[-1]))
    return float(w[0] / max(1.0, rad))


# Condition estimate threshold above which a leading block is refused.
SCHUR_COND_LIMIT = 1e12


def schur_complement(M: np.ndarray, k: int) -> np.ndarray:
    """H = C - B^T A^{-1} B for M = [[A, B], [B^T, C]] with A the leading k x k block."""
    M = check_symmetric(np.asarray(M, dtype=float), tol=0.0)
    d = M.shape[0]
    if not 1 <= k < d:
        raise DimensionError(f"split {k} out of range for order {d}")
    A = M[:k, :k]
    B = M[:k, k:]
    C = M[k:, k:]
    wa = np.linalg.eigvalsh(A)
    amax = np.abs(wa).max()
    amin = np.abs(wa).min()
    if amin == 0.0 or amax / amin > SCHUR_COND_LIMIT:
        raise SingularBlockError(
            f"leading block is singular or ill-conditioned (cond ~ {np.inf if amin == 0 else amax/amin:.2e})"
        )
    H = C - B.T @ np.linalg.solve(A, B)
    return 0.5 * (H + H.T)


def lifted_matrix(alpha: float, x: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Assemble [[alpha, x^T], [x, X]]."""
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if x.shape != (n,):
        raise DimensionError(f"vector length {x.shape} does not match matrix order {n}")
    Y = np.empty((n + 1, n + 1))
    Y[0, 0] = alpha
    Y[0, 1:] = x
    Y[1:, 0] = x
    Y[1:, 1:] = X
    return Y


def lifted_psd_check(alpha: float, x: np.ndarray, X: np.ndarray, tol: float = 1e-8) -> bool:
    """PSD test of [[alpha, x^T], [x, X]]; for alpha > 0 equivalent to X - xx^T/alpha >= 0."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return is_psd(lifted_matrix(alpha, x, X), tol)
