"""Dense small-matrix kernels.

Matrices are two-dimensional ``float64`` numpy arrays. Vectorization is
column-major throughout, so that ``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from pkcontrol.core.errors import InvalidParameterError, SingularMatrixError
from pkcontrol.core.models import FloatArray

SINGULAR_PIVOT_RATIO = 1e-12
SPECTRAL_SQUARINGS = 12
SPECTRAL_THRESHOLD = 1e-6
_OVERFLOW_GUARD = 1e150


def as_matrix(data: ArrayLike, name: str = "matrix") -> FloatArray:
    """Convert ``data`` to a finite 2-D float64 matrix.

    Scalars become 1x1 matrices and 1-D inputs become column vectors.

    Raises:
        InvalidParameterError: If the input has more than two dimensions or
            contains NaN/Inf entries.
    """
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim > 2:
        raise InvalidParameterError(f"{name} must be at most 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains non-finite entries")
    return arr


def kron(a: FloatArray, b: FloatArray) -> FloatArray:
    """Kronecker product; block (i, j) of the result is ``a[i, j] * b``."""
    return np.kron(a, b)


def vec(m: FloatArray) -> FloatArray:
    """Stack the columns of ``m`` into a column vector."""
    return np.reshape(m, (-1, 1), order="F")


def unvec(v: FloatArray, rows: int, cols: int) -> FloatArray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    return np.reshape(v, (rows, cols), order="F")


def commutation_matrix(m: int, n: int) -> FloatArray:
    """Permutation V with ``V @ vec(X) == vec(X.T)`` for every m x n matrix X."""
    if m < 1 or n < 1:
        raise InvalidParameterError(f"commutation matrix needs m, n >= 1, got ({m}, {n})")
    v = np.zeros((m * n, m * n))
    for i in range(m):
        for j in range(n):
            v[j + i * n, i + j * m] = 1.0
    return v


def solve_linear(a: FloatArray, b: FloatArray) -> FloatArray:
    """Solve ``a @ x = b`` by LU factorization with partial pivoting.

    Args:
        a: Square coefficient matrix.
        b: Right-hand side, vector or matrix with ``a.shape[0]`` rows.

    Returns:
        The solution with the same shape as ``b``.

    Raises:
        InvalidParameterError: If ``a`` is not square or shapes disagree.
        SingularMatrixError: If a pivot magnitude falls below
            ``1e-12`` times the largest entry of ``a``.
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameterError(f"coefficient matrix must be square, got {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise InvalidParameterError(f"right-hand side has {b.shape[0]} rows, expected {a.shape[0]}")

    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        raise SingularMatrixError("coefficient matrix is zero")

    with warnings.catch_warnings():
        # Exact singularity is reported through the pivot check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)

    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < SINGULAR_PIVOT_RATIO * scale:
        raise SingularMatrixError(
            f"pivot {np.min(pivots):.3e} below {SINGULAR_PIVOT_RATIO:.0e} x {scale:.3e}"
        )
    result: FloatArray = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    return result


def spectral_radius_below_one(
    a: FloatArray,
    squarings: int = SPECTRAL_SQUARINGS,
    threshold: float = SPECTRAL_THRESHOLD,
) -> bool:
    """Decide whether ``a`` is Schur stable by repeated squaring.

    Returns True iff ``||a^(2^squarings)||_F < threshold``. Eigenvalues within
    roughly ``3.4e-3`` of the unit circle are classified as unstable. Once a
    power grows past the overflow guard the decision falls back to the
    spectral radius of ``a`` against the same bound,
    ``threshold ** (2 ** -squarings)``.
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameterError(f"matrix must be square, got {a.shape}")
    power = a.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(squarings):
            norm = float(np.linalg.norm(power))
            # Frobenius norm is submultiplicative, so small stays small
            if norm < threshold:
                return True
            if not np.isfinite(norm):
                return False
            if norm > _OVERFLOW_GUARD:
                radius = float(np.max(np.abs(scipy.linalg.eigvals(a, check_finite=False))))
                return radius < threshold ** (0.5**squarings)
            power = power @ power
        final = float(np.linalg.norm(power))
    return bool(np.isfinite(final) and final < threshold)
