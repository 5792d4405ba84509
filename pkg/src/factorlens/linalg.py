"""Dense symmetric positive-definite matrix kernel.

Covariance, precision and correlation matrices in this package are small
dense float64 matrices (design envelope p <= ~2000). Factorizations are
backed by LAPACK through numpy/scipy; the positive-definiteness tolerance
is enforced on the Cholesky pivots. All operations are pure functions of
immutable values and never alias their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import BadDimension, NotPositiveDefinite

# A Cholesky pivot at or below this fraction of the largest diagonal entry
# counts as "not positive definite".
PIVOT_RTOL = 1e-12


def _mirror_upper(a: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower one, making symmetry exact."""
    out = np.triu(a)
    out += np.triu(a, 1).T
    return out


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric matrix value; symmetry is exact by construction.

    Only the upper triangle of the input is read; it is mirrored onto the
    lower triangle, so ``data[i, j] == data[j, i]`` holds bitwise. The
    backing array is frozen (read-only).
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise BadDimension(f"expected a square matrix, got shape {a.shape}")
        a = _mirror_upper(a)
        a.flags.writeable = False
        object.__setattr__(self, "data", a)

    @classmethod
    def identity(cls, dim: int) -> "SymMatrix":
        return cls(np.eye(dim))

    @classmethod
    def diagonal(cls, entries) -> "SymMatrix":
        return cls(np.diag(np.asarray(entries, dtype=np.float64)))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def diag(self) -> np.ndarray:
        return np.diagonal(self.data).copy()


@dataclass(frozen=True)
class LowerTriangular:
    """Lower-triangular factor with strictly positive diagonal."""

    data: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise BadDimension(f"expected a square matrix, got shape {a.shape}")
        a = np.tril(a)
        if np.any(np.diagonal(a) <= 0.0):
            raise NotPositiveDefinite("triangular factor has a non-positive diagonal entry")
        a.flags.writeable = False
        object.__setattr__(self, "data", a)

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def cholesky(m: SymMatrix) -> LowerTriangular:
    """Lower Cholesky factor L with L @ L.T == m.

    Raises NotPositiveDefinite when a pivot falls at or below
    PIVOT_RTOL times the largest diagonal entry.
    """
    a = m.data
    max_diag = float(np.max(np.diagonal(a)))
    if max_diag <= 0.0:
        raise NotPositiveDefinite("largest diagonal entry is not positive")
    try:
        factor = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Cholesky factorization failed") from None
    pivots = np.diagonal(factor) ** 2
    if float(np.min(pivots)) <= PIVOT_RTOL * max_diag:
        raise NotPositiveDefinite(
            f"Cholesky pivot {float(np.min(pivots)):.3e} below tolerance "
            f"{PIVOT_RTOL * max_diag:.3e}"
        )
    return LowerTriangular(factor)


def invert_spd(m: SymMatrix) -> SymMatrix:
    """Inverse of a symmetric positive-definite matrix via its Cholesky factor."""
    factor = cholesky(m)
    inv, info = lapack.dpotri(factor.data, lower=1)
    if info != 0:
        raise NotPositiveDefinite(f"dpotri failed with info={info}")
    # dpotri fills only the lower triangle of the inverse.
    full = np.tril(inv) + np.tril(inv, -1).T
    return SymMatrix(full)


def log_det_spd(m: SymMatrix) -> float:
    """Natural log of the determinant, computed as 2 * sum(log diag(L))."""
    factor = cholesky(m)
    return 2.0 * float(np.sum(np.log(np.diagonal(factor.data))))


def correlation_from_spd(m: SymMatrix) -> SymMatrix:
    """Correlation matrix m[i,j] / sqrt(m[i,i] m[j,j]) with exact unit diagonal."""
    d = np.diagonal(m.data)
    if np.any(d <= 0.0):
        raise NotPositiveDefinite("matrix has a non-positive diagonal entry")
    s = 1.0 / np.sqrt(d)
    r = m.data * np.outer(s, s)
    np.fill_diagonal(r, 1.0)
    return SymMatrix(r)


def top_left_block(m: SymMatrix, k: int) -> SymMatrix:
    """Leading k-by-k principal submatrix."""
    if not 1 <= k <= m.dim:
        raise BadDimension(f"block size {k} outside [1, {m.dim}]")
    return SymMatrix(m.data[:k, :k])
