"""Seeded random generation: substreams, Wishart draws, multivariate normals.

Substreams are derived from a (master_seed, stream_index) pair through
numpy's SeedSequence spawning, so any replicate is a pure function of the
pair and can be generated on any worker in any order. Wishart matrices are
sampled through the Bartlett decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import BadDimension
from .linalg import LowerTriangular, SymMatrix
from .teststats import PrecisionStats

_UINT64_BOUND = 2**64


@dataclass(frozen=True)
class SeedSpec:
    """Names one reproducible random substream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_index"):
            value = getattr(self, name)
            if not 0 <= int(value) < _UINT64_BOUND:
                raise BadDimension(f"{name} must fit in an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_index,)
        )
        return np.random.Generator(np.random.PCG64(seq))


def bartlett_factor(p: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Lower-triangular A with A @ A.T ~ Wishart_p(n, I).

    Diagonal entries are sqrt(chi-square) with degrees n, n-1, ..., n-p+1;
    strict lower entries are standard normal. The diagonal is drawn first,
    then the off-diagonal block, which pins the substream layout.
    """
    if n < p:
        raise BadDimension(f"Wishart degrees n={n} must be >= dimension p={p}")
    a = np.zeros((p, p))
    df = n - np.arange(p)
    a[np.diag_indices(p)] = np.sqrt(rng.chisquare(df))
    if p > 1:
        a[np.tril_indices(p, -1)] = rng.standard_normal(p * (p - 1) // 2)
    return a


def sample_wishart_identity(p: int, n: int, seed: SeedSpec) -> SymMatrix:
    """One draw from Wishart_p(n, I)."""
    a = bartlett_factor(p, n, seed.generator())
    return SymMatrix(a @ a.T)


def _invert_lower_triangular(a: np.ndarray) -> np.ndarray:
    inv, info = lapack.dtrtri(a, lower=1)
    if info != 0:
        raise BadDimension(f"triangular inversion failed with info={info}")
    return inv


def sample_V11_null(
    p: int, T: int, K: int, seed: SeedSpec, demeaned: bool = False
) -> PrecisionStats:
    """One null draw of the sample-precision block and its inverse.

    Draws W ~ Wishart_p(T_eff - K, I) and returns V11 = W^{-1}. In inverse
    Wishart terms V11 has nu = (T_eff - K) + p + 1 degrees of freedom and
    identity parameter, which is the null law of the precision block up to
    its (irrelevant) diagonal; the Wishart direction is sampled because
    Bartlett gives its factor directly.
    """
    t_eff = T - 1 if demeaned else T
    if p + K >= t_eff:
        raise BadDimension(f"need p + K < T_eff, got p={p}, K={K}, T_eff={t_eff}")
    a = bartlett_factor(p, t_eff - K, seed.generator())
    w = a @ a.T
    a_inv = _invert_lower_triangular(a)
    v11 = a_inv.T @ a_inv
    return PrecisionStats(
        p=p,
        T=T,
        K=K,
        demeaned=demeaned,
        dof_n=t_eff - K - p + 1,
        V11=SymMatrix(v11),
        V11_inv=SymMatrix(w),
        diag_v11=np.diagonal(v11).copy(),
        diag_v11_inv=np.diagonal(w).copy(),
        ln_det_v11_inv=2.0 * float(np.sum(np.log(np.diagonal(a)))),
    )


def sample_mvn(
    mean: np.ndarray, cov_chol: LowerTriangular, seed: SeedSpec
) -> np.ndarray:
    """One multivariate normal draw mean + L @ z with z standard normal."""
    mean = np.asarray(mean, dtype=np.float64)
    if mean.ndim != 1 or mean.shape[0] != cov_chol.dim:
        raise BadDimension(
            f"mean has shape {mean.shape} but factor dimension is {cov_chol.dim}"
        )
    rng = seed.generator()
    return mean + cov_chol.data @ rng.standard_normal(mean.shape[0])
