"""The five test statistics computed from a sample-precision block.

All statistics are functions of the p-by-p leading block of the inverse
scaled sample covariance of the stacked (responses, factors) data. Indices
in the public API are 1-based to match the usual (i, j) labelling of
matrix entries; the pair statistic is defined for 1 <= j < i <= p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadDimension,
    BadIndex,
    DegenerateCorrection,
    NotPositiveDefinite,
    Singular,
)
from .linalg import SymMatrix, invert_spd, log_det_spd, top_left_block


@dataclass(frozen=True)
class FactorModelSpec:
    """Dimensions of a factor-model test problem."""

    p: int
    K: int
    T: int
    demeaned: bool = False

    def __post_init__(self) -> None:
        if self.p < 2:
            raise BadDimension(f"need at least two response series, got p={self.p}")
        if self.K < 0:
            raise BadDimension(f"K must be nonnegative, got {self.K}")
        if self.p + self.K >= self.t_eff:
            raise BadDimension(
                f"need p + K < effective sample size, got p={self.p}, K={self.K}, "
                f"T_eff={self.t_eff}"
            )

    @property
    def t_eff(self) -> int:
        """Effective sample size; demeaning consumes one observation."""
        return self.T - 1 if self.demeaned else self.T

    @property
    def dof_n(self) -> int:
        """Denominator degrees of freedom of the marginal statistics."""
        return self.t_eff - self.K - self.p + 1


@dataclass(frozen=True)
class PrecisionStats:
    """Per-dataset bundle: precision block, its inverse, and their diagonals."""

    p: int
    T: int
    K: int
    demeaned: bool
    dof_n: int
    V11: SymMatrix
    V11_inv: SymMatrix
    diag_v11: np.ndarray
    diag_v11_inv: np.ndarray
    # cached log det of V11_inv when the producer already has the factor
    ln_det_v11_inv: float | None = None

    def __post_init__(self) -> None:
        if self.dof_n < 1:
            raise BadDimension(f"dof_n must be >= 1, got {self.dof_n}")
        prod = self.diag_v11 * self.diag_v11_inv
        if np.any(prod < 1.0 - 1e-10):
            raise NotPositiveDefinite(
                "diagonal product of V11 and its inverse fell below one"
            )
        for name in ("diag_v11", "diag_v11_inv"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def t_eff(self) -> int:
        return self.T - 1 if self.demeaned else self.T

    @classmethod
    def from_v11(
        cls, v11: SymMatrix | np.ndarray, T: int, K: int, demeaned: bool = False
    ) -> "PrecisionStats":
        """Build the bundle from a given precision block (inverts it once)."""
        if not isinstance(v11, SymMatrix):
            v11 = SymMatrix(v11)
        t_eff = T - 1 if demeaned else T
        p = v11.dim
        dof_n = t_eff - K - p + 1
        if dof_n < 1:
            raise BadDimension(
                f"T={T}, K={K}, p={p} leave no degrees of freedom (dof_n={dof_n})"
            )
        inv = invert_spd(v11)
        return cls(
            p=p,
            T=T,
            K=K,
            demeaned=demeaned,
            dof_n=dof_n,
            V11=v11,
            V11_inv=inv,
            diag_v11=v11.diag(),
            diag_v11_inv=inv.diag(),
        )


@dataclass(frozen=True)
class TestStatistics:
    """All five statistics of one dataset, with argmax locations (1-based)."""

    t_el: float
    t_el_argmax: tuple[int, int]
    t_pr: float
    t_pr_argmax: int
    ln_t_lr_star: float
    t_lr: float
    all_t_ij: np.ndarray | None = None
    all_t_j: np.ndarray | None = None


def precision_stats_from_data(
    X: np.ndarray, F: np.ndarray | None, demeaned: bool = False
) -> PrecisionStats:
    """Precision bundle from raw data: X is p-by-T responses, F is K-by-T factors.

    The stacked covariance uses divisor T (population-mean-zero model) or,
    with demeaned=True, column-centered data with divisor T-1; the precision
    is the inverse of T_eff times that covariance.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if F is None:
        F = np.empty((0, X.shape[1]))
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    p, T = X.shape
    K = F.shape[0]
    if K and F.shape[1] != T:
        raise BadDimension(
            f"responses have T={T} observations but factors have {F.shape[1]}"
        )
    t_eff = T - 1 if demeaned else T
    if p + K >= t_eff:
        raise BadDimension(f"need p + K < T_eff, got p={p}, K={K}, T_eff={t_eff}")
    Y = np.vstack([X, F]) if K else X
    if demeaned:
        Yc = Y - Y.mean(axis=1, keepdims=True)
        scatter = Yc @ Yc.T  # == T_eff * demeaned covariance
    else:
        scatter = Y @ Y.T  # == T * plain covariance
    try:
        V = invert_spd(SymMatrix(scatter))
    except NotPositiveDefinite as exc:
        raise Singular(f"stacked covariance is not positive definite: {exc}") from None
    v11 = top_left_block(V, p)
    try:
        inv = invert_spd(v11)
    except NotPositiveDefinite as exc:
        raise Singular(f"precision block is not positive definite: {exc}") from None
    return PrecisionStats(
        p=p,
        T=T,
        K=K,
        demeaned=demeaned,
        dof_n=t_eff - K - p + 1,
        V11=v11,
        V11_inv=inv,
        diag_v11=v11.diag(),
        diag_v11_inv=inv.diag(),
    )


def pairwise_t_ij(ps: PrecisionStats) -> np.ndarray:
    """All p(p-1)/2 pair statistics, ordered (2,1), (3,1), (3,2), (4,1), ...

    The value for pair (i, j) is dof_n * g^2 / (1 - g^2) with
    g = v_ij / sqrt(v_ii v_jj).
    """
    if ps.p < 2:
        raise BadDimension("pair statistics need p >= 2")
    rows, cols = np.tril_indices(ps.p, -1)
    v = ps.V11.data
    d = ps.diag_v11
    g2 = v[rows, cols] ** 2 / (d[rows] * d[cols])
    return ps.dof_n * g2 / (1.0 - g2)


def stat_t_ij(ps: PrecisionStats, i: int, j: int) -> float:
    """Pair statistic for 1 <= j < i <= p (1-based indices)."""
    if not (1 <= j < i <= ps.p):
        raise BadIndex(f"need 1 <= j < i <= p, got i={i}, j={j}, p={ps.p}")
    v = ps.V11.data
    g2 = v[i - 1, j - 1] ** 2 / (ps.diag_v11[i - 1] * ps.diag_v11[j - 1])
    return float(ps.dof_n * g2 / (1.0 - g2))


def _argmax_smallest_index(values: np.ndarray) -> int:
    """First index attaining the maximum, treating 1-ulp near-ties as ties."""
    vmax = float(values.max())
    tol = 1e-12 * max(1.0, abs(vmax))
    return int(np.flatnonzero(values >= vmax - tol)[0])


def stat_t_el(ps: PrecisionStats) -> tuple[float, tuple[int, int]]:
    """Maximum pair statistic and its (i, j) location, smallest pair on ties."""
    values = pairwise_t_ij(ps)
    k = _argmax_smallest_index(values)  # scan order is lexicographic in (i, j)
    rows, cols = np.tril_indices(ps.p, -1)
    return float(values.max()), (int(rows[k]) + 1, int(cols[k]) + 1)


def all_t_j(ps: PrecisionStats) -> np.ndarray:
    """All p column statistics dof_n / (p-1) * (v_jj v_jj^(inv) - 1)."""
    if ps.p < 2:
        raise BadDimension("column statistics need p >= 2")
    raw = ps.diag_v11 * ps.diag_v11_inv - 1.0
    return ps.dof_n / (ps.p - 1) * np.maximum(raw, 0.0)


def stat_t_j(ps: PrecisionStats, j: int) -> float:
    """Column statistic for 1 <= j <= p (1-based)."""
    if not 1 <= j <= ps.p:
        raise BadIndex(f"need 1 <= j <= p, got j={j}, p={ps.p}")
    raw = ps.diag_v11[j - 1] * ps.diag_v11_inv[j - 1] - 1.0
    return float(ps.dof_n / (ps.p - 1) * max(raw, 0.0))


def stat_t_pr(ps: PrecisionStats) -> tuple[float, int]:
    """Maximum column statistic and its column (1-based), smallest j on ties."""
    values = all_t_j(ps)
    j = _argmax_smallest_index(values)
    return float(values.max()), j + 1


def stat_ln_t_lr_star(ps: PrecisionStats) -> float:
    """Log of the likelihood-ratio statistic.

    Computed as -(T_eff/2) * (ln det V11_inv - sum ln diag(V11_inv)), which
    equals -(T_eff/2) * ln det R for the correlation matrix R of V11_inv.
    Nonnegative by Hadamard's inequality; the statistic itself is never
    exponentiated because it overflows for realistic T.
    """
    if ps.ln_det_v11_inv is not None:
        ln_det = ps.ln_det_v11_inv
    else:
        ln_det = log_det_spd(ps.V11_inv)
    value = -(ps.t_eff / 2.0) * (ln_det - float(np.sum(np.log(ps.diag_v11_inv))))
    return max(value, 0.0)


def stat_t_lr(ps: PrecisionStats) -> float:
    """Bartlett-corrected likelihood-ratio statistic, asymptotically chi-square.

    Equals 2 * rho * ((T_eff - K)/T_eff) * ln T_LR* with
    rho = 1 - (2p+5)/(6(T_eff-K)); the reference law has p(p-1)/2 degrees
    of freedom.
    """
    rho = 1.0 - (2.0 * ps.p + 5.0) / (6.0 * (ps.t_eff - ps.K))
    if rho <= 0.0:
        raise DegenerateCorrection(
            f"correction factor rho={rho:.4f} not positive for p={ps.p}, "
            f"T_eff={ps.t_eff}, K={ps.K}"
        )
    return 2.0 * rho * ((ps.t_eff - ps.K) / ps.t_eff) * stat_ln_t_lr_star(ps)


def compute_all(ps: PrecisionStats, keep_marginals: bool = False) -> TestStatistics:
    """Evaluate every statistic once; optionally retain the marginal arrays."""
    t_el, el_arg = stat_t_el(ps)
    t_pr, pr_arg = stat_t_pr(ps)
    ln_star = stat_ln_t_lr_star(ps)
    t_lr = stat_t_lr(ps)
    return TestStatistics(
        t_el=t_el,
        t_el_argmax=el_arg,
        t_pr=t_pr,
        t_pr_argmax=pr_arg,
        ln_t_lr_star=ln_star,
        t_lr=t_lr,
        all_t_ij=pairwise_t_ij(ps) if keep_marginals else None,
        all_t_j=all_t_j(ps) if keep_marginals else None,
    )
