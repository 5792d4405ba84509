"""Monte-Carlo calibration of null critical values and empirical p-values.

Because every statistic is invariant under positive diagonal rescaling of
the precision block, the null distribution can be simulated once and for
all from Wishart draws with identity parameter; critical values are the
empirical upper quantiles of those null samples. Replicate r always uses
random substream r of the master seed, so tables are bit-identical no
matter how the replicates are scheduled or chunked.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics
from .errors import (
    BadDimension,
    DomainError,
    EmptySample,
    MissingNullSample,
)
from .randmat import SeedSpec, bartlett_factor
from .special import chi2_quantile, f_quantile

DEFAULT_MASTER_SEED = 42
DEFAULT_ALPHAS = (0.1, 0.05, 0.01, 0.005)
DEFAULT_REPS = 100_000
MIN_REPS = 1_000

# Statistics a table can be calibrated for.
STATISTICS = ("T_el", "T_pr", "T_LR", "ln_T_LR_star", "T_LR_standardized")

# Additional single-coordinate statistics available from the simulation
# engine for distribution checks (first pair, first column).
MARGINAL_STATISTICS = ("T_ij_21", "T_j_1")

_SCHEMA = "factorlens/1"
_DF_CONVENTION = "wishart(T_eff - K) for the inverse precision block"


@dataclass(frozen=True)
class CriticalValueTable:
    """Empirical null quantiles of one statistic at fixed dimensions."""

    statistic: str
    p: int
    T: int
    K: int
    demeaned: bool
    reps: int
    master_seed: int
    alphas: tuple[float, ...]
    critical_values: tuple[float, ...]
    null_sample: np.ndarray | None = field(default=None, repr=False)
    df_convention: str = _DF_CONVENTION

    def __post_init__(self) -> None:
        if self.statistic not in STATISTICS:
            raise DomainError(f"unknown statistic {self.statistic!r}")
        if self.reps < MIN_REPS:
            raise DomainError(f"reps must be >= {MIN_REPS}, got {self.reps}")
        if len(self.alphas) != len(self.critical_values):
            raise BadDimension("alphas and critical_values differ in length")
        order = np.argsort(self.alphas)
        cv = np.asarray(self.critical_values)[order]
        if np.any(np.diff(cv) > 1e-12):
            raise DomainError("critical values must be nonincreasing in alpha")
        if self.null_sample is not None:
            arr = np.asarray(self.null_sample, dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, "null_sample", arr)

    def critical_value(self, alpha: float) -> float:
        for a, cv in zip(self.alphas, self.critical_values):
            if math.isclose(a, alpha, rel_tol=1e-9, abs_tol=1e-12):
                return cv
        raise DomainError(f"alpha={alpha} not in table alphas {self.alphas}")

    def to_json_dict(self) -> dict:
        doc = {
            "schema": _SCHEMA,
            "statistic": self.statistic,
            "p": self.p,
            "T": self.T,
            "K": self.K,
            "demeaned": self.demeaned,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "alphas": list(self.alphas),
            "critical_values": list(self.critical_values),
            "df_convention": self.df_convention,
            "null_sample": None
            if self.null_sample is None
            else self.null_sample.tolist(),
        }
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CriticalValueTable":
        sample = doc.get("null_sample")
        return cls(
            statistic=doc["statistic"],
            p=int(doc["p"]),
            T=int(doc["T"]),
            K=int(doc["K"]),
            demeaned=bool(doc["demeaned"]),
            reps=int(doc["reps"]),
            master_seed=int(doc["master_seed"]),
            alphas=tuple(float(a) for a in doc["alphas"]),
            critical_values=tuple(float(v) for v in doc["critical_values"]),
            null_sample=None if sample is None else np.asarray(sample, dtype=float),
            df_convention=doc.get("df_convention", _DF_CONVENTION),
        )


def _default_chunk(p: int) -> int:
    # keep per-chunk work arrays near ~64 MiB
    return max(16, min(4096, 8_388_608 // (p * p)))


def simulate_null_statistics(
    statistics,
    p: int,
    T: int,
    K: int,
    *,
    reps: int,
    master_seed: int,
    demeaned: bool = False,
    chunk_size: int | None = None,
    scale_diag: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Null samples of the requested statistics over seeded Wishart replicates.

    Replicate r draws its Bartlett factor from substream (master_seed, r);
    the linear algebra is evaluated in chunks but each replicate's result
    is independent of the chunking. scale_diag, when given, replaces the
    identity Wishart parameter with diag(scale_diag)^2; it exists to verify
    the diagonal-rescaling invariance of the calibration and must not change
    any statistic.
    """
    statistics = tuple(statistics)
    known = set(STATISTICS) | set(MARGINAL_STATISTICS)
    for s in statistics:
        if s not in known:
            raise DomainError(f"unknown statistic {s!r}")
    t_eff = T - 1 if demeaned else T
    if p < 2 or p + K >= t_eff:
        raise BadDimension(f"need 2 <= p and p + K < T_eff, got p={p}, K={K}, T_eff={t_eff}")
    if reps < 1:
        raise DomainError("reps must be positive")
    n = t_eff - K
    dof = t_eff - K - p + 1

    need_pairs = bool({"T_el", "T_ij_21"} & set(statistics))
    need_cols = bool({"T_pr", "T_j_1"} & set(statistics))
    lr_keys = {"T_LR", "ln_T_LR_star", "T_LR_standardized"} & set(statistics)

    if "T_LR" in lr_keys:
        rho = 1.0 - (2.0 * p + 5.0) / (6.0 * (t_eff - K))
        if rho <= 0.0:
            raise DomainError(f"Bartlett correction factor rho={rho:.4f} not positive")

    rows, cols = (np.tril_indices(p, -1) if need_pairs else (None, None))
    eye = np.eye(p)
    chunk = chunk_size or _default_chunk(p)
    out = {s: np.empty(reps) for s in statistics}

    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        m = stop - start
        a = np.empty((m, p, p))
        for r in range(start, stop):
            a[r - start] = bartlett_factor(p, n, SeedSpec(master_seed, r).generator())
        if scale_diag is not None:
            a *= np.asarray(scale_diag, dtype=float)[:, None]
        diag_w = np.einsum("rij,rij->ri", a, a)
        diag_a = np.diagonal(a, axis1=1, axis2=2)
        ln_det_w = 2.0 * np.log(diag_a).sum(axis=1)

        if need_pairs or need_cols:
            a_inv = np.linalg.solve(a, eye)
            diag_v = np.einsum("rkj,rkj->rj", a_inv, a_inv)
        if need_cols:
            t_cols = (dof / (p - 1)) * np.maximum(diag_v * diag_w - 1.0, 0.0)
            if "T_pr" in out:
                out["T_pr"][start:stop] = t_cols.max(axis=1)
            if "T_j_1" in out:
                out["T_j_1"][start:stop] = t_cols[:, 0]
        if need_pairs:
            v = np.matmul(np.swapaxes(a_inv, 1, 2), a_inv)
            vij = v[:, rows, cols]
            g2 = vij * vij / (diag_v[:, rows] * diag_v[:, cols])
            tij = dof * g2 / (1.0 - g2)
            if "T_el" in out:
                out["T_el"][start:stop] = tij.max(axis=1)
            if "T_ij_21" in out:
                out["T_ij_21"][start:stop] = tij[:, 0]
        if lr_keys:
            ln_star = np.maximum(
                -(t_eff / 2.0) * (ln_det_w - np.log(diag_w).sum(axis=1)), 0.0
            )
            if "ln_T_LR_star" in out:
                out["ln_T_LR_star"][start:stop] = ln_star
            if "T_LR" in out:
                out["T_LR"][start:stop] = 2.0 * rho * ((t_eff - K) / t_eff) * ln_star
            if "T_LR_standardized" in out:
                out["T_LR_standardized"][start:stop] = asymptotics.tlr_standardize(
                    ln_star, p, T, K, demeaned
                )
    return out


def calibrate_many(
    statistics,
    p: int,
    T: int,
    K: int,
    *,
    demeaned: bool = False,
    alphas=DEFAULT_ALPHAS,
    reps: int = DEFAULT_REPS,
    master_seed: int = DEFAULT_MASTER_SEED,
    keep_null_sample: bool = False,
    chunk_size: int | None = None,
) -> dict[str, CriticalValueTable]:
    """Calibrate several statistics from one shared set of null draws."""
    statistics = tuple(statistics)
    for s in statistics:
        if s not in STATISTICS:
            raise DomainError(f"cannot calibrate unknown statistic {s!r}")
    if reps < MIN_REPS:
        raise DomainError(f"reps must be >= {MIN_REPS}, got {reps}")
    alphas = tuple(float(a) for a in alphas)
    if not alphas or not all(0.0 < a < 1.0 for a in alphas):
        raise DomainError(f"alphas must lie in (0, 1), got {alphas}")
    samples = simulate_null_statistics(
        statistics,
        p,
        T,
        K,
        reps=reps,
        master_seed=master_seed,
        demeaned=demeaned,
        chunk_size=chunk_size,
    )
    tables = {}
    for s in statistics:
        sample = np.sort(samples[s])
        levels = [1.0 - a for a in alphas]
        cv = np.quantile(sample, levels)  # type-7 linear interpolation
        tables[s] = CriticalValueTable(
            statistic=s,
            p=p,
            T=T,
            K=K,
            demeaned=demeaned,
            reps=reps,
            master_seed=master_seed,
            alphas=alphas,
            critical_values=tuple(float(x) for x in cv),
            null_sample=sample if keep_null_sample else None,
        )
    return tables


def calibrate(
    statistic: str,
    p: int,
    T: int,
    K: int,
    *,
    demeaned: bool = False,
    alphas=DEFAULT_ALPHAS,
    reps: int = DEFAULT_REPS,
    master_seed: int = DEFAULT_MASTER_SEED,
    keep_null_sample: bool = False,
    chunk_size: int | None = None,
) -> CriticalValueTable:
    """Monte-Carlo critical values for one statistic."""
    return calibrate_many(
        (statistic,),
        p,
        T,
        K,
        demeaned=demeaned,
        alphas=alphas,
        reps=reps,
        master_seed=master_seed,
        keep_null_sample=keep_null_sample,
        chunk_size=chunk_size,
    )[statistic]


def empirical_pvalue(
    observed: float, table: CriticalValueTable, add_one: bool = False
) -> float:
    """Right-tail proportion of the retained null sample at or above observed.

    The plain proportion can be exactly zero; add_one=True switches to the
    (1 + count) / (1 + reps) convention.
    """
    if table.null_sample is None:
        raise MissingNullSample(
            "table was calibrated without keep_null_sample=True"
        )
    sample = table.null_sample  # sorted ascending
    count = sample.size - int(np.searchsorted(sample, observed, side="left"))
    if add_one:
        return (1.0 + count) / (1.0 + sample.size)
    return count / sample.size


def bonferroni_critical_el(
    alpha: float, p: int, T: int, K: int, demeaned: bool = False
) -> float:
    """Bonferroni critical value for the max pair statistic."""
    dof = _dof_n(p, T, K, demeaned)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return f_quantile(1.0 - 2.0 * alpha / (p * (p - 1)), 1, dof)


def bonferroni_critical_pr(
    alpha: float, p: int, T: int, K: int, demeaned: bool = False
) -> float:
    """Bonferroni critical value for the max column statistic."""
    dof = _dof_n(p, T, K, demeaned)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return f_quantile(1.0 - alpha / p, p - 1, dof)


def lr_chi2_critical(alpha: float, p: int) -> float:
    """Chi-square critical value for the corrected likelihood-ratio statistic."""
    if p < 2:
        raise DomainError(f"need p >= 2, got {p}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return chi2_quantile(1.0 - alpha, p * (p - 1) / 2.0)


def _dof_n(p: int, T: int, K: int, demeaned: bool) -> int:
    t_eff = T - 1 if demeaned else T
    dof = t_eff - K - p + 1
    if p < 2 or dof < 1:
        raise BadDimension(f"invalid dimensions p={p}, T={T}, K={K}, demeaned={demeaned}")
    return dof


def ks_statistic(sample: np.ndarray, cdf) -> float:
    """Sup-norm distance between the empirical CDF of a sorted sample and cdf."""
    s = np.asarray(sample, dtype=np.float64)
    if s.size == 0:
        raise EmptySample("ks_statistic needs a nonempty sample")
    if np.any(np.diff(s) < 0):
        raise DomainError("sample must be sorted ascending")
    values = np.asarray(cdf(s), dtype=float)
    if values.shape != s.shape:
        values = np.asarray([cdf(x) for x in s], dtype=float)
    n = s.size
    grid = np.arange(1, n + 1) / n
    d_plus = float(np.max(grid - values))
    d_minus = float(np.max(values - (grid - 1.0 / n)))
    return max(d_plus, d_minus)


def ks_asymptotic_pvalue(d: float, n: int) -> float:
    """Asymptotic Kolmogorov p-value of a KS distance d on n observations."""
    from scipy.special import kolmogorov

    return float(kolmogorov(d * math.sqrt(n)))


def save_tables_json(tables, path) -> None:
    """Write one or more tables as a single JSON document."""
    docs = [t.to_json_dict() for t in tables]
    payload = {"schema": _SCHEMA, "tables": docs}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_tables_json(path) -> list[CriticalValueTable]:
    """Read tables written by save_tables_json (or a single-table document)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict) and "tables" in payload:
        docs = payload["tables"]
    else:
        docs = [payload]
    return [CriticalValueTable.from_json_dict(d) for d in docs]


def tables_to_csv(tables, path) -> None:
    """Flat CSV export: statistic,p,T,K,alpha,critical_value."""
    lines = ["statistic,p,T,K,alpha,critical_value"]
    for t in tables:
        for a, cv in zip(t.alphas, t.critical_values):
            lines.append(f"{t.statistic},{t.p},{t.T},{t.K},{a:.10g},{cv:.10g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
