"""Alternative-hypothesis scenarios: data generation, size and power estimation.

Four deviations from the null are generated: one changed residual
correlation, one changed precision column, an AR(1) residual correlation
structure, and omitted factors. Nuisance parameters (residual scales,
factor loadings) are redrawn each replicate; replicate r of a study always
uses substream r of the master seed, so datasets are shared across grid
points (common random numbers) and runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibrate import (
    CriticalValueTable,
    bonferroni_critical_el,
    bonferroni_critical_pr,
    lr_chi2_critical,
)
from .errors import (
    BadDimension,
    DomainError,
    MissingCalibration,
    NotPositiveDefinite,
)
from .linalg import SymMatrix, cholesky, invert_spd
from .randmat import SeedSpec
from .teststats import compute_all, precision_stats_from_data

SCENARIOS = ("s1_single_corr", "s2_column", "s3_ar1", "s4_extra_factors")
_ALIASES = {"s1": "s1_single_corr", "s2": "s2_column", "s3": "s3_ar1", "s4": "s4_extra_factors"}

TESTS = ("T_el", "T_pr", "T_LR")

CALIBRATED = "calibrated"
CLOSED_FORM = "bonferroni_or_asymptotic"

MAX_ABS_RHO = 0.5
MAX_K_TILDE = 10


def canonical_scenario(name: str) -> str:
    s = _ALIASES.get(name, name)
    if s not in SCENARIOS:
        raise DomainError(f"unknown scenario {name!r}")
    return s


@dataclass(frozen=True)
class ScenarioConfig:
    """One power-study setting; grids are supplied to run_power_study."""

    scenario: str
    p: int
    K: int
    T: int
    reps: int = 1000
    master_seed: int = 42
    alpha: float = 0.05
    rho: float | None = None
    k_tilde: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", canonical_scenario(self.scenario))
        if self.p + self.K >= self.T:
            raise BadDimension(f"need p + K < T, got p={self.p}, K={self.K}, T={self.T}")
        if self.reps < 1:
            raise DomainError("reps must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.rho is not None:
            _check_rho(self.rho)
        if self.k_tilde is not None:
            _check_k_tilde(self.k_tilde)


def _check_rho(rho: float) -> None:
    if not abs(rho) <= MAX_ABS_RHO:
        raise DomainError(f"|rho| must be <= {MAX_ABS_RHO}, got {rho}")


def _check_k_tilde(k_tilde: int) -> None:
    if int(k_tilde) != k_tilde or not 1 <= k_tilde <= MAX_K_TILDE:
        raise DomainError(f"k_tilde must be an integer in [1, {MAX_K_TILDE}], got {k_tilde}")


def build_sigma_u(scenario: str, p: int, rho: float) -> SymMatrix:
    """Correlation-structure factor of the residual covariance.

    Returns only the correlation part; the per-replicate scale draws are
    applied separately. s1 changes the (1,2) entry, s2 prescribes the first
    row/column of the inverse and inverts it without renormalizing the
    diagonal, s3 is the AR(1) profile rho^|i-j|.
    """
    scenario = canonical_scenario(scenario)
    _check_rho(rho)
    if scenario == "s4_extra_factors":
        raise DomainError("scenario s4 has no rho-driven correlation structure")
    if p < 2:
        raise BadDimension(f"need p >= 2, got {p}")
    if scenario == "s1_single_corr":
        delta = np.eye(p)
        delta[0, 1] = delta[1, 0] = rho
        out = SymMatrix(delta)
    elif scenario == "s2_column":
        m = np.eye(p)
        if rho != 0.0:
            j = np.arange(1, p)  # 0-based column offsets for 1-based j = 2..p
            signs = np.sign(np.sign(rho) ** j)
            m[0, 1:] = signs * abs(rho) / np.sqrt(1.0 + 3.0 * (p - 1) * rho**2 / 2.0)
            m[1:, 0] = m[0, 1:]
        out = invert_spd(SymMatrix(m))
    else:  # s3_ar1
        idx = np.arange(p)
        out = SymMatrix(np.power(rho, np.abs(idx[:, None] - idx[None, :])) if rho != 0.0 else np.eye(p))
    cholesky(out)  # guard: reject non-PD structure (cannot occur for |rho| <= 0.5)
    return out


def generate_dataset(
    cfg: ScenarioConfig, rho_or_ktilde, rep_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """One dataset under the scenario: responses (p x T) and the fitted factors (K x T).

    Scenario s4 simulates with K + k_tilde factors and returns only the
    first K rows as the fitted factor set. Residual scales are uniform on
    [1, 2] and loadings uniform on [-1, 1], redrawn per replicate with the
    draw order: scales, loadings, factors, residual normals.
    """
    rng = SeedSpec(cfg.master_seed, rep_index).generator()
    p, K, T = cfg.p, cfg.K, cfg.T
    if cfg.scenario == "s4_extra_factors":
        k_tilde = int(rho_or_ktilde)
        if k_tilde != 0:  # zero omitted factors is the exact null case
            _check_k_tilde(k_tilde)
        k_total = K + k_tilde
        corr_factor = None
    else:
        _check_rho(rho_or_ktilde)
        k_total = K
        corr_factor = cholesky(build_sigma_u(cfg.scenario, p, rho_or_ktilde)).data
    eta = rng.uniform(1.0, 2.0, p)
    loadings = rng.uniform(-1.0, 1.0, (p, k_total))
    factors = rng.standard_normal((k_total, T))
    shocks = rng.standard_normal((p, T))
    if corr_factor is None:
        residuals = eta[:, None] * shocks
    else:
        residuals = (eta[:, None] * corr_factor) @ shocks
    X = loadings @ factors + residuals
    return X, factors[:K]


@dataclass(frozen=True)
class PowerCurve:
    """Rejection-rate estimates over a grid for each test."""

    scenario: ScenarioConfig
    grid: tuple
    critical_source: str
    rates: dict[str, np.ndarray]
    mc_std_errors: dict[str, np.ndarray]

    def to_csv(self, path) -> None:
        lines = ["scenario,grid_value,test,critical_source,power,mc_se"]
        for test in TESTS:
            for g, r, se in zip(self.grid, self.rates[test], self.mc_std_errors[test]):
                lines.append(
                    f"{self.scenario.scenario},{g:.10g},{test},"
                    f"{self.critical_source},{r:.10g},{se:.10g}"
                )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def _closed_form_criticals(cfg: ScenarioConfig) -> dict[str, float]:
    return {
        "T_el": bonferroni_critical_el(cfg.alpha, cfg.p, cfg.T, cfg.K),
        "T_pr": bonferroni_critical_pr(cfg.alpha, cfg.p, cfg.T, cfg.K),
        "T_LR": lr_chi2_critical(cfg.alpha, cfg.p),
    }


def _calibrated_criticals(
    cfg: ScenarioConfig, tables: dict[str, CriticalValueTable] | None
) -> dict[str, float]:
    if tables is None:
        raise MissingCalibration(
            "critical_source='calibrated' needs a table per test; calibrate first"
        )
    out = {}
    for test in TESTS:
        table = tables.get(test)
        if table is None:
            raise MissingCalibration(f"no calibration table for {test}")
        if (table.p, table.T, table.K) != (cfg.p, cfg.T, cfg.K) or table.demeaned:
            raise MissingCalibration(
                f"table for {test} was calibrated at p={table.p}, T={table.T}, "
                f"K={table.K}, demeaned={table.demeaned}; study needs "
                f"p={cfg.p}, T={cfg.T}, K={cfg.K}, demeaned=False"
            )
        out[test] = table.critical_value(cfg.alpha)
    return out


def run_power_study(
    cfg: ScenarioConfig,
    grid,
    critical_source: str = CALIBRATED,
    tables: dict[str, CriticalValueTable] | None = None,
) -> PowerCurve:
    """Rejection frequency of each test at every grid point.

    The grid holds rho values (s1-s3) or extra-factor counts (s4). With
    critical_source='calibrated', matching tables must be supplied;
    otherwise Bonferroni (max statistics) and chi-square (likelihood ratio)
    critical values are used.
    """
    if critical_source == CALIBRATED:
        criticals = _calibrated_criticals(cfg, tables)
    elif critical_source == CLOSED_FORM:
        criticals = _closed_form_criticals(cfg)
    else:
        raise DomainError(f"unknown critical source {critical_source!r}")
    grid = tuple(grid)
    if not grid:
        raise DomainError("grid must be nonempty")
    counts = {test: np.zeros(len(grid)) for test in TESTS}
    for gi, value in enumerate(grid):
        for rep in range(cfg.reps):
            X, F = generate_dataset(cfg, value, rep)
            ps = precision_stats_from_data(X, F if cfg.K else None)
            stats = compute_all(ps)
            observed = {"T_el": stats.t_el, "T_pr": stats.t_pr, "T_LR": stats.t_lr}
            for test in TESTS:
                if observed[test] > criticals[test]:
                    counts[test][gi] += 1
    rates = {t: counts[t] / cfg.reps for t in TESTS}
    ses = {t: np.sqrt(rates[t] * (1.0 - rates[t]) / cfg.reps) for t in TESTS}
    return PowerCurve(
        scenario=cfg,
        grid=grid,
        critical_source=critical_source,
        rates=rates,
        mc_std_errors=ses,
    )
