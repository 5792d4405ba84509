"""Test execution against a data panel and structured reporting.

run_tests computes all statistics of a panel and compares each global test
against critical values from one of three sources: Monte-Carlo calibration
(exact at any dimension), closed forms (Bonferroni for the max statistics,
chi-square for the likelihood ratio), or the high-dimensional limit laws.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import asymptotics
from .calibrate import (
    CriticalValueTable,
    bonferroni_critical_el,
    bonferroni_critical_pr,
    calibrate_many,
    empirical_pvalue,
    lr_chi2_critical,
    DEFAULT_MASTER_SEED,
    DEFAULT_REPS,
)
from .errors import DomainError, MissingCalibration
from .panel import ReturnsPanel
from .randmat import SeedSpec
from .special import chi2_cdf, f_cdf, normal_cdf, normal_quantile
from .teststats import (
    FactorModelSpec,
    TestStatistics,
    compute_all,
    precision_stats_from_data,
)

TESTS = ("T_el", "T_pr", "T_LR")

SOURCE_CALIBRATED = "calibrated"
SOURCE_BONFERRONI = "bonferroni"
SOURCE_CHI2 = "chi2_asymptotic"
SOURCE_HIGHDIM = "highdim_asymptotic"

# User-facing critical-source requests.
REQUEST_AUTO = "auto"
REQUEST_CALIBRATED = "calibrated"
REQUEST_CLOSED_FORM = "closed-form"
REQUEST_HIGHDIM = "highdim"
REQUESTS = (REQUEST_AUTO, REQUEST_CALIBRATED, REQUEST_CLOSED_FORM, REQUEST_HIGHDIM)

# Calibration is the default up to this multiple of the stacked dimension.
_AUTO_CALIBRATION_T_FACTOR = 200

_SCHEMA = "factorlens/1"


@dataclass(frozen=True)
class TestDecision:
    """One test's comparison: statistic, critical value, p-value, decision."""

    statistic_value: float
    critical_value: float
    source: str
    p_value: float
    reject: bool


@dataclass(frozen=True)
class TestReport:
    """Full outcome of running the three global tests on one dataset."""

    model: FactorModelSpec
    statistics: TestStatistics
    alpha: float
    tests: dict[str, TestDecision]
    calibration: dict | None = None
    regime: dict | None = None

    def to_json_dict(self) -> dict:
        return {
            "schema": _SCHEMA,
            "model": {
                "p": self.model.p,
                "K": self.model.K,
                "T": self.model.T,
                "demeaned": self.model.demeaned,
                "dof_n": self.model.dof_n,
            },
            "alpha": self.alpha,
            "statistics": {
                "t_el": self.statistics.t_el,
                "t_el_argmax": list(self.statistics.t_el_argmax),
                "t_pr": self.statistics.t_pr,
                "t_pr_argmax": self.statistics.t_pr_argmax,
                "ln_t_lr_star": self.statistics.ln_t_lr_star,
                "t_lr": self.statistics.t_lr,
            },
            "tests": {
                name: {
                    "statistic": d.statistic_value,
                    "critical_value": d.critical_value,
                    "source": d.source,
                    "p_value": d.p_value,
                    "reject": d.reject,
                }
                for name, d in self.tests.items()
            },
            "calibration": self.calibration,
            "regime": self.regime,
        }


def _resolve_request(request: str, panel: ReturnsPanel) -> str:
    if request not in REQUESTS:
        raise DomainError(f"unknown critical source {request!r}; pick one of {REQUESTS}")
    if request != REQUEST_AUTO:
        return request
    if panel.T <= _AUTO_CALIBRATION_T_FACTOR * (panel.p + panel.K):
        return REQUEST_CALIBRATED
    warnings.warn(
        "sample too large for default calibration budget; falling back to "
        "high-dimensional asymptotic critical values",
        stacklevel=3,
    )
    return REQUEST_HIGHDIM


def _check_table(table: CriticalValueTable, model: FactorModelSpec, name: str) -> None:
    if (table.p, table.T, table.K, table.demeaned) != (
        model.p,
        model.T,
        model.K,
        model.demeaned,
    ):
        raise MissingCalibration(
            f"table for {name} was calibrated at p={table.p}, T={table.T}, "
            f"K={table.K}, demeaned={table.demeaned}; data has p={model.p}, "
            f"T={model.T}, K={model.K}, demeaned={model.demeaned}"
        )


def run_tests(
    panel: ReturnsPanel,
    *,
    alpha: float = 0.05,
    critical_source: str = REQUEST_AUTO,
    calibration_reps: int = DEFAULT_REPS,
    calibration_seed: int = DEFAULT_MASTER_SEED,
    tables: dict[str, CriticalValueTable] | None = None,
    regime: asymptotics.Regime | None = None,
) -> TestReport:
    """Run all three global tests on an ingested panel.

    With calibrated criticals the p-values are empirical right-tail
    proportions of the retained null samples; otherwise they come from the
    closed-form or limiting distributions (Bonferroni-corrected for the max
    statistics).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    model = FactorModelSpec(p=panel.p, K=panel.K, T=panel.T, demeaned=panel.demean)
    X, F = panel.data_matrices()
    ps = precision_stats_from_data(X, F if panel.K else None, demeaned=panel.demean)
    stats = compute_all(ps)
    source = _resolve_request(critical_source, panel)

    calibration_meta = None
    regime_meta = None
    decisions: dict[str, TestDecision] = {}

    if source == REQUEST_CALIBRATED:
        if tables is None:
            tables = calibrate_many(
                TESTS,
                model.p,
                model.T,
                model.K,
                demeaned=model.demeaned,
                alphas=(alpha,),
                reps=calibration_reps,
                master_seed=calibration_seed,
                keep_null_sample=True,
            )
        observed = {"T_el": stats.t_el, "T_pr": stats.t_pr, "T_LR": stats.t_lr}
        for name in TESTS:
            table = tables.get(name)
            if table is None:
                raise MissingCalibration(f"no calibration table supplied for {name}")
            _check_table(table, model, name)
            crit = table.critical_value(alpha)
            decisions[name] = TestDecision(
                statistic_value=observed[name],
                critical_value=crit,
                source=SOURCE_CALIBRATED,
                p_value=empirical_pvalue(observed[name], table),
                reject=observed[name] > crit,
            )
        any_table = tables[TESTS[0]]
        calibration_meta = {"master_seed": any_table.master_seed, "reps": any_table.reps}
    elif source == REQUEST_CLOSED_FORM:
        decisions["T_el"] = _closed_form_el(stats, model, alpha)
        decisions["T_pr"] = _closed_form_pr(stats, model, alpha)
        decisions["T_LR"] = _closed_form_lr(stats, model, alpha)
    else:  # highdim
        regime = regime or asymptotics.select_regime(
            model.p, model.T, model.K, model.demeaned
        )
        decisions["T_el"] = _highdim_el(stats, model, alpha, regime)
        decisions["T_pr"] = _highdim_pr(stats, model, alpha, regime)
        decisions["T_LR"] = _highdim_lr(stats, model, alpha)
        regime_meta = {
            "kind": regime.kind,
            "c": regime.c,
            "d": regime.d,
            "tlr_sigma_convention": asymptotics.SIGMA_AS_VARIANCE,
        }

    return TestReport(
        model=model,
        statistics=stats,
        alpha=alpha,
        tests=decisions,
        calibration=calibration_meta,
        regime=regime_meta,
    )


def _closed_form_el(stats, model, alpha) -> TestDecision:
    m = model.p * (model.p - 1) / 2.0
    crit = bonferroni_critical_el(alpha, model.p, model.T, model.K, model.demeaned)
    pval = min(1.0, m * (1.0 - f_cdf(stats.t_el, 1, model.dof_n)))
    return TestDecision(stats.t_el, crit, SOURCE_BONFERRONI, pval, stats.t_el > crit)


def _closed_form_pr(stats, model, alpha) -> TestDecision:
    crit = bonferroni_critical_pr(alpha, model.p, model.T, model.K, model.demeaned)
    pval = min(1.0, model.p * (1.0 - f_cdf(stats.t_pr, model.p - 1, model.dof_n)))
    return TestDecision(stats.t_pr, crit, SOURCE_BONFERRONI, pval, stats.t_pr > crit)


def _closed_form_lr(stats, model, alpha) -> TestDecision:
    crit = lr_chi2_critical(alpha, model.p)
    dof = model.p * (model.p - 1) / 2.0
    pval = 1.0 - chi2_cdf(stats.t_lr, dof)
    return TestDecision(stats.t_lr, crit, SOURCE_CHI2, pval, stats.t_lr > crit)


def _highdim_el(stats, model, alpha, regime) -> TestDecision:
    from .special import chi2_quantile, f_quantile

    m = model.p * (model.p - 1) / 2.0
    level = 1.0 - alpha / m
    if regime.kind == asymptotics.CONCENTRATION:
        crit = chi2_quantile(level, 1)
    else:
        crit = f_quantile(level, 1, regime.d + 1.0)
    pval = min(1.0, m * asymptotics.tij_null_pvalue(stats.t_el, regime))
    return TestDecision(stats.t_el, crit, SOURCE_HIGHDIM, pval, stats.t_el > crit)


def _highdim_pr(stats, model, alpha, regime) -> TestDecision:
    if regime.kind == asymptotics.CONCENTRATION:
        z = asymptotics.tj_standardize(
            stats.t_pr, model.p, model.T, model.K, demeaned=model.demeaned
        )
        crit = normal_quantile(1.0 - alpha / model.p)
        pval = min(1.0, model.p * (1.0 - normal_cdf(z)))
        return TestDecision(z, crit, SOURCE_HIGHDIM, pval, z > crit)
    crit = asymptotics.tj_boundary_critical(alpha / model.p, regime.d)
    pval = min(1.0, model.p * asymptotics.tj_boundary_pvalue(stats.t_pr, regime.d))
    return TestDecision(stats.t_pr, crit, SOURCE_HIGHDIM, pval, stats.t_pr > crit)


def _highdim_lr(stats, model, alpha) -> TestDecision:
    z = float(
        asymptotics.tlr_standardize(
            stats.ln_t_lr_star, model.p, model.T, model.K, model.demeaned
        )
    )
    crit = normal_quantile(1.0 - alpha)
    pval = 1.0 - normal_cdf(z)
    return TestDecision(z, crit, SOURCE_HIGHDIM, pval, z > crit)


@dataclass(frozen=True)
class BatchSummary:
    """P-value quantiles over randomly chosen asset subsets."""

    subset_size: int
    num_subsets: int
    quantiles: dict[str, dict[str, float]]  # test -> {min, q1, median, q3, max}

    def to_csv(self, path) -> None:
        lines = ["test,min,q1,median,q3,max"]
        for test in TESTS:
            q = self.quantiles[test]
            lines.append(
                f"{test},{q['min']:.10g},{q['q1']:.10g},{q['median']:.10g},"
                f"{q['q3']:.10g},{q['max']:.10g}"
            )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def batch_subset_test(
    panel: ReturnsPanel,
    subset_size: int,
    num_subsets: int,
    *,
    alpha: float = 0.05,
    critical_source: str = REQUEST_AUTO,
    calibration_reps: int = DEFAULT_REPS,
    calibration_seed: int = DEFAULT_MASTER_SEED,
    subset_seed: int = DEFAULT_MASTER_SEED,
) -> BatchSummary:
    """Repeatedly test random asset subsets and summarize the p-values.

    Subsets are drawn uniformly without replacement from the asset columns
    (factors always included); subset i uses substream (subset_seed, i).
    With calibrated criticals the table is computed once for the subset
    dimensions and reused.
    """
    if not 1 <= subset_size <= panel.p:
        raise DomainError(
            f"subset_size must lie in [1, {panel.p}], got {subset_size}"
        )
    if num_subsets < 1:
        raise DomainError("num_subsets must be positive")
    sub_model = FactorModelSpec(
        p=subset_size, K=panel.K, T=panel.T, demeaned=panel.demean
    )
    source = _resolve_request(critical_source, panel.subset(range(subset_size)))
    tables = None
    if source == REQUEST_CALIBRATED:
        tables = calibrate_many(
            TESTS,
            sub_model.p,
            sub_model.T,
            sub_model.K,
            demeaned=sub_model.demeaned,
            alphas=(alpha,),
            reps=calibration_reps,
            master_seed=calibration_seed,
            keep_null_sample=True,
        )
    pvals = {test: np.empty(num_subsets) for test in TESTS}
    for i in range(num_subsets):
        rng = SeedSpec(subset_seed, i).generator()
        idx = np.sort(rng.choice(panel.p, size=subset_size, replace=False))
        report = run_tests(
            panel.subset(idx),
            alpha=alpha,
            critical_source=source,
            tables=tables,
        )
        for test in TESTS:
            pvals[test][i] = report.tests[test].p_value
    quantiles = {}
    for test in TESTS:
        q = np.quantile(pvals[test], [0.0, 0.25, 0.5, 0.75, 1.0])
        quantiles[test] = {
            "min": float(q[0]),
            "q1": float(q[1]),
            "median": float(q[2]),
            "q3": float(q[3]),
            "max": float(q[4]),
        }
    return BatchSummary(
        subset_size=subset_size, num_subsets=num_subsets, quantiles=quantiles
    )
