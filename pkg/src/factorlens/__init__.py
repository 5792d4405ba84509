"""Tests of whether observed factors explain all linear dependence.

The null hypothesis is that the leading p-by-p block of the joint
precision matrix of (responses, factors) is diagonal. Three global tests
are provided: the maximum pair statistic, the maximum column statistic,
and the likelihood ratio, each with exact finite-sample marginal laws,
Monte-Carlo calibrated critical values, closed-form Bonferroni and
chi-square alternatives, and high-dimensional limit standardizations.
"""

from .asymptotics import (
    Regime,
    select_regime,
    tij_noncentral_approx_power,
    tij_null_pvalue,
    tj_boundary_pvalue,
    tj_noncentral_approx_power,
    tj_standardize,
    tlr_standardize,
)
from .calibrate import (
    CriticalValueTable,
    bonferroni_critical_el,
    bonferroni_critical_pr,
    calibrate,
    calibrate_many,
    empirical_pvalue,
    ks_statistic,
    lr_chi2_critical,
    simulate_null_statistics,
)
from .errors import FactorLensError
from .linalg import (
    LowerTriangular,
    SymMatrix,
    cholesky,
    correlation_from_spd,
    invert_spd,
    log_det_spd,
    top_left_block,
)
from .panel import ReturnsPanel, export_panel_csv, ingest_csv
from .powersim import PowerCurve, ScenarioConfig, build_sigma_u, generate_dataset, run_power_study
from .randmat import SeedSpec, sample_mvn, sample_V11_null, sample_wishart_identity
from .report import TestReport, batch_subset_test, run_tests
from .special import (
    ZjDensityParams,
    chi2_cdf,
    chi2_quantile,
    density_Z,
    f_cdf,
    f_quantile,
    gauss_2f1,
    ln_gamma,
    marginal_power_Z,
    normal_cdf,
    normal_quantile,
)
from .teststats import (
    FactorModelSpec,
    PrecisionStats,
    TestStatistics,
    compute_all,
    precision_stats_from_data,
    stat_ln_t_lr_star,
    stat_t_el,
    stat_t_ij,
    stat_t_j,
    stat_t_lr,
    stat_t_pr,
)

__version__ = "0.1.0"
