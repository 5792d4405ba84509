import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from factorlens import (
    LowerTriangular,
    SeedSpec,
    f_cdf,
    ks_statistic,
    sample_mvn,
    sample_V11_null,
    sample_wishart_identity,
)
from factorlens.calibrate import ks_asymptotic_pvalue
from factorlens.errors import BadDimension
from factorlens.randmat import bartlett_factor
from factorlens.teststats import stat_t_ij


def test_seedspec_determinism():
    a = SeedSpec(7, 3).generator().standard_normal(8)
    b = SeedSpec(7, 3).generator().standard_normal(8)
    assert_allclose(a, b)
    c = SeedSpec(7, 4).generator().standard_normal(8)
    assert not np.allclose(a, c)


def test_seedspec_validation():
    with pytest.raises(BadDimension):
        SeedSpec(-1, 0)
    with pytest.raises(BadDimension):
        SeedSpec(0, 2**64)


def test_wishart_fixed_seed_bit_identical():
    w1 = sample_wishart_identity(4, 9, SeedSpec(5, 1))
    w2 = sample_wishart_identity(4, 9, SeedSpec(5, 1))
    assert np.array_equal(w1.data, w2.data)


def test_wishart_rejects_insufficient_dof():
    with pytest.raises(BadDimension):
        sample_wishart_identity(5, 4, SeedSpec(0, 0))


def test_wishart_scalar_mean():
    # p = 1: W ~ chi-square_n, empirical mean near n
    n, reps = 12, 100_000
    rng = SeedSpec(11, 0).generator()
    draws = rng.chisquare(n, size=reps)  # scalar-case law, drawn directly
    single = np.array(
        [sample_wishart_identity(1, n, SeedSpec(11, r)).data[0, 0] for r in range(4000)]
    )
    tol = 3.0 * math.sqrt(2.0 * n / reps) * n
    assert abs(draws.mean() - n) <= tol
    assert abs(single.mean() - n) <= 3.0 * math.sqrt(2.0 * n / single.size) * n


def test_wishart_mean_matrix():
    p, n, reps = 5, 20, 10_000
    acc = np.zeros((p, p))
    for r in range(reps):
        acc += sample_wishart_identity(p, n, SeedSpec(3, r)).data
    mean = acc / reps
    # E[W] = n I; se of a diagonal entry is sqrt(2n/reps)
    tol = 4.0 * math.sqrt(2.0 * n / reps)
    assert np.abs(mean - n * np.eye(p)).max() <= 4.0 * tol


def test_wishart_marginal_variance():
    # W_11 ~ chi-square_n so its variance is 2n
    p, n, reps = 3, 10, 100_000
    w11 = np.empty(reps)
    for r in range(reps):
        rng = SeedSpec(17, r).generator()
        w11[r] = (bartlett_factor(p, n, rng)[0] ** 2).sum()
    var = w11.var()
    se = math.sqrt(8.0 * n * n / reps)  # var of chi2 sample variance ~ 2*(2n)^2/reps
    assert abs(var - 2.0 * n) <= 5.0 * se


def test_noncentral_chi_square_moments():
    # Y ~ N_p(mu, I): mean of Y'Y is p + mu'mu, variance 2(p + 2 mu'mu)
    p, reps = 6, 100_000
    mu = np.linspace(0.2, 1.2, p)
    lam = float(mu @ mu)
    rng = SeedSpec(23, 0).generator()
    y = rng.standard_normal((reps, p)) + mu
    z = (y * y).sum(axis=1)
    mean_se = math.sqrt(2.0 * (p + 2.0 * lam) / reps)
    assert abs(z.mean() - (p + lam)) <= 5.0 * mean_se
    var_target = 2.0 * (p + 2.0 * lam)
    var_se = var_target * math.sqrt(2.0 / reps) * 2.0
    assert abs(z.var() - var_target) <= 5.0 * var_se


def test_stream_independence():
    n = 100_000
    x = SeedSpec(9, 0).generator().standard_normal(n)
    y = SeedSpec(9, 1).generator().standard_normal(n)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.01
    assert abs(np.corrcoef(x[:-1], y[1:])[0, 1]) < 0.01  # lag-1 cross-correlation


def test_v11_null_determinism_and_dof():
    ps1 = sample_V11_null(4, 20, 2, SeedSpec(1, 5))
    ps2 = sample_V11_null(4, 20, 2, SeedSpec(1, 5))
    assert np.array_equal(ps1.V11.data, ps2.V11.data)
    assert ps1.dof_n == 20 - 2 - 4 + 1
    assert_allclose(ps1.V11.data @ ps1.V11_inv.data, np.eye(4), rtol=1e-9, atol=1e-9)


def test_v11_null_demeaned_uses_T_minus_one():
    ps = sample_V11_null(3, 21, 2, SeedSpec(1, 0), demeaned=True)
    assert ps.t_eff == 20
    assert ps.dof_n == 20 - 2 - 3 + 1


def test_v11_null_rejects_bad_dims():
    with pytest.raises(BadDimension):
        sample_V11_null(10, 12, 2, SeedSpec(0, 0))


def test_v11_diagonal_reciprocal_is_chi_square():
    # p = 1: 1/v11 ~ chi-square with T-K degrees; mean T-K
    T, K, reps = 30, 5, 20_000
    m = T - K
    vals = np.empty(reps)
    for r in range(reps):
        ps = sample_V11_null(1, T, K, SeedSpec(29, r))
        vals[r] = ps.diag_v11_inv[0]
    assert abs(vals.mean() - m) <= 4.0 * math.sqrt(2.0 * m / reps)


def test_tij_null_law_ks():
    # T_21 from null draws follows the exact F law
    p, T, K, reps = 4, 24, 2, 4000
    dof = T - K - p + 1
    vals = np.empty(reps)
    for r in range(reps):
        ps = sample_V11_null(p, T, K, SeedSpec(31, r))
        vals[r] = stat_t_ij(ps, 2, 1)
    d = ks_statistic(np.sort(vals), lambda x: np.array([f_cdf(v, 1, dof) for v in x]))
    assert ks_asymptotic_pvalue(d, reps) > 0.001


def test_sample_mvn_moments_and_determinism():
    L = LowerTriangular(np.array([[1.0, 0.0], [0.8, 0.6]]))
    mean = np.array([1.0, -2.0])
    x1 = sample_mvn(mean, L, SeedSpec(2, 2))
    x2 = sample_mvn(mean, L, SeedSpec(2, 2))
    assert_allclose(x1, x2)
    reps = 100_000
    rng = SeedSpec(2, 3).generator()
    draws = mean + rng.standard_normal((reps, 2)) @ L.data.T
    assert np.abs(draws.mean(axis=0) - mean).max() <= 4.0 / math.sqrt(reps) * 1.2
    cov = np.cov(draws.T)
    assert_allclose(cov, L.data @ L.data.T, atol=0.02)


def test_sample_mvn_dimension_check():
    L = LowerTriangular(np.eye(3))
    with pytest.raises(BadDimension):
        sample_mvn(np.zeros(2), L, SeedSpec(0, 0))
