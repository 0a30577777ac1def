import numpy as np
import pytest
import statsmodels.api as sm
from scipy import stats
from scipy.optimize import brentq
from scipy.special import ndtr
from statsmodels.stats.diagnostic import het_breuschpagan, normal_ad
from statsmodels.stats.stattools import durbin_watson as sm_durbin_watson

from mapod.berens import (
    InsufficientDataError,
    SingularDesignError,
    anderson_darling_pvalue,
    berens_pod,
    berens_pod_band,
    binomial_band,
    binomial_pod,
    clopper_pearson,
    durbin_watson,
    fit_linear,
    residual_diagnostics,
)
from mapod.pod import a_at_level_with_confidence
from mapod.synthetic import SyntheticModelSpec, make_dataset, threshold_for_a90


def synthetic(seed=0, n=100):
    ds, _ = make_dataset(SyntheticModelSpec(seed=seed), n)
    return ds.column("a"), ds.response


def test_noise_free_line():
    a = np.linspace(0, 1, 5)
    fit = fit_linear(a, 2 + 3 * a)
    assert fit.beta0 == pytest.approx(2)
    assert fit.beta1 == pytest.approx(3)
    assert fit.sigma == pytest.approx(0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1)


def test_two_points():
    fit = fit_linear([0, 1], [1, 2])
    assert (fit.beta0, fit.beta1) == pytest.approx((1, 1))
    np.testing.assert_allclose(fit.residuals, 0, atol=1e-15)


def test_degenerate_inputs():
    with pytest.raises(SingularDesignError):
        fit_linear([0.3, 0.3, 0.3], [1, 2, 3])
    with pytest.raises(InsufficientDataError):
        fit_linear([0.3], [1])


@pytest.mark.parametrize("seed", range(5))
def test_matches_normal_equations(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-3, 7, 100)
    y = rng.normal(1, 2) + rng.normal(0, 5) * a + rng.normal(0, 1, 100)
    fit = fit_linear(a, y)
    X = np.column_stack([np.ones_like(a), a])
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    np.testing.assert_allclose([fit.beta0, fit.beta1], beta, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(fit.xtx_inverse, np.linalg.inv(X.T @ X), rtol=1e-10)
    rss = np.sum((y - X @ beta) ** 2)
    assert fit.sigma == pytest.approx(np.sqrt(rss / 98), rel=1e-10)


def test_diagnostics_against_statsmodels():
    a, y = synthetic(0)
    fit = fit_linear(a, y)
    rep = residual_diagnostics(fit)
    e = fit.residuals
    X = sm.add_constant(a)
    lm, lm_p, _, _ = het_breuschpagan(e, X)
    assert rep.breusch_pagan.statistic == pytest.approx(lm, rel=1e-8)
    assert rep.breusch_pagan.p_value == pytest.approx(lm_p, rel=1e-8)
    ad, ad_p = normal_ad(e)
    assert rep.anderson_darling.statistic == pytest.approx(ad, rel=1e-6)
    assert rep.anderson_darling.p_value == pytest.approx(ad_p, rel=1e-6)
    assert rep.durbin_watson.statistic == pytest.approx(sm_durbin_watson(e), rel=1e-12)
    ks = stats.kstest(e, stats.norm(e.mean(), e.std(ddof=1)).cdf)
    assert rep.kolmogorov_smirnov.p_value == pytest.approx(ks.pvalue, rel=1e-8)


def test_null_residuals_pass():
    rng = np.random.default_rng(4)
    a = rng.uniform(0, 1, 500)
    fit = fit_linear(a, 1 + 2 * a + rng.standard_normal(500))
    rep = residual_diagnostics(fit)
    assert all(t.p_value > 0.01 for _, t in rep.items())


def test_heteroscedastic_residuals_flagged():
    rng = np.random.default_rng(5)
    a = rng.uniform(0.1, 1.0, 300)
    fit = fit_linear(a, 1 + 2 * a + 3 * a * rng.standard_normal(300))
    assert residual_diagnostics(fit).breusch_pagan.p_value < 0.01


def test_durbin_watson_extremes():
    alt = np.tile([1.0, -1.0], 50)
    assert durbin_watson(alt) == pytest.approx(4 * 99 / 100)
    rng = np.random.default_rng(6)
    e = np.zeros(1000)
    for t in range(1, 1000):
        e[t] = 0.99 * e[t - 1] + rng.standard_normal()
    assert durbin_watson(e - e.mean()) < 0.1


def test_diagnostics_need_enough_points():
    with pytest.raises(ValueError):
        residual_diagnostics(fit_linear(np.arange(5.0), np.arange(5.0) ** 2))


def test_pod_reference_points():
    a = np.linspace(0, 1, 20)
    rng = np.random.default_rng(0)
    fit = fit_linear(a, 1 + 4 * a + rng.normal(0, 0.3, 20))
    a_mid = (2.0 - fit.beta0) / fit.beta1
    assert berens_pod(fit, 2.0, [a_mid]).pod[0] == pytest.approx(0.5)
    a_plus = (2.0 + fit.sigma - fit.beta0) / fit.beta1
    assert berens_pod(fit, 2.0, [a_plus]).pod[0] == pytest.approx(0.841344746068543, abs=1e-12)
    # strictly increasing wherever the curve is not saturated in float64
    half = 5 * fit.sigma / fit.beta1
    grid = np.linspace(a_mid - half, a_mid + half, 50)
    assert np.all(np.diff(berens_pod(fit, 2.0, grid).pod) > 0)


def test_deterministic_miss():
    a = np.linspace(0, 1, 5)
    fit = fit_linear(a, 1 + a)
    assert berens_pod(fit, 10.0, [0.5]).pod[0] == 0.0
    assert berens_pod(fit, 1.2, [0.5]).pod[0] == 1.0


def test_zero_noise_band_collapses():
    a = np.linspace(0, 1, 10)
    fit = fit_linear(a, 1 + a)
    grid = np.linspace(0, 1, 11)
    band = berens_pod_band(fit, 1.55, grid, n_draws=500)
    np.testing.assert_array_equal(band.lower, band.curve.pod)
    np.testing.assert_array_equal(band.upper, band.curve.pod)


@pytest.mark.parametrize("seed", range(4))
def test_band_encloses_estimate(seed):
    a, y = synthetic(seed)
    grid = np.linspace(0.1, 0.5, 41)
    band = berens_pod_band(fit_linear(a, y), threshold_for_a90(SyntheticModelSpec()), grid,
                           n_draws=2000, seed=seed)
    assert np.all(band.lower <= band.curve.pod)
    assert np.all(band.curve.pod <= band.upper)
    assert np.all(band.confidence_lower <= band.curve.pod)
    assert np.all(band.lower <= band.confidence_lower)


def test_band_converges_to_high_draw_reference():
    a, y = synthetic(0)
    fit = fit_linear(a, y)
    s = threshold_for_a90(SyntheticModelSpec())
    grid = np.linspace(0.25, 0.35, 201)
    ref = a_at_level_with_confidence(berens_pod_band(fit, s, grid, n_draws=1_000_000, seed=11))
    est = a_at_level_with_confidence(berens_pod_band(fit, s, grid, n_draws=10_000, seed=0))
    twice = a_at_level_with_confidence(berens_pod_band(fit, s, grid, n_draws=20_000, seed=0))
    assert abs(est - ref) < 0.02
    assert abs(twice - est) < 0.005


def test_posterior_marginals():
    """sigma^2 draws follow (N-2) s^2 / chi2_{N-2}; beta is centred on beta_hat."""
    from mapod.berens import posterior_draws
    beta, sig = posterior_draws(np.array([1.0, 2.0]), 0.5, np.eye(2) * 0.01, 20, 40_000, seed=1)
    s2 = sig**2
    ref = stats.invgamma(10, scale=10 * 0.25)
    assert stats.kstest(s2, ref.cdf).pvalue > 1e-3
    np.testing.assert_allclose(beta.mean(axis=0), [1.0, 2.0], atol=0.01)


def test_binomial_hand_enumeration():
    """Residuals {-1, 0, +1} and mean exactly at s: only +1 exceeds."""
    a = np.array([0.0, 1.0, 2.0])
    y = np.array([0.0, 2.0, 1.0])  # slope 0.5, intercept 0.5, residuals -0.5, 1, -0.5
    fit = fit_linear(a, y)
    e = fit.residuals
    np.testing.assert_allclose(np.sort(e), [-0.5, -0.5, 1.0])
    mean_hit = (2.0 - fit.beta0) / fit.beta1
    c = binomial_pod(fit, 2.0, [mean_hit])
    assert c.counts[0] == 1
    assert c.pod[0] == pytest.approx(1 / 3)


def test_binomial_matches_recount_and_is_monotone():
    a, y = synthetic(1)
    fit = fit_linear(a, y)
    s = 13.0
    grid = np.linspace(0.05, 0.6, 300)
    curve = binomial_pod(fit, s, grid)
    brute = [(fit.mean(g) + fit.residuals > s).sum() for g in grid]
    np.testing.assert_array_equal(curve.counts, brute)
    assert np.all(np.diff(curve.pod) >= 0)
    lo_grid = binomial_pod(fit, s, [-10.0, 10.0])
    np.testing.assert_array_equal(lo_grid.pod, [0.0, 1.0])


def _cp_oracle(k, n, level):
    alpha = 1 - level
    lo = 0.0 if k == 0 else brentq(lambda p: stats.binom.sf(k - 1, n, p) - alpha / 2, 1e-15, 1 - 1e-15)
    up = 1.0 if k == n else brentq(lambda p: stats.binom.cdf(k, n, p) - alpha / 2, 1e-15, 1 - 1e-15)
    return lo, up


@pytest.mark.parametrize("k,n", [(0, 10), (1, 10), (5, 10), (10, 10), (90, 100), (37, 59)])
def test_clopper_pearson_against_tail_oracle(k, n):
    lo, up, _ = clopper_pearson(k, n, 0.95)
    ref = _cp_oracle(k, n, 0.95)
    assert float(lo) == pytest.approx(ref[0], abs=1e-9)
    assert float(up) == pytest.approx(ref[1], abs=1e-9)


def test_clopper_pearson_reference_interval():
    lo, up, one = clopper_pearson(90, 100, 0.95)
    assert float(lo) == pytest.approx(0.8238, abs=1e-4)
    assert float(up) == pytest.approx(0.9510, abs=1e-4)
    assert float(lo) < float(one) < 0.9


def test_binomial_band_boundaries():
    band = binomial_band(np.array([0, 5, 10]), 10, 0.95, grid=np.array([0.1, 0.2, 0.3]))
    assert band.lower[0] == 0.0
    assert band.upper[-1] == 1.0
    assert np.all(band.lower <= band.curve.pod) and np.all(band.curve.pod <= band.upper)
