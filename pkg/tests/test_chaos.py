import math

import numpy as np
import pytest

from mapod.chaos import (
    ChaosFit,
    UnderdeterminedError,
    build_orthonormal_basis,
    chaos_pod,
    chaos_pod_band,
    fit_chaos,
    loo_q2,
    univariate,
)
from mapod.data import ConditionalUniform, Gaussian, InputSet, InputSpec, SpecError, Uniform
from mapod.pod import a_at_level_with_confidence, pod_x_curves


def two_inputs():
    return InputSet([InputSpec("a", Uniform(0.1, 0.5), "size"), InputSpec("x", Gaussian(0, 1))])


def test_first_polynomials():
    x = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(univariate(Uniform(-1, 1), 1, x)[:, 1], np.sqrt(3) * x)
    np.testing.assert_allclose(univariate(Gaussian(0, 1), 1, x)[:, 1], x)
    np.testing.assert_allclose(univariate(Gaussian(0, 1), 2, x)[:, 2], (x**2 - 1) / np.sqrt(2))
    np.testing.assert_allclose(univariate(Uniform(-1, 1), 2, x)[:, 2],
                               np.sqrt(5) * (3 * x**2 - 1) / 2)


def test_term_count():
    specs = InputSet([InputSpec(f"x{i}", Uniform(0, 1), "size" if i == 0 else "nuisance")
                      for i in range(6)])
    assert len(build_orthonormal_basis(specs, 1)) == 7
    assert len(build_orthonormal_basis(specs, 2)) == math.comb(8, 2)
    assert len(build_orthonormal_basis(specs, 3)) == math.comb(9, 3)


def test_conditional_inputs_rejected():
    specs = InputSet([InputSpec("P1", Uniform(0.1, 0.5), "size"),
                      InputSpec("e", ConditionalUniform("P1", 0.5, 3.0))])
    with pytest.raises(SpecError):
        build_orthonormal_basis(specs, 1)


def _sample(n, seed):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(0.1, 0.5, n), rng.standard_normal(n)])


def test_exact_linear_selects_degree_one():
    x = _sample(50, 0)
    y = 1 + 20 * x[:, 0] - 2 * x[:, 1]
    fit = fit_chaos(x, y, two_inputs(), (1, 2))
    assert fit.degree == 1
    assert fit.sigma_eps < 1e-10
    assert fit.q2 == pytest.approx(1.0, abs=1e-12)


def test_product_selects_degree_two():
    x = _sample(80, 1)
    rng = np.random.default_rng(1)
    y = 10 * x[:, 0] * x[:, 1] + 0.01 * rng.standard_normal(80)
    fit = fit_chaos(x, y, two_inputs(), (1, 2))
    assert fit.degree == 2
    assert fit.q2_by_degree[2] > fit.q2_by_degree[1]


def test_coefficients_match_normal_equations():
    x = _sample(100, 2)
    rng = np.random.default_rng(2)
    y = np.sin(3 * x[:, 0]) + x[:, 1] ** 2 + 0.1 * rng.standard_normal(100)
    fit = fit_chaos(x, y, two_inputs(), (3,))
    psi = fit.basis.evaluate(x)
    ref = np.linalg.solve(psi.T @ psi, psi.T @ y)
    np.testing.assert_allclose(fit.coefficients, ref, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(fit.information_matrix_inverse, np.linalg.inv(psi.T @ psi),
                               rtol=1e-8)


def test_constant_only_predicts_mean():
    x = _sample(30, 3)
    y = np.random.default_rng(3).standard_normal(30)
    fit = fit_chaos(x, y, two_inputs(), (0,))
    np.testing.assert_allclose(fit.predict(x), y.mean())


def test_pure_noise_q2():
    x = _sample(200, 4)
    y = np.random.default_rng(4).standard_normal(200)
    assert loo_q2(x, y, build_orthonormal_basis(two_inputs(), 2)) <= 0.1


def test_underdetermined():
    x = _sample(5, 5)
    with pytest.raises(UnderdeterminedError):
        fit_chaos(x, x[:, 0], two_inputs(), (3,))


def test_variance_identity():
    x = _sample(200, 6)
    rng = np.random.default_rng(6)
    y = 5 * x[:, 0] ** 2 + x[:, 1] + 0.5 * x[:, 0] * x[:, 1] + 0.1 * rng.standard_normal(200)
    fit = fit_chaos(x, y, two_inputs(), (2,))
    mc = _sample(200_000, 7)
    v = fit.predict(mc)
    se = v.var() * np.sqrt(2 / v.size) * 3
    assert abs(v.var() - fit.variance()) < 3 * se


def _constant_in_x_fit(sigma):
    """Chaos surrogate Yhat(a) = 10 a - 2, no dependence on x."""
    specs = two_inputs()
    x = _sample(40, 8)
    y = 10 * x[:, 0] - 2
    fit = fit_chaos(x, y, specs, (1,))
    return fit.with_parameters(fit.coefficients, sigma)


def test_deterministic_surrogate_gives_step():
    fit = _constant_in_x_fit(0.0)
    grid = np.linspace(0.1, 0.5, 41)
    pod = chaos_pod(fit, 1.0, grid, n_mc=1000).pod
    np.testing.assert_array_equal(pod, (10 * grid - 2 > 1.0).astype(float))


def test_symmetric_noise_gives_half():
    fit = _constant_in_x_fit(1.0)
    c = chaos_pod(fit, 1.0, [0.3], n_mc=10_000, seed=3)
    assert abs(c.pod[0] - 0.5) < 3 * 0.005


def test_pod_deterministic_and_bounded():
    x = _sample(100, 9)
    y = 3 + 40 * x[:, 0] + x[:, 1] + np.random.default_rng(9).standard_normal(100)
    fit = fit_chaos(x, y, two_inputs())
    grid = np.linspace(0.1, 0.5, 31)
    p1 = chaos_pod(fit, 13.0, grid, seed=4)
    p2 = chaos_pod(fit, 13.0, grid, seed=4)
    np.testing.assert_array_equal(p1.pod, p2.pod)
    assert np.all((p1.pod >= 0) & (p1.pod <= 1))


@pytest.mark.filterwarnings("ignore::mapod.pod.NonMonotoneWarning")
def test_band_ordering_and_stability():
    x = _sample(100, 10)
    y = 2.5 + 43.5 * x[:, 0] + x[:, 1] + 1.5 * np.random.default_rng(10).standard_normal(100)
    fit = fit_chaos(x, y, two_inputs())
    grid = np.linspace(0.1, 0.5, 81)
    b150 = chaos_pod_band(fit, 13.0, grid, n_sets=150, n_mc=4000, seed=1)
    assert np.all(b150.lower <= b150.curve.pod) and np.all(b150.curve.pod <= b150.upper)
    b1000 = chaos_pod_band(fit, 13.0, grid, n_sets=1000, n_mc=4000, seed=2)
    assert abs(a_at_level_with_confidence(b150) - a_at_level_with_confidence(b1000)) < 0.02


def test_zero_residual_band_collapses():
    x = _sample(60, 11)
    y = 1 + 20 * x[:, 0] + x[:, 1]
    fit = fit_chaos(x, y, two_inputs(), (1,))
    band = chaos_pod_band(fit, 7.0, np.linspace(0.1, 0.5, 21), n_sets=60, n_mc=8000)
    assert np.max(band.upper - band.lower) < 1e-6


def test_tower_property():
    x = _sample(100, 12)
    y = 2.5 + 43.5 * x[:, 0] + 2 * x[:, 1] + np.random.default_rng(12).standard_normal(100)
    fit = fit_chaos(x, y, two_inputs(), (1,))
    grid = np.linspace(0.1, 0.5, 41)
    rng = np.random.default_rng(13)
    curves = pod_x_curves(fit, rng.standard_normal((20_000, 1)), grid, 13.0)
    avg, se_avg = curves.mean(0), curves.std(0, ddof=1) / np.sqrt(20_000)
    mc = chaos_pod(fit, 13.0, grid, n_mc=10_000, seed=5)
    assert np.all(np.abs(avg - mc.pod) <= 3 * np.hypot(se_avg, mc.mc_stderr) + 1e-12)
