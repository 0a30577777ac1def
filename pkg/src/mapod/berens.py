"""Berens and Binomial-Berens POD from a linear fit of the (transformed) signal.

The Berens band samples the exact posterior of ``(b0, b1, sigma^2)`` for
the Gaussian linear model: ``sigma^2 = (N-2) sigma_hat^2 / chi2_{N-2}``,
then ``(b0, b1) | sigma^2 ~ N(beta_hat, sigma^2 (X'X)^-1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .pod import PodBand, PodCurve, band_from_samples, exceedance_probability

__all__ = [
    "SingularDesignError",
    "InsufficientDataError",
    "LinearFit",
    "TestResult",
    "DiagnosticsReport",
    "fit_linear",
    "residual_diagnostics",
    "anderson_darling_pvalue",
    "durbin_watson",
    "berens_pod",
    "berens_pod_band",
    "binomial_pod",
    "binomial_band",
    "clopper_pearson",
    "posterior_draws",
]


class SingularDesignError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class LinearFit:
    beta0: float
    beta1: float
    sigma: float
    xtx_inverse: np.ndarray
    residuals: np.ndarray
    r_squared: float
    n: int
    a: np.ndarray
    y: np.ndarray

    def mean(self, a):
        return self.beta0 + self.beta1 * np.asarray(a, dtype=float)


def fit_linear(a, y) -> LinearFit:
    """Least-squares line ``y = b0 + b1*a`` with ``sigma^2 = RSS / (N - 2)``.

    Two points are accepted and interpolated exactly (``sigma = 0``).
    """
    a = np.array(a, dtype=float)
    y = np.array(y, dtype=float)
    if a.shape != y.shape or a.ndim != 1:
        raise ValueError("a and y must be 1-D arrays of equal length")
    n = a.size
    if n < 2:
        raise InsufficientDataError("need at least two points")
    abar, ybar = a.mean(), y.mean()
    da = a - abar
    sxx = float(da @ da)
    if sxx <= 1e-14 * max(1.0, float(a @ a)):
        raise SingularDesignError("all defect sizes are equal")
    b1 = float(da @ (y - ybar)) / sxx
    b0 = ybar - b1 * abar
    resid = y - b0 - b1 * a
    rss = float(resid @ resid)
    sigma = math.sqrt(rss / (n - 2)) if n > 2 else 0.0
    tss = float(((y - ybar) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    sa = float(a.sum())
    xtx_inv = np.array([[float(a @ a), -sa], [-sa, n]]) / (n * sxx)
    return LinearFit(b0, b1, sigma, xtx_inv, resid, max(0.0, min(1.0, r2)), n, a, y)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float


@dataclass(frozen=True)
class DiagnosticsReport:
    """Residual tests: normality (KS, AD), homoscedasticity (BP), serial correlation (DW).

    KS uses the fitted mean and sd without the Lilliefors correction, so its
    p-value is conservative.
    """

    kolmogorov_smirnov: TestResult
    anderson_darling: TestResult
    breusch_pagan: TestResult
    durbin_watson: TestResult

    def items(self):
        return {
            "kolmogorov_smirnov": self.kolmogorov_smirnov,
            "anderson_darling": self.anderson_darling,
            "breusch_pagan": self.breusch_pagan,
            "durbin_watson": self.durbin_watson,
        }.items()

    def rejected(self, alpha: float = 0.1) -> list[str]:
        return [k for k, t in self.items() if t.p_value < alpha]

    def as_text(self) -> str:
        lines = []
        for k, t in self.items():
            lines.append(f"{k}.statistic = {t.statistic:.6g}")
            lines.append(f"{k}.p_value = {t.p_value:.6g}")
        return "\n".join(lines)


def anderson_darling_pvalue(a2: float, n: int) -> float:
    """p-value of the normal AD statistic with estimated mean and variance.

    D'Agostino & Stephens (1986), table 4.9, with the small-sample
    adjustment ``A2 * (1 + 0.75/n + 2.25/n^2)``.
    """
    a = a2 * (1.0 + 0.75 / n + 2.25 / n**2)
    if a < 0.2:
        p = 1.0 - math.exp(-13.436 + 101.14 * a - 223.73 * a * a)
    elif a < 0.34:
        p = 1.0 - math.exp(-8.318 + 42.796 * a - 59.938 * a * a)
    elif a < 0.6:
        p = math.exp(0.9177 - 4.279 * a - 1.38 * a * a)
    elif a < 153.467:
        p = math.exp(1.2937 - 5.709 * a + 0.0186 * a * a)
    else:
        p = 0.0
    return min(1.0, max(0.0, p))


def durbin_watson(resid) -> float:
    resid = np.asarray(resid, dtype=float)
    return float(np.sum(np.diff(resid) ** 2) / np.sum(resid**2))


def residual_diagnostics(fit: LinearFit) -> DiagnosticsReport:
    """Four classical residual tests; residuals are taken in design (row) order."""
    e = fit.residuals
    n = e.size
    if n < 8:
        raise InsufficientDataError(f"residual tests need N >= 8, got {n}")
    sd = float(np.std(e, ddof=1))
    if sd == 0.0:
        raise InsufficientDataError("residuals are identically zero")

    ks = stats.kstest(e, "norm", args=(float(e.mean()), sd))
    a2 = float(stats.anderson(e, "norm").statistic)

    # Koenker's studentized Breusch-Pagan: n * R^2 of e^2 on a
    e2 = e**2
    lin = fit_linear(fit.a, e2)
    lm = n * lin.r_squared
    bp_p = float(stats.chi2.sf(lm, df=1))

    dw = durbin_watson(e)
    z = (dw - 2.0) / math.sqrt(4.0 / n)
    dw_p = float(2.0 * ndtr(-abs(z)))

    return DiagnosticsReport(
        TestResult(float(ks.statistic), float(ks.pvalue)),
        TestResult(a2, anderson_darling_pvalue(a2, n)),
        TestResult(float(lm), bp_p),
        TestResult(dw, dw_p),
    )


def berens_pod(fit: LinearFit, s: float, grid) -> PodCurve:
    """``POD(a) = 1 - Phi((s - b0 - b1*a) / sigma)``; a step when ``sigma == 0``."""
    grid = np.asarray(grid, dtype=float)
    pod = exceedance_probability(fit.mean(grid), fit.sigma, s)
    return PodCurve(grid, pod, threshold=s, method="berens")


def posterior_draws(beta_hat, sigma_hat: float, cov_unscaled, dof: int, n_draws: int,
                    seed: int = 0, chunk_size: int = 4096):
    """Posterior samples of regression coefficients and noise sd.

    Draw ``k`` of chunk ``c`` comes from ``default_rng([seed, c])`` so the
    result depends only on ``(seed, chunk_size)``.

    Returns ``(betas, sigmas)`` of shapes ``(n_draws, p)`` and ``(n_draws,)``.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    p = beta_hat.size
    cov_unscaled = np.asarray(cov_unscaled, dtype=float)
    # symmetric square root tolerates semi-definite matrices
    w, v = np.linalg.eigh(0.5 * (cov_unscaled + cov_unscaled.T))
    root = v * np.sqrt(np.clip(w, 0.0, None))
    betas = np.empty((n_draws, p))
    sigmas = np.empty(n_draws)
    for c, start in enumerate(range(0, n_draws, chunk_size)):
        m = min(chunk_size, n_draws - start)
        rng = np.random.default_rng([seed, c])
        if dof > 0 and sigma_hat > 0:
            sig2 = dof * sigma_hat**2 / rng.chisquare(dof, size=m)
        else:
            sig2 = np.zeros(m)
        z = rng.standard_normal((m, p))
        betas[start:start + m] = beta_hat + np.sqrt(sig2)[:, None] * (z @ root.T)
        sigmas[start:start + m] = np.sqrt(sig2)
    return betas, sigmas


def berens_pod_band(fit: LinearFit, s: float, grid, n_draws: int = 10_000,
                    level: float = 0.95, seed: int = 0, chunk_size: int = 4096) -> PodBand:
    """Posterior-sampling confidence band around :func:`berens_pod`.

    Pointwise ``(1-level)/2`` and ``1-(1-level)/2`` quantiles of the sampled
    curves; ``one_sided_lower`` is the ``1-level`` quantile.
    """
    if n_draws < 100:
        raise ValueError("n_draws must be >= 100")
    grid = np.asarray(grid, dtype=float)
    betas, sigmas = posterior_draws(
        [fit.beta0, fit.beta1], fit.sigma, fit.xtx_inverse, fit.n - 2, n_draws, seed, chunk_size
    )
    curve = berens_pod(fit, s, grid)
    # quantiles are taken per grid point, so the grid is processed in
    # column blocks to bound memory for large n_draws
    step = max(1, 4_000_000 // n_draws)
    parts = []
    for k in range(0, grid.size, step):
        g = grid[k:k + step]
        mu = betas[:, :1] + betas[:, 1:] * g[None, :]
        samples = exceedance_probability(mu, sigmas[:, None], s)
        sub = PodCurve(g, curve.pod[k:k + step], threshold=s, method="berens")
        parts.append(band_from_samples(sub, samples, level, ("regression-parameters",)))
    if len(parts) == 1:
        return parts[0]
    return PodBand(curve, np.concatenate([b.lower for b in parts]),
                   np.concatenate([b.upper for b in parts]), level, ("regression-parameters",),
                   np.concatenate([b.one_sided_lower for b in parts]))


def binomial_pod(fit: LinearFit, s: float, grid) -> PodCurve:
    """Empirical-residual POD: ``N_s(a) / N`` with ``N_s(a) = #{i: b0 + b1*a + e_i > s}``."""
    grid = np.asarray(grid, dtype=float)
    e = np.sort(fit.residuals)
    counts = e.size - np.searchsorted(e, s - fit.mean(grid), side="right")
    return PodCurve(grid, counts / e.size, counts=counts, threshold=s, method="binomial")


def clopper_pearson(count, n: int, level: float = 0.95):
    """Exact two-sided binomial interval, plus the one-sided lower bound.

    Returns ``(lower, upper, lower_one_sided)`` arrays.
    """
    k = np.asarray(count)
    if not np.issubdtype(k.dtype, np.integer):
        if not np.allclose(k, np.round(k)):
            raise ValueError("counts must be integers")
        k = np.round(k).astype(int)
    if (k < 0).any() or (k > n).any():
        raise ValueError(f"counts must lie in [0, {n}]")
    alpha = 1.0 - level
    with np.errstate(invalid="ignore"):
        lo = np.where(k == 0, 0.0, stats.beta.ppf(alpha / 2, k, n - k + 1))
        up = np.where(k == n, 1.0, stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
        one = np.where(k == 0, 0.0, stats.beta.ppf(alpha, k, n - k + 1))
    return lo, up, one


def binomial_band(counts, n: int, level: float = 0.95, grid=None) -> PodBand:
    """Pointwise Clopper-Pearson band for exceedance counts out of ``n``."""
    counts = np.asarray(counts)
    lo, up, one = clopper_pearson(counts, n, level)
    if grid is None:
        grid = np.arange(counts.size, dtype=float)
    curve = PodCurve(np.asarray(grid, dtype=float), counts / n, counts=counts,
                     method="binomial")
    return PodBand(curve, lo, up, level, ("binomial-sampling",), one)
