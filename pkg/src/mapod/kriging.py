"""Universal kriging with a linear trend in the defect size and an anisotropic
Matern-5/2 covariance, plus kriging-based POD curves and bands.

Model: ``Y(x) = b0 + b1*a + Z(x)`` with ``Cov Z = sigma2 * k(r)``,
``r^2 = sum_k ((x_k - x'_k) / theta_k)^2`` computed on standardized inputs.
An optional nugget adds ``nugget`` to the diagonal (observation noise).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.special import ndtri

from .data import InputSet
from .doe import sobol_sequence
from .pod import PodBand, PodCurve, exceedance_probability

__all__ = [
    "matern52",
    "KrigingOptions",
    "KrigingFit",
    "PredictiveDistribution",
    "KrigingFitError",
    "ConditioningError",
    "fit_kriging",
    "kriging_predict",
    "kriging_q2",
    "loo_predictions",
    "profiled_loglik",
    "conditional_paths",
    "kriging_pod",
    "kriging_pod_band",
]

SQRT5 = math.sqrt(5.0)
JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


class KrigingFitError(RuntimeError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class ConditioningError(ValueError):
    pass


def matern52(r):
    """Matern-5/2 correlation ``(1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r)``."""
    r = np.asarray(r, dtype=float)
    return (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)


def _scaled_dist(x1, x2, theta):
    a = x1 / theta
    b = x2 / theta
    d2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.sqrt(np.maximum(d2, 0.0))


def _corr(x1, x2, theta):
    return matern52(_scaled_dist(x1, x2, theta))


def _cholesky_ladder(mat: np.ndarray, scale: float = 1.0):
    """Cholesky factor with the smallest jitter from :data:`JITTER_LADDER` that works."""
    n = mat.shape[0]
    for jit in JITTER_LADDER:
        try:
            return linalg.cholesky(mat + jit * scale * np.eye(n), lower=True), jit
        except linalg.LinAlgError:
            continue
    raise ConditioningError("covariance not positive definite even with 1e-6 jitter")


@dataclass(frozen=True)
class KrigingOptions:
    """Fit settings.

    With ``estimate_nugget`` a homoscedastic noise variance is estimated by
    maximum likelihood (as a ratio to ``sigma2``); otherwise the model
    interpolates the data. ``theta`` (standardized lengthscales) and
    ``nugget_ratio`` skip the likelihood search and keep the given values;
    ``beta`` and ``sigma2`` are still profiled.
    """

    estimate_nugget: bool = False
    n_starts: int = 10
    theta_bounds: tuple[float, float] = (1e-2, 1e2)
    nugget_ratio_bounds: tuple[float, float] = (1e-8, 1e3)
    maxiter: int = 2000
    theta: tuple[float, ...] | None = None
    nugget_ratio: float | None = None


@dataclass(frozen=True)
class PredictiveDistribution:
    mean: np.ndarray
    variance: np.ndarray

    @property
    def sd(self):
        return np.sqrt(self.variance)


@dataclass(frozen=True)
class KrigingFit:
    specs: InputSet
    x: np.ndarray
    y: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    theta: np.ndarray
    sigma2: float
    nugget: float
    beta: np.ndarray
    chol: np.ndarray
    jitter: float
    log_likelihood: float
    q2: float = float("nan")
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size_index(self) -> int:
        return self.specs.size_index

    @property
    def n_inputs(self) -> int:
        return self.x.shape[1]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def theta_raw(self) -> np.ndarray:
        """Lengthscales in the units of the raw inputs."""
        return self.theta * self.x_scale

    @property
    def nugget_ratio(self) -> float:
        return self.nugget / self.sigma2 if self.sigma2 > 0 else 0.0

    def _std(self, pts):
        return (pts - self.x_mean) / self.x_scale

    def trend_matrix(self, pts):
        pts = np.atleast_2d(pts)
        return np.column_stack([np.ones(pts.shape[0]), pts[:, self.size_index]])

    def _parts(self):
        c = self._cache
        if not c:
            F = self.trend_matrix(self.x)
            Linv = linalg.solve_triangular(self.chol, np.eye(self.n), lower=True)
            W = Linv @ F
            ftf = W.T @ W
            c["Linv"] = Linv
            c["W"] = W
            c["ftf_chol"] = linalg.cholesky(ftf, lower=True)
            c["alpha"] = Linv.T @ (Linv @ (self.y - F @ self.beta))
        return c

    def predict_mean_sd(self, points, include_nugget: bool = True):
        pd = kriging_predict(self, points, include_nugget=include_nugget)
        return pd.mean, pd.sd

    def report(self) -> str:
        names = self.specs.names
        lines = [f"beta = ({self.beta[0]:.6g}, {self.beta[1]:.6g})",
                 f"sigma2 = {self.sigma2:.6g}",
                 f"nugget = {self.nugget:.6g}",
                 f"jitter = {self.jitter:.1e}",
                 f"log_likelihood = {self.log_likelihood:.6g}",
                 f"Q2 = {self.q2:.6g}"]
        for j, nm in enumerate(names):
            lines.append(f"theta[{nm}] = {self.theta[j]:.6g} (standardized), "
                         f"{self.theta_raw[j]:.6g} (raw)")
        return "\n".join(lines)


def _profile(xs, y, F, theta, ratio):
    """Profiled quantities at ``(theta, nugget ratio)``; None if not factorizable."""
    n = xs.shape[0]
    R = _corr(xs, xs, theta)
    if ratio > 0:
        R[np.diag_indices(n)] += ratio
    try:
        L, jit = _cholesky_ladder(R)
    except ConditioningError:
        return None
    Wy = linalg.solve_triangular(L, y, lower=True)
    WF = linalg.solve_triangular(L, F, lower=True)
    beta, *_ = np.linalg.lstsq(WF, Wy, rcond=None)
    res = Wy - WF @ beta
    sigma2 = max(float(res @ res) / n, 1e-300)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    ll = -0.5 * (n * math.log(2 * math.pi * sigma2) + n + logdet)
    return ll, beta, sigma2, L, jit


def profiled_loglik(fit: KrigingFit, theta=None, nugget_ratio: float | None = None) -> float:
    """Profiled log-likelihood at ``theta`` (standardized units) on the fit's data."""
    theta = fit.theta if theta is None else np.asarray(theta, dtype=float)
    ratio = fit.nugget_ratio if nugget_ratio is None else nugget_ratio
    out = _profile(fit._std(fit.x), fit.y, fit.trend_matrix(fit.x), theta, ratio)
    return -math.inf if out is None else out[0]


def fit_kriging(design, y, specs: InputSet, options: KrigingOptions | None = None,
                seed: int = 0) -> KrigingFit:
    """Maximum-likelihood kriging fit.

    ``beta`` and ``sigma2`` are profiled in closed form; lengthscales (and
    the nugget ratio when ``options.estimate_nugget``) maximize the profiled
    likelihood by a bounded multistart Powell search in log space started
    from a Sobol' design.
    """
    options = options or KrigingOptions()
    x = np.array(np.atleast_2d(design), dtype=float)
    y = np.asarray(y, dtype=float).copy()
    n, d = x.shape
    if len(specs) != d:
        raise ValueError(f"{len(specs)} input laws for {d} design columns")
    if n < d + 3:
        raise ValueError(f"need N >= d + 3 = {d + 3} points, got {n}")
    x_mean = x.mean(axis=0)
    x_scale = x.std(axis=0)
    if (x_scale == 0).any():
        raise ConditioningError("a design column is constant")
    xs = (x - x_mean) / x_scale
    size = specs.size_index
    F = np.column_stack([np.ones(n), x[:, size]])

    estimate_ratio = options.estimate_nugget
    if not estimate_ratio:
        uniq = np.unique(np.round(xs, 12), axis=0)
        if uniq.shape[0] < n:
            raise ConditioningError("duplicate design rows need a nugget")
    lo, hi = np.log10(options.theta_bounds)
    glo, ghi = np.log10(options.nugget_ratio_bounds)
    bounds = [(lo, hi)] * d + ([(glo, ghi)] if estimate_ratio else [])

    def unpack(p):
        theta = 10.0 ** p[:d]
        return theta, (10.0 ** p[d] if estimate_ratio else 0.0)

    def negll(p):
        out = _profile(xs, y, F, *unpack(p))
        return 1e300 if out is None else -out[0]

    if options.theta is not None:
        theta = np.asarray(options.theta, dtype=float)
        if theta.shape != (d,) or not (theta > 0).all():
            raise ValueError(f"theta must hold {d} positive lengthscales")
        ratio = float(options.nugget_ratio or 0.0)
        out = _profile(xs, y, F, theta, ratio)
        if out is None:
            raise ConditioningError("covariance not factorizable at the given theta")
        return _finish(specs, x, y, x_mean, x_scale, theta, ratio, out)

    dim = len(bounds)
    starts = sobol_sequence(dim, options.n_starts).points
    starts = np.array([b[0] for b in bounds]) + starts * np.array([b[1] - b[0] for b in bounds])
    best = None
    for p0 in starts:
        res = optimize.minimize(negll, p0, method="Powell", bounds=bounds,
                                options={"maxiter": options.maxiter, "xtol": 1e-4,
                                         "ftol": 1e-10})
        cand = (res.fun, res.x) if res.fun <= negll(p0) else (negll(p0), p0)
        if best is None or cand[0] < best[0]:
            best = cand
    if best is None or best[0] >= 1e300:
        raise KrigingFitError("likelihood could not be evaluated at any start", best)

    theta, ratio = unpack(best[1])
    return _finish(specs, x, y, x_mean, x_scale, theta, ratio,
                   _profile(xs, y, F, theta, ratio))


def _finish(specs, x, y, x_mean, x_scale, theta, ratio, profiled) -> KrigingFit:
    ll, beta, sigma2, L, jit = profiled
    fit = KrigingFit(specs, x, y, x_mean, x_scale, theta, sigma2, ratio * sigma2,
                     np.asarray(beta), L, jit, ll)
    q2 = kriging_q2(fit)
    return KrigingFit(specs, x, y, x_mean, x_scale, theta, sigma2, ratio * sigma2,
                      np.asarray(beta), L, jit, ll, q2)


def _weights_parts(fit: KrigingFit, pts: np.ndarray):
    """``v = L^-1 r`` and ``u = W'v - f`` for new points (columns)."""
    c = fit._parts()
    r = _corr(fit._std(fit.x), fit._std(pts), fit.theta)
    v = c["Linv"] @ r
    u = c["W"].T @ v - fit.trend_matrix(pts).T
    return r, v, u


def kriging_predict(fit: KrigingFit, points, include_nugget: bool = False,
                    chunk: int = 20_000) -> PredictiveDistribution:
    """Universal-kriging mean and variance (with the trend-estimation term).

    ``include_nugget`` adds the nugget variance, giving the predictive law of
    a new observation rather than of the latent process.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != fit.n_inputs:
        raise ValueError(f"points have {pts.shape[1]} columns, model has {fit.n_inputs}")
    c = fit._parts()
    mean = np.empty(pts.shape[0])
    var = np.empty(pts.shape[0])
    for k in range(0, pts.shape[0], chunk):
        p = pts[k:k + chunk]
        r, v, u = _weights_parts(fit, p)
        mean[k:k + chunk] = fit.trend_matrix(p) @ fit.beta + r.T @ c["alpha"]
        w = linalg.solve_triangular(c["ftf_chol"], u, lower=True)
        var[k:k + chunk] = 1.0 - np.einsum("ij,ij->j", v, v) + np.einsum("ij,ij->j", w, w)
    var = fit.sigma2 * np.maximum(var, 0.0)
    if include_nugget:
        var = var + fit.nugget
    return PredictiveDistribution(mean, var)


def loo_predictions(fit: KrigingFit):
    """Virtual leave-one-out means and variances (hyperparameters fixed).

    Uses ``Q = C^-1 - C^-1 F (F' C^-1 F)^-1 F' C^-1``: the LOO residual is
    ``(Q y)_i / Q_ii`` and its variance ``sigma2 / Q_ii``.
    """
    c = fit._parts()
    Linv = c["Linv"]
    Cinv = Linv.T @ Linv
    CF = Linv.T @ c["W"]
    t = linalg.solve_triangular(c["ftf_chol"], CF.T, lower=True)
    Q = Cinv - t.T @ t
    qd = np.diag(Q)
    resid = (Q @ fit.y) / qd
    return fit.y - resid, fit.sigma2 / qd


def kriging_q2(fit: KrigingFit) -> float:
    """Leave-one-out Q2 with hyperparameters held at the full-data estimate."""
    mean, _ = loo_predictions(fit)
    tss = float(np.sum((fit.y - fit.y.mean()) ** 2))
    return 1.0 - float(np.sum((fit.y - mean) ** 2)) / tss


def _matrix_sqrt(cov: np.ndarray, scale: float):
    try:
        L, _ = _cholesky_ladder(cov, scale)
        return L
    except ConditioningError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def conditional_paths(fit: KrigingFit, points, n_paths: int, seed: int = 0) -> np.ndarray:
    """Conditional simulations of the latent process at ``points``.

    Conditioning by kriging: unconditional zero-mean draws at training and
    target points jointly, corrected with the universal-kriging weights.
    Returns ``(n_paths, len(points))``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, m = fit.n, pts.shape[0]
    # targets that coincide with a design row share its draw, which keeps
    # the joint covariance non-singular and makes the paths interpolate
    rows = {r.tobytes(): i for i, r in enumerate(fit.x)}
    same = np.array([rows.get(r.tobytes(), -1) for r in pts])
    fresh = np.flatnonzero(same < 0)
    allx = fit._std(np.vstack([fit.x, pts[fresh]]))
    K = _corr(allx, allx, fit.theta)
    root = _matrix_sqrt(K, 1.0)
    rng = np.random.default_rng([seed, 2])
    z = root @ rng.standard_normal((n + fresh.size, n_paths))
    z_lat = np.empty((m, n_paths))
    z_lat[fresh] = z[n:]
    z_lat[same >= 0] = z[same[same >= 0]]
    z_obs = z[:n]
    if fit.nugget > 0:
        z_obs = z_obs + math.sqrt(fit.nugget_ratio) * rng.standard_normal((n, n_paths))
    z_obs = math.sqrt(fit.sigma2) * z_obs
    z_new = math.sqrt(fit.sigma2) * z_lat

    # kriging weights lambda = C^-1 (r - F (F'C^-1F)^-1 u), u = F'C^-1 r - f;
    # path = kriging mean + (simulated error - its kriging prediction)
    c = fit._parts()
    r, v, u = _weights_parts(fit, pts)
    w = linalg.cho_solve((c["ftf_chol"], True), u)
    lam = c["Linv"].T @ (v - c["W"] @ w)
    mean = kriging_predict(fit, pts).mean
    paths = mean[:, None] + z_new - lam.T @ z_obs
    return paths.T


def _nuisance_sample(fit: KrigingFit, n_mc: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 0])
    u = rng.random((n_mc, fit.n_inputs - 1))
    others = [s for j, s in enumerate(fit.specs) if j != fit.size_index]
    return np.column_stack([s.law.ppf(u[:, k]) for k, s in enumerate(others)]) \
        if others else np.empty((n_mc, 0))


def _points(fit: KrigingFit, grid, x):
    from .pod import _insert_size
    return _insert_size(x, np.asarray(grid, dtype=float), fit.size_index).reshape(-1, fit.n_inputs)


def kriging_pod(fit: KrigingFit, s: float, grid, n_mc: int = 10_000, seed: int = 0) -> PodCurve:
    """``POD(a) = E_X[1 - Phi((s - mean(a, X)) / sd(a, X))]`` by Monte Carlo.

    The predictive sd includes the nugget. The same X sample is used at
    every grid point; ``mc_stderr`` is the CLT standard error per point.
    """
    if n_mc < 1000:
        raise ValueError("n_mc must be >= 1000")
    grid = np.asarray(grid, dtype=float)
    x = _nuisance_sample(fit, n_mc, seed)
    probs = _exceed_matrix(fit, grid, x, s)
    pod = probs.mean(axis=1)
    se = probs.std(axis=1, ddof=1) / math.sqrt(n_mc)
    return PodCurve(grid, np.clip(pod, 0, 1), mc_stderr=se, threshold=s, method="kriging")


def _exceed_matrix(fit, grid, x, s, rows_per_chunk: int = 8):
    out = np.empty((grid.size, x.shape[0]))
    for k in range(0, grid.size, rows_per_chunk):
        g = grid[k:k + rows_per_chunk]
        pts = _points(fit, g, x)  # ordered (x, grid)
        m, sd = fit.predict_mean_sd(pts)
        out[k:k + g.size] = exceedance_probability(m, sd, s).reshape(x.shape[0], g.size).T
    return out


def _normal_band(curve: PodCurve, se, level):
    z2 = float(ndtri(0.5 + level / 2))
    z1 = float(ndtri(level))
    est = curve.pod
    return PodBand(curve, np.clip(est - z2 * se, 0, 1), np.clip(est + z2 * se, 0, 1), level,
                   ("monte-carlo",), np.clip(est - z1 * se, 0, 1))


def _quantile_band(curve, dev, level, sources):
    alpha = 1.0 - level
    est = curve.pod
    lo, up, one = np.quantile(dev, [alpha / 2, 1 - alpha / 2, alpha], axis=0)
    clip = lambda v: np.clip(v, 0, 1)  # noqa: E731
    return PodBand(curve, clip(np.minimum(est + lo, est)), clip(np.maximum(est + up, est)),
                   level, sources, clip(np.minimum(est + one, est)))


def kriging_pod_band(fit: KrigingFit, s: float, grid, n_mc: int = 10_000, n_paths: int = 200,
                     level: float = 0.95, seed: int = 0, band_grid_size: int = 41,
                     n_mc_paths: int = 100) -> dict[str, PodBand]:
    """Kriging POD with Monte Carlo, Gaussian-process and combined envelopes.

    * ``mc``: normal interval from the Monte Carlo standard error.
    * ``gp``: ``n_paths`` conditional simulations of the process on a
      ``band_grid_size`` sub-grid crossed with the first ``n_mc_paths`` X
      draws; each path gives a POD curve, whose deviation from the
      smoothed POD on the same draws is interpolated to ``grid`` and
      added to the estimate before taking pointwise quantiles.
    * ``total``: the path deviations plus a normal Monte Carlo error draw
      per path.

    Returns ``{"mc": band, "gp": band, "total": band}`` sharing one estimate.
    """
    if n_paths < 50:
        raise ValueError("n_paths must be >= 50")
    grid = np.asarray(grid, dtype=float)
    curve = kriging_pod(fit, s, grid, n_mc, seed)
    se = curve.mc_stderr

    sub = np.linspace(grid[0], grid[-1], min(band_grid_size, grid.size))
    x = _nuisance_sample(fit, n_mc, seed)[:n_mc_paths]
    pts = _points(fit, sub, x)
    paths = conditional_paths(fit, pts, n_paths, seed)
    noise_sd = math.sqrt(fit.nugget)
    path_pod = exceedance_probability(paths, noise_sd, s)
    path_pod = path_pod.reshape(n_paths, x.shape[0], sub.size).mean(axis=1)
    smooth = _exceed_matrix(fit, sub, x, s).mean(axis=1)
    dev_sub = path_pod - smooth[None, :]
    dev = np.array([np.interp(grid, sub, d) for d in dev_sub])

    rng = np.random.default_rng([seed, 3])
    dev_total = dev + rng.standard_normal(n_paths)[:, None] * se[None, :]
    return {
        "mc": _normal_band(curve, se, level),
        "gp": _quantile_band(curve, dev, level, ("gaussian-process",)),
        "total": _quantile_band(curve, dev_total, level, ("gaussian-process", "monte-carlo")),
    }
