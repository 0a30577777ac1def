"""Polynomial chaos metamodel and chaos-based POD.

Inputs must be independent Gaussian or uniform variables (use
:meth:`InputSet.independent_parameterization` for conditional laws). The
basis is the tensorized normalized Legendre/Hermite family truncated at a
total degree.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .berens import SingularDesignError, posterior_draws
from .data import Gaussian, InputSet, SpecError, Uniform
from .pod import PodBand, PodCurve, band_from_samples

__all__ = [
    "OrthonormalBasis",
    "ChaosFit",
    "UnderdeterminedError",
    "LeverageError",
    "build_orthonormal_basis",
    "univariate",
    "fit_chaos",
    "loo_q2",
    "chaos_pod",
    "chaos_pod_band",
]


class UnderdeterminedError(ValueError):
    pass


class LeverageError(ValueError):
    pass


def univariate(law, degree: int, x) -> np.ndarray:
    """Orthonormal polynomials of degree 0..``degree`` at ``x``, shape ``(n, degree+1)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (degree + 1,))
    if isinstance(law, Uniform):
        t = 2.0 * (x - law.lo) / (law.hi - law.lo) - 1.0
        # Legendre three-term recurrence, then scale by sqrt(2k+1)
        out[..., 0] = 1.0
        if degree >= 1:
            out[..., 1] = t
        for k in range(1, degree):
            out[..., k + 1] = ((2 * k + 1) * t * out[..., k] - k * out[..., k - 1]) / (k + 1)
        out *= np.sqrt(2 * np.arange(degree + 1) + 1.0)
    elif isinstance(law, Gaussian):
        t = (x - law.mean) / law.sd
        # probabilists' Hermite, He_{k+1} = t He_k - k He_{k-1}
        out[..., 0] = 1.0
        if degree >= 1:
            out[..., 1] = t
        for k in range(1, degree):
            out[..., k + 1] = t * out[..., k] - k * out[..., k - 1]
        out /= np.sqrt([math.factorial(k) for k in range(degree + 1)])
    else:
        raise SpecError(f"no orthonormal family for {type(law).__name__}")
    return out


def _total_degree_indices(dim: int, degree: int) -> list[tuple[int, ...]]:
    terms = []
    for total in range(degree + 1):
        level = [c for c in itertools.product(range(total + 1), repeat=dim) if sum(c) == total]
        terms.extend(sorted(level, reverse=True))
    return terms


@dataclass(frozen=True)
class OrthonormalBasis:
    input_specs: InputSet
    degree: int
    terms: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.terms)

    def _factors(self, x: np.ndarray) -> list[np.ndarray]:
        return [univariate(s.law, self.degree, x[:, j]) for j, s in enumerate(self.input_specs)]

    def evaluate(self, x) -> np.ndarray:
        """Design matrix ``(n, P)`` of all basis terms at the rows of ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != len(self.input_specs):
            raise ValueError(f"expected {len(self.input_specs)} columns, got {x.shape[1]}")
        fac = self._factors(x)
        psi = np.ones((x.shape[0], len(self.terms)))
        for k, alpha in enumerate(self.terms):
            for j, d in enumerate(alpha):
                if d:
                    psi[:, k] *= fac[j][:, d]
        return psi

    def split(self, index: int, grid, rest) -> tuple[np.ndarray, np.ndarray]:
        """Factor ``psi_k(x) = f_k(x_index) * g_k(x_rest)``.

        Returns ``F`` of shape ``(len(grid), P)`` and ``G`` of shape
        ``(len(rest), P)`` so that ``(F * c) @ G.T`` is the surrogate on the
        cross product of ``grid`` and the rows of ``rest``.
        """
        grid = np.asarray(grid, dtype=float)
        rest = np.atleast_2d(np.asarray(rest, dtype=float))
        fa = univariate(self.input_specs[index].law, self.degree, grid)
        others = [j for j in range(len(self.input_specs)) if j != index]
        fac = {j: univariate(self.input_specs[j].law, self.degree, rest[:, k])
               for k, j in enumerate(others)}
        F = np.empty((grid.size, len(self.terms)))
        G = np.ones((rest.shape[0], len(self.terms)))
        for k, alpha in enumerate(self.terms):
            F[:, k] = fa[:, alpha[index]]
            for j in others:
                if alpha[j]:
                    G[:, k] *= fac[j][:, alpha[j]]
        return F, G


def build_orthonormal_basis(specs: InputSet, degree: int) -> OrthonormalBasis:
    if degree < 0:
        raise ValueError("degree must be >= 0")
    for s in specs:
        if not isinstance(s.law, (Gaussian, Uniform)):
            raise SpecError(
                f"{s.name!r}: only Gaussian and Uniform inputs have a chaos basis; "
                "use the independent parameterization"
            )
    return OrthonormalBasis(specs, degree, tuple(_total_degree_indices(len(specs), degree)))


def _qr_checked(psi: np.ndarray):
    q, r = np.linalg.qr(psi)
    diag = np.abs(np.diag(r))
    if diag.size and diag.min() <= 1e-10 * max(1.0, diag.max()):
        raise SingularDesignError("design is rank deficient in the chaos basis")
    return q, r


def loo_q2(design, y, basis: OrthonormalBasis) -> float:
    """Leave-one-out Q2 from the hat-matrix shortcut ``e_i / (1 - h_ii)``."""
    psi = basis.evaluate(design)
    y = np.asarray(y, dtype=float)
    if psi.shape[0] <= psi.shape[1]:
        raise UnderdeterminedError(f"N={psi.shape[0]} <= P={psi.shape[1]}")
    q, r = _qr_checked(psi)
    h = np.einsum("ij,ij->i", q, q)
    if (h >= 1.0 - 1e-10).any():
        raise LeverageError(f"leverage 1 at row {int(np.argmax(h))}")
    resid = y - q @ (q.T @ y)
    tss = float(((y - y.mean()) ** 2).sum())
    if tss == 0.0:
        raise ValueError("constant response")
    return 1.0 - float(np.sum((resid / (1.0 - h)) ** 2)) / tss


@dataclass(frozen=True)
class ChaosFit:
    basis: OrthonormalBasis
    coefficients: np.ndarray
    sigma_eps: float
    q2: float
    information_matrix_inverse: np.ndarray
    n: int
    q2_by_degree: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return self.basis.degree

    @property
    def n_inputs(self) -> int:
        return len(self.basis.input_specs)

    @property
    def size_index(self) -> int:
        return self.basis.input_specs.size_index

    def predict(self, points) -> np.ndarray:
        return self.basis.evaluate(points) @ self.coefficients

    def predict_mean_sd(self, points):
        m = self.predict(points)
        return m, np.full_like(m, self.sigma_eps)

    def variance(self) -> float:
        """Variance of the surrogate under the input law: sum of squared non-constant coefficients."""
        return float(np.sum(self.coefficients[1:] ** 2))

    def with_parameters(self, coefficients, sigma_eps: float) -> "ChaosFit":
        return ChaosFit(self.basis, np.asarray(coefficients, dtype=float), float(sigma_eps),
                        self.q2, self.information_matrix_inverse, self.n, self.q2_by_degree)


def _fit_degree(design, y, basis):
    psi = basis.evaluate(design)
    n, p = psi.shape
    if n <= p:
        raise UnderdeterminedError(f"N={n} <= P={p} at degree {basis.degree}")
    q, r = _qr_checked(psi)
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - psi @ coef
    sigma = math.sqrt(float(resid @ resid) / (n - p))
    rinv = np.linalg.inv(r)
    return coef, sigma, rinv @ rinv.T


def fit_chaos(design, y, specs: InputSet, candidate_degrees=(1, 2, 3)) -> ChaosFit:
    """Least-squares chaos fit; the degree with the best leave-one-out Q2 wins.

    Ties go to the lower degree. Degrees with ``P >= N``, a rank-deficient
    design or a leverage-one row are skipped (their score is recorded as
    NaN); if none is feasible :class:`UnderdeterminedError` is raised.
    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(y, dtype=float)
    scores = {}
    best = None
    for deg in sorted(set(candidate_degrees)):
        basis = build_orthonormal_basis(specs, deg)
        if len(basis) >= design.shape[0]:
            continue
        try:
            q2 = loo_q2(design, y, basis)
        except (LeverageError, SingularDesignError):
            scores[deg] = float("nan")
            continue
        scores[deg] = q2
        if best is None or q2 > best[1] + 1e-12:
            best = (basis, q2)
    if best is None:
        raise UnderdeterminedError(
            f"N={design.shape[0]} too small for every candidate degree {sorted(candidate_degrees)}"
        )
    basis, q2 = best
    coef, sigma, info_inv = _fit_degree(design, y, basis)
    return ChaosFit(basis, coef, sigma, q2, info_inv, design.shape[0], scores)


def _nuisance_sample(specs: InputSet, skip: int, n: int, rng) -> np.ndarray:
    u = rng.random((n, len(specs) - 1))
    others = [s for j, s in enumerate(specs) if j != skip]
    return np.column_stack([s.law.ppf(u[:, k]) for k, s in enumerate(others)]) if others \
        else np.empty((n, 0))


def _mc_inputs(fit: ChaosFit, n_mc: int, seed: int):
    rng = np.random.default_rng([seed, 0])
    x = _nuisance_sample(fit.basis.input_specs, fit.size_index, n_mc, rng)
    z = rng.standard_normal(n_mc)
    return x, z


def _pod_from_parts(F, G, coef, sigma, z, s, chunk: int = 64) -> np.ndarray:
    pod = np.empty(F.shape[0])
    eps = sigma * z
    for k in range(0, F.shape[0], chunk):
        yhat = (F[k:k + chunk] * coef) @ G.T
        pod[k:k + chunk] = np.mean(yhat + eps[None, :] > s, axis=1)
    return pod


def chaos_pod(fit: ChaosFit, s: float, grid, n_mc: int = 10_000, seed: int = 0) -> PodCurve:
    """Monte Carlo ``P(Yhat(a, X) + eps > s)`` with ``eps ~ N(0, sigma_eps^2)``.

    The same ``n_mc`` draws of ``(X, eps)`` are reused at every grid point.
    """
    if n_mc < 1000:
        raise ValueError("n_mc must be >= 1000")
    grid = np.asarray(grid, dtype=float)
    x, z = _mc_inputs(fit, n_mc, seed)
    F, G = fit.basis.split(fit.size_index, grid, x)
    pod = _pod_from_parts(F, G, fit.coefficients, fit.sigma_eps, z, s)
    se = np.sqrt(pod * (1.0 - pod) / n_mc)
    return PodCurve(grid, pod, mc_stderr=se, threshold=s, method="chaos")


def chaos_pod_band(fit: ChaosFit, s: float, grid, n_sets: int = 150, n_mc: int = 10_000,
                   level: float = 0.95, seed: int = 0) -> PodBand:
    """Band from ``n_sets`` posterior draws of (coefficients, sigma_eps).

    Each draw gives one curve through :func:`chaos_pod` (same MC inputs for
    all draws); the band is made of pointwise empirical quantiles and the
    ``1 - level`` quantile is the one-sided lower curve. The reported
    estimate is the average curve over the draws.
    """
    if n_sets < 50:
        raise ValueError("n_sets must be >= 50")
    if n_mc < 1000:
        raise ValueError("n_mc must be >= 1000")
    grid = np.asarray(grid, dtype=float)
    dof = fit.n - len(fit.coefficients)
    coefs, sigmas = posterior_draws(fit.coefficients, fit.sigma_eps,
                                    fit.information_matrix_inverse, dof, n_sets, seed + 1)
    x, z = _mc_inputs(fit, n_mc, seed)
    F, G = fit.basis.split(fit.size_index, grid, x)
    samples = np.array([_pod_from_parts(F, G, c, sg, z, s) for c, sg in zip(coefs, sigmas)])
    mean = samples.mean(axis=0)
    curve = PodCurve(grid, mean, mc_stderr=np.sqrt(mean * (1 - mean) / n_mc), threshold=s,
                     method="chaos")
    return band_from_samples(curve, samples, level, ("chaos-coefficients", "monte-carlo"))
