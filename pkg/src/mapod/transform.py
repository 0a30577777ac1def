"""Box-Cox linearization of the simulated response."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["BoxCoxTransform", "apply_boxcox", "invert_boxcox", "profile_loglik", "fit_boxcox"]

_LOG_CASE = 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _positive(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not (x > 0).all():
        raise ValueError("Box-Cox transform needs strictly positive values")
    return x


def apply_boxcox(x, lam: float):
    """``(x**lam - 1) / lam``, or ``log(x)`` when ``|lam| < 1e-6``."""
    x = _positive(x)
    if abs(lam) < _LOG_CASE:
        return np.log(x)
    # expm1 keeps precision for small lam
    return np.expm1(lam * np.log(x)) / lam


def invert_boxcox(y, lam: float):
    y = np.asarray(y, dtype=float)
    if abs(lam) < _LOG_CASE:
        return np.exp(y)
    base = 1.0 + lam * y
    if not (base > 0).all():
        raise ValueError("value outside the range of the Box-Cox transform")
    return np.exp(np.log(base) / lam)


def profile_loglik(a, x, lam: float) -> float:
    """Profile log-likelihood of ``lam`` for the model ``y(lam) = b0 + b1*a + eps``.

    Gaussian errors with the variance profiled out, plus the Jacobian term
    ``(lam - 1) * sum(log x)``; additive constants dropped.
    """
    a = np.asarray(a, dtype=float)
    x = _positive(x)
    y = apply_boxcox(x, lam)
    X = np.column_stack([np.ones_like(a), a])
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    rss = float(np.sum((y - X @ beta) ** 2))
    n = a.size
    if rss <= 0.0:
        return math.inf
    return -0.5 * n * math.log(rss / n) + (lam - 1.0) * float(np.sum(np.log(x)))


@dataclass(frozen=True)
class BoxCoxTransform:
    lam: float
    log_likelihood: float
    threshold: float | None = None
    transformed_threshold: float | None = None

    def __call__(self, x):
        return apply_boxcox(x, self.lam)

    def inverse(self, y):
        return invert_boxcox(y, self.lam)


def fit_boxcox(a, response, lambda_range=(-2.0, 2.0), threshold: float | None = None,
               tol: float = 1e-4) -> BoxCoxTransform:
    """Maximum-likelihood Box-Cox exponent by golden-section search.

    ``threshold`` (raw units) is transformed with the fitted exponent so that
    exceedance events are preserved.
    """
    a = np.asarray(a, dtype=float)
    x = _positive(response)
    if a.size < 3 or a.size != x.size:
        raise ValueError("need >= 3 paired (a, response) values")
    lo, hi = map(float, lambda_range)
    if not lo <= hi:
        raise ValueError(f"empty lambda range [{lo}, {hi}]")

    f = lambda lam: profile_loglik(a, x, lam)  # noqa: E731
    if hi - lo <= tol:
        lam = 0.5 * (lo + hi)
    else:
        c = hi - _GOLDEN * (hi - lo)
        d = lo + _GOLDEN * (hi - lo)
        fc, fd = f(c), f(d)
        while hi - lo > tol:
            if fc >= fd:
                hi, d, fd = d, c, fc
                c = hi - _GOLDEN * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + _GOLDEN * (hi - lo)
                fd = f(d)
        lam = 0.5 * (lo + hi)
        # endpoints are not visited by the bracket updates
        for edge in lambda_range:
            if f(edge) > f(lam):
                lam = float(edge)
    s_t = None
    if threshold is not None:
        s_t = float(apply_boxcox(threshold, lam))
    return BoxCoxTransform(lam, f(lam), threshold, s_t)
