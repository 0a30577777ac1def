"""POD curve and band containers, detectability summaries and curve inversion."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
from scipy.special import ndtr

__all__ = [
    "PodCurve",
    "PodBand",
    "DetectabilitySummary",
    "NotAttainedError",
    "NonMonotoneWarning",
    "Metamodel",
    "exceedance_probability",
    "default_grid",
    "band_from_samples",
    "a_at_level",
    "a_at_level_with_confidence",
    "summarize",
    "pod_x_curve",
    "pod_x_curves",
    "write_curve_csv",
    "write_band_csv",
    "comparison_table",
    "levels_at",
]


class NotAttainedError(ValueError):
    """The requested probability is never reached on the grid."""

    def __init__(self, p: float, max_pod: float):
        super().__init__(f"POD never reaches {p:g} on the grid (max {max_pod:.6g})")
        self.p = p
        self.max_pod = max_pod


class NonMonotoneWarning(UserWarning):
    pass


def exceedance_probability(mean, sd, s: float):
    """``P(mean + sd*Z > s)`` for standard normal ``Z``; the indicator when ``sd == 0``."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    pos = sd > 0
    z = np.divide(mean - s, sd, out=np.zeros(np.broadcast(mean, sd).shape), where=pos)
    return np.where(pos, ndtr(z), (mean > s).astype(float))


@dataclass(frozen=True)
class PodCurve:
    grid: np.ndarray
    pod: np.ndarray
    mc_stderr: np.ndarray | None = None
    counts: np.ndarray | None = None
    threshold: float | None = None
    method: str = ""

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        pod = np.asarray(self.pod, dtype=float)
        if grid.ndim != 1 or grid.shape != pod.shape:
            raise ValueError("grid and pod must be 1-D arrays of equal length")
        if grid.size > 1 and not (np.diff(grid) > 0).all():
            raise ValueError("grid must be strictly increasing")
        if not ((pod >= 0) & (pod <= 1)).all():
            raise ValueError("POD values must lie in [0, 1]")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "pod", pod)

    def __len__(self):
        return self.grid.size


@dataclass(frozen=True)
class PodBand:
    """Pointwise envelope around a POD curve.

    ``lower``/``upper`` are two-sided at ``level``; ``one_sided_lower`` is the
    one-sided ``level`` lower bound used for a90/95.
    """

    curve: PodCurve
    lower: np.ndarray
    upper: np.ndarray
    level: float
    sources: tuple[str, ...] = ()
    one_sided_lower: np.ndarray | None = None

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        lo = np.asarray(self.lower, dtype=float)
        up = np.asarray(self.upper, dtype=float)
        est = self.curve.pod
        tol = 1e-12
        if lo.shape != est.shape or up.shape != est.shape:
            raise ValueError("band arrays must match the curve grid")
        if (lo > est + tol).any() or (up < est - tol).any():
            raise ValueError("band must enclose the estimate")
        if (lo < -tol).any() or (up > 1 + tol).any():
            raise ValueError("band must lie in [0, 1]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if self.one_sided_lower is not None:
            object.__setattr__(self, "one_sided_lower",
                               np.asarray(self.one_sided_lower, dtype=float))

    @property
    def grid(self):
        return self.curve.grid

    @property
    def confidence_lower(self) -> np.ndarray:
        return self.lower if self.one_sided_lower is None else self.one_sided_lower


@dataclass(frozen=True)
class DetectabilitySummary:
    a90: float
    a90_95: float
    method: str
    warnings: tuple[str, ...] = field(default=())


def default_grid(a, n: int = 201) -> np.ndarray:
    """``n`` equally spaced points over the observed range of ``a``."""
    a = np.asarray(a, dtype=float)
    return np.linspace(a.min(), a.max(), n)


def band_from_samples(curve: PodCurve, samples: np.ndarray, level: float,
                      sources: Sequence[str] = ()) -> PodBand:
    """Quantile band from POD samples of shape ``(n_samples, n_grid)``.

    Envelopes are widened to contain the estimate where sampling noise puts
    both quantiles on one side of it (saturated regions).
    """
    alpha = 1.0 - level
    lo, up, one = np.quantile(samples, [alpha / 2, 1 - alpha / 2, alpha], axis=0)
    est = curve.pod
    return PodBand(
        curve,
        np.clip(np.minimum(lo, est), 0, 1),
        np.clip(np.maximum(up, est), 0, 1),
        level,
        tuple(sources),
        np.clip(np.minimum(one, est), 0, 1),
    )


def _as_arrays(curve) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(curve, PodCurve):
        return curve.grid, curve.pod
    grid, pod = curve
    return np.asarray(grid, dtype=float), np.asarray(pod, dtype=float)


def a_at_level(curve, p: float = 0.9) -> float:
    """Smallest grid size at which POD reaches ``p`` (first up-crossing).

    No interpolation is done between grid points, so the result errs on the
    conservative side by at most one grid step. ``curve`` is a
    :class:`PodCurve` or a ``(grid, pod)`` pair. Curves that decrease
    somewhere emit :class:`NonMonotoneWarning`; the first crossing is still
    returned.
    """
    grid, pod = _as_arrays(curve)
    hit = np.flatnonzero(pod >= p)
    if hit.size == 0:
        raise NotAttainedError(p, float(pod.max()) if pod.size else float("nan"))
    if (np.diff(pod) < -1e-9).any():
        warnings.warn("POD curve is not monotone; using the first up-crossing",
                      NonMonotoneWarning, stacklevel=2)
    return float(grid[hit[0]])


def a_at_level_with_confidence(band: PodBand, p: float = 0.9) -> float:
    """:func:`a_at_level` applied to the band's (one-sided) lower envelope."""
    return a_at_level((band.grid, band.confidence_lower), p)


def summarize(method: str, band: PodBand, p: float = 0.9) -> DetectabilitySummary:
    """a_p and a_p/level of a band; a level not reached on the grid gives NaN and a note."""
    notes = set()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonMonotoneWarning)
        values = []
        for fn, arg in ((a_at_level, band.curve), (a_at_level_with_confidence, band)):
            try:
                values.append(fn(arg, p))
            except NotAttainedError as exc:
                notes.add(str(exc))
                values.append(float("nan"))
    notes |= {str(w.message) for w in caught}
    return DetectabilitySummary(values[0], values[1], method, tuple(sorted(notes)))


class Metamodel(Protocol):
    """What the POD and sensitivity code needs from a fitted surrogate."""

    size_index: int
    n_inputs: int

    def predict_mean_sd(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ...


def _insert_size(x: np.ndarray, grid: np.ndarray, size_index: int) -> np.ndarray:
    """Points of shape ``(n_x, n_grid, d)`` with the size column filled from ``grid``."""
    n_x, n_grid = x.shape[0], grid.size
    pts = np.empty((n_x, n_grid, x.shape[1] + 1))
    pts[..., :size_index] = x[:, None, :size_index]
    pts[..., size_index] = grid[None, :]
    pts[..., size_index + 1:] = x[:, None, size_index:]
    return pts


def pod_x_curves(metamodel: Metamodel, x: np.ndarray, grid, s: float,
                 chunk: int = 200_000) -> np.ndarray:
    """Conditional POD curves, one row per nuisance realization in ``x``.

    ``x`` holds the non-size inputs in metamodel order with the size column
    removed; the result has shape ``(len(x), len(grid))``.
    """
    grid = np.asarray(grid, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != metamodel.n_inputs - 1:
        raise ValueError(f"expected {metamodel.n_inputs - 1} nuisance values, got {x.shape[1]}")
    pts = _insert_size(x, grid, metamodel.size_index).reshape(-1, metamodel.n_inputs)
    out = np.empty(pts.shape[0])
    for k in range(0, pts.shape[0], chunk):
        m, sd = metamodel.predict_mean_sd(pts[k:k + chunk])
        out[k:k + chunk] = exceedance_probability(m, sd, s)
    return out.reshape(x.shape[0], grid.size)


def pod_x_curve(metamodel: Metamodel, x, grid, s: float) -> PodCurve:
    """POD curve conditional on one full nuisance realization ``x``."""
    pod = pod_x_curves(metamodel, np.atleast_2d(x), grid, s)[0]
    return PodCurve(np.asarray(grid, dtype=float), pod, threshold=s, method="pod_x")


def _fmt(v) -> str:
    return repr(float(v))


def write_curve_csv(curve: PodCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = ["a", "pod"] + (["mc_stderr"] if curve.mc_stderr is not None else [])
        w.writerow(cols)
        for i in range(len(curve)):
            row = [_fmt(curve.grid[i]), _fmt(curve.pod[i])]
            if curve.mc_stderr is not None:
                row.append(_fmt(curve.mc_stderr[i]))
            w.writerow(row)


def write_band_csv(bands: PodBand | dict[str, PodBand], path: str | Path) -> None:
    """Columns ``a, pod, lower, upper, lower_one_sided``; a leading
    ``component`` column is added when several named bands are given."""
    named = bands if isinstance(bands, dict) else None
    items = list(named.items()) if named else [("", bands)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["a", "pod", "lower", "upper", "lower_one_sided"]
        w.writerow((["component"] if named else []) + head)
        for name, band in items:
            one = band.confidence_lower
            for i in range(len(band.curve)):
                row = [_fmt(band.grid[i]), _fmt(band.curve.pod[i]), _fmt(band.lower[i]),
                       _fmt(band.upper[i]), _fmt(one[i])]
                w.writerow(([name] if named else []) + row)


def _cell(v: float) -> str:
    return "n/a" if np.isnan(v) else f"{v:.4f}"


def comparison_table(summaries: Sequence[DetectabilitySummary]) -> str:
    """Plain-text table of a90 and a90/95 across methods."""
    names = [s.method for s in summaries]
    width = max([8] + [len(n) for n in names]) + 2
    lines = ["Detectable flaw sizes by method",
             "".ljust(10) + "".join(n.rjust(width) for n in names),
             "a90".ljust(10) + "".join(_cell(s.a90).rjust(width) for s in summaries),
             "a90/95".ljust(10) + "".join(_cell(s.a90_95).rjust(width) for s in summaries)]
    return "\n".join(lines)


def levels_at(grid, curves, p: float) -> np.ndarray:
    """Vectorized :func:`a_at_level` over the rows of ``curves``; NaN where ``p`` is not reached."""
    grid = np.asarray(grid, dtype=float)
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    hit = curves >= p
    found = hit.any(axis=1)
    a = grid[np.argmax(hit, axis=1)]
    return np.where(found, a, np.nan)
