"""Variance-based sensitivity indices by pick-freeze Monte Carlo.

All sampling happens in the unit cube of independent coordinates (randomly
shifted Sobol' points); inputs
with conditional laws are therefore analysed through their quantile
coordinate. First-order indices use the correlation-form (Janon) estimator,
total indices the Jansen estimator, standard errors a row bootstrap.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import ConditionalUniform, InputSet
from .doe import MAX_DIM, sobol_sequence
from .pod import Metamodel, levels_at, pod_x_curves

__all__ = [
    "DegenerateVarianceError",
    "DegenerateDispersionError",
    "CoverageError",
    "SobolResult",
    "FunctionalSobolResult",
    "sobol_indices_scalar",
    "pick_freeze_indices",
    "pod_sobol_indices",
    "pod_value_sobol",
    "inverse_pod_sobol",
    "ishigami",
    "ISHIGAMI_INDICES",
]


class DegenerateVarianceError(ValueError):
    pass


class DegenerateDispersionError(ValueError):
    pass


class CoverageError(ValueError):
    pass


@dataclass(frozen=True)
class SobolResult:
    names: tuple[str, ...]
    first_order: np.ndarray
    total: np.ndarray
    first_stderr: np.ndarray
    total_stderr: np.ndarray
    n_base: int
    estimator: str = "janon-first/jansen-total pick-freeze"
    rejected_fraction: float = 0.0

    def __getitem__(self, name: str) -> tuple[float, float]:
        j = self.names.index(name)
        return float(self.first_order[j]), float(self.total[j])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["input", "S", "T", "S_stderr", "T_stderr"])
            for j, nm in enumerate(self.names):
                w.writerow([nm, repr(float(self.first_order[j])), repr(float(self.total[j])),
                            repr(float(self.first_stderr[j])), repr(float(self.total_stderr[j]))])


@dataclass(frozen=True)
class FunctionalSobolResult:
    names: tuple[str, ...]
    s_pod: np.ndarray
    t_pod: np.ndarray
    grid: np.ndarray
    dispersion: float
    n_base: int

    def __getitem__(self, name: str) -> tuple[float, float]:
        j = self.names.index(name)
        return float(self.s_pod[j]), float(self.t_pod[j])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["input", "S_pod", "T_pod"])
            for j, nm in enumerate(self.names):
                w.writerow([nm, repr(float(self.s_pod[j])), repr(float(self.t_pod[j]))])


def _groups(names: Sequence[str], groups) -> list[tuple[str, list[int]]]:
    if groups is None:
        return [(nm, [j]) for j, nm in enumerate(names)]
    out = []
    used: set[int] = set()
    for label, members in (groups.items() if isinstance(groups, Mapping) else groups):
        idx = [names.index(m) if isinstance(m, str) else int(m) for m in members]
        if used & set(idx):
            raise ValueError(f"group {label!r} overlaps another group")
        used.update(idx)
        out.append((label, idx))
    # inputs not named in any group keep their own index
    out += [(nm, [j]) for j, nm in enumerate(names) if j not in used]
    return out


def _pick_freeze_design(dim: int, n: int, seed: int, groups):
    """Base matrices A, B and the pick-freeze hybrids.

    A and B are the two halves of a randomly shifted (mod 1) Sobol' design
    of dimension ``2 * dim`` when the direction table allows it, otherwise
    pseudo-random.
    """
    rng = np.random.default_rng(seed)
    if 2 * dim <= MAX_DIM:
        pts = (sobol_sequence(2 * dim, n).points + rng.random(2 * dim)) % 1.0
        A, B = pts[:, :dim], pts[:, dim:]
    else:
        A = rng.random((n, dim))
        B = rng.random((n, dim))
    ABs = []
    for _, idx in groups:
        AB = A.copy()
        AB[:, idx] = B[:, idx]
        ABs.append(AB)
    return A, B, ABs


def _first_total(yA, yB, yAB):
    """Janon first-order and Jansen total estimates, batched over leading axes.

    ``yA``, ``yB``: ``(..., n)``; ``yAB``: ``(k, ..., n)``.
    """
    var = np.var(np.concatenate([yA, yB], axis=-1), axis=-1)
    m = 0.5 * (yB + yAB).mean(axis=-1)
    num = (yB * yAB).mean(axis=-1) - m**2
    den = (0.5 * (yB**2 + yAB**2)).mean(axis=-1) - m**2
    first = num / den
    total = 0.5 * ((yA - yAB) ** 2).mean(axis=-1) / var
    return first, total, var


def pick_freeze_indices(yA, yB, yAB, names, n_boot: int = 200, seed: int = 0,
                        rejected_fraction: float = 0.0) -> SobolResult:
    """Indices from pick-freeze outputs: ``yAB[i]`` shares group ``i`` with ``yB``
    and everything else with ``yA``."""
    yA = np.asarray(yA, dtype=float)
    yB = np.asarray(yB, dtype=float)
    yAB = np.asarray(yAB, dtype=float)
    n = yA.size
    if np.var(np.concatenate([yA, yB])) <= 1e-14 * max(1.0, float(np.mean(yA**2))):
        raise DegenerateVarianceError("output variance is zero")
    first, total, _ = _first_total(yA, yB, yAB)
    if n_boot:
        rng = np.random.default_rng([seed, 7])
        fs, ts = [], []
        for _ in range(n_boot):
            idx = rng.integers(0, n, n)
            f, t, _ = _first_total(yA[idx], yB[idx], yAB[:, idx])
            fs.append(f)
            ts.append(t)
        fse, tse = np.std(fs, axis=0, ddof=1), np.std(ts, axis=0, ddof=1)
    else:
        fse = tse = np.full(first.shape, np.nan)
    return SobolResult(tuple(names), first, total, fse, tse, n, rejected_fraction=rejected_fraction)


def _unit_labels(specs: InputSet) -> list[str]:
    return [f"u({s.name})" if isinstance(s.law, ConditionalUniform) else s.name for s in specs]


def sobol_indices_scalar(evaluator: Callable[[np.ndarray], np.ndarray], specs: InputSet,
                         n_base: int = 4096, seed: int = 0, groups=None,
                         n_boot: int = 200) -> SobolResult:
    """First-order and total Sobol' indices of ``evaluator(X)``.

    ``evaluator`` maps an ``(n, d)`` array of input values (columns in
    ``specs`` order) to ``n`` outputs. Costs ``(k + 2) * n_base`` rows for
    ``k`` groups. ``groups`` maps a label to the input names frozen together.
    """
    if n_base < 256:
        raise ValueError("n_base must be >= 256")
    names = _unit_labels(specs)
    grp = _groups(specs.names, groups)
    A, B, ABs = _pick_freeze_design(len(specs), n_base, seed, grp)
    stacked = np.vstack([A, B] + ABs)
    y = np.asarray(evaluator(specs.from_unit(stacked)), dtype=float).reshape(-1)
    yA, yB = y[:n_base], y[n_base:2 * n_base]
    yAB = y[2 * n_base:].reshape(len(grp), n_base)
    labels = [names[idx[0]] if lab == specs.names[idx[0]] else lab for lab, idx in grp]
    return pick_freeze_indices(yA, yB, yAB, labels, n_boot, seed)


def _metamodel_specs(metamodel, specs):
    if specs is not None:
        return specs
    for attr in ("specs",):
        if hasattr(metamodel, attr):
            return getattr(metamodel, attr)
    if hasattr(metamodel, "basis"):
        return metamodel.basis.input_specs
    raise ValueError("input laws required for this metamodel")


def _nuisance(metamodel, specs) -> tuple[InputSet, list[str]]:
    specs = _metamodel_specs(metamodel, specs)
    size = metamodel.size_index
    nuis = InputSet(s for j, s in enumerate(specs) if j != size)
    if not nuis.independent:
        raise ValueError("metamodel inputs must be independent (use the quantile parameterization)")
    return nuis, nuis.names


def _pod_pick_freeze(metamodel, specs, grid, s, n_base, seed, groups):
    nuis, names = _nuisance(metamodel, specs)
    grp = _groups(names, groups)
    A, B, ABs = _pick_freeze_design(len(nuis), n_base, seed, grp)
    curves = [pod_x_curves(metamodel, nuis.from_unit(u), grid, s) for u in [A, B] + ABs]
    labels = [lab for lab, _ in grp]
    return curves[0], curves[1], np.array(curves[2:]), labels


def _trapezoid_weights(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.size == 1:
        return np.ones(1)
    w = np.zeros(grid.size)
    d = np.diff(grid)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def pod_sobol_indices(metamodel: Metamodel, specs: InputSet | None, grid, s: float,
                      n_base: int = 4096, seed: int = 0, groups=None,
                      norm: str = "trapezoid") -> FunctionalSobolResult:
    """Sobol' indices of the whole conditional POD curve ``a -> POD_X(a)``.

    ``S_i = E||POD - POD_{X_i}||^2 / D`` and ``T_i = E||POD_X - POD_{X_-i}||^2 / D``
    with ``D = E||POD - POD_X||^2``; the norm is L2 over the grid with
    trapezoidal weights (``norm="euclidean"`` for plain grid sums).
    """
    grid = np.asarray(grid, dtype=float)
    fA, fB, fAB, labels = _pod_pick_freeze(metamodel, specs, grid, s, n_base, seed, groups)
    w = _trapezoid_weights(grid) if norm == "trapezoid" else np.ones(grid.size)
    # per-grid-point moments, then weighted sums (axis -1 is the sample axis)
    fA, fB, fAB = fA.T, fB.T, np.transpose(fAB, (0, 2, 1))
    var = np.var(np.concatenate([fA, fB], axis=-1), axis=-1)
    D = float(w @ var)
    if D < 1e-12:
        raise DegenerateDispersionError(f"POD_X curves do not vary (D = {D:.3g})")
    m = 0.5 * (fB + fAB).mean(axis=-1)
    num = (fB * fAB).mean(axis=-1) - m**2
    den = (0.5 * (fB**2 + fAB**2)).mean(axis=-1) - m**2
    s_pod = (num @ w) / (den @ w)
    t_pod = (0.5 * ((fA - fAB) ** 2).mean(axis=-1) @ w) / D
    return FunctionalSobolResult(tuple(labels), s_pod, t_pod, grid, D, n_base)


def pod_value_sobol(metamodel: Metamodel, specs: InputSet | None, a: float, s: float,
                    n_base: int = 4096, seed: int = 0, groups=None,
                    n_boot: int = 200) -> SobolResult:
    """Scalar indices of ``POD_X(a)`` at a fixed defect size."""
    fA, fB, fAB, labels = _pod_pick_freeze(metamodel, specs, [a], s, n_base, seed, groups)
    return pick_freeze_indices(fA[:, 0], fB[:, 0], fAB[:, :, 0], labels, n_boot, seed)


def inverse_pod_sobol(metamodel: Metamodel, specs: InputSet | None, p: float, s: float,
                      grid, n_base: int = 4096, seed: int = 0, groups=None,
                      n_boot: int = 200, max_rejected: float = 0.2) -> SobolResult:
    """Scalar indices of the defect size ``POD_X^-1(p)`` (first up-crossing on ``grid``).

    Pick-freeze rows where any of the paired curves never reaches ``p`` are
    dropped; more than ``max_rejected`` of them raises :class:`CoverageError`.
    """
    grid = np.asarray(grid, dtype=float)
    fA, fB, fAB, labels = _pod_pick_freeze(metamodel, specs, grid, s, n_base, seed, groups)
    yA = levels_at(grid, fA, p)
    yB = levels_at(grid, fB, p)
    yAB = np.array([levels_at(grid, f, p) for f in fAB])
    ok = np.isfinite(yA) & np.isfinite(yB) & np.isfinite(yAB).all(axis=0)
    rejected = 1.0 - ok.mean()
    if rejected > max_rejected:
        raise CoverageError(f"{rejected:.1%} of samples never reach POD = {p}")
    return pick_freeze_indices(yA[ok], yB[ok], yAB[:, ok], labels, n_boot, seed, rejected)


ISHIGAMI_INDICES = {
    # (first, total) for a = 7, b = 0.1
    "x1": (0.3139, 0.5576),
    "x2": (0.4424, 0.4424),
    "x3": (0.0, 0.2437),
}


def ishigami(x, a: float = 7.0, b: float = 0.1):
    x = np.atleast_2d(x)
    return np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2 + b * x[:, 2] ** 4 * np.sin(x[:, 0])
