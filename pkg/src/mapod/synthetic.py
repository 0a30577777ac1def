"""Synthetic forward models with known POD and known Sobol' indices.

Stand-ins for an expensive NDT simulator. The linear predictor is

    eta = b0 + b1*a + sum_k c_k x_k + c_12 x_i x_j + sigma*z

where ``z`` is a standard-normal noise column taken from the design when
present, otherwise drawn i.i.d. from ``seed``. ``power-law`` returns
``(1 + lam*eta)**(1/lam)`` (``exp(eta)`` for ``lam = 0``), which the Box-Cox
transform with the same ``lam`` maps back to ``eta`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import ndtri

from .data import Gaussian, InputSet, InputSpec, SimulationDataset, SpecError, Uniform
from .doe import sobol_sequence
from .pod import PodCurve, exceedance_probability
from .transform import invert_boxcox

__all__ = [
    "SyntheticModelSpec",
    "evaluate",
    "true_pod",
    "true_a90",
    "threshold_for_a90",
    "analytic_sobol",
    "make_dataset",
    "KINDS",
]

KINDS = ("linear-gaussian", "power-law", "nonlinear-interaction")


@dataclass(frozen=True)
class SyntheticModelSpec:
    kind: str = "linear-gaussian"
    beta0: float = 2.5
    beta1: float = 43.5
    sigma: float = 1.95
    lam: float = 0.3
    linear_terms: tuple[tuple[str, float], ...] = ()
    interaction: tuple[str, str, float] | None = None
    seed: int = 0
    size_name: str = "a"
    noise_name: str = "z"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown synthetic kind {self.kind!r}")
        if self.sigma < 0:
            raise SpecError("sigma must be >= 0")
        if self.kind == "nonlinear-interaction" and self.interaction is None:
            raise SpecError("nonlinear-interaction needs an interaction term")
        object.__setattr__(self, "linear_terms", tuple(tuple(t) for t in self.linear_terms))
        if self.interaction is not None:
            object.__setattr__(self, "interaction", tuple(self.interaction))


def _column(design, name):
    if isinstance(design, SimulationDataset):
        return design.column(name) if name in design.input_names else None
    return np.asarray(design[name], dtype=float) if name in design else None


def linear_predictor(spec: SyntheticModelSpec, design) -> np.ndarray:
    a = _column(design, spec.size_name)
    if a is None:
        raise SpecError(f"design has no {spec.size_name!r} column")
    eta = spec.beta0 + spec.beta1 * a
    for name, coef in spec.linear_terms:
        x = _column(design, name)
        if x is None:
            raise SpecError(f"design has no {name!r} column")
        eta = eta + coef * x
    if spec.interaction is not None:
        n1, n2, coef = spec.interaction
        eta = eta + coef * _column(design, n1) * _column(design, n2)
    if spec.sigma > 0:
        z = _column(design, spec.noise_name)
        if z is None:
            z = np.random.default_rng(spec.seed).standard_normal(a.size)
        eta = eta + spec.sigma * z
    return eta


def evaluate(spec: SyntheticModelSpec, design: Mapping[str, np.ndarray] | SimulationDataset):
    """Responses of the synthetic model on ``design`` (mapping name -> column)."""
    eta = linear_predictor(spec, design)
    if spec.kind != "power-law":
        return eta
    if abs(spec.lam) >= 1e-6 and not (1.0 + spec.lam * eta > 0).all():
        raise SpecError("power-law parameters give non-positive responses")
    return invert_boxcox(eta, spec.lam)


def _z(p: float) -> float:
    return float(ndtri(p))


def true_pod(spec: SyntheticModelSpec, s: float, grid) -> PodCurve:
    """Ground-truth POD of a model with Gaussian noise and no nuisance terms.

    ``s`` is on the linear-predictor scale (transform raw thresholds first).
    """
    if spec.linear_terms or spec.interaction:
        raise ValueError("closed-form POD only for models without nuisance terms")
    grid = np.asarray(grid, dtype=float)
    pod = exceedance_probability(spec.beta0 + spec.beta1 * grid, spec.sigma, s)
    return PodCurve(grid, pod, threshold=s, method="truth")


def true_a90(spec: SyntheticModelSpec, s: float, p: float = 0.9) -> float:
    return (s - spec.beta0 + _z(p) * spec.sigma) / spec.beta1


def threshold_for_a90(spec: SyntheticModelSpec, a90: float = 0.30, p: float = 0.9) -> float:
    """Threshold (linear-predictor scale) that puts the true ``a_p`` at ``a90``."""
    return spec.beta0 + spec.beta1 * a90 - _z(p) * spec.sigma


def analytic_sobol(spec: SyntheticModelSpec, a_range: tuple[float, float]) -> dict:
    """Exact first-order and total indices of the noise-free linear predictor.

    Assumes ``a ~ U(a_range)`` and every nuisance column standard normal and
    independent. Returns ``{name: (S, T)}``.
    """
    lo, hi = a_range
    parts = {spec.size_name: spec.beta1**2 * (hi - lo) ** 2 / 12.0}
    for name, coef in spec.linear_terms:
        parts[name] = parts.get(name, 0.0) + coef**2
    inter = 0.0
    if spec.interaction is not None:
        n1, n2, inter = spec.interaction
        inter = inter**2
        parts.setdefault(n1, 0.0)
        parts.setdefault(n2, 0.0)
    total = sum(parts.values()) + inter
    out = {}
    for name, v in parts.items():
        t = v + (inter if spec.interaction and name in spec.interaction[:2] else 0.0)
        out[name] = (v / total, t / total)
    return out


def make_dataset(spec: SyntheticModelSpec, n: int, a_range=(0.1, 0.5),
                 nuisance: InputSet | None = None, noise_in_design: bool = False,
                 start: int = 1) -> tuple[SimulationDataset, InputSet]:
    """Sobol' design over ``a`` (and nuisance inputs) plus synthetic responses.

    With ``noise_in_design`` the noise ``z`` is a standard-normal design
    column, which makes the simulator deterministic in its inputs.
    Returns the dataset and the input laws of its columns.
    """
    specs = [InputSpec(spec.size_name, Uniform(*a_range), "size")]
    if nuisance is not None:
        specs += list(nuisance)
    if noise_in_design and spec.sigma > 0:
        specs.append(InputSpec(spec.noise_name, Gaussian(0.0, 1.0)))
    inputs = InputSet(specs)
    x = inputs.from_unit(sobol_sequence(len(inputs), n, start).points)
    design = {name: x[:, j] for j, name in enumerate(inputs.names)}
    y = evaluate(spec, design)
    ds = SimulationDataset(tuple(inputs.names), x, y,
                           response_name="ProjY" if spec.kind == "power-law" else "y")
    return ds, inputs
