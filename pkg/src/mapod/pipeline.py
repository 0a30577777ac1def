"""Configuration-driven batch runs of the progressive POD methodology.

Methods run in the order Berens, Binomial-Berens, polynomial chaos,
kriging; each writes its own files and a failure in one method does not stop
the others.
"""
from __future__ import annotations

import contextlib
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .berens import (
    berens_pod_band,
    binomial_band,
    binomial_pod,
    fit_linear,
    residual_diagnostics,
)
from .chaos import chaos_pod_band, fit_chaos
from .data import (
    ConditionalUniform,
    Gaussian,
    InputSet,
    InputSpec,
    Schema,
    SimulationDataset,
    Uniform,
    derive_defect_size,
    load_dataset,
    write_dataset,
)
from .doe import flaw_counts, sample_inputs
from .kriging import KrigingOptions, fit_kriging, kriging_pod_band
from .pod import comparison_table, default_grid, summarize, write_band_csv
from .sensitivity import inverse_pod_sobol, pod_sobol_indices, pod_value_sobol
from .synthetic import SyntheticModelSpec, evaluate, make_dataset
from .transform import apply_boxcox, fit_boxcox

__all__ = ["ConfigError", "RunConfig", "load_config", "execute", "generate_design",
           "generate_synthetic", "run_sensitivity", "METHODS"]

log = logging.getLogger(__name__)

METHODS = ("berens", "binomial", "chaos", "kriging")


class ConfigError(ValueError):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


def _law(d: dict, where: str):
    fam = str(d.get("family", "")).lower().replace("-", "_")
    try:
        if fam == "gaussian":
            return Gaussian(float(d["mean"]), float(d["sd"]))
        if fam == "uniform":
            return Uniform(float(d["lo"]), float(d["hi"]))
        if fam == "conditional_uniform":
            return ConditionalUniform(str(d["source"]), float(d["lo_offset"]), float(d["hi"]))
    except KeyError as exc:
        raise ConfigError(f"{where}.{exc.args[0]}", "missing parameter") from None
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None
    raise ConfigError(f"{where}.family", f"unknown family {d.get('family')!r}")


def _input_set(items, where="inputs") -> InputSet:
    specs = []
    for k, d in enumerate(items):
        if "name" not in d:
            raise ConfigError(f"{where}[{k}].name", "missing")
        specs.append(InputSpec(str(d["name"]), _law(d, f"{where}[{k}]"), d.get("role", "nuisance")))
    try:
        return InputSet(specs)
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None


@dataclass(frozen=True)
class RunConfig:
    """Every setting of a run, with documented defaults.

    Sub-seeds: Berens ``seed``, chaos ``seed + 1``, kriging ``seed + 2``,
    sensitivity ``seed + 3``.
    """

    threshold: float
    methods: tuple[str, ...] = METHODS
    data_path: str | None = None
    synthetic: dict | None = None
    schema: Schema = field(default_factory=Schema)
    inputs: InputSet | None = None
    size_column: str | None = None
    size_from: tuple[str, str] | None = ("P1", "P2")
    size_law: Any = None
    nuisance: tuple[str, ...] | None = None
    boxcox: bool = True
    fixed_lambda: float | None = None
    lambda_range: tuple[float, float] = (-2.0, 2.0)
    grid_n: int = 201
    grid_range: tuple[float, float] | None = None
    level: float = 0.95
    p: float = 0.9
    berens_draws: int = 10_000
    chaos_degrees: tuple[int, ...] = (1, 2, 3)
    chaos_n_mc: int = 10_000
    chaos_n_sets: int = 150
    kriging_nugget: bool = False
    kriging_starts: int = 10
    kriging_n_mc: int = 10_000
    kriging_n_paths: int = 200
    kriging_band_grid: int = 41
    kriging_n_mc_paths: int = 100
    sensitivity: dict = field(default_factory=dict)
    doe_n: int = 100
    flaw_split: bool = False
    second_flaw_columns: tuple[str, ...] = ("h2", "P2", "ebav2")
    seed: int = 0
    output_dir: str = "mapod-out"
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path = ".", **overrides) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config", "top level must be a mapping")
        kw: dict[str, Any] = {"base_dir": str(base_dir)}
        if "threshold" not in d or d["threshold"] is None:
            raise ConfigError("threshold", "required (raw response units)")
        try:
            kw["threshold"] = float(d["threshold"])
        except (TypeError, ValueError):
            raise ConfigError("threshold", "must be a number") from None
        if not kw["threshold"] > 0 and d.get("transform", {}).get("boxcox", True):
            raise ConfigError("threshold", "must be positive in raw units")

        methods = overrides.pop("methods", None) or d.get("methods", list(METHODS))
        if isinstance(methods, str):
            methods = [m.strip() for m in methods.split(",") if m.strip()]
        bad = [m for m in methods if m not in METHODS]
        if not methods or bad:
            raise ConfigError("methods", f"choose at least one of {METHODS}, got {methods}")
        kw["methods"] = tuple(m for m in METHODS if m in methods)

        data = d.get("data") or {}
        if "path" in data:
            kw["data_path"] = str(data["path"])
        elif "synthetic" in data:
            kw["synthetic"] = dict(data["synthetic"])
        else:
            raise ConfigError("data", "give data.path or data.synthetic")
        if "schema" in data:
            sc = data["schema"]
            try:
                kw["schema"] = Schema(tuple(sc["inputs"]), sc.get("response", "ProjY"),
                                      sc.get("flaw_count"), tuple(sc.get("optional", ())))
            except KeyError:
                raise ConfigError("data.schema.inputs", "missing") from None
        if "inputs" in d:
            kw["inputs"] = _input_set(d["inputs"])

        size = d.get("size") or {}
        if "column" in size:
            kw["size_column"] = str(size["column"])
            kw["size_from"] = None
        elif "from_flaws" in size:
            kw["size_from"] = tuple(size["from_flaws"])
        if "law" in size:
            kw["size_law"] = _law(size["law"], "size.law")
        if "nuisance" in d:
            kw["nuisance"] = tuple(d["nuisance"])

        tr = d.get("transform") or {}
        kw["boxcox"] = bool(tr.get("boxcox", True))
        if tr.get("lambda") is not None:
            kw["fixed_lambda"] = float(tr["lambda"])
        if "lambda_range" in tr:
            kw["lambda_range"] = tuple(map(float, tr["lambda_range"]))

        grid = d.get("grid") or {}
        kw["grid_n"] = int(grid.get("n", 201))
        if "range" in grid:
            kw["grid_range"] = tuple(map(float, grid["range"]))
        kw["level"] = float(d.get("level", 0.95))
        kw["p"] = float(d.get("p", 0.9))
        if not 0 < kw["level"] < 1:
            raise ConfigError("level", "must be in (0, 1)")
        if not 0 < kw["p"] < 1:
            raise ConfigError("p", "must be in (0, 1)")

        b = d.get("berens") or {}
        kw["berens_draws"] = int(b.get("n_draws", 10_000))
        c = d.get("chaos") or {}
        kw["chaos_degrees"] = tuple(int(x) for x in c.get("degrees", (1, 2, 3)))
        kw["chaos_n_mc"] = int(c.get("n_mc", 10_000))
        kw["chaos_n_sets"] = int(c.get("n_sets", 150))
        k = d.get("kriging") or {}
        kw["kriging_nugget"] = bool(k.get("nugget", False))
        kw["kriging_starts"] = int(k.get("n_starts", 10))
        kw["kriging_n_mc"] = int(k.get("n_mc", 10_000))
        kw["kriging_n_paths"] = int(k.get("n_paths", 200))
        kw["kriging_band_grid"] = int(k.get("band_grid_size", 41))
        kw["kriging_n_mc_paths"] = int(k.get("n_mc_paths", 100))
        kw["sensitivity"] = dict(d.get("sensitivity") or {})
        doe = d.get("doe") or {}
        kw["doe_n"] = int(doe.get("n", 100))
        kw["flaw_split"] = bool(doe.get("flaw_split", False))
        if "second_flaw_columns" in doe:
            kw["second_flaw_columns"] = tuple(doe["second_flaw_columns"])
        kw["seed"] = int(d.get("seed", 0))
        kw["output_dir"] = str(d.get("output_dir", "mapod-out"))
        for key, val in overrides.items():
            if val is not None:
                kw[key] = val
        return cls(**kw)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


def load_config(path: str | Path, **overrides) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"{path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"not valid YAML: {exc}") from None
    return RunConfig.from_dict(raw or {}, base_dir=path.parent, **overrides)


@contextlib.contextmanager
def _atomic(path: Path):
    tmp = path.with_name(path.name + ".tmp")
    yield tmp
    os.replace(tmp, path)


def _write_text(path: Path, text: str) -> None:
    with _atomic(path) as tmp:
        tmp.write_text(text if text.endswith("\n") else text + "\n")


# --------------------------------------------------------------------- data

def generate_design(cfg: RunConfig) -> SimulationDataset:
    """Sobol' design over the configured inputs, with the one/two-flaw split."""
    if cfg.inputs is None:
        raise ConfigError("inputs", "required to generate a design")
    x = sample_inputs(cfg.inputs, cfg.doe_n)
    fc = None
    if cfg.flaw_split:
        fc = flaw_counts(cfg.doe_n)
        cols = [cfg.inputs.index(c) for c in cfg.second_flaw_columns if c in cfg.inputs.names]
        x[np.ix_(fc == 1, cols)] = np.nan
    return SimulationDataset(tuple(cfg.inputs.names), x, None, fc)


def _synthetic_spec(d: dict, seed: int) -> SyntheticModelSpec:
    keys = {"kind", "beta0", "beta1", "sigma", "lam", "linear_terms", "interaction", "seed",
            "size_name", "noise_name"}
    kw = {k: v for k, v in d.items() if k in keys}
    if "linear_terms" in kw and isinstance(kw["linear_terms"], dict):
        kw["linear_terms"] = tuple(kw["linear_terms"].items())
    kw.setdefault("seed", seed)
    try:
        return SyntheticModelSpec(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError("data.synthetic", str(exc)) from None


def generate_synthetic(cfg: RunConfig) -> SimulationDataset:
    """Synthetic dataset: either a plain design over ``a`` or the configured
    input set with ``a`` derived from the flaw depths."""
    syn = cfg.synthetic or {}
    spec = _synthetic_spec(syn, cfg.seed)
    n = int(syn.get("n", cfg.doe_n))
    if cfg.inputs is None:
        ds, _ = make_dataset(spec, n, tuple(syn.get("a_range", (0.1, 0.5))),
                             noise_in_design=bool(syn.get("noise_in_design", False)))
        return ds
    design = generate_design(replace(cfg, doe_n=n))
    cols = {nm: np.nan_to_num(design.column(nm)) for nm in design.input_names}
    cols[spec.size_name] = _defect_size(cfg, design)
    y = evaluate(spec, cols)
    name = "ProjY" if spec.kind == "power-law" else "y"
    return design.with_response(y, name)


def _load_data(cfg: RunConfig) -> SimulationDataset:
    if cfg.data_path is not None:
        path = cfg.resolve(cfg.data_path)
        if not path.exists():
            raise ConfigError("data.path", f"{path} does not exist")
        return load_dataset(path, cfg.schema)
    return generate_synthetic(cfg)


def _defect_size(cfg: RunConfig, ds: SimulationDataset) -> np.ndarray:
    if cfg.size_column is not None:
        return np.asarray(ds.column(cfg.size_column))
    if cfg.size_from and cfg.size_from[0] in ds.input_names:
        return derive_defect_size(ds, *cfg.size_from)
    if "a" in ds.input_names:
        return np.asarray(ds.column("a"))
    raise ConfigError("size", "cannot determine the defect size column")


def _metamodel_inputs(cfg: RunConfig, ds: SimulationDataset, a: np.ndarray):
    """Design matrix and laws for the metamodels: size first, then nuisance
    inputs in their independent (quantile) parameterization. Absent values
    are set to the median of their law."""
    size_cols = set(cfg.size_from or ()) | ({cfg.size_column} if cfg.size_column else set())
    size_cols.add("a")
    names = cfg.nuisance or tuple(n for n in ds.input_names if n not in size_cols)
    law = cfg.size_law or Uniform(float(a.min()), float(a.max()))
    specs = [InputSpec("a", law, "size")]
    cols = [a]
    if names:
        full = cfg.inputs
        if full is None:
            raise ConfigError("inputs", "input laws are needed for the metamodel nuisance inputs")
        indep = full.independent_parameterization()
        xi = full.to_independent(np.column_stack([ds.column(n) for n in full.names]))
        for nm in names:
            j = full.index(nm)
            col = xi[:, j]
            miss = np.isnan(col)
            if miss.any():
                col = np.where(miss, indep[j].law.ppf(0.5), col)
            specs.append(indep[j])
            cols.append(col)
    return np.column_stack(cols), InputSet(specs)


# --------------------------------------------------------------------- run

@dataclass
class _Context:
    cfg: RunConfig
    out: Path
    a: np.ndarray
    y: np.ndarray
    s: float
    grid: np.ndarray
    design: np.ndarray
    specs: InputSet
    lam: float | None
    summaries: list = field(default_factory=list)
    sections: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    sensitivity_text: list = field(default_factory=list)


def _run_berens(ctx: _Context):
    cfg = ctx.cfg
    fit = fit_linear(ctx.a, ctx.y)
    ctx.fits["berens"] = fit
    lines = [f"beta0 = {fit.beta0:.6g}", f"beta1 = {fit.beta1:.6g}",
             f"sigma_eps = {fit.sigma:.6g}", f"R2 = {fit.r_squared:.6g}", f"N = {fit.n}"]
    _write_text(ctx.out / "berens_fit.txt", "\n".join(lines))
    flags = []
    try:
        diag = residual_diagnostics(fit)
        _write_text(ctx.out / "berens_diagnostics.txt", diag.as_text())
        rejected = diag.rejected(0.1)
        lines += [diag.as_text()]
        if rejected:
            flags.append("residual tests rejected at 10%: " + ", ".join(rejected))
    except ValueError as exc:
        _write_text(ctx.out / "berens_diagnostics.txt", f"unavailable: {exc}")
        flags.append(f"diagnostics unavailable: {exc}")
    band = berens_pod_band(fit, ctx.s, ctx.grid, cfg.berens_draws, cfg.level, cfg.seed)
    _write_outputs(ctx, "berens", band)
    if any("kolmogorov" in f or "anderson" in f for f in flags):
        flags.append("normality doubtful: see Binomial-Berens")
    if any("breusch" in f or "durbin" in f for f in flags):
        flags.append("homoscedasticity/independence doubtful: see metamodel methods")
    return lines, flags, band


def _run_binomial(ctx: _Context):
    fit = ctx.fits.get("berens") or fit_linear(ctx.a, ctx.y)
    curve = binomial_pod(fit, ctx.s, ctx.grid)
    band = binomial_band(curve.counts, fit.n, ctx.cfg.level, ctx.grid)
    _write_text(ctx.out / "binomial_fit.txt",
                f"linear fit R2 = {fit.r_squared:.6g}\nN = {fit.n}")
    _write_outputs(ctx, "binomial", band)
    flags = []
    if fit.r_squared < 0.8:
        flags.append("weak linearity (R2 < 0.8): see polynomial chaos")
    return [f"R2 = {fit.r_squared:.6g}"], flags, band


def _run_chaos(ctx: _Context):
    cfg = ctx.cfg
    fit = fit_chaos(ctx.design, ctx.y, ctx.specs, cfg.chaos_degrees)
    ctx.fits["chaos"] = fit
    lines = [f"degree = {fit.degree}", f"P = {len(fit.coefficients)}",
             f"Q2 = {fit.q2:.6g}", f"sigma_eps = {fit.sigma_eps:.6g}",
             "Q2 by degree: " + ", ".join(f"{k}: {v:.6g}" for k, v in fit.q2_by_degree.items()),
             "coefficients (term multi-index over " + ", ".join(ctx.specs.names) + "):"]
    lines += [f"  {t} {c:.6g}" for t, c in zip(fit.basis.terms, fit.coefficients)]
    lines.append("Monte Carlo draws are shared across grid points (common random numbers)")
    _write_text(ctx.out / "chaos_fit.txt", "\n".join(lines))
    band = chaos_pod_band(fit, ctx.s, ctx.grid, cfg.chaos_n_sets, cfg.chaos_n_mc, cfg.level,
                          cfg.seed + 1)
    _write_outputs(ctx, "chaos", band)
    flags = ["chaos residuals assumed Gaussian: see kriging"] if fit.q2 < 0.9 else []
    return lines[:5], flags, band


def _run_kriging(ctx: _Context):
    cfg = ctx.cfg
    opts = KrigingOptions(estimate_nugget=cfg.kriging_nugget, n_starts=cfg.kriging_starts)
    fit = fit_kriging(ctx.design, ctx.y, ctx.specs, opts)
    ctx.fits["kriging"] = fit
    _write_text(ctx.out / "kriging_fit.txt", fit.report() +
                "\nGP band: conditional simulation of whole paths")
    bands = kriging_pod_band(fit, ctx.s, ctx.grid, cfg.kriging_n_mc, cfg.kriging_n_paths,
                             cfg.level, cfg.seed + 2, cfg.kriging_band_grid,
                             cfg.kriging_n_mc_paths)
    _write_outputs(ctx, "kriging", bands)
    return fit.report().splitlines(), [], bands["total"]


def _write_outputs(ctx: _Context, method: str, band):
    from .pod import write_curve_csv
    main = band["total"] if isinstance(band, dict) else band
    with _atomic(ctx.out / f"{method}_curve.csv") as tmp:
        write_curve_csv(main.curve, tmp)
    with _atomic(ctx.out / f"{method}_band.csv") as tmp:
        write_band_csv(band, tmp)


_RUNNERS = {"berens": _run_berens, "binomial": _run_binomial, "chaos": _run_chaos,
            "kriging": _run_kriging}
_TITLES = {"berens": "Berens", "binomial": "Binomial-Berens", "chaos": "Polynomial chaos",
           "kriging": "Kriging"}


def _prepare(cfg: RunConfig) -> _Context:
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = _load_data(cfg)
    a = _defect_size(cfg, ds)
    if ds.response is None:
        raise ConfigError("data", "dataset has no response column")
    lam = None
    y = ds.response
    s = cfg.threshold
    if cfg.boxcox:
        if cfg.fixed_lambda is not None:
            lam = cfg.fixed_lambda
        else:
            lam = fit_boxcox(a, y, cfg.lambda_range).lam
        y = apply_boxcox(y, lam)
        s = float(apply_boxcox(cfg.threshold, lam))
    lo, hi = cfg.grid_range or (float(a.min()), float(a.max()))
    grid = np.linspace(lo, hi, cfg.grid_n) if cfg.grid_range else default_grid(a, cfg.grid_n)
    design, specs = (None, None)
    if {"chaos", "kriging"} & set(cfg.methods) or cfg.sensitivity.get("enabled"):
        design, specs = _metamodel_inputs(cfg, ds, a)
    return _Context(cfg, out, a, y, s, grid, design, specs, lam)


def _manifest(ctx: _Context, extra: dict | None = None) -> dict:
    cfg = ctx.cfg
    import scipy
    m = {
        "mapod_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "seeds": {"berens": cfg.seed, "chaos": cfg.seed + 1, "kriging": cfg.seed + 2,
                  "sensitivity": cfg.seed + 3},
        "boxcox_lambda": ctx.lam,
        "threshold_raw": cfg.threshold,
        "threshold_transformed": ctx.s,
        "methods": list(cfg.methods),
        "n": int(ctx.a.size),
        "grid": {"n": int(ctx.grid.size), "lo": float(ctx.grid[0]), "hi": float(ctx.grid[-1])},
        "failures": ctx.failures,
    }
    if extra:
        m.update(extra)
    blob = json.dumps(m, sort_keys=True).encode()
    m["digest"] = hashlib.sha256(blob).hexdigest()[:16]
    return m


def execute(cfg: RunConfig) -> int:
    """Run every configured method; returns the process exit status.

    0 on success, 1 if any method (or the sensitivity step) failed.
    """
    ctx = _prepare(cfg)
    for method in cfg.methods:
        try:
            lines, flags, band = _RUNNERS[method](ctx)
        except Exception as exc:  # one method failing must not stop the others
            log.exception("method %s failed", method)
            ctx.failures[method] = f"{type(exc).__name__}: {exc}"
            ctx.sections.append((method, [f"FAILED: {exc}"], []))
            continue
        ctx.summaries.append(summarize(_TITLES[method], band, cfg.p))
        ctx.sections.append((method, lines, flags))

    if cfg.sensitivity.get("enabled"):
        try:
            run_sensitivity(cfg, ctx)
        except Exception as exc:
            log.exception("sensitivity failed")
            ctx.failures["sensitivity"] = f"{type(exc).__name__}: {exc}"

    _write_report(ctx)
    return 1 if ctx.failures else 0


def _write_report(ctx: _Context):
    cfg = ctx.cfg
    out = []
    lam = "none" if ctx.lam is None else f"{ctx.lam:.6g}"
    out.append(f"Box-Cox lambda = {lam}; threshold raw = {cfg.threshold:.6g}, "
               f"transformed = {ctx.s:.6g}")
    out.append("")
    for method, lines, flags in ctx.sections:
        out.append(f"== {_TITLES[method]} ==")
        out += lines
        for f in flags:
            out.append(f"! {f}")
        out.append("")
    if ctx.summaries:
        out.append(comparison_table(ctx.summaries))
        with _atomic(ctx.out / "summary.csv") as tmp:
            with open(tmp, "w") as fh:
                fh.write("method,a90,a90_95\n")
                for sm in ctx.summaries:
                    fh.write(f"{sm.method},{sm.a90!r},{sm.a90_95!r}\n")
        for sm in ctx.summaries:
            for w in sm.warnings:
                out.append(f"! {sm.method}: {w}")
    if ctx.sensitivity_text:
        out.append("")
        out.append("== POD Sobol' indices ==")
        out += ctx.sensitivity_text
    _write_text(ctx.out / "report.txt", "\n".join(out))
    _write_text(ctx.out / "manifest.json", json.dumps(_manifest(ctx), indent=2, sort_keys=True))


def run_sensitivity(cfg: RunConfig, ctx: _Context | None = None) -> int:
    """POD-curve, fixed-size and a_p Sobol' indices on a fitted metamodel."""
    own = ctx is None
    if own:
        ctx = _prepare(replace(cfg, sensitivity={**cfg.sensitivity, "enabled": True}))
    sc = cfg.sensitivity
    which = sc.get("metamodel", "kriging")
    fit = ctx.fits.get(which)
    if fit is None:
        if which == "chaos":
            fit = fit_chaos(ctx.design, ctx.y, ctx.specs, cfg.chaos_degrees)
        elif which == "kriging":
            fit = fit_kriging(ctx.design, ctx.y, ctx.specs,
                              KrigingOptions(estimate_nugget=cfg.kriging_nugget,
                                             n_starts=cfg.kriging_starts))
        else:
            raise ConfigError("sensitivity.metamodel", "must be chaos or kriging")
    n_base = int(sc.get("n_base", 4096))
    seed = cfg.seed + 3
    groups = sc.get("groups")
    grid = ctx.grid
    if sc.get("grid_n"):
        grid = np.linspace(grid[0], grid[-1], int(sc["grid_n"]))
    tables = [("POD curve", "sobol_pod_curve.csv",
               pod_sobol_indices(fit, None, grid, ctx.s, n_base, seed, groups))]
    for a in sc.get("sizes", []):
        tables.append((f"POD(a = {float(a):g})", f"sobol_pod_at_{float(a):g}.csv",
                       pod_value_sobol(fit, None, float(a), ctx.s, n_base, seed, groups)))
    p = float(sc.get("p", cfg.p))
    tables.append((f"a_{int(round(100 * p))}", f"sobol_a{int(round(100 * p))}.csv",
                   inverse_pod_sobol(fit, None, p, ctx.s, grid, n_base, seed, groups)))
    for title, name, res in tables:
        with _atomic(ctx.out / name) as tmp:
            res.write_csv(tmp)
        ctx.sensitivity_text.append(f"{title} ({which}, n_base = {n_base}):")
        for nm in res.names:
            first, total = res[nm]
            ctx.sensitivity_text.append(f"  {nm:<12} S = {first:.4f}  T = {total:.4f}")
    if own:
        _write_text(ctx.out / "manifest.json",
                    json.dumps(_manifest(ctx, {"sensitivity_only": True}), indent=2,
                               sort_keys=True))
    return 0


def write_design(cfg: RunConfig, ds: SimulationDataset, name: str) -> Path:
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with _atomic(path) as tmp:
        write_dataset(ds, tmp)
    return path
