"""Input laws, simulation datasets and CSV persistence."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "Gaussian",
    "Uniform",
    "ConditionalUniform",
    "InputSpec",
    "InputSet",
    "SimulationDataset",
    "Schema",
    "PAPER_COLUMNS",
    "SpecError",
    "SchemaError",
    "DataError",
    "load_dataset",
    "write_dataset",
    "derive_defect_size",
]

PAPER_COLUMNS = ("E", "h1", "h2", "P1", "P2", "ebav1", "ebav2")


class SpecError(ValueError):
    """Invalid input law or input set."""


class SchemaError(ValueError):
    """A declared column is missing from a dataset file."""


class DataError(ValueError):
    """Malformed or inconsistent dataset content."""


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise SpecError(f"Gaussian sd must be > 0, got {self.sd}")

    def ppf(self, u):
        return self.mean + self.sd * ndtri(u)

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mean) / self.sd)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise SpecError(f"Uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    def ppf(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)


@dataclass(frozen=True)
class ConditionalUniform:
    """Uniform on ``[-x_src + lo_offset, hi]`` where ``x_src`` is another input."""

    source: str
    lo_offset: float
    hi: float

    def bounds(self, src):
        src = np.asarray(src, dtype=float)
        return -src + self.lo_offset, np.broadcast_to(self.hi, src.shape)


_ROLES = ("size", "nuisance")


@dataclass(frozen=True)
class InputSpec:
    """One named model input.

    ``role`` is ``"size"`` for inputs that make up the defect size (or the
    size itself), ``"nuisance"`` otherwise.
    """

    name: str
    law: Gaussian | Uniform | ConditionalUniform
    role: str = "nuisance"

    def __post_init__(self):
        if self.role not in _ROLES:
            raise SpecError(f"role of {self.name!r} must be one of {_ROLES}")


class InputSet(Sequence):
    """Ordered collection of :class:`InputSpec` with unit-cube mappings."""

    def __init__(self, specs: Iterable[InputSpec]):
        self._specs = tuple(specs)
        names = [s.name for s in self._specs]
        if len(set(names)) != len(names):
            raise SpecError(f"duplicate input names in {names}")
        for j, s in enumerate(self._specs):
            if isinstance(s.law, ConditionalUniform):
                if s.law.source not in names[:j]:
                    raise SpecError(
                        f"{s.name!r} depends on {s.law.source!r}, which must come earlier"
                    )
                src = self._specs[names.index(s.law.source)]
                if isinstance(src.law, Gaussian):
                    raise SpecError(f"{s.name!r}: unbounded source {src.name!r}")
                lo_max = -self._source_min(src) + s.law.lo_offset
                if not lo_max < s.law.hi:
                    raise SpecError(
                        f"{s.name!r}: realized interval empty for some {src.name} values"
                    )

    def _source_min(self, src: InputSpec) -> float:
        law = src.law
        if isinstance(law, Uniform):
            return law.lo
        # chained conditional: smallest attainable lower bound of the source
        parent = self[self.names.index(law.source)]
        return -self._source_max(parent) + law.lo_offset

    def _source_max(self, src: InputSpec) -> float:
        law = src.law
        if isinstance(law, Uniform):
            return law.hi
        if isinstance(law, ConditionalUniform):
            return law.hi
        raise SpecError(f"unbounded source {src.name!r}")

    def __getitem__(self, i):
        return self._specs[i]

    def __len__(self):
        return len(self._specs)

    def __repr__(self):
        return f"InputSet({list(self._specs)!r})"

    @property
    def names(self) -> list[str]:
        return [s.name for s in self._specs]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    @property
    def size_index(self) -> int:
        """Column of the (single) size input; used by the metamodel modules."""
        idx = [j for j, s in enumerate(self._specs) if s.role == "size"]
        if len(idx) != 1:
            raise SpecError(f"expected exactly one size input, found {len(idx)}")
        return idx[0]

    @property
    def independent(self) -> bool:
        return not any(isinstance(s.law, ConditionalUniform) for s in self._specs)

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF map of unit-cube points, column by column."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if u.shape[1] != len(self):
            raise ValueError(f"expected {len(self)} columns, got {u.shape[1]}")
        x = np.empty_like(u)
        for j, s in enumerate(self._specs):
            if isinstance(s.law, ConditionalUniform):
                lo, hi = s.law.bounds(x[:, self.index(s.law.source)])
                bad = np.flatnonzero(~(lo < hi))
                if bad.size:
                    raise SpecError(f"{s.name!r}: empty realized interval at row {bad[0]}")
                x[:, j] = lo + (hi - lo) * u[:, j]
            else:
                x[:, j] = s.law.ppf(u[:, j])
        return x

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        """CDF map back to the unit cube (conditional columns use realized bounds)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = np.empty_like(x)
        for j, s in enumerate(self._specs):
            if isinstance(s.law, ConditionalUniform):
                lo, hi = s.law.bounds(x[:, self.index(s.law.source)])
                u[:, j] = (x[:, j] - lo) / (hi - lo)
            else:
                u[:, j] = s.law.cdf(x[:, j])
        return u

    def independent_parameterization(self) -> "InputSet":
        """Same inputs with every conditional-uniform law replaced by U(0, 1).

        Values of such a column in this parameterization are its quantile
        ``u`` within the realized interval (see :meth:`to_independent`).
        """
        return InputSet(
            InputSpec(s.name, Uniform(0.0, 1.0), s.role)
            if isinstance(s.law, ConditionalUniform)
            else s
            for s in self._specs
        )

    def to_independent(self, x: np.ndarray) -> np.ndarray:
        x = np.array(np.atleast_2d(x), dtype=float)
        u = self.to_unit(x)
        for j, s in enumerate(self._specs):
            if isinstance(s.law, ConditionalUniform):
                x[:, j] = u[:, j]
        return x


@dataclass(frozen=True)
class SimulationDataset:
    """Design rows plus the scalar simulator response.

    Absent values (the second flaw of a one-flaw row) are stored as NaN.
    """

    input_names: tuple[str, ...]
    rows: np.ndarray
    response: np.ndarray | None = None
    flaw_count: np.ndarray | None = None
    response_name: str = "ProjY"

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "input_names", tuple(self.input_names))
        if rows.ndim != 2 or rows.shape[1] != len(self.input_names):
            raise DataError(
                f"rows have shape {rows.shape}, expected (N, {len(self.input_names)})"
            )
        if rows.shape[0] < 3:
            raise DataError(f"need at least 3 rows, got {rows.shape[0]}")
        if np.isinf(rows).any():
            raise DataError("infinite value in design rows")
        if self.response is not None:
            resp = np.array(self.response, dtype=float)
            if resp.shape != (rows.shape[0],):
                raise DataError("response length does not match row count")
            if not np.isfinite(resp).all():
                raise DataError("non-finite response value")
            object.__setattr__(self, "response", resp)
        if self.flaw_count is not None:
            fc = np.array(self.flaw_count, dtype=int)
            if fc.shape != (rows.shape[0],) or not np.isin(fc, (1, 2)).all():
                raise DataError("flaw_count must be 1 or 2 on every row")
            object.__setattr__(self, "flaw_count", fc)
        for arr in (rows, self.response, self.flaw_count):
            if arr is not None:
                arr.flags.writeable = False

    def __len__(self) -> int:
        return self.rows.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.rows[:, self.input_names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def with_response(self, response, name: str | None = None) -> "SimulationDataset":
        return SimulationDataset(
            self.input_names, self.rows, response, self.flaw_count,
            name or self.response_name,
        )


@dataclass(frozen=True)
class Schema:
    """Which CSV columns to read.

    ``response`` and ``flaw_count`` may be None when the file carries no
    such column (a design with no simulation results yet).
    """

    inputs: tuple[str, ...] = PAPER_COLUMNS
    response: str | None = "ProjY"
    flaw_count: str | None = None
    optional: tuple[str, ...] = field(default=())


def _parse_cell(text: str, row: int, col: str) -> float:
    text = text.strip()
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise DataError(f"row {row}, column {col!r}: cannot parse {text!r}") from None


def load_dataset(path: str | Path, schema: Schema | None = None) -> SimulationDataset:
    """Read a CSV dataset with a header row.

    Empty input cells are read as absent (NaN). Row order is kept.
    """
    schema = schema or Schema()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        wanted = list(schema.inputs)
        if schema.response:
            wanted.append(schema.response)
        if schema.flaw_count:
            wanted.append(schema.flaw_count)
        for name in wanted:
            if name not in header and name not in schema.optional:
                raise SchemaError(f"{path}: missing column {name!r}")
        cols = {name: header.index(name) for name in wanted if name in header}

        rows, resp, fc = [], [], []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"line {lineno}: {len(record)} cells, header has {len(header)}"
                )
            rows.append([
                _parse_cell(record[cols[c]], lineno, c) if c in cols else math.nan
                for c in schema.inputs
            ])
            if schema.response:
                v = _parse_cell(record[cols[schema.response]], lineno, schema.response)
                if math.isnan(v):
                    raise DataError(f"line {lineno}: empty response cell")
                resp.append(v)
            if schema.flaw_count:
                fc.append(int(_parse_cell(record[cols[schema.flaw_count]], lineno,
                                          schema.flaw_count)))

    if not rows:
        raise DataError(f"{path}: no data rows")
    return SimulationDataset(
        tuple(schema.inputs),
        np.array(rows, dtype=float),
        np.array(resp) if schema.response else None,
        np.array(fc) if schema.flaw_count else None,
        schema.response or "ProjY",
    )


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_dataset(ds: SimulationDataset, path: str | Path, flaw_column: str = "i_P2") -> None:
    """Write ``ds`` as CSV; floats use ``repr`` so reloading is exact."""
    header = list(ds.input_names)
    if ds.response is not None:
        header.append(ds.response_name)
    if ds.flaw_count is not None:
        header.append(flaw_column)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(ds)):
            rec = [_fmt(v) for v in ds.rows[i]]
            if ds.response is not None:
                rec.append(_fmt(ds.response[i]))
            if ds.flaw_count is not None:
                rec.append(str(int(ds.flaw_count[i])))
            w.writerow(rec)


def derive_defect_size(ds: SimulationDataset, first: str = "P1",
                       second: str = "P2") -> np.ndarray:
    """Defect size ``a = max(P1, P2)`` on two-flaw rows, ``P1`` on one-flaw rows.

    Without a flaw-count column, a row with an absent ``P2`` is a one-flaw row.
    """
    p1 = ds.column(first)
    p2 = ds.column(second) if second in ds.input_names else np.full(len(ds), np.nan)
    if np.isnan(p1).any():
        raise DataError(f"missing {first} at row {int(np.flatnonzero(np.isnan(p1))[0])}")
    if ds.flaw_count is not None:
        two = ds.flaw_count == 2
        missing = two & np.isnan(p2)
        if missing.any():
            raise DataError(
                f"two-flaw row {int(np.flatnonzero(missing)[0])} has no {second}"
            )
    else:
        two = ~np.isnan(p2)
    a = np.where(two, np.fmax(p1, p2), p1)
    if not (a > 0).all():
        raise DataError("defect size must be positive")
    return a
