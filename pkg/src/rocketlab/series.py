"""Labeled univariate time series, file ingestion and standardization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DatasetParseError, ValidationError

__all__ = [
    "TimeSeries",
    "LabeledSeries",
    "Dataset",
    "load_dataset",
    "dump_dataset",
    "standardize",
    "standardize_rows",
]


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValidationError(f"series must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise ValidationError("series must contain at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("series contains NaN or infinite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A finite, non-empty, read-only sequence of samples.

    ``degenerate`` is set by :func:`standardize` when the input was constant.
    """

    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class LabeledSeries:
    series: TimeSeries
    label: str

    def __post_init__(self):
        if not isinstance(self.series, TimeSeries):
            object.__setattr__(self, "series", TimeSeries(self.series))
        object.__setattr__(self, "label", str(self.label))


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of labeled series.

    ``source_lines`` holds, for each instance, the one-based line number it
    was parsed from (empty when built in memory).
    """

    instances: tuple
    name: str = "dataset"
    source_lines: tuple = field(default=(), compare=False)

    def __post_init__(self):
        instances = tuple(self.instances)
        if not instances:
            raise ValidationError("empty dataset")
        object.__setattr__(self, "instances", instances)
        object.__setattr__(self, "source_lines", tuple(self.source_lines))

    @classmethod
    def from_arrays(cls, rows: Iterable[Sequence[float]], labels: Iterable, name="dataset"):
        rows = list(rows)
        labels = list(labels)
        if len(rows) != len(labels):
            raise ValidationError(
                f"{len(rows)} series but {len(labels)} labels"
            )
        return cls(
            tuple(LabeledSeries(TimeSeries(r), str(y)) for r, y in zip(rows, labels)),
            name=name,
        )

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    @property
    def labels(self) -> list[str]:
        return [inst.label for inst in self.instances]

    @property
    def lengths(self) -> np.ndarray:
        return np.array([len(inst.series) for inst in self.instances], dtype=np.int64)

    @property
    def label_set(self) -> list[str]:
        return sorted(set(self.labels))

    def provenance(self, index: int) -> int | None:
        """Source line of instance ``index``, if the dataset came from a file."""
        if not self.source_lines:
            return None
        return self.source_lines[index]

    def to_array(self) -> np.ndarray:
        """Stack into an ``(instances, N)`` array; requires equal lengths."""
        lengths = self.lengths
        if np.any(lengths != lengths[0]):
            raise ValidationError(
                f"series lengths differ (min {lengths.min()}, max {lengths.max()})"
            )
        return np.stack([inst.series.values for inst in self.instances])


def _detect_delimiter(line: str) -> str:
    if "\t" in line:
        return "\t"
    return ","


def load_dataset(path, format: str | None = None, name: str | None = None) -> Dataset:
    """Read ``label,v_0,...,v_{N-1}`` rows from a CSV or TSV file.

    Lines starting with ``#`` are skipped.  The delimiter is taken from
    ``format`` (``"csv"`` or ``"tsv"``) or detected on the first data row;
    a later row using the other delimiter is an error.  Blank lines are only
    tolerated at the end of the file.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetParseError(f"no such file: {path}")
    if format is None:
        delimiter = None
    elif format == "csv":
        delimiter = ","
    elif format == "tsv":
        delimiter = "\t"
    else:
        raise ValidationError(f"unknown format {format!r}; expected 'csv' or 'tsv'")

    lines = path.read_text().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()

    instances = []
    source_lines = []
    row = 0
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            continue
        if not stripped:
            raise DatasetParseError("empty row", row=row, line=lineno)
        if delimiter is None:
            delimiter = _detect_delimiter(stripped)
        other = "," if delimiter == "\t" else "\t"
        if other in stripped and delimiter not in stripped:
            raise DatasetParseError("inconsistent delimiter", row=row, line=lineno)
        fields = [f.strip() for f in stripped.split(delimiter)]
        if len(fields) < 2 or not fields[0]:
            raise DatasetParseError("empty row", row=row, line=lineno)
        values = []
        for j, text in enumerate(fields[1:], start=1):
            try:
                v = float(text)
            except ValueError:
                raise DatasetParseError(
                    f"non-numeric sample {text!r}", row=row, line=lineno, field=j
                ) from None
            if not math.isfinite(v):
                raise DatasetParseError(
                    f"non-finite sample {text!r}", row=row, line=lineno, field=j
                )
            values.append(v)
        instances.append(LabeledSeries(TimeSeries(values), fields[0]))
        source_lines.append(lineno)
        row += 1

    if not instances:
        raise DatasetParseError("empty dataset")
    return Dataset(tuple(instances), name=name or path.stem, source_lines=tuple(source_lines))


def dump_dataset(ds: Dataset, path, format: str = "csv") -> None:
    """Write ``ds`` in the format read by :func:`load_dataset`.

    Samples use the shortest round-tripping decimal representation, so a
    reload recovers identical floats.
    """
    delimiter = "\t" if format == "tsv" else ","
    with open(path, "w") as fh:
        for inst in ds:
            fh.write(delimiter.join([inst.label, *map(repr, inst.series.values.tolist())]))
            fh.write("\n")


def _standardize_values(x: np.ndarray) -> tuple[np.ndarray, bool]:
    # fsum is correctly rounded, so the statistics do not depend on sample
    # order; circularly shifted inputs therefore standardize to a permutation
    # of the same floats.
    n = x.shape[0]
    mean = math.fsum(x) / n
    centered = x - mean
    var = math.fsum(centered * centered) / n
    if var == 0.0:
        return np.zeros_like(x), True
    return centered / math.sqrt(var), False


def standardize(x) -> TimeSeries:
    """Zero mean, unit population variance.

    A constant series maps to zeros with ``degenerate=True`` instead of
    raising.
    """
    if not isinstance(x, TimeSeries):
        x = TimeSeries(x)
    values, degenerate = _standardize_values(x.values)
    return TimeSeries(values, degenerate=degenerate)


def standardize_rows(X: np.ndarray) -> np.ndarray:
    """Row-wise :func:`standardize` on a 2-D array (same arithmetic)."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty_like(X)
    for i, row in enumerate(X):
        out[i] = _standardize_values(row)[0]
    return out
