"""Random dilated kernels, convolution with bias, and PPV pooling.

Each series is convolved with every kernel and the proportion of strictly
positive outputs (PPV) is kept as one feature per kernel.

Convolution follows ``y[n] = sum_j w[j] * x[n - j*d] + bias``.  The three
padding modes only differ in how ``x[m]`` is resolved for ``m`` outside
``[0, N)``:

* ``none``     -- positions needing such samples are dropped (valid mode,
  ``N - (K-1)*d`` outputs);
* ``zero``     -- the sample is 0 (``N`` outputs);
* ``circular`` -- the index wraps modulo ``N`` (``N`` outputs).

The batched path in :func:`transform` performs the same floating-point
operations in the same order as :func:`convolve`, so a feature computed in
a batch is bit-identical to the one computed for the series alone.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import _rng
from .errors import ConfigError, DimensionError, SpanError, ValidationError
from .series import Dataset, TimeSeries, standardize_rows

__all__ = [
    "PADDINGS",
    "KernelSpec",
    "TransformConfig",
    "FeatureMatrix",
    "generate_kernels",
    "convolve",
    "ppv",
    "positive_counts",
    "transform",
    "transform_array",
]

PADDINGS = ("none", "zero", "circular")
DILATION_POLICIES = ("exponential_random", "fixed")
PADDING_POLICIES = ("always_zero", "random_zero_or_none", "circular", "none")
WEIGHT_LAWS = ("paper", "centered_unit")

# Upper bound on elements in one batched convolution buffer.
_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True, eq=False)
class KernelSpec:
    weights: np.ndarray
    bias: float = 0.0
    dilation: int = 1
    padding: str = "none"
    id: int = 1

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if w.size < 1:
            raise ValidationError("kernel needs at least one weight")
        if not np.all(np.isfinite(w)):
            raise ValidationError("kernel weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        if int(self.dilation) != self.dilation or self.dilation < 1:
            raise ValidationError(f"dilation must be a positive integer, got {self.dilation}")
        object.__setattr__(self, "dilation", int(self.dilation))
        if self.padding not in PADDINGS:
            raise ValidationError(f"padding must be one of {PADDINGS}, got {self.padding!r}")

    @property
    def length(self) -> int:
        return self.weights.shape[0]

    @property
    def span(self) -> int:
        """Effective receptive field ``(K-1)*d + 1``."""
        return (self.length - 1) * self.dilation + 1

    def output_length(self, n: int) -> int:
        self.check_span(n)
        return n - self.span + 1 if self.padding == "none" else n

    def check_span(self, n: int) -> None:
        if self.span > n:
            raise SpanError(self.length, self.dilation, n)

    def with_bias(self, bias: float) -> "KernelSpec":
        return KernelSpec(self.weights, bias, self.dilation, self.padding, self.id)

    def with_padding(self, padding: str) -> "KernelSpec":
        return KernelSpec(self.weights, self.bias, self.dilation, padding, self.id)

    def __eq__(self, other):
        if not isinstance(other, KernelSpec):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.bias == other.bias
            and self.dilation == other.dilation
            and self.padding == other.padding
            and self.id == other.id
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "dilation": self.dilation,
            "padding": self.padding,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["weights"], d["bias"], d["dilation"], d["padding"], d["id"])


@dataclass(frozen=True)
class TransformConfig:
    """Everything that determines a kernel set.

    ``dilation`` is only used with ``dilation_policy="fixed"``.
    ``weight_law="paper"`` draws weights from N(0, 1/K); ``"centered_unit"``
    draws standard normals and subtracts their mean (original ROCKET).
    """

    num_kernels: int = 10_000
    kernel_lengths: tuple = (7, 9, 11)
    seed: int = 0
    dilation_policy: str = "exponential_random"
    dilation: int = 1
    padding_policy: str = "random_zero_or_none"
    weight_law: str = "paper"
    standardize_inputs: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kernel_lengths", tuple(int(k) for k in self.kernel_lengths))
        if int(self.num_kernels) != self.num_kernels or self.num_kernels < 1:
            raise ValidationError(f"num_kernels must be >= 1, got {self.num_kernels}")
        if not self.kernel_lengths or min(self.kernel_lengths) < 1:
            raise ValidationError("kernel_lengths must be non-empty with every K >= 1")
        if self.dilation_policy not in DILATION_POLICIES:
            raise ValidationError(f"dilation_policy must be one of {DILATION_POLICIES}")
        if self.dilation < 1:
            raise ValidationError("dilation must be >= 1")
        if self.padding_policy not in PADDING_POLICIES:
            raise ValidationError(f"padding_policy must be one of {PADDING_POLICIES}")
        if self.weight_law not in WEIGHT_LAWS:
            raise ValidationError(f"weight_law must be one of {WEIGHT_LAWS}")
        if not 0 <= int(self.seed) < 1 << 64:
            raise ValidationError("seed must fit in 64 unsigned bits")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kernel_lengths"] = list(self.kernel_lengths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TransformConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def kernel_set_id(self) -> str:
        return f"{self.seed}-{self.digest()}"


def _max_exponent(n: int, k: int) -> int:
    # Largest u with (k-1) * 2**u <= n-1.
    return ((n - 1) // (k - 1)).bit_length() - 1


def generate_kernels(cfg: TransformConfig, n_hint: int) -> list[KernelSpec]:
    """Draw ``cfg.num_kernels`` kernels that fit a series of length ``n_hint``.

    Kernel ``i`` is drawn from its own counter-based stream, so it does not
    depend on how many kernels precede it.  Kernel lengths whose span cannot
    fit are excluded from the draw; if none fits, :class:`ConfigError`.
    """
    n = int(n_hint)
    if n < 1:
        raise ValidationError("n_hint must be >= 1")
    if cfg.dilation_policy == "fixed":
        feasible = [k for k in cfg.kernel_lengths if (k - 1) * cfg.dilation + 1 <= n]
    else:
        feasible = [k for k in cfg.kernel_lengths if k <= n]
    if not feasible:
        raise ConfigError(
            f"no kernel length in {list(cfg.kernel_lengths)} fits series length {n}"
            + (f" with dilation {cfg.dilation}" if cfg.dilation_policy == "fixed" else "")
        )

    kernels = []
    for i in range(cfg.num_kernels):
        rng = _rng.stream(cfg.seed, _rng.KERNELS, i)
        k = feasible[int(rng.integers(len(feasible)))]
        if cfg.weight_law == "paper":
            weights = rng.normal(0.0, np.sqrt(1.0 / k), size=k)
        else:
            weights = rng.normal(0.0, 1.0, size=k)
            weights = weights - weights.mean()
        bias = rng.uniform(-1.0, 1.0)
        if cfg.dilation_policy == "fixed":
            dilation = cfg.dilation
        elif k == 1:
            dilation = 1
        else:
            dilation = 2 ** int(rng.integers(0, _max_exponent(n, k) + 1))
        if cfg.padding_policy == "always_zero":
            padding = "zero"
        elif cfg.padding_policy == "random_zero_or_none":
            padding = "zero" if rng.integers(2) else "none"
        else:
            padding = cfg.padding_policy
        kernels.append(KernelSpec(weights, bias, dilation, padding, id=i + 1))
    return kernels


def _lagged(X: np.ndarray, lag: int, span: int, padding: str) -> np.ndarray:
    """Columns ``x[n - lag]`` for every output position ``n`` (2-D input)."""
    n = X.shape[1]
    if padding == "none":
        return X[:, span - 1 - lag : n - lag]
    if padding == "circular":
        return np.roll(X, lag % n, axis=1) if lag % n else X
    out = np.zeros_like(X)
    out[:, lag:] = X[:, : n - lag]
    return out


def convolve(x, k: KernelSpec) -> np.ndarray:
    """Dilated convolution of one series with one kernel, bias included."""
    values = x.values if isinstance(x, TimeSeries) else np.asarray(x, dtype=np.float64)
    X = values.reshape(1, -1)
    k.check_span(X.shape[1])
    y = np.zeros(k.output_length(X.shape[1]))
    for j in range(k.length):
        y += _lagged(X, j * k.dilation, k.span, k.padding)[0] * k.weights[j]
    y += k.bias
    return y


def ppv(y) -> float:
    """Fraction of strictly positive entries; zeros do not count."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValidationError("ppv of an empty series is undefined")
    return int(np.count_nonzero(y > 0)) / y.size


def _group_kernels(kernels: Sequence[KernelSpec]) -> dict:
    groups: dict = {}
    for col, k in enumerate(kernels):
        groups.setdefault((k.length, k.dilation, k.padding), []).append(col)
    return groups


def _count_block(X, W, b, dilation, padding):
    K = W.shape[1]
    span = (K - 1) * dilation + 1
    m = X.shape[1] - span + 1 if padding == "none" else X.shape[1]
    Y = np.zeros((X.shape[0], W.shape[0], m))
    for j in range(K):
        Y += _lagged(X, j * dilation, span, padding)[:, None, :] * W[None, :, j, None]
    Y += b[None, :, None]
    return np.count_nonzero(Y > 0, axis=2)


def positive_counts(X: np.ndarray, kernels: Sequence[KernelSpec], threads: int = 1):
    """Positive-output counts and output lengths for an equal-length batch.

    Returns ``(counts, lengths)`` with ``counts`` of shape
    ``(instances, kernels)`` and ``lengths`` of shape ``(kernels,)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D batch, got shape {X.shape}")
    n_inst, n = X.shape
    lengths = np.empty(len(kernels), dtype=np.int64)
    for col, k in enumerate(kernels):
        lengths[col] = k.output_length(n)
    counts = np.zeros((n_inst, len(kernels)), dtype=np.int64)

    jobs = []
    for (K, d, padding), cols in _group_kernels(kernels).items():
        cols = np.asarray(cols)
        W = np.stack([kernels[c].weights for c in cols])
        b = np.array([kernels[c].bias for c in cols])
        m = lengths[cols[0]]
        per_kernel = max(1, _BLOCK_ELEMENTS // max(1, m))
        inst_step = max(1, min(n_inst, per_kernel))
        kern_step = max(1, per_kernel // inst_step)
        for i0 in range(0, n_inst, inst_step):
            for c0 in range(0, len(cols), kern_step):
                jobs.append((i0, i0 + inst_step, cols[c0 : c0 + kern_step],
                             W[c0 : c0 + kern_step], b[c0 : c0 + kern_step], d, padding))

    def run(job):
        i0, i1, cc, W, b, d, padding = job
        counts[i0:i1, cc] = _count_block(X[i0:i1], W, b, d, padding)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, jobs))
    else:
        for job in jobs:
            run(job)
    return counts, lengths


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """PPV features: row per instance, column per kernel.

    When built by :func:`transform` the exact integers behind every feature
    are kept in ``counts`` and ``denominators`` (``values`` is their ratio).
    Matrices read back from CSV carry ``values`` only.
    """

    values: np.ndarray
    kernel_ids: tuple
    kernel_set_id: str = ""
    labels: tuple | None = None
    config: dict | None = None
    counts: np.ndarray | None = None
    denominators: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DimensionError(f"feature matrix must be 2-D, got shape {values.shape}")
        if values.shape[1] != len(self.kernel_ids):
            raise DimensionError(
                f"{values.shape[1]} feature columns but {len(self.kernel_ids)} kernel ids"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kernel_ids", tuple(int(i) for i in self.kernel_ids))
        for name in ("counts", "denominators"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(np.broadcast_to(arr, values.shape), dtype=np.int64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.labels is not None:
            labels = tuple(str(y) for y in self.labels)
            if len(labels) != values.shape[0]:
                raise DimensionError("one label per row required")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_counts(cls, counts, denominators, kernel_ids, **kwargs) -> "FeatureMatrix":
        counts = np.asarray(counts, dtype=np.int64)
        den = np.broadcast_to(np.asarray(denominators, dtype=np.int64), counts.shape)
        return cls(counts / den, kernel_ids, counts=counts, denominators=den, **kwargs)

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return np.array_equal(self.values, other.values) and self.kernel_ids == other.kernel_ids

    __hash__ = None

    def header(self) -> list[str]:
        return ["label"] + [f"kernel_{i}" for i in self.kernel_ids]

    def to_csv(self, path) -> None:
        labels = self.labels or ("",) * self.shape[0]
        with open(path, "w") as fh:
            fh.write(",".join(self.header()) + "\n")
            for label, row in zip(labels, self.values.tolist()):
                fh.write(label + "," + ",".join(map(repr, row)) + "\n")

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if not header or header[0] != "label":
                raise DimensionError(f"{path}: not a feature matrix CSV")
            ids = [int(h.rsplit("_", 1)[1]) for h in header[1:]]
            labels, rows = [], []
            for lineno, line in enumerate(fh, start=2):
                fields = line.rstrip("\n").split(",")
                if len(fields) != len(header):
                    raise DimensionError(
                        f"{path}: line {lineno} has {len(fields) - 1} features, "
                        f"header declares {len(ids)}"
                    )
                labels.append(fields[0])
                rows.append([float(v) for v in fields[1:]])
        values = np.array(rows, dtype=np.float64).reshape(len(rows), len(ids))
        return cls(values, tuple(ids), labels=tuple(labels) if any(labels) else None)

    def to_json_dict(self) -> dict:
        d = {
            "schema_version": 1,
            "kind": "feature_matrix",
            "kernel_set_id": self.kernel_set_id,
            "config": self.config,
            "kernel_ids": list(self.kernel_ids),
            "labels": list(self.labels) if self.labels is not None else None,
            "values": self.values.tolist(),
        }
        if self.counts is not None:
            d["counts"] = self.counts.tolist()
            d["denominators"] = self.denominators.tolist()
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeatureMatrix":
        return cls(
            np.array(d["values"], dtype=np.float64),
            tuple(d["kernel_ids"]),
            kernel_set_id=d.get("kernel_set_id", ""),
            labels=tuple(d["labels"]) if d.get("labels") is not None else None,
            config=d.get("config"),
            counts=d.get("counts"),
            denominators=d.get("denominators"),
        )


def _default_threads() -> int:
    return max(1, int(os.environ.get("ROCKETLAB_THREADS", "1")))


def transform_array(X, kernels: Sequence[KernelSpec], standardize_inputs=True, threads=None):
    """Counts and denominators for an equal-length ``(instances, N)`` array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if standardize_inputs:
        X = standardize_rows(X)
    return positive_counts(X, kernels, threads or _default_threads())


def transform(
    ds: Dataset,
    cfg: TransformConfig,
    kernels: Sequence[KernelSpec] | None = None,
    threads: int | None = None,
) -> FeatureMatrix:
    """PPV feature matrix of ``ds``.

    Kernels are generated against the shortest series unless given.  Rows
    follow dataset order and columns kernel order whatever ``threads`` is.
    """
    lengths = ds.lengths
    if kernels is None:
        kernels = generate_kernels(cfg, int(lengths.min()))
    counts = np.zeros((len(ds), len(kernels)), dtype=np.int64)
    dens = np.zeros_like(counts)
    for n in np.unique(lengths):
        rows = np.flatnonzero(lengths == n)
        X = np.stack([ds.instances[r].series.values for r in rows])
        c, d = transform_array(X, kernels, cfg.standardize_inputs, threads)
        counts[rows] = c
        dens[rows] = d
    return FeatureMatrix.from_counts(
        counts,
        dens,
        tuple(k.id for k in kernels),
        kernel_set_id=cfg.kernel_set_id,
        labels=tuple(ds.labels),
        config=cfg.to_dict(),
    )
