"""Toeplitz view of a kernel and coherence diagnostics.

Valid-mode convolution with a kernel of length ``K`` and dilation ``d`` is a
linear map ``x -> H x`` where ``H`` has ``R = N - (K-1)*d`` rows and ``N``
columns and row ``r`` holds the (time-reversed) taps at columns
``r, r+d, ..., r+(K-1)d``.  This module computes

* ``normalized_coherence`` -- the largest ``|<a, b>| / (|a| |b|)`` over
  distinct columns (or rows) of a matrix;
* ``raw_overlap`` -- the largest unnormalized ``|T_ij| = |<h_i, h_j>|``
  between columns (or rows) of ``H``, the quantity controlled by the union
  bound ``P(max |T_ij| > alpha) <= N (K-1) / (2 K alpha**2)``.

The two are different quantities and are reported separately.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import _rng
from .errors import DimensionError, SpanError, UndefinedCoherenceError, ValidationError
from .kernels import KernelSpec

__all__ = [
    "ToeplitzView",
    "CoherenceReport",
    "RecoverabilityVerdict",
    "DilationComparison",
    "build_toeplitz",
    "coherence",
    "cross_basis_coherence",
    "dft_basis",
    "overlap_theta",
    "overlap_sum",
    "t01_variance",
    "t01_variance_monte_carlo",
    "coherence_bound",
    "raw_overlap_max",
    "verify_bound_monte_carlo",
    "recoverability",
    "compare_dilation_coherence",
]

DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class ToeplitzView:
    """Matrix form of valid-mode convolution with ``kernel`` (bias dropped).

    ``rows`` is materialized only when ``n <= max_dense``; :meth:`matvec`
    works either way.
    """

    kernel: KernelSpec
    n: int
    rows: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n - self.kernel.span + 1, self.n)

    @property
    def taps(self) -> np.ndarray:
        """Row-0 entries in column order (the reversed kernel weights)."""
        return self.kernel.weights[::-1]

    def column_positions(self) -> np.ndarray:
        return np.arange(self.kernel.length) * self.kernel.dilation

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got {x.shape}")
        if self.rows is not None:
            return self.rows @ x
        r = self.shape[0]
        out = np.zeros(r)
        for p, (g, pos) in enumerate(zip(self.taps, self.column_positions())):
            out += g * x[pos : pos + r]
        return out


def build_toeplitz(k: KernelSpec, n: int, max_dense: int = DENSE_LIMIT) -> ToeplitzView:
    """Toeplitz view ``H`` with ``H @ x == convolve(x, k)`` for bias 0, no padding."""
    n = int(n)
    if k.span > n:
        raise SpanError(k.length, k.dilation, n)
    kernel = KernelSpec(k.weights, 0.0, k.dilation, "none", k.id)
    view = ToeplitzView(kernel, n)
    if n > max_dense:
        return view
    r, _ = view.shape
    rows = np.zeros((r, n))
    idx = np.arange(r)
    for g, pos in zip(view.taps, view.column_positions()):
        rows[idx, idx + pos] = g
    rows.setflags(write=False)
    return ToeplitzView(kernel, n, rows)


def _unit_vectors(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(vectors, axis=1)
    keep = np.flatnonzero(norms > 0)
    if keep.size < vectors.shape[0]:
        warnings.warn(
            f"skipping {vectors.shape[0] - keep.size} zero vector(s) in coherence",
            RuntimeWarning,
            stacklevel=3,
        )
    return vectors[keep] / norms[keep, None], keep


def coherence(m, mode: str = "columns") -> tuple[float, tuple[int, int]]:
    """Largest absolute normalized inner product between distinct vectors.

    Complex input uses the Hermitian inner product.  Zero vectors are
    skipped with a warning.  Returns ``(mu, (i, j))`` with ``i < j`` indexing
    the original matrix.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise DimensionError("coherence needs a 2-D matrix")
    if mode == "columns":
        vectors = m.T
    elif mode == "rows":
        vectors = m
    else:
        raise ValidationError(f"mode must be 'columns' or 'rows', got {mode!r}")
    unit, keep = _unit_vectors(vectors)
    if unit.shape[0] < 2:
        raise UndefinedCoherenceError("coherence needs at least two non-zero vectors")
    gram = np.abs(unit.conj() @ unit.T)
    np.fill_diagonal(gram, -1.0)
    flat = int(np.argmax(gram))
    a, b = divmod(flat, gram.shape[1])
    i, j = sorted((int(keep[a]), int(keep[b])))
    return float(min(gram[a, b], 1.0)), (i, j)


def cross_basis_coherence(a, b) -> float:
    """Largest normalized ``|<a_r, b_s>|`` over rows ``a_r`` of ``a`` and ``b_s`` of ``b``."""
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    if a.shape[1] != b.shape[1]:
        raise DimensionError(
            f"basis vectors have different lengths: {a.shape[1]} vs {b.shape[1]}"
        )
    ua, _ = _unit_vectors(a)
    ub, _ = _unit_vectors(b)
    if ua.shape[0] == 0 or ub.shape[0] == 0:
        raise UndefinedCoherenceError("each basis needs a non-zero vector")
    return float(min(np.abs(ua.conj() @ ub.T).max(), 1.0))


def dft_basis(n: int) -> np.ndarray:
    """Unitary DFT matrix; row ``k`` is the ``k``-th Fourier atom."""
    t = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(t, t) / n) / math.sqrt(n)


def overlap_theta(i: int, j: int, k: int) -> int:
    """Number of overlapping taps between Toeplitz columns ``i < j``."""
    if i >= j:
        raise ValidationError(f"overlap_theta needs i < j, got i={i}, j={j}")
    if k < 1:
        raise ValidationError("kernel length must be >= 1")
    return k - (j - i) if j - i < k else 0


def overlap_sum(n: int, k: int, cyclic: bool = True) -> int:
    """Sum of ``overlap_theta`` over pairs, evaluated pair by pair.

    With ``cyclic=True`` each of the ``n`` columns is paired with the
    ``n - 1`` columns that follow it modulo ``n`` (row-wise accounting: every
    column sees a full window of ``K - 1`` successors), giving
    ``n K (K-1) / 2`` whenever ``K <= n``.  With ``cyclic=False`` only pairs
    ``0 <= i < j < n`` count, which is smaller near the right edge.

    Every pair ``(i, j)`` is materialized and scored individually (with
    integer arithmetic), not through the closed form.
    """
    if n < 1 or k < 1:
        raise ValidationError("n and k must be >= 1")
    i = np.arange(n, dtype=np.int64)[:, None]
    if cyclic:
        j = i + np.arange(1, n, dtype=np.int64)[None, :]
    else:
        j = np.broadcast_to(np.arange(n, dtype=np.int64)[None, :], (n, n))
    gap = (j - i)[j > i]
    theta = np.where(gap < k, k - gap, 0)
    return int(theta.sum())


def t01_variance(k_len: int) -> float:
    """Variance ``(K-1)/K**2`` of the adjacent-shift overlap for N(0, 1/K) taps."""
    if k_len < 2:
        raise ValidationError("t01_variance needs K >= 2")
    return (k_len - 1) / k_len**2


def t01_variance_monte_carlo(k_len: int, samples: int = 100_000, seed: int = 0) -> float:
    """Sample variance of ``sum_k h_k h_{k+1}`` with ``h ~ N(0, 1/K)``."""
    if k_len < 2:
        raise ValidationError("t01_variance needs K >= 2")
    rng = _rng.stream(seed, _rng.VARIANCE_TRIALS, k_len)
    h = rng.normal(0.0, math.sqrt(1.0 / k_len), size=(samples, k_len))
    t = np.sum(h[:, :-1] * h[:, 1:], axis=1)
    return float(np.var(t, ddof=1))


def coherence_bound(n: int, k_len: int, alpha: float) -> float:
    """Union/Chebyshev bound ``N (K-1) / (2 K alpha**2)``; may exceed 1."""
    if alpha <= 0:
        raise ValidationError("alpha must be > 0")
    if k_len < 2:
        raise ValidationError("coherence_bound needs K >= 2")
    if n < 1:
        raise ValidationError("n must be >= 1")
    return n * (k_len - 1) / (2 * k_len * alpha**2)


def _pair_stats(weights: np.ndarray, dilation: int, n: int, axis: str):
    """Max raw overlap and max normalized coherence for a batch of kernels.

    Uses the shift structure of ``H`` (prefix sums of lagged tap products),
    so nothing of size ``R x N`` is materialized.  ``weights`` has shape
    ``(trials, K)``.
    """
    w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    trials, k = w.shape
    g = w[:, ::-1]
    d = int(dilation)
    span = (k - 1) * d + 1
    if span > n:
        raise SpanError(k, d, n)
    rows = n - span + 1
    raw = np.zeros(trials)
    norm = np.zeros(trials)
    norm_pair = np.zeros((trials, 2), dtype=np.int64)
    found = False

    if axis == "rows":
        row_norm = np.sqrt(np.sum(g * g, axis=1))
        for lag in range(1, k):
            if lag * d > rows - 1:
                break
            found = True
            t = np.abs(np.sum(g[:, :-lag] * g[:, lag:], axis=1))
            raw = np.maximum(raw, t)
            nt = np.divide(t, row_norm**2, out=np.zeros_like(t), where=row_norm > 0)
            better = nt > norm
            norm = np.where(better, nt, norm)
            norm_pair[better] = (0, lag * d)
        if not found:
            if rows < 2:
                raise UndefinedCoherenceError("Toeplitz matrix has fewer than two rows")
            # every row pair is disjoint
        return raw, norm, norm_pair

    if axis != "columns":
        raise ValidationError(f"axis must be 'columns' or 'rows', got {axis!r}")

    cols = np.arange(n)
    p_lo = np.maximum(0, -((rows - 1 - cols) // d))  # ceil((c - rows + 1) / d)
    p_hi = np.minimum(k - 1, cols // d)
    sq = np.concatenate([np.zeros((trials, 1)), np.cumsum(g * g, axis=1)], axis=1)
    valid = p_hi >= p_lo
    col_norm2 = np.where(valid, sq[:, np.clip(p_hi + 1, 0, k)] - sq[:, p_lo], 0.0)
    col_norm = np.sqrt(np.maximum(col_norm2, 0.0))
    for lag in range(1, k):
        c = cols[: max(0, n - lag * d)]
        if c.size == 0:
            break
        found = True
        prod = g[:, :-lag] * g[:, lag:]
        pref = np.concatenate([np.zeros((trials, 1)), np.cumsum(prod, axis=1)], axis=1)
        lo = p_lo[c]
        hi = np.minimum(p_hi[c], k - 1 - lag)
        ok = hi >= lo
        t = np.where(ok, pref[:, np.clip(hi + 1, 0, k - lag)] - pref[:, np.clip(lo, 0, k - lag)], 0.0)
        t = np.abs(t)
        raw = np.maximum(raw, t.max(axis=1))
        denom = col_norm[:, c] * col_norm[:, c + lag * d]
        nt = np.divide(t, denom, out=np.zeros_like(t), where=denom > 0)
        best = np.argmax(nt, axis=1)
        val = nt[np.arange(trials), best]
        better = val > norm
        norm = np.where(better, val, norm)
        norm_pair[better, 0] = c[best[better]]
        norm_pair[better, 1] = c[best[better]] + lag * d
    if not found:
        raise UndefinedCoherenceError("Toeplitz matrix has fewer than two overlapping columns")
    return raw, np.minimum(norm, 1.0), norm_pair


def raw_overlap_max(k: KernelSpec, n: int, axis: str = "columns") -> float:
    """Largest unnormalized ``|<h_i, h_j>|`` between distinct columns/rows of ``H``."""
    raw, _, _ = _pair_stats(k.weights[None, :], k.dilation, n, axis)
    return float(raw[0])


@dataclass(frozen=True)
class CoherenceReport:
    """Monte-Carlo check of the union bound on Toeplitz overlaps.

    ``mu`` is the worst normalized coherence seen over all trials (with its
    ``arg_pair``) and ``mu_mean`` its average; the bound itself concerns the
    raw overlaps, whose exceedance rate is ``empirical_exceed_rate``.
    """

    axis: str
    n: int
    k: int
    alpha: float
    bound_value: float
    vacuous: bool
    trials: int
    exceed_count: int
    empirical_exceed_rate: float
    standard_error: float
    passed: bool
    raw_overlap_mean: float
    mu: float
    mu_mean: float
    arg_pair: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arg_pair"] = list(self.arg_pair)
        return d


def verify_bound_monte_carlo(
    n: int,
    k_len: int,
    alpha: float,
    trials: int = 2000,
    seed: int = 0,
    axis: str = "columns",
) -> CoherenceReport:
    """Estimate ``P(max |T_ij| > alpha)`` and compare with :func:`coherence_bound`.

    Each trial draws a kernel with N(0, 1/K) taps from its own stream, forms
    the valid-mode Toeplitz matrix for length ``n`` and records whether any
    pair of distinct columns (or rows) has ``|T_ij| > alpha``.  The check
    passes when the observed rate is at most ``min(1, bound)`` plus three
    binomial standard errors evaluated at that reference rate.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    bound = coherence_bound(n, k_len, alpha)
    weights = np.empty((trials, k_len))
    scale = math.sqrt(1.0 / k_len)
    for t in range(trials):
        weights[t] = _rng.stream(seed, _rng.COHERENCE_TRIALS, t).normal(0.0, scale, size=k_len)
    raw, norm, pairs = _pair_stats(weights, 1, n, axis)
    exceed = int(np.count_nonzero(raw > alpha))
    rate = exceed / trials
    ref = min(1.0, bound)
    se = math.sqrt(ref * (1.0 - ref) / trials)
    worst = int(np.argmax(norm))
    return CoherenceReport(
        axis=axis,
        n=int(n),
        k=int(k_len),
        alpha=float(alpha),
        bound_value=bound,
        vacuous=bound >= 1.0,
        trials=int(trials),
        exceed_count=exceed,
        empirical_exceed_rate=rate,
        standard_error=se,
        passed=rate <= ref + 3.0 * se,
        raw_overlap_mean=float(raw.mean()),
        mu=float(norm[worst]),
        mu_mean=float(norm.mean()),
        arg_pair=(int(pairs[worst, 0]), int(pairs[worst, 1])),
    )


@dataclass(frozen=True)
class RecoverabilityVerdict:
    """Heuristic sparse-recovery conditions for one kernel length.

    ``rip_ok`` tests ``K > s**2 ln(N) / c_s`` and ``coherence_ok`` tests
    ``mu < 1 / (2s - 1)``.  ``c_s`` is an unspecified constant, so
    ``rip_ok`` is only meaningful relative to the chosen value.  The RIP
    constant delta_s itself is not estimated.
    """

    s: int
    n: int
    k: int
    c_s: float
    mu_used: float
    rip_threshold: float
    coherence_threshold: float
    rip_ok: bool
    coherence_ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def recoverability(s: int, n: int, k_len: int, c_s: float = 1.0, mu: float = 0.0) -> RecoverabilityVerdict:
    if s < 1:
        raise ValidationError("sparsity s must be >= 1")
    if n < 2:
        raise ValidationError("n must be >= 2")
    if c_s <= 0:
        raise ValidationError("c_s must be > 0")
    if not 0.0 <= mu <= 1.0:
        raise ValidationError("mu must lie in [0, 1]")
    rip_threshold = s * s * math.log(n) / c_s
    coh_threshold = 1.0 / (2 * s - 1)
    return RecoverabilityVerdict(
        s=int(s),
        n=int(n),
        k=int(k_len),
        c_s=float(c_s),
        mu_used=float(mu),
        rip_threshold=rip_threshold,
        coherence_threshold=coh_threshold,
        rip_ok=k_len > rip_threshold,
        coherence_ok=mu < coh_threshold,
    )


@dataclass(frozen=True)
class DilationComparison:
    k: int
    n: int
    dilation: int
    pairs: int
    mean_undilated: float
    mean_dilated: float

    @property
    def dilated_lower(self) -> bool:
        return self.mean_dilated < self.mean_undilated

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dilated_lower"] = self.dilated_lower
        return d


def compare_dilation_coherence(
    k_len: int = 9, n: int = 64, dilation: int = 4, pairs: int = 200, seed: int = 0
) -> DilationComparison:
    """Mean cross-basis coherence of two random kernel bases, with and without dilation.

    For each of ``pairs`` draws of two N(0, 1/K) kernels ``a`` and ``b``, the
    coherence between the Toeplitz rows of ``a`` and ``b`` (both undilated)
    is compared with that between ``a`` undilated and ``b`` dilated by
    ``dilation``.
    """
    scale = math.sqrt(1.0 / k_len)
    undilated, dilated = [], []
    for p in range(pairs):
        rng = _rng.stream(seed, _rng.CROSS_BASIS, p)
        wa = rng.normal(0.0, scale, size=k_len)
        wb = rng.normal(0.0, scale, size=k_len)
        ha = build_toeplitz(KernelSpec(wa), n).rows
        hb = build_toeplitz(KernelSpec(wb), n).rows
        hb_d = build_toeplitz(KernelSpec(wb, dilation=dilation), n).rows
        undilated.append(cross_basis_coherence(ha, hb))
        dilated.append(cross_basis_coherence(ha, hb_d))
    return DilationComparison(
        k=k_len,
        n=n,
        dilation=dilation,
        pairs=pairs,
        mean_undilated=float(np.mean(undilated)),
        mean_dilated=float(np.mean(dilated)),
    )
