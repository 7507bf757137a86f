"""Effective dimensionality of a feature matrix via PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kernels import FeatureMatrix

__all__ = ["PcaReport", "pca_effective_dim", "summarize_reports", "format_summary"]


@dataclass(frozen=True, eq=False)
class PcaReport:
    explained_variance_ratio: np.ndarray
    thresholds: tuple
    components: tuple  # components needed per threshold
    total_features: int
    instances: int
    rank: int
    source: str = "pooled"

    def k_for(self, threshold: float) -> int:
        for t, k in zip(self.thresholds, self.components):
            if abs(t - threshold) < 1e-12:
                return k
        raise KeyError(threshold)

    @property
    def k90(self) -> int:
        return self.k_for(0.90)

    @property
    def k95(self) -> int:
        return self.k_for(0.95)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "pca_report",
            "source": self.source,
            "total_features": self.total_features,
            "instances": self.instances,
            "rank": self.rank,
            "components": {repr(t): k for t, k in zip(self.thresholds, self.components)},
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
        }


def pca_effective_dim(features, thresholds=(0.90, 0.95), source: str = "pooled") -> PcaReport:
    """Number of principal components needed to reach each variance fraction.

    Works from the singular values of the column-centered matrix; no
    covariance matrix is formed.  A matrix with zero total variance reports
    zero components for every threshold.
    """
    X = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("PCA needs a 2-D matrix with at least two instances")
    thresholds = tuple(float(t) for t in thresholds)
    if any(not 0.0 < t <= 1.0 for t in thresholds):
        raise ValidationError("thresholds must lie in (0, 1]")
    centered = X - X.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    energy = s * s
    total = energy.sum()
    if total == 0.0:
        ratio = np.zeros_like(energy)
        rank = 0
        comps = tuple(0 for _ in thresholds)
    else:
        ratio = energy / total
        rank = int(np.count_nonzero(s > s[0] * max(X.shape) * np.finfo(float).eps))
        cum = np.cumsum(ratio)
        # guard against cumulative sums landing a few ulps under 1.0
        comps = tuple(
            min(int(np.searchsorted(cum, t - 1e-12, side="left")) + 1, rank) for t in thresholds
        )
    ratio.setflags(write=False)
    return PcaReport(
        explained_variance_ratio=ratio,
        thresholds=thresholds,
        components=comps,
        total_features=int(X.shape[1]),
        instances=int(X.shape[0]),
        rank=rank,
        source=source,
    )


def summarize_reports(reports, thresholds=(0.90, 0.95)) -> dict:
    """Min / quartiles / max of the component counts across several datasets."""
    out = {}
    for t in thresholds:
        ks = np.array([r.k_for(t) for r in reports], dtype=np.float64)
        out[t] = {
            "min": float(ks.min()),
            "q1": float(np.percentile(ks, 25)),
            "median": float(np.median(ks)),
            "q3": float(np.percentile(ks, 75)),
            "max": float(ks.max()),
        }
    return out


def format_summary(summary: dict) -> str:
    rows = [("Statistic", *[f"{t:.0%} variability" for t in summary])]
    for key, name in (("min", "Minimum"), ("q1", "25th percentile"), ("median", "Median"),
                      ("q3", "75th percentile"), ("max", "Maximum")):
        rows.append((name, *[f"{summary[t][key]:g}" for t in summary]))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)
