"""Seeded synthetic datasets for demos and acceptance runs."""

from __future__ import annotations

import numpy as np

from . import _rng
from .series import Dataset

__all__ = ["smooth_templates", "template_dataset"]


def smooth_templates(n_classes: int, n: int, seed: int = 0, width: int = 9) -> np.ndarray:
    """One smoothed random-walk template per class, standardized."""
    rng = _rng.stream(seed, _rng.SYNTHETIC, 0)
    kernel = np.hanning(width + 2)[1:-1]
    kernel /= kernel.sum()
    out = np.empty((n_classes, n))
    for c in range(n_classes):
        walk = np.cumsum(rng.normal(size=n + width))
        smooth = np.convolve(walk, kernel, mode="valid")[:n]
        out[c] = (smooth - smooth.mean()) / smooth.std()
    return out


def template_dataset(
    n_train: int = 100,
    n_test: int = 100,
    n: int = 80,
    n_classes: int = 2,
    noise: float = 0.5,
    seed: int = 0,
) -> tuple[Dataset, Dataset]:
    """Train/test split of templates plus i.i.d. Gaussian noise.

    Labels cycle through the classes so both splits are balanced.
    """
    templates = smooth_templates(n_classes, n, seed)

    def make(count, offset, name):
        rows, labels = [], []
        for i in range(count):
            rng = _rng.stream(seed, _rng.SYNTHETIC, 1 + offset + i)
            c = i % n_classes
            rows.append(templates[c] + noise * rng.normal(size=n))
            labels.append(str(c))
        return Dataset.from_arrays(rows, labels, name=name)

    return make(n_train, 0, "synthetic_train"), make(n_test, n_train, "synthetic_test")
