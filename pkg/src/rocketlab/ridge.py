"""One-vs-rest ridge classifier on PPV features.

Columns are standardized with training statistics (zero-variance columns
keep unit scale, which neutralizes them), targets are +-1 per class and the
intercept is left unpenalized by centering.  All regularization strengths
in a grid are solved from one thin SVD of the training matrix, which keeps
``L = 10000`` features with a few hundred instances cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import DimensionError, ValidationError
from .kernels import FeatureMatrix

__all__ = ["RidgeModel", "DEFAULT_LAMBDAS", "fit_ridge", "predict", "decision_function", "confusion_matrix"]

DEFAULT_LAMBDAS = tuple(float(v) for v in np.logspace(-3, 3, 10))


@dataclass(frozen=True, eq=False)
class RidgeModel:
    weights: np.ndarray  # (classes, L)
    intercepts: np.ndarray  # (classes,)
    lam: float
    classes: tuple
    mean: np.ndarray
    scale: np.ndarray
    kernel_ids: tuple | None = None
    cv_scores: dict | None = None

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    @property
    def label_map(self) -> dict:
        return {c: i for i, c in enumerate(self.classes)}

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "ridge_model",
            "lambda": self.lam,
            "classes": list(self.classes),
            "weights": self.weights.tolist(),
            "intercepts": self.intercepts.tolist(),
            "feature_mean": self.mean.tolist(),
            "feature_scale": self.scale.tolist(),
            "kernel_ids": list(self.kernel_ids) if self.kernel_ids is not None else None,
            "cv_scores": self.cv_scores,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RidgeModel":
        return cls(
            weights=np.array(d["weights"], dtype=np.float64),
            intercepts=np.array(d["intercepts"], dtype=np.float64),
            lam=float(d["lambda"]),
            classes=tuple(d["classes"]),
            mean=np.array(d["feature_mean"], dtype=np.float64),
            scale=np.array(d["feature_scale"], dtype=np.float64),
            kernel_ids=tuple(d["kernel_ids"]) if d.get("kernel_ids") is not None else None,
            cv_scores=d.get("cv_scores"),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "RidgeModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _as_array(features) -> np.ndarray:
    if isinstance(features, FeatureMatrix):
        return features.values
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"features must be 2-D, got shape {X.shape}")
    return X


def _column_stats(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def _targets(y_idx, n_classes):
    Y = -np.ones((y_idx.size, n_classes))
    Y[np.arange(y_idx.size), y_idx] = 1.0
    return Y


class _SvdRidge:
    """Ridge solutions for many lambdas from one SVD of standardized data."""

    def __init__(self, X, Y):
        self.mean, self.scale = _column_stats(X)
        self.constant = np.ptp(X, axis=0) == 0
        Z = (X - self.mean) / self.scale
        self.y_mean = Y.mean(axis=0)
        self.U, self.s, self.Vt = np.linalg.svd(Z, full_matrices=False)
        self.UtY = self.U.T @ (Y - self.y_mean)

    def coef(self, lam):
        shrink = self.s / (self.s**2 + lam)
        # (classes, L); constant columns get exactly zero weight rather
        # than SVD round-off
        W = (self.Vt.T @ (shrink[:, None] * self.UtY)).T
        W[:, self.constant] = 0.0
        return W

    def scores(self, X, lam):
        Z = (X - self.mean) / self.scale
        return Z @ self.coef(lam).T + self.y_mean


def _fold_ids(n, folds, seed):
    perm = _rng.stream(seed, _rng.FOLDS, 0).permutation(n)
    ids = np.empty(n, dtype=np.int64)
    ids[perm] = np.arange(n) % folds
    return ids


def fit_ridge(
    train,
    labels=None,
    lambda_grid=DEFAULT_LAMBDAS,
    folds: int = 5,
    seed: int = 0,
) -> RidgeModel:
    """Fit the classifier, picking lambda by cross-validated accuracy.

    With a single-value grid cross-validation is skipped.  Ties between
    lambdas go to the smaller one.
    """
    X = _as_array(train)
    if labels is None:
        if not isinstance(train, FeatureMatrix) or train.labels is None:
            raise ValidationError("labels are required")
        labels = train.labels
    labels = [str(y) for y in labels]
    if len(labels) != X.shape[0]:
        raise DimensionError(f"{X.shape[0]} rows but {len(labels)} labels")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValidationError("ridge classification needs at least two classes")
    grid = sorted(float(v) for v in lambda_grid)
    if not grid or grid[0] <= 0:
        raise ValidationError("lambda values must be > 0")
    index = {c: i for i, c in enumerate(classes)}
    y_idx = np.array([index[y] for y in labels])
    Y = _targets(y_idx, len(classes))

    cv_scores = None
    lam = grid[0]
    if len(grid) > 1:
        if folds < 2:
            raise ValidationError("folds must be >= 2")
        if X.shape[0] < 2 * folds:
            raise ValidationError(f"need at least {2 * folds} instances for {folds}-fold CV")
        fold = _fold_ids(X.shape[0], folds, seed)
        correct = np.zeros(len(grid), dtype=np.int64)
        for f in range(folds):
            tr, va = fold != f, fold == f
            solver = _SvdRidge(X[tr], Y[tr])
            for g, lam_g in enumerate(grid):
                pred = np.argmax(solver.scores(X[va], lam_g), axis=1)
                correct[g] += int(np.count_nonzero(pred == y_idx[va]))
        best = int(np.argmax(correct))  # first maximum = smallest lambda
        lam = grid[best]
        cv_scores = {repr(g): int(c) / X.shape[0] for g, c in zip(grid, correct)}

    solver = _SvdRidge(X, Y)
    W = solver.coef(lam)
    kernel_ids = train.kernel_ids if isinstance(train, FeatureMatrix) else None
    return RidgeModel(
        weights=W,
        intercepts=solver.y_mean.copy(),
        lam=lam,
        classes=classes,
        mean=solver.mean,
        scale=solver.scale,
        kernel_ids=kernel_ids,
        cv_scores=cv_scores,
    )


def decision_function(model: RidgeModel, features) -> np.ndarray:
    X = _as_array(features)
    if X.shape[1] != model.n_features:
        raise DimensionError(
            f"model expects {model.n_features} feature columns, got {X.shape[1]}"
        )
    Z = (X - model.mean) / model.scale
    return Z @ model.weights.T + model.intercepts


def predict(model: RidgeModel, features) -> np.ndarray:
    """Class with the highest score; ties go to the earlier class in ``model.classes``."""
    scores = decision_function(model, features)
    return np.asarray(model.classes, dtype=object)[np.argmax(scores, axis=1)]


def confusion_matrix(classes, truth, predicted) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        out[index[str(t)], index[str(p)]] += 1
    return out
