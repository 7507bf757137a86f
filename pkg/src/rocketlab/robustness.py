"""Noise-robustness certificates and circular-shift invariance checks.

PPV features lie in [0, 1], so for ``L`` kernels ``|Phi(g) - Phi(f)|^2 <= L``
for any pair of inputs.  With i.i.d. N(0, 1) noise ``eps`` of length ``N``,
``|eps|^2`` follows chi-square with ``N`` degrees of freedom and exceeds its
lower ``alpha``-quantile ``q`` with probability ``1 - alpha``; hence

    |Phi(f + eps) - Phi(f)|^2 / |eps|^2 <= L / q     with probability >= 1 - alpha.

``ratio_bound = L / q`` bounds the *squared* norm ratio; the Lipschitz
constant on norms is its square root, ``norm_constant``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np
from scipy.special import gammainc, gammaln

from . import _rng
from .errors import ValidationError
from .kernels import TransformConfig, generate_kernels, transform_array
from .series import TimeSeries

__all__ = [
    "chi2_lower_quantile",
    "RobustnessCertificate",
    "ShiftInvarianceReport",
    "lipschitz_certificate",
    "verify_noise_robustness",
    "verify_shift_invariance",
]

NOISE_MODES = ("gaussian", "uniform", "laplace")


def _chi2_cdf(q: float, dof: float) -> float:
    return float(gammainc(dof / 2.0, q / 2.0))


def _chi2_logpdf(q: float, dof: float) -> float:
    a = dof / 2.0
    return (a - 1.0) * math.log(q / 2.0) - q / 2.0 - gammaln(a) - math.log(2.0)


def _initial_guess(dof: float, alpha: float) -> float:
    # Wilson-Hilferty cube approximation, falling back to the small-q series
    # P(a, x) ~ x**a / Gamma(a + 1) when it goes non-positive.
    z = NormalDist().inv_cdf(alpha)
    c = 2.0 / (9.0 * dof)
    q = dof * (1.0 - c + z * math.sqrt(c)) ** 3
    if q > 0:
        return q
    a = dof / 2.0
    return 2.0 * math.exp((math.log(alpha) + gammaln(a + 1.0)) / a)


def chi2_lower_quantile(dof: float, alpha: float, rtol: float = 1e-13) -> float:
    """``q`` with ``P(chi2_dof <= q) = alpha`` (so ``P(chi2_dof > q) = 1 - alpha``).

    Newton iteration on the regularized lower incomplete gamma function,
    safeguarded by a bracket that shrinks with every step.
    """
    if not dof >= 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {dof}")
    if not 0.0 < alpha <= 0.5:
        raise ValidationError(f"alpha must lie in (0, 0.5], got {alpha}")

    lo, hi = 0.0, max(4.0 * dof, 10.0)
    while _chi2_cdf(hi, dof) < alpha:
        lo, hi = hi, 2.0 * hi
    q = min(max(_initial_guess(dof, alpha), lo), hi)
    if not lo < q < hi:
        q = 0.5 * (lo + hi)

    for _ in range(200):
        f = _chi2_cdf(q, dof) - alpha
        if f > 0:
            hi = q
        else:
            lo = q
        step = f / math.exp(_chi2_logpdf(q, dof))
        new = q - step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - q) <= rtol * new:
            return new
        q = new
    return q


@dataclass(frozen=True)
class EmpiricalCheck:
    trials: int
    excluded_zero_noise: int
    max_observed_ratio: float
    mean_observed_ratio: float
    violation_count: int
    violation_rate: float
    tolerance: float
    max_feature_distance_sq: float
    passed: bool


@dataclass(frozen=True)
class RobustnessCertificate:
    """High-probability bound on squared feature distance per squared noise norm.

    ``ratio_bound`` bounds ``|Phi g - Phi f|^2 / |g - f|^2`` and
    ``norm_constant = sqrt(ratio_bound)`` the corresponding norm ratio.
    ``analytic`` is False for non-Gaussian noise, where the chi-square bound
    is only a large-N approximation.
    """

    l: int
    n: int
    alpha: float
    chi2_quantile: float
    ratio_bound: float
    norm_constant: float
    confidence: float
    noise: str = "gaussian"
    sigma: float = 1.0
    analytic: bool = True
    empirical: EmpiricalCheck | None = None

    @property
    def passed(self) -> bool | None:
        return None if self.empirical is None else self.empirical.passed

    def to_dict(self) -> dict:
        return asdict(self)


def lipschitz_certificate(l: int, n: int, alpha: float = 0.005) -> RobustnessCertificate:
    if l < 1:
        raise ValidationError("kernel count L must be >= 1")
    if n < 1:
        raise ValidationError("series length N must be >= 1")
    q = chi2_lower_quantile(n, alpha)
    ratio = l / q
    return RobustnessCertificate(
        l=int(l),
        n=int(n),
        alpha=float(alpha),
        chi2_quantile=q,
        ratio_bound=ratio,
        norm_constant=math.sqrt(ratio),
        confidence=1.0 - alpha,
    )


def _unit_noise(rng, mode: str, n: int) -> np.ndarray:
    # zero mean, unit variance
    if mode == "gaussian":
        return rng.normal(0.0, 1.0, size=n)
    if mode == "uniform":
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=n)
    return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size=n)


def verify_noise_robustness(
    f,
    cfg: TransformConfig,
    alpha: float = 0.005,
    trials: int = 1000,
    seed: int = 0,
    sigma: float = 1.0,
    noise: str = "gaussian",
    threads: int | None = None,
) -> RobustnessCertificate:
    """Empirical check of :func:`lipschitz_certificate` on one series.

    For each trial, ``g = f + sigma * e`` with ``e`` unit-variance noise.
    The ratio is ``|Phi g - Phi f|^2 / |e|^2`` (noise norm measured in units
    of ``sigma``) so that the chi-square bound applies for any ``sigma``.
    Trials with ``e == 0`` or ``sigma == 0`` are excluded from the ratio and
    must leave the features unchanged.  The check passes when the fraction
    of ratios above the bound is at most ``alpha + 3 sqrt(alpha (1 - alpha) / trials)``.
    Every trial also asserts ``|Phi g - Phi f|^2 <= L``.
    """
    if trials < 100:
        raise ValidationError("verify_noise_robustness needs at least 100 trials")
    if noise not in NOISE_MODES:
        raise ValidationError(f"noise must be one of {NOISE_MODES}")
    if sigma < 0:
        raise ValidationError("sigma must be >= 0")
    values = f.values if isinstance(f, TimeSeries) else np.asarray(f, dtype=np.float64)
    n = values.shape[0]
    cert = lipschitz_certificate(cfg.num_kernels, n, alpha)
    kernels = generate_kernels(cfg, n)

    eps = np.empty((trials, n))
    for t in range(trials):
        eps[t] = _unit_noise(_rng.stream(seed, _rng.NOISE, t), noise, n)
    batch = np.vstack([values[None, :], values[None, :] + sigma * eps])
    counts, lengths = transform_array(batch, kernels, cfg.standardize_inputs, threads)
    feats = counts / lengths
    dist_sq = np.sum((feats[1:] - feats[0]) ** 2, axis=1)
    if np.any(dist_sq > cfg.num_kernels):
        raise AssertionError("squared feature distance exceeded L")

    noise_sq = np.sum(eps * eps, axis=1)
    zero = (noise_sq == 0.0) | (sigma == 0.0)
    if np.any(dist_sq[zero] != 0.0):
        raise AssertionError("zero noise changed the features")
    ratios = dist_sq[~zero] / noise_sq[~zero]
    used = int(ratios.size)
    violations = int(np.count_nonzero(ratios > cert.ratio_bound))
    rate = violations / used if used else 0.0
    tol = 3.0 * math.sqrt(alpha * (1.0 - alpha) / max(used, 1))
    check = EmpiricalCheck(
        trials=int(trials),
        excluded_zero_noise=int(np.count_nonzero(zero)),
        max_observed_ratio=float(ratios.max()) if used else 0.0,
        mean_observed_ratio=float(ratios.mean()) if used else 0.0,
        violation_count=violations,
        violation_rate=rate,
        tolerance=tol,
        max_feature_distance_sq=float(dist_sq.max()),
        passed=rate <= alpha + tol,
    )
    return RobustnessCertificate(
        l=cert.l,
        n=cert.n,
        alpha=cert.alpha,
        chi2_quantile=cert.chi2_quantile,
        ratio_bound=cert.ratio_bound,
        norm_constant=cert.norm_constant,
        confidence=cert.confidence,
        noise=noise,
        sigma=float(sigma),
        analytic=noise == "gaussian",
        empirical=check,
    )


@dataclass(frozen=True)
class ShiftInvarianceReport:
    n: int
    padding: str
    shifts_tested: tuple
    mismatched_features: tuple
    max_feature_discrepancy: float
    exact: bool
    exactness_claimed: bool = field(default=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shifts_tested"] = list(self.shifts_tested)
        d["mismatched_features"] = list(self.mismatched_features)
        return d


def verify_shift_invariance(f, cfg: TransformConfig, shifts=None, threads=None) -> ShiftInvarianceReport:
    """Compare features of ``f`` with those of its circular shifts ``f[n - c]``.

    Positive counts are compared as integers.  Exactness is only claimed for
    ``padding_policy="circular"``; for other paddings the report states the
    observed discrepancy.
    """
    values = f.values if isinstance(f, TimeSeries) else np.asarray(f, dtype=np.float64)
    n = values.shape[0]
    if shifts is None:
        shifts = (1, n // 2, n - 1)
    shifts = tuple(int(c) for c in shifts)
    kernels = generate_kernels(cfg, n)
    batch = np.vstack([values] + [np.roll(values, c) for c in shifts])
    counts, lengths = transform_array(batch, kernels, cfg.standardize_inputs, threads)
    diff = counts[1:] != counts[0]
    disc = np.abs(counts[1:] - counts[0]) / lengths
    return ShiftInvarianceReport(
        n=int(n),
        padding=cfg.padding_policy,
        shifts_tested=shifts,
        mismatched_features=tuple(int(v) for v in diff.sum(axis=1)),
        max_feature_discrepancy=float(disc.max()) if disc.size else 0.0,
        exact=not diff.any(),
        exactness_claimed=cfg.padding_policy == "circular",
    )
