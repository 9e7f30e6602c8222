"""Gaussian cohort summaries and Frechet shift reports.

The distance reported everywhere is the *squared* Frechet distance between
the Gaussian fits of two cohorts,

    d^2 = ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^{1/2} S_b S_a^{1/2})^{1/2}),

the convention used by the FID literature. The trace term is evaluated
through the symmetric product S_a^{1/2} S_b S_a^{1/2}, which stays PSD and
avoids the complex arithmetic the nonsymmetric product S_a S_b can produce.

Uncertainty comes from a percentile bootstrap over frames: each resample
draws rows with replacement from both cohorts under its own PRNG stream
derived from (seed, resample_index), so the boot array is identical no
matter how resamples are scheduled.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._rng import generator

DEFAULT_RIDGE_SCALE = 1e-6


@dataclass(frozen=True)
class GaussianSummary:
    """Moments of one cohort: mean, covariance (post-ridge), sample count."""

    mean: np.ndarray
    covariance: np.ndarray
    n: int
    ridge: float


@dataclass(frozen=True)
class FrechetReport:
    """Point estimate plus bootstrap distribution of one cohort pair's FD."""

    point: float
    boot: np.ndarray
    ci_lo: float
    ci_hi: float
    b: int
    seed: int


@dataclass(frozen=True)
class ShiftTest:
    """Two-sided z comparison of two bootstrap FD distributions.

    Negative z means pair_a's mean FD is smaller than pair_b's.
    """

    z: float
    p: float
    pair_a: str
    pair_b: str


def fit_gaussian(points: np.ndarray, ridge_scale: float = DEFAULT_RIDGE_SCALE) -> GaussianSummary:
    """Fit mean and unbiased covariance, symmetrized, with a trace-scaled ridge.

    The ridge added to the diagonal is ridge_scale * trace(S) / D, which keeps
    rank-deficient fits (small cohorts, high D) safely PSD without moving
    well-conditioned ones.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be 2-d, got shape {points.shape}")
    n, d = points.shape
    if n < 2:
        raise ValueError(f"need at least 2 points to fit a Gaussian, got {n}")
    if ridge_scale < 0:
        raise ValueError(f"ridge_scale must be nonnegative, got {ridge_scale}")
    mean = points.mean(axis=0)
    centered = points - mean
    cov = (centered.T @ centered) / (n - 1)
    cov = 0.5 * (cov + cov.T)
    ridge = ridge_scale * float(np.trace(cov)) / d
    if ridge > 0:
        cov = cov + ridge * np.eye(d)
    return GaussianSummary(mean=mean, covariance=cov, n=n, ridge=ridge)


def sqrtm_psd(m: np.ndarray, sym_tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues are clamped at zero before the square root, so slightly
    indefinite inputs (rounding noise) are handled; genuinely asymmetric
    inputs are rejected.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()) if m.size else 1.0)
    asym = float(np.abs(m - m.T).max()) if m.size else 0.0
    if asym > sym_tol * scale:
        raise ValueError(f"matrix is asymmetric beyond tolerance: {asym:.3e}")
    sym = 0.5 * (m + m.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    root = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
    return 0.5 * (root + root.T)


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """Squared Frechet distance between two Gaussian summaries, >= 0."""
    if a.mean.shape != b.mean.shape:
        raise ValueError(
            f"dimension mismatch: {a.mean.shape} vs {b.mean.shape}"
        )
    diff = a.mean - b.mean
    root_a = sqrtm_psd(a.covariance)
    inner = root_a @ b.covariance @ root_a
    inner = 0.5 * (inner + inner.T)
    cross = sqrtm_psd(inner)
    val = float(diff @ diff) + float(
        np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * np.trace(cross)
    )
    return max(val, 0.0)


def bootstrap_frechet(
    cohort_a: np.ndarray,
    cohort_b: np.ndarray,
    b: int = 1000,
    seed: int = 0,
    ridge_scale: float = DEFAULT_RIDGE_SCALE,
) -> FrechetReport:
    """Frame-level bootstrap of the FD between two cohorts.

    Resample r uses the PRNG stream (seed, r); the result is bit-identical
    for a given seed regardless of execution order. The 95% interval is the
    2.5/97.5 percentile of the boot array.
    """
    cohort_a = np.asarray(cohort_a, dtype=np.float64)
    cohort_b = np.asarray(cohort_b, dtype=np.float64)
    if cohort_a.ndim != 2 or cohort_b.ndim != 2:
        raise ValueError("cohorts must be 2-d matrices")
    n_a, d = cohort_a.shape
    n_b, d_b = cohort_b.shape
    if d != d_b:
        raise ValueError(f"dimension mismatch: {d} vs {d_b}")
    if n_a < 2 or n_b < 2:
        raise ValueError("each cohort needs at least 2 rows")
    if b < 2:
        raise ValueError(f"need at least 2 bootstrap resamples, got {b}")
    if b < 100:
        warnings.warn(f"b={b} is small for a percentile CI; 100+ recommended")
    if min(n_a, n_b) < d:
        warnings.warn(
            f"cohort smaller than dimension ({min(n_a, n_b)} < {d}); "
            "FD estimates will lean on the ridge"
        )

    point = frechet_distance(
        fit_gaussian(cohort_a, ridge_scale), fit_gaussian(cohort_b, ridge_scale)
    )
    boot = np.empty(b, dtype=np.float64)
    for r in range(b):
        rng = generator(seed, r)
        idx_a = rng.integers(0, n_a, n_a)
        idx_b = rng.integers(0, n_b, n_b)
        boot[r] = frechet_distance(
            fit_gaussian(cohort_a[idx_a], ridge_scale),
            fit_gaussian(cohort_b[idx_b], ridge_scale),
        )
    ci_lo, ci_hi = np.percentile(boot, [2.5, 97.5])
    return FrechetReport(
        point=point, boot=boot, ci_lo=float(ci_lo), ci_hi=float(ci_hi), b=b, seed=seed
    )


def shift_z_test(
    r1: FrechetReport, r2: FrechetReport, pair_a: str = "a", pair_b: str = "b"
) -> ShiftTest:
    """Difference-of-means z over two boot arrays, unpooled variances."""
    if r1.b < 2 or r2.b < 2:
        raise ValueError("both reports need at least 2 bootstrap resamples")
    m1, m2 = float(np.mean(r1.boot)), float(np.mean(r2.boot))
    v1 = float(np.var(r1.boot, ddof=1))
    v2 = float(np.var(r2.boot, ddof=1))
    pooled = v1 + v2
    if pooled <= 0.0:
        raise ValueError("zero pooled variance: both boot arrays are constant")
    z = (m1 - m2) / math.sqrt(pooled)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return ShiftTest(z=z, p=p, pair_a=pair_a, pair_b=pair_b)


def report_to_dict(report: FrechetReport, full: bool = False) -> dict:
    """JSON form: {point, ci: [lo, hi], b, seed}; boot only when full."""
    out = {
        "point": report.point,
        "ci": [report.ci_lo, report.ci_hi],
        "b": report.b,
        "seed": report.seed,
    }
    if full:
        out["boot"] = [float(v) for v in report.boot]
    return out


def shift_to_dict(test: ShiftTest) -> dict:
    return {"z": test.z, "p": test.p, "pair": [test.pair_a, test.pair_b]}
