"""Goodness-of-fit checks and histograms for sampler output."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .samplers import LaplaceParams

# Asymptotic one-sample Kolmogorov-Smirnov coefficients c(alpha).
KS_COEFFICIENTS = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628}
KS_MIN_SAMPLES = 100


@dataclass(frozen=True)
class KsReport:
    n_samples: int
    d_statistic: float
    critical_value: float
    alpha: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "d_statistic": self.d_statistic,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int
    invalid_count: int

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow + self.invalid_count


def laplace_cdf(x, p: LaplaceParams):
    """Laplace CDF; accepts scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    tail = 0.5 * np.exp(-np.abs(x - p.mu) / p.b)
    out = np.where(x < p.mu, tail, 1.0 - tail)
    return float(out) if out.ndim == 0 else out


def ks_statistic(samples, p: LaplaceParams) -> float:
    """Sup distance between the empirical CDF of ``samples`` and Lap(p)."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic needs at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("ks_statistic needs finite samples; filter invalid draws first")
    f = laplace_cdf(x, p)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_test(samples, p: LaplaceParams, alpha: float = 0.01) -> KsReport:
    coeff = None
    for level, c in KS_COEFFICIENTS.items():
        if math.isclose(alpha, level):
            alpha, coeff = level, c
    if coeff is None:
        raise ConfigurationError(
            f"unsupported alpha {alpha}; choose from {sorted(KS_COEFFICIENTS)}"
        )
    n = int(np.size(samples))
    if n < KS_MIN_SAMPLES:
        raise ConfigurationError(f"KS test needs at least {KS_MIN_SAMPLES} samples, got {n}")
    d = ks_statistic(samples, p)
    crit = coeff / math.sqrt(n)
    return KsReport(n, d, crit, alpha, d < crit)


def histogram(samples, k: int, lo: float, hi: float) -> Histogram:
    """Equal-width bins over ``[lo, hi)``. NaNs are counted as invalid."""
    if k < 1:
        raise ConfigurationError("histogram needs k >= 1 bins")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigurationError(f"malformed histogram range [{lo}, {hi})")
    x = np.asarray(samples, dtype=np.float64).ravel()
    invalid = np.isnan(x)
    x = x[~invalid]
    edges = np.linspace(lo, hi, k + 1)
    idx = np.searchsorted(edges, x, side="right") - 1
    under = idx < 0
    over = idx >= k
    counts = np.bincount(idx[~under & ~over], minlength=k)
    return Histogram(
        edges,
        counts.astype(np.int64),
        int(under.sum()),
        int(over.sum()),
        int(invalid.sum()),
    )
