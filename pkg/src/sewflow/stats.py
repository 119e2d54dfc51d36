"""Small statistics helpers: log-log fits, replication summaries, two-sample tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    se: float
    r2: float

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "se": self.se, "r2": self.r2}


def loglog_fit(x, y) -> Fit:
    """OLS of log y on log x; needs at least three positive points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 3:
        raise ValueError("log-log fit needs at least three positive points")
    res = sps.linregress(np.log(x[ok]), np.log(y[ok]))
    return Fit(float(res.slope), float(res.intercept), float(res.stderr), float(res.rvalue**2))


def mean_se(values, axis=0):
    """Sample mean and standard error along ``axis``."""
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[axis]
    mean = v.mean(axis=axis)
    se = v.std(axis=axis, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return mean, se


def ks_test(a, b) -> float:
    """p-value of the two-sample Kolmogorov-Smirnov test."""
    return float(sps.ks_2samp(np.ravel(a), np.ravel(b)).pvalue)


def energy_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| (V-statistic)."""
    def mean_dist(u, v):
        diff = u[:, None, :] - v[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).mean()

    return 2 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b)


def energy_test(a, b, rng: np.random.Generator, permutations: int = 200, max_n: int = 1000) -> float:
    """Permutation p-value of the energy statistic.

    Samples larger than ``max_n`` are subsampled without replacement first;
    the test stays exact for the subsample.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a, b = a[:, None], b[:, None]
    if a.shape[0] > max_n:
        a = a[rng.choice(a.shape[0], max_n, replace=False)]
    if b.shape[0] > max_n:
        b = b[rng.choice(b.shape[0], max_n, replace=False)]
    pooled = np.vstack([a, b])
    na = a.shape[0]
    diff = pooled[:, None, :] - pooled[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def stat(idx):
        ia, ib = idx[:na], idx[na:]
        return 2 * dist[np.ix_(ia, ib)].mean() - dist[np.ix_(ia, ia)].mean() - dist[np.ix_(ib, ib)].mean()

    base = np.arange(pooled.shape[0])
    observed = stat(base)
    count = sum(stat(rng.permutation(base)) >= observed for _ in range(permutations))
    return (count + 1) / (permutations + 1)
