"""Equally weighted empirical measures on R^d."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np


class MeasureError(ValueError):
    pass


def _as_points(points) -> np.ndarray:
    arr = np.array(points, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise MeasureError(f"points must be a (N, d) array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise MeasureError("empirical measure needs N >= 1 points of dimension d >= 1")
    if not np.all(np.isfinite(arr)):
        raise MeasureError("points contain NaN or Inf")
    arr.setflags(write=False)
    return arr


class EmpiricalMeasure:
    """N points of R^d, each carrying mass 1/N.

    A 1-D input is read as N points on the real line.  The point array is
    copied and frozen, so instances are safe to share.
    """

    __slots__ = ("points",)

    def __init__(self, points):
        self.points = _as_points(points)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"EmpiricalMeasure(n={self.n}, dim={self.dim})"

    def moment_norm(self, p: float = 2.0) -> float:
        return moment_norm(self, p)

    def mean(self) -> np.ndarray:
        return self.points.mean(axis=0)


def moment_norm(mu: EmpiricalMeasure, p: float = 2.0) -> float:
    """((1/N) sum |x_i|^p)^(1/p) with the Euclidean norm."""
    if p < 1:
        raise MeasureError(f"moment order p must be >= 1, got {p}")
    pts = mu.points if isinstance(mu, EmpiricalMeasure) else _as_points(mu)
    # rescale so squares neither overflow nor underflow
    scale = float(np.abs(pts).max())
    if scale == 0.0:
        return 0.0
    radii = np.linalg.norm(pts / scale, axis=1)
    if p == 2:
        return float(scale * np.sqrt(np.mean(radii * radii)))
    top = radii.max()
    return float(scale * top * np.mean((radii / top) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class InitialLawSpec:
    """Recipe for an initial particle cloud.

    ``kind`` is one of ``"point-mass"``, ``"gaussian"``, ``"uniform-box"``,
    ``"explicit-points"``.
    """

    kind: str
    dim: int = 1
    n: int = 1
    x0: Sequence[float] | None = None
    mean: Sequence[float] | None = None
    cov: Sequence[Sequence[float]] | float | None = None
    lo: Sequence[float] | None = None
    hi: Sequence[float] | None = None
    points: Sequence | None = None

    KINDS = ("point-mass", "gaussian", "uniform-box", "explicit-points")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise MeasureError(f"unknown initial law kind {self.kind!r}")
        if self.kind != "explicit-points" and (self.n < 1 or self.dim < 1):
            raise MeasureError("initial law needs n >= 1 and dim >= 1")
        if self.kind == "gaussian":
            cov = self.covariance()
            if not np.allclose(cov, cov.T, atol=1e-12):
                raise MeasureError("covariance is not symmetric")
            if np.linalg.eigvalsh(cov).min() < -1e-12 * max(1.0, np.abs(cov).max()):
                raise MeasureError("covariance is not positive semidefinite")
        if self.kind == "uniform-box":
            lo, hi = self._vec(self.lo, 0.0), self._vec(self.hi, 1.0)
            if np.any(lo > hi):
                raise MeasureError("uniform box needs lo <= hi componentwise")

    def _vec(self, value, default) -> np.ndarray:
        if value is None:
            return np.full(self.dim, float(default))
        arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
        if arr.size == 1:
            arr = np.full(self.dim, float(arr[0]))
        if arr.shape != (self.dim,):
            raise MeasureError(f"expected a vector of length {self.dim}, got {arr.shape}")
        return arr

    def covariance(self) -> np.ndarray:
        if self.cov is None:
            return np.eye(self.dim)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.ndim == 0:
            return float(cov) * np.eye(self.dim)
        if cov.ndim == 1:
            return np.diag(cov)
        if cov.shape != (self.dim, self.dim):
            raise MeasureError(f"covariance must be {self.dim}x{self.dim}")
        return cov

    @classmethod
    def from_dict(cls, data: dict) -> "InitialLawSpec":
        return cls(**data)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "n": self.n}
        for name in ("x0", "mean", "cov", "lo", "hi", "points"):
            value = getattr(self, name)
            if value is not None:
                out[name] = np.asarray(value).tolist()
        return out


def sample_initial(spec: InitialLawSpec, rng: np.random.Generator) -> EmpiricalMeasure:
    """Draw ``spec.n`` i.i.d. points from the law described by ``spec``."""
    if spec.kind == "explicit-points":
        return EmpiricalMeasure(spec.points)
    d, n = spec.dim, spec.n
    if spec.kind == "point-mass":
        x0 = spec._vec(spec.x0, 0.0)
        return EmpiricalMeasure(np.tile(x0, (n, 1)))
    if spec.kind == "gaussian":
        mean = spec._vec(spec.mean, 0.0)
        cov = spec.covariance()
        w, v = np.linalg.eigh(cov)
        root = v * np.sqrt(np.clip(w, 0.0, None))
        z = rng.standard_normal((n, d))
        return EmpiricalMeasure(mean + z @ root.T)
    lo, hi = spec._vec(spec.lo, 0.0), spec._vec(spec.hi, 1.0)
    return EmpiricalMeasure(lo + (hi - lo) * rng.random((n, d)))


@dataclass
class MeasureStats:
    """Summary of an empirical law that coefficient functions may read.

    Moments are computed lazily from ``points`` and cached; ``extra`` holds
    model-specific summaries.
    """

    points: np.ndarray
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        self.points = pts

    @classmethod
    def of(cls, mu) -> "MeasureStats":
        if isinstance(mu, MeasureStats):
            return mu
        if isinstance(mu, EmpiricalMeasure):
            return cls(mu.points)
        return cls(np.asarray(mu, dtype=np.float64))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def mean(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @cached_property
    def second_moment(self) -> np.ndarray:
        return self.points.T @ self.points / self.n

    @cached_property
    def norm2(self) -> float:
        return float(np.sqrt(np.trace(self.second_moment)))
