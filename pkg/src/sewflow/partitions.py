"""Time partitions and the dyadic grid algebra.

Dyadic partitions are handled through integer numerators k at a level n
(t = k / 2**n) so refinement and coarsening stay exact.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

GRID_TOL = 2.0**-50


class PartitionError(ValueError):
    pass


class Partition:
    """Strictly increasing finite time grid t_0 < t_1 < ... < t_N."""

    __slots__ = ("times",)

    def __init__(self, times: Iterable[float]):
        arr = np.array(list(times) if not isinstance(times, np.ndarray) else times, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise PartitionError("a partition needs at least one time")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise PartitionError("partition times must be finite and non-negative")
        if np.any(np.diff(arr) <= 0):
            raise PartitionError("partition times must be strictly increasing")
        arr.setflags(write=False)
        self.times = arr

    def __iter__(self):
        return iter(self.times.tolist())

    def __len__(self):
        return self.times.size

    def __getitem__(self, i):
        return float(self.times[i])

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.times.shape == other.times.shape and bool(np.all(self.times == other.times))

    def __hash__(self):
        return hash(self.times.tobytes())

    def __repr__(self):
        return f"Partition({self.times.tolist()})"

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def count(self) -> int:
        """#pi, the number of points."""
        return self.times.size

    def mesh(self) -> float:
        """|pi|, the largest cell width (0 for a single point)."""
        if self.times.size < 2:
            return 0.0
        return float(np.diff(self.times).max())

    def cells(self):
        return list(zip(self.times[:-1].tolist(), self.times[1:].tolist()))

    def numerators(self, n: int) -> np.ndarray:
        """Integer k_i with t_i = k_i / 2**n; raises if a time is off the grid."""
        return to_numerators(self.times, n)

    def to_json(self, level: int | None = None) -> dict:
        if level is None:
            return {"times": self.times.tolist()}
        return {"level": level, "numerators": self.numerators(level).tolist()}

    @classmethod
    def from_json(cls, data) -> "Partition":
        if isinstance(data, list):
            return cls(data)
        if "numerators" in data:
            return from_numerators(data["numerators"], data["level"])
        return cls(data["times"])


def _check_level(n: int):
    if int(n) != n or n < 0:
        raise PartitionError(f"dyadic level must be a non-negative integer, got {n}")


def to_numerators(times, n: int) -> np.ndarray:
    _check_level(n)
    scaled = np.asarray(times, dtype=np.float64) * 2.0**n
    k = np.rint(scaled)
    if np.any(np.abs(scaled - k) > GRID_TOL * 2.0**n):
        raise PartitionError(f"times are not on the level-{n} dyadic grid")
    return k.astype(np.int64)


def from_numerators(ks: Sequence[int], n: int) -> Partition:
    _check_level(n)
    return Partition(np.asarray(ks, dtype=np.float64) / 2.0**n)


def on_grid(t: float, n: int) -> bool:
    try:
        to_numerators([t], n)
    except PartitionError:
        return False
    return True


def eta_project(t: float, n: int) -> float:
    """floor(2^n t) / 2^n, the last level-n grid point not after t."""
    _check_level(n)
    if t < 0:
        raise PartitionError(f"eta_project needs t >= 0, got {t}")
    return math.floor(t * 2.0**n) / 2.0**n


def dyadic_partition(s: float, t: float, n: int) -> Partition:
    """{eta_n(s), eta_n(s) + 2^-n, ..., eta_n(t)}."""
    if not s < t:
        raise PartitionError(f"need s < t, got s={s}, t={t}")
    k0 = math.floor(s * 2.0**n)
    k1 = math.floor(t * 2.0**n)
    if k0 == k1:
        raise PartitionError(f"[{s}, {t}] contains no level-{n} cell")
    return from_numerators(np.arange(k0, k1 + 1), n)


def is_simple_subpartition(pi: Partition, pi2: Partition) -> bool:
    """True when pi2 contains pi, has the same endpoints, and adds at most one
    point inside each cell [t_i, t_{i+1})."""
    a, b = pi.times, pi2.times
    if a[0] != b[0] or a[-1] != b[-1]:
        return False
    if not np.all(np.isin(a, b)):
        return False
    idx = np.searchsorted(b, a)
    return bool(np.all(np.diff(idx) <= 2))


def lambda_coarsen(pi: Partition) -> Partition:
    """Drop the points t_{2k+1} with 1 <= 2k+1 < N."""
    if pi.count() < 2:
        raise PartitionError("lambda needs at least two points")
    times = pi.times
    last = times.size - 1
    keep = np.ones(times.size, dtype=bool)
    keep[1:last:2] = False
    return Partition(times[keep])


def lambda_iterate(pi: Partition, m: int) -> Partition:
    out = pi
    for _ in range(m):
        out = lambda_coarsen(out)
    return out


def _gamma_numerators(ks: np.ndarray) -> np.ndarray:
    mids = (ks[:-1] + ks[1:]) // 2
    fresh = mids > ks[:-1]
    out = np.empty(ks.size + int(fresh.sum()), dtype=np.int64)
    pos = np.arange(ks.size) + np.concatenate(([0], np.cumsum(fresh)))
    out[pos] = ks
    out[pos[:-1][fresh] + 1] = mids[fresh]
    return out


def gamma_refine(pi: Partition, n: int) -> Partition:
    """Insert floor((k_i + k_{i+1}) / 2) / 2^n in every cell that has room."""
    ks = pi.numerators(n)
    return from_numerators(_gamma_numerators(ks), n)


def gamma_iterate(pi: Partition, n: int, max_iter: int = 10_000) -> tuple[Partition, int]:
    """Apply gamma until the full level-n grid is reached.

    Returns the fixed point and q, the number of applications needed.
    """
    ks = pi.numerators(n)
    q = 0
    while True:
        nxt = _gamma_numerators(ks)
        if nxt.size == ks.size:
            return from_numerators(ks, n), q
        ks = nxt
        q += 1
        if q > max_iter:
            raise PartitionError("gamma iteration did not settle")


def project_partition(pi: Partition, n: int) -> Partition:
    """Elementwise eta_n projection; errors when two points collide."""
    projected = [eta_project(t, n) for t in pi]
    if any(b <= a for a, b in zip(projected, projected[1:])):
        raise PartitionError(f"projection to level {n} merges points; refine the level")
    return Partition(projected)


def mesh_numerator(pi: Partition, n: int) -> int:
    """nu = max_i (k_i - k_{i-1}) so that |pi| = nu 2^-n."""
    ks = pi.numerators(n)
    return int(np.diff(ks).max()) if ks.size > 1 else 0


def finest_level(pi: Partition, max_level: int = 52) -> int:
    """Smallest n with every time of pi on the level-n grid."""
    for n in range(max_level + 1):
        if all(on_grid(t, n) for t in pi):
            return n
    raise PartitionError("partition is not dyadic")
