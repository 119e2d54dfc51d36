"""Canonical driving noise, generated cell by cell on a dyadic reference grid.

Every reference cell [k h, (k+1) h) with h = 2**-level owns its own Philox
counter block, keyed by (seed, replication, purpose).  A scheme step over a
longer window [a, b) sums the Brownian increments of the cells it covers
and collects their Poisson atoms, so coarse and fine schemes driven by the
same ``CanonicalNoise`` see the same underlying noise.  Draw order inside a
cell follows the particle index, hence results never depend on how work is
scheduled.

The Poisson part is drawn as one Poisson(N * lam * h) total per cell with
atoms assigned to uniformly chosen particles; this has the same law as
independent per-particle Poisson(lam * h) counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_MASK64 = (1 << 64) - 1

GAUSS_1 = 0
GAUSS_2 = 1
ATOMS = 2
FRESH = 3
INIT = 4
AUX = 5


def stream(seed: int, rep: int, purpose: int, k: int, tag: int = 0) -> np.random.Generator:
    """Counter-based generator for one (seed, rep, purpose, cell, tag) slot."""
    key = [int(seed) & _MASK64, ((int(rep) & 0xFFFFFFFF) << 8 | (purpose & 0xFF)) & _MASK64]
    counter = [0, 0, int(k) & _MASK64, int(tag) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def init_rng(seed: int, rep: int = 0, tag: int = 0) -> np.random.Generator:
    """Stream for initial clouds and other set-up draws."""
    return stream(seed, rep, INIT, 0, tag)


@dataclass
class StepNoise:
    """Noise for one scheme step over [a, b).

    ``dB`` and ``dB2`` are (N, d) Gaussian increments with variance b - a per
    coordinate; ``dB2`` is the independent second block used by a coupled
    partner and may be None.  Atoms are listed by owner particle, uniform
    label w in [0, 1), mark z and time.
    """

    a: float
    b: float
    dB: np.ndarray
    owner: np.ndarray
    w: np.ndarray
    z: np.ndarray
    times: np.ndarray
    dB2: np.ndarray | None = None

    @property
    def h(self) -> float:
        return self.b - self.a

    @property
    def n_atoms(self) -> int:
        return self.owner.size

    def atoms_in(self, lo: float, hi: float) -> "StepNoise":
        """Atoms with time in [lo, hi); Gaussian blocks are not split."""
        sel = (self.times >= lo) & (self.times < hi)
        return StepNoise(lo, hi, self.dB, self.owner[sel], self.w[sel], self.z[sel], self.times[sel], self.dB2)

    def counts(self, n: int) -> np.ndarray:
        return np.bincount(self.owner, minlength=n)


class WindowAccumulator:
    """Running sum of consecutive cell noises.

    Gaussian blocks are summed in cell order starting from a copy of the
    first block and atoms are appended, so the result is bitwise the same whether cells arrive one at a
    time or as a list.
    """

    def __init__(self, n, dim, mark_dim, a, second=False):
        self.n, self.dim, self.mark_dim = n, dim, mark_dim
        self.a = a
        self.second = second
        self.dB = None
        self.dB2 = None
        self._atoms = []

    def add(self, part: StepNoise):
        if self.dB is None:
            self.dB = part.dB.copy()
            if self.second:
                self.dB2 = part.dB2.copy()
        else:
            self.dB += part.dB
            if self.second:
                self.dB2 += part.dB2
        if part.n_atoms:
            self._atoms.append(part)

    def result(self, b: float) -> StepNoise:
        parts = self._atoms
        if parts:
            owner = np.concatenate([p.owner for p in parts])
            w = np.concatenate([p.w for p in parts])
            z = np.concatenate([p.z for p in parts])
            times = np.concatenate([p.times for p in parts])
        else:
            owner = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
            z = np.zeros((0, self.mark_dim))
            times = np.zeros(0)
        dB = np.zeros((self.n, self.dim)) if self.dB is None else self.dB
        dB2 = np.zeros((self.n, self.dim)) if self.second and self.dB2 is None else self.dB2
        return StepNoise(self.a, b, dB, owner, w, z, times, dB2)


def _concat(parts, n, dim, mark_dim, a, b, second):
    acc = WindowAccumulator(n, dim, mark_dim, a, second)
    for p in parts:
        acc.add(p)
    return acc.result(b)


class CanonicalNoise:
    """Shared canonical noise for N particles at reference level ``level``."""

    def __init__(
        self,
        seed: int,
        n: int,
        dim: int,
        level: int,
        lam: float,
        sample_marks: Callable[[np.random.Generator, int], np.ndarray],
        mark_dim: int = 1,
        rep: int = 0,
    ):
        if level < 0:
            raise ValueError("noise level must be >= 0")
        self.seed = int(seed)
        self.n = int(n)
        self.dim = int(dim)
        self.level = int(level)
        self.h = 2.0**-level
        self.lam = float(lam)
        self.sample_marks = sample_marks
        self.mark_dim = mark_dim
        self.rep = int(rep)

    @classmethod
    def for_model(cls, model, seed: int, n: int, level: int, rep: int = 0) -> "CanonicalNoise":
        return cls(seed, n, model.dim, level, model.lam, model.sample_marks, model.mark_dim, rep)

    def cell_index(self, t: float) -> int:
        k = round(t / self.h)
        if abs(k * self.h - t) > 2.0**-50 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the level-{self.level} noise grid")
        return k

    def _atoms(self, g: np.random.Generator, a: float, h: float):
        total = g.poisson(self.n * self.lam * h) if self.lam > 0 else 0
        owner = g.integers(0, self.n, size=total)
        w = g.random(total)
        times = a + h * g.random(total)
        z = np.asarray(self.sample_marks(g, total), dtype=np.float64).reshape(total, self.mark_dim)
        return owner, w, z, times

    def cell(self, k: int, second: bool = False) -> StepNoise:
        a = k * self.h
        sq = np.sqrt(self.h)
        dB = sq * stream(self.seed, self.rep, GAUSS_1, k).standard_normal((self.n, self.dim))
        dB2 = None
        if second:
            dB2 = sq * stream(self.seed, self.rep, GAUSS_2, k).standard_normal((self.n, self.dim))
        owner, w, z, times = self._atoms(stream(self.seed, self.rep, ATOMS, k), a, self.h)
        return StepNoise(a, a + self.h, dB, owner, w, z, times, dB2)

    def window(self, a: float, b: float, second: bool = False) -> StepNoise:
        """Aggregate the reference cells covering [a, b)."""
        k0, k1 = self.cell_index(a), self.cell_index(b)
        if k1 <= k0:
            raise ValueError(f"empty noise window [{a}, {b})")
        acc = WindowAccumulator(self.n, self.dim, self.mark_dim, a, second)
        for k in range(k0, k1):
            acc.add(self.cell(k, second))
        return acc.result(b)

    def fresh(self, a: float, b: float, tag: int, second: bool = False) -> StepNoise:
        """Independent noise for [a, b) not tied to the reference cells.

        Used for inner Monte Carlo replicates; ``tag`` selects the replicate.
        """
        h = b - a
        # key on the bit pattern of a so any start time gets its own block
        k = int(np.float64(a).view(np.int64))
        g = stream(self.seed, self.rep, FRESH, k, tag + 1)
        dB = np.sqrt(h) * g.standard_normal((self.n, self.dim))
        dB2 = np.sqrt(h) * g.standard_normal((self.n, self.dim)) if second else None
        owner, w, z, times = self._atoms(g, a, h)
        return StepNoise(a, b, dB, owner, w, z, times, dB2)


def merge_cells(parts, n, dim, mark_dim, a, b, second=False) -> StepNoise:
    """Sum a list of consecutive cell noises into one window."""
    return _concat(parts, n, dim, mark_dim, a, b, second)
