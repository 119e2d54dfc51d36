"""Explicit Euler map for law-dependent jump SDEs and its compositions.

One step over [a, b) with h = b - a moves every particle by

    b(X, mu) h + sum_k c(v_k, z_k, X, mu) - h cbar(X, mu) + L(X, mu) dB,

where mu is the step-start law, the v-marks are particles of mu picked by
the uniform labels of the atoms, cbar is the co-particle average of the
compensator and L L^T the co-particle average of sbar.  Noise comes from a
:class:`~sewflow.noise.CanonicalNoise`, so all schemes driven by the same
source are coupled through shared reference-cell increments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measures import EmpiricalMeasure, MeasureStats
from .model import apply_factor, psd_sqrt
from .noise import CanonicalNoise, StepNoise, WindowAccumulator
from .partitions import Partition, PartitionError, dyadic_partition


class SchemeError(RuntimeError):
    pass


@dataclass
class Ensemble:
    """N particles in R^d at a given time."""

    state: np.ndarray
    time: float
    step_index: int = 0
    noise: CanonicalNoise | None = field(default=None, repr=False)

    def __post_init__(self):
        st = np.asarray(self.state, dtype=np.float64)
        if st.ndim == 1:
            st = st.reshape(-1, 1)
        if not np.all(np.isfinite(st)):
            raise SchemeError("ensemble state contains NaN or Inf")
        self.state = st

    @property
    def n(self) -> int:
        return self.state.shape[0]

    @property
    def dim(self) -> int:
        return self.state.shape[1]

    def measure(self) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.state)

    def stats(self) -> MeasureStats:
        return MeasureStats(self.state)

    def moments(self) -> dict:
        st = self.stats()
        return {"time": self.time, "mean": st.mean.tolist(), "m2_trace": float(np.trace(st.second_moment))}


def _points(mu) -> np.ndarray:
    if isinstance(mu, Ensemble):
        return mu.state
    if isinstance(mu, EmpiricalMeasure):
        return np.array(mu.points)
    arr = np.array(mu, dtype=np.float64)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


# ---------------------------------------------------------------- one step

def mark_index(w: np.ndarray, n: int) -> np.ndarray:
    """0-based particle index ceil(w n) - 1, computed as floor(w n)."""
    return np.minimum((w * n).astype(np.int64), n - 1)


def jump_sum(model, x, law: MeasureStats, vpts: np.ndarray, noise: StepNoise) -> np.ndarray:
    """Per-particle sum of c(v_k, z_k, X_owner, mu) over the step's atoms."""
    out = np.zeros_like(x)
    if noise.n_atoms == 0:
        return out
    v = vpts[mark_index(noise.w, vpts.shape[0])]
    c = model.jump(v, noise.z, x[noise.owner], law)
    np.add.at(out, noise.owner, c)
    return out


def euler_increment(model, x, law: MeasureStats, vlaw: MeasureStats, vpts, noise: StepNoise, gauss=None):
    """x moved by one Euler step; ``gauss`` overrides the Gaussian part."""
    h = noise.h
    if gauss is None:
        root = psd_sqrt(model.diffusion_cov_mean(x, law, vlaw))
        gauss = apply_factor(root, noise.dB)
    drift = model.drift(x, law) * h
    comp = model.compensator_mean(x, law, vlaw) * h
    out = x + drift + (jump_sum(model, x, law, vpts, noise) - comp) + gauss
    bad = ~np.all(np.isfinite(out), axis=1)
    if np.any(bad):
        raise SchemeError(f"non-finite state after step [{noise.a}, {noise.b}) at particle {int(np.argmax(bad))}")
    return out


def euler_step(ens: Ensemble, dt: float, model, law: MeasureStats | None = None, noise=None) -> Ensemble:
    """One explicit Euler step of length dt from ens.time.

    ``law`` defaults to the ensemble's own empirical law (the mean-field
    scheme); v-marks are drawn from the particles of ``law``.  ``noise`` is a
    StepNoise for the window or, by default, the window of ``ens.noise``.
    """
    if dt <= 0:
        raise SchemeError("dt must be positive")
    source = ens.noise
    if noise is None:
        if source is None:
            raise SchemeError("ensemble has no noise source")
        noise = source.window(ens.time, ens.time + dt)
    law = ens.stats() if law is None else MeasureStats.of(law)
    new = euler_increment(model, ens.state, law, law, law.points, noise)
    return Ensemble(new, ens.time + dt, ens.step_index + 1, source)


# ---------------------------------------------------------------- compositions

def compose_scheme(mu0, pi: Partition, model, noise: CanonicalNoise, outputs=None) -> list[Ensemble]:
    """Theta^pi applied to mu0, one Euler step per cell of pi.

    Returns the ensembles at every partition time, or only at the times in
    ``outputs`` (which must be partition points).
    """
    x = _points(mu0)
    if x.shape[0] != noise.n or x.shape[1] != noise.dim:
        raise SchemeError("initial cloud does not match the noise source shape")
    times = pi.times
    keep = None if outputs is None else {float(t) for t in outputs}
    if keep is not None and not keep.issubset(set(times.tolist())):
        raise SchemeError("output times must be partition points")
    ens = Ensemble(x.copy(), float(times[0]), 0, noise)
    traj = [ens] if keep is None or ens.time in keep else []
    for a, b in pi.cells():
        ens = euler_step(ens, b - a, model)
        ens.time = b
        if keep is None or b in keep:
            traj.append(ens)
    return traj


def dyadic_scheme(mu0, s: float, t: float, n: int, model, noise: CanonicalNoise) -> Ensemble:
    """Theta^n_{s,t}: composition over the level-n grid between eta_n(s) and eta_n(t)."""
    if n > noise.level:
        raise SchemeError(f"level {n} is finer than the noise level {noise.level}")
    return compose_scheme(mu0, dyadic_partition(s, t, n), model, noise, outputs=None)[-1]


def reference_flow(mu0, s: float, t: float, n_ref: int, model, noise: CanonicalNoise) -> Ensemble:
    """Fine-level proxy for the limit flow theta_{s,t}(mu0)."""
    return dyadic_scheme(mu0, s, t, n_ref, model, noise)


def run_levels(mu0, s: float, t: float, levels, model, noise: CanonicalNoise, outputs=None) -> dict:
    """Run Theta^n_{s,t} for several levels n in one pass over the noise.

    Every reference cell is generated once and fed to all schedules; each
    level steps when its own grid point is reached.  Results are bitwise
    equal to separate :func:`dyadic_scheme` calls on the same source.

    Returns {level: [Ensemble, ...]} holding the final ensemble, preceded by
    ensembles at any grid time listed in ``outputs``.
    """
    levels = sorted(set(int(n) for n in levels))
    if not levels:
        raise SchemeError("no levels requested")
    if levels[-1] > noise.level:
        raise SchemeError(f"level {levels[-1]} is finer than the noise level {noise.level}")
    if s < 0 or t <= s:
        raise SchemeError("need 0 <= s < t")
    k0, k1 = noise.cell_index(s), noise.cell_index(t)
    x0 = _points(mu0)
    want = set() if outputs is None else {float(o) for o in outputs}
    state = {}
    for n in levels:
        width = 1 << (noise.level - n)
        if k0 % width or k1 % width:
            raise PartitionError(f"[{s}, {t}] is not a union of level-{n} cells")
        state[n] = {"x": x0.copy(), "width": width, "acc": None, "start": k0, "out": []}
    for k in range(k0, k1):
        cell = noise.cell(k)
        for n in levels:
            st = state[n]
            if st["acc"] is None:
                st["acc"] = WindowAccumulator(noise.n, noise.dim, noise.mark_dim, st["start"] * noise.h)
            st["acc"].add(cell)
            if (k + 1 - k0) % st["width"] == 0:
                b = (k + 1) * noise.h
                step = st["acc"].result(b)
                x = st["x"]
                law = MeasureStats(x)
                st["x"] = euler_increment(model, x, law, law, x, step)
                st["acc"] = None
                st["start"] = k + 1
                if b in want and k + 1 != k1:
                    st["out"].append(Ensemble(st["x"], b, 0, noise))
    out = {}
    for n in levels:
        st = state[n]
        steps = (k1 - k0) // st["width"]
        out[n] = st["out"] + [Ensemble(st["x"], t, steps, noise)]
    return out


# ---------------------------------------------------------------- external law input

class LawFlow:
    """Table of particle clouds at increasing times, used as an external
    measure argument rho_{s,t}.

    Queries between table times interpolate index-wise between the two
    neighbouring clouds; queries outside the table range raise.
    """

    def __init__(self, times, points):
        times = np.asarray(times, dtype=np.float64)
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 2:
            pts = pts[:, :, None]
        if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
            raise SchemeError("law flow times must be strictly increasing")
        if pts.shape[0] != times.size:
            raise SchemeError("one cloud per table time is required")
        self.times = times
        self.points = pts

    @classmethod
    def from_trajectory(cls, traj) -> "LawFlow":
        return cls([e.time for e in traj], np.stack([e.state for e in traj]))

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def covers(self, s: float, t: float) -> bool:
        return self.start <= s and t <= self.end

    def at(self, t: float) -> np.ndarray:
        tol = 1e-12 * max(1.0, abs(t))
        if t < self.start - tol or t > self.end + tol:
            raise SchemeError(f"law flow queried at {t}, outside [{self.start}, {self.end}]")
        i = int(np.searchsorted(self.times, t))
        if i < self.times.size and abs(self.times[i] - t) <= tol:
            return self.points[i]
        if i > 0 and abs(self.times[i - 1] - t) <= tol:
            return self.points[i - 1]
        lo, hi = self.times[i - 1], self.times[i]
        lam = (t - lo) / (hi - lo)
        return (1.0 - lam) * self.points[i - 1] + lam * self.points[i]

    def stats(self, t: float) -> MeasureStats:
        return MeasureStats(self.at(t))

    def perturbed(self, shift=0.0, scale: float = 1.0, trend=0.0) -> "LawFlow":
        """Clouds scaled about their mean by ``scale`` and moved by shift + trend (t - start)."""
        shift = np.asarray(shift, dtype=np.float64)
        trend = np.asarray(trend, dtype=np.float64)
        mean = self.points.mean(axis=1, keepdims=True)
        el = (self.times - self.start)[:, None, None]
        pts = mean + scale * (self.points - mean) + shift + trend * el
        return LawFlow(self.times.copy(), pts)


def _uniform_grid(s: float, t: float, n: int) -> np.ndarray:
    k = round((t - s) * n)
    if k < 1 or abs(k / n - (t - s)) > 1e-12:
        raise SchemeError(f"[{s}, {t}] is not a whole number of 1/{n} steps")
    return s + np.arange(k + 1) / n


def law_input_sde(x0, law: LawFlow | None, n: int, model, noise: CanonicalNoise, s: float, t: float) -> list[Ensemble]:
    """X^{rho, n}: Euler steps on the grid s + k/n with the measure argument
    (and the v-mark cloud) taken from ``law`` at the step start.

    ``law=None`` feeds the ensemble its own step-start law, which reproduces
    :func:`compose_scheme` on the same grid.  Returns the trajectory on the grid.
    """
    if law is not None and not law.covers(s, t):
        raise SchemeError("law flow does not cover the simulation window")
    grid = _uniform_grid(s, t, n)
    x = _points(x0).copy()
    traj = [Ensemble(x, float(grid[0]), 0, noise)]
    for k, (a, b) in enumerate(zip(grid[:-1], grid[1:])):
        step = noise.window(float(a), float(b))
        rho = MeasureStats(x) if law is None else MeasureStats(law.at(float(a)))
        x = euler_increment(model, x, rho, rho, rho.points, step)
        traj.append(Ensemble(x, float(b), k + 1, noise))
    return traj
