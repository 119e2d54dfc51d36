"""Law-input SDEs under two external flows on shared noise, and the
Gronwall-type stability bound between them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import coupled_gaussian
from .measures import MeasureStats
from .model import psd_sqrt
from .noise import CanonicalNoise
from .scheme import LawFlow, SchemeError, _uniform_grid, euler_increment, law_input_sde
from .stats import loglog_fit
from .wasserstein import MAX_EXACT_N, coupled_distance, pairing, w_distance


def w2_squared(a: np.ndarray, b: np.ndarray) -> float:
    """Exact W2^2 in 1D or for N within the exact cap; index-coupled upper bound otherwise."""
    if a.shape[1] == 1 or a.shape[0] <= MAX_EXACT_N:
        return w_distance(a, b) ** 2
    return coupled_distance(a, b) ** 2


def paired_law_input(x0, flow_a: LawFlow, flow_b: LawFlow, n: int, model, noise: CanonicalNoise,
                     s: float, t: float, solver: str = "scipy"):
    """X^{rho,n} and X^{rho',n} from the same start on the same noise.

    At each step the v-marks are the pair (rho[j], rho'[perm[j]]) with perm
    the optimal pairing of the two step-start clouds, and the Gaussian parts
    are drawn jointly.  Returns the grid and the two trajectories (K+1, N, d).
    """
    for f in (flow_a, flow_b):
        if not f.covers(s, t):
            raise SchemeError("law flow does not cover the simulation window")
    grid = _uniform_grid(s, t, n)
    xa = np.array(x0, dtype=np.float64)
    if xa.ndim == 1:
        xa = xa[:, None]
    xb = xa
    ta, tb = [xa], [xb]
    for a, b in zip(grid[:-1], grid[1:]):
        win = noise.window(float(a), float(b), second=True)
        ra, rb = flow_a.at(float(a)), flow_b.at(float(a))
        la, lb = MeasureStats(ra), MeasureStats(rb)
        if np.array_equal(ra, rb):
            va, vb = ra, ra
        else:
            perm = pairing(ra, rb, solver)
            va, vb = ra, rb[perm]
        l1 = psd_sqrt(model.diffusion_cov_mean(xa, la, la))
        ga, gb = coupled_gaussian(model, xa, la, va, xb, lb, vb, win, l1)
        new_a = euler_increment(model, xa, la, la, va, win, gauss=ga)
        if xa is xb and va is vb and la.points is lb.points:
            new_b = new_a
        else:
            new_b = euler_increment(model, xb, lb, lb, vb, win, gauss=gb)
        xa, xb = new_a, new_b
        ta.append(xa)
        tb.append(xb)
    return grid, np.stack(ta), np.stack(tb)


def gronwall_rhs(c: float, tau: np.ndarray, integral: np.ndarray) -> np.ndarray:
    return c * np.exp(c * tau) * integral


def fit_gronwall_constant(lhs, tau, integral, rtol: float = 1e-6) -> float:
    """Smallest C with lhs_k <= C e^{C tau_k} I_k at every k, by bisection."""
    lhs = np.asarray(lhs, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    integral = np.asarray(integral, dtype=np.float64)
    active = lhs > 0
    if not np.any(active):
        return 0.0
    if np.any(integral[active] <= 0):
        return math.inf

    def ok(c):
        return bool(np.all(lhs[active] <= gronwall_rhs(c, tau[active], integral[active])))

    lo, hi = 0.0, 1.0
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > 1e12:
            return math.inf
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class StabilityReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    integral: np.ndarray
    C_fitted: float
    n: int
    passed: bool

    def rows(self):
        return [{"time": float(t), "lhs": float(a), "rhs": float(b), "C_fitted": self.C_fitted}
                for t, a, b in zip(self.times, self.lhs, self.rhs)]


def stability_experiment(model, x0, flow_a: LawFlow, flow_b: LawFlow, n: int, noise: CanonicalNoise,
                         s: float, t: float, solver: str = "scipy") -> StabilityReport:
    """lhs_k = mean |x^rho - x^rho'|^2 at grid times against
    C e^{C (t_k - s)} int_s^{t_k} (W2^2(rho_eta, rho'_eta) + W2^2(rho_r, rho'_r)) dr.

    The first integrand is piecewise constant on the grid and integrated
    exactly; the second uses the trapezoid rule on the grid.
    """
    grid, ta, tb = paired_law_input(x0, flow_a, flow_b, n, model, noise, s, t, solver)
    diff = ta - tb
    lhs = np.mean(np.sum(diff * diff, axis=2), axis=1)
    w = np.array([w2_squared(flow_a.at(float(g)), flow_b.at(float(g))) for g in grid])
    h = np.diff(grid)
    piece = np.concatenate(([0.0], np.cumsum(h * w[:-1])))
    trap = np.concatenate(([0.0], np.cumsum(h * 0.5 * (w[:-1] + w[1:]))))
    integral = piece + trap
    tau = grid - s
    c = fit_gronwall_constant(lhs, tau, integral)
    rhs = gronwall_rhs(c, tau, integral) if np.isfinite(c) else np.full_like(lhs, np.inf)
    passed = bool(np.all(lhs <= rhs * (1 + 1e-9)))
    return StabilityReport(grid, lhs, rhs, integral, c, n, passed)


def discretization_convergence(model, x0, flow: LawFlow, n_list, noise: CanonicalNoise, s: float, t: float,
                               ref_factor: int = 4) -> dict:
    """Coupled L2 distance at t between X^{rho,n} and a reference with
    ref_factor * max(n_list) steps per unit, all on the same noise."""
    n_list = sorted(int(n) for n in n_list)
    ref_n = ref_factor * n_list[-1]
    ref = law_input_sde(x0, flow, ref_n, model, noise, s, t)[-1].state
    dist = np.array([coupled_distance(law_input_sde(x0, flow, n, model, noise, s, t)[-1].state, ref)
                     for n in n_list])
    out = {"n": n_list, "ref_n": ref_n, "distance": dist.tolist()}
    if np.all(dist > 0) and len(n_list) >= 3:
        out["fit"] = loglog_fit(1.0 / np.array(n_list, dtype=np.float64), dist).to_dict()
    else:
        out["fit"] = None
    return out
