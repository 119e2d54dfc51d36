"""Exact W_p distances and optimal pairings between equal-size point clouds.

For two clouds of N equally weighted points an optimal coupling can be
taken to be a permutation, so everything here reduces to an assignment
problem: sorting in one dimension, a shortest augmenting path solver
otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .measures import EmpiricalMeasure

log = logging.getLogger(__name__)

# exact solver guidance cap for d >= 2
MAX_EXACT_N = 4096


class CouplingError(ValueError):
    pass


@dataclass(frozen=True)
class CouplingPlan:
    """Permutation pairing point i of the first cloud with point perm[i] of the second."""

    perm: np.ndarray
    cost: float
    p: float = 2.0

    @property
    def n(self) -> int:
        return self.perm.shape[0]

    def distance(self) -> float:
        return self.cost ** (1.0 / self.p)

    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return inv


def _points(mu) -> np.ndarray:
    if isinstance(mu, EmpiricalMeasure):
        return mu.points
    arr = np.asarray(mu, dtype=np.float64)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def _check_pair(x: np.ndarray, y: np.ndarray, p: float):
    if p < 1:
        raise CouplingError(f"p must be >= 1, got {p}")
    if x.shape[1] != y.shape[1]:
        raise CouplingError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    if x.shape[0] != y.shape[0]:
        raise CouplingError(f"point count mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] == 0:
        raise CouplingError("empty measure")


def pair_costs(x: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    """Row-wise |x_i - y_i|^p."""
    diff = x - y
    sq = np.einsum("ij,ij->i", diff, diff)
    if p == 2:
        return sq
    return np.sqrt(sq) ** p


def transport_cost(x: np.ndarray, y: np.ndarray, perm: np.ndarray, p: float) -> float:
    """Mean of |x_i - y_perm(i)|^p, summed in sorted order so the result
    does not depend on how the pairs are listed."""
    return float(np.sort(pair_costs(x, y[perm], p)).sum() / x.shape[0])


def cost_matrix(x: np.ndarray, y: np.ndarray, p: float, block: int = 256) -> np.ndarray:
    """N x N matrix of |x_i - y_j|^p, built from explicit differences in row blocks."""
    n = x.shape[0]
    sq = np.empty((n, y.shape[0]))
    for start in range(0, n, block):
        diff = x[start : start + block, None, :] - y[None, :, :]
        sq[start : start + block] = np.einsum("ijk,ijk->ij", diff, diff)
    if p == 2:
        return sq
    return np.sqrt(sq) ** p


def assignment_sap(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect matching by shortest augmenting paths.

    Rows are inserted one at a time; each insertion runs a Dijkstra-like
    search on reduced costs maintained through dual potentials.  Among equal
    reduced costs the lowest column index wins.  O(N^3) overall.

    Returns ``col`` with row i assigned to column col[i].
    """
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n != m:
        raise CouplingError("assignment needs a square cost matrix")
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    # match[j] = 1-based row matched to column j (column 0 is a sentinel)
    match = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    padded = np.zeros((n + 1, m + 1))
    padded[1:, 1:] = cost
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            free = ~used
            free[0] = False
            cur = padded[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            masked = np.where(free, minv, inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[match[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    col = np.empty(n, dtype=np.int64)
    col[match[1:] - 1] = np.arange(m)
    return col


def _solve(cost: np.ndarray, solver: str) -> np.ndarray:
    if solver == "sap":
        return assignment_sap(cost)
    if solver == "scipy":
        rows, cols = linear_sum_assignment(cost)
        out = np.empty(cost.shape[0], dtype=np.int64)
        out[rows] = cols
        return out
    raise CouplingError(f"unknown assignment solver {solver!r}")


def optimal_plan(mu, nu, p: float = 2.0, solver: str = "scipy") -> CouplingPlan:
    """Cost-minimising permutation between two equal-size clouds."""
    x, y = _points(mu), _points(nu)
    _check_pair(x, y, p)
    n = x.shape[0]
    if x.shape[1] == 1:
        ox = np.argsort(x[:, 0], kind="stable")
        oy = np.argsort(y[:, 0], kind="stable")
        perm = np.empty(n, dtype=np.int64)
        perm[ox] = oy
    else:
        if n > MAX_EXACT_N:
            raise CouplingError(
                f"exact assignment capped at N={MAX_EXACT_N} in d>=2 (got N={n})"
            )
        perm = _solve(cost_matrix(x, y, p), solver)
    return CouplingPlan(perm=perm, cost=transport_cost(x, y, perm, p), p=p)


def w_distance(mu, nu, p: float = 2.0, solver: str = "scipy") -> float:
    """Exact W_p between two equal-size empirical measures."""
    x, y = _points(mu), _points(nu)
    _check_pair(x, y, p)
    if x.shape[1] == 1:
        xs = np.sort(x[:, 0])
        ys = np.sort(y[:, 0])
        c = np.abs(xs - ys)
        c = c * c if p == 2 else c**p
        return float(np.sort(c).sum() / x.shape[0]) ** (1.0 / p)
    return optimal_plan(x, y, p, solver).distance()


def coupled_distance(x1, x2, p: float = 2.0) -> float:
    """(1/N sum |x1_i - x2_i|^p)^(1/p) for index-paired particles."""
    a, b = _points(x1), _points(x2)
    _check_pair(a, b, p)
    return float(pair_costs(a, b, p).mean()) ** (1.0 / p)


def coupling_map_apply(plan: CouplingPlan, mu, nu, u: float):
    """Evaluate the pairing map at u in (0, 1).

    The pair index is ceil(u N) (1-based); pushing a uniform u forward gives
    the coupling described by ``plan``.
    """
    if not 0.0 < u < 1.0:
        raise CouplingError(f"u must lie in (0, 1), got {u}")
    x, y = _points(mu), _points(nu)
    j = int(np.ceil(u * plan.n)) - 1
    return x[j], y[plan.perm[j]]


def pairing(x: np.ndarray, y: np.ndarray, solver: str = "scipy") -> np.ndarray:
    """W_2-optimal pairing used inside the simulators.

    Falls back to the index pairing when an exact plan in d >= 2 would exceed
    the size cap; the index pairing is still a coupling, only not optimal.
    """
    if x.shape[1] > 1 and x.shape[0] > MAX_EXACT_N:
        log.warning("N=%d above exact cap in d=%d; using index pairing", x.shape[0], x.shape[1])
        return np.arange(x.shape[0])
    return optimal_plan(x, y, 2.0, solver).perm
