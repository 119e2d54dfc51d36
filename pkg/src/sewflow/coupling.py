"""Coarse/fine coupling of Euler steps and the sewing-error decomposition.

Given a pair (X1, X2) with laws (mu1, mu2) and times s <= r <= t, the
coupled step moves

* X1 by one Euler step over [s, t] with coefficients frozen at (X1, mu1);
* X2 by two Euler steps, [s, r] with law mu2 and [r, t] with the law of
  the intermediate cloud.

Both see the same canonical noise.  An atom with label w picks the co-particle
pair (mu1[j], mu2[perm_s[j]]) on [s, r] and (mu1[j], X2_r[perm_r[j]]) on
[r, t], with j = floor(w N) and perm_s, perm_r optimal pairings.  Gaussian
parts are drawn jointly from the block covariance of the nu-integrals.
The X1 leg is computed exactly as a plain Euler step, so it coincides bit
for bit with :func:`sewflow.scheme.euler_step` on the same noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measures import InitialLawSpec, MeasureStats, moment_norm, sample_initial
from .model import apply_factor, coupled_factors, psd_sqrt
from .noise import AUX, CanonicalNoise, StepNoise, init_rng, stream
from .parallel import map_reps
from .partitions import Partition, finest_level
from .scheme import compose_scheme, euler_increment, mark_index
from .stats import Fit, energy_test, ks_test, loglog_fit, mean_se
from .wasserstein import coupled_distance, optimal_plan, pairing, w_distance


@dataclass
class PairedEnsemble:
    """Two equal-size clouds, row i of x1 paired with row i of x2."""

    x1: np.ndarray
    x2: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.x1 = np.asarray(self.x1, dtype=np.float64)
        self.x2 = np.asarray(self.x2, dtype=np.float64)
        if self.x1.ndim == 1:
            self.x1 = self.x1[:, None]
        if self.x2.ndim == 1:
            self.x2 = self.x2[:, None]
        if self.x1.shape != self.x2.shape:
            raise ValueError("paired clouds must have equal N and d")

    @classmethod
    def optimally_paired(cls, x1, x2, time: float = 0.0, solver: str = "scipy") -> "PairedEnsemble":
        """Reorder x2 so that row i is the W2-optimal partner of x1[i]."""
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        if x1.ndim == 1:
            x1, x2 = x1[:, None], x2[:, None]
        return cls(x1, x2[pairing(x1, x2, solver)], time)

    @property
    def n(self) -> int:
        return self.x1.shape[0]

    def plan(self, solver: str = "scipy"):
        return optimal_plan(self.x1, self.x2, 2.0, solver)

    def gap(self) -> float:
        return coupled_distance(self.x1, self.x2)


@dataclass
class PairStep:
    """Output of one coupled step; ``x2_mid`` is X2 at the inner time r."""

    x1: np.ndarray
    x2_mid: np.ndarray
    x2: np.ndarray
    perm_s: np.ndarray
    perm_r: np.ndarray
    s: float
    r: float
    t: float

    def pair(self) -> PairedEnsemble:
        return PairedEnsemble(self.x1, self.x2, self.t)


def _same(a, b) -> bool:
    return a is b or (a.shape == b.shape and np.array_equal(a, b))


def coupled_gaussian(model, x1, law1, v1, x2, law2, v2, noise: StepNoise, l1, g1=None):
    """Gaussian increments (G1, G2) with Cov = h [[S1, Sx], [Sx^T, S2]].

    S1, S2 are the co-particle averages of sbar and Sx the average of the
    cross term over the paired co-particles (v1[j], v2[j]).  ``l1`` is the
    factor of S1 already used by the first component, and ``g1`` (if given)
    its increment.  When both argument sets coincide exactly the second
    component reuses the first increment, which is the synchronous coupling.
    """
    if g1 is None:
        g1 = apply_factor(l1, noise.dB)
    if _same(x1, x2) and _same(v1, v2) and _same(law1.points, law2.points):
        return g1, g1
    s1 = model.diffusion_cov_mean(x1, law1, law1)
    s2 = model.diffusion_cov_mean(x2, law2, law2)
    sx = model.diffusion_cross_mean(x1, law1, v1, x2, law2, v2)
    _, l21, l22 = coupled_factors(s1, sx, s2, l1)
    g2 = apply_factor(l21, noise.dB) + apply_factor(l22, noise.dB2)
    return g1, g2


def coupled_step_pair(pair: PairedEnsemble, s: float, r: float, t: float, model, noise: CanonicalNoise,
                      solver: str = "scipy") -> PairStep:
    """One coarse step for X1 against two fine steps for X2 on shared noise."""
    if not s <= r <= t or s == t:
        raise ValueError(f"need s <= r <= t with s < t, got {s}, {r}, {t}")
    x1, x2 = pair.x1, pair.x2
    mu1, mu2 = MeasureStats(x1), MeasureStats(x2)
    full = noise.window(s, t)
    out1 = euler_increment(model, x1, mu1, mu1, x1, full)
    l1 = psd_sqrt(model.diffusion_cov_mean(x1, mu1, mu1))

    ident = np.arange(pair.n)
    perm_s = perm_r = ident
    mid = x2
    if r > s:
        win = noise.window(s, r, second=True)
        perm_s = ident if _same(x1, x2) else pairing(x1, x2, solver)
        v2 = x2[perm_s]
        _, g2 = coupled_gaussian(model, x1, mu1, x1, x2, mu2, v2, win, l1)
        mid = euler_increment(model, x2, mu2, mu2, v2, win, gauss=g2)
    out2 = mid
    if t > r:
        win = noise.window(r, t, second=True)
        mu_r = MeasureStats(mid)
        perm_r = ident if _same(x1, mid) else pairing(x1, mid, solver)
        v2 = mid[perm_r]
        _, g2 = coupled_gaussian(model, x1, mu1, x1, mid, mu_r, v2, win, l1)
        out2 = euler_increment(model, mid, mu_r, mu_r, v2, win, gauss=g2)
    return PairStep(out1, mid, out2, perm_s, perm_r, s, r, t)


def e_decomposition(pair: PairedEnsemble, s: float, r: float, t: float, model, noise: CanonicalNoise,
                    inner_paths: int = 64, step: PairStep | None = None, solver: str = "scipy") -> dict:
    """Split the increments E^l = X^l_out - X^l_in into F_s-conditional means
    (``E1hat``, ``E2hat``) and centred parts (``E1til``, ``E2til``).

    The coarse conditional mean is b(X1, mu1)(t - s).  For the fine pair the
    martingale parts are centred, so only the drift at time r needs an inner
    Monte Carlo average over ``inner_paths`` fresh replicates of the first
    fine step, evaluated against the outer law at r.  ``nested_se`` is the
    per-particle standard error of that average (RMS over particles).
    """
    if inner_paths < 16:
        raise ValueError("inner_paths must be at least 16")
    if step is None:
        step = coupled_step_pair(pair, s, r, t, model, noise, solver)
    x1, x2 = pair.x1, pair.x2
    mu1, mu2 = MeasureStats(x1), MeasureStats(x2)
    e1 = step.x1 - x1
    e2 = step.x2 - x2
    e1hat = model.drift(x1, mu1) * (t - s)
    e2hat = model.drift(x2, mu2) * (r - s)
    se = np.zeros_like(x2)
    if t > r:
        mu_r = MeasureStats(step.x2_mid)
        if r > s:
            # Welford running mean and variance
            mean_b = np.zeros_like(x2)
            ssq = np.zeros_like(x2)
            for m in range(inner_paths):
                inner = euler_increment(model, x2, mu2, mu2, x2, noise.fresh(s, r, m))
                b = model.drift(inner, mu_r)
                delta = b - mean_b
                mean_b += delta / (m + 1)
                ssq += delta * (b - mean_b)
            var_b = ssq / (inner_paths - 1)
            se = (t - r) * np.sqrt(var_b / inner_paths)
        else:
            mean_b = model.drift(x2, mu_r)
        e2hat = e2hat + (t - r) * mean_b
    return {
        "E1": e1, "E2": e2,
        "E1hat": e1hat, "E1til": e1 - e1hat,
        "E2hat": e2hat, "E2til": e2 - e2hat,
        "nested_se": float(np.sqrt(np.mean(np.sum(se * se, axis=1)))),
    }


def rms(a: np.ndarray) -> float:
    """(1/N sum |a_i|^2)^(1/2)."""
    return float(np.sqrt(np.mean(np.sum(a * a, axis=1))))


# ---------------------------------------------------------------- exponent study

NORMS = ("E1til", "E1hat", "dEtil", "dEhat")
TARGETS = {"E1til": 0.5, "E1hat": 1.0, "dEtil": 1.0, "dEhat": 1.5}


@dataclass
class SewingEstimate:
    """Norms per step size (mean and SE over replications) and slope fits."""

    h: np.ndarray
    norms: dict
    stderr: dict
    fits: dict
    slope_se: dict
    gap: np.ndarray
    nested_rel_se: np.ndarray
    L_sew: float
    C_sew: float
    per_rep: dict = field(default_factory=dict, repr=False)

    def rows(self):
        out = []
        for i, h in enumerate(self.h):
            for name in NORMS:
                out.append({"h": h, "norm_name": name, "value": self.norms[name][i], "stderr": self.stderr[name][i]})
        return out


def _draw(mu, rng, n):
    if isinstance(mu, InitialLawSpec):
        spec = InitialLawSpec(**{**mu.to_dict(), "n": n}) if mu.kind != "explicit-points" else mu
        return np.array(sample_initial(spec, rng).points)
    arr = np.asarray(mu, dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr


def sewing_exponent_study(model, mu1, mu2, h_levels, N: int, M: int = 64, seed: int = 0, reps: int = 8,
                          r_frac: float = 0.5, s: float = 0.0, solver: str = "scipy",
                          threads: int = 1) -> SewingEstimate:
    """Norms of the sewing decomposition for h = 2^-n, n in ``h_levels``.

    ``mu2=None`` runs the X1 = X2 regime.  Otherwise X2 is drawn from mu2 and
    optimally paired with X1.  Every (replication, level) owns its noise key.
    Slopes are fitted per replication; reported slope and SE are the mean and
    standard error across replications.
    """
    levels = sorted(int(n) for n in h_levels)
    if len(levels) < 3:
        raise ValueError("need at least three step sizes for a slope fit")
    extra = finest_level(Partition([r_frac])) if 0 < r_frac < 1 else 0
    h = 2.0 ** -np.array(levels, dtype=np.float64)

    def one(rep):
        rng = init_rng(seed, rep)
        x1 = _draw(mu1, rng, N)
        x2 = x1.copy() if mu2 is None else _draw(mu2, rng, N)
        pair = PairedEnsemble(x1, x1) if mu2 is None else PairedEnsemble.optimally_paired(x1, x2, s, solver)
        row = {name: np.zeros(len(levels)) for name in NORMS}
        gap = np.zeros(len(levels))
        rel = np.zeros(len(levels))
        for i, n in enumerate(levels):
            noise = CanonicalNoise.for_model(model, seed, N, n + extra, rep=rep * 64 + n)
            hh = 2.0**-n
            dec = e_decomposition(pair, s, s + r_frac * hh, s + hh, model, noise, M, solver=solver)
            row["E1til"][i] = rms(dec["E1til"])
            row["E1hat"][i] = rms(dec["E1hat"])
            row["dEtil"][i] = rms(dec["E2til"] - dec["E1til"])
            row["dEhat"][i] = rms(dec["E2hat"] - dec["E1hat"])
            gap[i] = pair.gap()
            e2n = rms(dec["E2hat"])
            rel[i] = dec["nested_se"] / e2n if e2n > 0 else 0.0
        return row, gap, rel, moment_norm(pair.x1)

    results = map_reps(one, reps, threads)
    vals = {name: np.stack([r[0][name] for r in results]) for name in NORMS}
    gap = np.stack([r[1] for r in results])
    rel = np.stack([r[2] for r in results])
    norm1 = np.array([r[3] for r in results])
    norms, stderr, fits, slope_se = {}, {}, {}, {}
    for name in NORMS:
        norms[name], stderr[name] = mean_se(vals[name])
        if np.all(norms[name] > 0):
            fits[name] = loglog_fit(h, norms[name])
            per = [loglog_fit(h, vals[name][k]).slope for k in range(reps) if np.all(vals[name][k] > 0)]
            slope_se[name] = mean_se(per)[1] if len(per) > 1 else np.nan
        else:
            fits[name] = None
            slope_se[name] = np.nan
    scale = 1.0 + norm1.mean()
    L_sew = float(max(np.max(norms["E1til"] / h**0.5), np.max(norms["E1hat"] / h)) / scale)
    C_sew = float(max(np.max(norms["dEtil"] / h**1.0), np.max(norms["dEhat"] / h**1.5)) / scale)
    return SewingEstimate(h, norms, stderr, fits, slope_se, gap.mean(axis=0), rel.max(axis=0), L_sew, C_sew,
                          per_rep=vals)


# ---------------------------------------------------------------- subpartition gap

def subpartition_gap(model, x_mu, x_nu, pi: Partition, pi2: Partition, noise: CanonicalNoise,
                     solver: str = "scipy") -> dict:
    """Coupled distance between Theta^pi(mu) and Theta^pi2(nu) on shared noise,
    with nu's particles optimally paired to mu's."""
    pair = PairedEnsemble.optimally_paired(x_mu, x_nu, pi.start, solver)
    a = compose_scheme(pair.x1, pi, model, noise)[-1].state
    b = compose_scheme(pair.x2, pi2, model, noise)[-1].state
    return {
        "gap": coupled_distance(a, b),
        "w_in": w_distance(pair.x1, pair.x2) if pair.x1.shape[1] == 1 else pair.gap(),
        "norm_mu": moment_norm(pair.x1),
        "norm_nu": moment_norm(pair.x2),
    }


# ---------------------------------------------------------------- canonical representation

def _quantile_order(pts: np.ndarray) -> np.ndarray:
    """Ordering used by the canonical map: lexicographic, first coordinate major."""
    return np.lexsort(pts.T[::-1])


def canonical_representation_check(model, mu, s: float, t: float, samples: int, seed: int,
                                   alpha: float = 0.01, tau: str = "quantile") -> dict:
    """Compare one Euler-step noise increment drawn two ways.

    Native: v-marks are uniformly chosen particles of mu and the Gaussian part
    is one draw with covariance h * mean_j sbar(mu_j, X).  Canonical: v-marks
    are tau(w) for uniform w, with tau the empirical quantile map of mu, and
    the Gaussian part integrates over the w-cells, sum_j L(sbar(tau_j, X))
    xi_j sqrt(h / N).  ``tau="reflected"`` replaces tau by the quantile map of
    the reflection of mu about its mean, a deliberately wrong map.

    The starting state X is a uniform particle of mu in both pathways.  The
    p-value comes from a KS test (d = 1) or an energy permutation test.
    """
    if samples < 10_000:
        raise ValueError("samples must be at least 10^4")
    pts = np.asarray(mu, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, d = pts.shape
    h = t - s
    law = MeasureStats(pts)
    order = _quantile_order(pts)
    if tau == "quantile":
        canon = pts[order]
    elif tau == "reflected":
        refl = 2 * law.mean - pts
        canon = refl[_quantile_order(refl)]
    else:
        raise ValueError(f"unknown tau {tau!r}")

    def pathway(purpose_tag, canonical):
        g = stream(seed, 0, AUX, purpose_tag)
        xi = pts[g.integers(0, n, size=samples)]
        cnt = g.poisson(model.lam * h, size=samples) if model.lam > 0 else np.zeros(samples, dtype=np.int64)
        owner = np.repeat(np.arange(samples), cnt)
        w = g.random(owner.size)
        z = np.asarray(model.sample_marks(g, owner.size), dtype=np.float64).reshape(owner.size, model.mark_dim)
        src = canon if canonical else pts
        v = src[mark_index(w, n)]
        jumps = np.zeros((samples, d))
        if owner.size:
            np.add.at(jumps, owner, model.jump(v, z, xi[owner], law))
        jumps -= h * model.compensator_mean(xi, law, law)
        if canonical:
            gauss = np.zeros((samples, d))
            for j in range(n):
                vj = np.broadcast_to(src[j], (samples, d))
                root = psd_sqrt(model.diffusion_cov(vj, xi, law))
                gauss += apply_factor(root, g.standard_normal((samples, d))) * np.sqrt(h / n)
        else:
            root = psd_sqrt(model.diffusion_cov_mean(xi, law, law))
            gauss = apply_factor(root, g.standard_normal((samples, d))) * np.sqrt(h)
        return jumps + gauss, gauss

    nat, nat_g = pathway(1, False)
    can, can_g = pathway(2, True)
    if d == 1:
        p = ks_test(nat, can)
    else:
        p = energy_test(nat, can, stream(seed, 0, AUX, 3))
    cov_n = np.cov(nat_g.T).reshape(d, d)
    cov_c = np.cov(can_g.T).reshape(d, d)
    return {
        "p_value": p,
        "alpha": alpha,
        "pass": bool(p >= alpha),
        "gauss_cov_native": cov_n.tolist(),
        "gauss_cov_canonical": cov_c.tolist(),
        "tau": tau,
    }
