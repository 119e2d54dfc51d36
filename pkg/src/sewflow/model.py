"""Coefficients of law-dependent jump SDEs and their noise primitives.

A model supplies, for a state x, a co-particle v, a mark z and a law mu:

* drift b(x, mu),
* jump amplitude c(v, z, x, mu),
* diffusion column sigma(v, z, x, mu),

plus the nu-integrals the simulator needs: the compensator
cbar = int c dnu, the covariance sbar = int sigma sigma^T dnu and the
cross covariance between two argument sets.  The mark measure nu has finite
total mass ``lam`` and normalised sampler ``sample_marks``.

All coefficient methods are vectorised over rows.  The ``*_mean`` methods
average over the co-particle cloud; the defaults do this by brute force in
O(N * N_v) and the built-in models override them with moment formulas.
"""

from __future__ import annotations

import math

import numpy as np

from .measures import MeasureStats


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------- noise primitives

def poisson_step_noise(rng: np.random.Generator, lam: float, dt: float, sample_marks=None, mark_dim: int = 1):
    """Jump list of one particle over a step of length dt.

    Returns (marks z, uniforms w); the count is len(w) ~ Poisson(lam * dt).
    """
    if dt <= 0:
        raise ModelError("dt must be positive")
    if lam < 0:
        raise ModelError("intensity must be non-negative")
    k = rng.poisson(lam * dt) if lam > 0 else 0
    w = rng.random(k)
    if sample_marks is None:
        z = np.ones((k, mark_dim))
    else:
        z = np.asarray(sample_marks(rng, k), dtype=np.float64).reshape(k, mark_dim)
    return z, w


def psd_sqrt(cov: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Factor L with L L^T = cov for a stack of symmetric PSD matrices.

    Cholesky where it succeeds; otherwise a symmetric eigen factor with
    eigenvalues in [-tol * scale, 0] clipped to zero.  Larger negative
    eigenvalues raise.
    """
    cov = np.asarray(cov, dtype=np.float64)
    single = cov.ndim == 2
    stack = cov[None] if single else cov
    d = stack.shape[-1]
    if d == 1:
        v = stack[..., 0, 0]
        if v.size and v.min() < 0 and np.any(v < -tol * np.maximum(1.0, np.abs(v))):
            raise ModelError("covariance is not positive semidefinite")
        out = np.sqrt(np.maximum(v, 0.0))[..., None, None]
        return out[0] if single else out
    try:
        out = np.linalg.cholesky(stack)
    except np.linalg.LinAlgError:
        w, vecs = np.linalg.eigh(stack)
        scale = np.maximum(1.0, np.abs(w).max(axis=-1, keepdims=True))
        if np.any(w < -tol * scale):
            raise ModelError("covariance is not positive semidefinite")
        out = vecs * np.sqrt(np.clip(w, 0.0, None))[..., None, :]
    return out[0] if single else out


def coupled_factors(s1: np.ndarray, sx: np.ndarray, s2: np.ndarray, l1: np.ndarray | None = None):
    """Factor the 2d x 2d block matrix [[s1, sx], [sx^T, s2]] as
    [[l1, 0], [l21, l22]] for stacks of d x d blocks.

    The first block row reuses ``l1`` (the plain factor of s1) so the first
    component sees exactly the same Gaussian as an uncoupled step.  The Schur
    complement is cleaned of eigenvalues below 1e-12 of its scale before
    factoring, which removes round-off when both arguments coincide.
    """
    if l1 is None:
        l1 = psd_sqrt(s1)
    d = s1.shape[-1]
    if d == 1:
        a = l1[..., 0, 0]
        safe = np.where(a > 0, a, 1.0)
        l21 = np.where(a > 0, sx[..., 0, 0] / safe, 0.0)[..., None, None]
    else:
        l21 = np.swapaxes(np.linalg.pinv(l1) @ sx, -1, -2)
    schur = s2 - l21 @ np.swapaxes(l21, -1, -2)
    schur = 0.5 * (schur + np.swapaxes(schur, -1, -2))
    scale = np.abs(s2).max(axis=(-1, -2), keepdims=True)
    if d == 1:
        schur = np.where(np.abs(schur) <= 1e-12 * scale, 0.0, schur)
        if np.any(schur < -1e-10 * np.maximum(scale, 1.0)):
            raise ModelError("coupled block covariance is not PSD")
        l22 = np.sqrt(np.maximum(schur, 0.0))
    else:
        w, vecs = np.linalg.eigh(schur)
        lim = scale[..., 0]
        if np.any(w < -1e-10 * np.maximum(lim, 1.0)):
            raise ModelError("coupled block covariance is not PSD")
        w = np.where(w <= 1e-12 * lim, 0.0, w)
        l22 = vecs * np.sqrt(w)[..., None, :]
    return l1, l21, l22


def gaussian_increment(cov: np.ndarray, dt: float, g: np.ndarray) -> np.ndarray:
    """L g sqrt(dt) with L L^T = cov; g holds standard normals (last axis d)."""
    if dt < 0:
        raise ModelError("dt must be non-negative")
    root = psd_sqrt(cov)
    return np.sqrt(dt) * np.einsum("...ij,...j->...i", root, g)


def apply_factor(root: np.ndarray, dB: np.ndarray) -> np.ndarray:
    """Row-wise root_i @ dB_i for roots (N, d, d) or a shared (d, d)."""
    if root.ndim == 2:
        return dB @ root.T
    if root.shape[-1] == 1:
        return root[:, :, 0] * dB
    return np.einsum("nij,nj->ni", root, dB)


# ---------------------------------------------------------------- models

def _chunks(n: int, nv: int, budget: int = 1 << 20):
    step = max(1, budget // max(nv, 1))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


class Model:
    """Base class; subclasses implement the pointwise coefficients."""

    name = "model"
    dim = 1
    mark_dim = 1
    lam = 0.0

    def __init__(self):
        self.params: dict = {}

    # -- marks
    def sample_marks(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return np.ones((k, self.mark_dim))

    # -- pointwise coefficients (rows)
    def drift(self, x, law: MeasureStats):
        raise NotImplementedError

    def jump(self, v, z, x, law: MeasureStats):
        raise NotImplementedError

    def sigma(self, v, z, x, law: MeasureStats):
        raise NotImplementedError

    def compensator(self, v, x, law: MeasureStats):
        raise NotImplementedError

    def diffusion_cov(self, v, x, law: MeasureStats):
        raise NotImplementedError

    def diffusion_cross(self, v1, x1, law1, v2, x2, law2):
        raise NotImplementedError

    # -- averages over the co-particle cloud
    def compensator_mean(self, x, law: MeasureStats, vlaw: MeasureStats):
        vp = vlaw.points
        out = np.empty_like(x)
        for sl in _chunks(x.shape[0], vp.shape[0]):
            xi = np.repeat(x[sl], vp.shape[0], axis=0)
            vj = np.tile(vp, (xi.shape[0] // vp.shape[0], 1))
            vals = self.compensator(vj, xi, law).reshape(-1, vp.shape[0], self.dim)
            out[sl] = vals.mean(axis=1)
        return out

    def diffusion_cov_mean(self, x, law: MeasureStats, vlaw: MeasureStats):
        vp = vlaw.points
        d = self.dim
        out = np.empty((x.shape[0], d, d))
        for sl in _chunks(x.shape[0], vp.shape[0]):
            xi = np.repeat(x[sl], vp.shape[0], axis=0)
            vj = np.tile(vp, (xi.shape[0] // vp.shape[0], 1))
            vals = self.diffusion_cov(vj, xi, law).reshape(-1, vp.shape[0], d, d)
            out[sl] = vals.mean(axis=1)
        return out

    def diffusion_cross_mean(self, x1, law1, v1, x2, law2, v2):
        """Average of sbar^x over the paired co-particles (v1[j], v2[j])."""
        nv = v1.shape[0]
        d = self.dim
        out = np.empty((x1.shape[0], d, d))
        for sl in _chunks(x1.shape[0], nv):
            m = x1[sl].shape[0]
            a1 = np.repeat(x1[sl], nv, axis=0)
            a2 = np.repeat(x2[sl], nv, axis=0)
            b1 = np.tile(v1, (m, 1))
            b2 = np.tile(v2, (m, 1))
            vals = self.diffusion_cross(b1, a1, law1, b2, a2, law2).reshape(m, nv, d, d)
            out[sl] = vals.mean(axis=1)
        return out

    def lipschitz(self) -> dict:
        return {}

    def to_config(self) -> dict:
        return {"model": self.name, "params": dict(self.params)}

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"


class Linear1D(Model):
    """Scalar model with linear coefficients and a single mark of mass lam.

    b = b0 + bx x + bm m1(mu);  c = cx x + cv v + cm m1(mu);
    sigma = s0 + sx x + sv v.
    """

    name = "linear1d"
    dim = 1
    PARAMS = ("b0", "bx", "bm", "cx", "cv", "cm", "s0", "sx", "sv", "lambda")

    def __init__(self, b0=0.0, bx=0.0, bm=0.0, cx=0.0, cv=0.0, cm=0.0, s0=0.0, sx=0.0, sv=0.0, lam=1.0, **kw):
        super().__init__()
        if "lambda" in kw:
            lam = kw.pop("lambda")
        if kw:
            raise ModelError(f"unknown linear1d parameters: {sorted(kw)}")
        if lam < 0:
            raise ModelError("lambda must be non-negative")
        self.b0, self.bx, self.bm = float(b0), float(bx), float(bm)
        self.cx, self.cv, self.cm = float(cx), float(cv), float(cm)
        self.s0, self.sx, self.sv = float(s0), float(sx), float(sv)
        self.lam = float(lam)
        self.params = dict(b0=self.b0, bx=self.bx, bm=self.bm, cx=self.cx, cv=self.cv, cm=self.cm,
                           s0=self.s0, sx=self.sx, sv=self.sv)
        self.params["lambda"] = self.lam

    def drift(self, x, law):
        return self.b0 + self.bx * x + self.bm * law.mean

    def jump(self, v, z, x, law):
        return self.cx * x + self.cv * v + self.cm * law.mean

    def sigma(self, v, z, x, law):
        return self.s0 + self.sx * x + self.sv * v

    def compensator(self, v, x, law):
        return self.lam * self.jump(v, None, x, law)

    def diffusion_cov(self, v, x, law):
        s = self.sigma(v, None, x, law)
        return self.lam * (s * s)[:, :, None]

    def diffusion_cross(self, v1, x1, law1, v2, x2, law2):
        return self.lam * (self.sigma(v1, None, x1, law1) * self.sigma(v2, None, x2, law2))[:, :, None]

    def compensator_mean(self, x, law, vlaw):
        return self.lam * (self.cx * x + self.cv * vlaw.mean + self.cm * law.mean)

    def diffusion_cov_mean(self, x, law, vlaw):
        ev, ev2 = float(vlaw.mean[0]), float(vlaw.second_moment[0, 0])
        # lam * E_v (a + sv v)^2 with a = s0 + sx x
        out = self.sx * x
        out += self.s0 + self.sv * ev
        out *= out
        out += self.sv**2 * (ev2 - ev * ev)
        out *= self.lam
        return out[:, :, None]

    def diffusion_cross_mean(self, x1, law1, v1, x2, law2, v2):
        a1 = self.s0 + self.sx * x1
        a2 = self.s0 + self.sx * x2
        e1, e2 = v1[:, 0].mean(), v2[:, 0].mean()
        e12 = np.dot(v1[:, 0], v2[:, 0]) / v1.shape[0]
        sv = self.sv
        return (self.lam * (a1 * a2 + sv * (a1 * e2 + a2 * e1) + sv * sv * e12))[:, :, None]

    def lipschitz(self):
        cz = max(abs(self.cx) + abs(self.sx), abs(self.cv) + abs(self.sv), abs(self.cm))
        return {"C": max(abs(self.bx), abs(self.bm)), "Cz": cz, "Cbar": self.lam * cz**2}


class AttractD(Model):
    """d-dimensional model: linear drift, jumps toward a random co-particle,
    constant diffusion matrix.

    Marks are the d column labels {0, ..., d-1}, each with mass lam / d, so
    that a constant matrix s0 yields covariance s0 s0^T:
    b = A x + B m1(mu);  c = gamma (v - x);  sigma(z) = sqrt(d / lam) s0[:, z].
    """

    name = "attract-d"

    def __init__(self, d=2, A=-0.5, B=0.25, gamma=0.5, s0=0.3, lam=1.0, **kw):
        super().__init__()
        if "lambda" in kw:
            lam = kw.pop("lambda")
        if kw:
            raise ModelError(f"unknown attract-d parameters: {sorted(kw)}")
        if lam <= 0:
            raise ModelError("attract-d needs lambda > 0")
        self.dim = int(d)
        self.A = self._mat(A)
        self.B = self._mat(B)
        self.s0 = self._mat(s0)
        self.gamma = float(gamma)
        self.lam = float(lam)
        self.mark_dim = 1
        self.params = {"d": self.dim, "A": self.A.tolist(), "B": self.B.tolist(), "gamma": self.gamma,
                       "s0": self.s0.tolist(), "lambda": self.lam}
        self._cov = self.s0 @ self.s0.T

    def _mat(self, value):
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim == 0:
            return float(arr) * np.eye(self.dim)
        if arr.ndim == 1:
            return np.diag(arr)
        if arr.shape != (self.dim, self.dim):
            raise ModelError(f"expected a {self.dim}x{self.dim} matrix")
        return arr

    def sample_marks(self, rng, k):
        return rng.integers(0, self.dim, size=k).astype(np.float64).reshape(k, 1)

    def drift(self, x, law):
        return x @ self.A.T + law.mean @ self.B.T

    def jump(self, v, z, x, law):
        return self.gamma * (v - x)

    def sigma(self, v, z, x, law):
        cols = z[:, 0].astype(np.int64)
        return np.sqrt(self.dim / self.lam) * self.s0[:, cols].T

    def compensator(self, v, x, law):
        return self.lam * self.gamma * (v - x)

    def diffusion_cov(self, v, x, law):
        return np.broadcast_to(self._cov, (x.shape[0], self.dim, self.dim)).copy()

    def diffusion_cross(self, v1, x1, law1, v2, x2, law2):
        return np.broadcast_to(self._cov, (x1.shape[0], self.dim, self.dim)).copy()

    def compensator_mean(self, x, law, vlaw):
        return self.lam * self.gamma * (vlaw.mean - x)

    def diffusion_cov_mean(self, x, law, vlaw):
        return self.diffusion_cov(None, x, law)

    def diffusion_cross_mean(self, x1, law1, v1, x2, law2, v2):
        return self.diffusion_cross(None, x1, law1, None, x2, law2)

    def lipschitz(self):
        return {
            "C": float(max(np.linalg.norm(self.A, 2), np.linalg.norm(self.B, 2))),
            "Cz": abs(self.gamma),
            "Cbar": self.lam * self.gamma**2,
        }


BUILTINS = {"linear1d": Linear1D, "attract-d": AttractD}


def builtin_model(name: str, **params) -> Model:
    try:
        cls = BUILTINS[name]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; choose from {sorted(BUILTINS)}") from None
    return cls(**params)


def model_from_config(cfg: dict) -> Model:
    return builtin_model(cfg["model"], **cfg.get("params", {}))


# ---------------------------------------------------------------- self-check

def verify_model_consistency(model: Model, samples: int, rng: np.random.Generator, n_args: int = 8) -> dict:
    """Monte Carlo check that the declared nu-integrals match c and sigma.

    For ``n_args`` random argument sets, compares lam * mean over z of c,
    sigma sigma^T and sigma^1 sigma^2^T with the closed forms.  A component
    passes when its deviation is within 5 standard errors (plus 1e-12 of the
    value scale, which absorbs round-off for point-mass nu).
    """
    if samples < 1000:
        raise ModelError("need at least 1000 samples")
    d = model.dim
    worst = 0.0
    failures = []
    for _ in range(n_args):
        pts = rng.normal(size=(16, d))
        law1 = MeasureStats(pts)
        law2 = MeasureStats(pts + rng.normal(scale=0.5, size=(1, d)))
        v1, x1 = rng.normal(size=(1, d)), rng.normal(size=(1, d))
        v2, x2 = rng.normal(size=(1, d)), rng.normal(size=(1, d))
        z = np.asarray(model.sample_marks(rng, samples), dtype=np.float64).reshape(samples, model.mark_dim)
        V1, X1 = np.repeat(v1, samples, 0), np.repeat(x1, samples, 0)
        V2, X2 = np.repeat(v2, samples, 0), np.repeat(x2, samples, 0)
        c = model.lam * model.jump(V1, z, X1, law1)
        s1 = model.sigma(V1, z, X1, law1)
        s2 = model.sigma(V2, z, X2, law2)
        ss = model.lam * np.einsum("ki,kj->kij", s1, s1).reshape(samples, -1)
        sx = model.lam * np.einsum("ki,kj->kij", s1, s2).reshape(samples, -1)
        checks = {
            "compensator": (c, model.compensator(v1, x1, law1).reshape(-1)),
            "diffusion_cov": (ss, model.diffusion_cov(v1, x1, law1).reshape(-1)),
            "diffusion_cross": (sx, model.diffusion_cross(v1, x1, law1, v2, x2, law2).reshape(-1)),
        }
        for name, (draws, exact) in checks.items():
            # exactly rounded column sums, so constant columns give zero spread
            est = np.array([math.fsum(col) for col in draws.T]) / samples
            se = np.sqrt(np.array([math.fsum(col) for col in ((draws - est) ** 2).T]) / (samples - 1) / samples)
            dev = np.abs(est - exact)
            scale = np.maximum(np.abs(exact), 1e-300)
            worst = max(worst, float((dev / np.maximum(scale, 1e-12)).max()))
            if np.any(dev > 5 * se + 1e-12 * np.maximum(np.abs(exact), 1.0)):
                failures.append(name)
    return {"model": model.name, "max_rel_deviation": worst, "failures": sorted(set(failures)),
            "pass": not failures}
