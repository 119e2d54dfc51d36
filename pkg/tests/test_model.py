import numpy as np
import pytest

from oracles import mean_closed_form
from sewflow import AttractD, Linear1D, builtin_model, gaussian_increment, poisson_step_noise, verify_model_consistency
from sewflow.measures import MeasureStats
from sewflow.model import ModelError, coupled_factors, model_from_config, psd_sqrt

DEMO = dict(b0=0.5, bx=-0.8, bm=0.4, cx=0.3, cv=0.4, cm=-0.2, s0=0.5, sx=0.4, sv=0.2)


def test_poisson_zero_intensity(rng):
    for _ in range(100):
        z, w = poisson_step_noise(rng, 0.0, 0.5)
        assert w.size == 0 and z.shape == (0, 1)


def test_poisson_mean_and_variance():
    g = np.random.default_rng(1)
    counts = np.array([poisson_step_noise(g, 2.0, 0.5)[1].size for _ in range(200_000)])
    n = counts.size
    mean, var = counts.mean(), counts.var(ddof=1)
    assert abs(mean - 1.0) <= 4 * np.sqrt(1.0 / n)
    # Var of the sample variance of Poisson(1) is (mu4 - sigma^4)/n = (1 + 3 - 1)/n
    assert abs(var - mean) <= 4 * np.sqrt(3.0 / n)


def test_poisson_uniforms_and_marks(rng):
    z, w = poisson_step_noise(rng, 50.0, 1.0, sample_marks=lambda g, k: g.normal(size=(k, 2)), mark_dim=2)
    assert z.shape == (w.size, 2) and np.all((w >= 0) & (w < 1))
    with pytest.raises(ModelError):
        poisson_step_noise(rng, 1.0, 0.0)


def test_gaussian_increment_zero_and_scaling():
    g = np.random.default_rng(2)
    assert np.array_equal(gaussian_increment(np.zeros((2, 2)), 1.0, g.normal(size=2)), np.zeros(2))
    draws = gaussian_increment(np.eye(1), 4.0, g.normal(size=(1_000_000, 1)))
    assert abs(draws.std() - 2.0) < 0.02


def test_gaussian_increment_covariance():
    g = np.random.default_rng(3)
    cov = np.array([[1.0, 0.3, 0.0], [0.3, 0.5, 0.1], [0.0, 0.1, 0.2]])
    dt, n = 0.3, 1_000_000
    x = gaussian_increment(cov, dt, g.normal(size=(n, 3)))
    emp = x.T @ x / n
    target = dt * cov
    # Var(x_i x_j) = t_ii t_jj + t_ij^2 for centered Gaussians
    se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target**2) / n)
    assert np.all(np.abs(emp - target) <= 5 * se)


def test_psd_sqrt_semidefinite_and_rejects():
    cov = np.array([[1.0, 1.0], [1.0, 1.0]])
    root = psd_sqrt(cov)
    assert np.allclose(root @ root.T, cov, atol=1e-12)
    with pytest.raises(ModelError):
        psd_sqrt(np.array([[1.0, 0.0], [0.0, -0.5]]))
    with pytest.raises(ModelError):
        psd_sqrt(np.array([[-1.0]]))


def test_coupled_factors_reproduce_block(rng):
    for d in (1, 3):
        a = rng.normal(size=(20, d, 4))
        b = rng.normal(size=(20, d, 4))
        s1 = a @ np.swapaxes(a, 1, 2)
        s2 = b @ np.swapaxes(b, 1, 2)
        sx = a @ np.swapaxes(b, 1, 2)
        l1, l21, l22 = coupled_factors(s1, sx, s2)
        assert np.allclose(l1 @ np.swapaxes(l1, 1, 2), s1, atol=1e-10)
        assert np.allclose(l1 @ np.swapaxes(l21, 1, 2), sx, atol=1e-10)
        assert np.allclose(l21 @ np.swapaxes(l21, 1, 2) + l22 @ np.swapaxes(l22, 1, 2), s2, atol=1e-10)


def test_coupled_factors_identical_arguments():
    s = np.array([[[0.7]]])
    _, l21, l22 = coupled_factors(s, s, s)
    assert l22[0, 0, 0] == 0.0 and l21[0, 0, 0] == pytest.approx(np.sqrt(0.7), rel=1e-15)


def test_builtin_lookup():
    assert isinstance(builtin_model("linear1d", **DEMO, **{"lambda": 2.0}), Linear1D)
    assert isinstance(builtin_model("attract-d", d=3), AttractD)
    assert model_from_config({"model": "linear1d", "params": {"lambda": 3}}).lam == 3
    with pytest.raises(ModelError):
        builtin_model("lorenz")
    with pytest.raises(ModelError):
        Linear1D(bogus=1.0)


def test_linear_coefficients(rng):
    m = Linear1D(**DEMO, lam=2.0)
    x, v = rng.normal(size=(5, 1)), rng.normal(size=(5, 1))
    law = MeasureStats(rng.normal(size=(50, 1)))
    mu = law.mean[0]
    assert np.allclose(m.drift(x, law), 0.5 - 0.8 * x + 0.4 * mu)
    assert np.allclose(m.jump(v, None, x, law), 0.3 * x + 0.4 * v - 0.2 * mu)
    assert np.allclose(m.compensator(v, x, law), 2.0 * (0.3 * x + 0.4 * v - 0.2 * mu))
    s = 0.5 + 0.4 * x + 0.2 * v
    assert np.allclose(m.diffusion_cov(v, x, law)[:, :, 0], 2.0 * s * s)


def test_closed_form_means_match_brute_force(rng):
    """The moment shortcuts of the built-in models against the base-class averages."""
    from sewflow.model import Model

    for model in (Linear1D(**DEMO, lam=1.7), AttractD(d=2, A=[[-0.5, 0.1], [0.0, -0.3]], gamma=0.7, s0=[[0.3, 0.1], [0.0, 0.2]])):
        d = model.dim
        x = rng.normal(size=(30, d))
        law = MeasureStats(rng.normal(size=(40, d)))
        vlaw = MeasureStats(rng.normal(size=(40, d)) + 0.5)
        v2 = rng.normal(size=(40, d))
        x2 = rng.normal(size=(30, d))
        law2 = MeasureStats(v2)
        assert np.allclose(model.compensator_mean(x, law, vlaw), Model.compensator_mean(model, x, law, vlaw))
        assert np.allclose(model.diffusion_cov_mean(x, law, vlaw), Model.diffusion_cov_mean(model, x, law, vlaw))
        assert np.allclose(model.diffusion_cross_mean(x, law, vlaw.points, x2, law2, v2),
                           Model.diffusion_cross_mean(model, x, law, vlaw.points, x2, law2, v2))


def test_attract_mean_symmetry(rng):
    m = AttractD(d=3, gamma=0.8)
    pts = rng.normal(size=(200, 3))
    law = MeasureStats(pts)
    # every ordered pair (v, x) from the cloud
    v = np.repeat(pts, 200, axis=0)
    x = np.tile(pts, (200, 1))
    assert np.allclose(m.jump(v, None, x, law).mean(axis=0), 0.0, atol=1e-13)


def test_consistency_linear_exact():
    rep = verify_model_consistency(Linear1D(**DEMO, lam=2.0), 1000, np.random.default_rng(0))
    assert rep["pass"] and rep["max_rel_deviation"] < 1e-12


def test_consistency_attract():
    rep = verify_model_consistency(AttractD(d=3, s0=[[0.3, 0.1, 0.0], [0.0, 0.2, 0.05], [0.1, 0.0, 0.4]]),
                                   20_000, np.random.default_rng(1))
    assert rep["pass"], rep


class _Corrupted(Linear1D):
    def compensator(self, v, x, law):
        return 1.1 * super().compensator(v, x, law)


class _CorruptedAttract(AttractD):
    def diffusion_cov(self, v, x, law):
        return 1.1 * super().diffusion_cov(v, x, law)


def test_consistency_detects_corruption():
    rep = verify_model_consistency(_Corrupted(**DEMO, lam=2.0), 1000, np.random.default_rng(0))
    assert not rep["pass"] and "compensator" in rep["failures"]
    rep = verify_model_consistency(_CorruptedAttract(d=2), 50_000, np.random.default_rng(0))
    assert not rep["pass"] and "diffusion_cov" in rep["failures"]


def test_consistency_needs_samples():
    with pytest.raises(ModelError):
        verify_model_consistency(Linear1D(), 10, np.random.default_rng(0))


def test_lipschitz_declared():
    lip = Linear1D(**DEMO, lam=2.0).lipschitz()
    assert lip["C"] == 0.8 and np.isfinite(lip["Cbar"])
    assert np.isfinite(AttractD(d=2).lipschitz()["Cbar"])


def test_mean_closed_form_oracle_sanity():
    # m' = b0 + a m with m(0)=m0, checked against a fine explicit Euler integration
    m, h = 0.2, 1e-5
    for _ in range(int(1 / h)):
        m += h * (0.5 - 0.4 * m)
    assert mean_closed_form(1.0, 0.2, 0.5, -0.4) == pytest.approx(m, abs=1e-5)
