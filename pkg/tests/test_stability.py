import numpy as np
import pytest

from sewflow import CanonicalNoise, LawFlow, Linear1D, compose_scheme, dyadic_partition
from sewflow.stability import (
    discretization_convergence,
    fit_gronwall_constant,
    gronwall_rhs,
    paired_law_input,
    stability_experiment,
)
from sewflow.stats import loglog_fit

DEMO = dict(b0=0.5, bx=-0.8, bm=0.4, cx=0.3, cv=0.4, cm=-0.2, s0=0.5, sx=0.4, sv=0.2, lam=2.0)


def base_flow(model, n=2000, level=7, seed=0):
    x0 = np.random.default_rng(seed).normal(0.2, 0.5, size=(n, 1))
    noise = CanonicalNoise.for_model(model, 99, n, level)
    flow = LawFlow.from_trajectory(compose_scheme(x0, dyadic_partition(0, 1, level), model, noise))
    return x0, flow


def test_identical_flows_zero():
    model = Linear1D(**DEMO)
    x0, flow = base_flow(model)
    noise = CanonicalNoise.for_model(model, 1, 2000, 7)
    rep = stability_experiment(model, x0, flow, flow, 16, noise, 0, 1)
    assert np.all(rep.lhs == 0.0) and rep.passed and rep.C_fitted == 0.0


def test_shift_mean_recursion():
    model = Linear1D(**DEMO)
    n_part, steps, delta = 20_000, 16, 0.3
    x0, flow = base_flow(model, n=n_part, level=6)
    noise = CanonicalNoise.for_model(model, 5, n_part, 6)
    grid, ta, tb = paired_law_input(x0, flow, flow.perturbed(shift=delta), steps, model, noise, 0, 1)
    diff = (ta - tb)[:, :, 0]
    h = 1.0 / steps
    expect = [0.0]
    for _ in range(steps):
        # E(Xa - Xb) follows the perturbed mean dynamics; the jump and Gaussian parts are centred
        expect.append(expect[-1] * (1 + DEMO["bx"] * h) - DEMO["bm"] * delta * h)
    se = diff.std(axis=1, ddof=1) / np.sqrt(n_part)
    assert np.all(np.abs(diff.mean(axis=1) - expect) <= 4 * se + 1e-15)
    lhs = np.mean(diff**2, axis=1)
    assert np.all(lhs >= np.array(expect) ** 2 * (1 - 1e-9))


def test_randomized_pairs_bounded():
    model = Linear1D(**DEMO)
    x0, flow = base_flow(model, n=1000)
    rng = np.random.default_rng(4)
    for k in range(5):
        other = flow.perturbed(shift=rng.uniform(-0.5, 0.5), scale=rng.uniform(0.7, 1.3), trend=rng.uniform(-0.5, 0.5))
        rep = stability_experiment(model, x0, flow, other, 16, CanonicalNoise.for_model(model, k, 1000, 7), 0, 1)
        assert rep.passed and np.isfinite(rep.C_fitted)
        assert np.all(rep.lhs >= 0) and np.all(rep.rhs >= 0)


def test_gronwall_fit_minimal_and_monotone():
    rng = np.random.default_rng(1)
    tau = np.linspace(0, 1, 17)
    integral = np.cumsum(rng.uniform(0.1, 1.0, 17)) * (tau > 0)
    lhs = rng.uniform(0, 1, 17) * integral
    c = fit_gronwall_constant(lhs, tau, integral)
    assert np.all(lhs <= gronwall_rhs(c, tau, integral))
    assert np.any(lhs > gronwall_rhs(c * (1 - 1e-5), tau, integral))
    vals = [gronwall_rhs(cc, tau, integral) for cc in (0.1, 0.5, 1.0, 3.0)]
    assert all(np.all(a <= b) for a, b in zip(vals, vals[1:]))
    assert fit_gronwall_constant(np.zeros(5), tau[:5], integral[:5]) == 0.0
    assert fit_gronwall_constant([0.0, 1.0], [0.0, 1.0], [0.0, 0.0]) == np.inf


def test_zero_model_convergence():
    model = Linear1D(lam=1.0)
    x0, flow = base_flow(Linear1D(**DEMO), n=500, level=8)
    res = discretization_convergence(model, x0, flow, [8, 16, 32], CanonicalNoise.for_model(model, 1, 500, 8), 0, 1)
    assert res["distance"] == [0.0, 0.0, 0.0] and res["fit"] is None


def test_pure_drift_first_order():
    model = Linear1D(b0=0.5, bx=-0.8, bm=0.9, lam=1.0)
    x0, flow = base_flow(Linear1D(**DEMO), n=500, level=8)
    # give the external law a clear time dependence
    flow = flow.perturbed(trend=2.0)
    res = discretization_convergence(model, x0, flow, [8, 16, 32, 64], CanonicalNoise.for_model(model, 1, 500, 8), 0, 1)
    assert res["ref_n"] == 256
    # the reference carries its own first-order error, so distances scale
    # like 1/n - 1/n_ref; the raw fit vs 1/n is biased upward by that term
    n = np.array(res["n"], dtype=float)
    fit = loglog_fit(1 / n - 1 / res["ref_n"], res["distance"])
    assert fit.slope == pytest.approx(1.0, abs=0.15)
    assert res["fit"]["slope"] >= 0.85


def test_full_model_converges():
    model = Linear1D(**DEMO)
    x0, flow = base_flow(model, n=2000, level=8)
    res = discretization_convergence(model, x0, flow, [4, 8, 16, 32], CanonicalNoise.for_model(model, 3, 2000, 8), 0, 1)
    d = res["distance"]
    assert all(b < a for a, b in zip(d, d[1:]))
    assert res["fit"]["slope"] >= 0.4


def test_flow_range_checked():
    model = Linear1D(**DEMO)
    x0, flow = base_flow(model, n=100, level=3)
    short = LawFlow(flow.times[:3], flow.points[:3])
    with pytest.raises(Exception, match="cover"):
        stability_experiment(model, x0, flow, short, 8, CanonicalNoise.for_model(model, 1, 100, 3), 0, 1)
