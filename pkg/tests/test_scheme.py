import numpy as np
import pytest

from oracles import mean_closed_form
from sewflow import (
    CanonicalNoise,
    Ensemble,
    LawFlow,
    Linear1D,
    Partition,
    compose_scheme,
    dyadic_scheme,
    euler_step,
    law_input_sde,
    reference_flow,
    run_levels,
)
from sewflow.coupling import rms
from sewflow.model import AttractD
from sewflow.scheme import SchemeError, mark_index
from sewflow.stats import loglog_fit
from sewflow.wasserstein import coupled_distance

DEMO = dict(b0=0.5, bx=-0.8, bm=0.4, cx=0.3, cv=0.4, cm=-0.2, s0=0.5, sx=0.4, sv=0.2, lam=2.0)


def setup(model, n=2000, level=8, seed=1, d=1):
    noise = CanonicalNoise.for_model(model, seed, n, level)
    x0 = np.random.default_rng(seed).normal(0.2, 0.5, size=(n, d))
    return x0, noise


def test_zero_model_is_identity():
    model = Linear1D()
    x0, noise = setup(model)
    traj = compose_scheme(x0, Partition([0, 0.25, 0.375, 1]), model, noise)
    assert all(np.array_equal(e.state, x0) for e in traj)
    assert np.array_equal(reference_flow(x0, 0, 1, 8, model, noise).state, x0)


def test_constant_drift_shift():
    model = Linear1D(b0=1.0)
    x0, noise = setup(model)
    out = euler_step(Ensemble(x0, 0.0, 0, noise), 0.25, model)
    assert np.array_equal(out.state, x0 + 0.25)
    assert out.time == 0.25 and out.step_index == 1


def test_one_step_mean():
    model = Linear1D(**DEMO)
    x0, noise = setup(model, n=100_000, level=3)
    out = euler_step(Ensemble(x0, 0.0, 0, noise), 0.125, model).state[:, 0]
    m = x0.mean()
    expected = m + 0.125 * (0.5 + (-0.8 + 0.4) * m)
    inc = out - x0[:, 0] - 0.125 * (0.5 - 0.8 * x0[:, 0] + 0.4 * m)
    se = inc.std(ddof=1) / np.sqrt(inc.size)
    assert abs(out.mean() - expected) <= 4 * se


def test_trivial_partition_is_single_step():
    model = Linear1D(**DEMO)
    x0, noise = setup(model)
    a = compose_scheme(x0, Partition([0.5, 1.0]), model, noise)[-1].state
    b = euler_step(Ensemble(x0, 0.5, 0, noise), 0.5, model).state
    assert np.array_equal(a, b)


def test_compose_deterministic():
    model = Linear1D(**DEMO)
    x0, noise = setup(model)
    pi = Partition([0, 0.25, 0.5, 0.875, 1])
    a = compose_scheme(x0, pi, model, noise)
    b = compose_scheme(x0, Partition(list(pi)), model, CanonicalNoise.for_model(model, 1, 2000, 8))
    assert all(np.array_equal(u.state, v.state) for u, v in zip(a, b))
    assert [e.time for e in a] == list(pi)


def test_compose_outputs_subset():
    model = Linear1D(**DEMO)
    x0, noise = setup(model)
    pi = Partition([0, 0.25, 0.5, 1])
    full = compose_scheme(x0, pi, model, noise)
    some = compose_scheme(x0, pi, model, noise, outputs=[0.5, 1.0])
    assert [e.time for e in some] == [0.5, 1.0]
    assert np.array_equal(some[0].state, full[2].state)
    with pytest.raises(SchemeError):
        compose_scheme(x0, pi, model, noise, outputs=[0.3])


def test_run_levels_matches_dyadic_scheme():
    for model, d in ((Linear1D(**DEMO), 1), (AttractD(d=2, gamma=0.6), 2)):
        x0, noise = setup(model, n=300, level=7, d=d)
        res = run_levels(x0, 0.25, 1.0, [2, 4, 7], model, noise, outputs=[0.5])
        for n in (2, 4, 7):
            assert np.array_equal(res[n][-1].state, dyadic_scheme(x0, 0.25, 1.0, n, model, noise).state)
            mid = compose_scheme(x0, Partition(np.arange(2**n // 4, 2**n // 2 + 1) / 2**n), model, noise)[-1]
            assert np.array_equal(res[n][0].state, mid.state)


def test_flow_identity_bitwise():
    model = Linear1D(**DEMO)
    x0, noise = setup(model)
    direct = dyadic_scheme(x0, 0, 1, 6, model, noise).state
    half = dyadic_scheme(x0, 0, 0.375, 6, model, noise)
    assert np.array_equal(direct, dyadic_scheme(half.state, 0.375, 1, 6, model, noise).state)


def test_level_above_noise_rejected():
    model = Linear1D(**DEMO)
    x0, noise = setup(model, level=4)
    with pytest.raises(SchemeError):
        dyadic_scheme(x0, 0, 1, 5, model, noise)


def test_non_finite_reports_particle():
    model = Linear1D(bx=1e308)
    x0, noise = setup(model, n=10)
    x0[:] = 0.0
    x0[3] = 10.0
    with np.errstate(over="ignore"), pytest.raises(SchemeError, match="particle 3"):
        euler_step(Ensemble(x0, 0.0, 0, noise), 1.0, model)


def test_mark_index():
    assert mark_index(np.array([0.0, 0.24, 0.25, 0.999999]), 4).tolist() == [0, 0, 1, 3]


def test_moment_bound_independent_of_level():
    model = Linear1D(**DEMO)
    x0, noise = setup(model, n=2000, level=10)
    base = 1 + np.sqrt(np.mean(x0**2))
    ratios = []
    for n in range(2, 11):
        traj = compose_scheme(x0, Partition(np.arange(2**n + 1) / 2**n), model, noise)
        ratios.append(max(1 + np.sqrt(np.mean(e.state**2)) for e in traj) / base)
    ratios = np.array(ratios)
    assert np.all(np.isfinite(ratios)) and ratios.max() / ratios.min() < 1.2


def test_reference_levels_converge():
    model = Linear1D(**DEMO)
    x0, noise = setup(model, n=4000, level=11)
    levels = list(range(4, 12))
    res = run_levels(x0, 0, 1, levels, model, noise)
    gaps = [coupled_distance(res[n][-1].state, res[n + 1][-1].state) for n in levels[:-1]]
    fit = loglog_fit(2.0 ** -np.array(levels[:-1]), gaps)
    assert fit.slope >= 0.4
    # the implied constant C = gap / 2^{-n/2} stays bounded
    c = np.array(gaps) / 2.0 ** (-np.array(levels[:-1]) / 2)
    assert c.max() / c.min() < 3


def test_law_input_self_consistent():
    model = Linear1D(**DEMO)
    x0, noise = setup(model)
    own = law_input_sde(x0, None, 8, model, noise, 0, 1)
    ref = compose_scheme(x0, Partition(np.arange(9) / 8), model, noise)
    assert all(np.array_equal(a.state, b.state) for a, b in zip(own, ref))
    frozen = law_input_sde(x0, LawFlow.from_trajectory(ref), 8, model, noise, 0, 1)
    assert all(np.array_equal(a.state, b.state) for a, b in zip(frozen, ref))


def test_law_input_zero_coefficients():
    model = Linear1D(lam=3.0)
    x0, noise = setup(model)
    flow = LawFlow([0, 1], np.random.default_rng(0).normal(size=(2, 2000, 1)))
    assert np.array_equal(law_input_sde(x0, flow, 4, model, noise, 0, 1)[-1].state, x0)


def test_law_input_exact_mean_flow():
    model = Linear1D(**DEMO)
    n_part = 50_000
    x0, noise = setup(model, n=n_part, level=6)
    m0 = float(x0.mean())
    a = DEMO["bx"] + DEMO["bm"]
    errs = []
    for n in (4, 16, 64):
        grid = np.arange(n + 1) / n
        mt = np.array([mean_closed_form(t, m0, DEMO["b0"], a) for t in grid])
        flow = LawFlow(grid, np.repeat(mt[:, None, None], n_part, axis=1))
        out = law_input_sde(x0, flow, n, model, noise, 0, 1)[-1].state[:, 0]
        # explicit Euler for E X driven by the injected mean
        e = m0
        for k in range(n):
            e += (DEMO["b0"] + DEMO["bx"] * e + DEMO["bm"] * mt[k]) / n
        se = out.std(ddof=1) / np.sqrt(n_part)
        assert abs(out.mean() - e) <= 4 * se
        errs.append(abs(e - mt[-1]))
    # Euler bias is first order
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.15)


def test_law_flow_queries():
    pts = np.arange(6, dtype=float).reshape(3, 2, 1)
    flow = LawFlow([0.0, 0.5, 1.0], pts)
    assert np.array_equal(flow.at(0.5), pts[1])
    assert np.allclose(flow.at(0.75), 0.5 * (pts[1] + pts[2]))
    with pytest.raises(SchemeError):
        flow.at(1.5)
    with pytest.raises(SchemeError):
        LawFlow([0.0, 0.0], pts[:2])
    model = Linear1D(**DEMO)
    x0, noise = setup(model, n=2)
    with pytest.raises(SchemeError):
        law_input_sde(x0, LawFlow([0.0, 0.5], pts[:2]), 4, model, noise, 0, 1)
    shifted = flow.perturbed(shift=1.0)
    assert np.array_equal(shifted.points, pts + 1.0)


def test_ensemble_rejects_nan():
    with pytest.raises(SchemeError):
        Ensemble(np.array([1.0, np.nan]), 0.0)


def test_rms_helper():
    assert rms(np.array([[3.0, 4.0]])) == pytest.approx(5.0)
