import numpy as np
import pytest

from sewflow import EmpiricalMeasure, InitialLawSpec, moment_norm, sample_initial
from sewflow.measures import MeasureError, MeasureStats


def test_moment_norm_examples():
    assert moment_norm(EmpiricalMeasure([[0.0, 0.0]])) == 0.0
    assert moment_norm(EmpiricalMeasure([[3.0, 4.0]])) == pytest.approx(5.0, rel=1e-15)
    assert moment_norm(EmpiricalMeasure([1.0, -1.0, 2.0])) == pytest.approx(np.sqrt(2.0), rel=1e-15)


def test_moment_norm_rejects_small_p():
    with pytest.raises(MeasureError):
        moment_norm(EmpiricalMeasure([1.0]), p=0.5)


def test_measure_validation():
    with pytest.raises(MeasureError):
        EmpiricalMeasure(np.empty((0, 2)))
    with pytest.raises(MeasureError):
        EmpiricalMeasure([1.0, np.nan])
    with pytest.raises(MeasureError):
        EmpiricalMeasure(np.zeros((2, 2, 2)))


def test_points_are_frozen():
    src = np.array([[1.0], [2.0]])
    mu = EmpiricalMeasure(src)
    src[0, 0] = 9.0
    assert mu.points[0, 0] == 1.0
    with pytest.raises(ValueError):
        mu.points[0, 0] = 5.0


def test_zero_norm_iff_all_zero(rng):
    pts = np.zeros((5, 3))
    assert moment_norm(EmpiricalMeasure(pts), 3.0) == 0.0
    pts[2, 1] = 1e-200
    assert moment_norm(EmpiricalMeasure(pts), 3.0) > 0.0


def test_power_mean_monotone(rng):
    for _ in range(50):
        mu = EmpiricalMeasure(rng.standard_cauchy((int(rng.integers(1, 30)), 2)))
        ps = [1.0, 1.5, 2.0, 3.0, 7.5, 40.0]
        norms = [moment_norm(mu, p) for p in ps]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_large_p_does_not_overflow():
    mu = EmpiricalMeasure([1e200, 2e200])
    assert np.isfinite(moment_norm(mu, 10.0))


def test_sample_initial_examples(rng):
    pm = sample_initial(InitialLawSpec("point-mass", dim=1, n=4, x0=[0.0]), rng)
    assert pm.points.tolist() == [[0.0]] * 4
    ex = sample_initial(InitialLawSpec("explicit-points", points=[1, 2, 3]), rng)
    assert ex.n == 3 and ex.points[:, 0].tolist() == [1.0, 2.0, 3.0]
    box = sample_initial(InitialLawSpec("uniform-box", dim=2, n=1000, lo=[-1, 2], hi=[0, 3]), rng)
    assert np.all(box.points >= [-1, 2]) and np.all(box.points <= [0, 3])


def test_gaussian_clt():
    n = 100_000
    mu = sample_initial(InitialLawSpec("gaussian", dim=3, n=n), np.random.default_rng(7))
    assert np.all(np.abs(mu.points.mean(axis=0)) < 4 / np.sqrt(n))


def test_gaussian_covariance_recovered():
    cov = [[1.0, 0.6], [0.6, 2.0]]
    mu = sample_initial(InitialLawSpec("gaussian", dim=2, n=200_000, mean=[1, -1], cov=cov), np.random.default_rng(3))
    assert np.allclose(np.cov(mu.points.T), cov, atol=0.03)


def test_sample_reproducible():
    spec = InitialLawSpec("gaussian", dim=2, n=50, cov=0.5)
    a = sample_initial(spec, np.random.default_rng(11))
    b = sample_initial(spec, np.random.default_rng(11))
    assert np.array_equal(a.points, b.points)


def test_invalid_specs():
    with pytest.raises(MeasureError):
        InitialLawSpec("gaussian", dim=2, n=3, cov=[[1, 0], [0, -1]])
    with pytest.raises(MeasureError):
        InitialLawSpec("gaussian", dim=2, n=3, cov=[[1, 0.5], [0, 1]])
    with pytest.raises(MeasureError):
        InitialLawSpec("uniform-box", dim=1, n=3, lo=[1], hi=[0])
    with pytest.raises(MeasureError):
        InitialLawSpec("lognormal", n=3)


def test_spec_roundtrip():
    spec = InitialLawSpec("gaussian", dim=2, n=7, mean=[1, 2], cov=[[1, 0], [0, 2]])
    assert InitialLawSpec.from_dict(spec.to_dict()) == InitialLawSpec.from_dict(spec.to_dict())
    assert InitialLawSpec.from_dict(spec.to_dict()).covariance().tolist() == [[1, 0], [0, 2]]


def test_measure_stats(rng):
    pts = rng.standard_normal((40, 2))
    st = MeasureStats.of(EmpiricalMeasure(pts))
    assert np.allclose(st.mean, pts.mean(axis=0))
    assert np.allclose(st.second_moment, pts.T @ pts / 40)
    assert st.norm2 == pytest.approx(moment_norm(EmpiricalMeasure(pts)), rel=1e-12)
