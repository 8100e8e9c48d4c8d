import numpy as np
import pytest

from funcov import (
    Curve,
    CurveMeta,
    DimMismatch,
    EmptySample,
    FunctionalSample,
    InvalidInput,
    TooFewCurves,
    TooFewSamples,
    default_grid,
    resample_to_grid,
    sample_covariance,
    sample_mean,
)
from funcov.simulate import GpSpec, kernel_matrix, sample_gp


def meta(speaker="S1", t1="T1", t2="T2", rep=1, load="CL0"):
    return CurveMeta(speaker=speaker, tone_first=t1, tone_second=t2,
                     repetition=rep, cognitive_load=load)


def make_sample(grid, rows):
    curves = [Curve(grid, row, meta(rep=i % 4 + 1)) for i, row in enumerate(rows)]
    return FunctionalSample(grid, curves)


def test_meta_validation():
    m = meta()
    assert m.combo == "T1T2"
    with pytest.raises(InvalidInput):
        meta(speaker="")
    with pytest.raises(InvalidInput):
        meta(t1="T5")
    with pytest.raises(InvalidInput):
        meta(load="CL3")
    with pytest.raises(InvalidInput):
        meta(rep=0)


def test_curve_validation():
    g = default_grid(5)
    with pytest.raises(InvalidInput):
        Curve(g, np.zeros(4), meta())
    with pytest.raises(InvalidInput):
        Curve(g[::-1], np.zeros(5), meta())
    with pytest.raises(InvalidInput):
        Curve(g, np.full(5, np.inf), meta())


def test_sample_validation():
    g = default_grid(5)
    with pytest.raises(EmptySample):
        FunctionalSample(g, [])
    c1 = Curve(g, np.zeros(5), meta())
    c2 = Curve(default_grid(6), np.zeros(6), meta())
    with pytest.raises(DimMismatch):
        FunctionalSample(g, [c1, c2])


def test_default_grid():
    g = default_grid()
    assert g.size == 50
    assert g[0] == 0.0 and g[-1] == 1.0
    np.testing.assert_allclose(np.diff(g), 1.0 / 49.0)


def test_resample_reproduces_linear():
    t = np.linspace(0.0, 1.0, 10)
    target = default_grid(17)
    got = resample_to_grid(t, 2.0 * t, target)
    np.testing.assert_allclose(got, 2.0 * target, atol=1e-10)


def test_resample_constant():
    t = np.linspace(0.0, 1.0, 8)
    got = resample_to_grid(t, np.full(8, 5.0), default_grid(11))
    np.testing.assert_allclose(got, 5.0, atol=1e-12)


def test_resample_sine_accuracy():
    t = np.linspace(0.0, 1.0, 50)
    target = default_grid(25)
    got = resample_to_grid(t, np.sin(2 * np.pi * t), target)
    assert np.max(np.abs(got - np.sin(2 * np.pi * target))) <= 1e-4


def test_resample_normalizes_raw_times():
    # times in seconds: rescaled to [0,1] before interpolation
    t = np.linspace(0.1, 0.4, 12)
    x = (t - 0.1) / 0.3
    got = resample_to_grid(t, 3.0 * x, default_grid(9))
    np.testing.assert_allclose(got, 3.0 * default_grid(9), atol=1e-10)


def test_resample_errors():
    with pytest.raises(TooFewSamples):
        resample_to_grid([0.0, 0.5, 1.0], [1.0, 2.0, 3.0], default_grid(5))
    with pytest.raises(InvalidInput):
        resample_to_grid([0.0, 0.5, 0.5, 1.0], [1.0, 2.0, 3.0, 4.0], default_grid(5))


def test_sample_mean():
    g = default_grid(4)
    one = make_sample(g, [np.array([1.0, 2.0, 3.0, 4.0])])
    np.testing.assert_allclose(sample_mean(one), [1.0, 2.0, 3.0, 4.0])

    c = np.array([1.0, -2.0, 0.5, 3.0])
    sym = make_sample(g, [c, -c])
    np.testing.assert_allclose(sample_mean(sym), np.zeros(4), atol=1e-15)

    rows = [np.array([1.0, 2.0, 3.0, 4.0]),
            np.array([2.0, 4.0, 6.0, 8.0]),
            np.array([3.0, 0.0, 0.0, 0.0])]
    np.testing.assert_allclose(sample_mean(make_sample(g, rows)),
                               [2.0, 2.0, 3.0, 4.0])


def test_sample_covariance_examples():
    g = default_grid(2)
    same = make_sample(g, [np.array([1.0, 2.0])] * 3)
    np.testing.assert_allclose(sample_covariance(same).entries, np.zeros((2, 2)),
                               atol=1e-15)

    two = make_sample(g, [np.array([0.0, 0.0]), np.array([2.0, 2.0])])
    np.testing.assert_allclose(sample_covariance(two).entries,
                               [[2.0, 2.0], [2.0, 2.0]], atol=1e-12)

    with pytest.raises(TooFewCurves):
        sample_covariance(make_sample(g, [np.array([0.0, 1.0])]))


def test_sample_covariance_monte_carlo_consistency():
    grid = default_grid(20)
    spec = GpSpec(kernel="SQUARED_EXP", length_scale=0.25, variance=1.0)
    sample = sample_gp(spec, grid, 2000, seed=11)
    want = kernel_matrix(spec, grid)
    got = sample_covariance(sample).entries
    assert np.max(np.abs(got - want)) <= 0.1 * np.max(np.abs(want))


def test_sample_covariance_offset_invariance():
    rng = np.random.default_rng(8)
    g = default_grid(6)
    rows = rng.standard_normal((12, 6))
    base = sample_covariance(make_sample(g, list(rows))).entries
    shifted = sample_covariance(make_sample(g, list(rows + np.linspace(1, 2, 6)))).entries
    assert np.max(np.abs(base - shifted)) <= 1e-12


def test_sample_covariance_scaling():
    rng = np.random.default_rng(9)
    g = default_grid(5)
    rows = rng.standard_normal((9, 5))
    base = sample_covariance(make_sample(g, list(rows))).entries
    scaled = sample_covariance(make_sample(g, list(3.0 * rows))).entries
    np.testing.assert_allclose(scaled, 9.0 * base, rtol=1e-12)


def test_sample_subset_and_split():
    g = default_grid(4)
    curves = [Curve(g, np.full(4, float(i)), meta(load="CL0" if i % 2 else "CL6"))
              for i in range(6)]
    s = FunctionalSample(g, curves)
    assert s.n == 6 and s.q == 4
    odd = s.subset(lambda m: m.cognitive_load == "CL0")
    assert odd.n == 3
    with pytest.raises(EmptySample):
        s.subset(lambda m: m.speaker == "S99")
    parts = s.split(lambda m: m.cognitive_load)
    assert sorted(parts) == ["CL0", "CL6"]
    assert parts["CL0"].n == 3
    np.testing.assert_allclose(s.matrix()[2], np.full(4, 2.0))
