import numpy as np
import pytest

from funcov import (
    CorpusSpec,
    CurveMeta,
    DimMismatch,
    GpSpec,
    InvalidInput,
    InvalidKernel,
    ScenarioConfig,
    SpdOperator,
    bw_distance_sq,
    default_grid,
    identity,
    kernel_matrix,
    replication_harness,
    sample_covariance,
    sample_gp,
    spiked_alternative,
    synthetic_corpus,
)


def test_gp_spec_validation():
    with pytest.raises(InvalidInput):
        GpSpec(kernel="PERIODIC")
    with pytest.raises(InvalidInput):
        GpSpec(length_scale=0.0)
    with pytest.raises(InvalidInput):
        GpSpec(variance=-1.0)
    with pytest.raises(InvalidInput):
        GpSpec(noise_sd=-0.1)
    with pytest.raises(InvalidInput):
        GpSpec(mean_fn="RAMP")
    with pytest.raises(InvalidInput):
        GpSpec(kernel="CUSTOM")  # needs an explicit matrix


def test_kernel_matrices():
    t = np.array([0.0, 0.5, 1.0])
    se = kernel_matrix(GpSpec(variance=2.0, length_scale=0.5), t)
    np.testing.assert_allclose(np.diag(se), 2.0)
    assert se[0, 1] == pytest.approx(2.0 * np.exp(-0.5))

    bm = kernel_matrix(GpSpec(kernel="BROWNIAN"), t)
    np.testing.assert_allclose(bm, [[0.0, 0.0, 0.0],
                                    [0.0, 0.5, 0.5],
                                    [0.0, 0.5, 1.0]])

    custom = np.eye(3)
    ck = kernel_matrix(GpSpec(kernel="CUSTOM", custom=custom), t)
    np.testing.assert_allclose(ck, custom)
    with pytest.raises(DimMismatch):
        kernel_matrix(GpSpec(kernel="CUSTOM", custom=np.eye(4)), t)


def test_sample_gp_zero_variance_gives_mean():
    grid = default_grid(10)
    s = sample_gp(GpSpec(variance=0.0), grid, 3, seed=0)
    np.testing.assert_allclose(s.matrix(), 0.0)

    s2 = sample_gp(GpSpec(variance=0.0, mean_fn="SINE"), grid, 2, seed=0)
    np.testing.assert_allclose(
        s2.matrix(), np.tile(np.sin(2 * np.pi * grid), (2, 1)), atol=1e-12)


def test_sample_gp_determinism():
    grid = default_grid(12)
    spec = GpSpec(noise_sd=0.1)
    a = sample_gp(spec, grid, 5, seed=42)
    b = sample_gp(spec, grid, 5, seed=42)
    np.testing.assert_array_equal(a.matrix(), b.matrix())
    c = sample_gp(spec, grid, 5, seed=43)
    assert not np.array_equal(a.matrix(), c.matrix())


def test_sample_gp_monte_carlo_covariance():
    grid = default_grid(10)
    spec = GpSpec(length_scale=0.3, variance=1.5)
    s = sample_gp(spec, grid, 5000, seed=7)
    want = kernel_matrix(spec, grid)
    got = sample_covariance(s).entries
    assert np.max(np.abs(got - want)) <= 0.05 * np.max(np.abs(want))


def test_sample_gp_non_psd_custom_kernel():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
    spec = GpSpec(kernel="CUSTOM", custom=bad)
    with pytest.raises(InvalidKernel):
        sample_gp(spec, np.array([0.0, 1.0]), 2, seed=0)


def test_sample_gp_metas():
    grid = default_grid(6)
    s = sample_gp(GpSpec(), grid, 4, seed=1)
    assert s.n == 4
    assert all(m.cognitive_load == "CL0" for m in s.metas())
    custom = [CurveMeta(speaker="S9", tone_first="T2", tone_second="T3",
                        repetition=1, cognitive_load="CL6")] * 2
    s2 = sample_gp(GpSpec(), grid, 2, seed=1, metas=custom)
    assert s2.metas()[0].speaker == "S9"


def test_spiked_alternative():
    base = identity(3)
    np.testing.assert_allclose(
        spiked_alternative(base, [1.0, 0.0, 0.0], 0.0).entries, np.eye(3))
    got = spiked_alternative(base, [1.0, 0.0, 0.0], 3.0)
    np.testing.assert_allclose(got.entries, np.diag([4.0, 1.0, 1.0]), atol=1e-12)

    with pytest.raises(InvalidInput):
        spiked_alternative(base, [1.0, 1.0, 0.0], 1.0)
    with pytest.raises(DimMismatch):
        spiked_alternative(base, [1.0, 0.0], 1.0)


def test_spiked_distance_monotone_in_magnitude():
    rng = np.random.default_rng(50)
    base = SpdOperator(np.diag(rng.uniform(0.5, 2.0, size=4)))
    d = rng.standard_normal(4)
    d = d / np.linalg.norm(d)
    dists = [bw_distance_sq(base, spiked_alternative(base, d, m))
             for m in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]]
    assert all(b > a for a, b in zip(dists, dists[1:]))


def test_scenario_validation():
    with pytest.raises(InvalidInput):
        ScenarioConfig(alternative="shift")
    with pytest.raises(InvalidInput):
        ScenarioConfig(n_per_group=1)
    with pytest.raises(InvalidInput):
        ScenarioConfig(alternative="scale", effect=-1.0)


def test_harness_single_rep():
    sc = ScenarioConfig(gp=GpSpec(noise_sd=0.2), q=8, n_per_group=6,
                        n_permutations=19, seed=4)
    res = replication_harness(sc, reps=1)
    assert res.p_values.shape == (1,)
    s = res.summary()
    p = float(res.p_values[0])
    for key in ("Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max."):
        assert s[key] == pytest.approx(p)


def test_harness_determinism():
    sc = ScenarioConfig(gp=GpSpec(noise_sd=0.2), q=8, n_per_group=8,
                        n_permutations=29, seed=9)
    a = replication_harness(sc, reps=4)
    b = replication_harness(sc, reps=4)
    np.testing.assert_array_equal(a.p_values, b.p_values)
    assert a.summary() == b.summary()


def test_harness_null_and_alternative():
    null = ScenarioConfig(gp=GpSpec(noise_sd=0.2), q=10, n_per_group=20,
                          n_permutations=99, seed=12)
    res = replication_harness(null, reps=30)
    assert 0.3 <= res.summary()["Mean"] <= 0.7

    alt = ScenarioConfig(gp=GpSpec(noise_sd=0.2), q=10, n_per_group=20,
                         alternative="scale", effect=4.0,
                         n_permutations=99, seed=12)
    res_alt = replication_harness(alt, reps=10)
    assert res_alt.summary()["Max."] <= 0.05
    assert res_alt.rejection_rate() == 1.0


def test_corpus_shape_and_determinism():
    spec = CorpusSpec(n_speakers=2, n_repetitions=2)
    tokens = synthetic_corpus(spec, seed=3)
    # 2 speakers x 16 combos x 2 reps x 2 loads
    assert len(tokens) == 2 * 16 * 2 * 2
    again = synthetic_corpus(spec, seed=3)
    for a, b in zip(tokens, again):
        assert a.meta == b.meta
        np.testing.assert_array_equal(a.f0, b.f0)
    for tok in tokens:
        assert tok.times[0] >= 0.0
        assert np.all(np.diff(tok.times) > 0)
        assert tok.f0.size == tok.times.size
        assert np.all(tok.f0 > 0)


def test_corpus_affected_scaling():
    # variance of CL6 residuals in affected combos scales by effect_scale
    spec = CorpusSpec(n_speakers=6, n_repetitions=4, speaker_sd=0.0,
                      affected_combos=("T1T1",), effect_scale=9.0)
    tokens = synthetic_corpus(spec, seed=5)

    def spread(combo, load):
        pool = [t for t in tokens
                if t.meta.combo == combo and t.meta.cognitive_load == load]
        resid = []
        for t in pool:
            resid.append(np.std(np.diff(t.f0)))
        return np.median(resid)

    ratio = spread("T1T1", "CL6") / spread("T1T1", "CL0")
    clean = spread("T2T2", "CL6") / spread("T2T2", "CL0")
    assert ratio > 2.0          # sqrt(9) = 3 up to sampling noise
    assert 0.6 < clean < 1.6


def test_corpus_validation():
    with pytest.raises(InvalidInput):
        CorpusSpec(n_speakers=0)
    with pytest.raises(InvalidInput):
        CorpusSpec(affected_combos=("T9T1",))
    with pytest.raises(InvalidInput):
        CorpusSpec(effect_scale=0.0)
