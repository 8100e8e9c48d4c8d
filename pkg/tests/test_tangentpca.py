import numpy as np
import pytest

from funcov import (
    DimMismatch,
    InvalidInput,
    SpdOperator,
    TangentVector,
    bw_distance_sq,
    exp_map,
    frechet_mean,
    identity,
    log_map,
    scores_table,
    tangent_pca,
)
from funcov.spd import hs_norm_sq

from test_spd import random_spd


def diag_op(*vals):
    return SpdOperator(np.diag(np.asarray(vals, dtype=float)))


def test_log_map_at_base_is_zero():
    rng = np.random.default_rng(30)
    op = random_spd(rng, 5)
    v = log_map(op, op)
    assert np.max(np.abs(v.entries)) <= 1e-9


def test_log_map_scalar_oracle():
    # (3/2 - 1) * 2 = 1
    v = log_map(diag_op(4.0), diag_op(9.0))
    np.testing.assert_allclose(v.entries, [[1.0]], atol=1e-12)


def test_log_map_isometry():
    # squared HS norm of the lift equals the squared distance
    rng = np.random.default_rng(31)
    for _ in range(100):
        q = rng.integers(2, 8)
        base = random_spd(rng, q)
        target = random_spd(rng, q)
        v = log_map(base, target)
        assert hs_norm_sq(v.entries) == pytest.approx(
            bw_distance_sq(base, target), abs=1e-8)


def test_exp_map_of_zero_is_base():
    rng = np.random.default_rng(32)
    base = random_spd(rng, 4)
    got = exp_map(base, TangentVector(np.zeros((4, 4))))
    np.testing.assert_allclose(got.entries, base.entries, atol=1e-12)


def test_exp_map_scalar():
    # A = 1 * 4^{-1/2} = 0.5, so (1 + 0.5) * 4 * (1 + 0.5) = 9;
    # inverts the scalar log map
    got = exp_map(diag_op(4.0), TangentVector([[1.0]]))
    np.testing.assert_allclose(got.entries, [[9.0]], atol=1e-12)


def test_round_trip():
    rng = np.random.default_rng(33)
    for _ in range(100):
        q = rng.integers(2, 8)
        base = random_spd(rng, q)
        target = random_spd(rng, q)
        back = exp_map(base, log_map(base, target))
        err = np.linalg.norm(back.entries - target.entries)
        assert err <= 1e-8 * np.linalg.norm(target.entries)


def test_exp_map_dim_mismatch():
    with pytest.raises(DimMismatch):
        exp_map(identity(3), TangentVector(np.zeros((2, 2))))


def test_pca_of_identical_operators():
    op = diag_op(2.0, 1.0)
    res = tangent_pca([op, op, op], base=op)
    assert res.eigenvalues.shape == (3,)
    assert np.max(res.eigenvalues) <= 1e-12


def test_pca_two_operator_geometry():
    # two points: antipodal lifts at the mean, a single mode, mirrored scores
    rng = np.random.default_rng(34)
    a = random_spd(rng, 4)
    b = random_spd(rng, 4)
    mean = frechet_mean([a, b]).mean
    lifts = log_map(mean, a).entries + log_map(mean, b).entries
    assert np.max(np.abs(lifts)) <= 1e-6

    res = tangent_pca([a, b])
    assert res.eigenvalues[0] > 0.0
    assert res.eigenvalues[1] <= 1e-10 * res.eigenvalues[0]
    s = res.scores[:, 0]
    assert s[0] == pytest.approx(-s[1], rel=1e-6)


def test_pca_eigenvalue_sum_identity():
    rng = np.random.default_rng(35)
    ops = [random_spd(rng, 5) for _ in range(6)]
    res = tangent_pca(ops)
    want = np.mean([bw_distance_sq(res.base, op) for op in ops])
    assert res.eigenvalues.sum() == pytest.approx(want, abs=1e-8)


def test_pca_component_orthonormality_and_rank():
    rng = np.random.default_rng(36)
    ops = [random_spd(rng, 6) for _ in range(5)]
    res = tangent_pca(ops)
    m = res.components.shape[0]
    assert m <= 5
    flat = res.components.reshape(m, -1)
    np.testing.assert_allclose(flat @ flat.T, np.eye(m), atol=1e-8)
    # eigenvalues sorted nonincreasing, clamped at zero
    assert np.all(np.diff(res.eigenvalues) <= 1e-15)
    assert np.all(res.eigenvalues >= 0.0)
    nu_max = res.eigenvalues[0]
    assert np.sum(res.eigenvalues > 1e-10 * nu_max) <= len(ops)


def test_pca_score_reconstruction():
    # with every component retained, row norms of scores match the lifts
    rng = np.random.default_rng(37)
    ops = [random_spd(rng, 4) for _ in range(5)]
    res = tangent_pca(ops, n_components=5)
    for j, op in enumerate(ops):
        want = hs_norm_sq(log_map(res.base, op).entries)
        assert np.sum(res.scores[j] ** 2) == pytest.approx(want, abs=1e-8)


def test_pca_scores_are_hs_projections():
    rng = np.random.default_rng(38)
    ops = [random_spd(rng, 4) for _ in range(6)]
    res = tangent_pca(ops)
    for j, op in enumerate(ops):
        v = log_map(res.base, op).entries
        for l in range(res.components.shape[0]):
            want = float(np.sum(v * res.components[l]))
            assert res.scores[j, l] == pytest.approx(want, abs=1e-8)


def test_pca_default_component_cap():
    rng = np.random.default_rng(39)
    ops = [random_spd(rng, 6) for _ in range(12)]
    res = tangent_pca(ops)
    assert res.scores.shape == (12, 10)
    assert res.eigenvalues.shape == (12,)


def test_pca_centering_flag():
    # away from the Frechet mean the lifts have a common offset; centering
    # removes it and can only shrink the leading eigenvalue
    rng = np.random.default_rng(40)
    ops = [random_spd(rng, 4) for _ in range(5)]
    base = SpdOperator(4.0 * np.eye(4))
    raw = tangent_pca(ops, base=base)
    cen = tangent_pca(ops, base=base, center=True)
    assert cen.eigenvalues[0] <= raw.eigenvalues[0] + 1e-12
    assert cen.eigenvalues.sum() <= raw.eigenvalues.sum() + 1e-12


def test_pca_needs_two_operators():
    with pytest.raises(InvalidInput):
        tangent_pca([identity(3)])


def test_scores_table_contract():
    rng = np.random.default_rng(41)
    ops = [random_spd(rng, 4) for _ in range(4)]
    mean = frechet_mean(ops).mean
    res = tangent_pca([mean] + ops[1:], base=mean)
    labels = ["BASE", "B", "C", "D"]
    table = scores_table(res, labels)

    assert table.header[0] == "label"
    assert list(table.header[1:]) == [f"score_{l + 1}"
                                      for l in range(res.scores.shape[1])]
    assert [r[0] for r in table.rows] == labels
    # the base point itself scores ~0 on every component
    np.testing.assert_allclose(table.rows[0][1:], 0.0, atol=1e-8)

    shares = [s for _, _, s in table.screeplot]
    assert sum(shares) == pytest.approx(1.0, abs=1e-12)
    assert [i for i, _, _ in table.screeplot] == list(range(1, 5))

    with pytest.raises(DimMismatch):
        scores_table(res, labels[:-1])
