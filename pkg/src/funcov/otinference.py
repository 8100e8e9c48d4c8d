"""Second-order inference on covariance operators.

Frechet means in the Wasserstein geometry via the transport fixed-point
iteration, the transport-map dispersion statistic, and a label
permutation test comparing residual covariance operators across
groups of curves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curves import FunctionalSample
from .errors import DimMismatch, InvalidInput, TooFewCurves
from .spd import (
    SpdOperator,
    _clamp_psd,
    _invsqrt_from_eig,
    _sqrt_from_eig,
    _sym,
    _transport_arr,
)

STRATA = ("none", "speaker")


@dataclass(frozen=True)
class FrechetResult:
    """Outcome of the fixed-point iteration for a Frechet mean."""

    mean: SpdOperator
    iterations: int
    final_step_norm: float
    converged: bool


@dataclass(frozen=True)
class AnovaResult:
    """Observed statistic, permutation draws and add-one p-value."""

    statistic: float
    permutation_stats: np.ndarray
    p_value: float
    group_sizes: tuple[int, ...]
    seed: int


def _frechet_arr(mats: np.ndarray, weights: np.ndarray, tol: float,
                 max_iter: int) -> tuple[np.ndarray, int, float, bool]:
    """Fixed-point iteration on a (K, q, q) stack of PSD matrices.

    Returns (mean, iterations, final_step_norm, converged).  Transport
    maps use spectral pseudo-inversion, so rank-deficient inputs are
    legal; they may simply fail to converge.
    """
    k, q, _ = mats.shape
    eye = np.eye(q)
    s_cur = _sym(np.tensordot(weights, mats, axes=1))
    step = np.inf
    for it in range(1, max_iter + 1):
        lam, vec = np.linalg.eigh(s_cur)
        sq = _sqrt_from_eig(lam, vec)
        isr = _invsqrt_from_eig(lam, vec, 0.0)
        t_bar = np.zeros((q, q))
        for j in range(k):
            mid = _sym(sq @ mats[j] @ sq)
            mu, u = np.linalg.eigh(mid)
            msq = (u * np.sqrt(np.clip(mu, 0.0, None))) @ u.T
            t_bar += weights[j] * _sym(isr @ msq @ isr)
        step = float(np.sqrt(np.sum((t_bar - eye) ** 2)))
        if step <= tol:
            return _clamp_psd(s_cur), it, step, True
        s_cur = _sym(t_bar @ s_cur @ t_bar)
    return _clamp_psd(s_cur), max_iter, step, False


def _dispersion_arr(mats: np.ndarray, center: np.ndarray) -> float:
    """Sum over the stack of ||transport(center -> mat) - I||_HS^2."""
    q = center.shape[0]
    eye = np.eye(q)
    lam, vec = np.linalg.eigh(_sym(center))
    sq = _sqrt_from_eig(lam, vec)
    isr = _invsqrt_from_eig(lam, vec, 0.0)
    total = 0.0
    for j in range(mats.shape[0]):
        mid = _sym(sq @ mats[j] @ sq)
        mu, u = np.linalg.eigh(mid)
        msq = (u * np.sqrt(np.clip(mu, 0.0, None))) @ u.T
        t = _sym(isr @ msq @ isr)
        total += float(np.sum((t - eye) ** 2))
    return total


def _check_weights(weights, k: int) -> np.ndarray:
    if weights is None:
        return np.full(k, 1.0 / k)
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise InvalidInput(f"expected {k} weights, got shape {w.shape}")
    if not np.isfinite(w).all() or (w < 0.0).any():
        raise InvalidInput("weights must be finite and nonnegative")
    total = float(w.sum())
    if abs(total - 1.0) > 1e-8 or total <= 0.0:
        raise InvalidInput("weights must sum to 1")
    return w / total


def _stack_ops(ops: Sequence[SpdOperator]) -> np.ndarray:
    if len(ops) < 1:
        raise InvalidInput("need at least one operator")
    dim = ops[0].dim
    for op in ops:
        if op.dim != dim:
            raise DimMismatch(f"operators mix dims {dim} and {op.dim}")
    return np.stack([op.entries for op in ops])


def frechet_mean(ops: Sequence[SpdOperator], weights=None, tol: float = 1e-8,
                 max_iter: int = 200) -> FrechetResult:
    """Wasserstein Frechet mean by the transport fixed-point iteration.

    Starting from the Euclidean average, each step transports the
    iterate onto every input, averages the maps, and conjugates the
    iterate by the average; the iteration stops once the average map is
    within ``tol`` of the identity in Hilbert-Schmidt norm.  On
    non-convergence the last iterate is returned with
    ``converged=False`` rather than raising.
    """
    mats = _stack_ops(ops)
    w = _check_weights(weights, mats.shape[0])
    if tol <= 0.0 or max_iter < 1:
        raise InvalidInput("tol must be > 0 and max_iter >= 1")
    s_cur, it, step, ok = _frechet_arr(mats, w, tol, max_iter)
    return FrechetResult(SpdOperator(s_cur), it, step, ok)


def anova_statistic(ops: Sequence[SpdOperator], mean: SpdOperator) -> float:
    """Transport dispersion of a set of operators around a reference.

    T = sum_i ||t_i - I||_HS^2 with t_i the map pushing ``mean`` onto
    the i-th operator.  Zero exactly when every operator equals the
    reference.
    """
    mats = _stack_ops(ops)
    if mats.shape[1] != mean.dim:
        raise DimMismatch(f"operators are {mats.shape[1]}-dim, mean is {mean.dim}-dim")
    return _dispersion_arr(mats, mean.entries)


def _group_covs(pooled: np.ndarray, sizes: Sequence[int],
                order: np.ndarray) -> np.ndarray:
    """Per-group sample covariances for one assignment of rows to groups."""
    q = pooled.shape[1]
    mats = np.empty((len(sizes), q, q))
    start = 0
    for i, n_i in enumerate(sizes):
        rows = pooled[order[start:start + n_i]]
        centered = rows - rows.mean(axis=0)
        mats[i] = centered.T @ centered / (n_i - 1)
        start += n_i
    return mats


def _two_group_stat(mats: np.ndarray) -> float | None:
    """Exact dispersion for two equally weighted groups, no iteration.

    The Frechet mean of two operators is the geodesic midpoint
    (I + T)/2 . c0 . (I + T)/2 with T the transport c0 -> c1, and the
    two maps at the mean average to the identity, so the dispersion is
    2 ||t - I||^2 with a single transport.  Requires a numerically PD
    source; returns None to request the generic fallback otherwise.
    """
    c0, c1 = mats
    lam0, vec0 = np.linalg.eigh(c0)
    lam1, vec1 = np.linalg.eigh(c1)
    if lam0[-1] <= 0.0 or lam1[-1] <= 0.0:
        return None
    if lam1[0] / lam1[-1] > lam0[0] / lam0[-1]:
        c0, c1 = c1, c0
        lam0, vec0 = lam1, vec1
    if lam0[0] <= 1e-9 * lam0[-1]:
        return None
    q = c0.shape[0]
    eye = np.eye(q)
    t = _transport_arr(lam0, vec0, c1, 0.0)
    a = 0.5 * (eye + t)
    mid = _sym(a @ c0 @ a)
    lam_m, vec_m = np.linalg.eigh(mid)
    t_back = _transport_arr(lam_m, vec_m, c0, 0.0)
    return 2.0 * float(np.sum((t_back - eye) ** 2))


def _stat_for_order(pooled: np.ndarray, sizes: Sequence[int], order: np.ndarray,
                    weights: np.ndarray, tol: float, max_iter: int) -> float:
    mats = _group_covs(pooled, sizes, order)
    if len(sizes) == 2 and weights[0] == weights[1]:
        stat = _two_group_stat(mats)
        if stat is not None:
            return stat
    center, _, _, _ = _frechet_arr(mats, weights, tol, max_iter)
    return _dispersion_arr(mats, center)


def _strata_indices(groups: Sequence[FunctionalSample]) -> list[np.ndarray]:
    """Pooled row indices per speaker, in sorted speaker order."""
    speakers: list[str] = []
    for g in groups:
        speakers.extend(m.speaker for m in g.metas())
    speakers_arr = np.asarray(speakers)
    return [np.flatnonzero(speakers_arr == s) for s in sorted(set(speakers))]


def _permutation_for(b: int, seed: int, n_total: int,
                     strata_idx: list[np.ndarray] | None) -> np.ndarray:
    """Label permutation for draw b, derived from (seed, b) alone.

    Deriving each draw's stream independently keeps results identical
    no matter how the draws are chunked across workers.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))
    if strata_idx is None:
        return rng.permutation(n_total)
    order = np.arange(n_total)
    for idx in strata_idx:
        order[idx] = idx[rng.permutation(idx.size)]
    return order


def permutation_test(groups: Sequence[FunctionalSample], n_permutations: int = 500,
                     seed: int = 0, strata: str = "none", tol: float = 1e-8,
                     max_iter: int = 200, n_jobs: int = 1) -> AnovaResult:
    """Label permutation test for equal covariance operators across groups.

    The observed statistic is the transport dispersion of the group
    covariances around their Frechet mean.  Each of the B permutations
    reassigns pooled curves to groups (sizes preserved; optionally
    within speaker strata) and recomputes the statistic; the p-value is
    (1 + #{T_b >= T_obs}) / (1 + B).  Deterministic given ``seed``
    regardless of ``n_jobs``.
    """
    if len(groups) < 2:
        raise InvalidInput("need at least two groups to compare")
    if strata not in STRATA:
        raise InvalidInput(f"strata must be one of {STRATA}")
    if n_permutations < 1:
        raise InvalidInput("n_permutations must be >= 1")
    grid = groups[0].grid
    for g in groups[1:]:
        if g.grid.shape != grid.shape or not np.array_equal(g.grid, grid):
            raise DimMismatch("groups must share one grid")
    sizes = tuple(g.n for g in groups)
    for n_i in sizes:
        if n_i < 2:
            raise TooFewCurves("every group needs >= 2 curves")
    pooled = np.vstack([g.matrix() for g in groups])
    n_total = pooled.shape[0]
    weights = np.full(len(sizes), 1.0 / len(sizes))
    strata_idx = _strata_indices(groups) if strata == "speaker" else None

    t_obs = _stat_for_order(pooled, sizes, np.arange(n_total), weights, tol, max_iter)

    def one_draw(b: int) -> float:
        order = _permutation_for(b, seed, n_total, strata_idx)
        return _stat_for_order(pooled, sizes, order, weights, tol, max_iter)

    if n_jobs == 1:
        stats = np.array([one_draw(b) for b in range(1, n_permutations + 1)])
    else:
        from joblib import Parallel, delayed

        stats = np.array(
            Parallel(n_jobs=n_jobs)(
                delayed(one_draw)(b) for b in range(1, n_permutations + 1)
            )
        )
    p = (1.0 + float(np.sum(stats >= t_obs))) / (1.0 + n_permutations)
    return AnovaResult(t_obs, stats, p, sizes, seed)
