"""Tangent-space principal components of covariance operators.

Each operator is lifted to the tangent space at a base point (normally
the Frechet mean) through its transport map; PCA of the lifted vectors
under the Hilbert-Schmidt inner product yields modes of second-order
variation, scores for plotting, and screeplot shares.  The eigenproblem
is solved on the K x K Gram matrix, never on the q^2 x q^2 operator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimMismatch, InvalidInput
from .otinference import frechet_mean
from .spd import SpdOperator, _invsqrt_from_eig, _sqrt_from_eig, _sym, transport_map


@dataclass(frozen=True)
class TangentVector:
    """Lift (t - I) base^{1/2} of one operator at a base point."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInput(f"tangent vector must be square, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise InvalidInput("tangent vector has non-finite entries")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class TangentPcaResult:
    """Eigenstructure of the empirical second-moment tangent operator.

    ``eigenvalues`` holds all K values (nonincreasing, clamped at 0);
    ``components`` and ``scores`` keep only the retained, normalizable
    leading modes.
    """

    base: SpdOperator
    eigenvalues: np.ndarray
    components: np.ndarray
    scores: np.ndarray


@dataclass(frozen=True)
class ScoresTable:
    """CSV-ready PCA output: labeled score rows and screeplot data."""

    header: tuple[str, ...]
    rows: list[tuple]
    screeplot: list[tuple[int, float, float]]


def log_map(base: SpdOperator, target: SpdOperator,
            floor: float | None = None) -> TangentVector:
    """Lift of ``target`` to the tangent space at ``base``.

    (transport_map(base, target) - I) base^{1/2}; its HS norm equals
    the Wasserstein distance from base to target when base is strictly
    positive definite.
    """
    t = transport_map(base, target, floor=floor)
    sq = _sqrt_from_eig(base.eigenvalues, base.eigenvectors)
    return TangentVector((t.entries - np.eye(base.dim)) @ sq)


def exp_map(base: SpdOperator, v: TangentVector) -> SpdOperator:
    """Retraction inverse to :func:`log_map` at the same base point.

    With A = sym(v base^{-1/2}), returns (I + A) base (I + A); the
    congruence keeps the result PSD up to roundoff, which the operator
    constructor clamps.
    """
    if v.dim != base.dim:
        raise DimMismatch(f"base is {base.dim}-dim, tangent vector is {v.dim}-dim")
    isr = _invsqrt_from_eig(base.eigenvalues, base.eigenvectors, base.eig_floor)
    a = _sym(v.entries @ isr)
    m = np.eye(base.dim) + a
    return SpdOperator(m @ base.entries @ m, eig_floor=base.eig_floor)


def tangent_pca(ops: Sequence[SpdOperator], base: SpdOperator | None = None,
                n_components: int | None = None,
                center: bool = False) -> TangentPcaResult:
    """PCA of operators lifted to the tangent space at ``base``.

    The spectral problem for the uncentered second-moment operator
    (1/K) sum_j V_j (x) V_j is solved through the K x K Gram matrix of
    the lifts.  ``center=True`` subtracts the mean lift first, for base
    points other than the Frechet mean (at the mean the lifts already
    average to roughly zero).  Retains at most ``n_components`` modes
    (default min(K, 10)); eigenvalues are reported for all K.
    """
    k = len(ops)
    if k < 2:
        raise InvalidInput("tangent PCA needs at least 2 operators")
    if base is None:
        base = frechet_mean(ops).mean
    lifts = np.stack([log_map(base, op).entries for op in ops])
    if center:
        lifts = lifts - lifts.mean(axis=0)
    flat = lifts.reshape(k, -1)
    gram = flat @ flat.T
    nu, u = np.linalg.eigh(gram)
    nu = np.clip(nu[::-1], 0.0, None)
    u = u[:, ::-1]
    eigenvalues = nu / k

    m_max = min(k, 10) if n_components is None else int(n_components)
    if m_max < 0:
        raise InvalidInput("n_components must be >= 0")
    nu_max = float(nu[0]) if k else 0.0
    usable = int(np.sum(nu > 1e-12 * nu_max)) if nu_max > 0.0 else 0
    m = min(m_max, usable)

    q = base.dim
    components = np.empty((m, q, q))
    scores = np.empty((k, m))
    for l in range(m):
        phi = (u[:, l] @ flat) / np.sqrt(nu[l])
        components[l] = phi.reshape(q, q)
        scores[:, l] = np.sqrt(nu[l]) * u[:, l]
    return TangentPcaResult(base, eigenvalues, components, scores)


def scores_table(res: TangentPcaResult, labels: Sequence[str]) -> ScoresTable:
    """Labeled score rows plus eigenvalue shares for a screeplot."""
    k, m = res.scores.shape
    if len(labels) != k:
        raise DimMismatch(f"{k} score rows but {len(labels)} labels")
    header = ("label",) + tuple(f"score_{l + 1}" for l in range(m))
    rows = [(str(labels[j]),) + tuple(float(x) for x in res.scores[j])
            for j in range(k)]
    total = float(res.eigenvalues.sum())
    scree = [
        (l + 1, float(val), float(val) / total if total > 0.0 else 0.0)
        for l, val in enumerate(res.eigenvalues)
    ]
    return ScoresTable(header, rows, scree)
