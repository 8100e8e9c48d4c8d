"""Dense symmetric positive semi-definite operator algebra.

Matrix square roots, regularized inverse roots, the Wasserstein
(Bures) distance between centered Gaussian laws, and the optimal
transport maps that push one law onto another.  Everything works on
plain ndarrays internally; the dataclasses cache an eigendecomposition
so repeated root computations on the same operator are free.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, InvalidOperator, RankZeroOperator

# Eigenvalues below -NEG_EIG_BAND * lambda_max mean the input was not a
# covariance at all; anything inside the band is eigensolver roundoff.
NEG_EIG_BAND = 1e-10

# Relative threshold under which eigenvalues count as numerically zero
# when pseudo-inverting an operator with eig_floor == 0.
PINV_RTOL = 1e-12


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) * 0.5


def _clamp_psd(m: np.ndarray) -> np.ndarray:
    """Nearest-PSD projection for matrices PSD up to iteration roundoff."""
    lam, vec = np.linalg.eigh(_sym(m))
    return (vec * np.clip(lam, 0.0, None)) @ vec.T


def _validated_psd(entries) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Symmetrize, eigendecompose, clamp roundoff negatives.

    Returns ``(matrix, eigenvalues, eigenvectors)`` with eigenvalues
    ascending and nonnegative.  Raises InvalidOperator for non-square or
    non-finite input and for eigenvalues below the roundoff band.
    """
    m = np.asarray(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidOperator(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        raise InvalidOperator("operator must have positive dimension")
    if not np.isfinite(m).all():
        raise InvalidOperator("matrix has non-finite entries")
    m = _sym(m)
    lam, vec = np.linalg.eigh(m)
    lam_max = max(float(lam[-1]), 0.0)
    if lam[0] < -NEG_EIG_BAND * lam_max:
        raise InvalidOperator(
            f"eigenvalue {lam[0]:.6e} is below the roundoff band "
            f"-{NEG_EIG_BAND:g} * {lam_max:.6e}"
        )
    if lam[0] < 0.0:
        lam = np.clip(lam, 0.0, None)
        m = _sym((vec * lam) @ vec.T)
    return m, lam, vec


@dataclass(frozen=True)
class SpdOperator:
    """A symmetric PSD matrix with cached spectral decomposition.

    Parameters
    ----------
    entries : (q, q) array_like
        Symmetric matrix; eigenvalues inside the roundoff band are
        clamped to zero, anything more negative raises InvalidOperator.
    eig_floor : float, optional
        Default regularization used when this operator is inverted.
        Zero selects spectral pseudo-inversion.
    """

    entries: np.ndarray
    eig_floor: float = 0.0
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)
    eigenvectors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.eig_floor) or self.eig_floor < 0.0:
            raise InvalidOperator("eig_floor must be finite and >= 0")
        m, lam, vec = _validated_psd(self.entries)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vec)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    @property
    def rank(self) -> int:
        lam_max = float(self.eigenvalues[-1])
        if lam_max <= 0.0:
            return 0
        return int(np.sum(self.eigenvalues > PINV_RTOL * lam_max))


@dataclass(frozen=True)
class TransportMap:
    """Symmetric PSD matrix acting as an optimal transport map.

    The map sends a source covariance ``src`` to ``t @ src @ t``.
    """

    entries: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)
    eigenvectors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m, lam, vec = _validated_psd(self.entries)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vec)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def apply(self, op: SpdOperator) -> SpdOperator:
        """Pushforward: t @ op @ t as a new operator."""
        if op.dim != self.dim:
            raise DimMismatch(f"map is {self.dim}-dim, operator is {op.dim}-dim")
        return SpdOperator(self.entries @ op.entries @ self.entries,
                           eig_floor=op.eig_floor)


def identity(dim: int) -> SpdOperator:
    if dim < 1:
        raise InvalidOperator("dimension must be >= 1")
    return SpdOperator(np.eye(dim))


def _sqrt_from_eig(lam: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T


def _invsqrt_from_eig(lam: np.ndarray, vec: np.ndarray, floor: float) -> np.ndarray:
    """Inverse square root from a spectrum, pseudo-inverting when floor == 0.

    Raises RankZeroOperator when no eigenvalue is usable.
    """
    lam = np.clip(lam, 0.0, None)
    if floor > 0.0:
        lam_eff = np.maximum(lam, floor)
        return (vec / np.sqrt(lam_eff)) @ vec.T
    lam_max = float(lam[-1])
    keep = lam > PINV_RTOL * lam_max if lam_max > 0.0 else np.zeros(lam.shape, bool)
    if not keep.any():
        raise RankZeroOperator("no eigenvalue above the pseudo-inversion cutoff")
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / np.sqrt(lam[keep])
    return (vec * inv) @ vec.T


def sqrt_psd(a: SpdOperator) -> SpdOperator:
    """Principal matrix square root."""
    return SpdOperator(_sqrt_from_eig(a.eigenvalues, a.eigenvectors),
                       eig_floor=a.eig_floor)


def invsqrt_psd(a: SpdOperator, floor: float | None = None) -> SpdOperator:
    """Inverse square root, regularized by an eigenvalue floor.

    With ``floor > 0`` every eigenvalue is raised to at least the floor
    before inversion.  With ``floor == 0`` eigenvalues within a relative
    factor 1e-12 of the largest are dropped instead (pseudo-inversion);
    if nothing survives, RankZeroOperator is raised.  ``floor=None``
    takes the operator's own ``eig_floor``.
    """
    if floor is None:
        floor = a.eig_floor
    if not np.isfinite(floor) or floor < 0.0:
        raise InvalidOperator("floor must be finite and >= 0")
    return SpdOperator(_invsqrt_from_eig(a.eigenvalues, a.eigenvectors, floor),
                       eig_floor=a.eig_floor)


def _cross_sqrt_eigs(lam: np.ndarray, vec: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Eigenvalues of sqrt(A) B sqrt(A), clamped to be nonnegative."""
    s = _sqrt_from_eig(lam, vec)
    mid = _sym(s @ other @ s)
    mu = np.linalg.eigvalsh(mid)
    return np.clip(mu, 0.0, None)


def bw_distance_sq(a: SpdOperator, b: SpdOperator) -> float:
    """Squared Wasserstein distance between centered Gaussian laws.

    tr(a) + tr(b) - 2 tr( (a^{1/2} b a^{1/2})^{1/2} ), clamped at zero
    so roundoff never produces a negative squared distance.
    """
    if a.dim != b.dim:
        raise DimMismatch(f"operands are {a.dim}-dim and {b.dim}-dim")
    mu = _cross_sqrt_eigs(a.eigenvalues, a.eigenvectors, b.entries)
    val = a.trace + b.trace - 2.0 * float(np.sum(np.sqrt(mu)))
    return max(val, 0.0)


def bw_distance(a: SpdOperator, b: SpdOperator) -> float:
    return float(np.sqrt(bw_distance_sq(a, b)))


def _transport_arr(lam: np.ndarray, vec: np.ndarray, dst: np.ndarray,
                   floor: float) -> np.ndarray:
    """Transport map src -> dst from the source spectrum, as an ndarray."""
    s = _sqrt_from_eig(lam, vec)
    isr = _invsqrt_from_eig(lam, vec, floor)
    mid = _sym(s @ dst @ s)
    mu, u = np.linalg.eigh(mid)
    msq = (u * np.sqrt(np.clip(mu, 0.0, None))) @ u.T
    return _sym(isr @ msq @ isr)


def transport_map(src: SpdOperator, dst: SpdOperator,
                  floor: float | None = None) -> TransportMap:
    """Optimal transport map pushing ``src`` onto ``dst``.

    t = src^{-1/2} (src^{1/2} dst src^{1/2})^{1/2} src^{-1/2}, with the
    inverse root regularized exactly as in :func:`invsqrt_psd`.  On the
    range of a singular source the pushforward t src t still hits the
    part of ``dst`` the source can see; transport_map(a, a) is the
    identity on the range of ``a``.
    """
    if src.dim != dst.dim:
        raise DimMismatch(f"operands are {src.dim}-dim and {dst.dim}-dim")
    if floor is None:
        floor = src.eig_floor
    if not np.isfinite(floor) or floor < 0.0:
        raise InvalidOperator("floor must be finite and >= 0")
    t = _transport_arr(src.eigenvalues, src.eigenvectors, dst.entries, floor)
    # the congruence is PSD in exact arithmetic; clear iteration roundoff
    return TransportMap(_clamp_psd(t))


def hs_norm_sq(m) -> float:
    """Squared Hilbert-Schmidt (Frobenius) norm of a matrix."""
    m = np.asarray(m, dtype=float)
    return float(np.sum(m * m))
