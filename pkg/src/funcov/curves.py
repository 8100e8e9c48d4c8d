"""Functional observations on a shared grid.

Curves are f0-style trajectories sampled at q normalized times in
[0, 1], tagged with design metadata (speaker, tone pair, repetition,
cognitive-load condition).  Raw irregular tokens are brought onto the
common grid by natural cubic-spline resampling; first and second
empirical moments live here too.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DimMismatch,
    EmptySample,
    InvalidInput,
    TooFewCurves,
    TooFewSamples,
)
from .spd import SpdOperator

TONES = ("T1", "T2", "T3", "T4")
LOADS = ("CL0", "CL6")


@dataclass(frozen=True)
class CurveMeta:
    """Design labels attached to one token."""

    speaker: str
    tone_first: str
    tone_second: str
    repetition: int
    cognitive_load: str

    def __post_init__(self):
        if not self.speaker:
            raise InvalidInput("speaker identifier must be nonempty")
        if self.tone_first not in TONES:
            raise InvalidInput(f"tone_first must be one of {TONES}")
        if self.tone_second not in TONES:
            raise InvalidInput(f"tone_second must be one of {TONES}")
        if self.cognitive_load not in LOADS:
            raise InvalidInput(f"cognitive_load must be one of {LOADS}")
        if not isinstance(self.repetition, (int, np.integer)) or not (
            1 <= self.repetition <= 4
        ):
            raise InvalidInput("repetition must be an integer in 1..4")

    @property
    def combo(self) -> str:
        """Tone pair label, e.g. 'T2T4'."""
        return self.tone_first + self.tone_second


@dataclass(frozen=True)
class Curve:
    """One trajectory on a normalized time grid."""

    grid: np.ndarray
    values: np.ndarray
    meta: CurveMeta

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or v.ndim != 1 or g.shape != v.shape:
            raise InvalidInput("grid and values must be 1-d of equal length")
        if g.size == 0:
            raise InvalidInput("curve must have at least one point")
        if not np.isfinite(g).all() or g[0] < 0.0 or g[-1] > 1.0:
            raise InvalidInput("grid must be finite normalized times in [0, 1]")
        if np.any(np.diff(g) <= 0.0):
            raise InvalidInput("grid must be strictly increasing")
        if not np.isfinite(v).all():
            raise InvalidInput("curve values must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class FunctionalSample:
    """Curves sharing one grid; the unit every estimator consumes."""

    grid: np.ndarray
    curves: tuple[Curve, ...]

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        curves = tuple(self.curves)
        if len(curves) == 0:
            raise EmptySample("a functional sample must contain curves")
        for c in curves:
            if c.grid.shape != g.shape or not np.array_equal(c.grid, g):
                raise DimMismatch("all curves must share the sample grid")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "curves", curves)

    @property
    def n(self) -> int:
        return len(self.curves)

    @property
    def q(self) -> int:
        return self.grid.size

    def matrix(self) -> np.ndarray:
        """Curve values stacked into an (n, q) array."""
        return np.stack([c.values for c in self.curves])

    def metas(self) -> list[CurveMeta]:
        return [c.meta for c in self.curves]

    def subset(self, keep: Callable[[CurveMeta], bool]) -> "FunctionalSample":
        """Curves whose metadata satisfies the predicate.

        Raises EmptySample when nothing matches.
        """
        kept = tuple(c for c in self.curves if keep(c.meta))
        if not kept:
            raise EmptySample("no curve matches the predicate")
        return FunctionalSample(self.grid, kept)

    def split(self, key: Callable[[CurveMeta], str]) -> dict[str, "FunctionalSample"]:
        """Partition the sample by a metadata key, preserving curve order."""
        buckets: dict[str, list[Curve]] = {}
        for c in self.curves:
            buckets.setdefault(key(c.meta), []).append(c)
        return {k: FunctionalSample(self.grid, tuple(v)) for k, v in buckets.items()}

    @classmethod
    def from_matrix(cls, grid, values, metas: Iterable[CurveMeta]) -> "FunctionalSample":
        g = np.asarray(grid, dtype=float)
        vals = np.asarray(values, dtype=float)
        metas = list(metas)
        if vals.ndim != 2 or vals.shape[0] != len(metas) or vals.shape[1] != g.size:
            raise DimMismatch("values must be (n_curves, grid length)")
        return cls(g, tuple(Curve(g, vals[i], metas[i]) for i in range(len(metas))))


def default_grid(q: int = 50) -> np.ndarray:
    """q equally spaced normalized times spanning [0, 1]."""
    if q < 2:
        raise InvalidInput("grid needs at least 2 points")
    return np.linspace(0.0, 1.0, q)


def resample_to_grid(raw_times, raw_values, target) -> np.ndarray:
    """Natural cubic-spline resampling of one raw token.

    Raw times are linearly rescaled to [0, 1] (token duration is
    normalized away); the spline interpolates the raw samples and is
    evaluated at the target grid.

    Raises TooFewSamples for fewer than 4 points and InvalidInput for
    non-monotone times or a target outside the normalized span.
    """
    t = np.asarray(raw_times, dtype=float)
    y = np.asarray(raw_values, dtype=float)
    g = np.asarray(target, dtype=float)
    if t.ndim != 1 or y.shape != t.shape:
        raise InvalidInput("raw_times and raw_values must be 1-d of equal length")
    if t.size < 4:
        raise TooFewSamples(f"need >= 4 raw points, got {t.size}")
    if not (np.isfinite(t).all() and np.isfinite(y).all() and np.isfinite(g).all()):
        raise InvalidInput("raw samples and target grid must be finite")
    if np.any(np.diff(t) <= 0.0):
        raise InvalidInput("raw times must be strictly increasing")
    tn = (t - t[0]) / (t[-1] - t[0])
    if g.size == 0 or g.min() < -1e-12 or g.max() > 1.0 + 1e-12:
        raise InvalidInput("target grid must lie within the normalized span [0, 1]")
    spline = CubicSpline(tn, y, bc_type="natural")
    return spline(np.clip(g, 0.0, 1.0))


def sample_mean(s: FunctionalSample) -> np.ndarray:
    """Pointwise arithmetic mean curve."""
    return s.matrix().mean(axis=0)


def sample_covariance(s: FunctionalSample) -> SpdOperator:
    """Empirical covariance operator with divisor n - 1."""
    if s.n < 2:
        raise TooFewCurves(f"covariance needs >= 2 curves, got {s.n}")
    x = s.matrix()
    xc = x - x.mean(axis=0)
    return SpdOperator(xc.T @ xc / (s.n - 1))
