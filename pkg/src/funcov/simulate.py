"""Synthetic functional data for testing and power studies.

Gaussian-process curve sampling on a grid, scale and spiked covariance
alternatives, a replication harness that reruns the permutation test on
fresh draws and summarizes the p-values, and a raw-corpus generator
producing irregular disyllabic f0 tokens (speaker, tone pair,
repetition, cognitive load) for end-to-end pipeline runs.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import LOADS, TONES, CurveMeta, FunctionalSample
from .errors import DimMismatch, InvalidInput, InvalidKernel
from .meanmodel import bspline_basis
from .otinference import permutation_test
from .spd import SpdOperator, _sym

KERNELS = ("SQUARED_EXP", "MATERN_3_2", "BROWNIAN", "CUSTOM")
MEAN_FNS = ("ZERO", "SINE", "SPLINE_COEFFS")
ALTERNATIVES = ("none", "scale", "spike")


@dataclass(frozen=True)
class GpSpec:
    """Gaussian-process law: kernel, mean function, observation noise."""

    kernel: str = "SQUARED_EXP"
    length_scale: float = 0.25
    variance: float = 1.0
    mean_fn: str = "ZERO"
    spline_coeffs: tuple[float, ...] | None = None
    custom: np.ndarray | None = None
    noise_sd: float = 0.0

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise InvalidInput(f"kernel must be one of {KERNELS}")
        if self.mean_fn not in MEAN_FNS:
            raise InvalidInput(f"mean_fn must be one of {MEAN_FNS}")
        if not (self.length_scale > 0.0):
            raise InvalidInput("length_scale must be > 0")
        if self.variance < 0.0:
            raise InvalidInput("variance must be >= 0")
        if self.noise_sd < 0.0:
            raise InvalidInput("noise_sd must be >= 0")
        if self.kernel == "CUSTOM":
            if self.custom is None:
                raise InvalidInput("CUSTOM kernel requires a matrix")
            m = np.asarray(self.custom, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InvalidInput("custom kernel must be square")
            object.__setattr__(self, "custom", m)
        if self.mean_fn == "SPLINE_COEFFS":
            if self.spline_coeffs is None or len(self.spline_coeffs) < 4:
                raise InvalidInput("SPLINE_COEFFS needs >= 4 coefficients")
            object.__setattr__(self, "spline_coeffs", tuple(self.spline_coeffs))


def kernel_matrix(spec: GpSpec, grid) -> np.ndarray:
    """Covariance kernel evaluated on the grid (no jitter, no noise)."""
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or not np.isfinite(t).all():
        raise InvalidInput("grid must be a finite 1-d array")
    if spec.kernel == "CUSTOM":
        if spec.custom.shape[0] != t.size:
            raise DimMismatch(
                f"custom kernel is {spec.custom.shape[0]}-dim, grid has {t.size}")
        return spec.custom.copy()
    r = np.abs(t[:, None] - t[None, :])
    if spec.kernel == "SQUARED_EXP":
        return spec.variance * np.exp(-0.5 * (r / spec.length_scale) ** 2)
    if spec.kernel == "MATERN_3_2":
        z = np.sqrt(3.0) * r / spec.length_scale
        return spec.variance * (1.0 + z) * np.exp(-z)
    return spec.variance * np.minimum(t[:, None], t[None, :])


def mean_vector(spec: GpSpec, grid) -> np.ndarray:
    t = np.asarray(grid, dtype=float)
    if spec.mean_fn == "ZERO":
        return np.zeros(t.size)
    if spec.mean_fn == "SINE":
        return np.sin(2.0 * np.pi * t)
    coeffs = np.asarray(spec.spline_coeffs, dtype=float)
    return bspline_basis(t, coeffs.size) @ coeffs


def _default_metas(n: int, cognitive_load: str = "CL0") -> list[CurveMeta]:
    return [
        CurveMeta(
            speaker=f"S{(i // 4) % 12 + 1}",
            tone_first="T1",
            tone_second="T1",
            repetition=i % 4 + 1,
            cognitive_load=cognitive_load,
        )
        for i in range(n)
    ]


def _chol_psd(cov: np.ndarray, jitter: float) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise InvalidKernel("kernel matrix is not PSD after jitter") from exc


def sample_gp(spec: GpSpec, grid, n: int, seed: int,
              metas: Sequence[CurveMeta] | None = None) -> FunctionalSample:
    """n curves drawn from the GP law on the grid, deterministic per seed.

    Observation noise is iid on top of the process draw.  The kernel is
    factorized after adding 1e-10 * variance of diagonal jitter; a
    factorization failure raises InvalidKernel.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    t = np.asarray(grid, dtype=float)
    cov = kernel_matrix(spec, t)
    mu = mean_vector(spec, t)
    rng = np.random.default_rng(seed)
    if np.any(cov):
        chol = _chol_psd(cov, 1e-10 * spec.variance)
        draws = mu + rng.standard_normal((n, t.size)) @ chol.T
    else:
        # zero kernel: degenerate process, curves equal the mean function
        draws = np.tile(mu, (n, 1))
    if spec.noise_sd > 0.0:
        draws = draws + spec.noise_sd * rng.standard_normal((n, t.size))
    if metas is None:
        metas = _default_metas(n)
    return FunctionalSample.from_matrix(t, draws, metas)


def spiked_alternative(base: SpdOperator, direction, magnitude: float) -> SpdOperator:
    """base + magnitude * (direction x direction), clamped to PSD."""
    d = np.asarray(direction, dtype=float)
    if d.ndim != 1 or d.size != base.dim:
        raise DimMismatch(f"direction must have length {base.dim}")
    if abs(np.linalg.norm(d) - 1.0) > 1e-8:
        raise InvalidInput("direction must be a unit vector")
    m = _sym(base.entries + magnitude * np.outer(d, d))
    lam, vec = np.linalg.eigh(m)
    clamped = (vec * np.clip(lam, 0.0, None)) @ vec.T
    return SpdOperator(clamped, eig_floor=base.eig_floor)


@dataclass(frozen=True)
class ScenarioConfig:
    """One two-group (or k-group) testing scenario for the harness."""

    gp: GpSpec = field(default_factory=GpSpec)
    q: int = 20
    n_per_group: int = 30
    n_groups: int = 2
    alternative: str = "none"
    effect: float = 1.0
    n_permutations: int = 500
    seed: int = 0
    strata: str = "none"

    def __post_init__(self):
        if self.q < 2 or self.n_per_group < 2 or self.n_groups < 2:
            raise InvalidInput("need q >= 2, n_per_group >= 2, n_groups >= 2")
        if self.alternative not in ALTERNATIVES:
            raise InvalidInput(f"alternative must be one of {ALTERNATIVES}")
        if self.n_permutations < 1:
            raise InvalidInput("n_permutations must be >= 1")
        if self.alternative == "scale" and not (self.effect > 0.0):
            raise InvalidInput("scale effect must be > 0")


@dataclass(frozen=True)
class HarnessResult:
    """Replicated p-values plus the scenario that produced them."""

    p_values: np.ndarray
    scenario: ScenarioConfig

    def summary(self) -> dict[str, float]:
        """Six-number summary in R's summary() layout."""
        p = self.p_values
        qs = np.quantile(p, [0.0, 0.25, 0.5, 0.75, 1.0])
        return {
            "Min.": float(qs[0]),
            "1st Qu.": float(qs[1]),
            "Median": float(qs[2]),
            "Mean": float(p.mean()),
            "3rd Qu.": float(qs[3]),
            "Max.": float(qs[4]),
        }

    def rejection_rate(self, alpha: float = 0.05) -> float:
        return float(np.mean(self.p_values <= alpha))


def _scenario_groups(scenario: ScenarioConfig, rep: int) -> list[FunctionalSample]:
    """Fresh group draws for one replication, derived from (seed, rep)."""
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=scenario.seed, spawn_key=(rep, 0))
    )
    grid = np.linspace(0.0, 1.0, scenario.q)
    cov = kernel_matrix(scenario.gp, grid)
    if scenario.gp.noise_sd > 0.0:
        cov = cov + scenario.gp.noise_sd ** 2 * np.eye(scenario.q)
    mu = mean_vector(scenario.gp, grid)
    chol = _chol_psd(cov, 1e-10 * scenario.gp.variance)

    groups = []
    n = scenario.n_per_group
    for g in range(scenario.n_groups):
        draws = rng.standard_normal((n, scenario.q)) @ chol.T
        if g > 0 and scenario.alternative == "scale":
            draws = draws * np.sqrt(scenario.effect)
        elif g > 0 and scenario.alternative == "spike":
            d = rng.standard_normal(scenario.q)
            d /= np.linalg.norm(d)
            lam_max = float(np.linalg.eigvalsh(cov)[-1])
            spiked = spiked_alternative(SpdOperator(cov), d, scenario.effect * lam_max)
            chol_g = _chol_psd(spiked.entries, 1e-10 * scenario.gp.variance)
            draws = rng.standard_normal((n, scenario.q)) @ chol_g.T
        metas = _default_metas(n, LOADS[min(g, 1)])
        groups.append(FunctionalSample.from_matrix(grid, mu + draws, metas))
    return groups


def replication_harness(scenario: ScenarioConfig, reps: int,
                        n_jobs: int = 1) -> HarnessResult:
    """Rerun the permutation test on ``reps`` fresh datasets.

    Every replication derives its data stream and its test seed from
    (scenario.seed, rep) alone, so results do not depend on execution
    order or worker count.
    """
    if reps < 1:
        raise InvalidInput("reps must be >= 1")

    def one_rep(rep: int) -> float:
        groups = _scenario_groups(scenario, rep)
        test_seed = int(
            np.random.SeedSequence(
                entropy=scenario.seed, spawn_key=(rep, 1)
            ).generate_state(1)[0]
        )
        res = permutation_test(
            groups,
            n_permutations=scenario.n_permutations,
            seed=test_seed,
            strata=scenario.strata,
        )
        return res.p_value

    if n_jobs == 1:
        p_values = np.array([one_rep(r) for r in range(reps)])
    else:
        from joblib import Parallel, delayed

        p_values = np.array(
            Parallel(n_jobs=n_jobs)(delayed(one_rep)(r) for r in range(reps))
        )
    return HarnessResult(p_values, scenario)


# ---------------------------------------------------------------------------
# synthetic raw corpus

TONE_TARGETS = {
    "T1": (0.90, 1.00, 0.95),
    "T2": (-0.40, 0.00, 0.80),
    "T3": (-0.50, -0.90, -0.30),
    "T4": (0.80, 0.10, -0.70),
}
ANCHOR_TIMES = np.array([0.0, 0.22, 0.45, 0.55, 0.78, 1.0])


def tone_contour(tone_first: str, tone_second: str):
    """Smooth disyllabic pitch template on [0, 1], unit amplitude.

    The second syllable's onset is pulled toward the first syllable's
    offset, so templates genuinely differ across preceding tones.
    """
    a1 = TONE_TARGETS[tone_first]
    a2 = TONE_TARGETS[tone_second]
    onset2 = 0.65 * a2[0] + 0.35 * a1[2]
    anchors = np.array([a1[0], a1[1], a1[2], onset2, a2[1], a2[2]])
    return CubicSpline(ANCHOR_TIMES, anchors, bc_type="natural")


@dataclass(frozen=True)
class CorpusSpec:
    """Shape of a synthetic disyllabic f0 corpus.

    Each CL6 token of an affected tone combination has its residual
    process (including observation noise) scaled so that the residual
    covariance is multiplied by ``effect_scale``; everything else is
    identical in law across cognitive loads.
    """

    n_speakers: int = 12
    n_repetitions: int = 4
    raw_points: tuple[int, int] = (36, 60)
    duration_range: tuple[float, float] = (0.25, 0.45)
    base_f0: float = 220.0
    tone_scale: float = 30.0
    speaker_sd: float = 12.0
    load_shift: float = 6.0
    residual: GpSpec = field(
        default_factory=lambda: GpSpec(
            kernel="MATERN_3_2", length_scale=0.3, variance=16.0, noise_sd=0.5
        )
    )
    affected_combos: tuple[str, ...] = ()
    effect_scale: float = 4.0

    def __post_init__(self):
        if self.n_speakers < 1 or not (1 <= self.n_repetitions <= 4):
            raise InvalidInput("need n_speakers >= 1 and 1 <= n_repetitions <= 4")
        lo, hi = self.raw_points
        if lo < 4 or hi < lo:
            raise InvalidInput("raw_points range must satisfy 4 <= lo <= hi")
        dlo, dhi = self.duration_range
        if not (0.0 < dlo <= dhi):
            raise InvalidInput("duration range must be positive and ordered")
        combos = tuple(self.affected_combos)
        valid = {t1 + t2 for t1 in TONES for t2 in TONES}
        for c in combos:
            if c not in valid:
                raise InvalidInput(f"unknown tone combination {c!r}")
        object.__setattr__(self, "affected_combos", combos)
        if not (self.effect_scale > 0.0):
            raise InvalidInput("effect_scale must be > 0")


@dataclass(frozen=True)
class RawToken:
    """One irregularly sampled synthetic token."""

    meta: CurveMeta
    times: np.ndarray
    f0: np.ndarray


def synthetic_corpus(spec: CorpusSpec, seed: int) -> list[RawToken]:
    """Full factorial corpus: speakers x 16 combos x repetitions x loads.

    Tokens are irregular in time and length; f0 is the tone template
    plus speaker intercept, a load shift under CL6, and a Gaussian
    residual process with observation noise.  Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    speakers = [f"S{i + 1}" for i in range(spec.n_speakers)]
    shifts = {s: rng.normal(0.0, spec.speaker_sd) for s in speakers}
    contours = {
        (t1, t2): tone_contour(t1, t2) for t1 in TONES for t2 in TONES
    }
    tokens = []
    for speaker in speakers:
        for t1 in TONES:
            for t2 in TONES:
                for rep in range(1, spec.n_repetitions + 1):
                    for load in LOADS:
                        meta = CurveMeta(speaker, t1, t2, rep, load)
                        m = int(rng.integers(spec.raw_points[0],
                                             spec.raw_points[1] + 1))
                        duration = rng.uniform(*spec.duration_range)
                        pos = (np.arange(m) + rng.uniform(0.2, 0.8, m)) / m
                        pos = (pos - pos[0]) / (pos[-1] - pos[0])
                        times = pos * duration
                        mean = (
                            spec.base_f0
                            + shifts[speaker]
                            + spec.tone_scale * contours[(t1, t2)](pos)
                        )
                        if load == "CL6":
                            mean = mean + spec.load_shift * (0.4 + 0.6 * pos)
                        cov = kernel_matrix(spec.residual, pos)
                        chol = _chol_psd(cov, 1e-10 * spec.residual.variance)
                        resid = chol @ rng.standard_normal(m)
                        if spec.residual.noise_sd > 0.0:
                            resid = resid + spec.residual.noise_sd * rng.standard_normal(m)
                        if load == "CL6" and (t1 + t2) in spec.affected_combos:
                            resid = resid * np.sqrt(spec.effect_scale)
                        tokens.append(RawToken(meta, times, mean + resid))
    return tokens


def write_corpus_csv(tokens: Sequence[RawToken], path) -> None:
    """Long-format raw corpus CSV: one row per sample point."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["speaker", "tone1", "tone2", "repetition", "cognitive_load", "time", "f0"]
        )
        for tok in tokens:
            meta = tok.meta
            for t, v in zip(tok.times, tok.f0):
                writer.writerow(
                    [meta.speaker, meta.tone_first, meta.tone_second,
                     meta.repetition, meta.cognitive_load, repr(float(t)),
                     repr(float(v))]
                )
