"""Additive penalized-spline mean model for grouped curves.

The first-order stage of the pipeline: per-group cubic B-spline smooths
of normalized time (difference-penalized), parametric group intercepts,
ridge-penalized speaker random intercepts, and an optional AR(1)
whitening of within-curve errors.  Smoothing parameters are selected by
GCV.  The fit exists mostly to hand well-centered residual curves to
the covariance stage, but it also reports Wald tables for the
parametric and smooth terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import cho_factor, cho_solve, null_space, solve
from scipy.stats import chi2, norm

from .curves import CurveMeta, FunctionalSample
from .errors import IllConditioned, InvalidInput, UnknownLevel

LAMBDA_GRID = np.logspace(-4.0, 6.0, 30)
MAX_CONDITION = 1e14
SELECTORS = ("GCV", "FIXED")


def level_of(meta: CurveMeta) -> str:
    """Group level key of a curve: cognitive load crossed with tone pair."""
    return f"{meta.cognitive_load}.{meta.tone_first}{meta.tone_second}"


@dataclass(frozen=True)
class MeanModelSpec:
    """Configuration of the additive mean model."""

    groups: tuple[str, ...]
    basis_size: int = 10
    penalty_order: int = 2
    lambda_select: str = "GCV"
    lambda_fixed: float | None = None
    ar1_rho: float | str | None = "AUTO"
    speaker_ridge: float = 1.0

    def __post_init__(self):
        groups = tuple(self.groups)
        if len(groups) < 1 or len(set(groups)) != len(groups):
            raise InvalidInput("groups must be a nonempty list of distinct levels")
        object.__setattr__(self, "groups", groups)
        if self.basis_size < 4:
            raise InvalidInput("basis_size must be >= 4")
        if self.penalty_order not in (1, 2):
            raise InvalidInput("penalty_order must be 1 or 2")
        if self.lambda_select not in SELECTORS:
            raise InvalidInput(f"lambda_select must be one of {SELECTORS}")
        if self.lambda_select == "FIXED":
            if self.lambda_fixed is None or not (self.lambda_fixed > 0.0):
                raise InvalidInput("FIXED selection requires lambda_fixed > 0")
        if isinstance(self.ar1_rho, str):
            if self.ar1_rho != "AUTO":
                raise InvalidInput("ar1_rho must be a real in (-1,1), 'AUTO' or None")
        elif self.ar1_rho is not None:
            if not (-1.0 < float(self.ar1_rho) < 1.0):
                raise InvalidInput("ar1_rho must lie in (-1, 1)")
        if not (self.speaker_ridge > 0.0):
            raise InvalidInput("speaker_ridge must be > 0")


@dataclass
class DesignMatrices:
    """Column blocks and penalties of the additive model."""

    x_param: np.ndarray
    z_speaker: np.ndarray
    smooth_blocks: list[np.ndarray]
    penalties: list[np.ndarray]
    param_names: list[str]
    speaker_names: list[str]
    smooth_names: list[str]
    basis: np.ndarray


def bspline_basis(grid, k: int) -> np.ndarray:
    """Cubic B-spline basis of dimension k on [0, 1], dense (len(grid), k).

    Equally spaced knots extended past both ends (no boundary
    clamping), so the basis sums to one on [0, 1] and coefficient
    vectors in the null space of the order-2 difference penalty map to
    exactly linear functions.
    """
    if k < 4:
        raise InvalidInput("basis dimension must be >= 4")
    x = np.asarray(grid, dtype=float)
    h = 1.0 / (k - 3)
    knots = (np.arange(k + 4) - 3.0) * h
    dm = BSpline.design_matrix(np.clip(x, 0.0, 1.0), knots, 3)
    return np.asarray(dm.todense())


def difference_penalty(k: int, order: int) -> np.ndarray:
    """k x k penalty D'D built from order-th differences of coefficients."""
    if order not in (1, 2):
        raise InvalidInput("penalty order must be 1 or 2")
    d = np.diff(np.eye(k), n=order, axis=0)
    return d.T @ d


def build_design(sample: FunctionalSample, spec: MeanModelSpec) -> DesignMatrices:
    """Assemble (parametric | speaker | smooth blocks) and their penalties.

    Rows are curve-major: all q grid points of curve 0, then curve 1,
    and so on.  Each group's smooth block holds the basis values on its
    own rows and zeros elsewhere; the first group's intercept column is
    absorbed into the global intercept.
    """
    metas = sample.metas()
    levels = [level_of(m) for m in metas]
    index = {g: i for i, g in enumerate(spec.groups)}
    for lvl in levels:
        if lvl not in index:
            raise UnknownLevel(f"curve level {lvl!r} not among model groups")
    n, q = sample.n, sample.q
    n_rows = n * q
    g_count = len(spec.groups)
    speakers = sorted({m.speaker for m in metas})
    spk_index = {s: i for i, s in enumerate(speakers)}

    basis = bspline_basis(sample.grid, spec.basis_size)
    x_param = np.zeros((n_rows, g_count))
    x_param[:, 0] = 1.0
    z_speaker = np.zeros((n_rows, len(speakers)))
    blocks = [np.zeros((n_rows, spec.basis_size)) for _ in range(g_count)]
    for i, meta in enumerate(metas):
        rows = slice(i * q, (i + 1) * q)
        gi = index[levels[i]]
        if gi > 0:
            x_param[rows, gi] = 1.0
        z_speaker[rows, spk_index[meta.speaker]] = 1.0
        blocks[gi][rows] = basis

    penalty = difference_penalty(spec.basis_size, spec.penalty_order)
    return DesignMatrices(
        x_param=x_param,
        z_speaker=z_speaker,
        smooth_blocks=blocks,
        penalties=[penalty.copy() for _ in range(g_count)],
        param_names=["(Intercept)"] + [f"group[{g}]" for g in spec.groups[1:]],
        speaker_names=[f"speaker[{s}]" for s in speakers],
        smooth_names=[f"s(time):{g}" for g in spec.groups],
        basis=basis,
    )


@dataclass
class MeanModelFit:
    """Fitted additive model.

    ``coefficients`` stacks parametric, speaker, and per-smooth spline
    blocks (each expanded back to the full basis dimension).  ``fitted``
    and ``residuals`` are per-curve matrices on the raw (unwhitened)
    scale; ``edf`` and ``lambdas`` are keyed by smooth name, ``pvalues``
    by parametric term.  Wald quantities use the penalized covariance
    sigma2 * (W' Omega W + sum lambda_s P_s)^{-1} and are approximate.
    """

    coefficients: np.ndarray
    lambdas: dict[str, float]
    rho: float
    fitted: np.ndarray
    residuals: np.ndarray
    edf: dict[str, float]
    pvalues: dict[str, float]
    groups: tuple[str, ...]
    grid: np.ndarray
    basis: np.ndarray
    param_names: list[str] = field(repr=False, default_factory=list)
    speaker_names: list[str] = field(repr=False, default_factory=list)
    smooth_names: list[str] = field(repr=False, default_factory=list)
    param_estimates: np.ndarray = field(repr=False, default=None)
    param_se: np.ndarray = field(repr=False, default=None)
    smooth_coefs: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    smooth_cov: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    sigma2: float = field(repr=False, default=0.0)
    gcv: float = field(repr=False, default=float("nan"))


def _whiten(arr: np.ndarray, rho: float) -> np.ndarray:
    """AR(1) whitening along axis 1 of an (n_curves, q, ...) array.

    Never mixes rows of different curves; rho = 0 is the identity.
    """
    out = arr.copy()
    out[:, 1:] -= rho * arr[:, :-1]
    out[:, 0] *= np.sqrt(1.0 - rho * rho)
    return out


class _PenalizedSystem:
    """Normal equations of the whitened penalized LS problem.

    Holds W'W, W'y and the penalty structure; evaluates exact GCV
    profiles in one smoothing parameter through a low-rank update, so
    the coordinate-descent grid search never refactorizes the full
    system per grid point.
    """

    def __init__(self, w: np.ndarray, y: np.ndarray, fixed_penalty: np.ndarray,
                 block_slices: list[slice], block_penalties: list[np.ndarray]):
        self.m = w.T @ w
        self.b = w.T @ y
        self.yy = float(y @ y)
        self.n_rows = w.shape[0]
        self.p = w.shape[1]
        self.fixed = fixed_penalty
        self.slices = block_slices
        # low-rank factors U with P = U U', one per smooth block
        self.factors = []
        for pen in block_penalties:
            val, vec = np.linalg.eigh(pen)
            keep = val > 1e-12 * max(val[-1], 1.0)
            self.factors.append(vec[:, keep] * np.sqrt(val[keep]))

    def penalty(self, lams: Sequence[float]) -> np.ndarray:
        pen = self.fixed.copy()
        for lam, sl, u in zip(lams, self.slices, self.factors):
            if lam > 0.0:
                pen[sl, sl] += lam * (u @ u.T)
        return pen

    def factorize(self, lams: Sequence[float]):
        h = self.m + self.penalty(lams)
        try:
            return h, cho_factor(h, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise IllConditioned("penalized normal equations not PD") from exc

    def solve_beta(self, lams: Sequence[float]) -> np.ndarray:
        _, cho = self.factorize(lams)
        return cho_solve(cho, self.b, check_finite=False)

    def gcv_full(self, lams: Sequence[float]) -> float:
        """Reference GCV via a full factorization (used by tests)."""
        _, cho = self.factorize(lams)
        beta = cho_solve(cho, self.b, check_finite=False)
        edf = float(np.trace(cho_solve(cho, self.m, check_finite=False)))
        rss = self.yy - 2.0 * float(self.b @ beta) + float(beta @ (self.m @ beta))
        if self.n_rows - edf <= 0.0:
            return float("inf")
        return self.n_rows * max(rss, 0.0) / (self.n_rows - edf) ** 2

    def profile_block(self, lams: np.ndarray, g: int,
                      grid: np.ndarray) -> tuple[float, float]:
        """Exact GCV along the grid for block g, other lambdas fixed.

        Returns (best_lambda, best_gcv).  Uses the identity
        (H0 + lam U U')^{-1} = H0^{-1} - lam V (I + lam S)^{-1} V' with
        V = H0^{-1} U and S = U' V, reducing every grid point to an
        r x r solve.
        """
        lams0 = lams.copy()
        lams0[g] = 0.0
        _, cho = self.factorize(lams0)
        beta0 = cho_solve(cho, self.b, check_finite=False)
        edf0 = float(np.trace(cho_solve(cho, self.m, check_finite=False)))
        sl = self.slices[g]
        u = np.zeros((self.p, self.factors[g].shape[1]))
        u[sl] = self.factors[g]
        v = cho_solve(cho, u, check_finite=False)
        s = u.T @ v
        mv = self.m @ v
        a = v.T @ mv
        ub = u.T @ beta0
        vb = v.T @ self.b
        mb0 = self.m @ beta0
        vmb = v.T @ mb0
        bb0 = float(self.b @ beta0)
        bmb0 = float(beta0 @ mb0)
        eye_r = np.eye(s.shape[0])

        best_lam, best_gcv = float(grid[0]), float("inf")
        for lam in grid:
            core = eye_r + lam * s
            w = solve(core, ub, assume_a="pos", check_finite=False)
            edf = edf0 - lam * float(
                np.trace(solve(core, a, assume_a="pos", check_finite=False))
            )
            b_beta = bb0 - lam * float(vb @ w)
            bmb = bmb0 - 2.0 * lam * float(w @ vmb) + lam * lam * float(w @ (a @ w))
            rss = self.yy - 2.0 * b_beta + bmb
            denom = self.n_rows - edf
            gcv = (
                self.n_rows * max(rss, 0.0) / (denom * denom)
                if denom > 0.0
                else float("inf")
            )
            if gcv < best_gcv:
                best_gcv, best_lam = gcv, float(lam)
        return best_lam, best_gcv


def _select_lambdas(system: _PenalizedSystem, n_blocks: int,
                    sweeps: int = 2) -> np.ndarray:
    lams = np.ones(n_blocks)
    for _ in range(sweeps):
        for g in range(n_blocks):
            lams[g], _ = system.profile_block(lams, g, LAMBDA_GRID)
    return lams


def _lag1_autocorr(residuals: np.ndarray) -> float:
    num = float(np.sum(residuals[:, 1:] * residuals[:, :-1]))
    den = float(np.sum(residuals[:, :-1] ** 2))
    if den <= 0.0:
        return 0.0
    return float(np.clip(num / den, -0.95, 0.95))


def fit_mean_model(sample: FunctionalSample, spec: MeanModelSpec) -> MeanModelFit:
    """Penalized least squares fit of the additive mean model.

    Minimizes ||y - W beta||^2 in the AR(1)-whitened metric plus
    difference penalties on the smooth blocks and an identity ridge on
    the speaker block.  Group smooths are constrained to average to
    zero over the grid (the basis sums to one, so the unconstrained
    blocks would share a constant direction with the group intercepts);
    the constraint is absorbed by reparametrizing each block to
    basis_size - 1 columns and expanding the coefficients afterwards.
    Smoothing parameters come from a 30-point log-spaced GCV grid in
    [1e-4, 1e6], coordinate descent per smooth; ar1_rho='AUTO' runs a
    rho = 0 fit, estimates rho by pooled lag-1 autocorrelation, and
    refits once.
    """
    design = build_design(sample, spec)
    y = sample.matrix()
    n, q = y.shape
    k = spec.basis_size
    g_count = len(spec.groups)
    s_count = len(design.speaker_names)

    # sum-to-zero constraint: gamma orthogonal to the column mean vector
    constraint = design.basis.mean(axis=0)[None, :]
    z_c = null_space(constraint)
    pen_c = [z_c.T @ pen @ z_c for pen in design.penalties]

    w_raw = np.hstack(
        [design.x_param, design.z_speaker] + [blk @ z_c for blk in design.smooth_blocks]
    )
    p_total = w_raw.shape[1]
    kc = z_c.shape[1]
    slices = [
        slice(g_count + s_count + g * kc, g_count + s_count + (g + 1) * kc)
        for g in range(g_count)
    ]
    fixed_penalty = np.zeros((p_total, p_total))
    spk = slice(g_count, g_count + s_count)
    fixed_penalty[spk, spk] = spec.speaker_ridge * np.eye(s_count)

    w3 = w_raw.reshape(n, q, p_total)

    def run_at(rho_val: float):
        wt = _whiten(w3, rho_val).reshape(n * q, p_total)
        yt = _whiten(y[:, :, None], rho_val).reshape(n * q)
        sys_ = _PenalizedSystem(wt, yt, fixed_penalty, slices, pen_c)
        if spec.lambda_select == "GCV":
            lam_vec = _select_lambdas(sys_, g_count)
        else:
            lam_vec = np.full(g_count, float(spec.lambda_fixed))
        beta_ = sys_.solve_beta(lam_vec)
        fit_mat = (w_raw @ beta_).reshape(n, q)
        return sys_, lam_vec, beta_, fit_mat, y - fit_mat

    if spec.ar1_rho == "AUTO":
        _, _, _, _, resid0 = run_at(0.0)
        rho = _lag1_autocorr(resid0)
    elif spec.ar1_rho is None:
        rho = 0.0
    else:
        rho = float(spec.ar1_rho)
    system, lams, beta, fitted, resid_mat = run_at(rho)

    h, cho = system.factorize(lams)
    cond = np.linalg.cond(h)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditioned(f"penalized system condition {cond:.3e} exceeds 1e14")

    influence = cho_solve(cho, system.m, check_finite=False)
    edf_cols = np.diag(influence)
    edf_total = float(edf_cols.sum())
    rss_w = system.yy - 2.0 * float(system.b @ beta) + float(beta @ (system.m @ beta))
    dof = max(system.n_rows - edf_total, 1.0)
    sigma2 = max(rss_w, 0.0) / dof
    cov = sigma2 * cho_solve(cho, np.eye(p_total), check_finite=False)
    gcv_final = system.n_rows * max(rss_w, 0.0) / (system.n_rows - edf_total) ** 2

    param_est = beta[:g_count]
    param_se = np.sqrt(np.clip(np.diag(cov)[:g_count], 0.0, None))
    pvalues = {}
    for name, est, se in zip(design.param_names, param_est, param_se):
        z = est / se if se > 0.0 else np.inf
        pvalues[name] = float(2.0 * norm.sf(abs(z)))

    # expand each constrained smooth block back to the full basis
    coef_full = np.concatenate(
        [param_est, beta[spk]] + [z_c @ beta[sl] for sl in slices]
    )
    lam_map, edf_map, coefs, covs = {}, {}, {}, {}
    for g, name in enumerate(design.smooth_names):
        sl = slices[g]
        lam_map[name] = float(lams[g])
        # +1 credits the group's constant level, carried by the
        # parametric column, to the smooth's df budget; keeps edf in [1, k]
        edf_map[name] = float(1.0 + edf_cols[sl].sum())
        coefs[name] = z_c @ beta[sl]
        covs[name] = z_c @ cov[sl, sl] @ z_c.T

    return MeanModelFit(
        coefficients=coef_full,
        lambdas=lam_map,
        rho=rho,
        fitted=fitted,
        residuals=resid_mat,
        edf=edf_map,
        pvalues=pvalues,
        groups=spec.groups,
        grid=sample.grid,
        basis=design.basis,
        param_names=design.param_names,
        speaker_names=design.speaker_names,
        smooth_names=design.smooth_names,
        param_estimates=param_est,
        param_se=param_se,
        smooth_coefs=coefs,
        smooth_cov=covs,
        sigma2=float(sigma2),
        gcv=float(gcv_final),
    )


def extract_residuals(fit: MeanModelFit, sample: FunctionalSample) -> FunctionalSample:
    """Observed-minus-fitted curves, raw scale, metadata preserved."""
    if fit.residuals.shape != (sample.n, sample.q):
        raise InvalidInput("fit does not match the sample it came from")
    if not np.array_equal(fit.grid, sample.grid):
        raise InvalidInput("fit and sample grids differ")
    return FunctionalSample.from_matrix(sample.grid, fit.residuals, sample.metas())


def group_mean_curves(fit: MeanModelFit) -> dict[str, np.ndarray]:
    """Population-level fitted mean curve per group (no speaker effects)."""
    out = {}
    for g, level in enumerate(fit.groups):
        base = fit.param_estimates[0]
        if g > 0:
            base = base + fit.param_estimates[g]
        out[level] = base + fit.basis @ fit.smooth_coefs[fit.smooth_names[g]]
    return out


def parametric_wald_table(fit: MeanModelFit) -> list[tuple[str, float, float, float, float]]:
    """Rows (term, estimate, std_error, z_value, p_value); approximate."""
    rows = []
    for name, est, se in zip(fit.param_names, fit.param_estimates, fit.param_se):
        z = est / se if se > 0.0 else np.inf
        rows.append((name, float(est), float(se), float(z), fit.pvalues[name]))
    return rows


def smooth_wald_table(fit: MeanModelFit) -> list[tuple[str, float, float, float]]:
    """Rows (term, edf, chi_sq, p_value); Wald on the spline block, approximate."""
    rows = []
    for name in fit.smooth_names:
        gamma = fit.smooth_coefs[name]
        cov = fit.smooth_cov[name]
        stat = float(gamma @ (np.linalg.pinv(cov, hermitian=True) @ gamma))
        df = max(fit.edf[name] - 1.0, 1.0)
        rows.append((name, fit.edf[name], stat, float(chi2.sf(stat, df))))
    return rows
