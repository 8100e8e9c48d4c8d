"""Batch analysis pipeline: ingest -> mean model -> test -> PCA.

The corpus is analyzed per tonal family: the four combinations sharing
a first tone (T1Tx .. T4Tx) or a second tone (TxT1 .. TxT4).  For each
family the pipeline fits the additive mean model on the family's
curves (groups = cognitive load x combination), extracts residual
curves, runs CL0-vs-CL6 permutation tests (pooled across the family
and per combination), and computes tangent-space PCA of the residual
covariance operators.  Families are processed independently; one
family's failure never aborts the others.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .curves import (
    LOADS,
    TONES,
    CurveMeta,
    FunctionalSample,
    default_grid,
    resample_to_grid,
    sample_covariance,
)
from .errors import EmptyInput, FuncovError, InvalidInput
from .meanmodel import (
    MeanModelFit,
    MeanModelSpec,
    extract_residuals,
    fit_mean_model,
    parametric_wald_table,
    smooth_wald_table,
)
from .otinference import AnovaResult, permutation_test
from .tangentpca import ScoresTable, scores_table, tangent_pca

log = logging.getLogger(__name__)

_PKG_VERSION = "0.1.0"

FAMILIES = ("T1Tx", "T2Tx", "T3Tx", "T4Tx", "TxT1", "TxT2", "TxT3", "TxT4")
VALUE_SCALES = ("HZ", "LOG_HZ")
PCA_GROUPINGS = ("combo_cl", "cl")
CSV_HEADER = ["speaker", "tone1", "tone2", "repetition", "cognitive_load", "time", "f0"]


def family_members(family: str) -> list[str]:
    """The four tone combinations making up a family."""
    if family not in FAMILIES:
        raise InvalidInput(f"family must be one of {FAMILIES}")
    if family.endswith("Tx"):
        first = family[:2]
        return [first + t for t in TONES]
    second = family[2:]
    return [t + second for t in TONES]


def family_groups(family: str) -> list[str]:
    """Model levels of a family: loads crossed with member combinations."""
    return [f"{cl}.{combo}" for combo in family_members(family) for cl in LOADS]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a pipeline run depends on besides the input bytes."""

    input_path: str
    out_dir: str
    grid_size: int = 50
    value_scale: str = "HZ"
    families: tuple[str, ...] = FAMILIES
    basis_size: int = 10
    penalty_order: int = 2
    lambda_select: str = "GCV"
    lambda_fixed: float | None = None
    ar1_rho: float | str | None = "AUTO"
    speaker_ridge: float = 1.0
    n_permutations: int = 500
    seed: int = 0
    strata: str = "none"
    pca_grouping: str = "combo_cl"
    pca_components: int = 10
    smooth_span: int | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.grid_size < 8:
            raise InvalidInput("grid_size must be >= 8")
        if self.n_permutations < 99:
            raise InvalidInput("n_permutations must be >= 99")
        if self.value_scale not in VALUE_SCALES:
            raise InvalidInput(f"value_scale must be one of {VALUE_SCALES}")
        if self.pca_grouping not in PCA_GROUPINGS:
            raise InvalidInput(f"pca_grouping must be one of {PCA_GROUPINGS}")
        fams = tuple(self.families) if self.families else FAMILIES
        if fams == ("ALL",):
            fams = FAMILIES
        for f in fams:
            if f not in FAMILIES:
                raise InvalidInput(f"unknown family {f!r}")
        if len(set(fams)) != len(fams):
            raise InvalidInput("families must be distinct")
        object.__setattr__(self, "families", fams)
        if self.pca_components < 1:
            raise InvalidInput("pca_components must be >= 1")
        if self.smooth_span is not None:
            if self.smooth_span < 3 or self.smooth_span % 2 == 0:
                raise InvalidInput("smooth_span must be an odd integer >= 3")


def _smooth_values(y: np.ndarray, span: int) -> np.ndarray:
    """Centered moving average with edge windows shrunk, not padded."""
    kernel = np.ones(span)
    counts = np.convolve(np.ones_like(y), kernel, mode="same")
    return np.convolve(y, kernel, mode="same") / counts


def ingest(path, grid_size: int = 50, value_scale: str = "HZ",
           smooth_span: int | None = None) -> FunctionalSample:
    """Read a long-format raw corpus CSV onto the common grid.

    Rows are grouped into tokens by (speaker, tone1, tone2, repetition,
    cognitive_load); each token's time axis is normalized to [0, 1] and
    its values are spline-resampled to ``grid_size`` points.  Tokens
    with fewer than 4 samples are dropped with a logged warning.
    """
    if value_scale not in VALUE_SCALES:
        raise InvalidInput(f"value_scale must be one of {VALUE_SCALES}")
    tokens: dict[tuple, tuple[CurveMeta, list, list]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInput(f"{path}: file is empty")
        if [h.strip() for h in header] != CSV_HEADER:
            raise InvalidInput(
                f"{path}: header must be {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise InvalidInput(f"{path} line {lineno}: expected 7 fields")
            try:
                meta = CurveMeta(row[0].strip(), row[1].strip(), row[2].strip(),
                                 int(row[3]), row[4].strip())
                t = float(row[5])
                v = float(row[6])
            except (ValueError, InvalidInput) as exc:
                raise InvalidInput(f"{path} line {lineno}: {exc}") from exc
            key = (meta.speaker, meta.tone_first, meta.tone_second,
                   meta.repetition, meta.cognitive_load)
            if key not in tokens:
                tokens[key] = (meta, [], [])
            tokens[key][1].append(t)
            tokens[key][2].append(v)
    if not tokens:
        raise EmptyInput(f"{path}: no data rows")

    grid = default_grid(grid_size)
    curves_values = []
    metas = []
    dropped = 0
    for meta, times, values in tokens.values():
        if len(times) < 4:
            dropped += 1
            continue
        order = np.argsort(np.asarray(times), kind="stable")
        t_arr = np.asarray(times, dtype=float)[order]
        v_arr = np.asarray(values, dtype=float)[order]
        if value_scale == "LOG_HZ":
            if np.any(v_arr <= 0.0):
                raise InvalidInput(
                    f"{path}: nonpositive f0 cannot be log-scaled "
                    f"(token {meta.speaker} {meta.combo} rep {meta.repetition} "
                    f"{meta.cognitive_load})")
            v_arr = np.log(v_arr)
        if smooth_span is not None:
            v_arr = _smooth_values(v_arr, smooth_span)
        curves_values.append(resample_to_grid(t_arr, v_arr, grid))
        metas.append(meta)
    if dropped:
        log.warning("dropped %d token(s) with fewer than 4 samples", dropped)
    if not curves_values:
        raise EmptyInput(f"{path}: no token has >= 4 samples")
    return FunctionalSample.from_matrix(grid, np.asarray(curves_values), metas)


@dataclass(frozen=True)
class AnovaRow:
    """One test result row, Table-3 shaped."""

    family: str
    combo: str
    statistic: float
    p_value: float
    n_permutations: int
    n_cl0: int
    n_cl6: int
    seed: int


@dataclass
class FamilyOutput:
    """In-memory results for one family (also written as CSVs)."""

    family: str
    fit: MeanModelFit
    residuals: FunctionalSample
    anova: list[AnovaRow]
    pca: ScoresTable | None
    pca_labels: list[str]


@dataclass
class PipelineResult:
    out_dir: str
    statuses: dict[str, str]
    families: dict[str, FamilyOutput] = field(default_factory=dict)

    @property
    def failed(self) -> list[str]:
        return [f for f, s in self.statuses.items() if s != "ok"]


def _test_seed(seed: int, family: str, combo_index: int) -> int:
    """Stable per-(family, combo) permutation seed, data independent."""
    ss = np.random.SeedSequence(
        entropy=[seed, FAMILIES.index(family), combo_index])
    return int(ss.generate_state(1)[0])


def _family_spec(sample: FunctionalSample, family: str,
                 config: PipelineConfig) -> MeanModelSpec:
    present = {f"{m.cognitive_load}.{m.combo}" for m in sample.metas()}
    groups = tuple(g for g in family_groups(family) if g in present)
    return MeanModelSpec(
        groups=groups,
        basis_size=config.basis_size,
        penalty_order=config.penalty_order,
        lambda_select=config.lambda_select,
        lambda_fixed=config.lambda_fixed,
        ar1_rho=config.ar1_rho,
        speaker_ridge=config.speaker_ridge,
    )


def family_fit(sample: FunctionalSample, family: str,
               config: PipelineConfig) -> tuple[MeanModelFit, FunctionalSample]:
    """Mean model for one family; returns the fit and residual curves."""
    members = set(family_members(family))
    fam_sample = sample.subset(lambda m: m.combo in members)
    fit = fit_mean_model(fam_sample, _family_spec(fam_sample, family, config))
    return fit, extract_residuals(fit, fam_sample)


def _split_by_load(sample: FunctionalSample) -> dict[str, FunctionalSample]:
    return sample.split(lambda m: m.cognitive_load)


def family_tests(residuals: FunctionalSample, family: str,
                 config: PipelineConfig) -> list[AnovaRow]:
    """CL0-vs-CL6 permutation tests: family-pooled row, then per combo.

    Combinations missing a load condition (or with a single curve in
    one) are skipped; the pooled row requires both loads somewhere in
    the family.
    """
    rows: list[AnovaRow] = []

    def run(sub: FunctionalSample, combo_label: str, combo_index: int):
        by_load = _split_by_load(sub)
        if not all(cl in by_load and by_load[cl].n >= 2 for cl in LOADS):
            return
        seed = _test_seed(config.seed, family, combo_index)
        res: AnovaResult = permutation_test(
            [by_load[LOADS[0]], by_load[LOADS[1]]],
            n_permutations=config.n_permutations,
            seed=seed,
            strata=config.strata,
            n_jobs=config.n_jobs,
        )
        rows.append(AnovaRow(family, combo_label, res.statistic, res.p_value,
                             config.n_permutations, res.group_sizes[0],
                             res.group_sizes[1], seed))

    run(residuals, "ALL", 0)
    for idx, combo in enumerate(family_members(family), start=1):
        try:
            sub = residuals.subset(lambda m, c=combo: m.combo == c)
        except FuncovError:
            continue
        run(sub, combo, idx)
    return rows


def family_pca(residuals: FunctionalSample, family: str,
               config: PipelineConfig) -> tuple[list[str], ScoresTable | None]:
    """Tangent PCA of residual covariance operators within a family.

    Operators are one per (combination, load) cell by default, or one
    per load when pca_grouping='cl'.  Returns (labels, table); table is
    None when fewer than two cells have enough curves.
    """
    if config.pca_grouping == "cl":
        cells = _split_by_load(residuals)
    else:
        cells = residuals.split(lambda m: f"{m.cognitive_load}.{m.combo}")
    labels = [k for k in sorted(cells) if cells[k].n >= 2]
    if len(labels) < 2:
        return labels, None
    ops = [sample_covariance(cells[k]) for k in labels]
    res = tangent_pca(ops, n_components=config.pca_components)
    return labels, scores_table(res, labels)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(x) if isinstance(x, float) else x for x in row])


def _write_mean_table(path: Path, fit: MeanModelFit) -> None:
    rows = []
    for term, est, se, z, p in parametric_wald_table(fit):
        rows.append([term, "parametric", float(est), float(se), float(z),
                     "", float(p), "yes"])
    for term, edf, stat, p in smooth_wald_table(fit):
        rows.append([term, "smooth", "", "", float(stat), float(edf),
                     float(p), "yes"])
    _write_csv(path, ["term", "kind", "estimate", "std_error", "statistic",
                      "edf", "p_value", "approximate"], rows)


def _write_residuals(path: Path, residuals: FunctionalSample) -> None:
    rows = []
    for curve in residuals.curves:
        m = curve.meta
        for t, v in zip(residuals.grid, curve.values):
            rows.append([m.speaker, m.tone_first, m.tone_second, m.repetition,
                         m.cognitive_load, float(t), float(v)])
    _write_csv(path, ["speaker", "tone1", "tone2", "repetition",
                      "cognitive_load", "time", "value"], rows)


def _write_anova(path: Path, rows: list[AnovaRow]) -> None:
    _write_csv(
        path,
        ["family", "combo", "statistic", "p_value", "n_permutations",
         "n_cl0", "n_cl6", "seed"],
        [[r.family, r.combo, float(r.statistic), float(r.p_value),
          r.n_permutations, r.n_cl0, r.n_cl6, r.seed] for r in rows],
    )


def _write_pca(fam_dir: Path, labels: list[str], table: ScoresTable | None) -> None:
    if table is None:
        _write_csv(fam_dir / "pca_scores.csv", ["label"], [[l] for l in labels])
        _write_csv(fam_dir / "pca_screeplot.csv",
                   ["component", "eigenvalue", "share"], [])
        return
    _write_csv(fam_dir / "pca_scores.csv", list(table.header),
               [list(r) for r in table.rows])
    _write_csv(fam_dir / "pca_screeplot.csv",
               ["component", "eigenvalue", "share"],
               [[c, float(v), float(s)] for c, v, s in table.screeplot])


def _config_manifest(config: PipelineConfig) -> dict:
    data = asdict(config)
    data["families"] = list(config.families)
    digest = hashlib.sha256()
    try:
        with open(config.input_path, "rb") as fh:
            for chunk in iter(lambda: fh.read(65536), b""):
                digest.update(chunk)
        input_hash = digest.hexdigest()
    except OSError:
        input_hash = None
    return {
        "config": data,
        "config_sha256": hashlib.sha256(
            json.dumps(data, sort_keys=True).encode()).hexdigest(),
        "input_sha256": input_hash,
        "version": _PKG_VERSION,
    }


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run every configured family end to end; never abort on one failure.

    Writes, per family, mean_table.csv, residuals.csv, anova.csv,
    pca_scores.csv and pca_screeplot.csv under out_dir/<family>/, plus
    a top-level manifest.json and status.csv.  Returns the in-memory
    results; failed families appear in ``statuses`` with the error text.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(_config_manifest(config), fh, indent=2, sort_keys=True)
        fh.write("\n")

    sample = ingest(config.input_path, config.grid_size, config.value_scale,
                    config.smooth_span)

    result = PipelineResult(out_dir=str(out_dir), statuses={})
    for family in config.families:
        fam_dir = out_dir / family
        try:
            fam_dir.mkdir(parents=True, exist_ok=True)
            fit, residuals = family_fit(sample, family, config)
            rows = family_tests(residuals, family, config)
            labels, table = family_pca(residuals, family, config)
            _write_mean_table(fam_dir / "mean_table.csv", fit)
            _write_residuals(fam_dir / "residuals.csv", residuals)
            _write_anova(fam_dir / "anova.csv", rows)
            _write_pca(fam_dir, labels, table)
            result.families[family] = FamilyOutput(
                family, fit, residuals, rows, table, labels)
            result.statuses[family] = "ok"
        except FuncovError as exc:
            log.error("family %s failed: %s", family, exc)
            result.statuses[family] = f"{type(exc).__name__}: {exc}"
    _write_csv(out_dir / "status.csv", ["family", "status"],
               [[f, result.statuses[f]] for f in config.families])
    return result
