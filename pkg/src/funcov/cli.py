"""Command-line interface.

Subcommands: ingest, fit-mean, test, tpca, simulate, pipeline.  Flags
mirror PipelineConfig; an INI config file (section [funcov]) overrides
flags.  Exit codes: 0 ok, 1 family/data failures, 2 invalid config or
usage.  All outputs are UTF-8 CSV with '.' decimals and LF endings.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import numpy as np

from .curves import FunctionalSample
from .errors import FuncovError, InvalidInput
from .pipeline import (
    FAMILIES,
    PipelineConfig,
    family_fit,
    family_pca,
    family_tests,
    ingest,
    run_pipeline,
    _write_anova,
    _write_csv,
    _write_mean_table,
    _write_pca,
    _write_residuals,
)
from .simulate import (
    CorpusSpec,
    GpSpec,
    ScenarioConfig,
    replication_harness,
    synthetic_corpus,
    write_corpus_csv,
)


def _parse_rho(text: str):
    if text.upper() == "AUTO":
        return "AUTO"
    if text.lower() in ("none", ""):
        return None
    val = float(text)
    return val


def _parse_families(text: str) -> tuple[str, ...]:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    return items if items else ("ALL",)


def _parse_combos(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _parse_optional_int(text: str):
    return None if text.lower() in ("none", "") else int(text)


def _parse_optional_float(text: str):
    return None if text.lower() in ("none", "") else float(text)


# dest -> coercer, used when applying INI config values over parsed flags
_COERCERS = {
    "input": str,
    "residuals": str,
    "output": str,
    "out_dir": str,
    "p_values": str,
    "family": str,
    "grid_size": int,
    "value_scale": str,
    "families": _parse_families,
    "basis_size": int,
    "penalty_order": int,
    "lambda_select": str,
    "lambda_fixed": _parse_optional_float,
    "ar1_rho": _parse_rho,
    "speaker_ridge": float,
    "n_permutations": int,
    "seed": int,
    "strata": str,
    "pca_grouping": str,
    "pca_components": int,
    "smooth_span": _parse_optional_int,
    "n_jobs": int,
    "mode": str,
    "speakers": int,
    "repetitions": int,
    "affected": _parse_combos,
    "effect_scale": float,
    "base_f0": float,
    "tone_scale": float,
    "speaker_sd": float,
    "load_shift": float,
    "kernel": str,
    "length_scale": float,
    "variance": float,
    "noise_sd": float,
    "reps": int,
    "alternative": str,
    "effect": float,
    "n_per_group": int,
}


def _apply_config_file(args: argparse.Namespace) -> None:
    """Overlay INI values (section [funcov]) onto parsed flags."""
    if not getattr(args, "config", None):
        return
    cp = configparser.ConfigParser()
    read = cp.read(args.config)
    if not read:
        raise InvalidInput(f"config file {args.config!r} not readable")
    if cp.has_section("funcov"):
        section = cp["funcov"]
    else:
        section = cp.defaults()
    for raw_key, value in section.items():
        key = raw_key.replace("-", "_")
        if key == "config":
            continue
        if key not in _COERCERS or not hasattr(args, key):
            raise InvalidInput(f"unknown config key {raw_key!r}")
        try:
            setattr(args, key, _COERCERS[key](value))
        except ValueError as exc:
            raise InvalidInput(f"config key {raw_key!r}: {exc}") from exc


def _add_ingest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-size", type=int, default=50)
    p.add_argument("--value-scale", choices=("HZ", "LOG_HZ"), default="HZ")
    p.add_argument("--smooth-span", type=_parse_optional_int, default=None)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--basis-size", type=int, default=10)
    p.add_argument("--penalty-order", type=int, choices=(1, 2), default=2)
    p.add_argument("--lambda-select", choices=("GCV", "FIXED"), default="GCV")
    p.add_argument("--lambda-fixed", type=_parse_optional_float, default=None)
    p.add_argument("--ar1-rho", type=_parse_rho, default="AUTO")
    p.add_argument("--speaker-ridge", type=float, default=1.0)


def _add_test_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-permutations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strata", choices=("none", "speaker"), default="none")
    p.add_argument("--n-jobs", type=int, default=1)


def _add_pca_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pca-grouping", choices=("combo_cl", "cl"), default="combo_cl")
    p.add_argument("--pca-components", type=int, default=10)


def _pipeline_config(args: argparse.Namespace, out_dir: str) -> PipelineConfig:
    return PipelineConfig(
        input_path=args.input,
        out_dir=out_dir,
        grid_size=args.grid_size,
        value_scale=args.value_scale,
        families=getattr(args, "families", FAMILIES),
        basis_size=args.basis_size,
        penalty_order=args.penalty_order,
        lambda_select=args.lambda_select,
        lambda_fixed=args.lambda_fixed,
        ar1_rho=args.ar1_rho,
        speaker_ridge=args.speaker_ridge,
        n_permutations=getattr(args, "n_permutations", 500),
        seed=getattr(args, "seed", 0),
        strata=getattr(args, "strata", "none"),
        pca_grouping=getattr(args, "pca_grouping", "combo_cl"),
        pca_components=getattr(args, "pca_components", 10),
        smooth_span=args.smooth_span,
        n_jobs=getattr(args, "n_jobs", 1),
    )


def read_curves_csv(path) -> FunctionalSample:
    """Read curves already on a common grid (e.g. a residuals.csv)."""
    from .curves import CurveMeta

    tokens: dict[tuple, tuple[CurveMeta, list, list]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["speaker", "tone1", "tone2", "repetition",
                    "cognitive_load", "time", "value"]
        if header is None or [h.strip() for h in header] != expected:
            raise InvalidInput(f"{path}: header must be {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise InvalidInput(f"{path} line {lineno}: expected 7 fields")
            try:
                meta = CurveMeta(row[0].strip(), row[1].strip(), row[2].strip(),
                                 int(row[3]), row[4].strip())
                t, v = float(row[5]), float(row[6])
            except (ValueError, InvalidInput) as exc:
                raise InvalidInput(f"{path} line {lineno}: {exc}") from exc
            key = (meta.speaker, meta.tone_first, meta.tone_second,
                   meta.repetition, meta.cognitive_load)
            tokens.setdefault(key, (meta, [], []))
            tokens[key][1].append(t)
            tokens[key][2].append(v)
    if not tokens:
        raise InvalidInput(f"{path}: no data rows")
    first = next(iter(tokens.values()))
    grid = np.asarray(first[1], dtype=float)
    values, metas = [], []
    for meta, times, vals in tokens.values():
        if len(times) != grid.size or not np.allclose(times, grid):
            raise InvalidInput(f"{path}: curves do not share one grid")
        values.append(vals)
        metas.append(meta)
    return FunctionalSample.from_matrix(grid, np.asarray(values, dtype=float), metas)


def _residuals_for(args: argparse.Namespace) -> FunctionalSample:
    """Family residual curves from either raw input or a residuals file."""
    if getattr(args, "residuals", None):
        sample = read_curves_csv(args.residuals)
        from .pipeline import family_members

        members = set(family_members(args.family))
        return sample.subset(lambda m: m.combo in members)
    if not getattr(args, "input", None):
        raise InvalidInput("provide --input (raw corpus) or --residuals")
    config = _pipeline_config(args, out_dir=".")
    sample = ingest(args.input, config.grid_size, config.value_scale,
                    config.smooth_span)
    _, residuals = family_fit(sample, args.family, config)
    return residuals


def _cmd_ingest(args) -> int:
    sample = ingest(args.input, args.grid_size, args.value_scale,
                    args.smooth_span)
    _write_residuals(Path(args.output), sample)
    print(f"ingested {sample.n} curves on a {sample.q}-point grid -> {args.output}")
    return 0


def _cmd_fit_mean(args) -> int:
    config = _pipeline_config(args, out_dir=args.out_dir)
    sample = ingest(args.input, config.grid_size, config.value_scale,
                    config.smooth_span)
    fit, residuals = family_fit(sample, args.family, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_mean_table(out / "mean_table.csv", fit)
    _write_residuals(out / "residuals.csv", residuals)
    print(f"fit {args.family}: rho={fit.rho:.4f}, "
          f"{len(fit.lambdas)} smooths -> {out}")
    return 0


def _cmd_test(args) -> int:
    residuals = _residuals_for(args)
    config = _pipeline_config(args, out_dir=".")
    rows = family_tests(residuals, args.family, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_anova(out / "anova.csv", rows)
    for r in rows:
        print(f"{r.family} {r.combo}: T={r.statistic:.6g} p={r.p_value:.6g}")
    return 0


def _cmd_tpca(args) -> int:
    residuals = _residuals_for(args)
    config = _pipeline_config(args, out_dir=".")
    labels, table = family_pca(residuals, args.family, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_pca(out, labels, table)
    kept = len(table.header) - 1 if table else 0
    print(f"{args.family}: {len(labels)} operators, {kept} components -> {out}")
    return 0


def _cmd_simulate(args) -> int:
    if args.mode == "corpus":
        spec = CorpusSpec(
            n_speakers=args.speakers,
            n_repetitions=args.repetitions,
            base_f0=args.base_f0,
            tone_scale=args.tone_scale,
            speaker_sd=args.speaker_sd,
            load_shift=args.load_shift,
            residual=GpSpec(kernel=args.kernel, length_scale=args.length_scale,
                            variance=args.variance, noise_sd=args.noise_sd),
            affected_combos=args.affected,
            effect_scale=args.effect_scale,
        )
        tokens = synthetic_corpus(spec, args.seed)
        write_corpus_csv(tokens, args.output)
        print(f"wrote {len(tokens)} tokens -> {args.output}")
        return 0
    scenario = ScenarioConfig(
        gp=GpSpec(kernel=args.kernel, length_scale=args.length_scale,
                  variance=args.variance, noise_sd=args.noise_sd),
        q=args.grid_size,
        n_per_group=args.n_per_group,
        alternative=args.alternative,
        effect=args.effect,
        n_permutations=args.n_permutations,
        seed=args.seed,
        strata=args.strata,
    )
    result = replication_harness(scenario, args.reps, n_jobs=args.n_jobs)
    summary = result.summary()
    header = ["label"] + list(summary) + ["reps", "n_permutations",
                                          "n_per_group", "seed"]
    row = ([args.label] + [summary[k] for k in summary]
           + [args.reps, args.n_permutations, args.n_per_group, args.seed])
    _write_csv(Path(args.output), header, [row])
    if args.p_values:
        _write_csv(Path(args.p_values), ["rep", "p_value"],
                   [[i, float(p)] for i, p in enumerate(result.p_values)])
    print(" ".join(f"{k}={v:.4g}" for k, v in summary.items()))
    return 0


def _cmd_pipeline(args) -> int:
    config = _pipeline_config(args, out_dir=args.out_dir)
    result = run_pipeline(config)
    for family in config.families:
        print(f"{family}: {result.statuses[family]}")
    return 1 if result.failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcov",
        description="Functional covariance analysis of f0 curves: "
                    "spline mean models and transport-based inference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="resample a raw corpus onto the common grid")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--config")
    _add_ingest_flags(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("fit-mean", help="fit the family mean model")
    p.add_argument("--input", required=True)
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    _add_ingest_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=_cmd_fit_mean)

    p = sub.add_parser("test", help="CL0-vs-CL6 permutation tests on residuals")
    p.add_argument("--input")
    p.add_argument("--residuals")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    _add_ingest_flags(p)
    _add_model_flags(p)
    _add_test_flags(p)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("tpca", help="tangent PCA of residual covariances")
    p.add_argument("--input")
    p.add_argument("--residuals")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    _add_ingest_flags(p)
    _add_model_flags(p)
    _add_pca_flags(p)
    p.set_defaults(func=_cmd_tpca)

    p = sub.add_parser("simulate", help="synthetic corpora and p-value harness")
    p.add_argument("--mode", choices=("corpus", "harness"), default="harness")
    p.add_argument("--output", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label", default="scenario")
    p.add_argument("--speakers", type=int, default=12)
    p.add_argument("--repetitions", type=int, default=4)
    p.add_argument("--affected", type=_parse_combos, default=())
    p.add_argument("--effect-scale", type=float, default=4.0)
    p.add_argument("--base-f0", type=float, default=220.0)
    p.add_argument("--tone-scale", type=float, default=30.0)
    p.add_argument("--speaker-sd", type=float, default=12.0)
    p.add_argument("--load-shift", type=float, default=6.0)
    p.add_argument("--kernel", default="SQUARED_EXP",
                   choices=("SQUARED_EXP", "MATERN_3_2", "BROWNIAN"))
    p.add_argument("--length-scale", type=float, default=0.25)
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--alternative", choices=("none", "scale", "spike"),
                   default="none")
    p.add_argument("--effect", type=float, default=1.0)
    p.add_argument("--grid-size", type=int, default=20)
    p.add_argument("--n-per-group", type=int, default=30)
    p.add_argument("--n-permutations", type=int, default=500)
    p.add_argument("--strata", choices=("none", "speaker"), default="none")
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--p-values")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("pipeline", help="full per-family analysis pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    p.add_argument("--families", type=_parse_families, default=FAMILIES)
    _add_ingest_flags(p)
    _add_model_flags(p)
    _add_test_flags(p)
    _add_pca_flags(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        _apply_config_file(args)
        return args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FuncovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
