"""Two-step functional covariance analysis.

Step one removes structured mean effects from collections of curves
with a penalized-spline additive model; step two compares the residual
covariance operators across conditions with optimal-transport tools:
Wasserstein distances, Frechet means, transport-map permutation tests
and tangent-space principal components.
"""

from .errors import (
    DimMismatch,
    EmptyInput,
    EmptySample,
    FuncovError,
    IllConditioned,
    InvalidInput,
    InvalidKernel,
    InvalidOperator,
    RankZeroOperator,
    TooFewCurves,
    TooFewSamples,
    UnknownLevel,
)
from .spd import (
    SpdOperator,
    TransportMap,
    bw_distance,
    bw_distance_sq,
    hs_norm_sq,
    identity,
    invsqrt_psd,
    sqrt_psd,
    transport_map,
)
from .curves import (
    Curve,
    CurveMeta,
    FunctionalSample,
    default_grid,
    resample_to_grid,
    sample_covariance,
    sample_mean,
)
from .otinference import (
    AnovaResult,
    FrechetResult,
    anova_statistic,
    frechet_mean,
    permutation_test,
)
from .tangentpca import (
    TangentPcaResult,
    TangentVector,
    exp_map,
    log_map,
    scores_table,
    tangent_pca,
)
from .meanmodel import (
    MeanModelFit,
    MeanModelSpec,
    build_design,
    extract_residuals,
    fit_mean_model,
    group_mean_curves,
    parametric_wald_table,
    smooth_wald_table,
)
from .simulate import (
    GpSpec,
    HarnessResult,
    ScenarioConfig,
    CorpusSpec,
    RawToken,
    kernel_matrix,
    replication_harness,
    sample_gp,
    spiked_alternative,
    synthetic_corpus,
    write_corpus_csv,
)
from .pipeline import (
    FAMILIES,
    PipelineConfig,
    PipelineResult,
    family_fit,
    family_groups,
    family_members,
    family_pca,
    family_tests,
    ingest,
    run_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "AnovaResult",
    "Curve",
    "CurveMeta",
    "CorpusSpec",
    "DimMismatch",
    "EmptySample",
    "EmptyInput",
    "FAMILIES",
    "FrechetResult",
    "FuncovError",
    "FunctionalSample",
    "GpSpec",
    "HarnessResult",
    "IllConditioned",
    "InvalidInput",
    "InvalidKernel",
    "InvalidOperator",
    "MeanModelFit",
    "MeanModelSpec",
    "PipelineConfig",
    "PipelineResult",
    "RankZeroOperator",
    "RawToken",
    "ScenarioConfig",
    "SpdOperator",
    "TangentPcaResult",
    "TangentVector",
    "TooFewCurves",
    "TooFewSamples",
    "TransportMap",
    "UnknownLevel",
    "anova_statistic",
    "build_design",
    "bw_distance",
    "bw_distance_sq",
    "default_grid",
    "exp_map",
    "extract_residuals",
    "family_fit",
    "family_groups",
    "family_members",
    "family_pca",
    "family_tests",
    "fit_mean_model",
    "frechet_mean",
    "group_mean_curves",
    "hs_norm_sq",
    "identity",
    "ingest",
    "invsqrt_psd",
    "kernel_matrix",
    "log_map",
    "parametric_wald_table",
    "permutation_test",
    "replication_harness",
    "resample_to_grid",
    "run_pipeline",
    "sample_covariance",
    "sample_gp",
    "sample_mean",
    "scores_table",
    "smooth_wald_table",
    "spiked_alternative",
    "sqrt_psd",
    "synthetic_corpus",
    "tangent_pca",
    "transport_map",
    "write_corpus_csv",
]
