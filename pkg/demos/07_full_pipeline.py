"""
End-to-end pipeline on a synthetic corpus
=========================================

Generates a synthetic tone corpus in which two tone combinations carry a
condition-dependent covariance difference, runs the whole analysis
(ingest, mean models, permutation tests, tangent PCA), and reads the
flagged families off the results.
"""

import tempfile
from pathlib import Path

from funcov import (CorpusSpec, GpSpec, PipelineConfig, run_pipeline,
                    synthetic_corpus, write_corpus_csv)

# curves of the T1T1 and T1T2 combinations get 6x residual variance
# under the CL6 condition; everything else is exchangeable across loads
spec = CorpusSpec(
    n_speakers=6, n_repetitions=4,
    residual=GpSpec(kernel="MATERN_3_2", length_scale=0.3, variance=16.0,
                    noise_sd=0.5),
    affected_combos=("T1T1", "T1T2"), effect_scale=6.0,
)

with tempfile.TemporaryDirectory() as td:
    corpus = Path(td) / "corpus.csv"
    write_corpus_csv(synthetic_corpus(spec, seed=42), corpus)
    print(f"corpus: {sum(1 for _ in open(corpus)) - 1} rows")

    config = PipelineConfig(
        input_path=str(corpus), out_dir=str(Path(td) / "out"),
        grid_size=16, families=("ALL",), basis_size=8,
        n_permutations=199, seed=0,
    )
    result = run_pipeline(config)

    print(f"\nfamily statuses: {result.statuses}")
    print(f"\n{'family':>7}  {'pooled p':>8}  flagged")
    for family, out in result.families.items():
        pooled = next(r for r in out.anova if r.combo == "ALL")
        mark = "  <-- covariance difference" if pooled.p_value <= 0.05 else ""
        print(f"{family:>7}  {pooled.p_value:8.3f}  {str(pooled.p_value <= 0.05):>7}{mark}")

    print("\nper-combination rows for T1Tx:")
    for row in result.families["T1Tx"].anova:
        print(f"  {row.combo:>5}  stat {row.statistic:8.4f}  p {row.p_value:.3f}")

    files = sorted(p.name for p in (Path(td) / "out" / "T1Tx").iterdir())
    print(f"\nfiles written per family: {files}")
