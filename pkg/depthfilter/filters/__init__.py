from .core import FilterOutcome, flag_count, gy_filter, hs_filter
from .stages import (
    PipelineReport,
    binom_quantile,
    bivariate_stage,
    cell_flag_stage,
    pair_thresholds,
    pvariate_stage,
    run_pipeline,
    sequence_filter,
    tuple_filter,
    univariate_stage,
)

__all__ = [
    "FilterOutcome",
    "PipelineReport",
    "binom_quantile",
    "bivariate_stage",
    "cell_flag_stage",
    "flag_count",
    "gy_filter",
    "hs_filter",
    "pair_thresholds",
    "pvariate_stage",
    "run_pipeline",
    "sequence_filter",
    "tuple_filter",
    "univariate_stage",
]
