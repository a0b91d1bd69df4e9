# depthfilter/estimation/two_step.py
# Filter, snip flagged cells to missing, then estimate.

from __future__ import annotations
from typing import Optional, Tuple

from ..config import FilterConfig
from ..data.matrix import DataMatrix
from ..filters.stages import PipelineReport, run_pipeline
from ..utils.log import get_logger
from .em import EstimatorResult, get_estimator

LOG = get_logger(__name__)


def two_step(m: DataMatrix, cfg: FilterConfig, apply_filter: bool = True) -> Tuple[Optional[PipelineReport], EstimatorResult]:
    """Run the pipeline, turn flagged cells into NA and fit the second-step estimator.

    With ``apply_filter=False`` the estimator sees the raw data and no report is made.
    """
    estimator = get_estimator(cfg.estimator)
    if not apply_filter:
        return None, estimator(m, tol=cfg.em_tol, max_iter=cfg.em_max_iter)
    report = run_pipeline(m, cfg)
    snipped = report.filtered(m)
    LOG.info("Second step (%s) on %d remaining cells", cfg.estimator, int(snipped.mask.sum()))
    return report, estimator(snipped, tol=cfg.em_tol, max_iter=cfg.em_max_iter)
