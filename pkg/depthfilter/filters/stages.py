# depthfilter/filters/stages.py
# The univariate -> bivariate -> p-variate filtering pipeline and the generic
# dimension-sequence driver.
#
# Every d-variate filter task is keyed by (d, *columns): that key fixes its random
# directions and, for the empirical reference, its reference draws, so results do
# not depend on the thread schedule. Per-stage merges run in task order.

from __future__ import annotations
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..config import FilterConfig
from ..data.matrix import (
    CLEAN,
    ORIGIN_BIVARIATE,
    ORIGIN_PVARIATE,
    ORIGIN_UNIVARIATE,
    SEQUENCE_BASE,
    CellFlags,
    DataMatrix,
    PairFlagSet,
    complete_tuple,
    origin_label,
)
from ..depth.elliptical import LocationScatter
from ..depth.halfspace import direction_batch, max_depth_observation, self_depths
from ..errors import ConfigError, NumericalError
from ..estimation.em import get_estimator
from ..estimation.robust import mad, median
from ..reference.distributions import build_reference
from ..utils.log import get_logger
from ..utils.parallel import pmap
from .core import FilterOutcome, gy_filter, hs_filter

LOG = get_logger(__name__)

REPORT_VERSION = "1.0"


# ---------------------------- one d-variate task ----------------------------

def _min_rows(d: int, stage: str, cfg: FilterConfig) -> int:
    if d == 1:
        return 1
    if stage == "pvariate":
        return d + 1
    return max(cfg.min_pair_rows, d + 1)


def _initial_estimates(
    m: DataMatrix,
    usable: np.ndarray,
    cols: Tuple[int, ...],
    points: np.ndarray,
    depths: Optional[np.ndarray],
    cfg: FilterConfig,
) -> LocationScatter:
    """Median and squared MAD for d = 1; deepest observation and second-step scatter otherwise."""
    if len(cols) == 1:
        x = points[:, 0]
        s = mad(x, cfg.mad_scale)
        if s == 0.0:
            raise NumericalError("zero MAD")
        return LocationScatter(np.array([median(x)]), np.array([[s * s]]))
    _, loc = max_depth_observation(points, depths=depths)
    sub = m.with_mask(usable).select_columns(cols)
    est = get_estimator(cfg.estimator)(sub, tol=cfg.em_tol, max_iter=cfg.em_max_iter)
    return LocationScatter(loc, est.scatter)


def tuple_filter(
    m: DataMatrix,
    cfg: FilterConfig,
    usable: np.ndarray,
    cols: Sequence[int],
    stage: str,
) -> FilterOutcome:
    """Run the configured d-variate filter on the rows complete in ``cols``.

    Returned indices are data rows. Too few rows or degenerate initial
    estimates give a skipped outcome.
    """
    cols = tuple(int(c) for c in cols)
    d = len(cols)
    rows, points = complete_tuple(m, cols, usable)
    names = ",".join(m.columns[c] for c in cols)
    need = _min_rows(d, stage, cfg)
    if rows.size < need:
        LOG.warning("%s filter on (%s) skipped: %d complete rows, need %d", stage, names, rows.size, need)
        return FilterOutcome.skip(f"{rows.size} complete rows, need {need}", stage, cols, n=int(rows.size))

    ctx = (d, *cols)
    directions = direction_batch(d, cfg.n_directions, cfg.seed, *ctx) if d >= 3 else None
    depths = self_depths(points, directions) if (d >= 2 or cfg.method == "hs") else None
    try:
        ls = _initial_estimates(m, usable, cols, points, depths, cfg)
        if cfg.method == "gy":
            out = gy_filter(points, ls, cfg.alpha, family=cfg.ref_family)
        else:
            ref = build_reference(cfg.ref_family, ls, cfg.ref_sample_size, cfg.n_directions, cfg.seed, ctx)
            out = hs_filter(points, ref, ref.region(cfg.beta), directions=directions, sample_depths=depths)
    except NumericalError as e:
        LOG.warning("%s filter on (%s) skipped: %s", stage, names, e)
        return FilterOutcome.skip(str(e), stage, cols, n=int(rows.size))
    LOG.debug("%s filter on (%s): n=%d d_n=%.6g n0=%d", stage, names, out.n, out.d_n, out.n0)
    return out.at_rows(rows, stage, cols)


# ---------------------------- stages ----------------------------

def univariate_stage(m: DataMatrix, cfg: FilterConfig, flags: CellFlags) -> Tuple[CellFlags, List[FilterOutcome]]:
    usable = flags.usable(m)
    outcomes = pmap(lambda j: tuple_filter(m, cfg, usable, (j,), "univariate"), list(range(m.p)), cfg.threads)
    cells = [(i, o.columns[0]) for o in outcomes for i in o.flagged]
    LOG.info("Univariate stage: %d cells flagged over %d columns", len(cells), m.p)
    return flags.flag_cells(cells, ORIGIN_UNIVARIATE), outcomes


def bivariate_stage(m: DataMatrix, cfg: FilterConfig, flags: CellFlags) -> Tuple[PairFlagSet, List[FilterOutcome]]:
    usable = flags.usable(m)
    pairs = list(combinations(range(m.p), 2))
    outcomes = pmap(lambda jk: tuple_filter(m, cfg, usable, jk, "bivariate"), pairs, cfg.threads)
    J = PairFlagSet(m.n, m.p).union((i, o.columns[0], o.columns[1]) for o in outcomes for i in o.flagged)
    LOG.info("Bivariate stage: %d flagged pairs over %d column pairs", len(J), len(pairs))
    return J, outcomes


@lru_cache(maxsize=4096)
def binom_quantile(N: int, delta: float, q: float) -> int:
    """Smallest c with P(Bin(N, delta) <= c) >= q, by summing the pmf."""
    if N <= 0:
        return 0
    cdf = np.cumsum(stats.binom.pmf(np.arange(N + 1), N, delta))
    return int(np.argmax(cdf >= q - 1e-12)) if cdf[-1] >= q - 1e-12 else N


def pair_thresholds(
    J: PairFlagSet,
    flags: CellFlags,
    delta: float,
    q: float,
    mask: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """(m_ij, c_ij): flagged pairs per cell and the binomial cutoff for its row.

    c_ij is the q-quantile of Bin(sum_{k != j} U_ik, delta), where U counts cells
    that are unfiltered (and observed, when ``mask`` is given).
    """
    counts = J.counts()
    U = flags.state == CLEAN
    if mask is not None:
        U = U & mask
    usable_in_row = U.sum(axis=1, keepdims=True) - U.astype(int)
    thresholds = np.vectorize(lambda N: binom_quantile(int(N), float(delta), float(q)), otypes=[int])(usable_in_row)
    return counts, thresholds


def cell_flag_stage(
    J: PairFlagSet,
    flags: CellFlags,
    delta: float,
    q: float,
    mask: Optional[np.ndarray] = None,
) -> CellFlags:
    """Flag cell (i, j) when it takes part in more flagged pairs than c_ij."""
    counts, thresholds = pair_thresholds(J, flags, delta, q, mask)
    hits = np.argwhere((counts > thresholds) & (flags.state == CLEAN))
    LOG.info("Cell-flag stage: %d cells flagged from %d flagged pairs", len(hits), len(J))
    return flags.flag_cells(((int(i), int(j)) for i, j in hits), ORIGIN_BIVARIATE)


def pvariate_stage(m: DataMatrix, cfg: FilterConfig, flags: CellFlags) -> Tuple[CellFlags, FilterOutcome]:
    out = tuple_filter(m, cfg, flags.usable(m), range(m.p), "pvariate")
    LOG.info("P-variate stage: %d rows flagged", out.n0)
    return flags.flag_rows(out.flagged, ORIGIN_PVARIATE), out


# ---------------------------- report ----------------------------

@dataclass
class PipelineReport:
    columns: Tuple[str, ...]
    config: FilterConfig
    flags: CellFlags
    pairs: PairFlagSet
    outcomes: Dict[str, List[FilterOutcome]] = field(default_factory=dict)
    pair_counts: Optional[np.ndarray] = None
    thresholds: Optional[np.ndarray] = None
    dims: Tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.flags.shape[0]

    @property
    def p(self) -> int:
        return self.flags.shape[1]

    @property
    def cell_count(self) -> int:
        return self.flags.cell_count()

    @property
    def case_count(self) -> int:
        return self.flags.case_count()

    def filtered(self, m: DataMatrix) -> DataMatrix:
        """The data with every flagged cell turned into a missing value."""
        return m.with_mask(self.flags.state == CLEAN)

    def to_dict(self) -> Dict[str, Any]:
        cols = self.columns
        out: Dict[str, Any] = {
            "schema_version": REPORT_VERSION,
            "method": self.config.label if not self.dims else f"{self.config.method.upper()}-SEQ",
            "scatter_estimator": self.config.estimator,
            # outputs are identical for any thread count
            "config": {k: v for k, v in self.config.to_dict().items() if k != "threads"},
            "n": self.n,
            "p": self.p,
            "columns": list(cols),
            "counts": {
                "cell_flagged": self.cell_count,
                "case_flagged_rows": self.case_count,
                "filtered_cells": int((self.flags.state != CLEAN).sum()),
                "flagged_pairs": len(self.pairs),
            },
            "stages": {name: [o.to_dict(cols) for o in outs] for name, outs in self.outcomes.items()},
            "pairs": [{"row": i, "columns": [cols[j], cols[k]]} for i, j, k in self.pairs.sorted()],
            "flagged_cells": [
                {"row": i, "column": cols[j], "stage": origin_label(int(self.flags.origin[i, j]))}
                for i, j in self.flags.flagged_cells()
            ],
            "flagged_rows": [
                {"row": i, "stage": origin_label(int(self.flags.origin[i, 0]))} for i in self.flags.flagged_rows()
            ],
        }
        if self.pair_counts is not None and self.thresholds is not None:
            rows, js = np.nonzero(self.pair_counts)
            out["cell_thresholds"] = [
                {
                    "row": int(i),
                    "column": cols[j],
                    "m": int(self.pair_counts[i, j]),
                    "c": int(self.thresholds[i, j]),
                    "flagged": bool(self.pair_counts[i, j] > self.thresholds[i, j]),
                }
                for i, j in zip(rows, js)
            ]
        if self.dims:
            out["dims"] = list(self.dims)
        return out


# ---------------------------- drivers ----------------------------

def run_pipeline(m: DataMatrix, cfg: FilterConfig) -> PipelineReport:
    """Run the configured stages in dimension order; bivariate is followed by cell flagging."""
    flags = CellFlags.empty(m.n, m.p)
    J = PairFlagSet(m.n, m.p)
    report = PipelineReport(columns=m.columns, config=cfg, flags=flags, pairs=J)
    LOG.info("Running %s on n=%d p=%d (seed=%d, threads=%d)", cfg.label, m.n, m.p, cfg.seed, cfg.threads)

    if "univariate" in cfg.stages:
        flags, outs = univariate_stage(m, cfg, flags)
        report.outcomes["univariate"] = outs
    if "bivariate" in cfg.stages and m.p >= 2:
        J, outs = bivariate_stage(m, cfg, flags)
        report.outcomes["bivariate"] = outs
        report.pair_counts, report.thresholds = pair_thresholds(J, flags, cfg.delta, cfg.binom_q, m.mask)
        flags = cell_flag_stage(J, flags, cfg.delta, cfg.binom_q, m.mask)
    if "pvariate" in cfg.stages:
        flags, out = pvariate_stage(m, cfg, flags)
        report.outcomes["pvariate"] = [out]

    report.flags = flags
    report.pairs = J
    LOG.info("%s done: %d cells and %d rows flagged", cfg.label, report.cell_count, report.case_count)
    return report


def _check_dims(dims: Sequence[int], p: int, cfg: FilterConfig) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ConfigError("dims must not be empty")
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise ConfigError(f"dims must be strictly increasing, got {list(dims)}")
    if dims[0] < 1 or dims[-1] > p:
        raise ConfigError(f"dims must lie in [1, {p}], got {list(dims)}")
    for d in dims:
        if comb(p, d) > cfg.max_tuples:
            raise ConfigError(f"{comb(p, d)} column tuples of size {d} exceed max_tuples={cfg.max_tuples}")
    return dims


def sequence_filter(m: DataMatrix, dims: Sequence[int], cfg: FilterConfig) -> PipelineReport:
    """Filters of increasing dimension, each turning its flagged tuples into missing cells.

    A flagged d-tuple (1 < d < p) marks all d of its cells; the d = p level flags
    whole rows. No binomial consolidation is applied; 2-tuples are still kept in
    the report's pair set.
    """
    dims = _check_dims(dims, m.p, cfg)
    flags = CellFlags.empty(m.n, m.p)
    J = PairFlagSet(m.n, m.p)
    report = PipelineReport(columns=m.columns, config=cfg, flags=flags, pairs=J, dims=dims)

    for d in dims:
        stage = f"sequence-{d}"
        origin = SEQUENCE_BASE + d
        usable = flags.usable(m)
        tuples = list(combinations(range(m.p), d))
        outs = pmap(lambda cols: tuple_filter(m, cfg, usable, cols, stage), tuples, cfg.threads)
        report.outcomes[stage] = outs
        if d == 1:
            flags = flags.flag_cells(((i, o.columns[0]) for o in outs for i in o.flagged), origin)
        elif d == m.p:
            flags = flags.flag_rows([i for o in outs for i in o.flagged], origin)
        else:
            flags = flags.flag_cells(((i, c) for o in outs for i in o.flagged for c in o.columns), origin)
        if d == 2:
            J = J.union((i, o.columns[0], o.columns[1]) for o in outs for i in o.flagged)
        LOG.info("Sequence level d=%d: %d tuples, %d flags", d, len(tuples), sum(o.n0 for o in outs))

    report.flags = flags
    report.pairs = J
    return report
