# depthfilter/filters/core.py
# The d-variate depth filters. Both compare the sample against a reference on its
# low-depth region and flag the floor(n * d_n) least central observations.

from __future__ import annotations
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..depth.elliptical import LocationScatter, mahalanobis_sq
from ..depth.halfspace import self_depths
from ..reference.distributions import DepthRegionSpec, ReferenceDistribution, delta_cdf, delta_quantile
from ..utils.log import get_logger

LOG = get_logger(__name__)

# n * d_n is an integer up to rounding when depths are multiples of 1/n
_FLOOR_SLACK = 1e-9


@dataclass(frozen=True)
class FilterOutcome:
    """One filter invocation: flagged proportion d_n, count n0 and who was flagged.

    ``flagged`` holds sample indices until a stage maps them to data rows with
    ``at_rows``; ``columns`` names the variables the filter looked at.
    """

    d_n: float
    n0: int
    flagged: Tuple[int, ...] = ()
    n: int = 0
    stage: str = ""
    columns: Tuple[int, ...] = ()
    skipped: bool = False
    reason: str = ""

    def __post_init__(self) -> None:
        if len(self.flagged) != self.n0:
            raise ValueError(f"{len(self.flagged)} flagged indices for n0={self.n0}")

    @classmethod
    def skip(cls, reason: str, stage: str = "", columns: Sequence[int] = (), n: int = 0) -> "FilterOutcome":
        return cls(d_n=0.0, n0=0, n=n, stage=stage, columns=tuple(columns), skipped=True, reason=reason)

    def at_rows(self, rows: np.ndarray, stage: str, columns: Sequence[int]) -> "FilterOutcome":
        mapped = tuple(int(rows[i]) for i in self.flagged)
        return replace(self, flagged=mapped, stage=stage, columns=tuple(int(c) for c in columns))

    def to_dict(self, names: Sequence[str] = ()) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "stage": self.stage,
            "columns": [names[c] if names else c for c in self.columns],
            "n": self.n,
            "d_n": self.d_n,
            "n0": self.n0,
            "flagged": sorted(self.flagged),
            "skipped": self.skipped,
        }
        if self.reason:
            out["reason"] = self.reason
        return out


def flag_count(n: int, d_n: float) -> int:
    """floor(n * d_n), never more than ceil(n / 2)."""
    return min(int(math.floor(n * d_n + _FLOOR_SLACK)), (n + 1) // 2)


def _points(sample: np.ndarray) -> np.ndarray:
    S = np.asarray(sample, dtype=float)
    return S[:, None] if S.ndim == 1 else S


def hs_filter(
    sample: np.ndarray,
    ref: ReferenceDistribution,
    spec: DepthRegionSpec,
    directions: Optional[np.ndarray] = None,
    sample_depths: Optional[np.ndarray] = None,
) -> FilterOutcome:
    """Half-space depth filter.

    d_n is the largest excess of sample depth over reference depth among sample
    points in C^beta(F); the n0 points with the smallest reference depth are
    flagged, ties going to the larger Mahalanobis distance and then the lower index.
    ``directions`` is required for d >= 3 unless ``sample_depths`` is given.
    """
    S = _points(sample)
    n = S.shape[0]
    if n == 0:
        return FilterOutcome.skip("empty sample")
    sd = self_depths(S, directions) if sample_depths is None else np.asarray(sample_depths, dtype=float)
    td = np.asarray(ref.theoretical_depth(S), dtype=float)
    inside = np.asarray(ref.cbeta_contains(S, spec), dtype=bool)

    d_n = 0.0
    if inside.any():
        d_n = max(0.0, float(np.max(sd[inside] - td[inside])))
    n0 = flag_count(n, d_n)
    flagged: Tuple[int, ...] = ()
    if n0 > 0:
        order = np.lexsort((np.arange(n), -ref.mahalanobis_sq(S), td))
        flagged = tuple(int(i) for i in order[:n0])
    LOG.debug("hs_filter n=%d d=%d in_region=%d d_n=%.6g n0=%d", n, S.shape[1], int(inside.sum()), d_n, n0)
    return FilterOutcome(d_n=d_n, n0=n0, flagged=flagged, n=n)


def gy_filter(
    sample: np.ndarray,
    ls: LocationScatter,
    alpha: float,
    family: str = "gaussian",
) -> FilterOutcome:
    """Gervini-Yohai filter.

    With order statistics Delta_(1) <= ... <= Delta_(n) and G the law of Delta
    under the reference (chi2_d for the Gaussian), d_n is the largest
    G(Delta_(i)) - (i - 1)/n over Delta_(i) >= G^{-1}(alpha); the n0 largest
    distances are flagged.
    """
    S = _points(sample)
    n, d = S.shape
    if n == 0:
        return FilterOutcome.skip("empty sample")
    G = delta_cdf(family, d)
    eta = delta_quantile(family, d, alpha)
    delta = np.asarray(mahalanobis_sq(S, ls), dtype=float)
    srt = np.sort(delta)
    excess = np.asarray(G(srt), dtype=float) - np.arange(n) / n
    tail = srt >= eta
    d_n = max(0.0, float(np.max(excess[tail]))) if tail.any() else 0.0
    n0 = flag_count(n, d_n)
    flagged: Tuple[int, ...] = ()
    if n0 > 0:
        order = np.lexsort((np.arange(n), -delta))
        flagged = tuple(int(i) for i in order[:n0])
    LOG.debug("gy_filter n=%d d=%d eta=%.6g d_n=%.6g n0=%d", n, d, eta, d_n, n0)
    return FilterOutcome(d_n=d_n, n0=n0, flagged=flagged, n=n)
