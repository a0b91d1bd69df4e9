# depthfilter/estimation/robust.py
# Median/MAD initial estimates and the two screening rules used for exploratory
# analysis: cells beyond k scaled MADs of their column median, and rows whose
# squared Mahalanobis distance exceeds a chi-squared quantile.

from __future__ import annotations
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..data.matrix import DataMatrix
from ..depth.elliptical import LocationScatter
from ..errors import NumericalError
from ..reference.distributions import chi2_quantile
from ..utils.log import get_logger

LOG = get_logger(__name__)

MAD_SCALE = 1.4826


def median(xs: Sequence[float] | np.ndarray) -> float:
    a = np.asarray(xs, dtype=float).ravel()
    if a.size == 0:
        raise NumericalError("median of an empty sample")
    return float(np.median(a))


def mad(xs: Sequence[float] | np.ndarray, scale: float = MAD_SCALE) -> float:
    """scale * median(|x - median(x)|)."""
    a = np.asarray(xs, dtype=float).ravel()
    return scale * median(np.abs(a - median(a)))


@dataclass(frozen=True)
class MadScreen:
    marked: np.ndarray  # n x p bool
    k: float

    @property
    def cell_fraction(self) -> float:
        return float(self.marked.mean())

    @property
    def marked_rows(self) -> np.ndarray:
        return np.flatnonzero(self.marked.any(axis=1))

    @property
    def row_fraction(self) -> float:
        return float(self.marked.any(axis=1).mean())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "marked_cells": int(self.marked.sum()),
            "cell_fraction": self.cell_fraction,
            "marked_rows": int(self.marked_rows.size),
            "row_fraction": self.row_fraction,
        }


def mad_screen(m: DataMatrix, k: float = 3.0, scale: float = MAD_SCALE) -> MadScreen:
    """Mark observed cells farther than k scaled MADs from their column median.

    Fractions are over all n*p cells and all n rows. A zero-MAD column marks nothing.
    """
    marked = np.zeros((m.n, m.p), dtype=bool)
    for j in range(m.p):
        rows, x = m.observed(j)
        if x.size == 0:
            continue
        s = mad(x, scale)
        if s == 0.0:
            LOG.warning("Column %s has zero MAD; not screened.", m.columns[j])
            continue
        marked[rows, j] = np.abs(x - median(x)) > k * s
    return MadScreen(marked=marked, k=k)


@dataclass(frozen=True)
class DistanceScreen:
    distances: np.ndarray  # squared Mahalanobis on observed coordinates
    cutoffs: np.ndarray
    exceeds: np.ndarray
    q: float

    def hits(self, rows: Optional[Sequence[int]] = None) -> int:
        if rows is None:
            return int(self.exceeds.sum())
        return int(self.exceeds[np.asarray(rows, dtype=int)].sum())


def chi2_screen(m: DataMatrix, ls: LocationScatter, q: float = 0.9999) -> DistanceScreen:
    """Rows whose distance on their observed coordinates exceeds chi2_{p_i}^{-1}(q).

    p_i is the number of observed cells in row i; rows with none get distance 0.
    """
    if ls.dim != m.p:
        raise NumericalError(f"estimates have dimension {ls.dim}, data has {m.p} columns")
    delta = np.zeros(m.n)
    cut = np.full(m.n, np.inf)
    patterns, inverse = np.unique(m.mask, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    quantiles: Dict[int, float] = {}
    for g, pat in enumerate(patterns):
        rows = np.flatnonzero(inverse == g)
        obs = np.flatnonzero(pat)
        if obs.size == 0:
            continue
        sub = LocationScatter(ls.location[obs], ls.scatter[np.ix_(obs, obs)])
        z = sub.standardize(m.values[np.ix_(rows, obs)])
        delta[rows] = np.einsum("ij,ij->i", z, z)
        if obs.size not in quantiles:
            quantiles[obs.size] = chi2_quantile(int(obs.size), q)
        cut[rows] = quantiles[obs.size]
    return DistanceScreen(distances=delta, cutoffs=cut, exceeds=delta > cut, q=q)
