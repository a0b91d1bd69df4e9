# depthfilter/depth/elliptical.py
# Location/scatter pairs, squared Mahalanobis distances and the depths that are
# functions of them: the elliptical closed form of half-space depth, the
# Gervini-Yohai depth and the Mahalanobis depth.

from __future__ import annotations
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg

from ..errors import NumericalError, UnsupportedFamilyError

Cdf = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LocationScatter:
    """A d-vector location and a d x d symmetric positive-definite scatter."""

    location: np.ndarray
    scatter: np.ndarray

    def __post_init__(self) -> None:
        loc = np.atleast_1d(np.asarray(self.location, dtype=float))
        sc = np.atleast_2d(np.asarray(self.scatter, dtype=float))
        d = loc.shape[0]
        if sc.shape != (d, d):
            raise NumericalError(f"scatter shape {sc.shape} does not match location dimension {d}")
        scale = max(float(np.max(np.abs(sc))), np.finfo(float).tiny)
        if np.max(np.abs(sc - sc.T)) > 1e-12 * scale:
            raise NumericalError("scatter matrix is not symmetric")
        sc = 0.5 * (sc + sc.T)
        try:
            chol = linalg.cholesky(sc, lower=True)
        except linalg.LinAlgError:
            raise NumericalError("scatter matrix is not positive definite") from None
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "scatter", sc)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.location.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        return self._chol  # type: ignore[attr-defined]

    def standardize(self, x: np.ndarray) -> np.ndarray:
        """L^{-1}(x - mu) for a point (d,) or rows (n, d)."""
        x = np.asarray(x, dtype=float)
        diff = (x - self.location).T
        z = linalg.solve_triangular(self.cholesky, diff, lower=True)
        return z.T


def mahalanobis_sq(x: np.ndarray, ls: LocationScatter) -> np.ndarray | float:
    """(x - mu)' Sigma^{-1} (x - mu) for a single point or each row of an (n, d) array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if x.shape[-1] != ls.dim:
        raise NumericalError(f"point dimension {x.shape[-1]} != scatter dimension {ls.dim}")
    z = ls.standardize(np.atleast_2d(x))
    out = np.einsum("ij,ij->i", z, z)
    return float(out[0]) if single else out


def hs_depth_elliptical(x: np.ndarray, ref) -> np.ndarray | float:
    """Half-space depth under an elliptical reference: 1 - F01(sqrt(Delta_x)).

    ``ref`` must expose ``elliptical``, ``location_scatter`` and ``marginal_cdf``.
    """
    if not getattr(ref, "elliptical", False):
        raise UnsupportedFamilyError(f"{getattr(ref, 'family', ref)!s} reference has no elliptical closed form")
    delta = mahalanobis_sq(x, ref.location_scatter)
    return 1.0 - ref.marginal_cdf(np.sqrt(delta))


def gy_depth(x: np.ndarray, ls: LocationScatter, G: Cdf) -> np.ndarray | float:
    """Gervini-Yohai depth 1 - G(Delta(x))."""
    delta = mahalanobis_sq(x, ls)
    out = 1.0 - np.asarray(G(delta), dtype=float)
    return float(out) if np.ndim(out) == 0 else out


def mahalanobis_depth(x: np.ndarray, ls: LocationScatter) -> np.ndarray | float:
    return 1.0 / (1.0 + mahalanobis_sq(x, ls))
