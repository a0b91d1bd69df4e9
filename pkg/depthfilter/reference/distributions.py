# depthfilter/reference/distributions.py
# Reference distributions F for depth filters: Gaussian, Student-t(5),
# skew-normal and an empirical large-sample approximation.
#
# Each family is a class with the same surface (the way each news source gets its
# own watcher class): sample(), theoretical_depth(), region(beta),
# cbeta_contains(), mahalanobis_sq(). Elliptical families add marginal_cdf() and
# have closed forms; sampled families approximate depth with random Tukey depth
# against an embedded reference sample drawn once at construction.

from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterator, Optional, Tuple

import numpy as np
from scipy import optimize, special, stats

from ..depth.elliptical import LocationScatter, hs_depth_elliptical, mahalanobis_sq
from ..depth.halfspace import (
    DEFAULT_DIRECTIONS,
    direction_batch,
    hs_depths_1d,
    random_tukey_self_depths,
)
from ..errors import ConfigError, NumericalError, UnsupportedFamilyError
from ..utils.log import get_logger

LOG = get_logger(__name__)

STUDENT_T_DF = 5
DEFAULT_REF_SAMPLE = 100_000
MIN_REF_SAMPLE = 1_000
# Up to this many (M x directions) cells the full sorted projections are kept.
_PRECOMPUTE_CELLS = 25_000_000
# Larger references keep this share of each direction's draws exactly at both ends.
TAIL_FRACTION = 0.02
_GRID_SAMPLE = 16_384
_GRID_POINTS = 513
_BLOCK_CELLS = 4_000_000

FAMILIES = ("gaussian", "t5", "skewnormal", "empirical")


# ------------------------------ chi-squared ------------------------------

def chi2_cdf(x: np.ndarray | float, d: int) -> np.ndarray | float:
    """Regularized lower incomplete gamma P(d/2, x/2)."""
    return special.gammainc(0.5 * d, 0.5 * np.maximum(x, 0.0))


def chi2_quantile(d: int, q: float) -> float:
    """(chi2_d)^{-1}(q) by bracketing and Brent inversion of chi2_cdf."""
    if d < 1:
        raise ConfigError(f"degrees of freedom must be >= 1, got {d}")
    if not 0.0 < q < 1.0:
        raise ConfigError(f"quantile order must be in (0, 1), got {q}")
    hi = max(1.0, 2.0 * d)
    while chi2_cdf(hi, d) < q:
        hi *= 2.0
    return float(optimize.brentq(lambda x: chi2_cdf(x, d) - q, 0.0, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500))


def delta_cdf(family: str, d: int) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of the squared Mahalanobis distance under an elliptical family of dimension d."""
    if family == "t5":
        return lambda x: stats.f.cdf(np.asarray(x, dtype=float) / d, d, STUDENT_T_DF)
    if family in ("gaussian", "empirical"):
        return lambda x: chi2_cdf(np.asarray(x, dtype=float), d)
    raise UnsupportedFamilyError(f"no closed-form distance law for the {family!r} family")


def delta_quantile(family: str, d: int, q: float) -> float:
    if family == "t5":
        return float(d * stats.f.ppf(q, d, STUDENT_T_DF))
    if family in ("gaussian", "empirical"):
        return chi2_quantile(d, q)
    raise UnsupportedFamilyError(f"no closed-form distance law for the {family!r} family")


# ------------------------------ skew-normal moments ------------------------------

def _sn_delta(Omega: np.ndarray, alpha: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    omega = np.sqrt(np.diag(Omega))
    Omega_bar = Omega / np.outer(omega, omega)
    Oa = Omega_bar @ alpha
    delta = Oa / np.sqrt(1.0 + alpha @ Oa)
    return omega, Omega_bar, delta


def sn_mean_cov(xi: np.ndarray, Omega: np.ndarray, alpha: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mean xi + omega nu and covariance Omega - omega nu nu' omega of SN_d(xi, Omega, alpha)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    Omega = np.atleast_2d(np.asarray(Omega, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    try:
        np.linalg.cholesky(Omega)
    except np.linalg.LinAlgError:
        raise NumericalError("skew-normal Omega is not positive definite") from None
    omega, _, delta = _sn_delta(Omega, alpha)
    nu = np.sqrt(2.0 / np.pi) * delta
    mean = xi + omega * nu
    cov = Omega - np.outer(omega * nu, omega * nu)
    return mean, 0.5 * (cov + cov.T)


# ------------------------------ region spec ------------------------------

@dataclass(frozen=True)
class DepthRegionSpec:
    """C^beta(F) = {x : depth(x; F) <= eta_beta}; ellipticals also carry the Delta cutoff."""

    beta: float
    eta_beta: float
    delta_cutoff: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"beta must be in (0, 1), got {self.beta}")
        if self.eta_beta < 0.0:
            raise ConfigError(f"eta_beta must be >= 0, got {self.eta_beta}")


# ------------------------------ base ------------------------------

class ReferenceDistribution(ABC):
    family: str = ""
    elliptical: bool = False

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @abstractmethod
    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def theoretical_depth(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def region(self, beta: float) -> DepthRegionSpec: ...

    @abstractmethod
    def mean_cov(self) -> LocationScatter: ...

    def cbeta_contains(self, x: np.ndarray, spec: DepthRegionSpec) -> np.ndarray:
        return np.asarray(self.theoretical_depth(x)) <= spec.eta_beta

    def mahalanobis_sq(self, x: np.ndarray) -> np.ndarray:
        """Squared distance under the family's mean and covariance (flag tie-breaking)."""
        return np.asarray(mahalanobis_sq(np.asarray(x, dtype=float).reshape(-1, self.dim), self.mean_cov()))

    def describe(self) -> Dict[str, object]:
        return {"family": self.family, "dim": self.dim}


# ------------------------------ elliptical families ------------------------------

class _EllipticalReference(ReferenceDistribution):
    elliptical = True

    def __init__(self, ls: LocationScatter):
        self.location_scatter = ls

    @property
    def dim(self) -> int:
        return self.location_scatter.dim

    @abstractmethod
    def marginal_cdf(self, t: np.ndarray | float) -> np.ndarray | float: ...

    @abstractmethod
    def distance_cutoff(self, beta: float) -> float:
        """beta-quantile of Delta under the family's own law."""

    def theoretical_depth(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        return np.asarray(hs_depth_elliptical(x, self))

    def region(self, beta: float) -> DepthRegionSpec:
        cut = self.distance_cutoff(beta)
        eta = float(1.0 - self.marginal_cdf(np.sqrt(cut)))
        return DepthRegionSpec(beta=beta, eta_beta=eta, delta_cutoff=cut)

    def cbeta_contains(self, x: np.ndarray, spec: DepthRegionSpec) -> np.ndarray:
        delta = np.asarray(mahalanobis_sq(np.asarray(x, dtype=float).reshape(-1, self.dim), self.location_scatter))
        return delta >= spec.delta_cutoff

    def mean_cov(self) -> LocationScatter:
        return self.location_scatter

    def mahalanobis_sq(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(mahalanobis_sq(np.asarray(x, dtype=float).reshape(-1, self.dim), self.location_scatter))

    def describe(self) -> Dict[str, object]:
        return {
            "family": self.family,
            "dim": self.dim,
            "location": self.location_scatter.location,
            "scatter": self.location_scatter.scatter,
        }


class GaussianReference(_EllipticalReference):
    family = "gaussian"

    def marginal_cdf(self, t):
        return stats.norm.cdf(t)

    def distance_cutoff(self, beta: float) -> float:
        return delta_quantile(self.family, self.dim, beta)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return self.location_scatter.location + z @ self.location_scatter.cholesky.T


class StudentT5Reference(_EllipticalReference):
    """Multivariate t with 5 degrees of freedom; ``scatter`` is the scale matrix."""

    family = "t5"
    df = STUDENT_T_DF

    def marginal_cdf(self, t):
        return stats.t.cdf(t, self.df)

    def distance_cutoff(self, beta: float) -> float:
        # Delta / d ~ F(d, nu) under the t law
        return delta_quantile(self.family, self.dim, beta)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        w = rng.chisquare(self.df, size=n) / self.df
        return self.location_scatter.location + (z @ self.location_scatter.cholesky.T) / np.sqrt(w)[:, None]


# ------------------------------ sampled families ------------------------------

class _SampledReference(ReferenceDistribution):
    """Depth approximated against an embedded reference sample with a fixed direction set.

    Projections are sorted once, at construction. While M x directions stays
    under ``_PRECOMPUTE_CELLS`` all of them are kept and every depth is the exact
    random Tukey depth against the draws. Past that, each direction keeps its
    lowest and highest ``tail`` draws (``TAIL_FRACTION`` of M): a depth below
    tail / M is still exact, which covers C^beta and eta_beta for beta up to
    1 - TAIL_FRACTION, and deeper points are read off a quantile grid of the
    first ``_GRID_SAMPLE`` draws.
    """

    def __init__(self, draws: np.ndarray, n_directions: int, seed: int, context: Tuple[int, ...] = ()):
        draws = np.asarray(draws, dtype=float)
        if draws.ndim == 1:
            draws = draws[:, None]
        if draws.shape[0] < MIN_REF_SAMPLE:
            raise ConfigError(f"reference sample needs at least {MIN_REF_SAMPLE} points, got {draws.shape[0]}")
        if n_directions < 1:
            raise ConfigError(f"n_directions must be >= 1, got {n_directions}")
        self.draws = draws
        self.seed = int(seed)
        M, d = draws.shape
        self.directions = np.array([[1.0]]) if d == 1 else direction_batch(d, n_directions, self.seed, *context, 1)
        self._sorted: Optional[np.ndarray] = None
        self._self_depths: Optional[np.ndarray] = None
        self.tail = M
        if d > 1:
            if M * self.directions.shape[0] <= _PRECOMPUTE_CELLS:
                self._sorted = np.sort(draws @ self.directions.T, axis=0)
            else:
                self.tail = int(np.ceil(TAIL_FRACTION * M))
                self._build_tails()
                self._build_grid()
        mu = draws.mean(axis=0)
        cov = np.atleast_2d(np.cov(draws, rowvar=False, bias=True))
        self._moments = LocationScatter(mu, cov)
        self._region = lru_cache(maxsize=8)(self._compute_region)

    @property
    def dim(self) -> int:
        return self.draws.shape[1]

    @property
    def size(self) -> int:
        return self.draws.shape[0]

    def _row_blocks(self, points: np.ndarray) -> Iterator[Tuple[int, np.ndarray]]:
        """(start, projections) for row blocks of ``points`` sized to _BLOCK_CELLS."""
        step = max(1, _BLOCK_CELLS // self.directions.shape[0])
        for start in range(0, points.shape[0], step):
            yield start, points[start:start + step] @ self.directions.T

    def _build_tails(self) -> None:
        """Lowest tail + 1 projections per direction, for x and for -x, plus exact tail counts of the draws."""
        M, K, T = self.size, self.directions.shape[0], self.tail
        self._lo = np.empty((T + 1, K))
        self._hi = np.empty((T + 1, K))
        # M + 1 marks a draw outside every stored tail
        counts = np.full(M, M + 1, dtype=np.int64)
        step = max(1, _BLOCK_CELLS // M)
        for start in range(0, K, step):
            proj = self.draws @ self.directions[start:start + step].T
            for side, store in ((proj, self._lo), (-proj, self._hi)):
                idx = np.argpartition(side, T, axis=0)[: T + 1]
                vals = np.take_along_axis(side, idx, axis=0)
                order = np.argsort(vals, axis=0, kind="stable")
                vals = np.take_along_axis(vals, order, axis=0)
                idx = np.take_along_axis(idx, order, axis=0)
                store[:, start:start + side.shape[1]] = vals
                for c in range(side.shape[1]):
                    inner = vals[:T, c] < vals[T, c]
                    n_le = np.searchsorted(vals[:, c], vals[:T, c][inner], side="right")
                    np.minimum.at(counts, idx[:T, c][inner], n_le)
        self._tail_counts = counts
        LOG.debug("%s reference: kept %d of %d projections at each end of %d directions", self.family, T, M, K)

    def _build_grid(self) -> None:
        sub = self.draws[: min(self.size, _GRID_SAMPLE)]
        ranks = np.linspace(0, sub.shape[0] - 1, _GRID_POINTS).round().astype(int)
        K = self.directions.shape[0]
        self._grid = np.empty((ranks.size, K))
        step = max(1, _BLOCK_CELLS // sub.shape[0])
        for start in range(0, K, step):
            self._grid[:, start:start + step] = np.sort(sub @ self.directions[start:start + step].T, axis=0)[ranks]
        self._grid_p = ranks / (sub.shape[0] - 1)

    def _tail_counts_of(self, pq: np.ndarray) -> np.ndarray:
        """Exact min(#<=, #>=) over directions where a stored tail decides it; M + 1 elsewhere."""
        T, miss = self.tail, self.size + 1
        best = np.full(pq.shape[0], miss, dtype=np.int64)
        for c in range(pq.shape[1]):
            for store, v in ((self._lo, pq[:, c]), (self._hi, -pq[:, c])):
                col = store[:, c]
                n = np.searchsorted(col, v, side="right")
                np.minimum(best, np.where(v < col[T], n, miss), out=best)
        return best

    def _grid_counts_of(self, pq: np.ndarray) -> np.ndarray:
        best = np.full(pq.shape[0], float(self.size))
        for c in range(pq.shape[1]):
            F = np.interp(pq[:, c], self._grid[:, c], self._grid_p)
            np.minimum(best, self.size * np.minimum(F, 1.0 - F), out=best)
        return np.maximum(best, self.tail + 1.0)

    def _compressed_depths(self, Q: np.ndarray) -> np.ndarray:
        out = np.empty(Q.shape[0])
        for start, pq in self._row_blocks(Q):
            counts = self._tail_counts_of(pq).astype(float)
            mid = counts > self.size
            if mid.any():
                counts[mid] = self._grid_counts_of(pq[mid])
            out[start:start + counts.size] = counts / self.size
        return out

    def theoretical_depth(self, x: np.ndarray) -> np.ndarray:
        Q = np.asarray(x, dtype=float).reshape(-1, self.dim)
        if self.dim == 1:
            return hs_depths_1d(Q[:, 0], self.draws[:, 0])
        if self._sorted is None:
            return self._compressed_depths(Q)
        M = self.size
        best = np.full(Q.shape[0], M, dtype=np.int64)
        pq = Q @ self.directions.T
        for c in range(self.directions.shape[0]):
            col = self._sorted[:, c]
            le = np.searchsorted(col, pq[:, c], side="right")
            ge = M - np.searchsorted(col, pq[:, c], side="left")
            np.minimum(best, np.minimum(le, ge), out=best)
        return best / M

    def reference_depths(self) -> np.ndarray:
        """Depth of every reference draw under the reference's own law."""
        if self.dim == 1:
            return hs_depths_1d(self.draws[:, 0], self.draws[:, 0])
        if self._self_depths is None:
            if self._sorted is not None:
                self._self_depths = random_tukey_self_depths(self.draws, self.directions)
            else:
                counts = self._tail_counts.astype(float)
                mid = np.flatnonzero(counts > self.size)
                for start, pq in self._row_blocks(self.draws[mid]):
                    counts[mid[start:start + pq.shape[0]]] = self._grid_counts_of(pq)
                self._self_depths = counts / self.size
        return self._self_depths

    def _compute_region(self, beta: float) -> DepthRegionSpec:
        q = 1.0 - beta
        exact = np.sort(self._tail_counts[self._tail_counts <= self.size]) if self._sorted is None and self.dim > 1 else None
        pos = q * (self.size - 1)
        if exact is not None and int(np.ceil(pos)) < exact.size:
            # the smallest depths are all exact; same interpolation as np.quantile
            eta = float(np.interp(pos, np.arange(exact.size), exact)) / self.size
        else:
            eta = float(np.quantile(self.reference_depths(), q))
        LOG.debug("%s reference: eta_beta=%.6g at beta=%.4f (M=%d)", self.family, eta, beta, self.size)
        return DepthRegionSpec(beta=beta, eta_beta=eta)

    def region(self, beta: float) -> DepthRegionSpec:
        return self._region(float(beta))

    def mean_cov(self) -> LocationScatter:
        return self._moments

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.size, size=n)
        return self.draws[idx].copy()

    def describe(self) -> Dict[str, object]:
        return {
            "family": self.family,
            "dim": self.dim,
            "reference_size": self.size,
            "directions": int(self.directions.shape[0]),
            "exact_tail": self.tail,
            "seed": self.seed,
        }


class EmpiricalReference(_SampledReference):
    """Large-sample approximation of any law from M of its draws."""

    family = "empirical"


class SkewNormalReference(_SampledReference):
    """SN_d(xi, Omega, alpha) with depth approximated from M of its own draws."""

    family = "skewnormal"

    def __init__(
        self,
        xi: np.ndarray,
        Omega: np.ndarray,
        alpha: np.ndarray,
        ref_sample_size: int = DEFAULT_REF_SAMPLE,
        n_directions: int = DEFAULT_DIRECTIONS,
        seed: int = 0,
    ):
        self.xi = np.atleast_1d(np.asarray(xi, dtype=float))
        self.Omega = np.atleast_2d(np.asarray(Omega, dtype=float))
        self.alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        if not (self.xi.shape[0] == self.alpha.shape[0] == self.Omega.shape[0] == self.Omega.shape[1]):
            raise ConfigError("skew-normal xi, Omega and alpha dimensions disagree")
        mean, cov = sn_mean_cov(self.xi, self.Omega, self.alpha)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
        draws = self.draw(ref_sample_size, rng)
        super().__init__(draws, n_directions, seed)
        self._moments = LocationScatter(mean, cov)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Fresh draws by conditioning a (d+1)-variate normal on a positive first coordinate."""
        omega, Omega_bar, delta = _sn_delta(self.Omega, self.alpha)
        d = self.xi.shape[0]
        big = np.empty((d + 1, d + 1))
        big[0, 0] = 1.0
        big[0, 1:] = delta
        big[1:, 0] = delta
        big[1:, 1:] = Omega_bar
        L = np.linalg.cholesky(big)
        w = rng.standard_normal((n, d + 1)) @ L.T
        z = np.where(w[:, :1] > 0.0, w[:, 1:], -w[:, 1:])
        return self.xi + z * omega

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.draw(n, rng)

    def describe(self) -> Dict[str, object]:
        out = super().describe()
        out.update({"xi": self.xi, "Omega": self.Omega, "alpha": self.alpha})
        return out


# ------------------------------ module API ------------------------------

def marginal_cdf(ref: ReferenceDistribution, t: np.ndarray | float) -> np.ndarray | float:
    if not getattr(ref, "elliptical", False):
        raise UnsupportedFamilyError(f"{ref.family} reference has no standardized marginal")
    return ref.marginal_cdf(t)  # type: ignore[attr-defined]


def theoretical_depth(x: np.ndarray, ref: ReferenceDistribution) -> np.ndarray:
    return ref.theoretical_depth(x)


def cbeta_contains(x: np.ndarray, ref: ReferenceDistribution, spec: DepthRegionSpec) -> np.ndarray:
    return ref.cbeta_contains(x, spec)


def sample(ref: ReferenceDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ConfigError(f"sample size must be >= 1, got {n}")
    return ref.sample(n, rng)


def build_reference(
    family: str,
    ls: LocationScatter,
    ref_sample_size: int = DEFAULT_REF_SAMPLE,
    n_directions: int = DEFAULT_DIRECTIONS,
    seed: int = 0,
    context: Tuple[int, ...] = (),
) -> ReferenceDistribution:
    """Reference at estimated (location, scatter), as the pipeline stages need it.

    ``context`` keys the empirical family's draws and directions to one filter task.
    """
    if family == "gaussian":
        return GaussianReference(ls)
    if family == "t5":
        return StudentT5Reference(ls)
    if family == "empirical":
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), *context, 0]))
        draws = GaussianReference(ls).sample(ref_sample_size, rng)
        return EmpiricalReference(draws, n_directions, seed, context)
    if family == "skewnormal":
        raise UnsupportedFamilyError("skew-normal references need explicit (xi, Omega, alpha); not estimable here")
    raise ConfigError(f"unknown reference family {family!r}; expected one of {FAMILIES}")
