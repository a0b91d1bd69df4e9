# depthfilter/estimation/em.py
# Gaussian maximum likelihood under arbitrary missingness (EM), and the registry
# of second-step estimators the filters and the two-step procedure look up by name.

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List

import numpy as np
from scipy import linalg

from ..data.matrix import DataMatrix
from ..errors import ConfigError, NumericalError
from ..utils.log import get_logger

LOG = get_logger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))
_RIDGE = 1e-10
_MAX_RIDGE_STEPS = 12


@dataclass(frozen=True)
class EstimatorResult:
    location: np.ndarray
    scatter: np.ndarray
    iterations: int
    converged: bool
    loglik_trace: List[float] = field(default_factory=list)
    estimator: str = "em-gaussian"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimator": self.estimator,
            "location": self.location,
            "scatter": self.scatter,
            "iterations": self.iterations,
            "converged": self.converged,
            "loglik": self.loglik_trace[-1] if self.loglik_trace else None,
            "loglik_trace": list(self.loglik_trace),
        }


Estimator = Callable[..., EstimatorResult]
ESTIMATORS: Dict[str, Estimator] = {}


def register(name: str) -> Callable[[Estimator], Estimator]:
    """Make a second-step estimator available under ``name``."""

    def deco(fn: Estimator) -> Estimator:
        if name in ESTIMATORS:
            raise ConfigError(f"estimator {name!r} already registered")
        ESTIMATORS[name] = fn
        return fn

    return deco


def get_estimator(name: str) -> Estimator:
    try:
        return ESTIMATORS[name]
    except KeyError:
        raise ConfigError(f"unknown estimator {name!r}; registered: {sorted(ESTIMATORS)}") from None


def _cho(S: np.ndarray, what: str):
    """Cholesky factor of S, nudging the diagonal by 1e-10 * trace / p while it fails."""
    ridge = _RIDGE * max(float(np.trace(S)) / S.shape[0], np.finfo(float).tiny)
    A = S
    for step in range(_MAX_RIDGE_STEPS):
        try:
            return linalg.cho_factor(A, lower=True)
        except linalg.LinAlgError:
            A = S + ridge * (10.0 ** step) * np.eye(S.shape[0])
            LOG.debug("Cholesky failed for %s; ridge %.3g added", what, ridge * (10.0 ** step))
    raise NumericalError(f"{what} is not positive definite even after regularization")


def _check_input(m: DataMatrix) -> np.ndarray:
    for j in range(m.p):
        if not m.mask[:, j].any():
            raise NumericalError(f"column {m.columns[j]!r} has no observed cells")
    rows = np.flatnonzero(m.mask.any(axis=1))
    if rows.size < m.p + 1:
        raise NumericalError(f"need at least {m.p + 1} rows with an observed cell, got {rows.size}")
    return rows


@register("em-gaussian")
def em_gaussian_missing(m: DataMatrix, tol: float = 1e-8, max_iter: int = 500) -> EstimatorResult:
    """EM for N_p(mu, Sigma) with cells missing at random.

    Rows without any observed cell are ignored. The covariance uses the 1/n
    (maximum likelihood) convention. Convergence: relative change of the
    observed-data log-likelihood below ``tol``.
    """
    rows = _check_input(m)
    X = m.values[rows]
    M = m.mask[rows]
    n, p = X.shape

    mu = np.array([X[M[:, j], j].mean() for j in range(p)])
    var = np.array([np.mean((X[M[:, j], j] - mu[j]) ** 2) for j in range(p)])
    for j in np.flatnonzero(var <= 0.0):
        raise NumericalError(f"column {m.columns[j]!r} has zero variance on its observed cells")
    S = np.diag(var)

    patterns, inverse = np.unique(M, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    groups = [(np.flatnonzero(pat), np.flatnonzero(~pat), np.flatnonzero(inverse == g)) for g, pat in enumerate(patterns)]

    trace: List[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        T1 = np.zeros(p)
        T2 = np.zeros((p, p))
        ll = 0.0
        for obs, mis, idx in groups:
            Xo = X[np.ix_(idx, obs)]
            diff = Xo - mu[obs]
            c, low = _cho(S[np.ix_(obs, obs)], "observed-block covariance")
            sol = linalg.cho_solve((c, low), diff.T).T
            logdet = 2.0 * float(np.sum(np.log(np.diag(c))))
            ll -= 0.5 * (idx.size * (obs.size * LOG_2PI + logdet) + float(np.einsum("ij,ij->", diff, sol)))

            filled = np.empty((idx.size, p))
            filled[:, obs] = Xo
            if mis.size:
                Smo = S[np.ix_(mis, obs)]
                filled[:, mis] = mu[mis] + sol @ Smo.T
                C = S[np.ix_(mis, mis)] - Smo @ linalg.cho_solve((c, low), Smo.T)
                T2[np.ix_(mis, mis)] += idx.size * C
            T1 += filled.sum(axis=0)
            T2 += filled.T @ filled

        trace.append(ll)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < tol * max(abs(trace[-2]), 1.0):
            converged = True
            break
        if it == max_iter:
            break
        mu = T1 / n
        S = T2 / n - np.outer(mu, mu)
        S = 0.5 * (S + S.T)

    if not converged:
        LOG.warning("EM stopped after %d iterations without converging (tol=%g)", it, tol)
    return EstimatorResult(location=mu, scatter=S, iterations=it, converged=converged, loglik_trace=trace)
