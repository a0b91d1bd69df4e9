# depthfilter/simulation/metrics.py
# Estimation error metrics and flag-quality scores against ground truth.

from __future__ import annotations
from typing import Dict, Iterable, Sequence

import numpy as np
from scipy import linalg

from ..errors import NumericalError


def mse_metric(estimates: Sequence[np.ndarray], mu0: np.ndarray) -> float:
    """Average of (mu_hat - mu0)'(mu_hat - mu0) over the estimates."""
    E = np.atleast_2d(np.asarray(estimates, dtype=float))
    if E.shape[0] == 0:
        raise ValueError("mse_metric needs at least one estimate")
    diff = E - np.asarray(mu0, dtype=float)
    return float(np.mean(np.einsum("ij,ij->i", diff, diff)))


def lrt_divergence(sigma: np.ndarray, sigma0: np.ndarray) -> float:
    """trace(S S0^-1) - log det(S S0^-1) - p."""
    S = np.atleast_2d(np.asarray(sigma, dtype=float))
    S0 = np.atleast_2d(np.asarray(sigma0, dtype=float))
    p = S0.shape[0]
    try:
        c0 = linalg.cho_factor(S0, lower=True)
        cs = linalg.cholesky(S, lower=True)
    except linalg.LinAlgError:
        raise NumericalError("lrt_divergence needs positive-definite matrices") from None
    tr = float(np.trace(linalg.cho_solve(c0, S)))
    logdet = 2.0 * float(np.sum(np.log(np.diag(cs)))) - 2.0 * float(np.sum(np.log(np.diag(c0[0]))))
    return tr - logdet - p


def lrt_metric(estimates: Iterable[np.ndarray], sigma0: np.ndarray) -> float:
    vals = [lrt_divergence(S, sigma0) for S in estimates]
    if not vals:
        raise ValueError("lrt_metric needs at least one estimate")
    return float(np.mean(vals))


def precision_recall(flagged: np.ndarray, truth: np.ndarray) -> Dict[str, float]:
    """Precision and recall of boolean flags; NaN where the ratio is undefined."""
    f = np.asarray(flagged, dtype=bool)
    t = np.asarray(truth, dtype=bool)
    tp = int((f & t).sum())
    nf, nt = int(f.sum()), int(t.sum())
    return {
        "precision": tp / nf if nf else float("nan"),
        "recall": tp / nt if nt else float("nan"),
    }
