# depthfilter/simulation/scenarios.py
# Clean Gaussian samples and the cell-wise, case-wise and mixed contamination
# models. Generators return the contaminated data together with ground truth.

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ..data.matrix import DataMatrix
from ..errors import ConfigError
from ..reference.distributions import chi2_quantile

KINDS = ("clean", "cellwise", "casewise", "mixed")
CELL_SD = 0.1
CASE_SD = 0.1


def random_correlation(p: int, rng: np.random.Generator) -> np.ndarray:
    """A seeded correlation matrix: a Wishart-type draw rescaled to unit diagonal."""
    A = rng.standard_normal((2 * p, p))
    S = A.T @ A / (2 * p)
    d = np.sqrt(np.diag(S))
    R = S / np.outer(d, d)
    np.fill_diagonal(R, 1.0)
    return 0.5 * (R + R.T)


@dataclass(frozen=True)
class Scenario:
    kind: str
    p: int
    n: int
    eps_cell: float = 0.0
    eps_case: float = 0.0
    k: float = 0.0
    sigma0: Optional[np.ndarray] = None
    replicates: int = 200
    seed: int = 0
    name: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"scenario kind must be one of {KINDS}, got {self.kind!r}")
        if self.p < 1 or self.n < 2:
            raise ConfigError(f"need p >= 1 and n >= 2, got p={self.p} n={self.n}")
        for nm in ("eps_cell", "eps_case"):
            v = getattr(self, nm)
            if not 0.0 <= v < 0.5:
                raise ConfigError(f"{nm} must be in [0, 0.5), got {v}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        S = np.eye(self.p) if self.sigma0 is None else np.atleast_2d(np.asarray(self.sigma0, dtype=float))
        if S.shape != (self.p, self.p):
            raise ConfigError(f"sigma0 must be {self.p} x {self.p}, got {S.shape}")
        if not np.allclose(np.diag(S), 1.0, atol=1e-12):
            raise ConfigError("sigma0 must have unit diagonal")
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ConfigError("sigma0 is not positive definite") from None
        S.setflags(write=False)
        object.__setattr__(self, "sigma0", S)

    @property
    def mu0(self) -> np.ndarray:
        return np.zeros(self.p)

    def key(self) -> Dict[str, Any]:
        return {
            "scenario": self.name or self.kind,
            "kind": self.kind,
            "p": self.p,
            "n": self.n,
            "eps_cell": self.eps_cell,
            "eps_case": self.eps_case,
            "k": self.k,
        }


@dataclass(frozen=True)
class ContaminatedSample:
    """Data plus which cells and rows were replaced."""

    data: DataMatrix
    cells: np.ndarray = field(repr=False)  # n x p bool
    rows: np.ndarray = field(repr=False)  # n bool


def gen_clean(s: Scenario, rng: np.random.Generator) -> DataMatrix:
    L = np.linalg.cholesky(s.sigma0)
    x = s.mu0 + rng.standard_normal((s.n, s.p)) @ L.T
    return DataMatrix(values=x, mask=np.ones_like(x, dtype=bool))


def _clean_truth(m: DataMatrix) -> ContaminatedSample:
    return ContaminatedSample(m, np.zeros((m.n, m.p), dtype=bool), np.zeros(m.n, dtype=bool))


def contaminate_cellwise(
    m: DataMatrix,
    eps: float,
    k: float,
    rng: np.random.Generator,
    exclude_rows: Optional[np.ndarray] = None,
) -> ContaminatedSample:
    """Replace floor(eps * #eligible cells) uniformly chosen cells by N(k, 0.1^2) draws.

    Rows in ``exclude_rows`` are not eligible.
    """
    if not 0.0 <= eps < 1.0:
        raise ConfigError(f"eps must be in [0, 1), got {eps}")
    eligible = np.ones((m.n, m.p), dtype=bool)
    if exclude_rows is not None:
        eligible[np.asarray(exclude_rows, dtype=bool)] = False
    pool = np.flatnonzero(eligible.ravel())
    count = int(np.floor(eps * pool.size))
    if count == 0:
        return _clean_truth(m)
    picked = np.sort(rng.choice(pool, size=count, replace=False))
    values = m.values.copy()
    np.put(values, picked, rng.normal(k, CELL_SD, size=count))
    cells = np.zeros(m.n * m.p, dtype=bool)
    cells[picked] = True
    return ContaminatedSample(
        DataMatrix(values=values, mask=m.mask | cells.reshape(m.n, m.p), columns=m.columns),
        cells.reshape(m.n, m.p),
        np.zeros(m.n, dtype=bool),
    )


def outlier_direction(sigma0: np.ndarray) -> np.ndarray:
    """Smallest-eigenvalue eigenvector of sigma0, scaled to unit Mahalanobis length."""
    w, V = np.linalg.eigh(sigma0)
    v = V[:, int(np.argmin(w))]
    # eigh's sign is arbitrary; fix it so the direction is reproducible
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v / np.sqrt(v @ np.linalg.solve(sigma0, v))


def contaminate_casewise(
    m: DataMatrix,
    eps: float,
    k: float,
    sigma0: np.ndarray,
    rng: np.random.Generator,
) -> ContaminatedSample:
    """Replace floor(eps * n) rows by 0.5 N(c v, 0.1^2 I) + 0.5 N(-c v, 0.1^2 I), c = sqrt(k chi2_p^{-1}(0.99))."""
    if not 0.0 <= eps < 1.0:
        raise ConfigError(f"eps must be in [0, 1), got {eps}")
    count = int(np.floor(eps * m.n))
    if count == 0:
        return _clean_truth(m)
    c = np.sqrt(k * chi2_quantile(m.p, 0.99))
    v = outlier_direction(np.asarray(sigma0, dtype=float))
    picked = np.sort(rng.choice(m.n, size=count, replace=False))
    signs = rng.choice(np.array([-1.0, 1.0]), size=count)
    values = m.values.copy()
    values[picked] = signs[:, None] * c * v + CASE_SD * rng.standard_normal((count, m.p))
    rows = np.zeros(m.n, dtype=bool)
    rows[picked] = True
    mask = m.mask.copy()
    mask[picked] = True
    return ContaminatedSample(DataMatrix(values=values, mask=mask, columns=m.columns), np.zeros((m.n, m.p), dtype=bool), rows)


def contaminate_mixed(
    m: DataMatrix,
    eps_case: float,
    eps_cell: float,
    k: float,
    sigma0: np.ndarray,
    rng: np.random.Generator,
) -> ContaminatedSample:
    """Case-wise replacement first, then cell-wise contamination of the remaining rows."""
    cased = contaminate_casewise(m, eps_case, k, sigma0, rng)
    celled = contaminate_cellwise(cased.data, eps_cell, k, rng, exclude_rows=cased.rows)
    return ContaminatedSample(celled.data, celled.cells, cased.rows)


def generate(s: Scenario, rng: np.random.Generator) -> ContaminatedSample:
    """One replicate of scenario ``s``."""
    m = gen_clean(s, rng)
    if s.kind == "clean":
        return _clean_truth(m)
    if s.kind == "cellwise":
        return contaminate_cellwise(m, s.eps_cell, s.k, rng)
    if s.kind == "casewise":
        return contaminate_casewise(m, s.eps_case, s.k, s.sigma0, rng)
    return contaminate_mixed(m, s.eps_case, s.eps_cell, s.k, s.sigma0, rng)
