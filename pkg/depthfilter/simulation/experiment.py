# depthfilter/simulation/experiment.py
# Monte Carlo grids: scenarios x methods x replicates, tidy per-replicate records,
# per-scenario averages and max-over-k summaries.
#
# Each replicate draws its data from SeedSequence([seed, scenario index, replicate])
# and every method sees the same data. Records are collected in task order, so
# tables do not depend on the number of threads.

from __future__ import annotations
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import FilterConfig, STAGES
from ..data.matrix import CASE_FLAGGED, CLEAN
from ..errors import ConfigError
from ..estimation.two_step import two_step
from ..utils.log import get_logger
from ..utils.parallel import pmap
from .metrics import lrt_divergence, precision_recall
from .scenarios import KINDS, Scenario, generate, random_correlation

LOG = get_logger(__name__)

SUMMARY_VERSION = "1.0"

METHOD_CATALOGUE: Dict[str, Optional[Dict[str, Any]]] = {
    "MLE": None,
    "GY-UF": {"method": "gy", "stages": ("univariate",)},
    "GY-UBF": {"method": "gy", "stages": ("univariate", "bivariate")},
    "GY-UBPF": {"method": "gy", "stages": STAGES},
    "HS-UF": {"method": "hs", "stages": ("univariate",)},
    "HS-UBF": {"method": "hs", "stages": ("univariate", "bivariate")},
    "HS-UBPF": {"method": "hs", "stages": STAGES},
}
DEFAULT_METHODS = ("MLE", "GY-UF", "GY-UBF", "HS-UF", "HS-UBF", "HS-UBPF")

SCENARIO_KEYS = ["scenario", "kind", "p", "n", "eps_cell", "eps_case", "k"]
REPLICATE_COLUMNS = SCENARIO_KEYS + [
    "method",
    "replicate",
    "failed",
    "sq_err",
    "lrt",
    "converged",
    "cell_flags",
    "case_flags",
    "cell_precision",
    "cell_recall",
    "row_precision",
    "row_recall",
]


def method_config(name: str, base: FilterConfig) -> Optional[FilterConfig]:
    """FilterConfig for a catalogue method; None means no filtering (plain MLE)."""
    if name not in METHOD_CATALOGUE:
        raise ConfigError(f"unknown method {name!r}; catalogue: {sorted(METHOD_CATALOGUE)}")
    preset = METHOD_CATALOGUE[name]
    return None if preset is None else base.with_overrides(**preset)


@dataclass
class ExperimentResult:
    replicates: pd.DataFrame
    aggregates: pd.DataFrame
    max_over_k: pd.DataFrame
    estimates: List[Dict[str, Any]] = field(default_factory=list, repr=False)

    def summary(self, name: str = "") -> Dict[str, Any]:
        return {
            "schema_version": SUMMARY_VERSION,
            "name": name,
            "methods": sorted(self.replicates["method"].unique().tolist()),
            "n_records": int(len(self.replicates)),
            "n_failed": int(self.replicates["failed"].sum()),
            "aggregates": self.aggregates.to_dict(orient="records"),
            "max_over_k": self.max_over_k.to_dict(orient="records"),
        }


def _task_seed(s: Scenario, si: int, r: int) -> int:
    return int(np.random.SeedSequence([s.seed, si, r, 1]).generate_state(1)[0])


def _replicate(
    task: Tuple[int, Scenario, int],
    methods: Sequence[str],
    base: FilterConfig,
) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    si, s, r = task
    rng = np.random.default_rng(np.random.SeedSequence([s.seed, si, r]))
    sample = generate(s, rng)
    cfg_base = base.with_overrides(seed=_task_seed(s, si, r), threads=1)
    truth_cells = sample.cells | sample.rows[:, None]

    records: List[Dict[str, Any]] = []
    estimates: List[Dict[str, Any]] = []
    for name in methods:
        rec: Dict[str, Any] = {**s.key(), "method": name, "replicate": r, "failed": False}
        try:
            cfg = method_config(name, cfg_base)
            report, est = two_step(sample.data, cfg or cfg_base, apply_filter=cfg is not None)
            err = est.location - s.mu0
            rec.update(sq_err=float(err @ err), lrt=lrt_divergence(est.scatter, s.sigma0), converged=est.converged)
            if report is not None:
                state = report.flags.state
                cells = precision_recall(state != CLEAN, truth_cells)
                rows = precision_recall((state == CASE_FLAGGED).any(axis=1), sample.rows)
                rec.update(
                    cell_flags=report.cell_count,
                    case_flags=report.case_count,
                    cell_precision=cells["precision"],
                    cell_recall=cells["recall"],
                    row_precision=rows["precision"],
                    row_recall=rows["recall"],
                )
            estimates.append({**s.key(), "method": name, "replicate": r, "location": est.location, "scatter": est.scatter})
        except Exception:
            LOG.exception("Replicate %d of %s failed for %s", r, s.key(), name)
            rec["failed"] = True
        records.append(rec)
    return records, estimates


def aggregate(replicates: pd.DataFrame) -> pd.DataFrame:
    keys = SCENARIO_KEYS + ["method"]
    g = replicates.groupby(keys, sort=True, dropna=False)
    return g.agg(
        replicates=("replicate", "size"),
        n_failed=("failed", "sum"),
        avg_mse=("sq_err", "mean"),
        avg_lrt=("lrt", "mean"),
        cell_precision=("cell_precision", "mean"),
        cell_recall=("cell_recall", "mean"),
        row_precision=("row_precision", "mean"),
        row_recall=("row_recall", "mean"),
    ).reset_index()


def max_over_k(aggregates: pd.DataFrame) -> pd.DataFrame:
    """Per (scenario without k, method): the largest average LRT and MSE across k."""
    keys = [c for c in SCENARIO_KEYS if c != "k"] + ["method"]
    return aggregates.groupby(keys, sort=True, dropna=False).agg(
        max_avg_lrt=("avg_lrt", "max"),
        max_avg_mse=("avg_mse", "max"),
        k_values=("k", "size"),
    ).reset_index()


def run_experiment(
    grid: Sequence[Scenario],
    methods: Sequence[str] = DEFAULT_METHODS,
    base: Optional[FilterConfig] = None,
    threads: int = 1,
) -> ExperimentResult:
    base = base or FilterConfig()
    for name in methods:
        method_config(name, base)
    tasks = [(si, s, r) for si, s in enumerate(grid) for r in range(s.replicates)]
    LOG.info("Experiment: %d scenarios, %d methods, %d replicate tasks", len(grid), len(methods), len(tasks))
    results = pmap(lambda t: _replicate(t, methods, base), tasks, threads)

    records = [rec for recs, _ in results for rec in recs]
    estimates = [e for _, ests in results for e in ests]
    df = pd.DataFrame.from_records(records).reindex(columns=REPLICATE_COLUMNS)
    df["failed"] = df["failed"].astype(bool)
    agg = aggregate(df)
    failed = int(df["failed"].sum())
    if failed:
        LOG.warning("%d of %d replicate fits failed", failed, len(df))
    return ExperimentResult(replicates=df, aggregates=agg, max_over_k=max_over_k(agg), estimates=estimates)


# ---------------------------- grids from scenario files ----------------------------

def _as_list(v: Any) -> List[Any]:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def scenarios_from_doc(doc: Dict[str, Any]) -> List[Scenario]:
    """Expand a scenario document into the cartesian grid it describes."""
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"scenario kind must be one of {KINDS}, got {kind!r}")
    seed = int(doc.get("seed", 0))
    replicates = int(doc.get("replicates", 200))
    name = str(doc.get("name", kind))
    sigma_kind = doc.get("sigma0", "identity")
    if sigma_kind not in ("identity", "random"):
        raise ConfigError(f"sigma0 must be 'identity' or 'random', got {sigma_kind!r}")

    eps_cell = _as_list(doc.get("eps_cell", 0.0))
    eps_case = _as_list(doc.get("eps_case", 0.0))
    if "eps" in doc:
        if kind == "cellwise":
            eps_cell = _as_list(doc["eps"])
        elif kind == "casewise":
            eps_case = _as_list(doc["eps"])
    if kind == "clean":
        eps_cell, eps_case, ks = [0.0], [0.0], [0.0]
    else:
        ks = _as_list(doc.get("k", 0.0))
    if kind == "cellwise":
        eps_case = [0.0]
    if kind == "casewise":
        eps_cell = [0.0]

    grid: List[Scenario] = []
    for p in _as_list(doc.get("p", 10)):
        p = int(p)
        ns = _as_list(doc["n"]) if "n" in doc else [int(f) * p for f in _as_list(doc.get("n_per_p", 10))]
        sigma0 = None
        if sigma_kind == "random":
            sigma0 = random_correlation(p, np.random.default_rng(np.random.SeedSequence([seed, p, 0])))
        for n, ec, ea, k in product(ns, eps_cell, eps_case, ks):
            grid.append(
                Scenario(
                    kind=kind, p=p, n=int(n), eps_cell=float(ec), eps_case=float(ea), k=float(k),
                    sigma0=sigma0, replicates=replicates, seed=seed, name=name,
                )
            )
    return grid


def methods_from_doc(doc: Dict[str, Any]) -> List[str]:
    methods = [str(m) for m in _as_list(doc.get("methods", list(DEFAULT_METHODS)))]
    for mname in methods:
        if mname not in METHOD_CATALOGUE:
            raise ConfigError(f"unknown method {mname!r}; catalogue: {sorted(METHOD_CATALOGUE)}")
    return methods
