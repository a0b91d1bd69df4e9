from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from depthfilter.data.matrix import DataMatrix, write_csv


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def gaussian_matrix(n: int, p: int, seed: int = 0, rho: float = 0.0) -> DataMatrix:
    """n x p draws from N(0, R) with R having unit diagonal and constant off-diagonal rho."""
    R = np.full((p, p), rho) + (1.0 - rho) * np.eye(p)
    g = np.random.default_rng(seed)
    x = g.standard_normal((n, p)) @ np.linalg.cholesky(R).T
    return DataMatrix.from_array(x)


@pytest.fixture
def small_matrix() -> DataMatrix:
    return gaussian_matrix(60, 3, seed=7, rho=0.5)


@pytest.fixture
def csv_file(tmp_path: Path, small_matrix: DataMatrix) -> Path:
    path = tmp_path / "data.csv"
    write_csv(small_matrix, path)
    return path


ENV_VARS = (
    "DEPTHFILTER_METHOD", "DEPTHFILTER_STAGES", "DEPTHFILTER_BETA", "DEPTHFILTER_ALPHA", "DEPTHFILTER_DELTA",
    "DEPTHFILTER_BINOM_Q", "DEPTHFILTER_DIRECTIONS", "DEPTHFILTER_REF", "DEPTHFILTER_SEED", "DEPTHFILTER_THREADS",
    "DEPTHFILTER_REF_SAMPLE_SIZE", "DEPTHFILTER_NA_TOKEN",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Start every test without DEPTHFILTER_* variables and drop any a .env load sets."""
    for var in ENV_VARS:
        monkeypatch.setenv(var, "")
        monkeypatch.delenv(var)


def halfplane_depth_oracle(x: np.ndarray, sample: np.ndarray) -> float:
    """Closed half-plane depth of x, O(n^3) and angle free.

    The count of {w : u.(w - x) >= 0} only changes when u crosses a normal of some
    s_i - x. The sum of two angularly adjacent normals lies inside each cell of that
    arrangement; when all normals are antipodal, +-(s_i - x) do.
    """
    v = np.asarray(sample, dtype=float) - np.asarray(x, dtype=float).reshape(1, 2)
    nz = v[np.any(v != 0.0, axis=1)]
    if nz.shape[0] == 0:
        return 1.0
    normals = np.vstack([np.column_stack([-nz[:, 1], nz[:, 0]]), np.column_stack([nz[:, 1], -nz[:, 0]])])
    a, b = np.triu_indices(normals.shape[0], k=1)
    cands = np.vstack([normals[a] + normals[b], nz, -nz])
    cands = cands[np.any(cands != 0.0, axis=1)]
    return float(((v @ cands.T) >= 0.0).sum(axis=0).min()) / v.shape[0]


SCHEMAS = Path(__file__).resolve().parent.parent / "schemas"


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def check_report(d: dict) -> None:
    """Assert the types and nesting report.schema.json documents for a parsed report."""
    schema = json.loads((SCHEMAS / "report.schema.json").read_text(encoding="utf-8"))
    props = schema["properties"]
    assert set(schema["required"]) <= set(d)
    assert set(d) <= set(props)

    assert d["schema_version"] == props["schema_version"]["const"]
    assert isinstance(d["method"], str) and isinstance(d["scatter_estimator"], str)
    assert isinstance(d["config"], dict)
    assert _is_int(d["n"]) and d["n"] >= 1
    assert _is_int(d["p"]) and d["p"] >= 1
    assert len(d["columns"]) == d["p"] and all(isinstance(c, str) for c in d["columns"])
    assert set(props["counts"]["required"]) <= set(d["counts"])
    assert all(_is_int(v) and v >= 0 for v in d["counts"].values())

    outcome = props["stages"]["additionalProperties"]["items"]
    for name, outs in d["stages"].items():
        assert isinstance(name, str) and isinstance(outs, list)
        for o in outs:
            assert set(outcome["required"]) <= set(o)
            assert isinstance(o["stage"], str)
            assert all(c in d["columns"] for c in o["columns"])
            assert isinstance(o["d_n"], (int, float)) and 0.0 <= o["d_n"] <= 1.0
            assert _is_int(o["n"]) and _is_int(o["n0"]) and o["n0"] >= 0
            assert len(o["flagged"]) == o["n0"]
            assert all(_is_int(i) and 0 <= i < d["n"] for i in o["flagged"])
            assert isinstance(o["skipped"], bool)
            assert isinstance(o.get("reason", ""), str)

    for key in ("pairs", "cell_thresholds", "flagged_cells", "flagged_rows"):
        assert isinstance(d.get(key, []), list)
        for item in d.get(key, []):
            assert set(props[key]["items"]["required"]) <= set(item)
            assert _is_int(item["row"]) and 0 <= item["row"] < d["n"]
    for item in d["pairs"]:
        assert len(item["columns"]) == 2 and all(c in d["columns"] for c in item["columns"])
    for item in d.get("cell_thresholds", []):
        assert item["column"] in d["columns"]
        assert _is_int(item["m"]) and _is_int(item["c"]) and isinstance(item["flagged"], bool)
    for item in d["flagged_cells"]:
        assert item["column"] in d["columns"] and isinstance(item["stage"], str)
    for item in d["flagged_rows"]:
        assert isinstance(item["stage"], str)
    if "dims" in d:
        assert all(_is_int(k) and 1 <= k <= d["p"] for k in d["dims"])
