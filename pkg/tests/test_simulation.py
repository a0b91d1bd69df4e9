from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from depthfilter.config import FilterConfig, load_scenario_file, preset_path
from depthfilter.errors import ConfigError
from depthfilter.simulation import (
    ContaminatedSample,
    Scenario,
    SkewNormalParams,
    contaminate_cellwise,
    gen_clean,
    generate,
    lrt_divergence,
    lrt_metric,
    max_over_k,
    method_config,
    methods_from_doc,
    mse_metric,
    outlier_direction,
    precision_recall,
    random_correlation,
    run_experiment,
    run_injection_grid,
    scenarios_from_doc,
    sn_injection_experiment,
)

SCHEMAS = Path(__file__).resolve().parent.parent / "schemas"
FAST = FilterConfig(n_directions=200, ref_sample_size=2000)


# ------------------------------ metrics ------------------------------

def test_mse_metric():
    assert mse_metric([np.zeros(3)], np.zeros(3)) == 0.0
    assert mse_metric([[1.0, 0.0]], np.zeros(2)) == 1.0
    assert mse_metric([[1.0, 0.0], [2.0, 0.0]], np.zeros(2)) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        mse_metric(np.empty((0, 2)), np.zeros(2))


def test_lrt_divergence():
    assert lrt_divergence(np.eye(3), np.eye(3)) == pytest.approx(0.0, abs=1e-12)
    assert lrt_divergence(np.array([[2.0]]), np.array([[1.0]])) == pytest.approx(0.3068528, abs=1e-7)
    assert lrt_divergence(2.0 * np.eye(2), np.eye(2)) == pytest.approx(2.0 - 2.0 * np.log(2.0))
    assert lrt_metric([np.eye(2), 2.0 * np.eye(2)], np.eye(2)) == pytest.approx(1.0 - np.log(2.0))


def test_lrt_divergence_positive_off_target(rng):
    S0 = random_correlation(4, rng)
    S = random_correlation(4, rng)
    assert lrt_divergence(S, S0) > 0.0


def test_precision_recall():
    pr = precision_recall(np.array([True, True, False]), np.array([True, False, False]))
    assert pr == {"precision": 0.5, "recall": 1.0}
    none = precision_recall(np.zeros(3, dtype=bool), np.zeros(3, dtype=bool))
    assert np.isnan(none["precision"]) and np.isnan(none["recall"])


# ------------------------------ scenarios ------------------------------

def test_random_correlation(rng):
    R = random_correlation(5, rng)
    assert np.allclose(np.diag(R), 1.0)
    assert np.allclose(R, R.T)
    assert np.all(np.linalg.eigvalsh(R) > 0)


def test_scenario_validation():
    with pytest.raises(ConfigError):
        Scenario(kind="weird", p=2, n=10)
    with pytest.raises(ConfigError):
        Scenario(kind="cellwise", p=2, n=10, eps_cell=0.6)
    with pytest.raises(ConfigError):
        Scenario(kind="clean", p=2, n=10, sigma0=2.0 * np.eye(2))
    assert np.array_equal(Scenario(kind="clean", p=3, n=10).sigma0, np.eye(3))


def test_cellwise_contaminates_exact_count(rng):
    s = Scenario(kind="cellwise", p=10, n=100, eps_cell=0.1, k=5.0)
    out = generate(s, rng)
    assert isinstance(out, ContaminatedSample)
    assert int(out.cells.sum()) == 100
    assert not out.rows.any()
    assert np.all(np.abs(out.data.values[out.cells] - 5.0) < 1.0)


def test_cellwise_respects_excluded_rows(rng):
    s = Scenario(kind="clean", p=4, n=20)
    m = gen_clean(s, rng)
    excluded = np.zeros(20, dtype=bool)
    excluded[:10] = True
    out = contaminate_cellwise(m, 0.5, 3.0, rng, exclude_rows=excluded)
    assert int(out.cells.sum()) == 20
    assert not out.cells[:10].any()


def test_casewise_rows_sit_on_the_outlier_direction(rng):
    s = Scenario(kind="casewise", p=5, n=100, eps_case=0.1, k=4.0, sigma0=random_correlation(5, rng))
    out = generate(s, rng)
    assert int(out.rows.sum()) == 10
    v = outlier_direction(s.sigma0)
    c = np.sqrt(4.0 * 15.08627246938899)  # chi2_5^{-1}(0.99)
    rows = out.data.values[out.rows]
    off = np.minimum(np.linalg.norm(rows - c * v, axis=1), np.linalg.norm(rows + c * v, axis=1))
    assert np.all(off < 1.0)


def test_outlier_direction_has_unit_mahalanobis_length(rng):
    S = random_correlation(4, rng)
    v = outlier_direction(S)
    assert v @ np.linalg.solve(S, v) == pytest.approx(1.0)
    assert np.allclose(np.linalg.norm(outlier_direction(np.eye(3))), 1.0)


def test_mixed_contamination_does_not_overlap(rng):
    s = Scenario(kind="mixed", p=6, n=100, eps_cell=0.1, eps_case=0.1, k=3.0)
    out = generate(s, rng)
    assert int(out.rows.sum()) == 10
    assert not (out.cells & out.rows[:, None]).any()
    assert int(out.cells.sum()) == int(np.floor(0.1 * 90 * 6))


def test_generation_is_seeded():
    s = Scenario(kind="mixed", p=3, n=40, eps_cell=0.1, eps_case=0.1, k=2.0)
    a = generate(s, np.random.default_rng(np.random.SeedSequence([1, 2, 3])))
    b = generate(s, np.random.default_rng(np.random.SeedSequence([1, 2, 3])))
    assert np.array_equal(a.data.values, b.data.values)
    assert np.array_equal(a.cells, b.cells)


# ------------------------------ grids ------------------------------

def test_scenarios_from_doc_expands_the_grid():
    grid = scenarios_from_doc({"kind": "cellwise", "p": [2, 3], "n_per_p": 10, "eps": [0.1, 0.2], "k": [1, 2], "replicates": 3})
    assert len(grid) == 8
    assert {s.n for s in grid} == {20, 30}
    assert all(s.eps_case == 0.0 for s in grid)
    clean = scenarios_from_doc({"kind": "clean", "p": 4, "n": [40, 80], "k": [1, 2]})
    assert [(s.n, s.k) for s in clean] == [(40, 0.0), (80, 0.0)]
    with pytest.raises(ConfigError):
        scenarios_from_doc({"kind": "sn-injection"})


def test_methods_from_doc():
    assert methods_from_doc({"methods": ["MLE", "HS-UBPF"]}) == ["MLE", "HS-UBPF"]
    with pytest.raises(ConfigError):
        methods_from_doc({"methods": ["MCD"]})
    assert method_config("MLE", FAST) is None
    assert method_config("GY-UBF", FAST).label == "GY-UBF"


@pytest.mark.parametrize("name", ["table1-desk", "table2-desk", "clean-desk", "increasing-n", "mixed-desk"])
def test_presets_expand(name):
    doc = load_scenario_file(preset_path(name))
    assert scenarios_from_doc(doc)
    assert methods_from_doc(doc)


def test_max_over_k_oracle():
    base = {"scenario": "s", "kind": "cellwise", "p": 2, "n": 20, "eps_cell": 0.1, "eps_case": 0.0, "method": "MLE"}
    agg = pd.DataFrame([
        {**base, "k": 1.0, "avg_lrt": 0.3, "avg_mse": 0.02},
        {**base, "k": 2.0, "avg_lrt": 0.7, "avg_mse": 0.01},
        {**base, "k": 3.0, "avg_lrt": 0.5, "avg_mse": 0.05},
    ])
    out = max_over_k(agg)
    assert len(out) == 1
    assert out.loc[0, "max_avg_lrt"] == 0.7
    assert out.loc[0, "max_avg_mse"] == 0.05
    assert out.loc[0, "k_values"] == 3


def test_run_experiment_small_grid():
    grid = [Scenario(kind="cellwise", p=3, n=30, eps_cell=0.1, k=k, replicates=2, seed=5, name="tiny") for k in (2.0, 6.0)]
    res = run_experiment(grid, ["MLE", "HS-UF"], FAST)
    assert len(res.replicates) == 8
    assert not res.replicates["failed"].any()
    assert len(res.aggregates) == 4
    assert len(res.max_over_k) == 2
    mle = res.replicates[res.replicates["method"] == "MLE"]
    assert mle["cell_flags"].isna().all()
    hs = res.replicates[res.replicates["method"] == "HS-UF"]
    assert (hs["case_flags"] == 0).all()

    schema = json.loads((SCHEMAS / "summary.schema.json").read_text(encoding="utf-8"))
    summary = res.summary("tiny")
    assert set(schema["required"]) <= set(summary)
    assert set(schema["properties"]["aggregates"]["items"]["required"]) <= set(summary["aggregates"][0])


def test_run_experiment_is_thread_independent():
    grid = [Scenario(kind="mixed", p=3, n=30, eps_cell=0.05, eps_case=0.1, k=4.0, replicates=3, seed=9)]
    a = run_experiment(grid, ["MLE", "GY-UBF"], FAST, threads=1)
    b = run_experiment(grid, ["MLE", "GY-UBF"], FAST, threads=3)
    pd.testing.assert_frame_equal(a.replicates, b.replicates)


def test_run_experiment_rejects_unknown_method():
    with pytest.raises(ConfigError):
        run_experiment([Scenario(kind="clean", p=2, n=10, replicates=1)], ["MCD"], FAST)


# ------------------------------ skew-normal injection ------------------------------

def test_skewnormal_params_from_dict():
    p = SkewNormalParams.from_dict({"alpha": [1, 2]})
    assert p.alpha == (1.0, 2.0)
    assert p.xi == (0.0, 0.0)


def test_injection_run_structure():
    cfg = FAST.with_overrides(seed=3)
    res = sn_injection_experiment(50, (-0.5, -0.6), 3, SkewNormalParams(), cfg)
    steps = res.steps
    assert steps["outliers"].tolist() == [0, 1, 2, 3]
    assert steps["n"].tolist() == [50, 51, 52, 53]
    assert (steps["hs_hits"] <= steps["outliers"]).all()
    assert (steps["gy_hits"] <= steps["outliers"]).all()
    assert (steps["hs_n0"] <= (steps["n"] + 1) // 2).all()
    assert res.flagged[0]["outliers"] == 0


def test_injection_is_seeded():
    cfg = FAST.with_overrides(seed=8)
    a = sn_injection_experiment(40, (-0.2, -0.25), 2, SkewNormalParams(), cfg)
    b = sn_injection_experiment(40, (-0.2, -0.25), 2, SkewNormalParams(), cfg)
    pd.testing.assert_frame_equal(a.steps, b.steps)


def test_injection_grid_table():
    res = run_injection_grid([(-0.2, -0.25), (-0.5, -0.6)], [0, 1], 40, 2, SkewNormalParams(), FAST)
    assert len(res.steps) == 2 * 2 * 3
    table = res.n0_table()
    assert len(table) == 2 * 3
    assert list(table.columns) == ["center_x", "center_y", "outliers", "gy_n0", "hs_n0"]


def test_injection_is_bivariate():
    with pytest.raises(ConfigError):
        sn_injection_experiment(40, (0.0, 0.0, 0.0), 2, SkewNormalParams(), FAST)
