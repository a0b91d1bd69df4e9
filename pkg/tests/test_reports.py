from __future__ import annotations

import pandas as pd

from depthfilter.config import FilterConfig
from depthfilter.filters.stages import run_pipeline
from depthfilter.reports.templates import render_injection, render_report, render_summary, render_table, render_title


def test_render_table_keeps_full_precision_and_na():
    df = pd.DataFrame({"a": [0.1, None], "b": ["x", "y"]})
    assert render_table(df) == "a,b\n0.10000000000000001,x\nNA,y\n"


def test_render_report_from_pipeline(small_matrix):
    report = run_pipeline(small_matrix, FilterConfig(n_directions=200)).to_dict()
    text = render_report(report)
    assert text.startswith(render_title(report))
    assert f"Cell-flagged cells: {report['counts']['cell_flagged']}" in text
    assert "univariate: 3 filters" in text


def test_render_report_lists_skipped_filters():
    report = {
        "method": "HS-UBPF",
        "n": 3,
        "p": 3,
        "counts": {},
        "stages": {"pvariate": [{"stage": "pvariate", "columns": ["a", "b", "c"], "skipped": True, "reason": "3 complete rows, need 4", "n0": 0}]},
        "flagged_cells": [],
    }
    text = render_report(report)
    assert "pvariate: 0 filters, 0 flagged, 1 skipped" in text
    assert "skipped (a,b,c): 3 complete rows, need 4" in text


def test_render_summary_and_injection():
    summary = {
        "name": "tiny",
        "n_records": 4,
        "n_failed": 0,
        "max_over_k": [{"kind": "cellwise", "p": 2, "n": 20, "eps_cell": 0.1, "eps_case": 0.0, "method": "MLE", "max_avg_lrt": 0.5, "max_avg_mse": 0.01}],
    }
    text = render_summary(summary)
    assert "experiment tiny" in text
    assert "cellwise p=2 n=20 eps=0.1 MLE: LRT 0.500, MSE 0.0100" in text
    table = pd.DataFrame({"center_x": [-0.2, -0.2], "center_y": [-0.25, -0.25], "outliers": [0, 1], "gy_n0": [0.0, 1.0], "hs_n0": [0.0, 2.0]})
    inj = render_injection(table)
    assert "Center (-0.2, -0.25):" in inj
    assert " HS n0:      0   2" in inj
