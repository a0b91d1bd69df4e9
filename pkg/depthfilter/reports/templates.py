"""
Text rendering helpers for depthfilter outputs.

Public API:
  - render_title(report: dict) -> str
  - render_report(report: dict) -> str
  - render_summary(summary: dict) -> str
  - render_injection(table: DataFrame) -> str
  - render_table(df: DataFrame) -> str        (tidy CSV, %.17g floats)

The dict shapes are PipelineReport.to_dict() and ExperimentResult.summary().
Plain-text renderings go to stdout; files get the JSON/CSV forms.
"""
from __future__ import annotations
from typing import Any, Dict, List

import pandas as pd

FLOAT_FORMAT = "%.17g"


def render_title(r: Dict[str, Any]) -> str:
    return f"[depthfilter] {r.get('method', '?')} on n={r.get('n', '?')} p={r.get('p', '?')}"


def _stage_lines(r: Dict[str, Any]) -> List[str]:
    lines: List[str] = []
    for name, outs in (r.get("stages") or {}).items():
        ran = [o for o in outs if not o.get("skipped")]
        skipped = [o for o in outs if o.get("skipped")]
        flagged = sum(int(o.get("n0", 0)) for o in ran)
        val = f"{len(ran)} filters, {flagged} flagged"
        if skipped:
            val += f", {len(skipped)} skipped"
        lines.append(f"{name}: {val}")
        for o in skipped:
            cols = ",".join(str(c) for c in o.get("columns", []))
            lines.append(f"   skipped ({cols}): {o.get('reason', '')}")
    return lines


def _column_lines(r: Dict[str, Any]) -> List[str]:
    per_col: Dict[str, int] = {}
    for c in r.get("flagged_cells", []):
        per_col[c["column"]] = per_col.get(c["column"], 0) + 1
    top = sorted(per_col.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    return [f"{col}: {cnt}" for col, cnt in top]


def render_report(r: Dict[str, Any]) -> str:
    """Plain-text summary of a pipeline report: counts, stages and busiest columns."""
    counts = r.get("counts") or {}
    stages = _stage_lines(r)
    cols = _column_lines(r)

    lines: List[str] = [render_title(r)]
    est = r.get("scatter_estimator")
    if est:
        lines.append(f"Scatter estimator: {est}")
    lines.append("")
    lines.append(f"Cell-flagged cells: {counts.get('cell_flagged', 0)}")
    lines.append(f"Case-flagged rows: {counts.get('case_flagged_rows', 0)}")
    lines.append(f"Flagged pairs: {counts.get('flagged_pairs', 0)}")

    if stages:
        lines.append("")
        lines.append("Stages:")
        lines.extend([f" - {s}" for s in stages])

    if cols:
        lines.append("")
        lines.append("Most flagged columns:")
        lines.extend([f" - {c}" for c in cols])

    return "\n".join(lines) + "\n"


def render_summary(s: Dict[str, Any]) -> str:
    """Max-over-k table, one line per scenario and method."""
    lines: List[str] = [f"[depthfilter] experiment {s.get('name', '')}".rstrip()]
    lines.append(f"Records: {s.get('n_records', 0)} (failed: {s.get('n_failed', 0)})")
    rows = s.get("max_over_k") or []
    if rows:
        lines.append("")
        lines.append("Max over k of average LRT / MSE:")
        for row in rows:
            eps = row.get("eps_cell") or row.get("eps_case") or 0.0
            lines.append(
                f" - {row.get('kind')} p={row.get('p')} n={row.get('n')} eps={eps:g} "
                f"{row.get('method')}: LRT {row.get('max_avg_lrt', float('nan')):.3f}, "
                f"MSE {row.get('max_avg_mse', float('nan')):.4f}"
            )
    return "\n".join(lines) + "\n"


def render_injection(table: pd.DataFrame) -> str:
    """n0 after each added outlier, one block per outlier center."""
    lines: List[str] = ["[depthfilter] skew-normal outlier injection (median n0)"]
    for (cx, cy), grp in table.groupby(["center_x", "center_y"], sort=True):
        grp = grp.sort_values("outliers")
        lines.append("")
        lines.append(f"Center ({cx:g}, {cy:g}):")
        lines.append(" outliers: " + " ".join(f"{int(v):>3d}" for v in grp["outliers"]))
        lines.append(" GY n0:    " + " ".join(f"{v:>3g}" for v in grp["gy_n0"]))
        lines.append(" HS n0:    " + " ".join(f"{v:>3g}" for v in grp["hs_n0"]))
    return "\n".join(lines) + "\n"


def render_table(df: pd.DataFrame) -> str:
    return df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="NA")
