# depthfilter/main.py
# Orchestrator: parse flags -> resolve config -> run the command -> write outputs
# and their manifests. Library code raises; this module maps errors to exit codes.

from __future__ import annotations
import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .config import FilterConfig, load_scenario_file, na_token_from_env, preset_path
from .data.matrix import DataMatrix, complete_rows, load_csv, write_csv
from .depth.elliptical import LocationScatter
from .depth.halfspace import DEFAULT_DIRECTIONS, direction_batch, sample_depths
from .errors import ConfigError, DataFormatError, DepthFilterError
from .estimation.em import get_estimator
from .estimation.robust import chi2_screen, mad_screen
from .estimation.two_step import two_step
from .filters.stages import run_pipeline, sequence_filter
from .reference.distributions import FAMILIES, ReferenceDistribution, build_reference
from .reports.templates import render_injection, render_report, render_summary, render_table
from .simulation.experiment import methods_from_doc, run_experiment, scenarios_from_doc
from .simulation.skewnormal import SkewNormalParams, injection_from_doc
from .utils.log import get_logger, set_level
from .utils.state import RunManifest, atomic_write_text, read_json, write_json

logger = get_logger("depthfilter")

ESTIMATES_VERSION = "1.0"
SCREEN_VERSION = "1.0"


# ---------------------------- helpers ----------------------------

def _dims(raw: Optional[str]) -> Optional[List[int]]:
    if not raw:
        return None
    try:
        return [int(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--dims must be comma-separated integers, got {raw!r}") from None


def _config(args: argparse.Namespace, extra: Optional[Dict[str, Any]] = None, with_ref: bool = True) -> FilterConfig:
    """Environment, then ``extra`` (e.g. a scenario file's filter section), then CLI flags."""
    flags = {
        "method": args.method,
        "stages": args.stages,
        "beta": args.beta,
        "alpha": args.alpha,
        "delta": args.delta,
        "binom_q": args.binom_q,
        "n_directions": args.directions,
        "ref_family": getattr(args, "ref", None) if with_ref else None,
        "seed": args.seed,
        "threads": args.threads,
    }
    merged = {**(extra or {}), **{k: v for k, v in flags.items() if v is not None}}
    return FilterConfig.from_env(args.env_file, **merged)


def _na_token(args: argparse.Namespace) -> str:
    return args.na_token if args.na_token is not None else na_token_from_env()


def _manifest(command: str, cfg: Dict[str, Any], seed: int, inputs: Sequence[Path]) -> RunManifest:
    man = RunManifest(command=command, config=cfg, seed=seed)
    man.add_inputs(inputs)
    return man


def _finish(man: RunManifest, outputs: Sequence[Path]) -> None:
    man.finish()
    for out in outputs:
        man.write_beside(out)
        logger.info("Wrote %s", out)


def _estimates_from_file(path: Path, p: int) -> LocationScatter:
    try:
        doc = read_json(path)
    except ValueError:
        raise ConfigError(f"{path} is not a JSON estimates file") from None
    try:
        ls = LocationScatter(np.asarray(doc["location"], dtype=float), np.asarray(doc["scatter"], dtype=float))
    except KeyError as e:
        raise ConfigError(f"{path} lacks {e.args[0]!r}") from None
    if ls.dim != p:
        raise ConfigError(f"{path} holds {ls.dim}-dimensional estimates for {p} columns")
    return ls


def _mle(m: DataMatrix, cfg: FilterConfig) -> LocationScatter:
    est = get_estimator(cfg.estimator)(m, tol=cfg.em_tol, max_iter=cfg.em_max_iter)
    return LocationScatter(est.location, est.scatter)


# ---------------------------- commands ----------------------------

def cmd_filter(args: argparse.Namespace) -> int:
    cfg = _config(args)
    na = _na_token(args)
    src = Path(args.input)
    m = load_csv(src, na_token=na, sha256=args.sha256)
    dims = _dims(args.dims)
    report = sequence_filter(m, dims, cfg) if dims else run_pipeline(m, cfg)

    out = Path(args.output)
    rep_path = Path(args.report) if args.report else out.with_name(out.stem + ".report.json")
    write_csv(report.filtered(m), out, na_token=na)
    payload = report.to_dict()
    write_json(rep_path, payload)
    print(render_report(payload), end="")

    man = _manifest("filter", {**cfg.to_dict(), "na_token": na, "dims": dims}, cfg.seed, [src])
    _finish(man, [out, rep_path])
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    na = _na_token(args)
    src = Path(args.input)
    m = load_csv(src, na_token=na, sha256=args.sha256)
    report, est = two_step(m, cfg, apply_filter=not args.no_filter)

    payload: Dict[str, Any] = {
        "schema_version": ESTIMATES_VERSION,
        "columns": list(m.columns),
        "filter": None if report is None else cfg.label,
        **est.to_dict(),
    }
    if report is not None:
        payload["filter_counts"] = report.to_dict()["counts"]
    out = Path(args.output)
    write_json(out, payload)
    logger.info("%s estimates: converged=%s after %d iterations", est.estimator, est.converged, est.iterations)

    man = _manifest("estimate", {**cfg.to_dict(), "na_token": na, "no_filter": args.no_filter}, cfg.seed, [src])
    _finish(man, [out])
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if bool(args.scenario) == bool(args.preset):
        raise ConfigError("give exactly one of a scenario file or --preset")
    src = Path(args.scenario) if args.scenario else preset_path(args.preset)
    doc = load_scenario_file(src)
    cfg = _config(args, extra=doc.get("filter") or {})
    out = Path(args.output)
    summary_path = Path(args.summary) if args.summary else out.with_name(out.stem + ".summary.json")
    name = str(doc.get("name", src.stem))

    if doc.get("kind") == "sn-injection":
        result = injection_from_doc(doc, cfg)
        atomic_write_text(out, render_table(result.steps))
        table = result.n0_table()
        summary = {
            "schema_version": "1.0",
            "name": name,
            "n0_table": table.to_dict(orient="records"),
            "flagged": result.flagged,
        }
        print(render_injection(table), end="")
    else:
        grid = scenarios_from_doc(doc)
        result = run_experiment(grid, methods_from_doc(doc), cfg, threads=cfg.threads)
        atomic_write_text(out, render_table(result.replicates))
        summary = result.summary(name)
        print(render_summary(summary), end="")
    write_json(summary_path, summary)

    man = _manifest("simulate", {**cfg.to_dict(), "scenario": doc}, cfg.seed, [src])
    _finish(man, [out, summary_path])
    return 0


def _depth_reference(args: argparse.Namespace, ls: LocationScatter, cfg: FilterConfig) -> ReferenceDistribution:
    if args.ref == "skewnormal":
        if not args.sn_params:
            raise ConfigError("--ref skewnormal needs --sn-params")
        params = SkewNormalParams.from_dict(load_scenario_file(args.sn_params))
        return params.reference(cfg.ref_sample_size, cfg.n_directions, cfg.seed)
    return build_reference(args.ref, ls, cfg.ref_sample_size, cfg.n_directions, cfg.seed, (ls.dim,))


def cmd_depth(args: argparse.Namespace) -> int:
    cfg = _config(args, with_ref=False)
    na = _na_token(args)
    src = Path(args.input)
    m = load_csv(src, na_token=na, sha256=args.sha256)
    rows = complete_rows(m)
    if rows.size == 0:
        raise DataFormatError(f"no complete rows in {src}; depths need at least one row without {na!r} cells")
    ls = _estimates_from_file(Path(args.estimates), m.p) if args.estimates else _mle(m, cfg)
    ref = _depth_reference(args, ls, cfg)

    pts = m.values[rows]
    directions = direction_batch(m.p, cfg.n_directions, cfg.seed, m.p, 0) if m.p >= 3 else None
    sd = sample_depths(pts, pts, directions)
    td = np.asarray(ref.theoretical_depth(pts), dtype=float)
    screen = chi2_screen(m, ls, q=args.chi2_q)

    df = pd.DataFrame({
        "row": np.arange(m.n),
        "complete": np.zeros(m.n, dtype=bool),
        "sample_depth": np.full(m.n, np.nan),
        "theoretical_depth": np.full(m.n, np.nan),
        "mahalanobis_sq": screen.distances,
        "chi2_cutoff": screen.cutoffs,
        "exceeds": screen.exceeds,
    })
    df.loc[rows, "complete"] = True
    df.loc[rows, "sample_depth"] = sd
    df.loc[rows, "theoretical_depth"] = td
    out = Path(args.output)
    atomic_write_text(out, render_table(df))
    logger.info("%d of %d rows exceed the chi2 %.4g cutoff", screen.hits(), m.n, args.chi2_q)

    cfg_dict = {**cfg.to_dict(), "ref": ref.describe(), "chi2_q": args.chi2_q, "na_token": na}
    inputs = [src] + ([Path(args.estimates)] if args.estimates else [])
    _finish(_manifest("depth", cfg_dict, cfg.seed, inputs), [out])
    return 0


def cmd_screen(args: argparse.Namespace) -> int:
    cfg = _config(args)
    na = _na_token(args)
    src = Path(args.input)
    m = load_csv(src, na_token=na, sha256=args.sha256)
    mads = mad_screen(m, k=args.mad_k, scale=cfg.mad_scale)
    ls = _estimates_from_file(Path(args.estimates), m.p) if args.estimates else _mle(m, cfg)
    dist = chi2_screen(m, ls, q=args.chi2_q)
    marked = mads.marked_rows

    payload = {
        "schema_version": SCREEN_VERSION,
        "columns": list(m.columns),
        "mad": mads.to_dict(),
        "chi2": {
            "q": args.chi2_q,
            "exceeding_rows": int(dist.hits()),
            "marked_rows_exceeding": int(dist.hits(marked)),
            "marked_rows": int(marked.size),
        },
    }
    out = Path(args.output)
    write_json(out, payload)
    print(
        f"[depthfilter] screen: {100 * mads.cell_fraction:.1f}% cells beyond {args.mad_k:g} MADs, "
        f"{100 * mads.row_fraction:.1f}% rows touched; "
        f"{payload['chi2']['marked_rows_exceeding']} of {marked.size} marked rows exceed chi2 {args.chi2_q:g}"
    )
    inputs = [src] + ([Path(args.estimates)] if args.estimates else [])
    _finish(_manifest("screen", {**cfg.to_dict(), "mad_k": args.mad_k, "chi2_q": args.chi2_q}, cfg.seed, inputs), [out])
    return 0


# ---------------------------- parser ----------------------------

def _common(p: argparse.ArgumentParser, with_ref: bool = True) -> None:
    p.add_argument("--method", choices=["hs", "gy"], help="filter family (default hs)")
    p.add_argument("--stages", help="comma-separated subset of u,b,p (default u,b,p)")
    p.add_argument("--beta", type=float, help="C^beta probability for HS filters (default 0.99)")
    p.add_argument("--alpha", type=float, help="GY quantile order for eta (default 0.95)")
    p.add_argument("--delta", type=float, help="binomial success probability (default 0.1)")
    p.add_argument("--binom-q", dest="binom_q", type=float, help="binomial quantile order (default 0.99)")
    p.add_argument("--directions", type=int, help=f"random Tukey directions (default {DEFAULT_DIRECTIONS})")
    if with_ref:
        p.add_argument("--ref", choices=list(FAMILIES), help="reference family (default gaussian)")
    p.add_argument("--seed", type=int, help="64-bit seed (default 0)")
    p.add_argument("--threads", type=int, help="worker threads (default 1)")
    p.add_argument("--na-token", dest="na_token", help="missing-value token (default NA)")
    p.add_argument("--env-file", dest="env_file", help=".env file with DEPTHFILTER_* defaults")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="depthfilter", description="Depth-based filters for cell-wise and case-wise outliers.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="flag outlying cells and rows, write them as NA")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="filtered CSV")
    p.add_argument("--report", help="report JSON (default <output>.report.json)")
    p.add_argument("--dims", help="run the dimension sequence d1<...<dk instead of the pipeline, e.g. 1,2,3")
    p.add_argument("--sha256", help="expected checksum of the input file")
    _common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("estimate", help="filter, then estimate location and scatter")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="estimates JSON")
    p.add_argument("--no-filter", dest="no_filter", action="store_true", help="skip filtering (plain EM)")
    p.add_argument("--sha256")
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run an experiment grid or the skew-normal injection")
    p.add_argument("scenario", nargs="?", help="scenario file (YAML or JSON)")
    p.add_argument("--preset", help="name of a shipped preset, e.g. table1-desk")
    p.add_argument("-o", "--output", required=True, help="tidy results CSV")
    p.add_argument("--summary", help="summary JSON (default <output>.summary.json)")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("depth", help="per-row sample and reference depths")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="depth CSV")
    p.add_argument("--estimates", help="estimates JSON (location, scatter); default: EM on the input")
    p.add_argument("--sn-params", dest="sn_params", help="YAML/JSON with xi, Omega, alpha for --ref skewnormal")
    p.add_argument("--chi2-q", dest="chi2_q", type=float, default=0.9999)
    p.add_argument("--sha256")
    _common(p)
    p.set_defaults(func=cmd_depth, ref="gaussian")

    p = sub.add_parser("screen", help="k-MAD cell screen and chi-squared distance screen")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="screen JSON")
    p.add_argument("--estimates", help="estimates JSON (location, scatter); default: EM on the input")
    p.add_argument("--mad-k", dest="mad_k", type=float, default=3.0)
    p.add_argument("--chi2-q", dest="chi2_q", type=float, default=0.9999)
    p.add_argument("--sha256")
    _common(p, with_ref=False)
    p.set_defaults(func=cmd_screen)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    try:
        return int(args.func(args))
    except DepthFilterError as e:
        logger.error("%s: %s", e.__class__.__name__, e)
        return e.exit_code
    except (FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as e:
        logger.error("Cannot read input: %s", e)
        return DataFormatError.exit_code
    except Exception:
        logger.exception("depthfilter %s failed", args.command)
        return 1


if __name__ == "__main__":
    sys.exit(main())
