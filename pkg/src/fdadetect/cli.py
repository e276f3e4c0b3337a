"""Configuration-driven experiment runner.

Subcommands: ``threshold`` (threshold vs false-alarm level), ``pd-curve``
(detection probability vs SNR), ``mismatch`` (mismatched-signal sweep),
``compare-mimo`` (frequency offset on vs off), ``validate`` (closed-form
vs Monte Carlo report), ``cfar`` (covariance-invariance report).

Each run writes one CSV with the header
``detector,x_kind,x_value,threshold,mc_estimate,ci_low,ci_high,closed_form,seed``,
a JSON manifest echoing the resolved configuration, and a PNG figure
rendered from the same rows.  Outputs are byte-identical across re-runs
with the same configuration and seed.  Exit codes: 0 success, 1 numeric
failure or failed validation, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, config as config_mod, montecarlo, plotting
from .config import ConfigError, ExperimentConfig
from .detectors import DetectorKind
from .numerics import ConvergenceError
from .scenario import build_covariance, standard_complex

CSV_FIELDS = (
    "detector", "x_kind", "x_value", "threshold", "mc_estimate",
    "ci_low", "ci_high", "closed_form", "seed",
)

CFAR_REPORT_ONLY = (DetectorKind.RAO_NO,)


@dataclass(frozen=True)
class ResultRow:
    """One output record: a detector evaluated at one sweep point."""

    detector: str
    x_kind: str
    x_value: float
    threshold: float
    mc_estimate: float
    ci_low: float
    ci_high: float
    closed_form: float | None
    seed: int


def _rows_from_curves(curves: montecarlo.CurveSet) -> list[ResultRow]:
    rows = []
    for series in curves.series:
        for i, x in enumerate(curves.x_values):
            closed = None
            if series.closed_form is not None:
                closed = float(series.closed_form[i])
            rows.append(
                ResultRow(
                    detector=series.label,
                    x_kind=curves.x_kind,
                    x_value=float(x),
                    threshold=series.threshold,
                    mc_estimate=float(series.estimates[i]),
                    ci_low=float(series.ci_low[i]),
                    ci_high=float(series.ci_high[i]),
                    closed_form=closed,
                    seed=curves.seed,
                )
            )
    return rows


def _require_sweep_kind(cfg: ExperimentConfig, expected: str, subcommand: str) -> None:
    if cfg.sweep.kind != expected:
        raise ConfigError(
            f"sweep.kind: subcommand {subcommand!r} needs {expected!r}, "
            f"got {cfg.sweep.kind!r}"
        )


def _run_threshold(cfg: ExperimentConfig) -> tuple[list[ResultRow], dict]:
    _require_sweep_kind(cfg, "pfa", "threshold")
    scenario = cfg.scenario()
    dof = analysis.DofParams.from_counts(cfg.l_cells, cfg.k_snapshots, cfg.array.mn)
    sweep = montecarlo.threshold_sweep(cfg.detectors, scenario, cfg.mc, cfg.sweep.grid)
    rows = []
    for kind in cfg.detectors:
        for pfa_value, est in zip(cfg.sweep.grid, sweep[kind]):
            closed = None
            if analysis.has_closed_form(kind):
                closed = analysis.threshold_for(kind, pfa_value, dof)
            rows.append(
                ResultRow(
                    detector=kind.value,
                    x_kind="pfa",
                    x_value=pfa_value,
                    threshold=est.value,
                    mc_estimate=est.value,
                    ci_low=est.ci_low,
                    ci_high=est.ci_high,
                    closed_form=closed,
                    seed=cfg.mc.seed,
                )
            )
    return rows, {}


def _run_pd_curve(cfg: ExperimentConfig) -> tuple[list[ResultRow], dict]:
    _require_sweep_kind(cfg, "snr", "pd-curve")
    curves = montecarlo.pd_curve(cfg.scenario(), cfg.sweep.grid, cfg.mc,
                                 kinds=cfg.detectors)
    return _rows_from_curves(curves), {}


def _run_validate(cfg: ExperimentConfig, tol: float) -> tuple[list[ResultRow], dict, bool]:
    _require_sweep_kind(cfg, "snr", "validate")
    curves = montecarlo.pd_curve(cfg.scenario(), cfg.sweep.grid, cfg.mc,
                                 kinds=cfg.detectors)
    rows = _rows_from_curves(curves)
    report = {}
    ok = True
    for series in curves.series:
        if series.closed_form is None:
            continue
        gap = float(np.max(np.abs(series.estimates - series.closed_form)))
        passed = gap <= tol
        ok = ok and passed
        report[series.label] = {"max_abs_gap": gap, "tolerance": tol, "passed": passed}
        print(f"{'PASS' if passed else 'FAIL'} {series.label}: "
              f"max |MC - closed-form| = {gap:.4f} (tolerance {tol})")
    return rows, {"validation": report}, ok


def _run_mismatch(cfg: ExperimentConfig) -> tuple[list[ResultRow], dict]:
    _require_sweep_kind(cfg, "mismatch", "mismatch")
    curves = montecarlo.mismatch_sweep(
        cfg.scenario(), cfg.sweep.cos2_spatial, cfg.sweep.cos2_doppler,
        cfg.sweep.grid, cfg.mc, kinds=cfg.detectors,
    )
    extra = {"cos2_spatial": cfg.sweep.cos2_spatial,
             "cos2_doppler": cfg.sweep.cos2_doppler}
    return _rows_from_curves(curves), extra


def _run_compare_mimo(cfg: ExperimentConfig) -> tuple[list[ResultRow], dict]:
    _require_sweep_kind(cfg, "fda_vs_mimo", "compare-mimo")
    curves = montecarlo.compare_fda_mimo(cfg.scenario(), cfg.sweep.grid, cfg.mc,
                                         kinds=cfg.detectors)
    return _rows_from_curves(curves), {}


def _cfar_cases(cfg: ExperimentConfig) -> list[tuple[str, np.ndarray]]:
    scenario = cfg.scenario()
    mn = cfg.array.mn
    eye = np.eye(mn)
    rng = montecarlo.trial_rng(cfg.mc.seed, "cfar:random-covariance", 0)
    g = standard_complex(rng, mn, 2 * mn)
    random_pd = g @ g.conj().T + 0.1 * eye
    return [
        ("identity", eye),
        ("identity_x100", 100.0 * eye),
        ("configured", build_covariance(scenario)),
        ("random_pd", random_pd),
    ]


def _run_cfar(cfg: ExperimentConfig) -> tuple[list[ResultRow], dict, bool]:
    scenario = cfg.scenario()
    cases = _cfar_cases(cfg)
    report = montecarlo.cfar_check(cfg.detectors, scenario, cases, cfg.mc)
    rows = []
    case_index = {label: float(i) for i, (label, _) in enumerate(cases)}
    ok = True
    for row in report.rows:
        rows.append(
            ResultRow(
                detector=row.detector,
                x_kind="cov_case",
                x_value=case_index[row.case],
                threshold=row.threshold,
                mc_estimate=row.pfa_hat,
                ci_low=row.ci_low,
                ci_high=row.ci_high,
                closed_form=row.target,
                seed=cfg.mc.seed,
            )
        )
        report_only = any(row.detector == k.value for k in CFAR_REPORT_ONLY)
        if not row.passed and not report_only:
            ok = False
        status = "PASS" if row.passed else ("note" if report_only else "FAIL")
        print(f"{status} {row.detector} under {row.case}: "
              f"pfa_hat={row.pfa_hat:.2e} target={row.target:.2e} "
              f"[{row.ci_low:.2e}, {row.ci_high:.2e}]")
    extra = {
        "cases": {label: int(idx) for label, idx in case_index.items()},
        "report_only": [k.value for k in CFAR_REPORT_ONLY],
    }
    return rows, extra, ok


def _write_csv(rows: list[ResultRow], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_FIELDS)
        for row in rows:
            writer.writerow([
                row.detector,
                row.x_kind,
                repr(row.x_value),
                repr(row.threshold),
                repr(row.mc_estimate),
                repr(row.ci_low),
                repr(row.ci_high),
                "" if row.closed_form is None else repr(row.closed_form),
                row.seed,
            ])


def _write_manifest(path: Path, subcommand: str, cfg: ExperimentConfig,
                    out_csv: Path, extra: dict) -> None:
    manifest = {
        "subcommand": subcommand,
        "output": out_csv.name,
        "seed": cfg.mc.seed,
        "config": cfg.resolved(),
    }
    manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def run(subcommand: str, config_path=None, overrides: dict | None = None,
        out=None, tol: float = 0.02) -> int:
    """Run one subcommand; returns the process exit status."""
    try:
        cfg = config_mod.load(config_path, overrides)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    out_csv = Path(out) if out is not None else Path(f"{subcommand.replace('-', '_')}.csv")
    ok = True
    extra: dict = {}
    try:
        if subcommand == "threshold":
            rows, extra = _run_threshold(cfg)
        elif subcommand == "pd-curve":
            rows, extra = _run_pd_curve(cfg)
        elif subcommand == "validate":
            rows, extra, ok = _run_validate(cfg, tol)
        elif subcommand == "mismatch":
            rows, extra = _run_mismatch(cfg)
        elif subcommand == "compare-mimo":
            rows, extra = _run_compare_mimo(cfg)
        elif subcommand == "cfar":
            rows, extra, ok = _run_cfar(cfg)
        else:
            print(f"unknown subcommand {subcommand!r}", file=sys.stderr)
            return 2
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, ConvergenceError, ValueError) as err:
        print(f"numeric error in {subcommand!r}: {err}", file=sys.stderr)
        return 1

    out_csv.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(rows, out_csv)
    manifest_path = out_csv.with_suffix(".manifest.json")
    _write_manifest(manifest_path, subcommand, cfg, out_csv, extra)
    figure_path = out_csv.with_suffix(".png")
    x_kind = rows[0].x_kind if rows else "snr_db"
    plotting.render_report(rows, x_kind, figure_path, title=subcommand)
    print(f"wrote {len(rows)} rows to {out_csv}")
    print(f"wrote manifest to {manifest_path}")
    print(f"wrote figure to {figure_path}")
    if not ok:
        print(f"{subcommand}: validation failed", file=sys.stderr)
        return 1
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None,
                        help="path to a JSON configuration file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override mc.seed")
    parser.add_argument("--pfa", type=float, default=None,
                        help="override mc.pfa")
    parser.add_argument("--workers", type=str, default=None,
                        help="worker processes (integer or 'auto')")
    parser.add_argument("--out", type=str, default=None,
                        help="output CSV path (manifest and figure sit beside it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdadetect",
        description="Adaptive detection experiments for frequency-offset MIMO radar.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in (
        ("threshold", "detection threshold versus false-alarm level"),
        ("pd-curve", "detection probability versus SNR"),
        ("mismatch", "detection probability under signal mismatch"),
        ("compare-mimo", "frequency offset on versus off"),
        ("validate", "closed-form versus Monte Carlo report"),
        ("cfar", "false-alarm invariance across covariances"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "validate":
            p.add_argument("--tol", type=float, default=0.02,
                           help="max |MC - closed-form| accepted (default 0.02)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.pfa is not None:
        overrides["pfa"] = args.pfa
    if args.workers is not None:
        overrides["workers"] = args.workers if args.workers == "auto" else int(args.workers)
    return run(args.subcommand, config_path=args.config, overrides=overrides,
               out=args.out, tol=getattr(args, "tol", 0.02))


if __name__ == "__main__":
    sys.exit(main())
