"""
Batch command line front end.

    vbsmc simulate --config run.json [--seed K] [--out DIR]
    vbsmc filter   --config run.json --observations obs.csv [--truth latent.csv] [--fitness]
    vbsmc evaluate report1.csv [report2.csv ...] [--out DIR]
    vbsmc impute   --config run.json --data dataset.csv [--truth latent.csv]

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
Every output file is computed in memory first and only written once the
whole command has succeeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .arma import simulate_recursive
from .exceptions import ConfigError, DataError, NumericalError
from .fgn import factor_fgn
from .io import (
    dataset_csv,
    dumps_json,
    format_float,
    load_config,
    read_column_csv,
    read_dataset,
    read_report,
    report_csv,
    report_json,
    series_csv,
    write_outputs,
    csv_text,
)
from .smc import run_filter
from .var import Dataset, filter_dataset, impute, sample_var_innovations, var_recursion
from .variational import VariationalPosterior, fitness_estimate

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _streams(seed):
    """Independent generators for latent draws, observation noise and masks."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.output = args.out
    return cfg


def simulate_files(cfg):
    """Simulate latent states and observations; returns ``{filename: text}``."""
    latent_rng, noise_rng, mask_rng = _streams(cfg.seed)
    t = cfg.horizon
    jitter = factor_fgn(t, cfg.model.innovations.hurst).jitter if cfg.model.innovations.sigma2 > 0 else 0.0
    meta = {"config": {"model": cfg.model.to_dict(), "channel": cfg.channel.to_dict(), "horizon": t, "seed": cfg.seed},
            "fgn_jitter": jitter}
    if cfg.is_var:
        u = sample_var_innovations(cfg.model, t, latent_rng)
        x = var_recursion(cfg.model, u).T
        z = cfg.channel.sample(x, noise_rng)
        mask = mask_rng.random(z.shape) < cfg.missing_fraction
        meta["missing_fraction"] = cfg.missing_fraction
        meta["missing_cells"] = int(mask.sum())
        labels = cfg.model.labels
        return {
            "latent.csv": dataset_csv(Dataset(x, np.zeros(x.shape, bool), labels)),
            "observations.csv": dataset_csv(Dataset(z, mask, labels)),
            "simulate.json": dumps_json(meta),
        }
    traj = simulate_recursive(cfg.model, t, latent_rng)
    z = cfg.channel.sample(traj.states, noise_rng)
    text = csv_text(
        ["t", "x", "u"],
        ([i + 1, format_float(a), format_float(b)] for i, (a, b) in enumerate(zip(traj.states, traj.innovations_used))),
    )
    return {"latent.csv": text, "observations.csv": series_csv("z", z), "simulate.json": dumps_json(meta)}


def filter_files(cfg, observations, truth=None, fitness=False, workers=1):
    if cfg.is_var:
        raise ConfigError("model.kind: 'filter' handles ARMA models; use 'impute' for VAR datasets")
    z = read_column_csv(observations, "z", non_negative=True)
    x = None
    if truth is not None:
        x = read_column_csv(truth, "x")
        if x.shape != z.shape:
            raise DataError(f"{truth}: {x.size} rows, observations have {z.size}")
    report = run_filter(cfg.filter_config(workers), z, truth=x)
    extra = {}
    if fitness:
        vp = VariationalPosterior.from_model(cfg.model, z.size, cfg.channel.noise)
        fit_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(4)[3])
        extra["fitness"] = fitness_estimate(vp, cfg.channel, z, cfg.fitness_samples, fit_rng).to_dict()
    return {"report.csv": report_csv(report), "report.json": report_json(report, extra)}


def _quartiles(values):
    q25, q50, q75 = np.percentile(values, [25, 50, 75])
    return q50, q25, q75


SUMMARY_HEADER = [
    "model", "runs", "final_rmse_median", "final_rmse_q25", "final_rmse_q75", "final_rmse_iqr",
    "mean_ess", "total_resampled",
]


def evaluate_files(paths):
    """Aggregate report CSVs per model name into ``summary.csv``."""
    if not paths:
        raise DataError("evaluate needs at least one report")
    groups = {}
    schema = None
    for path in paths:
        header, cols, side = read_report(path)
        if schema is None:
            schema = header
        elif header != schema:
            raise DataError(f"{path}: report columns {header} differ from {schema}; mixed schemas are not comparable")
        name = side.get("config", {}).get("model", {}).get("name") or Path(path).stem
        g = groups.setdefault(name, {"rmse": [], "ess": [], "resampled": 0})
        if "rmse" in cols:
            g["rmse"].append(cols["rmse"][-1])
        g["ess"].append(np.mean(cols["ess"]))
        g["resampled"] += int(np.sum(cols["resampled_count"]))
    rows = []
    for name in sorted(groups):
        g = groups[name]
        if g["rmse"]:
            med, q25, q75 = _quartiles(g["rmse"])
            stats = [format_float(med), format_float(q25), format_float(q75), format_float(q75 - q25)]
        else:
            stats = ["", "", "", ""]
        rows.append([name, len(g["ess"]), *stats, format_float(np.mean(g["ess"])), g["resampled"]])
    return {"summary.csv": csv_text(SUMMARY_HEADER, rows)}


def impute_files(cfg, data_path, truth=None, workers=1, fill="latent"):
    if not cfg.is_var:
        raise ConfigError("model.kind: 'impute' needs a VAR model")
    data = read_dataset(data_path)
    if tuple(data.labels) != tuple(cfg.model.labels):
        raise ConfigError(
            f"model.labels {list(cfg.model.labels)} do not match dataset columns {list(data.labels)}"
        )
    x = None
    if truth is not None:
        x = read_dataset(truth, non_negative=False)
        if x.shape != data.shape or x.labels != data.labels or x.missing_mask.any():
            raise DataError(f"{truth}: truth must be a complete dataset with the same labels and length")
        x = x.series
    reports = filter_dataset(cfg.model, data, cfg.filter_config(workers), truth=x)
    imputed = impute(reports, data, fill=fill, noise=cfg.channel.noise)

    labels = data.labels
    header = ["t"] + [f"estimate_{s}" for s in labels]
    if x is not None:
        header += [f"truth_{s}" for s in labels] + [f"rmse_{s}" for s in labels]
    header += ["ess", "resampled_count"]
    rows = []
    for t in range(data.shape[1]):
        row = [t + 1] + [format_float(r.estimates[t]) for r in reports]
        if x is not None:
            row += [format_float(r.truth[t]) for r in reports] + [format_float(r.rmse_trace[t]) for r in reports]
        row += [format_float(reports[0].ess_trace[t]), int(reports[0].resample_counts[t])]
        rows.append(row)

    extra = {"missing_cells": int(data.missing_mask.sum()), "fill": fill}
    if x is not None and data.missing_mask.any():
        est = np.vstack([r.estimates for r in reports])
        err = (est - x)[data.missing_mask]
        extra["imputed_rmse"] = float(np.sqrt(np.mean(err**2)))
    meta = dumps_json({"config": reports[0].config, "series": list(labels), **extra})
    return {"imputed.csv": dataset_csv(imputed), "report.csv": csv_text(header, rows), "report.json": meta}


def build_parser():
    parser = argparse.ArgumentParser(prog="vbsmc", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (overrides config 'output')")

    def parallel(p):
        p.add_argument("--workers", type=int, default=1, help="threads drawing particle noise; output is identical")

    p = sub.add_parser("simulate", help="simulate latent states and observations")
    common(p)

    p = sub.add_parser("filter", help="run the particle filter on an observation CSV")
    common(p)
    parallel(p)
    p.add_argument("--observations", required=True, help="CSV with columns t,z")
    p.add_argument("--truth", help="CSV with column x (adds the RMSE column)")
    p.add_argument("--fitness", action="store_true", help="add a variational fitness estimate to the JSON sidecar")

    p = sub.add_parser("evaluate", help="summarize filter reports per model")
    common(p, config_required=False)
    p.add_argument("reports", nargs="+", help="report CSV files")

    p = sub.add_parser("impute", help="fill missing cells of a VAR dataset")
    common(p)
    parallel(p)
    p.add_argument("--data", required=True, help="dataset CSV (labels header, empty cell = missing)")
    p.add_argument("--truth", help="complete latent dataset CSV for imputation RMSE")
    p.add_argument("--fill", choices=("latent", "observation"), default="latent")
    return parser


def run(args):
    if args.command == "evaluate":
        outdir = args.out or (load_config(args.config).output if args.config else ".")
        return outdir, evaluate_files(args.reports)
    cfg = _apply_overrides(load_config(args.config), args)
    if getattr(args, "workers", 1) < 1:
        raise ConfigError("--workers must be >= 1")
    if args.command == "simulate":
        files = simulate_files(cfg)
    elif args.command == "filter":
        files = filter_files(cfg, args.observations, args.truth, args.fitness, args.workers)
    else:
        files = impute_files(cfg, args.data, args.truth, args.workers, args.fill)
    return cfg.output, files


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        outdir, files = run(args)
        written = write_outputs(outdir, files)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"data error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_DATA
    for path in written:
        print(path)
    if args.command == "evaluate":
        sys.stdout.write(files["summary.csv"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
