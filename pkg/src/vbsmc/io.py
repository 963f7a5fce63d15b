"""
Run configuration and file formats.

Config files are JSON::

    {
      "model": {"kind": "arma", "preset": "ARMA(1,1)"},
      "noise": {"alpha": 0.5, "beta": 1.0},
      "filter": {"n_particles": 1000, "resampling": "paper", "ess_threshold": null},
      "horizon": 100,
      "seed": 0,
      "output": "out",
      "missing_fraction": 0.0,
      "fitness_samples": 2000
    }

An ARMA model may instead give ``phi``, ``varphi``, ``hurst`` and
``sigma2``; a VAR model gives ``"kind": "var"``, ``weights`` (a list of
``n x n`` matrices), ``labels``, ``hurst`` and ``sigma2``.

All CSV output writes floats with ``repr`` so files are reproducible byte
for byte; missing values are empty cells.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .arma import ArmaModel, benchmark_model
from .exceptions import ConfigError, DataError
from .fgn import FgnSpec
from .obs import GammaNoiseParams, ObservationChannel
from .smc import FilterConfig
from .var import Dataset, VarModel

__all__ = [
    "RunConfig",
    "parse_config",
    "load_config",
    "format_float",
    "csv_text",
    "series_csv",
    "read_column_csv",
    "dataset_csv",
    "read_dataset",
    "report_csv",
    "report_json",
    "read_report",
    "dumps_json",
    "write_outputs",
]

_TOP_KEYS = {"model", "noise", "filter", "horizon", "seed", "output", "missing_fraction", "fitness_samples"}
_ARMA_KEYS = {"kind", "preset", "name", "phi", "varphi", "hurst", "sigma2"}
_VAR_KEYS = {"kind", "name", "weights", "labels", "hurst", "sigma2"}
_FILTER_KEYS = {"n_particles", "resampling", "ess_threshold"}


@dataclass
class RunConfig:
    model: Union[ArmaModel, VarModel]
    channel: ObservationChannel = field(default_factory=ObservationChannel)
    n_particles: int = 1000
    resampling: str = "paper"
    ess_threshold: Optional[float] = None
    horizon: int = 100
    seed: int = 0
    output: str = "out"
    missing_fraction: float = 0.0
    fitness_samples: int = 2000

    @property
    def is_var(self):
        return isinstance(self.model, VarModel)

    def filter_config(self, workers=1):
        return FilterConfig(
            model=self.model,
            channel=self.channel,
            n_particles=self.n_particles,
            resampling=self.resampling,
            seed=self.seed,
            ess_threshold=self.ess_threshold,
            workers=workers,
        )


def _field(section, key, value, kind=float, low=None, low_inclusive=True):
    try:
        if kind is int:
            if isinstance(value, bool) or not float(value).is_integer():
                raise ValueError
            value = int(value)
        else:
            value = float(value)
            if not math.isfinite(value):
                raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: expected a finite {kind.__name__}, got {value!r}") from None
    if low is not None and (value < low or (not low_inclusive and value == low)):
        op = ">=" if low_inclusive else ">"
        raise ConfigError(f"{section}.{key}: must be {op} {low}, got {value!r}")
    return value


def _unknown(section, given, allowed):
    extra = sorted(set(given) - allowed)
    if extra:
        raise ConfigError(f"{section}: unknown field(s) {extra}")


def _coefs(section, key, value):
    if value is None:
        return []
    if not isinstance(value, list):
        raise ConfigError(f"{section}.{key}: expected a list of numbers")
    return [_field(section, f"{key}[{i}]", v) for i, v in enumerate(value)]


def _parse_model(spec):
    if not isinstance(spec, dict):
        raise ConfigError("model: expected an object")
    kind = spec.get("kind", "arma")
    if kind == "arma":
        _unknown("model", spec, _ARMA_KEYS)
        sigma2 = _field("model", "sigma2", spec.get("sigma2", 1.0), low=0.0)
        if "preset" in spec:
            extra = set(spec) & {"phi", "varphi", "hurst"}
            if extra:
                raise ConfigError(f"model: 'preset' cannot be combined with {sorted(extra)}")
            model = benchmark_model(spec["preset"], sigma2)
            return ArmaModel(model.phi, model.varphi, model.innovations, name=spec.get("name", model.name))
        hurst = _field("model", "hurst", spec.get("hurst", 0.5), low=0.0, low_inclusive=False)
        if hurst >= 1.0:
            raise ConfigError(f"model.hurst: must be < 1, got {hurst!r}")
        return ArmaModel(
            _coefs("model", "phi", spec.get("phi")),
            _coefs("model", "varphi", spec.get("varphi")),
            FgnSpec(hurst, sigma2),
            name=spec.get("name", ""),
        )
    if kind == "var":
        _unknown("model", spec, _VAR_KEYS)
        if "weights" not in spec:
            raise ConfigError("model.weights: required for a VAR model")
        try:
            weights = np.asarray(spec["weights"], dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("model.weights: expected a list of square numeric matrices") from None
        hurst = _field("model", "hurst", spec.get("hurst", 0.7), low=0.0, low_inclusive=False)
        if hurst >= 1.0:
            raise ConfigError(f"model.hurst: must be < 1, got {hurst!r}")
        sigma2 = _field("model", "sigma2", spec.get("sigma2", 1.0), low=0.0)
        labels = spec.get("labels", ())
        if not isinstance(labels, (list, tuple)):
            raise ConfigError("model.labels: expected a list of names")
        try:
            return VarModel(weights, FgnSpec(hurst, sigma2), tuple(labels), name=spec.get("name", ""))
        except ConfigError as exc:
            raise ConfigError(f"model: {exc}") from None
    raise ConfigError(f"model.kind: expected 'arma' or 'var', got {kind!r}")


def parse_config(raw):
    """Validate a decoded JSON config and build a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    _unknown("config", raw, _TOP_KEYS)
    if "model" not in raw:
        raise ConfigError("config.model: required")
    model = _parse_model(raw["model"])

    noise = raw.get("noise", {})
    if not isinstance(noise, dict):
        raise ConfigError("noise: expected an object")
    _unknown("noise", noise, {"alpha", "beta", "kind"})
    channel = ObservationChannel(
        noise.get("kind", "log_volatility"),
        GammaNoiseParams(
            _field("noise", "alpha", noise.get("alpha", 0.5), low=0.0, low_inclusive=False),
            _field("noise", "beta", noise.get("beta", 1.0), low=0.0, low_inclusive=False),
        ),
    )

    filt = raw.get("filter", {})
    if not isinstance(filt, dict):
        raise ConfigError("filter: expected an object")
    _unknown("filter", filt, _FILTER_KEYS)
    threshold = filt.get("ess_threshold")
    if threshold is not None:
        threshold = _field("filter", "ess_threshold", threshold, low=0.0, low_inclusive=False)
        if threshold > 1.0:
            raise ConfigError(f"filter.ess_threshold: must be <= 1, got {threshold!r}")
    resampling = filt.get("resampling", "paper")
    if resampling not in ("paper", "systematic"):
        raise ConfigError(f"filter.resampling: expected 'paper' or 'systematic', got {resampling!r}")

    missing = _field("config", "missing_fraction", raw.get("missing_fraction", 0.0), low=0.0)
    if missing >= 1.0:
        raise ConfigError(f"config.missing_fraction: must be < 1, got {missing!r}")
    output = raw.get("output", "out")
    if not isinstance(output, str) or not output:
        raise ConfigError("config.output: expected a directory path")

    return RunConfig(
        model=model,
        channel=channel,
        n_particles=_field("filter", "n_particles", filt.get("n_particles", 1000), kind=int, low=2),
        resampling=resampling,
        ess_threshold=threshold,
        horizon=_field("config", "horizon", raw.get("horizon", 100), kind=int, low=1),
        seed=_field("config", "seed", raw.get("seed", 0), kind=int, low=0),
        output=output,
        missing_fraction=missing,
        fitness_samples=_field("config", "fitness_samples", raw.get("fitness_samples", 2000), kind=int, low=2),
    )


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw)


def format_float(v):
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def series_csv(name, values):
    """Two-column CSV ``t,<name>`` for a scalar series."""
    return csv_text(["t", name], ([t + 1, format_float(v)] for t, v in enumerate(values)))


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except csv.Error as exc:
        raise DataError(f"{path}: malformed CSV: {exc}") from None
    if not rows:
        raise DataError(f"{path}: empty file")
    return rows


def _to_float(path, line, text, allow_empty=False):
    if text.strip() == "" and allow_empty:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}, line {line}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise DataError(f"{path}, line {line}: non-finite value {text!r}")
    return value


def read_column_csv(path, column=None, non_negative=False):
    """Read one numeric column from a ``t,<value>`` CSV.

    ``column`` defaults to the last column. Errors name the 1-based file line.
    """
    rows = _read_rows(path)
    header = rows[0]
    if column is None:
        idx = len(header) - 1
    elif column in header:
        idx = header.index(column)
    else:
        raise DataError(f"{path}: no column {column!r} in header {header}")
    values = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}, line {line}: expected {len(header)} fields, got {len(row)}")
        value = _to_float(path, line, row[idx])
        if non_negative and value < 0:
            raise DataError(f"{path}, line {line}: negative observation {value!r}")
        values.append(value)
    if not values:
        raise DataError(f"{path}: no data rows")
    return np.array(values)


def dataset_csv(data):
    """Labels header, one row per time step, empty cell for a missing value."""
    rows = []
    for t in range(data.shape[1]):
        rows.append(["" if data.missing_mask[i, t] else format_float(data.series[i, t]) for i in range(data.shape[0])])
    return csv_text(list(data.labels), rows)


def read_dataset(path, non_negative=True):
    """Parse a dataset CSV; ``non_negative=False`` admits latent-scale values."""
    rows = _read_rows(path)
    labels = [s.strip() for s in rows[0]]
    if not all(labels) or len(set(labels)) != len(labels):
        raise DataError(f"{path}, line 1: labels must be non-empty and unique")
    values = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(labels):
            raise DataError(f"{path}, line {line}: expected {len(labels)} fields, got {len(row)}")
        vals = [_to_float(path, line, cell, allow_empty=True) for cell in row]
        for label, v in zip(labels, vals):
            if non_negative and v < 0:
                raise DataError(f"{path}, line {line}: negative value {v!r} for {label!r}")
        values.append(vals)
    if not values:
        raise DataError(f"{path}: no data rows")
    series = np.array(values).T
    return Dataset(series, np.isnan(series), tuple(labels))


REPORT_BASE = ["t", "estimate", "ess", "resampled_count"]
REPORT_WITH_TRUTH = ["t", "estimate", "truth", "rmse", "ess", "resampled_count"]


def report_csv(report):
    """Fixed column order: ``t, estimate, [truth, rmse,] ess, resampled_count``."""
    with_truth = report.rmse_trace is not None
    rows = []
    for t in range(report.horizon):
        row = [t + 1, format_float(report.estimates[t])]
        if with_truth:
            row += [format_float(report.truth[t]), format_float(report.rmse_trace[t])]
        row += [format_float(report.ess_trace[t]), int(report.resample_counts[t])]
        rows.append(row)
    return csv_text(REPORT_WITH_TRUTH if with_truth else REPORT_BASE, rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def dumps_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def report_json(report, extra=None):
    meta = {
        "config": report.config,
        "horizon": report.horizon,
        "final_rmse": report.final_rmse,
        "mean_ess": float(np.mean(report.ess_trace)),
        "total_resampled": int(np.sum(report.resample_counts)),
        "metadata": report.metadata,
    }
    if extra:
        meta.update(extra)
    return dumps_json(meta)


def read_report(path):
    """Parse a report CSV (and its ``.json`` sidecar when present).

    Returns ``(header, columns, sidecar)`` where ``columns`` maps column name
    to a float array.
    """
    path = Path(path)
    rows = _read_rows(path)
    header = rows[0]
    if header not in (REPORT_BASE, REPORT_WITH_TRUTH):
        raise DataError(f"{path}: not a filter report (header {header})")
    cols = {h: [] for h in header}
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}, line {line}: expected {len(header)} fields, got {len(row)}")
        for h, cell in zip(header, row):
            cols[h].append(_to_float(path, line, cell))
    if not rows[1:]:
        raise DataError(f"{path}: no data rows")
    sidecar = {}
    side = path.with_suffix(".json")
    if side.exists():
        try:
            sidecar = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{side}: invalid JSON at line {exc.lineno}") from None
    return header, {h: np.array(v) for h, v in cols.items()}, sidecar


def write_outputs(outdir, files):
    """Write ``{name: text}`` into ``outdir``, each file replaced atomically."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        target = outdir / name
        fd, tmp = tempfile.mkstemp(dir=outdir, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        written.append(target)
    return written
