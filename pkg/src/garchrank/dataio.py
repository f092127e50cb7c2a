"""CSV ingestion and result serialization.

CSV files are comma-delimited with a header row and RFC-style quoting.
Floats are written with repr precision so a write/read round trip is
bit-exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

RESULT_SCHEMA = "garchrank.test/1"


@dataclass(frozen=True)
class IngestResult:
    values: np.ndarray
    dropped: int
    column: str


def ingest_csv(path, column=None, returns_or_prices: str = "returns",
               log_returns: bool = False, tail: int | None = None,
               bad_row_threshold: float = 0.5) -> IngestResult:
    """Read one numeric column from a delimited file with a header row.

    Prices are converted to returns (log or simple); NaN/blank rows are
    dropped and counted.  ``tail`` keeps the last points after conversion.
    """
    if returns_or_prices not in ("returns", "prices"):
        raise ValueError("returns_or_prices must be 'returns' or 'prices'")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if column is None:
            col_idx, col_name = 0, header[0]
        elif isinstance(column, int):
            col_idx, col_name = column, header[column]
        else:
            try:
                col_idx = header.index(column)
            except ValueError:
                raise ValueError(f"{path}: no column named {column!r}; "
                                 f"header is {header}") from None
            col_name = column
        values = []
        dropped = 0
        rows = 0
        for row in reader:
            rows += 1
            if col_idx >= len(row) or not row[col_idx].strip():
                dropped += 1
                continue
            try:
                v = float(row[col_idx])
            except ValueError:
                dropped += 1
                continue
            if math.isnan(v):
                dropped += 1
                continue
            values.append(v)
    if rows and dropped > bad_row_threshold * rows:
        raise ValueError(f"{path}: {dropped} of {rows} rows unusable "
                         f"in column {col_name!r}")
    series = np.asarray(values, dtype=float)
    if returns_or_prices == "prices":
        if series.size < 2:
            raise ValueError(f"{path}: need at least 2 prices to form returns")
        if np.any(series <= 0) and log_returns:
            raise ValueError(f"{path}: nonpositive prices cannot be log-differenced")
        if log_returns:
            series = np.diff(np.log(series))
        else:
            series = np.diff(series) / series[:-1]
    if tail is not None:
        series = series[-tail:]
    if series.size == 0:
        raise ValueError(f"{path}: no usable data in column {col_name!r}")
    return IngestResult(values=series, dropped=dropped, column=col_name)


def write_series_csv(path, values, header: str = "value") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([header])
        for v in np.asarray(values, dtype=float):
            writer.writerow([repr(float(v))])


def fit_to_dict(res) -> dict:
    spec = res.spec_hat
    return {
        "omega": spec.omega,
        "alpha": list(spec.alpha),
        "beta": list(spec.beta),
        "p": spec.p,
        "q": spec.q,
        "objective": res.objective,
        "converged": res.converged,
        "iterations": res.iterations,
        "init_rule": res.init_rule.value,
        "boundary": res.boundary,
        "n": int(res.residuals.size),
    }


def test_result_to_dict(res, bootstrap=None) -> dict:
    doc = {
        "schema": RESULT_SCHEMA,
        "score": res.score.name,
        "level": res.level,
        "T": [float(v) for v in res.T],
        "mu": [float(v) for v in res.mu],
        "L_N": res.L_N,
        "p_asymptotic": res.p_asymptotic,
        "p_bootstrap": None,
        "sigma_hat": [[float(v) for v in row] for row in res.sigma_hat.matrix],
        "sigma_ridge": res.sigma_hat.ridge_applied,
        "reject": bool(res.reject),
        "fits": [fit_to_dict(f) for f in res.fits],
    }
    if bootstrap is not None:
        doc["p_bootstrap"] = bootstrap.p_bootstrap
        doc["bootstrap_critical_value"] = bootstrap.critical_value
        doc["B"] = bootstrap.B
        doc["bootstrap_dropped"] = bootstrap.dropped
        doc["bootstrap_seed"] = bootstrap.seed
        doc["reject"] = bool(bootstrap.reject)
        if bootstrap.warning:
            doc["warning"] = bootstrap.warning
    return doc


def dump_json(doc: dict, path=None) -> str:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
