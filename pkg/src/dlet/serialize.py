"""Artifact serialization: versioned JSON envelopes and CSV tables.

Every JSON artifact carries ``schema`` and the fully-resolved run config
so a result can be reproduced from the file alone.  The optional
``timing`` key is the only non-deterministic field; identical config and
seed produce byte-identical output once it is stripped.  CSV layouts:
samples ``x,value``; surfaces ``tau,x,value``; variance fields
``tau,x,variance``; covariance rows ``tau1,x1,tau2,x2,covariance``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DletError

SCHEMA = "dlet-1"

_FMT = "%.17g"


def envelope(kind: str, config: dict, payload: dict,
             timing: dict = None) -> dict:
    """Wrap a result payload with schema version and resolved config."""
    doc = {"schema": SCHEMA, "kind": kind, "config": config}
    doc.update(payload)
    if timing is not None:
        doc["timing"] = timing
    return doc


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2,
                      allow_nan=False) + "\n"


def write_json(path, doc: dict) -> None:
    Path(path).write_text(dumps_json(doc))


def read_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DletError(f"cannot read JSON from {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise DletError(f"{path}: expected a JSON object")
    if doc.get("schema") not in (None, SCHEMA):
        raise DletError(f"{path}: unsupported schema {doc.get('schema')!r}")
    return doc


def strip_timing(doc: dict) -> dict:
    """Copy of the document without its non-deterministic timing field."""
    return {k: v for k, v in doc.items() if k != "timing"}


def _write_table(path, header: str, columns) -> None:
    table = np.column_stack([np.asarray(c, dtype=float).ravel()
                             for c in columns])
    np.savetxt(path, table, delimiter=",", header=header, comments="",
               fmt=_FMT)


def write_samples_csv(path, x, values) -> None:
    _write_table(path, "x,value", (x, values))


def write_surface_csv(path, taus, x, values) -> None:
    """Rows (tau, x, value) for values[j, i] at taus[j], x[i]."""
    taus = np.asarray(taus, dtype=float)
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    tt = np.repeat(taus, x.size)
    xx = np.tile(x, taus.size)
    _write_table(path, "tau,x,value", (tt, xx, values.ravel()))


def write_variance_csv(path, taus, x, values) -> None:
    """Rows (tau, x, variance) for values[j, i] at taus[j], x[i]."""
    taus = np.asarray(taus, dtype=float)
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    tt = np.repeat(taus, x.size)
    xx = np.tile(x, taus.size)
    _write_table(path, "tau,x,variance", (tt, xx, values.ravel()))


def write_covariance_csv(path, rows) -> None:
    """Rows of (tau1, x1, tau2, x2, covariance) tuples."""
    arr = np.asarray(rows, dtype=float).reshape(-1, 5)
    _write_table(path, "tau1,x1,tau2,x2,covariance",
                 tuple(arr[:, j] for j in range(5)))


def read_table_csv(path, n_columns: int) -> np.ndarray:
    try:
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DletError(f"cannot read CSV from {path}: {exc}") from exc
    if rows.shape[1] != n_columns:
        raise DletError(
            f"{path}: expected {n_columns} columns, found {rows.shape[1]}")
    return rows
