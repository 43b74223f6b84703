"""Readers for the CSV schemas the simulator CLI writes.

Figures are rendered from artifacts only; nothing here recomputes physics.
"""

from __future__ import annotations

import sys

import numpy as np

from .manifest import ManifestError

TRAJECTORY_REQUIRED = ("collision_index", "population")
ME_REQUIRED = ("step", "observable")
SCAN_REQUIRED = ("mu", "u", "h", "xi_direct", "xi_fitted", "final_population", "status")


def read_artifact_csv(path):
    """Parse a commented CSV into (meta_comment, column dict)."""
    meta = ""
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                meta = line.lstrip("# ")
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(line.split(","))
    if header is None:
        raise ManifestError(f"{path} has no header row")
    columns = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            columns[name] = np.array([float(x) for x in raw])
        except ValueError:
            columns[name] = raw
    return meta, columns


def config_label(meta: str, fallback: str) -> str:
    for token in meta.split():
        if token.startswith("config="):
            return token
    return fallback


def require_columns(columns, required, path):
    for name in required:
        if name not in columns:
            raise ManifestError(f"{path} lacks required column {name!r}")


def load_trajectory(path):
    meta, cols = read_artifact_csv(path)
    require_columns(cols, TRAJECTORY_REQUIRED, path)
    return meta, cols


def load_me_solution(path):
    meta, cols = read_artifact_csv(path)
    require_columns(cols, ME_REQUIRED, path)
    return meta, cols


def load_scan(path):
    meta, cols = read_artifact_csv(path)
    require_columns(cols, SCAN_REQUIRED, path)
    status = cols["status"]
    keep = np.array([s == "ok" for s in status], dtype=bool)
    dropped = int((~keep).sum())
    if dropped:
        print(f"plot_scan: excluded {dropped} non-ok row(s) from {path}", file=sys.stderr)
    filtered = {}
    for name, values in cols.items():
        if isinstance(values, np.ndarray):
            filtered[name] = values[keep]
        else:
            filtered[name] = [v for v, k in zip(values, keep) if k]
    return meta, filtered
