"""Artifact readers and writers: CSV with provenance comments, canonical JSON.

Every CSV carries one comment line recording the tool version and the
config hash, then a header row. All numbers are written with ``repr`` so
re-parsing recovers the exact doubles and reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from . import __version__
from .errors import ValidationError


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(doc) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()[:12]


def derive_seed(global_seed: int, index: int) -> int:
    """Stable per-point seed for scans (independent of process hashing)."""
    digest = hashlib.sha256(f"{global_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, columns, rows, cfg_hash: str) -> None:
    lines = [f"# collisim {__version__} config={cfg_hash}"]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValidationError(f"row width {len(row)} does not match header {len(columns)}")
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Parse a CSV written by :func:`write_csv`.

    Returns ``(meta, columns)`` where ``meta`` is the comment line (or empty
    string) and ``columns`` maps header names to lists of parsed cells
    (floats where possible, raw strings otherwise).
    """
    meta = ""
    header = None
    data = []
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
            data.append(line.split(","))
    if header is None:
        raise ValidationError(f"{path} has no header row")
    columns = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in data]
        try:
            columns[name] = np.array([float(x) for x in raw])
        except ValueError:
            columns[name] = raw
    return meta, columns


def write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def profile_rows(profile):
    rows = []
    for j, value in enumerate(profile.values):
        rows.append((j, float(value.real), float(value.imag), float(abs(value))))
    return rows


def trajectory_rows(traj):
    rows = []
    for i in range(len(traj.times)):
        rows.append(
            (
                i,
                float(traj.times[i]),
                float(traj.observable[i]),
                float(traj.trace_errors[i]),
                float(traj.discarded_weights[i]),
                float(traj.junction_entropies[i]),
            )
        )
    return rows


TRAJECTORY_COLUMNS = (
    "collision_index",
    "time",
    "population",
    "trace_error",
    "discarded_weight",
    "junction_entropy",
)

PROFILE_COLUMNS = ("separation", "re", "im", "abs")

ME_COLUMNS = ("step", "time", "observable", "trace_error")

CORRELATION_COLUMNS = (
    "lag",
    "c1_re", "c1_im",
    "c2_re", "c2_im",
    "c3_re", "c3_im",
    "c4_re", "c4_im",
)

SCAN_COLUMNS = (
    "mu", "u", "h",
    "energy", "xi_direct", "xi_fitted",
    "A", "K", "B", "l",
    "objective", "final_population", "delta_xi_backaction",
    "dmrg_converged", "status",
)


def me_solution_rows(solution):
    rows = []
    errors = solution.trace_errors
    for i in range(len(solution.times)):
        rows.append((i, float(solution.times[i]), float(solution.observable[i]), float(errors[i])))
    return rows


def correlation_set_rows(corr):
    rows = []
    for k in range(corr.n_lags):
        rows.append(
            (
                k,
                float(corr.c1[k].real), float(corr.c1[k].imag),
                float(corr.c2[k].real), float(corr.c2[k].imag),
                float(corr.c3[k].real), float(corr.c3[k].imag),
                float(corr.c4[k].real), float(corr.c4[k].imag),
            )
        )
    return rows


def rho_snapshots_doc(snapshots):
    doc = []
    for rho in snapshots:
        doc.append([[ [float(z.real), float(z.imag)] for z in row] for row in np.asarray(rho)])
    return doc
