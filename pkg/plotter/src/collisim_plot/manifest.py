"""Plot manifests: which artifacts to draw, how to style them, where to save."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

VALID_ROLES = ("trajectory", "me_solution", "scan")


class ManifestError(ValueError):
    """Manifest missing, malformed, or referencing unusable inputs."""


@dataclass(frozen=True)
class PlotInput:
    path: Path
    role: str


@dataclass(frozen=True)
class PlotManifest:
    inputs: tuple
    style: dict
    output_path: Path
    output_format: str
    log_x: bool = False
    log_y: bool = False
    scan_variable: str = "mu"

    def inputs_with_role(self, role: str):
        return [i for i in self.inputs if i.role == role]


def parse_manifest(doc: dict, base_dir: Path | None = None) -> PlotManifest:
    base = base_dir or Path.cwd()
    if not isinstance(doc, dict):
        raise ManifestError("manifest root must be a JSON object")
    raw_inputs = doc.get("inputs")
    if not isinstance(raw_inputs, list) or not raw_inputs:
        raise ManifestError("manifest needs a non-empty 'inputs' list")
    inputs = []
    for entry in raw_inputs:
        role = entry.get("role")
        if role not in VALID_ROLES:
            raise ManifestError(f"input role {role!r} not one of {VALID_ROLES}")
        path = Path(entry.get("path", ""))
        if not path.is_absolute():
            path = base / path
        if not path.exists():
            raise ManifestError(f"input file does not exist: {path}")
        inputs.append(PlotInput(path=path, role=role))

    output = doc.get("output", {})
    out_path = Path(output.get("path", "figure.png"))
    if not out_path.is_absolute():
        out_path = base / out_path
    fmt = output.get("format", out_path.suffix.lstrip(".") or "png").lower()
    if fmt not in ("png", "svg"):
        raise ManifestError(f"output format must be png or svg, got {fmt!r}")

    log_scale = doc.get("log_scale", {})
    return PlotManifest(
        inputs=tuple(inputs),
        style=doc.get("style", {}),
        output_path=out_path,
        output_format=fmt,
        log_x=bool(log_scale.get("x", False)),
        log_y=bool(log_scale.get("y", False)),
        scan_variable=doc.get("scan_variable", "mu"),
    )


def load_manifest(path) -> PlotManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    return parse_manifest(doc, base_dir=path.parent)
