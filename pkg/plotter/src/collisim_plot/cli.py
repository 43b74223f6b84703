"""``collisim-plot``: render a figure described by a plot manifest."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .manifest import ManifestError, load_manifest
from .plots import plot_scan, plot_trajectory


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="collisim-plot",
        description="Render simulator artifacts (trajectory / scan CSVs) into figures",
    )
    parser.add_argument("--manifest", required=True, help="plot manifest JSON")
    parser.add_argument("--out", default=None, help="override the manifest output path")
    args = parser.parse_args(argv)

    try:
        manifest = load_manifest(args.manifest)
        if args.out:
            out = Path(args.out)
            fmt = out.suffix.lstrip(".").lower() or manifest.output_format
            manifest = type(manifest)(
                inputs=manifest.inputs,
                style=manifest.style,
                output_path=out,
                output_format=fmt,
                log_x=manifest.log_x,
                log_y=manifest.log_y,
                scan_variable=manifest.scan_variable,
            )
        if manifest.inputs_with_role("scan"):
            path = plot_scan(manifest)
        else:
            path = plot_trajectory(manifest)
    except ManifestError as exc:
        sys.stderr.write(f"E_MANIFEST {exc}\n")
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
