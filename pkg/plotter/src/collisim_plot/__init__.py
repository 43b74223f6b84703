"""Figure rendering for collisim artifacts."""

__version__ = "0.1.0"

from .manifest import ManifestError, PlotManifest, load_manifest, parse_manifest
from .plots import build_scan_figure, build_trajectory_figure, plot_scan, plot_trajectory
