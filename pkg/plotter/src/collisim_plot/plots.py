"""Figure builders: population trajectories with ME overlays, phase-scan panels.

Styling follows the source material's conventions: markers for exact
simulation data, solid lines for master-equation results, filled vs empty
markers for directly computed vs probed correlation lengths.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .artifacts import config_label, load_me_solution, load_scan, load_trajectory
from .manifest import ManifestError, PlotManifest

matplotlib.rcParams["svg.hashsalt"] = "collisim-plot"


def _style_for(manifest: PlotManifest, series: str) -> dict:
    return dict(manifest.style.get(series, {}))


def _save(fig, manifest: PlotManifest):
    manifest.output_path.parent.mkdir(parents=True, exist_ok=True)
    kwargs = {"format": manifest.output_format}
    if manifest.output_format == "svg":
        kwargs["metadata"] = {"Date": None}  # suppress timestamps: byte-stable output
    fig.savefig(manifest.output_path, **kwargs)
    plt.close(fig)
    return manifest.output_path


def build_trajectory_figure(manifest: PlotManifest):
    """Markers per measured trajectory, solid line per ME solution."""
    trajectories = manifest.inputs_with_role("trajectory")
    solutions = manifest.inputs_with_role("me_solution")
    if not trajectories and not solutions:
        raise ManifestError("trajectory figure needs trajectory or me_solution inputs")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for idx, item in enumerate(trajectories):
        meta, cols = load_trajectory(item.path)
        label = config_label(meta, item.path.stem)
        style = {"marker": "o", "linestyle": "none", "markersize": 4}
        style.update(_style_for(manifest, item.path.stem))
        ax.plot(cols["collision_index"], cols["population"], label=label, **style)
    for item in solutions:
        meta, cols = load_me_solution(item.path)
        label = "ME " + config_label(meta, item.path.stem)
        style = {"linestyle": "-", "linewidth": 1.5}
        style.update(_style_for(manifest, item.path.stem))
        ax.plot(cols["step"], cols["observable"], label=label, **style)
    ax.set_xlabel("collision index")
    ax.set_ylabel("population")
    if manifest.log_x:
        ax.set_xscale("log")
    if manifest.log_y:
        ax.set_yscale("log")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig, ax


def plot_trajectory(manifest: PlotManifest):
    fig, _ = build_trajectory_figure(manifest)
    return _save(fig, manifest)


def build_scan_figure(manifest: PlotManifest):
    """Three panels: direct lengths (filled), fitted lengths (empty), final population."""
    scans = manifest.inputs_with_role("scan")
    if not scans:
        raise ManifestError("scan figure needs at least one scan input")
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 7.5), sharex=True)
    for item in scans:
        meta, cols = load_scan(item.path)
        label = config_label(meta, item.path.stem)
        x = cols[manifest.scan_variable]
        style = _style_for(manifest, item.path.stem)
        color = style.get("color", "C0")
        axes[0].plot(x, cols["xi_direct"], marker="o", linestyle="-", color=color, label=label)
        axes[1].plot(
            x, cols["xi_fitted"], marker="o", linestyle="--", color=color,
            markerfacecolor="none", label=label,
        )
        axes[2].plot(x, cols["final_population"], marker="s", linestyle="-", color=color, label=label)
    axes[0].set_ylabel(r"$\xi$ (direct)")
    axes[1].set_ylabel(r"$\xi$ (probed)")
    axes[2].set_ylabel("final population")
    axes[2].set_xlabel(manifest.scan_variable)
    if manifest.log_y:
        axes[0].set_yscale("log")
        axes[1].set_yscale("log")
    axes[0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig, axes


def plot_scan(manifest: PlotManifest):
    fig, _ = build_scan_figure(manifest)
    return _save(fig, manifest)
