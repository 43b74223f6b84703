import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from collisim_plot import (
    ManifestError,
    build_scan_figure,
    build_trajectory_figure,
    load_manifest,
    parse_manifest,
    plot_scan,
    plot_trajectory,
)
from collisim_plot.cli import main as plot_main


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_trajectory_csv(path, populations, config_tag="config=deadbeef0001"):
    lines = [f"# collisim 0.1.0 {config_tag}"]
    lines.append("collision_index,time,population,trace_error,discarded_weight,junction_entropy")
    for i, p in enumerate(populations):
        lines.append(f"{i},{i * 0.02!r},{p!r},0.0,0.0,0.0")
    Path(path).write_text("\n".join(lines) + "\n")


def write_me_csv(path, observables, config_tag="config=deadbeef0001"):
    lines = [f"# collisim 0.1.0 {config_tag}"]
    lines.append("step,time,observable,trace_error")
    for i, o in enumerate(observables):
        lines.append(f"{i},{i * 0.02!r},{o!r},0.0")
    Path(path).write_text("\n".join(lines) + "\n")


SCAN_HEADER = (
    "mu,u,h,energy,xi_direct,xi_fitted,A,K,B,l,objective,final_population,"
    "delta_xi_backaction,dmrg_converged,status"
)


def write_scan_csv(path, rows, config_tag="config=deadbeef0002"):
    lines = [f"# collisim 0.1.0 {config_tag}", SCAN_HEADER]
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def scan_row(mu, xi_direct, xi_fitted, population, status="ok"):
    return (
        mu, 1.0, 0.1, -3.0, xi_direct, xi_fitted,
        0.1, 1.0, 0.2, 2.0, 1e-4, population, 0.01, True, status,
    )


def manifest_doc(inputs, output, **extra):
    doc = {"inputs": inputs, "output": {"path": str(output)}}
    doc.update(extra)
    return doc


class TestTrajectoryFigure:
    def test_flat_trajectory_renders(self, tmp_path):
        csv = tmp_path / "traj.csv"
        write_trajectory_csv(csv, [1.0] * 10)
        out = tmp_path / "fig.png"
        manifest = parse_manifest(
            manifest_doc([{"path": str(csv), "role": "trajectory"}], out), tmp_path
        )
        path = plot_trajectory(manifest)
        assert Path(path).stat().st_size > 0

    def test_extracted_data_equals_csv_columns(self, tmp_path):
        pops = list(np.exp(-0.05 * np.arange(12)))
        csv = tmp_path / "traj.csv"
        write_trajectory_csv(csv, pops)
        manifest = parse_manifest(
            manifest_doc([{"path": str(csv), "role": "trajectory"}], tmp_path / "f.png"),
            tmp_path,
        )
        fig, ax = build_trajectory_figure(manifest)
        line = ax.get_lines()[0]
        np.testing.assert_array_equal(line.get_xdata(), np.arange(12))
        np.testing.assert_array_equal(line.get_ydata(), np.array(pops))

    def test_me_overlay_appears_in_legend(self, tmp_path):
        traj = tmp_path / "traj.csv"
        me = tmp_path / "me.csv"
        write_trajectory_csv(traj, [1.0, 0.9, 0.8])
        write_me_csv(me, [1.0, 0.91, 0.81])
        manifest = parse_manifest(
            manifest_doc(
                [
                    {"path": str(traj), "role": "trajectory"},
                    {"path": str(me), "role": "me_solution"},
                ],
                tmp_path / "f.png",
            ),
            tmp_path,
        )
        fig, ax = build_trajectory_figure(manifest)
        labels = [t.get_text() for t in ax.get_legend().get_texts()]
        assert len(labels) == 2
        assert any(l.startswith("ME ") for l in labels)

    def test_log_scale_flag(self, tmp_path):
        csv = tmp_path / "traj.csv"
        write_trajectory_csv(csv, list(np.exp(-0.1 * np.arange(20))))
        manifest = parse_manifest(
            manifest_doc(
                [{"path": str(csv), "role": "trajectory"}],
                tmp_path / "f.png",
                log_scale={"y": True},
            ),
            tmp_path,
        )
        fig, ax = build_trajectory_figure(manifest)
        assert ax.get_yscale() == "log"

    def test_inputs_untouched(self, tmp_path):
        csv = tmp_path / "traj.csv"
        write_trajectory_csv(csv, [1.0, 0.5, 0.25])
        before = sha256(csv)
        manifest = parse_manifest(
            manifest_doc([{"path": str(csv), "role": "trajectory"}], tmp_path / "f.png"),
            tmp_path,
        )
        plot_trajectory(manifest)
        assert sha256(csv) == before

    def test_missing_column_reports_name(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("# x\ncollision_index,time\n0,0.0\n")
        manifest = parse_manifest(
            manifest_doc([{"path": str(bad), "role": "trajectory"}], tmp_path / "f.png"),
            tmp_path,
        )
        with pytest.raises(ManifestError, match="population"):
            build_trajectory_figure(manifest)


class TestScanFigure:
    def test_single_row_scan_renders(self, tmp_path):
        csv = tmp_path / "scan.csv"
        write_scan_csv(csv, [scan_row(-0.3, 1.4, 1.5, 0.4)])
        manifest = parse_manifest(
            manifest_doc([{"path": str(csv), "role": "scan"}], tmp_path / "scan.png"),
            tmp_path,
        )
        path = plot_scan(manifest)
        assert Path(path).stat().st_size > 0

    def test_failed_rows_excluded_and_reported(self, tmp_path, capsys):
        csv = tmp_path / "scan.csv"
        write_scan_csv(
            csv,
            [
                scan_row(-0.2, 1.0, 1.1, 0.3),
                scan_row(-0.3, float("nan"), float("nan"), float("nan"), status="error:NumericError"),
                scan_row(-0.4, 1.2, 1.3, 0.5),
            ],
        )
        manifest = parse_manifest(
            manifest_doc([{"path": str(csv), "role": "scan"}], tmp_path / "scan.png"),
            tmp_path,
        )
        fig, axes = build_scan_figure(manifest)
        err = capsys.readouterr().err
        assert "excluded 1" in err
        line = axes[0].get_lines()[0]
        assert len(line.get_xdata()) == 2

    def test_identical_series_overlap_in_data(self, tmp_path):
        rows = [scan_row(mu, xi, xi, 0.2 + 0.1 * i) for i, (mu, xi) in enumerate([(-0.2, 1.0), (-0.4, 2.0)])]
        csv = tmp_path / "scan.csv"
        write_scan_csv(csv, rows)
        manifest = parse_manifest(
            manifest_doc([{"path": str(csv), "role": "scan"}], tmp_path / "scan.png"),
            tmp_path,
        )
        fig, axes = build_scan_figure(manifest)
        direct = axes[0].get_lines()[0].get_ydata()
        fitted = axes[1].get_lines()[0].get_ydata()
        np.testing.assert_array_equal(direct, fitted)

    def test_inputs_untouched(self, tmp_path):
        csv = tmp_path / "scan.csv"
        write_scan_csv(csv, [scan_row(-0.3, 1.4, 1.5, 0.4)])
        before = sha256(csv)
        manifest = parse_manifest(
            manifest_doc([{"path": str(csv), "role": "scan"}], tmp_path / "scan.png"),
            tmp_path,
        )
        plot_scan(manifest)
        assert sha256(csv) == before


class TestCli:
    def test_cli_renders_and_prints_path(self, tmp_path, capsys):
        csv = tmp_path / "traj.csv"
        write_trajectory_csv(csv, [1.0, 0.8, 0.6])
        mpath = tmp_path / "manifest.json"
        mpath.write_text(
            json.dumps(manifest_doc([{"path": "traj.csv", "role": "trajectory"}], "fig.png"))
        )
        rc = plot_main(["--manifest", str(mpath)])
        assert rc == 0
        out = capsys.readouterr().out.strip()
        assert out.endswith("fig.png")
        assert (tmp_path / "fig.png").exists()

    def test_cli_out_override(self, tmp_path, capsys):
        csv = tmp_path / "traj.csv"
        write_trajectory_csv(csv, [1.0, 0.8])
        mpath = tmp_path / "manifest.json"
        mpath.write_text(
            json.dumps(manifest_doc([{"path": "traj.csv", "role": "trajectory"}], "fig.png"))
        )
        target = tmp_path / "custom.svg"
        rc = plot_main(["--manifest", str(mpath), "--out", str(target)])
        assert rc == 0
        assert target.exists()

    def test_cli_bad_manifest_fails(self, tmp_path, capsys):
        rc = plot_main(["--manifest", str(tmp_path / "none.json")])
        assert rc == 1
        assert "E_MANIFEST" in capsys.readouterr().err

    def test_svg_output_deterministic(self, tmp_path):
        csv = tmp_path / "traj.csv"
        write_trajectory_csv(csv, [1.0, 0.7, 0.5])
        outs = []
        for name in ("a.svg", "b.svg"):
            mpath = tmp_path / f"m_{name}.json"
            mpath.write_text(
                json.dumps(
                    manifest_doc([{"path": "traj.csv", "role": "trajectory"}], name)
                )
            )
            rc = plot_main(["--manifest", str(mpath)])
            assert rc == 0
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]


@pytest.mark.slow
class TestAgainstRealArtifacts:
    """Render figures from artifacts produced by the simulator CLI itself."""

    @pytest.fixture(scope="class")
    def artifacts(self, tmp_path_factory):
        base = tmp_path_factory.mktemp("artifacts")
        config = {
            "model": {"n_sites": 6, "d": 2, "h": 0.3, "u": 1.0, "mu": -0.4},
            "probe": {"kind": "qubit", "gamma": 1.0, "initial_occupation": 1},
            "collisions": {"dt": 0.02, "n_collisions": 6, "max_rank": 32, "discard_tol": 1e-12},
            "dmrg": {"max_sweeps": 8, "max_rank": 16, "discard_tol": 1e-12, "seed": 3},
            "fit": {"population_size": 8, "generations": 4, "seed": 5},
            "me": {"ansatz": {"A": 0.0, "K": 1.0, "B": 0.5, "l": 2.0}},
            "scan": {"variable": "mu", "values": [-0.3, -0.5]},
            "seed": 11,
        }
        cfg_path = base / "config.json"
        cfg_path.write_text(json.dumps(config))
        for cmd, extra in (
            ("ground-state", []),
            ("sweep", ["--ground-state", str(base / "gs" / "ground_state.json")]),
            ("me", []),
            ("phase-scan", []),
        ):
            out = base / {"ground-state": "gs", "sweep": "sweep", "me": "me", "phase-scan": "scan"}[cmd]
            proc = subprocess.run(
                [sys.executable, "-m", "collisim.cli", cmd, "--config", str(cfg_path), "--out", str(out), *extra],
                capture_output=True, text=True,
            )
            assert proc.returncode == 0, f"{cmd}: {proc.stderr}"
        return base

    def test_trajectory_figure_from_cli_artifacts(self, artifacts, tmp_path):
        traj = artifacts / "sweep" / "trajectory.csv"
        me = artifacts / "me" / "me_solution.csv"
        hashes = {p: sha256(p) for p in (traj, me)}
        manifest = parse_manifest(
            manifest_doc(
                [
                    {"path": str(traj), "role": "trajectory"},
                    {"path": str(me), "role": "me_solution"},
                ],
                tmp_path / "fig.svg",
            ),
            tmp_path,
        )
        fig, ax = build_trajectory_figure(manifest)
        from collisim_plot.artifacts import read_artifact_csv

        _, cols = read_artifact_csv(traj)
        np.testing.assert_array_equal(ax.get_lines()[0].get_ydata(), cols["population"])
        plot_trajectory(manifest)
        for p, h in hashes.items():
            assert sha256(p) == h

    def test_scan_figure_from_cli_artifacts(self, artifacts, tmp_path):
        scan = artifacts / "scan" / "scan.csv"
        before = sha256(scan)
        manifest = parse_manifest(
            manifest_doc([{"path": str(scan), "role": "scan"}], tmp_path / "scan.png"),
            tmp_path,
        )
        fig, axes = build_scan_figure(manifest)
        from collisim_plot.artifacts import read_artifact_csv

        _, cols = read_artifact_csv(scan)
        np.testing.assert_array_equal(axes[0].get_lines()[0].get_ydata(), cols["xi_direct"])
        np.testing.assert_array_equal(axes[1].get_lines()[0].get_ydata(), cols["xi_fitted"])
        np.testing.assert_array_equal(axes[2].get_lines()[0].get_ydata(), cols["final_population"])
        plot_scan(manifest)
        assert sha256(scan) == before
