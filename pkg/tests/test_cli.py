import json
import os
import subprocess
import sys

import numpy as np
import pytest

from collisim.io import read_csv, read_json


def base_config(n_sites=6, record_rho=False, scan=None, me=None, gamma=1.0):
    doc = {
        "model": {"n_sites": n_sites, "d": 2, "h": 0.3, "u": 1.0, "mu": -0.4},
        "probe": {"kind": "qubit", "gamma": gamma, "initial_occupation": 1},
        "collisions": {
            "dt": 0.02,
            "n_collisions": n_sites,
            "max_rank": 32,
            "discard_tol": 1e-12,
            "record_rho": record_rho,
        },
        "dmrg": {"max_sweeps": 8, "energy_tol": 1e-9, "max_rank": 16, "discard_tol": 1e-12, "seed": 3},
        "fit": {"population_size": 12, "generations": 8, "seed": 5},
        "seed": 11,
    }
    if scan is not None:
        doc["scan"] = scan
    if me is not None:
        doc["me"] = me
    return doc


def run_cli(args, cwd):
    proc = subprocess.run(
        [sys.executable, "-m", "collisim.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )
    return proc


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path


class TestGroundStateCommand:
    def test_artifacts_written_and_energy_matches_ed(self, tmp_path):
        doc = base_config(n_sites=4)
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "gs"
        proc = run_cli(["ground-state", "--config", str(cfg), "--out", str(out)], tmp_path)
        assert proc.returncode == 0, proc.stderr
        assert (out / "ground_state.json").exists()
        for kind in (1, 2, 3, 4):
            assert (out / f"correlations_k{kind}.csv").exists()
        summary = read_json(out / "summary.json")

        from collisim import BoseHubbardParams, build_dense_hamiltonian

        p = BoseHubbardParams(n_sites=4, d=2, h=0.3, u=1.0, mu=-0.4)
        evals = np.linalg.eigvalsh(build_dense_hamiltonian(p))
        assert abs(summary["energy"] - evals[0]) < 1e-9 * max(1, abs(evals[0]))

    def test_zero_hopping_reports_zero_length(self, tmp_path):
        doc = base_config(n_sites=4)
        doc["model"]["h"] = 0.0
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "gs"
        proc = run_cli(["ground-state", "--config", str(cfg), "--out", str(out)], tmp_path)
        assert proc.returncode == 0, proc.stderr
        summary = read_json(out / "summary.json")
        assert summary["xi"]["2"] == pytest.approx(0.0, abs=1e-6)

    def test_rerun_is_byte_identical(self, tmp_path):
        doc = base_config(n_sites=4)
        cfg = write_config(tmp_path, doc)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            proc = run_cli(["ground-state", "--config", str(cfg), "--out", str(out)], tmp_path)
            assert proc.returncode == 0, proc.stderr
        for name in ("ground_state.json", "summary.json", "correlations_k2.csv", "dmrg_log.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_bad_config_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, {"model": {"n_sites": 1}})
        proc = run_cli(["ground-state", "--config", str(cfg)], tmp_path)
        assert proc.returncode == 2
        assert proc.stderr.startswith("E_INPUT")

    def test_missing_config_exits_2(self, tmp_path):
        proc = run_cli(["ground-state", "--config", str(tmp_path / "nope.json")], tmp_path)
        assert proc.returncode == 2
        assert proc.stderr.startswith("E_INPUT")


class TestSweepCommand:
    def _prepare_gs(self, tmp_path, doc):
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "gs"
        proc = run_cli(["ground-state", "--config", str(cfg), "--out", str(out)], tmp_path)
        assert proc.returncode == 0, proc.stderr
        return cfg, out / "ground_state.json"

    def test_sweep_artifacts(self, tmp_path):
        doc = base_config(n_sites=5, record_rho=True)
        doc["collisions"]["n_collisions"] = 5
        cfg, gs = self._prepare_gs(tmp_path, doc)
        out = tmp_path / "sweep"
        proc = run_cli(
            ["sweep", "--config", str(cfg), "--ground-state", str(gs), "--out", str(out)],
            tmp_path,
        )
        assert proc.returncode == 0, proc.stderr
        meta, cols = read_csv(out / "trajectory.csv")
        assert "collisim" in meta and "config=" in meta
        assert len(cols["population"]) == 6
        assert (out / "env_after.json").exists()
        assert (out / "rho_snapshots.json").exists()
        back = read_json(out / "back_action.json")
        assert back["delta_xi"] >= 0

    def test_gamma_zero_flat_population(self, tmp_path):
        doc = base_config(n_sites=4, gamma=0.0)
        cfg, gs = self._prepare_gs(tmp_path, doc)
        out = tmp_path / "sweep"
        proc = run_cli(
            ["sweep", "--config", str(cfg), "--ground-state", str(gs), "--out", str(out)],
            tmp_path,
        )
        assert proc.returncode == 0, proc.stderr
        _, cols = read_csv(out / "trajectory.csv")
        np.testing.assert_allclose(cols["population"], 1.0, atol=1e-9)

    def test_dims_mismatch_exits_2(self, tmp_path):
        doc = base_config(n_sites=4)
        cfg, gs = self._prepare_gs(tmp_path, doc)
        doc6 = base_config(n_sites=6)
        cfg6 = write_config(tmp_path, doc6, name="config6.json")
        proc = run_cli(
            ["sweep", "--config", str(cfg6), "--ground-state", str(gs)], tmp_path
        )
        assert proc.returncode == 2
        assert proc.stderr.startswith("E_INPUT")


class TestMeCommand:
    def test_me_from_ansatz(self, tmp_path):
        doc = base_config(n_sites=4, me={"ansatz": {"A": 0.0, "K": 1.0, "B": 0.5, "l": 2.0}})
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "me"
        proc = run_cli(["me", "--config", str(cfg), "--out", str(out)], tmp_path)
        assert proc.returncode == 0, proc.stderr
        _, cols = read_csv(out / "me_solution.csv")
        assert len(cols["observable"]) == 5
        assert cols["trace_error"].max() < 1e-8
        _, corr = read_csv(out / "correlations_used.csv")
        assert corr["c2_re"][0] == pytest.approx(0.5 * 1.0 / 0.02)

    def test_me_from_correlation_csv(self, tmp_path):
        doc = base_config(n_sites=4, me={"ansatz": {"A": 0.0, "K": 1.0, "B": 0.5, "l": 2.0}})
        cfg = write_config(tmp_path, doc)
        out1 = tmp_path / "me1"
        run_cli(["me", "--config", str(cfg), "--out", str(out1)], tmp_path)
        out2 = tmp_path / "me2"
        proc = run_cli(
            ["me", "--config", str(cfg), "--out", str(out2),
             "--correlations", str(out1 / "correlations_used.csv")],
            tmp_path,
        )
        assert proc.returncode == 0, proc.stderr
        assert (out1 / "me_solution.csv").read_bytes() == (out2 / "me_solution.csv").read_bytes()

    def test_me_without_ansatz_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, base_config(n_sites=4))
        proc = run_cli(["me", "--config", str(cfg)], tmp_path)
        assert proc.returncode == 2


class TestFitCommand:
    def test_fit_on_synthetic_me_trajectory(self, tmp_path):
        truth = {"A": 0.0, "K": 1.0, "B": 0.4, "l": 1.5}
        doc = base_config(n_sites=24, me={"ansatz": truth})
        doc["fit"] = {"population_size": 24, "generations": 15, "seed": 5}
        cfg = write_config(tmp_path, doc)
        me_out = tmp_path / "me"
        proc = run_cli(["me", "--config", str(cfg), "--out", str(me_out)], tmp_path)
        assert proc.returncode == 0, proc.stderr
        # adapt the ME solution CSV into a trajectory CSV
        _, cols = read_csv(me_out / "me_solution.csv")
        from collisim.io import TRAJECTORY_COLUMNS, write_csv

        rows = [
            (int(s), t, o, e, 0.0, 0.0)
            for s, t, o, e in zip(cols["step"], cols["time"], cols["observable"], cols["trace_error"])
        ]
        traj_path = tmp_path / "trajectory.csv"
        write_csv(traj_path, TRAJECTORY_COLUMNS, rows, "test")

        out = tmp_path / "fit"
        proc = run_cli(
            ["fit", "--config", str(cfg), "--trajectory", str(traj_path), "--out", str(out)],
            tmp_path,
        )
        assert proc.returncode == 0, proc.stderr
        result = read_json(out / "fit_result.json")
        assert result["objective"] < 1e-6
        assert result["xi_direct"] is None

    def test_fit_deterministic(self, tmp_path):
        truth = {"A": 0.0, "K": 1.0, "B": 0.4, "l": 1.5}
        doc = base_config(n_sites=4, me={"ansatz": truth})
        cfg = write_config(tmp_path, doc)
        me_out = tmp_path / "me"
        run_cli(["me", "--config", str(cfg), "--out", str(me_out)], tmp_path)
        _, cols = read_csv(me_out / "me_solution.csv")
        from collisim.io import TRAJECTORY_COLUMNS, write_csv

        rows = [
            (int(s), t, o, e, 0.0, 0.0)
            for s, t, o, e in zip(cols["step"], cols["time"], cols["observable"], cols["trace_error"])
        ]
        traj_path = tmp_path / "trajectory.csv"
        write_csv(traj_path, TRAJECTORY_COLUMNS, rows, "test")
        outs = []
        for name in ("f1", "f2"):
            out = tmp_path / name
            proc = run_cli(
                ["fit", "--config", str(cfg), "--trajectory", str(traj_path), "--out", str(out)],
                tmp_path,
            )
            assert proc.returncode == 0, proc.stderr
            outs.append((out / "fit_result.json").read_bytes())
        assert outs[0] == outs[1]

    def test_missing_trajectory_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, base_config(n_sites=4))
        proc = run_cli(
            ["fit", "--config", str(cfg), "--trajectory", str(tmp_path / "no.csv")], tmp_path
        )
        assert proc.returncode == 2
        assert proc.stderr.startswith("E_INPUT")


class TestPhaseScanCommand:
    def test_single_point_scan(self, tmp_path):
        doc = base_config(n_sites=4, scan={"variable": "mu", "values": [-0.4]})
        doc["fit"] = {"population_size": 8, "generations": 4, "seed": 5}
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "scan"
        proc = run_cli(["phase-scan", "--config", str(cfg), "--out", str(out)], tmp_path)
        assert proc.returncode == 0, proc.stderr
        _, cols = read_csv(out / "scan.csv")
        assert cols["status"] == ["ok"]
        assert cols["mu"][0] == pytest.approx(-0.4)

    def test_empty_scan_exits_2(self, tmp_path):
        doc = base_config(n_sites=4, scan={"variable": "mu", "values": []})
        cfg = write_config(tmp_path, doc)
        proc = run_cli(["phase-scan", "--config", str(cfg)], tmp_path)
        assert proc.returncode == 2

    def test_no_scan_group_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, base_config(n_sites=4))
        proc = run_cli(["phase-scan", "--config", str(cfg)], tmp_path)
        assert proc.returncode == 2


class TestConfigParsing:
    def test_n_collisions_exceeding_sites_rejected(self, tmp_path):
        doc = base_config(n_sites=4)
        doc["collisions"]["n_collisions"] = 9
        from collisim.config import parse_config
        from collisim.errors import ConfigError

        with pytest.raises(ConfigError, match="n_collisions"):
            parse_config(doc)

    def test_defaults_applied(self):
        from collisim.config import parse_config

        doc = base_config(n_sites=4)
        del doc["fit"]
        cfg = parse_config(doc)
        assert cfg.fit.population_size == 64
        assert cfg.model.d == 2
