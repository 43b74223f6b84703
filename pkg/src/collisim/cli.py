"""Command-line entry point: ground-state preparation, probe sweeps,
master-equation runs, fitting, and phase scans.

Exit codes: 0 success, 2 input/config error, 3 numeric failure, 4 resource
cap exceeded. Errors print one machine-readable tag line on stderr.
Every command is a pure function of (config, input artifacts, seed), so
reruns produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .collisions import back_action, sweep
from .config import ExperimentConfig, load_config
from .dmrg import correlation_length, dmrg_ground_state, environment_correlations
from .errors import (
    CollisimError,
    ConfigError,
    NumericError,
    ResourceError,
    UndefinedLengthError,
    ValidationError,
)
from .fitting import (
    FitConfig,
    ga_minimize,
    me_inputs_for,
    objective_observable,
    objective_state,
)
from .io import (
    CORRELATION_COLUMNS,
    ME_COLUMNS,
    PROFILE_COLUMNS,
    SCAN_COLUMNS,
    TRAJECTORY_COLUMNS,
    config_hash,
    correlation_set_rows,
    derive_seed,
    me_solution_rows,
    profile_rows,
    read_csv,
    rho_snapshots_doc,
    trajectory_rows,
    write_csv,
    write_json,
)
from .lattice import build_bose_hubbard_mpo
from .master_equation import build_correlations, correlations_from_profile, integrate_me
from .mps import load_mps, save_mps

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_RESOURCE = 4


def _fail(tag: str, message: str, code: int) -> int:
    sys.stderr.write(f"{tag} {message}\n")
    return code


def _out_dir(cfg: ExperimentConfig, args) -> Path:
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _xi_or_none(profile):
    try:
        return correlation_length(profile)
    except UndefinedLengthError:
        return None


def _reference_window(n_sites: int):
    reference = n_sites // 2
    return reference, n_sites - 1 - reference


def cmd_ground_state(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg, args)
    chash = config_hash(cfg.raw)
    mpo = build_bose_hubbard_mpo(cfg.model)
    result = dmrg_ground_state(mpo, cfg.dmrg)
    save_mps(result.state, out / "ground_state.json")

    reference, max_sep = _reference_window(cfg.model.n_sites)
    xi = {}
    for kind in (1, 2, 3, 4):
        profile = environment_correlations(result.state, kind, reference, max_sep)
        write_csv(out / f"correlations_k{kind}.csv", PROFILE_COLUMNS, profile_rows(profile), chash)
        xi[str(kind)] = _xi_or_none(profile)

    write_csv(
        out / "dmrg_log.csv",
        ("sweep", "energy"),
        [(i + 1, e) for i, e in enumerate(result.sweep_energies)],
        chash,
    )
    write_json(
        out / "summary.json",
        {
            "version": __version__,
            "config_hash": chash,
            "energy": result.energy,
            "converged": result.converged,
            "sweeps_run": len(result.sweep_energies),
            "xi": xi,
            "reference_site": reference,
            "max_separation": max_sep,
            "cumulative_discarded_weight": result.state.cumulative_discarded_weight,
        },
    )
    print(f"ground-state: E={result.energy:.12g} converged={result.converged} -> {out}")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg, args)
    chash = config_hash(cfg.raw)
    env = load_mps(args.ground_state)
    if env.local_dims != [cfg.model.d] * cfg.model.n_sites:
        raise ValidationError(
            "ground-state artifact has local dimensions "
            f"{env.local_dims[:3]}...x{env.n_sites}, config expects "
            f"d={cfg.model.d}, n_sites={cfg.model.n_sites}"
        )
    probe = cfg.probe_spec()
    ccfg = cfg.collision_config()
    trajectory, env_after = sweep(env, probe, ccfg)
    write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(trajectory), chash)
    if trajectory.rho_snapshots is not None:
        write_json(out / "rho_snapshots.json", rho_snapshots_doc(trajectory.rho_snapshots))
    save_mps(env_after, out / "env_after.json")

    delta_xi, before, after = back_action(env, env_after, kind=2)
    write_json(
        out / "back_action.json",
        {
            "version": __version__,
            "config_hash": chash,
            "delta_xi": delta_xi,
            "xi_before": _xi_or_none(before),
            "xi_after": _xi_or_none(after),
            "final_junction_entropy": float(trajectory.junction_entropies[-1]),
            "truncation_warning": trajectory.truncation_warning,
        },
    )
    print(
        f"sweep: {ccfg.n_collisions} collisions, final population "
        f"{trajectory.observable[-1]:.6g}, delta_xi={delta_xi:.3g} -> {out}"
    )
    return EXIT_OK


def _me_solution_from_config(cfg: ExperimentConfig, correlations_path=None):
    probe = cfg.probe_spec()
    ccfg = cfg.collision_config()
    inputs = me_inputs_for(probe, ccfg)
    n_steps = int(cfg.me.get("n_steps", ccfg.n_collisions)) if cfg.me else ccfg.n_collisions
    if correlations_path:
        _, cols = read_csv(correlations_path)
        from .master_equation import CorrelationSet

        corr = CorrelationSet(
            ccfg.dt,
            np.asarray(cols["c1_re"]) + 1j * np.asarray(cols["c1_im"]),
            np.asarray(cols["c2_re"]) + 1j * np.asarray(cols["c2_im"]),
            np.asarray(cols["c3_re"]) + 1j * np.asarray(cols["c3_im"]),
            np.asarray(cols["c4_re"]) + 1j * np.asarray(cols["c4_im"]),
            inputs.scale,
        )
        n_steps = min(n_steps, corr.n_lags - 1)
    else:
        corr = build_correlations(cfg.me_ansatz(), ccfg.dt, n_steps, inputs.scale)
    solution = integrate_me(
        inputs.jump, inputs.h_s, corr, inputs.rho0, ccfg.dt, n_steps,
        observable_op=inputs.observable_op,
    )
    return solution, corr


def cmd_me(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg, args)
    chash = config_hash(cfg.raw)
    solution, corr = _me_solution_from_config(cfg, args.correlations)
    write_csv(out / "me_solution.csv", ME_COLUMNS, me_solution_rows(solution), chash)
    write_csv(out / "correlations_used.csv", CORRELATION_COLUMNS, correlation_set_rows(corr), chash)
    print(f"me: {len(solution.times) - 1} steps -> {out}")
    return EXIT_OK


def _load_trajectory_csv(path):
    from .collisions import Trajectory

    if not os.path.exists(path):
        raise ValidationError(f"trajectory file not found: {path}")
    _, cols = read_csv(path)
    for name in TRAJECTORY_COLUMNS:
        if name not in cols:
            raise ValidationError(f"trajectory file {path} lacks column {name!r}")
    return Trajectory(
        times=np.asarray(cols["time"]),
        observable=np.asarray(cols["population"]),
        trace_errors=np.asarray(cols["trace_error"]),
        discarded_weights=np.asarray(cols["discarded_weight"]),
        junction_entropies=np.asarray(cols["junction_entropy"]),
    )


def cmd_fit(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg, args)
    chash = config_hash(cfg.raw)
    trajectory = _load_trajectory_csv(args.trajectory)
    probe = cfg.probe_spec()
    ccfg = cfg.collision_config()
    if len(trajectory.times) != ccfg.n_collisions + 1:
        raise ValidationError(
            f"trajectory has {len(trajectory.times)} rows, config expects "
            f"{ccfg.n_collisions + 1}"
        )
    inputs = me_inputs_for(probe, ccfg)

    xi_direct = None
    max_sep = None
    if args.ground_state:
        env = load_mps(args.ground_state)
        reference, max_sep = _reference_window(env.n_sites)
        profile = environment_correlations(env, 2, reference, max_sep)
        xi_direct = _xi_or_none(profile) or 0.0

    def objective(candidate):
        return objective_observable(trajectory, candidate, inputs)

    result = ga_minimize(objective, cfg.fit, xi_max_lag=max_sep or ccfg.n_collisions)
    write_json(
        out / "fit_result.json",
        {
            "version": __version__,
            "config_hash": chash,
            "params": {
                "A": result.params.A,
                "K": result.params.K,
                "B": result.params.B,
                "l": result.params.l,
            },
            "objective": result.objective_value,
            "xi_fitted": result.xi_fitted,
            "xi_direct": xi_direct,
            "seed": result.seed,
            "generations": result.generations_run,
            "best_per_generation": result.best_per_generation,
        },
    )
    print(
        f"fit: objective={result.objective_value:.6g} xi_fitted={result.xi_fitted:.6g} -> {out}"
    )
    return EXIT_OK


def scan_point(doc: dict, index: int, variable: str, value: float):
    """Run one phase-scan point; returns a scan CSV row. Module-level so
    process pools can pickle it."""
    from .config import parse_config
    from .fitting import probe_fit_pipeline

    doc = dict(doc)
    model = dict(doc["model"])
    model[variable] = value
    doc["model"] = model
    cfg = parse_config(doc)
    point_seed = derive_seed(cfg.seed, index)

    try:
        mpo = build_bose_hubbard_mpo(cfg.model)
        dmrg_cfg = cfg.dmrg
        dmrg_cfg = type(dmrg_cfg)(
            max_sweeps=dmrg_cfg.max_sweeps,
            energy_tol=dmrg_cfg.energy_tol,
            trunc=dmrg_cfg.trunc,
            seed=point_seed % (2**32),
        )
        gs = dmrg_ground_state(mpo, dmrg_cfg)
        probe = cfg.probe_spec()
        ccfg = cfg.collision_config()
        fit_cfg = cfg.fit
        fit_cfg = FitConfig(
            bounds=fit_cfg.bounds,
            population_size=fit_cfg.population_size,
            generations=fit_cfg.generations,
            mutation_scale=fit_cfg.mutation_scale,
            crossover_rate=fit_cfg.crossover_rate,
            elitism_count=fit_cfg.elitism_count,
            seed=point_seed % (2**32),
            objective_kind=fit_cfg.objective_kind,
        )
        result, xi_direct = probe_fit_pipeline(gs.state, probe, ccfg, fit_cfg)
        _, env_after = sweep(gs.state, probe, ccfg)
        try:
            delta_xi, _, _ = back_action(gs.state, env_after, kind=2)
        except UndefinedLengthError:
            delta_xi = float("nan")
        trajectory, _ = sweep(gs.state, probe, ccfg)
        return (
            cfg.model.mu, cfg.model.u, cfg.model.h,
            gs.energy, xi_direct, result.xi_fitted,
            result.params.A, result.params.K, result.params.B, result.params.l,
            result.objective_value, float(trajectory.observable[-1]), delta_xi,
            gs.converged, "ok",
        )
    except CollisimError as exc:
        nan = float("nan")
        return (
            value if variable == "mu" else cfg.model.mu,
            cfg.model.u, cfg.model.h,
            nan, nan, nan, nan, nan, nan, nan, nan, nan, nan,
            False, f"error:{type(exc).__name__}",
        )


def cmd_phase_scan(cfg: ExperimentConfig, args) -> int:
    if not cfg.scan:
        raise ConfigError("phase-scan requires a 'scan' group with a values list")
    out = _out_dir(cfg, args)
    chash = config_hash(cfg.raw)
    variable = cfg.scan["variable"]
    values = cfg.scan["values"]
    workers = args.workers or int(os.environ.get("COLLISIM_WORKERS", "1"))

    tasks = [(cfg.raw, i, variable, v) for i, v in enumerate(values)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_point_star, tasks))
    else:
        rows = [scan_point(*t) for t in tasks]
    write_csv(out / "scan.csv", SCAN_COLUMNS, rows, chash)
    n_failed = sum(1 for r in rows if r[-1] != "ok")
    print(f"phase-scan: {len(rows)} points, {n_failed} failed -> {out}")
    return EXIT_OK


def _scan_point_star(task):
    return scan_point(*task)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collisim",
        description="Collisional probing of colored quantum noise in 1D lattices",
    )
    parser.add_argument("--version", action="version", version=f"collisim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="override the global seed")
        p.add_argument("--workers", type=int, default=None, help="parallel workers for scans")

    p = sub.add_parser("ground-state", help="DMRG ground state + correlation profiles")
    common(p)

    p = sub.add_parser("sweep", help="collisional probe sweep over a prepared ground state")
    common(p)
    p.add_argument("--ground-state", required=True, help="ground-state MPS JSON artifact")

    p = sub.add_parser("fit", help="fit the master equation to a measured trajectory")
    common(p)
    p.add_argument("--trajectory", required=True, help="trajectory CSV artifact")
    p.add_argument("--ground-state", default=None, help="optional MPS JSON for xi_direct")

    p = sub.add_parser("me", help="standalone master-equation integration")
    common(p)
    p.add_argument("--correlations", default=None, help="CorrelationSet CSV (else config ansatz)")

    p = sub.add_parser("phase-scan", help="scan mu (or u) running the full pipeline per point")
    common(p)
    return parser


_COMMANDS = {
    "ground-state": cmd_ground_state,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "me": cmd_me,
    "phase-scan": cmd_phase_scan,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            doc = dict(cfg.raw)
            doc["seed"] = args.seed
            dmrg_doc = dict(doc.get("dmrg", {}))
            dmrg_doc.setdefault("seed", args.seed)
            fit_doc = dict(doc.get("fit", {}))
            fit_doc.setdefault("seed", args.seed)
            doc["dmrg"], doc["fit"] = dmrg_doc, fit_doc
            from .config import parse_config

            cfg = parse_config(doc)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail("E_INPUT", str(exc), EXIT_INPUT)
    except ValidationError as exc:
        return _fail("E_INPUT", str(exc), EXIT_INPUT)
    except ResourceError as exc:
        return _fail("E_RESOURCE", str(exc), EXIT_RESOURCE)
    except NumericError as exc:
        return _fail("E_NUMERIC", str(exc), EXIT_NUMERIC)
    except FileNotFoundError as exc:
        return _fail("E_INPUT", str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
