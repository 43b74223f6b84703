"""Experiment configuration: one JSON document drives every CLI command.

Field groups: ``model`` (Bose-Hubbard parameters), ``probe``, ``collisions``,
``dmrg``, ``fit``, optional ``me`` (standalone master-equation runs),
optional ``scan`` (phase scans), plus ``output_dir`` and the global ``seed``.
Commands read only the groups they need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .collisions import CollisionConfig, ProbeSpec
from .dmrg import DmrgConfig
from .errors import ConfigError
from .fitting import FitConfig
from .lattice import BoseHubbardParams
from .master_equation import CorrelationAnsatz
from .tensors import TruncationSpec

_PARAM_ORDER = ("A", "K", "B", "l")


@dataclass
class ExperimentConfig:
    raw: dict
    model: BoseHubbardParams
    probe_kind: str
    probe_gamma: float
    probe_dim: int
    probe_occupation: int
    collisions: dict
    dmrg: DmrgConfig
    fit: FitConfig
    me: dict
    scan: dict
    output_dir: str
    seed: int

    def probe_spec(self) -> ProbeSpec:
        return ProbeSpec.from_occupation(
            self.probe_kind, self.probe_gamma, self.probe_occupation, self.probe_dim
        )

    def collision_config(self) -> CollisionConfig:
        c = self.collisions
        return CollisionConfig(
            dt=c["dt"],
            gamma=self.probe_gamma,
            n_collisions=c["n_collisions"],
            trunc=TruncationSpec(c["max_rank"], c["discard_tol"]),
            record_rho=c["record_rho"],
        )

    def me_ansatz(self) -> CorrelationAnsatz:
        doc = self.me.get("ansatz")
        if doc is None:
            raise ConfigError("config 'me' group has no ansatz parameters")
        try:
            return CorrelationAnsatz(**{k: float(doc[k]) for k in _PARAM_ORDER})
        except KeyError as exc:
            raise ConfigError(f"me.ansatz missing parameter {exc}") from exc


def _group(doc: dict, name: str, required: bool = True) -> dict:
    value = doc.get(name)
    if value is None:
        if required:
            raise ConfigError(f"config is missing the '{name}' group")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"config group '{name}' must be an object")
    return value


def _get(group: dict, group_name: str, key: str, cast, default=None):
    if key not in group:
        if default is not None:
            return default
        raise ConfigError(f"config field '{group_name}.{key}' is missing")
    try:
        return cast(group[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config field '{group_name}.{key}' is invalid: {exc}") from exc


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")

    model_doc = _group(doc, "model")
    try:
        model = BoseHubbardParams(
            n_sites=_get(model_doc, "model", "n_sites", int),
            d=_get(model_doc, "model", "d", int, 5),
            h=_get(model_doc, "model", "h", float),
            u=_get(model_doc, "model", "u", float),
            mu=_get(model_doc, "model", "mu", float),
        )
    except Exception as exc:
        raise ConfigError(f"invalid model group: {exc}") from exc

    probe_doc = _group(doc, "probe")
    probe_kind = _get(probe_doc, "probe", "kind", str)
    probe_gamma = _get(probe_doc, "probe", "gamma", float)
    probe_dim = _get(probe_doc, "probe", "dim", int, 2 if probe_kind == "qubit" else model.d)
    probe_occ = _get(probe_doc, "probe", "initial_occupation", int, 0)

    coll_doc = _group(doc, "collisions")
    collisions = {
        "dt": _get(coll_doc, "collisions", "dt", float),
        "n_collisions": _get(coll_doc, "collisions", "n_collisions", int, model.n_sites),
        "max_rank": _get(coll_doc, "collisions", "max_rank", int, 128),
        "discard_tol": _get(coll_doc, "collisions", "discard_tol", float, 1e-12),
        "record_rho": bool(coll_doc.get("record_rho", False)),
    }
    if collisions["n_collisions"] > model.n_sites:
        raise ConfigError(
            f"collisions.n_collisions = {collisions['n_collisions']} exceeds "
            f"model.n_sites = {model.n_sites}"
        )

    dmrg_doc = _group(doc, "dmrg")
    try:
        dmrg = DmrgConfig(
            max_sweeps=_get(dmrg_doc, "dmrg", "max_sweeps", int, 10),
            energy_tol=_get(dmrg_doc, "dmrg", "energy_tol", float, 1e-9),
            trunc=TruncationSpec(
                _get(dmrg_doc, "dmrg", "max_rank", int, 64),
                _get(dmrg_doc, "dmrg", "discard_tol", float, 1e-10),
            ),
            seed=_get(dmrg_doc, "dmrg", "seed", int, 0),
        )
    except Exception as exc:
        raise ConfigError(f"invalid dmrg group: {exc}") from exc

    fit_doc = _group(doc, "fit", required=False)
    try:
        bounds_doc = fit_doc.get("bounds", {})
        defaults = dict(zip(_PARAM_ORDER, FitConfig().bounds))
        bounds = tuple(
            tuple(float(x) for x in bounds_doc.get(name, defaults[name]))
            for name in _PARAM_ORDER
        )
        fit = FitConfig(
            bounds=bounds,
            population_size=_get(fit_doc, "fit", "population_size", int, 64),
            generations=_get(fit_doc, "fit", "generations", int, 60),
            mutation_scale=_get(fit_doc, "fit", "mutation_scale", float, 0.15),
            crossover_rate=_get(fit_doc, "fit", "crossover_rate", float, 0.9),
            elitism_count=_get(fit_doc, "fit", "elitism_count", int, 2),
            seed=_get(fit_doc, "fit", "seed", int, 0),
            objective_kind=_get(fit_doc, "fit", "objective_kind", str, "observable"),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid fit group: {exc}") from exc

    me_doc = _group(doc, "me", required=False)
    scan_doc = _group(doc, "scan", required=False)
    if scan_doc:
        variable = scan_doc.get("variable", "mu")
        if variable not in ("mu", "u"):
            raise ConfigError(f"scan.variable must be 'mu' or 'u', got {variable!r}")
        values = scan_doc.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError("scan.values must be a non-empty list")
        scan_doc = {"variable": variable, "values": [float(v) for v in values]}

    return ExperimentConfig(
        raw=doc,
        model=model,
        probe_kind=probe_kind,
        probe_gamma=probe_gamma,
        probe_dim=probe_dim,
        probe_occupation=probe_occ,
        collisions=collisions,
        dmrg=dmrg,
        fit=fit,
        me=me_doc,
        scan=scan_doc,
        output_dir=str(doc.get("output_dir", "out")),
        seed=int(doc.get("seed", 0)),
    )


def load_config(path) -> ExperimentConfig:
    import json

    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
