"""Collisional probe sweeps: attach a probe, route it with SWAPs, record its decay.

Each step applies one collision gate between the probe and the next
environment site followed by one SWAP moving the probe forward, so every
gate stays nearest-neighbor. The environment Hamiltonian is not applied
during the sweep (collisions are taken fast against the chain dynamics).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dmrg import correlation_length, environment_correlations
from .errors import UndefinedLengthError, ValidationError
from .lattice import ladder_operators, probe_operators
from .mps import (
    MPSState,
    TwoSiteGate,
    apply_two_site_gate,
    move_center,
    reduced_density_matrix,
    swap_gate,
)
from .tensors import TruncationSpec, as_tensor, hermitian_expm

DEFAULT_DW_CAP = 1e-6


@dataclass(frozen=True)
class ProbeSpec:
    """Probe species, coupling rate and initial local state."""

    kind: str
    gamma: float
    dim: int = 2
    initial_state: np.ndarray = None
    h_s: np.ndarray = None

    def __post_init__(self):
        jump, h_sys = probe_operators(self.kind, self.gamma, self.dim, self.h_s)
        object.__setattr__(self, "h_s", h_sys)
        if self.kind == "qubit":
            object.__setattr__(self, "dim", 2)
        init = self.initial_state
        if init is None:
            vec = np.zeros(self.dim, dtype=np.complex128)
            vec[0] = 1.0
        else:
            vec = as_tensor(init).reshape(-1)
            if vec.shape != (self.dim,):
                raise ValidationError(
                    f"probe initial state length {vec.shape} does not match dim {self.dim}"
                )
            if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                raise ValidationError("probe initial state must be normalized")
        object.__setattr__(self, "initial_state", vec)

    @classmethod
    def from_occupation(cls, kind: str, gamma: float, occupation: int, dim: int = 2, h_s=None):
        dim = 2 if kind == "qubit" else dim
        vec = np.zeros(dim, dtype=np.complex128)
        if not (0 <= occupation < dim):
            raise ValidationError(f"occupation {occupation} out of range for dim {dim}")
        vec[occupation] = 1.0
        return cls(kind, gamma, dim, vec, h_s)

    @property
    def jump_operator(self) -> np.ndarray:
        """``sqrt(gamma)`` times the lowering operator."""
        jump, _ = probe_operators(self.kind, self.gamma, self.dim)
        return jump

    @property
    def jump_shape(self) -> np.ndarray:
        """Unit-amplitude lowering operator (coupling carried separately)."""
        b, _, _ = ladder_operators(self.dim)
        return b

    @property
    def number_op(self) -> np.ndarray:
        return np.diag(np.arange(self.dim, dtype=np.complex128))

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.initial_state, self.initial_state.conj())


@dataclass(frozen=True)
class CollisionConfig:
    """Collision duration, rate, count and truncation budget.

    ``epsilon`` is the coupling strength multiplying the unit-amplitude jump
    shape in the gate generator; it is tied to the rate by
    ``epsilon**2 * dt = gamma`` and derived from it when omitted.
    """

    dt: float
    gamma: float
    n_collisions: int
    trunc: TruncationSpec = field(default_factory=lambda: TruncationSpec(128, 1e-12))
    record_rho: bool = False
    epsilon: float = None
    discarded_weight_cap: float = DEFAULT_DW_CAP

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if self.gamma < 0:
            raise ValidationError(f"gamma must be >= 0, got {self.gamma}")
        if self.n_collisions < 1:
            raise ValidationError(f"n_collisions must be >= 1, got {self.n_collisions}")
        derived = float(np.sqrt(self.gamma / self.dt))
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", derived)
        elif abs(self.epsilon ** 2 * self.dt - self.gamma) > 1e-10 * max(1.0, self.gamma):
            raise ValidationError(
                f"epsilon**2 * dt = {self.epsilon ** 2 * self.dt} must equal gamma = {self.gamma}"
            )


@dataclass
class Trajectory:
    """Per-collision record of the probe state and bookkeeping diagnostics."""

    times: np.ndarray
    observable: np.ndarray
    trace_errors: np.ndarray
    discarded_weights: np.ndarray
    junction_entropies: np.ndarray
    rho_snapshots: list = None
    truncation_warning: bool = False

    @property
    def n_collisions(self) -> int:
        return len(self.times) - 1


def attach_probe(env: MPSState, probe: ProbeSpec) -> MPSState:
    """Prepend the probe as site 0 of the joint chain (trivial junction bond)."""
    t = probe.initial_state.reshape(1, probe.dim, 1)
    return MPSState(
        [t] + list(env.tensors),
        center=env.center + 1,
        cumulative_discarded_weight=env.cumulative_discarded_weight,
    )


def collision_gate(jump, h_s, b_env, epsilon: float, dt: float, site: int = 0) -> TwoSiteGate:
    """Two-body gate ``exp(-i (H_S x 1 + eps (J x b^dag + J^dag x b)) dt)``."""
    jump = as_tensor(jump)
    h_s = as_tensor(h_s)
    b_env = as_tensor(b_env)
    d_p = jump.shape[0]
    d_e = b_env.shape[0]
    if jump.shape != (d_p, d_p) or h_s.shape != (d_p, d_p) or b_env.shape != (d_e, d_e):
        raise ValidationError("collision_gate operator shapes are inconsistent")
    gen = np.kron(h_s, np.eye(d_e)) + epsilon * (
        np.kron(jump, b_env.conj().T) + np.kron(jump.conj().T, b_env)
    )
    matrix = hermitian_expm(gen, dt)
    return TwoSiteGate(matrix, site, in_dims=(d_p, d_e))


def _entropy(evals: np.ndarray) -> float:
    lam = np.clip(evals.real, 0.0, None)
    lam = lam[lam > 1e-15]
    return float(-(lam * np.log(lam)).sum())


def _detach_probe(state: MPSState, probe_pos: int):
    """Project the probe onto its dominant local Schmidt vector and drop it.

    Returns the environment state (original site order) and the junction
    entanglement entropy quantifying the quality of the pure-state
    approximation. The projection's lost weight is added to the discarded
    weight ledger.
    """
    work = move_center(state, probe_pos)
    rho = reduced_density_matrix(work, probe_pos)
    evals, evecs = np.linalg.eigh(rho)
    dominant = evecs[:, -1]
    entropy = _entropy(evals)
    lost = float(max(0.0, 1.0 - evals[-1].real))

    tensors = list(work.tensors)
    probe_tensor = tensors.pop(probe_pos)
    m = np.einsum("s,asb->ab", dominant.conj(), probe_tensor)
    if probe_pos > 0:
        tensors[probe_pos - 1] = np.tensordot(tensors[probe_pos - 1], m, axes=(2, 0))
        center = probe_pos - 1
    else:
        tensors[0] = np.tensordot(m, tensors[0], axes=(1, 0))
        center = 0
    nrm = np.linalg.norm(tensors[center])
    tensors[center] = tensors[center] / nrm
    env = MPSState(
        tensors, center=center,
        cumulative_discarded_weight=work.cumulative_discarded_weight + lost,
    )
    return env, entropy


def sweep(env: MPSState, probe: ProbeSpec, cfg: CollisionConfig):
    """Run the collisional protocol; returns the trajectory and the
    environment left behind after detaching the probe.

    The probe enters next to site 1 of the environment and advances one site
    per collision; after the final collision it sits at the chain end (or
    mid-chain for partial sweeps) and is projected out.
    """
    if cfg.n_collisions > env.n_sites:
        raise ValidationError(
            f"n_collisions {cfg.n_collisions} exceeds environment size {env.n_sites}"
        )
    if cfg.gamma != probe.gamma:
        raise ValidationError("collision config and probe disagree on gamma")
    env_dims = set(env.local_dims)
    if len(env_dims) != 1:
        raise ValidationError("sweep expects a uniform environment local dimension")
    d_env = env_dims.pop()
    b_env, _, _ = ladder_operators(d_env)

    state = attach_probe(env, probe)
    n_op = probe.number_op
    # The gate generator couples the unit-amplitude jump shape with strength
    # epsilon = sqrt(gamma/dt), so a vacuum environment reproduces decay at
    # rate gamma exactly as dt -> 0.
    base_gate = collision_gate(probe.jump_shape, probe.h_s, b_env, cfg.epsilon, cfg.dt)
    swap_matrix = swap_gate(0, probe.dim, d_env)

    n_steps = cfg.n_collisions
    times = np.arange(n_steps + 1, dtype=float) * cfg.dt
    observable = np.empty(n_steps + 1)
    trace_errors = np.zeros(n_steps + 1)
    discarded = np.zeros(n_steps + 1)
    entropies = np.zeros(n_steps + 1)
    snapshots = [] if cfg.record_rho else None

    rho0 = probe.density_matrix()
    observable[0] = float(np.trace(rho0 @ n_op).real)
    if snapshots is not None:
        snapshots.append(rho0)

    pos = 0
    prev_dw = state.cumulative_discarded_weight
    for i in range(1, n_steps + 1):
        gate = TwoSiteGate(base_gate.matrix, pos, in_dims=(probe.dim, d_env))
        state = apply_two_site_gate(state, gate, cfg.trunc)
        swap = TwoSiteGate(
            swap_matrix.matrix, pos, in_dims=(probe.dim, d_env),
            out_dims=(d_env, probe.dim),
        )
        state = apply_two_site_gate(state, swap, cfg.trunc)
        pos += 1

        rho = reduced_density_matrix(state, pos)
        observable[i] = float(np.trace(rho @ n_op).real)
        trace_errors[i] = abs(float(np.trace(rho).real) - 1.0)
        discarded[i] = state.cumulative_discarded_weight - prev_dw
        prev_dw = state.cumulative_discarded_weight
        entropies[i] = _entropy(np.linalg.eigvalsh(rho))
        if snapshots is not None:
            snapshots.append(rho)

    env_after, detach_entropy = _detach_probe(state, pos)
    entropies[-1] = detach_entropy
    traj = Trajectory(
        times=times,
        observable=observable,
        trace_errors=trace_errors,
        discarded_weights=discarded,
        junction_entropies=entropies,
        rho_snapshots=snapshots,
        truncation_warning=state.cumulative_discarded_weight > cfg.discarded_weight_cap,
    )
    return traj, env_after


def back_action(
    env_before: MPSState, env_after: MPSState, kind: int = 2,
    reference_site: int = None, max_separation: int = None,
):
    """Probe-induced shift of the correlation length, with both profiles."""
    if env_before.local_dims != env_after.local_dims:
        raise ValidationError("environments differ in size or local dimensions")
    before = environment_correlations(env_before, kind, reference_site, max_separation)
    after = environment_correlations(env_after, kind, reference_site, max_separation)
    delta = abs(correlation_length(after) - correlation_length(before))
    return delta, before, after
