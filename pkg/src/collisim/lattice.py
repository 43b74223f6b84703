"""Bose-Hubbard Hamiltonians and local operator factories.

The chain Hamiltonian is
``H = sum_i [ -h (b_i b^dag_{i+1} + b^dag_i b_{i+1})
              + (u/2) b^dag_i b^dag_i b_i b_i + mu b^dag_i b_i ]``
with the chemical potential entering with a plus sign, so scans over the
first Mott lobe use negative ``mu`` values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResourceError, ValidationError
from .mps import MPSState
from .tensors import as_tensor

DENSE_DIM_CAP = 4096


@dataclass(frozen=True)
class BoseHubbardParams:
    """Chain size, bosonic truncation and couplings (common energy unit)."""

    n_sites: int
    d: int
    h: float
    u: float
    mu: float

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValidationError(f"n_sites must be >= 2, got {self.n_sites}")
        if self.d < 2:
            raise ValidationError(f"local dim must be >= 2, got {self.d}")


@dataclass
class MPOOperator:
    """Matrix product operator; tensor i is shaped (w_{i-1}, d_out, d_in, w_i)."""

    tensors: list

    def __post_init__(self):
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[3] != 1:
            raise ValidationError("MPO boundary virtual bonds must have dimension 1")
        for i in range(len(self.tensors) - 1):
            if self.tensors[i].shape[3] != self.tensors[i + 1].shape[0]:
                raise ValidationError(f"MPO virtual bond mismatch at sites {i}, {i + 1}")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def local_dims(self) -> list:
        return [t.shape[1] for t in self.tensors]


def ladder_operators(d: int):
    """Truncated bosonic ``(b, b_dagger, n)`` on ``d`` levels."""
    if d < 2:
        raise ValidationError(f"local dim must be >= 2, got {d}")
    b = np.zeros((d, d), dtype=np.complex128)
    for k in range(1, d):
        b[k - 1, k] = np.sqrt(k)
    bdag = b.conj().T
    n = bdag @ b
    return b, bdag, n


def _onsite_term(p: BoseHubbardParams) -> np.ndarray:
    b, bdag, n = ladder_operators(p.d)
    return 0.5 * p.u * (bdag @ bdag @ b @ b) + p.mu * n


def build_bose_hubbard_mpo(p: BoseHubbardParams) -> MPOOperator:
    """Hamiltonian as an MPO with virtual bond dimension 4."""
    b, bdag, _ = ladder_operators(p.d)
    eye = np.eye(p.d, dtype=np.complex128)
    onsite = _onsite_term(p)

    w = np.zeros((4, p.d, p.d, 4), dtype=np.complex128)
    w[0, :, :, 0] = eye
    w[1, :, :, 0] = bdag
    w[2, :, :, 0] = b
    w[3, :, :, 0] = onsite
    w[3, :, :, 1] = -p.h * b
    w[3, :, :, 2] = -p.h * bdag
    w[3, :, :, 3] = eye

    first = w[3:4, :, :, :]
    last = w[:, :, :, 0:1]
    tensors = [first] + [w] * (p.n_sites - 2) + [last]
    return MPOOperator([t.copy() for t in tensors])


def _embed(op: np.ndarray, site: int, dims) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == site else np.eye(d))
    return out


def _embed_pair(op_a, op_b, site: int, dims) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for i, d in enumerate(dims):
        if i == site:
            out = np.kron(out, op_a)
        elif i == site + 1:
            out = np.kron(out, op_b)
        else:
            out = np.kron(out, np.eye(d))
    return out


def build_dense_hamiltonian(p: BoseHubbardParams, cap: int = DENSE_DIM_CAP) -> np.ndarray:
    """Dense Hamiltonian for exact-diagonalization oracles on small chains."""
    dim = p.d ** p.n_sites
    if dim > cap:
        raise ResourceError(f"dense dimension {dim} exceeds cap {cap}")
    b, bdag, _ = ladder_operators(p.d)
    onsite = _onsite_term(p)
    dims = [p.d] * p.n_sites
    ham = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(p.n_sites):
        ham += _embed(onsite, i, dims)
    for i in range(p.n_sites - 1):
        ham += -p.h * (_embed_pair(b, bdag, i, dims) + _embed_pair(bdag, b, i, dims))
    return ham


def mpo_to_dense(mpo: MPOOperator) -> np.ndarray:
    """Expand an MPO into a dense matrix (oracle for small chains)."""
    dim = int(np.prod(mpo.local_dims))
    if dim > DENSE_DIM_CAP:
        raise ResourceError(f"dense dimension {dim} exceeds cap {DENSE_DIM_CAP}")
    cur = mpo.tensors[0][0]  # (d_out, d_in, w)
    for t in mpo.tensors[1:]:
        cur = np.einsum("abw,wcdv->acbdv", cur, t)
        do, dn, db, dm, dv = cur.shape
        cur = cur.reshape(do * dn, db * dm, dv)
    return cur[:, :, 0]


def mpo_expectation(state: MPSState, mpo: MPOOperator) -> complex:
    """Sandwich ``<psi|O|psi>`` of an MPO between identical MPS states."""
    if state.local_dims != mpo.local_dims:
        raise ValidationError("state and MPO local dimensions disagree")
    env = np.ones((1, 1, 1), dtype=np.complex128)
    for a, w in zip(state.tensors, mpo.tensors):
        t = np.tensordot(env, a.conj(), axes=(0, 0))      # (w, b, p, x)
        t = np.tensordot(t, w, axes=([0, 2], [0, 1]))     # (b, x, s, v)
        env = np.tensordot(t, a, axes=([0, 2], [0, 1]))   # (x, v, c)
    return complex(env[0, 0, 0])


def probe_operators(kind: str, gamma: float, d_p: int = 2, h_s=None):
    """Jump operator and free Hamiltonian for the probe.

    ``qubit`` gives ``J = sqrt(gamma) sigma_minus`` on 2 levels, ``boson``
    gives ``J = sqrt(gamma) a`` on ``d_p`` levels. The free Hamiltonian
    defaults to zero; an override is accepted.
    """
    if gamma < 0:
        raise ValidationError(f"gamma must be >= 0, got {gamma}")
    if kind == "qubit":
        d_p = 2
    elif kind == "boson":
        if d_p < 2:
            raise ValidationError(f"bosonic probe dim must be >= 2, got {d_p}")
    else:
        raise ValidationError(f"unknown probe kind {kind!r}")
    b, _, _ = ladder_operators(d_p)
    jump = np.sqrt(gamma) * b
    if h_s is None:
        h_sys = np.zeros((d_p, d_p), dtype=np.complex128)
    else:
        h_sys = as_tensor(h_s)
        if h_sys.shape != (d_p, d_p):
            raise ValidationError(f"H_S shape {h_sys.shape} does not match probe dim {d_p}")
    return jump, h_sys
