"""Finite matrix product states: canonical forms, two-site gates, measurements.

Site tensor ``i`` has shape ``(chi_{i-1}, d_i, chi_i)`` with trivial boundary
bonds. States carry an explicit orthogonality center: tensors left of it are
left isometries, tensors right of it right isometries. All operations return
new states; tensors are treated as immutable once attached to a state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .tensors import TruncationSpec, as_tensor, svd_truncate

SERIAL_VERSION = 1


@dataclass
class MPSState:
    """Open-boundary MPS with orthogonality center and truncation ledger."""

    tensors: list
    center: int
    cumulative_discarded_weight: float = 0.0

    def __post_init__(self):
        if not self.tensors:
            raise ValidationError("MPS needs at least one site")
        if not (0 <= self.center < len(self.tensors)):
            raise ValidationError(f"center {self.center} out of range")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValidationError("boundary bonds must have dimension 1")
        for i in range(len(self.tensors) - 1):
            if self.tensors[i].shape[2] != self.tensors[i + 1].shape[0]:
                raise ValidationError(
                    f"bond mismatch between sites {i} and {i + 1}: "
                    f"{self.tensors[i].shape} vs {self.tensors[i + 1].shape}"
                )

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def local_dims(self) -> list:
        return [t.shape[1] for t in self.tensors]

    @property
    def bond_dims(self) -> list:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "MPSState":
        return MPSState(list(self.tensors), self.center, self.cumulative_discarded_weight)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))


@dataclass(frozen=True)
class TwoSiteGate:
    """Unitary on the adjacent pair ``(site, site + 1)``.

    ``matrix`` is indexed ``(out_left * out_right, in_left * in_right)``.
    ``out_dims`` allows gates that exchange unequal local dimensions (SWAPs
    routing a probe through an environment of different local dimension);
    it defaults to the input dimensions.
    """

    matrix: np.ndarray
    site: int
    in_dims: tuple
    out_dims: tuple = None

    def __post_init__(self):
        m = self.matrix
        d_in = self.in_dims[0] * self.in_dims[1]
        out = self.out_dims if self.out_dims is not None else self.in_dims
        object.__setattr__(self, "out_dims", tuple(out))
        if m.shape != (out[0] * out[1], d_in):
            raise ValidationError(
                f"gate matrix shape {m.shape} inconsistent with dims {self.in_dims}->{out}"
            )
        if m.shape[0] != m.shape[1]:
            raise ValidationError("gate matrix must be square")
        dev = float(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max())
        if dev > 1e-11:
            raise ValidationError(f"gate is not unitary: max |U^dag U - 1| = {dev:.3e}")


def swap_gate(site: int, d_left: int, d_right: int) -> TwoSiteGate:
    """SWAP exchanging the states (and local dimensions) of an adjacent pair."""
    m = np.zeros((d_right * d_left, d_left * d_right), dtype=np.complex128)
    for x in range(d_left):
        for y in range(d_right):
            m[y * d_left + x, x * d_right + y] = 1.0
    return TwoSiteGate(m, site, in_dims=(d_left, d_right), out_dims=(d_right, d_left))


def product_state(local_dims, occupations) -> MPSState:
    """Bond-dimension-1 state with each site in a given basis state."""
    if len(local_dims) != len(occupations):
        raise ValidationError("local_dims and occupations must have equal length")
    tensors = []
    for d, occ in zip(local_dims, occupations):
        if not (0 <= occ < d):
            raise ValidationError(f"occupation {occ} out of range for local dim {d}")
        t = np.zeros((1, d, 1), dtype=np.complex128)
        t[0, occ, 0] = 1.0
        tensors.append(t)
    return MPSState(tensors, center=0)


def move_center(state: MPSState, target: int) -> MPSState:
    """Shift the orthogonality center to ``target`` via QR sweeps.

    The represented state is unchanged (overlap 1 with the input).
    """
    if not (0 <= target < state.n_sites):
        raise ValidationError(f"target site {target} out of range")
    out = state.copy()
    tensors = out.tensors
    c = out.center
    while c < target:
        chi_l, d, chi_r = tensors[c].shape
        q, r = np.linalg.qr(tensors[c].reshape(chi_l * d, chi_r))
        tensors[c] = q.reshape(chi_l, d, q.shape[1])
        tensors[c + 1] = np.tensordot(r, tensors[c + 1], axes=(1, 0))
        c += 1
    while c > target:
        chi_l, d, chi_r = tensors[c].shape
        q, r = np.linalg.qr(tensors[c].reshape(chi_l, d * chi_r).conj().T)
        tensors[c] = q.conj().T.reshape(q.shape[1], d, chi_r)
        tensors[c - 1] = np.tensordot(tensors[c - 1], r.conj().T, axes=(2, 0))
        c -= 1
    out.center = c
    return out


def apply_two_site_gate(state: MPSState, gate: TwoSiteGate, trunc: TruncationSpec) -> MPSState:
    """Apply a two-site gate, re-split with a truncated SVD, renormalize.

    The returned state has its center at the gate's left site and its
    cumulative discarded weight increased by this step's discarded weight.
    """
    i = gate.site
    if not (0 <= i < state.n_sites - 1):
        raise ValidationError(f"gate site {i} has no right neighbor")
    d1, d2 = state.local_dims[i], state.local_dims[i + 1]
    if gate.in_dims != (d1, d2):
        raise ValidationError(
            f"gate input dims {gate.in_dims} do not match local dims ({d1}, {d2})"
        )
    out = move_center(state, i)
    tensors = out.tensors
    theta = np.tensordot(tensors[i], tensors[i + 1], axes=(2, 0))
    o1, o2 = gate.out_dims
    g4 = gate.matrix.reshape(o1, o2, d1, d2)
    theta = np.tensordot(g4, theta, axes=([2, 3], [1, 2])).transpose(2, 0, 1, 3)
    chi_l, _, _, chi_r = theta.shape
    res = svd_truncate(theta.reshape(chi_l * o1, o2 * chi_r), trunc)
    s = res.singular_values
    s_norm = np.linalg.norm(s)
    if s_norm == 0:
        raise ValidationError("gate application annihilated the state")
    s = s / s_norm
    tensors[i] = (res.left_isometry * s).reshape(chi_l, o1, res.rank)
    tensors[i + 1] = res.right_isometry.reshape(res.rank, o2, chi_r)
    out.center = i
    out.cumulative_discarded_weight += res.discarded_weight
    return out


def expectation_local(state: MPSState, site: int, op) -> complex:
    """Expectation value of a single-site operator."""
    op = as_tensor(op)
    d = state.local_dims[site]
    if op.shape != (d, d):
        raise ValidationError(f"operator shape {op.shape} does not match local dim {d}")
    work = move_center(state, site)
    a = work.tensors[site]
    return complex(np.einsum("asb,st,atb->", a.conj(), op, a))


def two_point(state: MPSState, site_a: int, op_a, site_b: int, op_b) -> complex:
    """Expectation of ``op_a(site_a) * op_b(site_b)`` with ``site_a <= site_b``.

    For coincident sites this is the expectation of the operator product.
    """
    if site_a > site_b:
        raise ValidationError("two_point requires site_a <= site_b")
    op_a = as_tensor(op_a)
    op_b = as_tensor(op_b)
    da, db = state.local_dims[site_a], state.local_dims[site_b]
    if op_a.shape != (da, da) or op_b.shape != (db, db):
        raise ValidationError("operator shapes do not match local dims")
    if site_a == site_b:
        return expectation_local(state, site_a, op_a @ op_b)
    work = move_center(state, site_a)
    a = work.tensors[site_a]
    # env[r_ket, r_bra], built left to right between the two insertion points.
    env = np.einsum("asr,ts,atq->rq", a, op_a, a.conj(), optimize=True)
    for k in range(site_a + 1, site_b):
        t = work.tensors[k]
        env = np.einsum("rq,rsu,qsv->uv", env, t, t.conj(), optimize=True)
    b = work.tensors[site_b]
    return complex(np.einsum("rq,rsu,ts,qtu->", env, b, op_b, b.conj(), optimize=True))


def reduced_density_matrix(state: MPSState, site: int) -> np.ndarray:
    """Single-site reduced density matrix (Hermitian, unit trace)."""
    if not (0 <= site < state.n_sites):
        raise ValidationError(f"site {site} out of range")
    work = move_center(state, site)
    a = work.tensors[site]
    return np.einsum("asb,atb->st", a, a.conj())


def overlap(bra: MPSState, ket: MPSState) -> complex:
    """Inner product ``<bra|ket>`` of two states on the same chain."""
    if bra.local_dims != ket.local_dims:
        raise ValidationError("overlap requires identical local dimensions")
    env = np.ones((1, 1), dtype=np.complex128)
    for tb, tk in zip(bra.tensors, ket.tensors):
        env = np.einsum("ab,asr,bsq->rq", env, tb.conj(), tk)
    return complex(env[0, 0])


def to_dense(state: MPSState) -> np.ndarray:
    """Contract the chain into a full state vector (small chains only)."""
    dim = int(np.prod(state.local_dims))
    if dim > 2 ** 16:
        raise ValidationError(f"dense reconstruction of dimension {dim} refused")
    vec = state.tensors[0]
    for t in state.tensors[1:]:
        vec = np.tensordot(vec, t, axes=(vec.ndim - 1, 0))
    return vec.reshape(dim)


def _fmt(x: float) -> str:
    # 17 significant digits: parsing recovers the exact double.
    return format(float(x), ".17g")


def mps_to_json(state: MPSState) -> str:
    """Serialize to the documented JSON schema with 17-significant-digit floats."""
    tensor_docs = []
    for t in state.tensors:
        flat = t.reshape(-1)
        pairs = ",".join(f"[{_fmt(z.real)},{_fmt(z.imag)}]" for z in flat)
        shape = ",".join(str(int(e)) for e in t.shape)
        tensor_docs.append('{"shape":[%s],"data":[%s]}' % (shape, pairs))
    return (
        '{"version":%d,"local_dims":[%s],"center":%d,'
        '"cumulative_discarded_weight":%s,"tensors":[%s]}'
        % (
            SERIAL_VERSION,
            ",".join(str(d) for d in state.local_dims),
            state.center,
            _fmt(state.cumulative_discarded_weight),
            ",".join(tensor_docs),
        )
    )


def mps_from_json(text: str) -> MPSState:
    """Parse a state written by :func:`mps_to_json`."""
    doc = json.loads(text)
    if doc.get("version") != SERIAL_VERSION:
        raise ValidationError(f"unsupported MPS serialization version {doc.get('version')}")
    tensors = []
    for tdoc in doc["tensors"]:
        shape = tuple(int(e) for e in tdoc["shape"])
        data = np.array(
            [complex(re, im) for re, im in tdoc["data"]], dtype=np.complex128
        )
        if data.size != int(np.prod(shape)):
            raise ValidationError(f"tensor data length does not match shape {shape}")
        tensors.append(data.reshape(shape))
    state = MPSState(
        tensors,
        center=int(doc["center"]),
        cumulative_discarded_weight=float(doc["cumulative_discarded_weight"]),
    )
    if state.local_dims != [int(d) for d in doc["local_dims"]]:
        raise ValidationError("local_dims field disagrees with tensor shapes")
    return state


def save_mps(state: MPSState, path) -> None:
    with open(path, "w") as fh:
        fh.write(mps_to_json(state))
        fh.write("\n")


def load_mps(path) -> MPSState:
    with open(path) as fh:
        return mps_from_json(fh.read())
