"""Dense complex tensor primitives: contraction, truncated SVD, Hermitian exponentials.

All tensors are C-ordered ``numpy`` arrays of ``complex128``; every function
returns a new array and never mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericError, ValidationError


def as_tensor(data) -> np.ndarray:
    """Coerce input to a C-contiguous complex128 array."""
    return np.ascontiguousarray(np.asarray(data, dtype=np.complex128))


@dataclass(frozen=True)
class TruncationSpec:
    """Bond truncation policy.

    ``max_rank`` caps the number of singular values kept; ``discard_tol`` is
    the largest allowed discarded weight, in the squared-singular-value
    convention normalized by the total squared norm.
    """

    max_rank: int
    discard_tol: float = 0.0

    def __post_init__(self):
        if self.max_rank < 1:
            raise ValidationError(f"max_rank must be >= 1, got {self.max_rank}")
        if self.discard_tol < 0:
            raise ValidationError(f"discard_tol must be >= 0, got {self.discard_tol}")


@dataclass(frozen=True)
class SVDResult:
    """Truncated SVD ``m ~ U @ diag(s) @ V`` with the dropped weight reported.

    ``left_isometry`` has orthonormal columns, ``right_isometry`` orthonormal
    rows; ``discarded_weight`` is the dropped squared-singular-value mass
    divided by the total squared norm of the input.
    """

    left_isometry: np.ndarray
    singular_values: np.ndarray
    right_isometry: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def contract(a, b, axis_pairs) -> np.ndarray:
    """Contract ``a`` with ``b`` over pairs ``(axis_of_a, axis_of_b)``.

    Free axes of ``a`` precede free axes of ``b`` in the result, each block
    keeping its original order. An empty pairing yields the outer product.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    axis_pairs = list(axis_pairs)
    ax_a = [p[0] for p in axis_pairs]
    ax_b = [p[1] for p in axis_pairs]
    if len(set(ax_a)) != len(ax_a) or len(set(ax_b)) != len(ax_b):
        raise ValidationError(f"axis repeated within pairing {axis_pairs}")
    for ia, ib in axis_pairs:
        if not (0 <= ia < a.ndim and 0 <= ib < b.ndim):
            raise ValidationError(
                f"axis pair ({ia}, {ib}) out of range for shapes {a.shape}, {b.shape}"
            )
        if a.shape[ia] != b.shape[ib]:
            raise ValidationError(
                f"cannot contract axis {ia} (extent {a.shape[ia]}) of {a.shape} "
                f"with axis {ib} (extent {b.shape[ib]}) of {b.shape}"
            )
    return np.tensordot(a, b, axes=(ax_a, ax_b))


def svd_truncate(m, spec: TruncationSpec) -> SVDResult:
    """SVD of a matrix, truncated to the smallest rank meeting ``spec``.

    Keeps the smallest rank ``r <= max_rank`` whose discarded weight is within
    ``discard_tol``; if no such rank exists, keeps ``max_rank`` and reports the
    actual discarded weight. At least one singular value is always kept.
    """
    m = as_tensor(m)
    if m.ndim != 2:
        raise ValidationError(f"svd_truncate expects a matrix, got shape {m.shape}")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails on ill-conditioned inputs; gesvd is slower
        # but more robust.
        try:
            u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except Exception as exc:  # pragma: no cover - pathological inputs only
            raise NumericError(f"SVD did not converge on shape {m.shape}") from exc

    weights = s * s
    # Singular values at relative machine noise carry no weight; zeroing them
    # lets a numerically rank-deficient matrix truncate to its true rank.
    if s.size and s[0] > 0.0:
        weights[s < s[0] * 1e-15] = 0.0
    total = float(weights.sum())
    if total == 0.0:
        return SVDResult(u[:, :1], s[:1], vh[:1, :], 0.0)

    # disc[r-1] = weight discarded when keeping r values.
    tail = np.cumsum(weights[::-1])[::-1]
    disc = np.append(tail[1:], 0.0) / total
    within = np.nonzero(disc <= spec.discard_tol)[0]
    r_tol = int(within[0]) + 1 if within.size else len(s)
    r = max(1, min(r_tol, spec.max_rank))
    return SVDResult(u[:, :r], s[:r], vh[:r, :], float(disc[r - 1]))


def hermitian_expm(h, t: float) -> np.ndarray:
    """Unitary ``exp(-i * h * t)`` of a Hermitian matrix, by eigendecomposition."""
    h = as_tensor(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"hermitian_expm expects a square matrix, got {h.shape}")
    scale = max(1.0, float(np.abs(h).max()))
    deviation = float(np.abs(h - h.conj().T).max())
    if deviation > 1e-12 * scale:
        raise ValidationError(
            f"matrix is not Hermitian: max |h - h^dag| = {deviation:.3e}"
        )
    evals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * t)
    return (vecs * phases) @ vecs.conj().T
