"""Second-order time-nonlocal master equation on the collision time grid.

The reduced state evolves under

``drho/dt = -i[H_S, rho_t] - i[J <B^dag> + J^dag <B>, rho_t]
            - (1/2) sum_{j<=i} dt * { c1[i-j] (J^dag J_{t_j-t_i} rho_j - J_{t_j-t_i} rho_j J^dag) + h.c.
                                    + c2[i-j] (J_{t_j-t_i} J^dag rho_j - J^dag rho_j J_{t_j-t_i}) + h.c.
                                    + c3[i-j] (J_{t_j-t_i} J rho_j - J_{t_j-t_i} rho_j J) + h.c.
                                    + c4[i-j] (J^dag_{t_j-t_i} J^dag rho_j - J^dag_{t_j-t_i} rho_j J^dag) + h.c. }``

where the Hermitian conjugate pairs a kernel value with its complex
conjugate, keeping the state Hermitian for complex correlations. Weight
bookkeeping, fixed against the exact second-order expansion of the
collision circuit: each distinct collision pair ``j < i`` must enter at
full weight ``dt`` (its reverse ordering is the conjugate contribution),
while the coincident ``j = i`` cell enters at half weight so a
delta-correlated kernel ``c1[0] = gamma/dt`` decays at exactly rate
``gamma``. Equivalently: trapezoidal endpoint weight at ``j = i``, full
weights elsewhere, and no global 1/2 in front of the memory sum.

Stepping is forward Euler on the collision grid: together with the weights
above it reproduces the second-order expansion of the collision circuit
exactly, collision by collision (a Runge-Kutta stage average would smear
the memory lattice against the collision lattice and bias correlated
kernels at the boundary).

The jump operator entering the brackets is the unit-amplitude shape; the
full coupling, rate included, is carried by the correlation ``scale``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .tensors import as_tensor, hermitian_expm


@dataclass(frozen=True)
class CorrelationAnsatz:
    """Power-law plus exponential model ``A (1+tau)^-K + B exp(-tau/l)``."""

    A: float
    K: float
    B: float
    l: float

    def __post_init__(self):
        if self.A < 0 or self.B < 0:
            raise ValidationError("ansatz amplitudes must be >= 0")
        if self.K <= 0:
            raise ValidationError(f"power-law exponent must be > 0, got {self.K}")
        if self.l <= 0:
            raise ValidationError(f"exponential length must be > 0, got {self.l}")

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.K, self.B, self.l])


def ansatz_eval(a: CorrelationAnsatz, tau):
    """Evaluate the ansatz at lag ``tau >= 0`` (scalar or array)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValidationError("ansatz lag must be >= 0")
    out = a.A * (1.0 + tau) ** (-a.K) + a.B * np.exp(-tau / a.l)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CorrelationSet:
    """The four noise correlations on the discrete lag grid ``k = 0..n``.

    ``scale`` is the squared-coupling prefactor (``gamma/dt`` in the standard
    calibration); for sets built from the ansatz it also carries the unit
    commutator: ``c1[0] = scale + c2[0]`` and ``c1[k>0] = c2[k>0]``.
    """

    lag_dt: float
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    scale: float

    def __post_init__(self):
        n = len(self.c1)
        for name in ("c2", "c3", "c4"):
            if len(getattr(self, name)) != n:
                raise ValidationError("correlation arrays must share one lag grid")
        if self.lag_dt <= 0:
            raise ValidationError(f"lag_dt must be > 0, got {self.lag_dt}")

    @property
    def n_lags(self) -> int:
        return len(self.c1)


def build_correlations(a: CorrelationAnsatz, dt: float, n_steps: int, scale: float) -> CorrelationSet:
    """Correlation set from the ansatz with the Gaussian-noise relations.

    The lag argument is the integer site separation ``k``, not ``k * dt``.
    ``c3 = c4 = 0`` and ``c1`` differs from ``c2`` only by the commutator
    mass ``scale`` at lag zero.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    lags = np.arange(n_steps + 1, dtype=float)
    c2 = scale * ansatz_eval(a, lags).astype(np.complex128)
    c1 = c2.copy()
    c1[0] += scale
    zero = np.zeros(n_steps + 1, dtype=np.complex128)
    return CorrelationSet(dt, c1, c2, zero, zero.copy(), scale)


def correlations_from_profile(p1, p2, p3, p4, scale: float, dt: float, n_steps: int = None) -> CorrelationSet:
    """Correlation set taken verbatim from measured spatial profiles.

    Profiles shorter than the requested grid are zero-padded beyond their
    largest separation (correlations negligible past the measured range).
    """
    lengths = {len(p.values) for p in (p1, p2, p3, p4)}
    if len(lengths) != 1:
        raise ValidationError("correlation profiles must share one separation grid")
    if n_steps is None:
        n_steps = lengths.pop() - 1

    def pad(profile):
        vals = np.asarray(profile.values, dtype=np.complex128)
        out = np.zeros(n_steps + 1, dtype=np.complex128)
        m = min(len(vals), n_steps + 1)
        out[:m] = vals[:m]
        return scale * out

    return CorrelationSet(dt, pad(p1), pad(p2), pad(p3), pad(p4), scale)


def markovian_vacuum_set(gamma: float, dt: float, n_steps: int) -> CorrelationSet:
    """Delta-correlated vacuum kernel: ``c1[0] = gamma/dt``, all else zero."""
    zero_ansatz = CorrelationAnsatz(0.0, 1.0, 0.0, 1.0)
    return build_correlations(zero_ansatz, dt, n_steps, gamma / dt)


def interaction_picture_jump(jump, h_s, tau: float) -> np.ndarray:
    """``exp(i H_S tau) J exp(-i H_S tau)``."""
    jump = as_tensor(jump)
    u = hermitian_expm(h_s, -tau)  # exp(+i H_S tau)
    return u @ jump @ u.conj().T


@dataclass
class MESolution:
    """Integrated reduced dynamics: density matrices and the tracked observable."""

    times: np.ndarray
    rhos: np.ndarray
    observable: np.ndarray

    @property
    def trace_errors(self) -> np.ndarray:
        return np.abs(np.einsum("tii->t", self.rhos).real - 1.0)


def _validate_rho0(rho0: np.ndarray):
    if rho0.ndim != 2 or rho0.shape[0] != rho0.shape[1]:
        raise ValidationError(f"rho0 must be square, got {rho0.shape}")
    if np.abs(rho0 - rho0.conj().T).max() > 1e-10:
        raise ValidationError("rho0 must be Hermitian")
    if abs(np.trace(rho0).real - 1.0) > 1e-8:
        raise ValidationError("rho0 must have unit trace")
    if np.linalg.eigvalsh(rho0).min() < -1e-10:
        raise ValidationError("rho0 must be positive semidefinite")


def integrate_me(
    jump,
    h_s,
    corr: CorrelationSet,
    rho0,
    dt: float,
    n_steps: int,
    observable_op=None,
    mean_field=None,
) -> MESolution:
    """Integrate the memory-kernel master equation with a Heun stepper.

    ``mean_field`` optionally supplies ``<B(t)>`` per step for the
    first-order drive term; it vanishes for number-conserving environments
    and defaults to zero. The observable defaults to the number operator.
    """
    jump = as_tensor(jump)
    h_s = as_tensor(h_s)
    rho0 = as_tensor(rho0)
    _validate_rho0(rho0)
    d = rho0.shape[0]
    if jump.shape != (d, d) or h_s.shape != (d, d):
        raise ValidationError("jump and H_S must match rho0 dimension")
    if corr.n_lags < n_steps + 1:
        raise ValidationError(
            f"correlation set covers {corr.n_lags} lags, need {n_steps + 1}"
        )
    if observable_op is None:
        observable_op = np.diag(np.arange(d, dtype=np.complex128))
    else:
        observable_op = as_tensor(observable_op)

    jdag = jump.conj().T
    static_h = np.abs(h_s).max() == 0.0
    n_lags = n_steps + 1
    if static_h:
        jlag = np.broadcast_to(jump, (n_lags, d, d)).copy()
    else:
        jlag = np.stack(
            [interaction_picture_jump(jump, h_s, -k * dt) for k in range(n_lags)]
        )
    jlag_dag = jlag.conj().transpose(0, 2, 1)

    # Per-lag constant products entering each channel.
    m2 = jlag @ jdag          # J_tau J^dag
    m3 = jlag @ jump          # J_tau J
    m4 = jlag_dag @ jdag      # J^dag_tau J^dag

    use = {
        1: np.abs(corr.c1).max() > 0,
        2: np.abs(corr.c2).max() > 0,
        3: np.abs(corr.c3).max() > 0,
        4: np.abs(corr.c4).max() > 0,
    }

    any_kernel = any(use.values())

    def rhs(i, rhos_hist):
        """Right-hand side at grid index i given history rho_0..rho_i."""
        rho_i = rhos_hist[i]
        out = -1j * (h_s @ rho_i - rho_i @ h_s)
        if mean_field is not None:
            b_avg = complex(mean_field[i])
            drive = b_avg.conjugate() * jump + b_avg * jdag
            out += -1j * (drive @ rho_i - rho_i @ drive)
        if any_kernel:
            hist = rhos_hist[: i + 1]
            rev = slice(i, None, -1)  # lag k = i - j as j runs 0..i
            # full weight per distinct collision pair, half at coincidence
            weights = np.full(i + 1, dt)
            weights[-1] = 0.5 * dt
            mem = np.zeros((d, d), dtype=np.complex128)
            if static_h:
                # lag-independent jump operators: one weighted history sum
                # per channel, then fixed products
                if use[1]:
                    s = np.einsum("k,kab->ab", weights * corr.c1[rev], hist)
                    js = jump @ s
                    mem += jdag @ js - js @ jdag
                if use[2]:
                    s = np.einsum("k,kab->ab", weights * corr.c2[rev], hist)
                    mem += m2[0] @ s - jdag @ s @ jump
                if use[3]:
                    s = np.einsum("k,kab->ab", weights * corr.c3[rev], hist)
                    mem += m3[0] @ s - jump @ s @ jump
                if use[4]:
                    s = np.einsum("k,kab->ab", weights * corr.c4[rev], hist)
                    mem += m4[0] @ s - jdag @ s @ jdag
            else:
                if use[1]:
                    w = weights * corr.c1[rev]
                    s1 = np.einsum("k,kab,kbc->ac", w, jlag[rev], hist)
                    mem += jdag @ s1 - s1 @ jdag
                if use[2]:
                    w = weights * corr.c2[rev]
                    s2a = np.einsum("k,kab,kbc->ac", w, m2[rev], hist)
                    t2 = np.einsum("k,kab,kbc->ac", w, hist, jlag[rev])
                    mem += s2a - jdag @ t2
                if use[3]:
                    w = weights * corr.c3[rev]
                    s3a = np.einsum("k,kab,kbc->ac", w, m3[rev], hist)
                    s3b = np.einsum("k,kab,kbc->ac", w, jlag[rev], hist)
                    mem += s3a - s3b @ jump
                if use[4]:
                    w = weights * corr.c4[rev]
                    s4a = np.einsum("k,kab,kbc->ac", w, m4[rev], hist)
                    s4b = np.einsum("k,kab,kbc->ac", w, jlag_dag[rev], hist)
                    mem += s4a - s4b @ jdag
            out += -(mem + mem.conj().T)
        return out

    rhos = np.empty((n_steps + 1, d, d), dtype=np.complex128)
    rhos[0] = rho0
    for i in range(n_steps):
        rhos[i + 1] = rhos[i] + dt * rhs(i, rhos)

    times = np.arange(n_steps + 1, dtype=float) * dt
    observable = np.einsum("tij,ji->t", rhos, observable_op).real
    return MESolution(times, rhos, observable)
