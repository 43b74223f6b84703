"""Collisional simulation of colored quantum noise.

Prepare a 1D Bose-Hubbard environment ground state with DMRG, sweep a probe
through it with two-body collision gates under MPS evolution, and recover
the environment's correlation length by fitting a second-order
memory-kernel master equation to the probe's observable trajectory.
"""

__version__ = "0.1.0"

from .errors import (
    CollisimError,
    ConfigError,
    NumericError,
    ResourceError,
    UndefinedLengthError,
    ValidationError,
)
from .tensors import SVDResult, TruncationSpec, contract, hermitian_expm, svd_truncate
from .mps import (
    MPSState,
    TwoSiteGate,
    apply_two_site_gate,
    expectation_local,
    load_mps,
    move_center,
    mps_from_json,
    mps_to_json,
    overlap,
    product_state,
    reduced_density_matrix,
    save_mps,
    swap_gate,
    to_dense,
    two_point,
)
from .lattice import (
    BoseHubbardParams,
    MPOOperator,
    build_bose_hubbard_mpo,
    build_dense_hamiltonian,
    ladder_operators,
    mpo_expectation,
    mpo_to_dense,
    probe_operators,
)
from .dmrg import (
    CorrelationProfile,
    DmrgConfig,
    DmrgResult,
    correlation_length,
    dmrg_ground_state,
    environment_correlations,
)
from .collisions import (
    CollisionConfig,
    ProbeSpec,
    Trajectory,
    attach_probe,
    back_action,
    collision_gate,
    sweep,
)
from .master_equation import (
    CorrelationAnsatz,
    CorrelationSet,
    MESolution,
    ansatz_eval,
    build_correlations,
    correlations_from_profile,
    integrate_me,
    interaction_picture_jump,
    markovian_vacuum_set,
)
from .fitting import (
    FitConfig,
    FitResult,
    MEInputs,
    ga_minimize,
    me_inputs_for,
    objective_observable,
    objective_state,
    probe_fit_pipeline,
    trace_norm_distance,
    xi_of_ansatz,
)
