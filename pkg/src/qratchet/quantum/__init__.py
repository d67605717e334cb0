"""Quantum engine: momentum-basis states, kick/rotation operators, the
stochastic dissipative interval, trajectory ensembles, and the dense
density-matrix oracle."""

from .kick import KickOperator, NormDriftError, apply_free_rotation, rotation_phases
from .lindblad import (
    OracleResult,
    TraceDriftError,
    dm_lindblad_oracle,
    jump_operators,
    kick_matrix,
    uniform_mixture_rho,
    unraveling_equivalence_check,
)
from .mcwf import dissipative_interval
from .snapshots import read_snapshots, write_snapshots
from .state import BasisLeakageError, MomentumState
from .trajectories import (
    BASIS_MARGIN,
    TrajectoryStats,
    basis_halfwidth_for,
    initial_momentum_halfwidth,
    make_initial_mixture,
    run_trajectory_ensemble,
)

__all__ = [
    "BASIS_MARGIN",
    "BasisLeakageError",
    "KickOperator",
    "MomentumState",
    "NormDriftError",
    "OracleResult",
    "TraceDriftError",
    "TrajectoryStats",
    "apply_free_rotation",
    "basis_halfwidth_for",
    "dissipative_interval",
    "dm_lindblad_oracle",
    "initial_momentum_halfwidth",
    "jump_operators",
    "kick_matrix",
    "make_initial_mixture",
    "read_snapshots",
    "rotation_phases",
    "run_trajectory_ensemble",
    "uniform_mixture_rho",
    "unraveling_equivalence_check",
    "write_snapshots",
]
