"""Simulation laboratory for a dissipative quantum kicked ratchet.

Classical dissipative map with thermal noise, stochastic wave-function
unraveling of the corresponding Lindblad dynamics, phase-space
distributions (Liouville and Husimi), the classical/quantum overlap
measure, attractor classification, and an experiment CLI.
"""

from .classical import (
    AttractorReport,
    ClassicalState,
    CurrentSeries,
    Ensemble,
    classify_attractor,
    evolve_ensemble,
    liouville_grid,
    make_initial_ensemble,
    map_step,
    scan_parameter_space,
    thermal_map_step,
)
from .grids import PhaseSpaceGrid, comparison_report, overlap_measure
from .husimi import CoherentFrame, husimi_grid
from .params import (
    DerivedQuantities,
    GridSpec,
    ModelParams,
    RunConfig,
    SingularityError,
    ValidationError,
    derive_quantities,
    validate_params,
)
from .presets import HBAR_CHOICES, PRESETS, Preset, get_preset
from .quantum.lindblad import dm_lindblad_oracle, unraveling_equivalence_check
from .quantum.state import BasisLeakageError, MomentumState
from .quantum.trajectories import (
    TrajectoryStats,
    make_initial_mixture,
    run_trajectory_ensemble,
)
from .streams import particle_stream, probe_stream, trajectory_stream

__all__ = [
    "AttractorReport",
    "BasisLeakageError",
    "ClassicalState",
    "CoherentFrame",
    "CurrentSeries",
    "DerivedQuantities",
    "Ensemble",
    "GridSpec",
    "HBAR_CHOICES",
    "ModelParams",
    "MomentumState",
    "PhaseSpaceGrid",
    "PRESETS",
    "Preset",
    "RunConfig",
    "SingularityError",
    "TrajectoryStats",
    "ValidationError",
    "classify_attractor",
    "comparison_report",
    "derive_quantities",
    "dm_lindblad_oracle",
    "evolve_ensemble",
    "get_preset",
    "husimi_grid",
    "liouville_grid",
    "make_initial_ensemble",
    "make_initial_mixture",
    "map_step",
    "overlap_measure",
    "particle_stream",
    "probe_stream",
    "run_trajectory_ensemble",
    "scan_parameter_space",
    "thermal_map_step",
    "trajectory_stream",
    "unraveling_equivalence_check",
    "validate_params",
]
