"""Rotated thresholding for noisy, ill-conditioned generalized eigenvalue
problems, with a simulated real-time Krylov pipeline around it."""

from .angles import AngleResult, AngleSearchConfig, optimize_theta_heuristic, optimize_theta_oracle, scan_overlap_spectrum
from .errors import (
    AllAnglesEmpty,
    AtInfinity,
    ConfigError,
    DegenerateNormalization,
    DegenerateSpectrum,
    DimensionMismatch,
    EigenDecompositionError,
    EmptySubspace,
    InsufficientBatches,
    NotHermitian,
    NotPositiveDefinite,
    ParseError,
    RotKrylovError,
)
from .experiment import ExperimentConfig, ExperimentGrid, GridCellRecord, run_cell, run_grid, toy_study
from .krylov import (
    HamiltonianModel,
    KrylovConfig,
    ToyParams,
    build_subspace_pencil,
    build_toy_pencil,
    krylov_state,
    load_matrix,
    random_hamiltonian,
    save_matrix,
    select_dt,
)
from .noise import (
    BatchSet,
    ConvergenceConfig,
    NoiseConfig,
    aggregate_pencil,
    batch_averages,
    iterative_basis_construction,
    rng_stream,
    weighted_mean_and_sigma,
)
from .pencil import (
    EigenRay,
    MatrixPencil,
    RitzSolution,
    back_transform,
    eigh,
    ground_sensitivity,
    rotate_pencil,
    solve_gevp_thresholded,
    solve_rotated,
    threshold_basis,
    tikhonov_solve,
)
from .projection import ProjectionReport, nearest_physical_overlap

__version__ = "0.1.0"

__all__ = [
    "AllAnglesEmpty",
    "AngleResult",
    "AngleSearchConfig",
    "AtInfinity",
    "BatchSet",
    "ConfigError",
    "ConvergenceConfig",
    "DegenerateNormalization",
    "DegenerateSpectrum",
    "DimensionMismatch",
    "EigenDecompositionError",
    "EigenRay",
    "EmptySubspace",
    "ExperimentConfig",
    "ExperimentGrid",
    "GridCellRecord",
    "HamiltonianModel",
    "InsufficientBatches",
    "KrylovConfig",
    "MatrixPencil",
    "NoiseConfig",
    "NotHermitian",
    "NotPositiveDefinite",
    "ParseError",
    "ProjectionReport",
    "RitzSolution",
    "RotKrylovError",
    "ToyParams",
    "aggregate_pencil",
    "back_transform",
    "batch_averages",
    "build_subspace_pencil",
    "build_toy_pencil",
    "eigh",
    "ground_sensitivity",
    "iterative_basis_construction",
    "krylov_state",
    "load_matrix",
    "nearest_physical_overlap",
    "optimize_theta_heuristic",
    "optimize_theta_oracle",
    "random_hamiltonian",
    "rng_stream",
    "rotate_pencil",
    "run_cell",
    "run_grid",
    "save_matrix",
    "scan_overlap_spectrum",
    "select_dt",
    "solve_gevp_thresholded",
    "solve_rotated",
    "threshold_basis",
    "tikhonov_solve",
    "toy_study",
    "weighted_mean_and_sigma",
]
