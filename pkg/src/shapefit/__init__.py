"""Corruption-robust recovery of locations and structure from directions.

Given a bipartite graph whose edges carry (possibly corrupted) unit vectors
meant to point from structure points toward locations, the package recovers
both point families, up to global translation and scale, by solving a convex
program; it also measures the geometric and combinatorial conditions under
which that recovery is guaranteed, and ships a Monte Carlo harness that maps
out the empirical recovery region.
"""

from .errors import (
    DegeneratePair,
    DisconnectedGraph,
    EmptySet,
    InvalidGamma,
    RankDeficient,
    ShapeFitError,
    ZeroNorm,
    ZeroReference,
)
from .rng import derive_seed, generator
from .graph import (
    BipartiteGraph,
    TypicalityReport,
    check_typicality,
    matching_decomposition,
    sample_er,
)
from .geometry import (
    DeformationDecomposition,
    LocationSet,
    cross_distance_ratio,
    decompose_deformation,
    direction,
    project_orthogonal,
    quadruple_projection_constant,
    quadruple_projection_terms,
    sample_gaussian_locations,
    well_distributed_constant,
    well_distributed_constant_for_pairs,
    well_distributed_pairs,
)
from .observations import (
    ObservationSet,
    ProblemInstance,
    observe_adversarial,
    observe_random,
)
from .solver import (
    ShapeFitProblem,
    SolveOptions,
    SolverState,
    project_affine,
    residual_objective,
    scale_constraint,
    solution_to_json,
    solve,
)
from .analysis import (
    C4Check,
    ConditionReport,
    RigidityCheck,
    c4_inequality,
    check_conditions,
    corruption_threshold,
    relative_error,
    rigidity_inequality,
)
from .harness import (
    CellResult,
    ExperimentConfig,
    TrialResult,
    default_noise_config,
    default_phase_config,
    emit_heatmap,
    emit_noise_chart,
    run_cell,
    run_noise_sweep,
    run_phase_grid,
    write_trials_csv,
)

__version__ = "0.1.0"
