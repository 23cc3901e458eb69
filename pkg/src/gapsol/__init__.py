"""Gap solitons of coupled mode equations near a spectral band edge."""
from .bands import (
    BandStructure,
    Gap,
    SpectralEdge,
    eigen_decomposition,
    find_gap,
    hessian,
    locate_edge,
    sample_bands,
    symbol,
)
from .convergence import (
    ConvergenceReport,
    SolveSettings,
    export,
    fit_slope,
    prepare,
    run_convergence_study,
    solve_at,
)
from .model import (
    CmeParameters,
    build_symmetric_example,
    load_config,
    nonlinearity,
    save_config,
    validate,
)
from .nls import (
    EffectiveNls,
    Envelope,
    RadialProfile,
    build_envelope,
    canonicalize,
    decay_moments,
    effective_coefficients,
    evaluate_envelope,
    solve_ground_state_radial,
)
from .solver import (
    ComplexField,
    Grid,
    SolveDiagnostics,
    build_ansatz,
    inverse_transform,
    make_grid,
    petviashvili_solve,
    stationary_residual,
    transform,
)

__version__ = "0.1.0"

__all__ = [
    "BandStructure",
    "CmeParameters",
    "ComplexField",
    "ConvergenceReport",
    "EffectiveNls",
    "Envelope",
    "Gap",
    "Grid",
    "RadialProfile",
    "SolveDiagnostics",
    "SolveSettings",
    "SpectralEdge",
    "build_ansatz",
    "build_envelope",
    "build_symmetric_example",
    "canonicalize",
    "decay_moments",
    "effective_coefficients",
    "eigen_decomposition",
    "evaluate_envelope",
    "export",
    "find_gap",
    "fit_slope",
    "hessian",
    "inverse_transform",
    "load_config",
    "locate_edge",
    "make_grid",
    "nonlinearity",
    "petviashvili_solve",
    "prepare",
    "run_convergence_study",
    "sample_bands",
    "save_config",
    "solve_at",
    "solve_ground_state_radial",
    "stationary_residual",
    "symbol",
    "transform",
    "validate",
]
