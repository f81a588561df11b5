"""Spectral vibro-acoustic simulation engine for cavities with moving walls.

The package couples a Neumann spectral cavity pressure solver to damped
membrane-plate patch vibrations through closed-form Duhamel kernels, a
Picard decoupling fixed point, piston-approximation certificates and
perturbation-operator diagnostics, all cross-validated against independent
brute-force reference solvers.
"""

__version__ = "0.1.0"

from .acoustics import (
    AcousticMedium,
    BoundaryVibration,
    MetricPerturbation,
    PatchVibration,
    PressureSolution,
    assemble_metric_perturbation,
    assemble_T_and_W,
    assemble_V,
    eigenfunction_correction,
    eigenvalue_shift,
    kernel_correction_diagnostic,
    solve_pressure,
)
from .coupling import (
    CouplingConfig,
    HarmonicIntegral,
    HarmonicSource,
    IterateLedger,
    LcpoResult,
    PistonReport,
    closed_form_mean_pressure,
    harmonic_integral,
    lcpo_iteration,
    mean_curvature,
    picard_iterate,
    piston_pipeline,
)
from .errors import (
    AssumptionViolationError,
    ConfigError,
    ContractionViolationError,
    DegenerateEigenvalueError,
    DegenerateInputError,
    EnvelopeViolationError,
    InvalidArgumentError,
    NumericFailureError,
    ResonanceSingularityError,
    UnsupportedError,
    VibrocavityError,
)
from .geometry import (
    CavityGeometry,
    ModalField,
    PatchGeometry,
    SpectralBasis,
    build_cavity_basis,
    build_patch_basis,
    coupling_matrix,
    evaluate,
    geometric_mean,
    piston_basis,
    poincare_certificate,
    project,
)
from .magnus import (
    MagnusGenerator,
    TimeDependentGenerator,
    convergence_certificate,
    magnus_terms,
    matrix_exponential,
)
from .membrane import (
    MembraneOperator,
    MembraneSolution,
    PatchSource,
    TimeLapse,
    damping_ode_solve,
    effective_mass,
    exponential_lapse,
    harmonic_patch_source,
    power_lapse,
    solve_membrane,
    time_lapse_from_damping,
    unit_lapse,
)
from .oracle import (
    ComparisonReport,
    FdtdResult,
    OracleConfig,
    SimulationResult,
    compare,
    fdtd_coupled_oracle,
    ode_membrane_oracle,
)
