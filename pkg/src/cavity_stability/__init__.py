"""Stability of a star-shaped cavity in a plane linearly elastic body.

Bulk elastic energy plus cavity perimeter, under an area constraint: the
equilibrium solver, the second variation over area-preserving
perturbations, its constrained spectrum and the closed-form round case.
"""

from .disk import (
    DiskConfig,
    DiskStabilityReport,
    G_threshold,
    adjoint_energy_bound_check,
    disk_config,
    disk_energy_density,
    lower_bound_form,
    r0_threshold,
    stability_window,
)
from .elasticity import (
    BoundaryData,
    DisplacementField,
    EnergyReport,
    LameParams,
    boundary_traces,
    elastic_energy,
    solve_equilibrium,
)
from .estimators import EquilibriumEnergy, PenalizedDescent, SecondVariationStability
from .evolve import DescentConfig, PenalizedObjective, descend, minimality_probe, objective, shape_gradient
from .exceptions import (
    BracketError,
    CavityStabilityError,
    ConfigError,
    DomainError,
    GeometryViolationError,
    IndefiniteGramError,
    InvalidGridError,
    NotCriticalError,
    SolverFailure,
    StalledDescentError,
)
from .geometry import RadialProfile, cavity_area, curvature, normal_trace, perimeter, volume_path
from .numerics import PeriodicGrid, bisect, fourier_diff, periodic_quadrature, sym_eig_min
from .variation import (
    QuadraticFormMatrix,
    assemble,
    criticality,
    first_variation,
    project_perturbation,
    second_variation,
    second_variation_fd_check,
    solve_adjoint,
    stability_spectrum,
)

__version__ = "0.1.0"
