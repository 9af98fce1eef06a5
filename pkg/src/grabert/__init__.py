"""Nonlinear thermal master-equation dynamics and fixed-point stability.

Simulates density-matrix evolution under a master equation whose damping
depends nonlinearly on the state through the weighted operator map A_rho,
and certifies the stability of the thermal fixed point by building the
linearization Jacobian three independent ways (finite differences,
perturbation theory, closed-form diagonals).
"""

from .errors import (
    ConfigError,
    ConvergenceFailure,
    DegenerateSpectrum,
    DimensionError,
    DimensionMismatch,
    DomainError,
    GrabertError,
    NonFinite,
    NotHermitian,
    ParseError,
    PositivityBreach,
    SingularState,
    StepSizeError,
    StepTooLarge,
    TraceNotZero,
    ValidationError,
)
from .kernels import BACKEND, HAVE_COMPILED
from .spectral import (
    SpectralDecomposition,
    a_rho,
    cal_f,
    commutator,
    eig_hermitian,
    f_d,
    f_d_prime,
    hadamard,
    hermitian_part,
    kernel_matrix,
    quadrature_a_rho,
    require_hermitian,
)
from .gellmann import BasisLabel, GellMannBasis, build_basis, expand, reconstruct
from .dynamics import (
    DensityMatrix,
    Observables,
    SystemSpec,
    Trajectory,
    c_operator,
    default_timestep,
    fixed_point,
    flag_limit_cycle,
    free_energy,
    helmholtz_operator,
    integrate,
    observables,
    theta,
    theta_A,
    theta_B,
    theta_B_linear,
    theta_u,
)
from .stability import (
    JacobianBlocks,
    JacobianReport,
    LinearizationContext,
    closed_form_diagonals,
    d_a_rho_d_eps,
    g_func,
    jacobian_analytic,
    jacobian_fd,
    linearization_context,
    perturbation_generator,
    stability_report,
    zeta,
)
from .config import ScenarioConfig, SweepConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HAVE_COMPILED",
    "BasisLabel",
    "ConfigError",
    "ConvergenceFailure",
    "DegenerateSpectrum",
    "DensityMatrix",
    "DimensionError",
    "DimensionMismatch",
    "DomainError",
    "GellMannBasis",
    "GrabertError",
    "JacobianBlocks",
    "JacobianReport",
    "LinearizationContext",
    "NonFinite",
    "NotHermitian",
    "Observables",
    "ParseError",
    "PositivityBreach",
    "ScenarioConfig",
    "SingularState",
    "SpectralDecomposition",
    "StepSizeError",
    "StepTooLarge",
    "SweepConfig",
    "SystemSpec",
    "TraceNotZero",
    "Trajectory",
    "ValidationError",
    "a_rho",
    "build_basis",
    "c_operator",
    "cal_f",
    "closed_form_diagonals",
    "commutator",
    "d_a_rho_d_eps",
    "default_timestep",
    "eig_hermitian",
    "expand",
    "f_d",
    "f_d_prime",
    "fixed_point",
    "flag_limit_cycle",
    "free_energy",
    "g_func",
    "hadamard",
    "helmholtz_operator",
    "hermitian_part",
    "integrate",
    "jacobian_analytic",
    "jacobian_fd",
    "kernel_matrix",
    "linearization_context",
    "observables",
    "parse_config",
    "perturbation_generator",
    "quadrature_a_rho",
    "reconstruct",
    "require_hermitian",
    "stability_report",
    "theta",
    "theta_A",
    "theta_B",
    "theta_B_linear",
    "theta_u",
    "zeta",
]
