"""Linearized car-following dynamics on a ring road.

The package builds the coupled spacing/velocity model for a platoon of
vehicles driving a closed loop, one of them externally actuated, and
provides:

- optimal-velocity car-following primitives and their linearization,
- assembly of the open-chain and circulant state matrices,
- the discrete-Fourier block diagonalization and the aggregate
  spacing mode it isolates,
- controllability diagnostics (staircase rank + eigenvector tests),
- deterministic and stochastic simulation with Monte Carlo variance
  estimates, and
- a CLI (``ringtraffic``) that packages the experiments.
"""

from .controllability import (ControllabilityReport, PbhMode, analyze,
                              dual_observability, kalman_rank, pbh_test,
                              stabilizability)
from .errors import (AnalysisError, ConfigurationError, DivergenceError,
                     PhysicalViolationError, RingTrafficError)
from .ovm import (Equilibrium, LinearCoeffs, OvmParams, desired_velocity,
                  desired_velocity_slope, equilibrium_from_spacing,
                  equilibrium_from_velocity, forcing, linear_coeffs,
                  linearize, nonlinear_rhs)
from .ring import (LinearRingModel, RingSpec, actual_input, assemble,
                   build_blocks, spacing_sum_vector, virtual_input)
from .simulate import (ControllerGains, DisturbanceSpec, MonteCarloSummary,
                       Trajectory, conservation_residual, control_law,
                       gain_vector, monte_carlo_mode_variance,
                       read_trajectory_csv, read_variance_csv, simulate,
                       simulate_nonlinear, step_deterministic,
                       step_stochastic, write_trajectory_csv,
                       write_variance_csv)
from .spectral import (FirstModeSystem, FourierMatrix, ModalDecomposition,
                       block_diagonalize, block_eigenvalues, first_mode,
                       fourier_matrix, modal_disturbance, modal_eigenvalues,
                       mode_signal)

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "ConfigurationError",
    "ControllabilityReport",
    "ControllerGains",
    "DisturbanceSpec",
    "DivergenceError",
    "Equilibrium",
    "FirstModeSystem",
    "FourierMatrix",
    "LinearCoeffs",
    "LinearRingModel",
    "ModalDecomposition",
    "MonteCarloSummary",
    "OvmParams",
    "PbhMode",
    "PhysicalViolationError",
    "RingSpec",
    "RingTrafficError",
    "Trajectory",
    "actual_input",
    "analyze",
    "assemble",
    "block_diagonalize",
    "block_eigenvalues",
    "build_blocks",
    "conservation_residual",
    "control_law",
    "desired_velocity",
    "desired_velocity_slope",
    "dual_observability",
    "equilibrium_from_spacing",
    "equilibrium_from_velocity",
    "first_mode",
    "forcing",
    "fourier_matrix",
    "gain_vector",
    "kalman_rank",
    "linear_coeffs",
    "linearize",
    "modal_disturbance",
    "modal_eigenvalues",
    "mode_signal",
    "monte_carlo_mode_variance",
    "nonlinear_rhs",
    "pbh_test",
    "read_trajectory_csv",
    "read_variance_csv",
    "simulate",
    "simulate_nonlinear",
    "spacing_sum_vector",
    "stabilizability",
    "step_deterministic",
    "step_stochastic",
    "virtual_input",
    "write_trajectory_csv",
    "write_variance_csv",
]
