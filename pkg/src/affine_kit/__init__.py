"""Numerical toolkit for affine Markov processes.

Evaluates exponential-affine Fourier-Laplace transforms through generalized
Riccati ODEs, simulates sample paths from the affine characteristic triplet,
and checks the structural properties (semiflow, martingale, regularity)
against closed forms and Monte Carlo at desk scale.
"""

from .closedforms import (ChainSpec, WishartSpec, brownian_model, chain_generator,
                          chain_model, chain_phi_psi, ctmc_oracle_transform,
                          drift_flow_phi_psi, expm, interval_drift_model,
                          wishart_model, wishart_phi_psi, wishart_transform)
from .errors import BlowUpError
from .model import AffineModel, CharacteristicsAt, JumpMeasure, ValidationReport
from .riccati import (BLOW_UP, COMPLETE, LEFT_U, SemiflowResidual,
                      TransformSolution, TransformValue, g_smoothed,
                      semiflow_residual, solve_riccati, transform)
from .simulate import (STATUS_ALIVE, STATUS_EXPLODED, STATUS_FAILED,
                       STATUS_KILLED, PathEnsemble, SimConfig, simulate,
                       simulate_ctmc)
from .statespace import (Canonical, FiniteChain, Interval, StateSpace, SymPSD,
                         space_from_dict)
from .symmat import (flat_basis, flat_dim, flat_to_sym, mat_dim, psd_project,
                     psd_sqrt, sym_to_flat)
from .verify import (MartingaleReport, MCReport, SUITES, martingale_check,
                     mc_transform_check, regularity_fd_check, run_suite)

__version__ = "0.1.0"

__all__ = [
    "AffineModel", "JumpMeasure", "CharacteristicsAt", "ValidationReport",
    "StateSpace", "Canonical", "SymPSD", "Interval", "FiniteChain", "space_from_dict",
    "BlowUpError",
    "TransformSolution", "TransformValue", "SemiflowResidual",
    "solve_riccati", "transform", "semiflow_residual", "g_smoothed",
    "COMPLETE", "BLOW_UP", "LEFT_U",
    "SimConfig", "PathEnsemble", "simulate", "simulate_ctmc",
    "STATUS_ALIVE", "STATUS_KILLED", "STATUS_EXPLODED", "STATUS_FAILED",
    "WishartSpec", "ChainSpec", "wishart_phi_psi", "wishart_transform",
    "drift_flow_phi_psi", "chain_phi_psi", "chain_generator", "expm",
    "ctmc_oracle_transform",
    "brownian_model", "wishart_model", "interval_drift_model", "chain_model",
    "sym_to_flat", "flat_to_sym", "flat_basis", "flat_dim", "mat_dim",
    "psd_project", "psd_sqrt",
    "MCReport", "MartingaleReport", "mc_transform_check", "martingale_check",
    "regularity_fd_check", "run_suite", "SUITES",
    "__version__",
]
