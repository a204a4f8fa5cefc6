"""Condition numbers, backward errors and solvers for symmetric NEPv in SPMF form.

The problem is ``A(v) v = lam v`` with ``A(v) = sum_i f_i(v) A_i``, constant
symmetric ``A_i`` and scalar coefficient functions ``f_i``.
"""

from .backward import (
    BackwardErrorReport,
    attaining_backward_perturbation,
    backward_error,
    backward_error_report,
    backward_error_symmetric,
    eigenvector_backward_error,
    gamma_factor,
    rayleigh_quotient,
)
from .conditioning import (
    ConditionReport,
    PerturbationDirection,
    beta_factor,
    complement_resolvent,
    condition_report,
    eigenvalue_condition,
    eigenvalue_condition_symmetric,
    eigenvalue_sensitivity,
    eigenvector_condition,
    eigenvector_condition_symmetric,
    eigenvector_sensitivity,
    optimal_eigenvalue_perturbation,
    optimal_eigenvector_perturbation,
    spectral_gap_condition,
)
from .errors import *  # noqa: F403
from .model import (
    CoefficientFunction,
    Constant,
    Custom,
    Eigenpair,
    Normalized,
    RationalQuadratic,
    SpmfProblem,
    assemble_jacobian,
    assemble_matrix,
    check_scaling_invariance,
    evaluate_coefficients,
    finite_difference_jacobian,
    rescale_to_invariant,
)
from .solvers import (
    BranchData,
    ContinuationOptions,
    SolveOptions,
    continuation,
    newton_solve,
    scf_solve,
    seed_eigenpairs,
    solve_perturbed,
)
from .spectral import is_simple, left_eigenvector

__version__ = "0.1.0"
