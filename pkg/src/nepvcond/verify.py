"""Monte-Carlo checks of condition numbers and backward errors.

Random feasible directions are Gaussian matrices, symmetrized when the class
requires it and rescaled so that ``||E_i|| = w_i`` in the chosen norm. Sample
``k`` draws from ``default_rng([seed, k])`` so results do not depend on the
order in which samples are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backward import _prepare as _prepare_residual
from .backward import attaining_backward_perturbation, backward_error, backward_error_symmetric
from .conditioning import (
    PerturbationDirection,
    _prepare,
    check_norm,
    complement_resolvent,
    eigenvalue_condition,
    eigenvalue_condition_symmetric,
    eigenvector_condition,
    eigenvector_condition_symmetric,
    matrix_norm,
    optimal_eigenvalue_perturbation,
    optimal_eigenvector_perturbation,
)
from .errors import ConvergenceError, InputError, InvalidSamplesError
from .model import Eigenpair, SpmfProblem, assemble_matrix, resolve_weights
from .solvers import SolveOptions, solve_perturbed

QUANTITIES = ("eigenvalue", "eigenvector")


def random_direction(problem: SpmfProblem, rng: np.random.Generator, weights=None,
                     symmetric: bool = False, norm="2") -> PerturbationDirection:
    """Gaussian direction projected to the class and scaled to ``||E_i|| = w_i``."""
    norm = check_norm(norm)
    w = problem.weights if weights is None else resolve_weights(problem.matrices, weights)
    n = problem.n
    E = np.empty((problem.m, n, n))
    for i, wi in enumerate(w):
        G = rng.standard_normal((n, n))
        if symmetric:
            G = 0.5 * (G + G.T)
        E[i] = wi * G / matrix_norm(G, norm)
    return PerturbationDirection(E, symmetric, norm, w)


def sample_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(k)])


@dataclass(frozen=True)
class MonteCarloReport:
    samples: int
    max_ratio: float  # largest sampled first-order relative change
    predicted_kappa: float
    attained_ratio: float  # relative change along the attaining direction
    seed: int
    quantity: str = "eigenvalue"
    resolve_error: float = math.nan  # max |FD - first order| / (kappa |scale|) over resolved samples

    def holds(self, rtol: float = 1e-10) -> bool:
        """``max_ratio <= kappa (1 + rtol)`` and ``attained_ratio = kappa`` to ``rtol``."""
        k = self.predicted_kappa
        return bool(self.max_ratio <= k * (1 + rtol) and abs(self.attained_ratio - k) <= rtol * k)


def monte_carlo_condition_check(problem: SpmfProblem, eigenpair: Eigenpair, weights=None,
                                symmetric: bool = False, norm="2", samples: int = 1000,
                                epsilon: float = 1e-6, seed: int = 0, quantity: str = "eigenvalue",
                                resolve: int = 0) -> MonteCarloReport:
    """Compare sampled first-order changes with the predicted condition number.

    Args:
        problem: SPMF problem.
        eigenpair: simple eigenpair of ``problem``.
        weights: tolerances ``w_i`` (problem weights if None).
        symmetric: sample symmetric directions and compare with the symmetric condition number.
        norm: ``"2"`` or ``"fro"``.
        samples: number of random directions.
        epsilon: perturbation size for the Newton resolves.
        seed: base seed.
        quantity: ``"eigenvalue"`` (``|lam'| / |lam|``) or ``"eigenvector"`` (``||v'|| / ||v||``).
        resolve: number of samples additionally checked against central
            differences of warm-started Newton resolves at ``+-epsilon``.

    Raises:
        InvalidSamplesError: ``samples < 1`` or ``resolve`` out of range.
    """
    norm = check_norm(norm)
    if int(samples) < 1:
        raise InvalidSamplesError("samples must be at least 1")
    if not 0 <= int(resolve) <= int(samples):
        raise InvalidSamplesError("resolve must lie between 0 and samples")
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    if quantity not in QUANTITIES:
        raise InputError(f"quantity must be one of {QUANTITIES}")
    lam, v = eigenpair.lam, eigenpair.v
    d = _prepare(problem, lam, v, weights)
    eigvec = quantity == "eigenvector"
    if eigvec:
        Z = complement_resolvent(d.J, d.lam, d.v)
        kappa = (eigenvector_condition_symmetric(problem, lam, v, weights, norm) if symmetric
                 else eigenvector_condition(problem, lam, v, weights))
        scale = float(np.linalg.norm(d.v))
        optimal = optimal_eigenvector_perturbation(problem, lam, v, weights, symmetric, norm)
    else:
        Z = None
        kappa = (eigenvalue_condition_symmetric(problem, lam, v, weights, norm) if symmetric
                 else eigenvalue_condition(problem, lam, v, weights))
        scale = abs(d.lam)
        optimal = optimal_eigenvalue_perturbation(problem, lam, v, weights, symmetric, norm)
    uv = float(d.u @ d.v)

    def derivative(E: np.ndarray):
        g = np.einsum("i,ijk,k->j", d.f, E, d.v)
        if eigvec:
            return -Z @ g
        return float(d.u @ g) / uv

    def ratio(x) -> float:
        return float(np.linalg.norm(x)) / scale

    max_ratio = 0.0
    resolve_error = 0.0 if resolve else math.nan
    opts = SolveOptions(max_iter=30)
    for k in range(int(samples)):
        E = random_direction(problem, sample_rng(seed, k), d.w, symmetric, norm)
        x = derivative(E.E)
        max_ratio = max(max_ratio, ratio(x))
        if k < resolve:
            fd = _central_difference(problem, E, epsilon, eigenpair, eigvec, opts)
            resolve_error = max(resolve_error, float(np.linalg.norm(fd - x)) / (kappa * scale))
    return MonteCarloReport(int(samples), max_ratio, float(kappa), ratio(derivative(optimal.E)),
                            int(seed), quantity, resolve_error)


def _central_difference(problem, direction, eps, pair, eigvec, opts):
    try:
        plus = solve_perturbed(problem, direction, eps, pair, opts)
        minus = solve_perturbed(problem, direction, -eps, pair, opts)
    except ConvergenceError:
        return math.nan
    if eigvec:
        # eigenvector derivative in the fixed-norm gauge, at the scale of pair.v
        return (plus.v - minus.v) * (np.linalg.norm(pair.v) / (2 * eps))
    return (plus.lam - minus.lam) / (2 * eps)


@dataclass(frozen=True)
class BackwardMonteCarloReport:
    samples: int
    min_eps: float  # smallest sampled |eps| compatible with an exact pair
    predicted_eta: float
    attained_eps: float
    attained_residual: float  # residual after the attaining perturbation, relative to (||A(v)|| + |lam|) ||v||
    seed: int

    def holds(self, rtol: float = 1e-10) -> bool:
        eta = self.predicted_eta
        return bool(self.min_eps >= eta * (1 - rtol) and abs(self.attained_eps - eta) <= rtol * eta
                    and self.attained_residual <= rtol)


def monte_carlo_backward_check(problem: SpmfProblem, lam_t: float, v_t, weights=None,
                               symmetric: bool = False, norm="2", samples: int = 1000,
                               seed: int = 0) -> BackwardMonteCarloReport:
    """Check that no sampled direction beats the backward error of ``(lam_t, v_t)``.

    For a direction ``E`` the pair is exact at ``eps`` only if ``r + eps g = 0``
    with ``g = sum_i f_i E_i v``. Projecting onto a functional ``l`` gives the
    necessary value ``eps = -l^T r / l^T g``; its modulus lower-bounds any exact
    ``eps`` along ``E``. ``l = r`` is used, except for symmetric Frobenius
    directions where ``l = 2r - (r^T v / v^T v) v``.
    """
    norm = check_norm(norm)
    if int(samples) < 1:
        raise InvalidSamplesError("samples must be at least 1")
    d = _prepare_residual(problem, lam_t, v_t, weights)
    eta = (backward_error_symmetric(problem, lam_t, v_t, weights, norm) if symmetric
           else backward_error(problem, lam_t, v_t, weights))
    if symmetric and norm == "fro":
        ell = 2 * d.r - (float(d.r @ d.v) / float(d.v @ d.v)) * d.v
    else:
        ell = d.r
    min_eps = math.inf
    for k in range(int(samples)):
        E = random_direction(problem, sample_rng(seed, k), d.w, symmetric, norm).E
        g = np.einsum("i,ijk,k->j", d.f, E, d.v)
        lg = float(ell @ g)
        if lg != 0.0:
            min_eps = min(min_eps, abs(float(ell @ d.r) / lg))
    eps, direction = attaining_backward_perturbation(problem, lam_t, v_t, weights, symmetric, norm)
    perturbed = problem.perturbed(direction.E, eps) if eps else problem
    r_new = assemble_matrix(perturbed, d.v) @ d.v - lam_t * d.v
    rel = float(np.linalg.norm(r_new)) / ((np.linalg.norm(d.A, 2) + abs(lam_t)) * np.linalg.norm(d.v))
    return BackwardMonteCarloReport(int(samples), min_eps, float(eta), float(eps), rel, int(seed))
