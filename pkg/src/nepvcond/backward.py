"""Backward errors of approximate eigenpairs and eigenvectors.

The backward error of ``(lam_t, v_t)`` is the smallest ``|eps|`` for which some
feasible ``E`` (``||E_i|| <= w_i``) makes the pair exact for
``sum_i f_i(v) (A_i + eps E_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conditioning import PerturbationDirection, check_norm, sign
from .errors import DegenerateWeightsError
from .model import SpmfProblem, _as_vector, assemble_matrix, evaluate_coefficients, resolve_weights
from .spectral import householder


@dataclass(frozen=True, eq=False)
class _Residual:
    v: np.ndarray
    r: np.ndarray
    f: np.ndarray
    w: np.ndarray
    A: np.ndarray

    @property
    def denom(self) -> float:
        return float(np.abs(self.f) @ self.w) * float(np.linalg.norm(self.v))

    @property
    def cos_vartheta(self) -> float:
        nr = np.linalg.norm(self.r)
        if nr == 0:
            return 1.0
        c = float(self.r @ self.v) / (nr * np.linalg.norm(self.v))
        return min(1.0, max(-1.0, c))


def _prepare(problem: SpmfProblem, lam_t: float, v_t, weights=None) -> _Residual:
    v = _as_vector(v_t)
    w = problem.weights if weights is None else resolve_weights(problem.matrices, weights)
    f = evaluate_coefficients(problem, v)
    if float(np.abs(f) @ w) <= 1e-300:
        raise DegenerateWeightsError("sum_i |f_i(v)| w_i vanishes")
    A = assemble_matrix(problem, v)
    return _Residual(v, A @ v - lam_t * v, f, w, A)


def gamma_factor(cos_vartheta: float) -> float:
    """``sqrt(1 + sin^2 vartheta)``; equals 1 for a zero residual by convention."""
    return math.sqrt(2.0 - cos_vartheta**2)


def backward_error(problem: SpmfProblem, lam_t: float, v_t, weights=None) -> float:
    """``eta = ||r|| / (sum_i |f_i(v)| w_i ||v||)`` with ``r = A(v)v - lam_t v``."""
    d = _prepare(problem, lam_t, v_t, weights)
    return float(np.linalg.norm(d.r)) / d.denom


def backward_error_symmetric(problem: SpmfProblem, lam_t: float, v_t, weights=None,
                             norm="2") -> float:
    """Backward error under symmetric perturbations: ``eta`` (2-norm) or ``gamma * eta`` (Frobenius)."""
    norm = check_norm(norm)
    d = _prepare(problem, lam_t, v_t, weights)
    eta = float(np.linalg.norm(d.r)) / d.denom
    return eta if norm == "2" else gamma_factor(d.cos_vartheta) * eta


def rayleigh_quotient(problem: SpmfProblem, v_t) -> float:
    v = _as_vector(v_t)
    return float(v @ assemble_matrix(problem, v) @ v) / float(v @ v)


def eigenvector_backward_error(problem: SpmfProblem, v_t, weights=None) -> tuple[float, float]:
    """Backward error of ``v_t`` alone, minimized over the eigenvalue.

    Returns:
        ``(eta, lam_star)`` where ``lam_star`` is the Rayleigh quotient.
    """
    lam = rayleigh_quotient(problem, v_t)
    return backward_error(problem, lam, v_t, weights), lam


def attaining_backward_perturbation(problem: SpmfProblem, lam_t: float, v_t, weights=None,
                                    symmetric: bool = False, norm="2"):
    """Minimal perturbation making ``(lam_t, v_t)`` exact.

    Returns:
        ``(eps, direction)`` with ``(A(v) + eps sum_i f_i(v) E_i) v = lam_t v``
        and ``eps`` equal to the backward error of the chosen class. A zero
        residual gives ``eps = 0`` and zero directions.
    """
    norm = check_norm(norm)
    d = _prepare(problem, lam_t, v_t, weights)
    n = d.v.size
    nr, nv = float(np.linalg.norm(d.r)), float(np.linalg.norm(d.v))
    if nr == 0.0:
        return 0.0, PerturbationDirection(np.zeros((d.f.size, n, n)), symmetric, norm, d.w)
    eps = nr / d.denom
    if not symmetric:
        H = -np.outer(d.r, d.v) / (nr * nv)
    elif norm == "2":
        H = -householder(d.v, d.r)
    else:
        gamma = gamma_factor(d.cos_vartheta)
        M = (float(d.r @ d.v) / nv**2) * np.outer(d.v, d.v) - np.outer(d.v, d.r) - np.outer(d.r, d.v)
        H = M / (gamma * nr * nv)
        eps *= gamma
    E = np.stack([sign(fi) * wi * H for fi, wi in zip(d.f, d.w)])
    return eps, PerturbationDirection(E, symmetric, norm, d.w)


@dataclass(frozen=True, eq=False)
class BackwardErrorReport:
    eta: float
    eta_sym_2: float
    eta_sym_F: float
    vartheta: float
    gamma: float
    attaining: dict = field(repr=False)

    def as_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("eta", "eta_sym_2", "eta_sym_F", "vartheta", "gamma")}


def backward_error_report(problem: SpmfProblem, lam_t: float, v_t, weights=None) -> BackwardErrorReport:
    d = _prepare(problem, lam_t, v_t, weights)
    eta = float(np.linalg.norm(d.r)) / d.denom
    c = d.cos_vartheta
    gamma = gamma_factor(c)
    args = (problem, lam_t, v_t, weights)
    return BackwardErrorReport(
        eta=eta,
        eta_sym_2=eta,
        eta_sym_F=gamma * eta,
        vartheta=math.acos(c),
        gamma=gamma,
        attaining={
            "eta": attaining_backward_perturbation(*args, symmetric=False),
            "eta_sym_2": attaining_backward_perturbation(*args, symmetric=True, norm="2"),
            "eta_sym_F": attaining_backward_perturbation(*args, symmetric=True, norm="fro"),
        },
    )
