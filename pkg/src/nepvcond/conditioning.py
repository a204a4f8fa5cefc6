"""Eigenvalue and eigenvector condition numbers and their attaining perturbations.

Perturbations act on the coefficient matrices: ``A_i -> A_i + eps E_i`` with
``||E_i|| <= w_i``. Condition numbers are the worst-case first-order changes
of ``lambda`` and ``v`` over all feasible directions ``E = (E_1, ..., E_m)``.
All formulas are evaluated at the ``v`` given, without renormalizing. The
values do not depend on the scale of ``v``; sensitivities scale with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InputError, NonSimpleError, NotApplicableError, ZeroEigenvalueError
from .model import (
    SpmfProblem,
    _as_vector,
    assemble_jacobian,
    evaluate_coefficients,
    resolve_weights,
)
from .spectral import TOL_EIG, householder, left_eigenvector, orthogonal_complement_basis

NORMS = ("2", "fro")
# |u^T v| (unit vectors) below this is treated as a Jordan-type defect
TOL_UV = 1e-14
ZERO_EIGENVALUE = 1e-300


def check_norm(norm) -> str:
    norm = str(norm).lower()
    if norm in ("f", "frobenius"):
        norm = "fro"
    if norm not in NORMS:
        raise InputError(f"norm must be '2' or 'fro', got {norm!r}")
    return norm


def matrix_norm(M, norm="2") -> float:
    return float(np.linalg.norm(M, 2 if check_norm(norm) == "2" else "fro"))


def sign(x: float) -> float:
    """Sign with ``sign(0) = 1`` so attaining directions keep full norm."""
    return -1.0 if x < 0 else 1.0


@dataclass(frozen=True, eq=False)
class PerturbationDirection:
    """Directions ``E_i`` for the perturbed problem ``sum_i f_i(v) (A_i + eps E_i)``.

    If ``weights`` is given, ``||E_i|| <= w_i`` is checked in the declared norm
    (relative tolerance 1e-12).
    """

    E: np.ndarray
    symmetric: bool = False
    norm: str = "2"
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        E = np.array(self.E, dtype=float)
        if E.ndim == 2:
            E = E[None]
        if E.ndim != 3 or E.shape[1] != E.shape[2]:
            raise InputError(f"E must have shape (m, n, n), got {E.shape}")
        E.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "norm", check_norm(self.norm))
        if self.symmetric:
            for i, Ei in enumerate(E):
                if np.max(np.abs(Ei - Ei.T)) > 1e-13 * max(1.0, np.max(np.abs(Ei))):
                    raise InputError(f"E_{i} is not symmetric")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (E.shape[0],):
                raise InputError("weights do not match the number of directions")
            excess = self.norms() - w * (1 + 1e-12)
            if np.any(excess > 1e-300):
                i = int(np.argmax(excess))
                raise InputError(f"||E_{i}|| = {self.norms()[i]:.17g} exceeds w_{i} = {w[i]:.17g}")

    def norms(self) -> np.ndarray:
        return np.array([matrix_norm(Ei, self.norm) for Ei in self.E])


@dataclass(frozen=True, eq=False)
class _EigenData:
    lam: float
    v: np.ndarray
    f: np.ndarray
    w: np.ndarray
    J: np.ndarray
    u: np.ndarray

    @property
    def scale(self) -> float:
        """``sum_i |f_i(v)| w_i``."""
        return float(np.abs(self.f) @ self.w)

    @property
    def cos_theta(self) -> float:
        c = float(self.u @ self.v) / (np.linalg.norm(self.u) * np.linalg.norm(self.v))
        return min(1.0, max(-1.0, c))


def _prepare(problem: SpmfProblem, lam: float, v, weights=None, tol: float = TOL_EIG) -> _EigenData:
    v = _as_vector(v)
    w = problem.weights if weights is None else resolve_weights(problem.matrices, weights)
    J = assemble_jacobian(problem, v)
    u = left_eigenvector(J, lam, tol)
    if abs(u @ v) <= TOL_UV * np.linalg.norm(v):
        raise NonSimpleError("left and right eigenvectors are orthogonal")
    return _EigenData(float(lam), v, evaluate_coefficients(problem, v), w, J, u)


def _relative(kabs: float, lam: float, mode: str) -> float:
    if mode == "absolute":
        return kabs
    if mode != "relative":
        raise InputError(f"mode must be 'relative' or 'absolute', got {mode!r}")
    if abs(lam) <= ZERO_EIGENVALUE:
        raise ZeroEigenvalueError("relative condition number undefined for lambda = 0")
    return kabs / abs(lam)


def _kappa_abs(d: _EigenData) -> float:
    return d.scale * np.linalg.norm(d.u) * np.linalg.norm(d.v) / abs(d.u @ d.v)


def beta_factor(cos_theta: float) -> float:
    """``sqrt((1 + cos^2 theta) / 2)``."""
    return math.sqrt((1.0 + cos_theta**2) / 2.0)


def eigenvalue_condition(problem: SpmfProblem, lam: float, v, weights=None,
                         mode: str = "relative") -> float:
    """Eigenvalue condition number for arbitrary real perturbations.

    ``kappa = (sum_i |f_i(v)| w_i) ||u|| ||v|| / (|lam| |u^T v|)`` with ``u`` the
    left eigenvector of ``J(v)``; ``mode="absolute"`` drops the ``1/|lam|``.
    """
    d = _prepare(problem, lam, v, weights)
    return _relative(_kappa_abs(d), d.lam, mode)


def eigenvalue_condition_symmetric(problem: SpmfProblem, lam: float, v, weights=None,
                                   norm="2", mode: str = "relative") -> float:
    """Condition number for symmetric perturbations: ``kappa`` (2-norm) or ``beta * kappa`` (Frobenius)."""
    norm = check_norm(norm)
    d = _prepare(problem, lam, v, weights)
    kappa = _relative(_kappa_abs(d), d.lam, mode)
    if norm == "2":
        return kappa
    return beta_factor(d.cos_theta) * kappa


def eigenvalue_sensitivity(problem: SpmfProblem, lam: float, v,
                           direction: PerturbationDirection) -> float:
    """First-order change ``lambda'`` along ``direction``."""
    d = _prepare(problem, lam, v)
    Ev = direction.E @ d.v
    return float(d.f @ (Ev @ d.u)) / float(d.u @ d.v)


def optimal_eigenvalue_perturbation(problem: SpmfProblem, lam: float, v, weights=None,
                                    symmetric: bool = False, norm="2") -> PerturbationDirection:
    """Feasible direction attaining the eigenvalue condition number of the chosen class."""
    norm = check_norm(norm)
    d = _prepare(problem, lam, v, weights)
    nu, nv = np.linalg.norm(d.u), np.linalg.norm(d.v)
    if not symmetric:
        H = np.outer(d.u, d.v) / (nu * nv)
    elif norm == "2":
        H = householder(d.v, d.u)
    else:
        H = (np.outer(d.u, d.v) + np.outer(d.v, d.u)) / (2 * beta_factor(d.cos_theta) * nu * nv)
    E = np.stack([sign(fi) * wi * H for fi, wi in zip(d.f, d.w)])
    return PerturbationDirection(E, symmetric, norm, d.w)


def complement_resolvent(J, lam: float, v, basis=None) -> np.ndarray:
    """``Z = V (V^T (J - lam I) V)^{-1} V^T`` for an orthonormal complement ``V`` of ``v``."""
    V = orthogonal_complement_basis(v) if basis is None else np.asarray(basis, dtype=float)
    K = np.asarray(J, dtype=float) - lam * np.eye(V.shape[0])
    M = V.T @ K @ V
    try:
        return V @ scipy.linalg.solve(M, V.T)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NonSimpleError("projected matrix V^T (J - lam I) V is singular") from exc


def eigenvector_sensitivity(problem: SpmfProblem, lam: float, v,
                            direction: PerturbationDirection) -> np.ndarray:
    """First-order change ``v'`` along ``direction`` in the fixed-norm gauge (``v^T v' = 0``)."""
    d = _prepare(problem, lam, v)
    g = np.einsum("i,ijk,k->j", d.f, direction.E, d.v)
    return -complement_resolvent(d.J, d.lam, d.v) @ g


def eigenvector_condition(problem: SpmfProblem, lam: float, v, weights=None, basis=None) -> float:
    """``kappa(v) = ||Z||_2 * sum_i |f_i(v)| w_i``."""
    d = _prepare(problem, lam, v, weights)
    Z = complement_resolvent(d.J, d.lam, d.v, basis)
    return float(np.linalg.norm(Z, 2)) * d.scale


def eigenvector_condition_symmetric(problem: SpmfProblem, lam: float, v, weights=None,
                                    norm="2") -> float:
    kappa = eigenvector_condition(problem, lam, v, weights)
    return kappa if check_norm(norm) == "2" else kappa / math.sqrt(2.0)


def optimal_eigenvector_perturbation(problem: SpmfProblem, lam: float, v, weights=None,
                                     symmetric: bool = False, norm="2") -> PerturbationDirection:
    """Feasible direction attaining the eigenvector condition number of the chosen class.

    Built from the top right singular vector ``p`` of ``Z``, which is orthogonal to ``v``.
    """
    norm = check_norm(norm)
    d = _prepare(problem, lam, v, weights)
    Z = complement_resolvent(d.J, d.lam, d.v)
    p = np.linalg.svd(Z)[2][0]
    vh = d.v / np.linalg.norm(d.v)
    if not symmetric:
        H = np.outer(p, vh)
    elif norm == "2":
        H = householder(vh, p)
    else:
        H = (np.outer(p, vh) + np.outer(vh, p)) / math.sqrt(2.0)
    E = np.stack([sign(fi) * wi * H for fi, wi in zip(d.f, d.w)])
    return PerturbationDirection(E, symmetric, norm, d.w)


def spectral_gap_condition(problem: SpmfProblem, lam: float, v, weights=None,
                           tol: float = 1e-10) -> float:
    """Inverse-gap form of ``kappa(v)``, valid when ``J(v)`` is symmetric.

    Raises:
        NotApplicableError: ``J(v)`` is not symmetric to ``tol`` (relative).
    """
    d = _prepare(problem, lam, v, weights)
    if np.linalg.norm(d.J - d.J.T) > tol * np.linalg.norm(d.J):
        raise NotApplicableError("J(v) is not symmetric")
    mu = np.linalg.eigvalsh(0.5 * (d.J + d.J.T))
    others = np.delete(mu, np.argmin(np.abs(mu - d.lam)))
    return d.scale / float(np.min(np.abs(others - d.lam)))


@dataclass(frozen=True, eq=False)
class ConditionReport:
    kappa_lambda: float
    kappa_lambda_sym_2: float
    kappa_lambda_sym_F: float
    kappa_v: float
    kappa_v_sym_2: float
    kappa_v_sym_F: float
    theta: float
    beta: float
    kappa_lambda_abs: float
    u_dot_v: float
    attaining: dict = field(repr=False)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "kappa_lambda", "kappa_lambda_sym_2", "kappa_lambda_sym_F", "kappa_v",
            "kappa_v_sym_2", "kappa_v_sym_F", "theta", "beta", "kappa_lambda_abs", "u_dot_v")}
        return {k: float(x) for k, x in out.items()}


def condition_report(problem: SpmfProblem, lam: float, v, weights=None,
                     mode: str = "relative") -> ConditionReport:
    """All six condition numbers with their attaining directions.

    In relative mode a zero eigenvalue gives infinite eigenvalue condition
    numbers instead of an error.
    """
    d = _prepare(problem, lam, v, weights)
    kabs = _kappa_abs(d)
    try:
        kappa = _relative(kabs, d.lam, mode)
    except ZeroEigenvalueError:
        kappa = math.inf
    beta = beta_factor(d.cos_theta)
    Z = complement_resolvent(d.J, d.lam, d.v)
    kv = float(np.linalg.norm(Z, 2)) * d.scale
    args = (problem, lam, v, weights)
    attaining = {
        "kappa_lambda": optimal_eigenvalue_perturbation(*args, symmetric=False, norm="2"),
        "kappa_lambda_sym_2": optimal_eigenvalue_perturbation(*args, symmetric=True, norm="2"),
        "kappa_lambda_sym_F": optimal_eigenvalue_perturbation(*args, symmetric=True, norm="fro"),
        "kappa_v": optimal_eigenvector_perturbation(*args, symmetric=False, norm="2"),
        "kappa_v_sym_2": optimal_eigenvector_perturbation(*args, symmetric=True, norm="2"),
        "kappa_v_sym_F": optimal_eigenvector_perturbation(*args, symmetric=True, norm="fro"),
    }
    return ConditionReport(
        kappa_lambda=kappa,
        kappa_lambda_sym_2=kappa,
        kappa_lambda_sym_F=beta * kappa,
        kappa_v=kv,
        kappa_v_sym_2=kv,
        kappa_v_sym_F=kv / math.sqrt(2.0),
        theta=math.acos(d.cos_theta),
        beta=beta,
        kappa_lambda_abs=kabs,
        u_dot_v=abs(d.cos_theta),
        attaining=attaining,
    )
