"""Residuals, left eigenvectors of ``J(v)``, simplicity tests and complement bases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonSimpleError, NotAnEigenpairError, NotAnEigenvalueError
from .model import SpmfProblem, _as_vector, assemble_jacobian, assemble_matrix

TOL_SIMPLE = 1e-8
TOL_EIG = 1e-8
TOL_EIGENPAIR = 1e-8


def residual(problem: SpmfProblem, lam: float, v) -> np.ndarray:
    """``r = A(v) v - lam v``."""
    v = _as_vector(v)
    return assemble_matrix(problem, v) @ v - lam * v


def augmented_jacobian(J, lam: float, v) -> np.ndarray:
    """Bordered matrix ``[[J - lam I, -v], [-v^T, 0]]``."""
    J = np.asarray(J, dtype=float)
    v = np.asarray(v, dtype=float)
    n = J.shape[0]
    JF = np.zeros((n + 1, n + 1))
    JF[:n, :n] = J - lam * np.eye(n)
    JF[:n, n] = -v
    JF[n, :n] = -v
    return JF


def _sign_fix(x: np.ndarray) -> np.ndarray:
    return x if x[np.argmax(np.abs(x))] >= 0 else -x


def _left_eig(J: np.ndarray, lam: float, tol: float = TOL_EIG):
    """Eigen-decomposition of ``J^T``; returns (eigenvalues, eigenvectors, index nearest lam).

    Only eigenvalues with imaginary part below ``tol * ||J||_2`` are eligible
    for matching.
    """
    mu, U = scipy.linalg.eig(J.T)
    scale = max(np.linalg.norm(J, 2), np.finfo(float).tiny)
    real = np.abs(mu.imag) <= tol * scale
    dist = np.where(real, np.abs(mu.real - lam), np.inf)
    return mu, U, int(np.argmin(dist)), dist, scale


def left_eigenvector(J, lam: float, tol: float = TOL_EIG) -> np.ndarray:
    """Unit left eigenvector ``u`` of ``J`` for the real eigenvalue ``lam``.

    The sign is fixed so the largest-magnitude component is positive.

    Raises:
        NotAnEigenvalueError: no real eigenvalue within ``tol * ||J||_2``.
        NonSimpleError: more than one eigenvalue within that radius.
    """
    J = np.asarray(J, dtype=float)
    mu, U, k, dist, scale = _left_eig(J, lam, tol)
    radius = tol * scale
    if not dist[k] <= radius:
        raise NotAnEigenvalueError(
            f"{lam!r} is not an eigenvalue of J (nearest real eigenvalue at distance {dist[k]:.3e})")
    near = np.abs(mu - lam) <= radius
    if np.count_nonzero(near) > 1:
        raise NonSimpleError(f"{np.count_nonzero(near)} eigenvalues of J within {radius:.3e} of {lam!r}")
    u = U[:, k].real
    return _sign_fix(u / np.linalg.norm(u))


@dataclass(frozen=True)
class SimplicityReport:
    sigma_min_JF: float
    jordan_gap: float
    u_dot_v: float
    is_simple: bool


def is_simple(problem: SpmfProblem, lam: float, v, tol_simple: float = TOL_SIMPLE,
              residual_tol: float = TOL_EIGENPAIR) -> SimplicityReport:
    """Decide whether ``(lam, v)`` is a simple eigenpair.

    The verdict is ``sigma_min(J_F) > tol_simple * (1 + ||J||_2)`` with ``J_F``
    built at unit-norm ``v``. ``jordan_gap`` is the distance from ``lam`` to the
    nearest other eigenvalue of ``J(v)``.
    """
    v = _as_vector(v)
    v = v / np.linalg.norm(v)
    A = assemble_matrix(problem, v)
    r = np.linalg.norm(A @ v - lam * v)
    if r > residual_tol * (np.linalg.norm(A, 2) + abs(lam)):
        raise NotAnEigenpairError(f"residual {r:.3e} too large for an eigenpair")
    J = assemble_jacobian(problem, v)
    sigma = float(np.linalg.svd(augmented_jacobian(J, lam, v), compute_uv=False)[-1])
    mu, U, k, _, scale = _left_eig(J, lam)
    others = np.delete(mu, k)
    gap = float(np.min(np.abs(others - lam))) if others.size else float("inf")
    u = U[:, k].real
    u_dot_v = float(abs(u @ v) / np.linalg.norm(u))
    simple = sigma > tol_simple * (1 + scale)
    return SimplicityReport(sigma, gap, u_dot_v, bool(simple))


def householder(x, y) -> np.ndarray:
    """Symmetric orthogonal ``H`` with ``H x_hat = y_hat`` (unit-normalized inputs).

    Uses the reflector along ``y_hat - x_hat`` when the vectors are far apart
    and minus the reflector along ``y_hat + x_hat`` otherwise, so the defining
    vector never suffers cancellation.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xh, yh = x / np.linalg.norm(x), y / np.linalg.norm(y)
    d, s = yh - xh, yh + xh
    eye = np.eye(x.size)
    dd, ss = float(d @ d), float(s @ s)
    if dd >= ss:
        return eye - (2.0 / dd) * np.outer(d, d)
    return (2.0 / ss) * np.outer(s, s) - eye


def orthogonal_complement_basis(v) -> np.ndarray:
    """Orthonormal ``n x (n-1)`` basis of ``v``'s orthogonal complement.

    Built from the Householder reflector that sends ``v`` to a multiple of
    ``e_1``; its first column is dropped. Depends only on the direction of ``v``.
    """
    v = _as_vector(v)
    vh = v / np.linalg.norm(v)
    w = vh.copy()
    w[0] += 1.0 if vh[0] >= 0 else -1.0
    H = np.eye(v.size) - (2.0 / float(w @ w)) * np.outer(w, w)
    return H[:, 1:]
