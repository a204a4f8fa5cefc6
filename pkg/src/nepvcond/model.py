"""Sum-of-products (SPMF) representation of a symmetric NEPv.

A problem is ``A(v) = sum_i f_i(v) A_i`` with constant symmetric ``A_i`` and
scalar coefficient functions ``f_i`` that are invariant under ``v -> alpha v``.
The eigenproblem is ``A(v) v = lambda v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    InputError,
    InvalidDimensionError,
    MissingGradientError,
    ZeroAlphaError,
    ZeroVectorError,
)

# relative Frobenius asymmetry tolerated (and removed) at construction
SYMMETRY_TOL = 1e-12


def _as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InputError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.any(v):
        raise ZeroVectorError("vector must be nonzero")
    return v


def symmetrize(M, what: str = "matrix") -> np.ndarray:
    """Return ``(M + M^T)/2`` if ``M`` is symmetric up to roundoff, else raise."""
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"{what} must be square, got shape {M.shape}")
    scale = np.linalg.norm(M, "fro")
    if np.linalg.norm(M - M.T, "fro") > SYMMETRY_TOL * scale:
        raise InputError(f"{what} is not symmetric")
    return 0.5 * (M + M.T)


class CoefficientFunction:
    """Scalar coefficient ``f: R^n -> R`` with an optional analytic gradient."""

    kind = "abstract"

    def __call__(self, v: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, v: np.ndarray) -> np.ndarray:
        raise MissingGradientError(f"{self.kind} coefficient has no gradient")


@dataclass(frozen=True)
class Constant(CoefficientFunction):
    value: float = 1.0
    kind = "constant"

    def __call__(self, v):
        return float(self.value)

    def gradient(self, v):
        return np.zeros(len(v))


@dataclass(frozen=True, eq=False)
class RationalQuadratic(CoefficientFunction):
    """``f(v) = v^T B v / v^T v`` for symmetric ``B``."""

    B: np.ndarray
    kind = "rational_quadratic"

    def __post_init__(self):
        B = symmetrize(self.B, "B")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

    def __call__(self, v):
        return float(v @ self.B @ v) / float(v @ v)

    def gradient(self, v):
        vv = float(v @ v)
        Bv = self.B @ v
        return 2.0 * Bv / vv - 2.0 * float(v @ Bv) / vv**2 * v


@dataclass(frozen=True, eq=False)
class Custom(CoefficientFunction):
    """User callable; not serializable. Scaling invariance is not assumed."""

    func: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    kind = "custom"

    def __call__(self, v):
        return float(self.func(v))

    def gradient(self, v):
        if self.grad is None:
            raise MissingGradientError("custom coefficient was given without a gradient")
        return np.asarray(self.grad(v), dtype=float)


@dataclass(frozen=True, eq=False)
class Normalized(CoefficientFunction):
    """``f_hat(v) = f(v / ||v||)``, the scaling-invariant version of ``f``."""

    inner: CoefficientFunction
    kind = "normalized"

    def __call__(self, v):
        return self.inner(v / np.linalg.norm(v))

    def gradient(self, v):
        nv = np.linalg.norm(v)
        vh = v / nv
        g = self.inner.gradient(vh)
        return (g - vh * float(vh @ g)) / nv


def resolve_weights(matrices: np.ndarray, weights="relative") -> np.ndarray:
    """Turn a weight policy into an explicit weight vector.

    ``"relative"`` uses ``w_i = ||A_i||_2``, ``"unit"`` uses ``w_i = 1``; any
    sequence is taken verbatim.
    """
    m = matrices.shape[0]
    if isinstance(weights, str):
        if weights == "relative":
            w = np.array([np.linalg.norm(A, 2) for A in matrices])
        elif weights == "unit":
            w = np.ones(m)
        else:
            raise InputError(f"unknown weight policy {weights!r}")
    else:
        w = np.array(weights, dtype=float).reshape(-1)
        if w.shape != (m,):
            raise InputError(f"expected {m} weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InputError("weights must be finite and nonnegative")
    if not np.any(w > 0):
        raise InputError("at least one weight must be positive")
    return w


class SpmfProblem:
    """The NEPv ``A(v) v = lambda v`` with ``A(v) = sum_i f_i(v) A_i``.

    Args:
        matrices: ``m`` symmetric ``n x n`` coefficient matrices.
        functions: ``m`` coefficient functions, one per matrix.
        weights: perturbation weights; ``"relative"`` (default), ``"unit"``
            or an explicit sequence.
        symmetric: when False the matrices are taken as given. Only used for
            perturbed problems built from nonsymmetric directions.
    """

    def __init__(self, matrices, functions: Sequence[CoefficientFunction],
                 weights="relative", *, symmetric: bool = True):
        mats = np.array(matrices, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise InputError(f"matrices must have shape (m, n, n), got {mats.shape}")
        m, n, _ = mats.shape
        if m < 1 or n < 2:
            raise InvalidDimensionError(f"need m >= 1 and n >= 2, got m={m}, n={n}")
        functions = tuple(functions)
        if len(functions) != m:
            raise InputError(f"{m} matrices but {len(functions)} coefficient functions")
        for f in functions:
            if not isinstance(f, CoefficientFunction):
                raise InputError(f"not a CoefficientFunction: {f!r}")
            if isinstance(f, RationalQuadratic) and f.B.shape != (n, n):
                raise InputError(f"B has shape {f.B.shape}, expected {(n, n)}")
        if symmetric:
            mats = np.stack([symmetrize(A, f"A_{i}") for i, A in enumerate(mats)])
        mats.setflags(write=False)
        w = resolve_weights(mats, weights)
        w.setflags(write=False)
        self.matrices = mats
        self.functions = functions
        self.weights = w
        self.symmetric = symmetric

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    def with_weights(self, weights) -> "SpmfProblem":
        return SpmfProblem(self.matrices, self.functions, weights, symmetric=self.symmetric)

    def perturbed(self, E, epsilon: float) -> "SpmfProblem":
        """The problem with ``A_i`` replaced by ``A_i + epsilon E_i``; weights are kept."""
        E = np.asarray(E, dtype=float)
        sym = self.symmetric and np.allclose(E, np.swapaxes(E, 1, 2), rtol=0, atol=1e-13)
        return SpmfProblem(self.matrices + epsilon * E, self.functions, self.weights,
                           symmetric=sym)

    def __repr__(self):
        kinds = ",".join(f.kind for f in self.functions)
        return f"SpmfProblem(n={self.n}, m={self.m}, functions=[{kinds}])"


@dataclass(frozen=True, eq=False)
class Eigenpair:
    """Eigenpair with unit-norm ``v`` and its residual norm ``||A(v)v - lam v||``."""

    lam: float
    v: np.ndarray
    residual_norm: float = field(default=float("nan"))

    @classmethod
    def from_vector(cls, problem: SpmfProblem, lam: float, v) -> "Eigenpair":
        v = _as_vector(v)
        v = v / np.linalg.norm(v)
        r = assemble_matrix(problem, v) @ v - lam * v
        return cls(float(lam), v, float(np.linalg.norm(r)))


def evaluate_coefficients(problem: SpmfProblem, v) -> np.ndarray:
    """Return ``[f_1(v), ..., f_m(v)]``."""
    v = _as_vector(v)
    return np.array([f(v) for f in problem.functions])


def assemble_matrix(problem: SpmfProblem, v) -> np.ndarray:
    """Return ``A(v) = sum_i f_i(v) A_i``."""
    coeffs = evaluate_coefficients(problem, v)
    return np.einsum("i,ijk->jk", coeffs, problem.matrices)


def coefficient_gradients(problem: SpmfProblem, v) -> np.ndarray:
    """Stack of gradients, shape ``(m, n)``."""
    v = _as_vector(v)
    return np.array([f.gradient(v) for f in problem.functions])


def assemble_jacobian(problem: SpmfProblem, v) -> np.ndarray:
    """Return ``J(v) = d/dv (A(v) v) = A(v) + sum_i (A_i v) grad f_i(v)^T``.

    ``J`` is in general not symmetric.
    """
    v = _as_vector(v)
    A = assemble_matrix(problem, v)
    grads = coefficient_gradients(problem, v)
    Av = problem.matrices @ v
    return A + Av.T @ grads


def finite_difference_jacobian(problem: SpmfProblem, v, h: float = 1e-6) -> np.ndarray:
    """Central-difference approximation of ``d/dv (A(v) v)``, column by column."""
    v = _as_vector(v)
    if not h > 0:
        raise InputError("step h must be positive")
    n = v.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        vp, vm = v + e, v - e
        J[:, j] = (assemble_matrix(problem, vp) @ vp - assemble_matrix(problem, vm) @ vm) / (2 * h)
    return J


@dataclass(frozen=True)
class InvarianceCheck:
    deviation: float  # max_alpha ||A(alpha v) - A(v)||_F
    identity_residual: float  # ||J(v)v - A(v)v||, nan without gradients
    invariant: bool


def check_scaling_invariance(problem: SpmfProblem, v, alphas=(-3.0, 0.5, 7.0),
                             tol: float = 1e-12) -> InvarianceCheck:
    """Measure ``A(alpha v) = A(v)`` and the identity ``J(v)v = A(v)v``."""
    v = _as_vector(v)
    alphas = [float(a) for a in alphas]
    if any(a == 0 for a in alphas):
        raise ZeroAlphaError("scaling factors must be nonzero")
    A = assemble_matrix(problem, v)
    dev = max((np.linalg.norm(assemble_matrix(problem, a * v) - A, "fro") for a in alphas),
              default=0.0)
    Av = A @ v
    try:
        ident = float(np.linalg.norm(assemble_jacobian(problem, v) @ v - Av))
    except MissingGradientError:
        ident = float("nan")
    ok = dev <= tol * (1 + np.linalg.norm(A, "fro"))
    if not np.isnan(ident):
        ok = ok and ident <= tol * (1 + np.linalg.norm(Av))
    return InvarianceCheck(float(dev), ident, bool(ok))


def rescale_to_invariant(problem: SpmfProblem) -> SpmfProblem:
    """Convert a normalized-form problem to scaling-invariant form.

    Each coefficient becomes ``f_hat(v) = f(v / ||v||)``. Constant and
    rational-quadratic coefficients are invariant already and kept as is.
    """
    funcs = [f if isinstance(f, (Constant, RationalQuadratic, Normalized)) else Normalized(f)
             for f in problem.functions]
    return SpmfProblem(problem.matrices, funcs, problem.weights, symmetric=problem.symmetric)
