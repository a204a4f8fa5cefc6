"""Builders and drivers for the two reference experiments.

* A Wilkinson-type family whose eigenvalue ``lambda = n`` at ``v = e_1`` gets
  exponentially ill-conditioned in ``n`` because ``J(e_1)`` is the Wilkinson
  matrix ``W_n``.
* A 3x3 one-parameter family with saddle-node collisions of eigenvalue branches.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .conditioning import eigenvalue_condition
from .errors import InputError, InvalidDimensionError
from .model import Constant, RationalQuadratic, SpmfProblem, assemble_jacobian, evaluate_coefficients
from .solvers import BranchData, ContinuationOptions, TurningPoint, continuation, seed_eigenpairs
from .spectral import left_eigenvector


def wilkinson_matrix(n: int) -> np.ndarray:
    """Upper bidiagonal ``W_n`` with diagonal ``n, ..., 1`` and superdiagonal ``n``."""
    return np.diag(np.arange(n, 0, -1, dtype=float)) + np.diag(np.full(n - 1, float(n)), 1)


def build_wilkinson(n: int, rng: np.random.Generator | None = None) -> SpmfProblem:
    """NEPv ``A_0 + sum_k f_k(v) A_k`` with eigenpair ``(n, e_1)`` and ``J(e_1) = W_n``.

    Only the first row and column of each ``B_k`` are prescribed. The
    remaining block is zero, or a random symmetric matrix drawn from ``rng``.
    """
    if n < 2:
        raise InvalidDimensionError("n must be at least 2")
    A0 = np.diag(np.arange(n, 0, -1, dtype=float))
    A0[0, 0] -= 1.0
    A0[0, 1:n - 1] -= 1.0
    A0[1:n - 1, 0] -= 1.0
    mats = [A0]
    funcs = [Constant(1.0)]
    for k in range(1, n):
        Ak = np.zeros((n, n))
        Ak[0, k - 1] = Ak[k - 1, 0] = 1.0
        Bk = np.zeros((n, n))
        if rng is not None:
            G = rng.standard_normal((n - 1, n - 1))
            Bk[1:, 1:] = G + G.T
        Bk[0, 0] = 1.0
        Bk[0, k] = Bk[k, 0] = n / 2.0
        mats.append(Ak)
        funcs.append(RationalQuadratic(Bk))
    return SpmfProblem(mats, funcs, "relative")


@dataclass(frozen=True)
class WilkinsonRow:
    n: int
    kappa: float
    u_dot_v: float
    alpha: float  # sum_i |f_i(v)| w_i ||v|| ||u|| for unit u, v


def wilkinson_row(n: int, rng: np.random.Generator | None = None) -> WilkinsonRow:
    problem = build_wilkinson(n, rng)
    e1 = np.zeros(n)
    e1[0] = 1.0
    J = assemble_jacobian(problem, e1)
    if not np.array_equal(J, wilkinson_matrix(n)):
        raise AssertionError(f"J(e_1) differs from W_{n}")
    u = left_eigenvector(J, float(n))
    alpha = float(np.abs(evaluate_coefficients(problem, e1)) @ problem.weights)
    return WilkinsonRow(n, eigenvalue_condition(problem, float(n), e1), float(abs(u[0])), alpha)


def wilkinson_report(ns: Iterable[int]) -> list[WilkinsonRow]:
    """Relative condition number, ``|u^T v|`` and ``alpha`` of ``lambda = n`` for each ``n``."""
    return [wilkinson_row(int(n)) for n in ns]


BIFURCATION_A0 = np.array([[1.0, 1.0, 1.0], [1.0, -2.0, -2.0], [1.0, -2.0, 0.0]])
BIFURCATION_A1 = np.array([[0.0, 1.0, 0.0], [1.0, 2.0, -1.0], [0.0, -1.0, 5.0]])
BIFURCATION_B = np.array([[0.0, -1.0, 2.0], [-1.0, 2.0, 1.0], [2.0, 1.0, 1.0]])


def build_bifurcation(delta: float) -> SpmfProblem:
    """``A(v) = A_0(delta) + (v^T B v / v^T v) A_1`` with ``A_0(delta)[0, 0] = 1 + delta``."""
    A0 = BIFURCATION_A0.copy()
    A0[0, 0] += delta
    return SpmfProblem([A0, BIFURCATION_A1], [Constant(1.0), RationalQuadratic(BIFURCATION_B)], "relative")


def bifurcation_sweep(delta_min: float = -5.0, delta_max: float = 0.0, steps: int = 500,
                      opts: ContinuationOptions | None = None) -> BranchData:
    """Continue all real eigenpairs of the bifurcation family over ``linspace(delta_min, delta_max, steps)``."""
    if not delta_min < delta_max:
        raise InputError("delta_min must be smaller than delta_max")
    if steps < 2:
        raise InputError("steps must be at least 2")
    grid = np.linspace(delta_min, delta_max, steps)
    seeds = seed_eigenpairs(build_bifurcation(float(grid[0])))
    end_seeds = seed_eigenpairs(build_bifurcation(float(grid[-1])))
    return continuation(build_bifurcation, grid, seeds, opts, end_seeds=end_seeds)


def fmt(x: float) -> str:
    """Shortest round-trip decimal; ``inf``/``nan`` spelled out."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(x)


def write_branch_csv(data: BranchData, out: TextIO | None = None) -> str:
    """CSV with columns ``delta,lambda,kappa,branch,simple``; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "lambda", "kappa", "branch", "simple"])
    for bi, br in enumerate(data.branches):
        for p in br.points:
            w.writerow([fmt(p.delta), fmt(p.lam), fmt(p.kappa), bi, "true" if p.simple else "false"])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def write_wilkinson_csv(rows: Iterable[WilkinsonRow], out: TextIO | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "kappa", "u_dot_v", "alpha"])
    for r in rows:
        w.writerow([r.n, fmt(r.kappa), fmt(r.u_dot_v), fmt(r.alpha)])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def fold_exponent(data: BranchData, tp: TurningPoint, window=(1e-4, 1e-3), side: str = "branch") -> float:
    """Fitted exponent ``p`` in ``|lam - lam_0| ~ c |delta - delta_0|^p`` near a turning point.

    Uses the points of the incoming branch (``side="branch"``) or of its partner
    whose distance to the fold lies inside ``window``.
    """
    idx = tp.branch if side == "branch" else tp.partner
    if idx is None:
        raise InputError("turning point has no partner branch")
    pts = [p for p in data.branches[idx].points if window[0] <= abs(p.delta - tp.delta) <= window[1]]
    if len(pts) < 3:
        raise InputError(f"only {len(pts)} points inside the fit window")
    x = np.log([abs(p.delta - tp.delta) for p in pts])
    y = np.log([abs(p.lam - tp.lam) for p in pts])
    return float(np.polyfit(x, y, 1)[0])
