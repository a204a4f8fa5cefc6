"""Newton and SCF solvers, perturbed resolves and parameter continuation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .conditioning import PerturbationDirection, eigenvalue_condition
from .errors import (
    ConvergenceError,
    InputError,
    MaxIterExceeded,
    NepvError,
    SingularJacobianError,
)
from .model import (
    Eigenpair,
    SpmfProblem,
    _as_vector,
    assemble_jacobian,
    assemble_matrix,
    evaluate_coefficients,
)
from .spectral import TOL_SIMPLE, augmented_jacobian, is_simple

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SolveOptions:
    """Stopping rules shared by all solvers.

    Iteration stops once the backward error is at most ``tol_backward``.
    A Newton step shorter than ``tol_step * (1 + ||x||)`` without reaching
    that tolerance counts as stagnation.
    """

    max_iter: int = 50
    tol_backward: float = 1e-13
    tol_step: float = 1e-15
    damping: float = 1.0
    singular_tol: float = 1e-14  # sigma_min(J_F) / sigma_max(J_F) floor

    def __post_init__(self):
        if self.max_iter < 1:
            raise InputError("max_iter must be >= 1")
        if not (self.tol_backward > 0 and self.tol_step > 0 and self.singular_tol > 0):
            raise InputError("tolerances must be positive")
        if not 0 < self.damping <= 1:
            raise InputError("damping must lie in (0, 1]")


def _eta(problem: SpmfProblem, A: np.ndarray, lam: float, v: np.ndarray) -> float:
    f = evaluate_coefficients(problem, v)
    denom = float(np.abs(f) @ problem.weights) * float(np.linalg.norm(v))
    return float(np.linalg.norm(A @ v - lam * v)) / denom if denom > 0 else math.inf


@dataclass(frozen=True, eq=False)
class NewtonResult:
    eigenpair: Eigenpair
    etas: list  # backward error of each iterate, starting with the initial guess
    steps: list  # norm of each Newton step
    sigma_min: float  # smallest singular value of J_F at the last factorized iterate

    @property
    def iterations(self) -> int:
        return len(self.steps)


def newton_solve(problem: SpmfProblem, lam0: float, v0, opts: SolveOptions | None = None) -> NewtonResult:
    """Newton's method for ``F(lam, v) = [A(v)v - lam v; 1 - v^T v / 2] = 0``.

    Iterates live in the gauge ``v^T v = 2``; the returned eigenvector has unit norm.

    Raises:
        SingularJacobianError: ``J_F`` is numerically singular at an iterate.
        MaxIterExceeded: no convergence within ``opts.max_iter`` steps.
    """
    opts = opts or SolveOptions()
    v = _as_vector(v0)
    v = v * (SQRT2 / np.linalg.norm(v))
    lam = float(lam0)
    n = v.size
    etas, steps = [], []
    sigma = math.nan
    for k in range(opts.max_iter + 1):
        A = assemble_matrix(problem, v)
        eta = _eta(problem, A, lam, v)
        etas.append(eta)
        if eta <= opts.tol_backward:
            return NewtonResult(Eigenpair.from_vector(problem, lam, v), etas, steps, sigma)
        if k == opts.max_iter:
            break
        JF = augmented_jacobian(assemble_jacobian(problem, v), lam, v)
        s = np.linalg.svd(JF, compute_uv=False)
        sigma = float(s[-1])
        if not sigma > opts.singular_tol * s[0]:
            raise SingularJacobianError(f"J_F singular at iteration {k} (sigma_min = {sigma:.3e})")
        F = np.empty(n + 1)
        F[:n] = A @ v - lam * v
        F[n] = 1.0 - 0.5 * float(v @ v)
        step = scipy.linalg.solve(JF, -F)
        v = v + opts.damping * step[:n]
        lam = lam + opts.damping * float(step[n])
        size = float(np.linalg.norm(step))
        steps.append(size)
        if not np.isfinite(size):
            raise MaxIterExceeded("Newton iterates diverged")
        if size <= opts.tol_step * (1 + np.linalg.norm(v) + abs(lam)):
            A = assemble_matrix(problem, v)
            if _eta(problem, A, lam, v) > opts.tol_backward:
                raise MaxIterExceeded(f"Newton stagnated at backward error {etas[-1]:.3e}")
    raise MaxIterExceeded(f"no convergence in {opts.max_iter} Newton steps (eta = {etas[-1]:.3e})")


def _select(mu: np.ndarray, selector) -> int:
    if isinstance(selector, str):
        if selector == "smallest":
            return 0
        if selector == "largest":
            return mu.size - 1
        raise InputError(f"unknown selector {selector!r}")
    return int(np.argmin(np.abs(mu - float(selector))))


def align(v: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Flip ``v`` so that ``ref^T v >= 0``."""
    return -v if float(ref @ v) < 0 else v


def scf_solve(problem: SpmfProblem, v0, selector="smallest", opts: SolveOptions | None = None) -> Eigenpair:
    """Self-consistent field iteration ``v_{k+1} = eigvec(A(v_k))``.

    ``selector`` is ``"smallest"``, ``"largest"`` or a number (eigenvalue of
    ``A(v_k)`` nearest to it). Converged when the backward error of the
    Rayleigh-quotient pair is at most ``opts.tol_backward``.

    Raises:
        MaxIterExceeded: the fixed-point iteration did not converge.
    """
    opts = opts or SolveOptions(max_iter=500)
    v = _as_vector(v0)
    v = v / np.linalg.norm(v)
    eta = math.inf
    for _ in range(opts.max_iter):
        mu, X = np.linalg.eigh(assemble_matrix(problem, v))
        x = align(X[:, _select(mu, selector)], v)
        A = assemble_matrix(problem, x)
        lam = float(x @ A @ x)
        eta = _eta(problem, A, lam, x)
        v = x
        if eta <= opts.tol_backward:
            return Eigenpair.from_vector(problem, lam, v)
    raise MaxIterExceeded(f"SCF did not converge in {opts.max_iter} iterations (eta = {eta:.3e})")


def solve_perturbed(problem: SpmfProblem, direction: PerturbationDirection, epsilon: float,
                    warm: Eigenpair, opts: SolveOptions | None = None) -> Eigenpair:
    """Eigenpair of ``sum_i f_i(v) (A_i + epsilon E_i)`` by Newton warm-started at ``warm``.

    The result is sign-aligned with ``warm.v``.
    """
    if epsilon == 0:
        return warm
    perturbed = problem.perturbed(direction.E, epsilon)
    pair = newton_solve(perturbed, warm.lam, warm.v, opts).eigenpair
    return Eigenpair(pair.lam, align(pair.v, warm.v), pair.residual_norm)


def seed_eigenpairs(problem: SpmfProblem, opts: SolveOptions | None = None) -> list[Eigenpair]:
    """Enumerate eigenpairs by SCF from every eigenvector of ``A(ones/sqrt(n))``.

    Each SCF result (or the starting vector, if SCF fails) is polished by
    Newton; duplicates are dropped.
    """
    opts = opts or SolveOptions()
    vbar = np.ones(problem.n) / math.sqrt(problem.n)
    mu, X = np.linalg.eigh(assemble_matrix(problem, vbar))
    found: list[Eigenpair] = []
    for j in range(problem.n):
        start = (float(mu[j]), X[:, j])
        try:
            pair = scf_solve(problem, X[:, j], float(mu[j]), SolveOptions(max_iter=200))
            start = (pair.lam, pair.v)
        except ConvergenceError:
            pass
        try:
            pair = newton_solve(problem, *start, opts).eigenpair
        except ConvergenceError:
            continue
        if not any(_same_pair(pair, q) for q in found):
            found.append(pair)
    return sorted(found, key=lambda p: p.lam)


def _same_pair(a: Eigenpair, b: Eigenpair, tol: float = 1e-6) -> bool:
    return abs(a.lam - b.lam) <= tol * (1 + abs(a.lam)) and abs(float(a.v @ b.v)) >= 1 - tol


# ---------------------------------------------------------------- continuation


@dataclass(frozen=True, eq=False)
class BranchPoint:
    delta: float
    lam: float
    v: np.ndarray
    kappa: float
    simple: bool
    sigma_min: float


@dataclass(eq=False)
class Branch:
    points: list = field(default_factory=list)
    origin: str = "seed"  # "seed" or "fold"
    end: str = "grid_end"  # "grid_end", "turning_point" or "failed"

    @property
    def deltas(self) -> np.ndarray:
        return np.array([p.delta for p in self.points])

    @property
    def lams(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def kappas(self) -> np.ndarray:
        return np.array([p.kappa for p in self.points])

    def sorted_points(self) -> list:
        return sorted(self.points, key=lambda p: p.delta)


@dataclass(frozen=True)
class TurningPoint:
    delta: float
    lam: float
    branch: int  # branch that ran into the fold
    partner: int | None  # branch continuing on the other side, if found


@dataclass(frozen=True)
class ZeroCrossing:
    delta: float
    branch: int


@dataclass(eq=False)
class BranchData:
    deltas: np.ndarray
    branches: list
    turning_points: list
    zero_crossings: list
    gaps: list  # (branch index, delta) pairs where a grid point could not be resolved


@dataclass(frozen=True)
class ContinuationOptions:
    """Knobs of :func:`continuation`; the defaults suit desk-size problems."""

    newton: SolveOptions = SolveOptions(max_iter=12)
    tol_simple: float = TOL_SIMPLE
    max_lam_jump: float = 0.5  # accepted |lam_k+1 - lam_k| / (1 + |lam_k|)
    max_v_jump: float = 0.5  # accepted ||v_k+1 - v_k|| after sign alignment
    bisection_steps: int = 45
    fold_sigma_ratio: float = 1e-3  # sigma_min collapse relative to the branch median
    approach_decades: tuple = (-9.0, -2.0)  # log10 range of fold-approach samples
    approach_per_decade: int = 8
    max_gap: int = 3
    max_branches: int = 64


class _Tracer:
    def __init__(self, family, grid, opts: ContinuationOptions):
        self.family = family
        self.grid = grid
        self.opts = opts
        self._problems: dict = {}
        self.branches: list[Branch] = []
        self.turning_points: list[TurningPoint] = []
        self.gaps: list = []

    def problem(self, delta: float) -> SpmfProblem:
        p = self._problems.get(delta)
        if p is None:
            p = self.family(delta)
            self._problems[delta] = p
        return p

    def point(self, delta: float, pair: Eigenpair) -> BranchPoint:
        problem = self.problem(delta)
        rep = None
        try:
            rep = is_simple(problem, pair.lam, pair.v, self.opts.tol_simple)
        except NepvError:
            pass
        kappa = math.inf
        if rep is not None and rep.is_simple:
            try:
                kappa = eigenvalue_condition(problem, pair.lam, pair.v)
            except NepvError:
                pass
        sigma = rep.sigma_min_JF if rep is not None else math.nan
        simple = bool(rep is not None and rep.is_simple)
        return BranchPoint(float(delta), pair.lam, pair.v, kappa, simple, sigma)

    def resolve(self, delta: float, lam0: float, v0: np.ndarray, prev: BranchPoint) -> Eigenpair | None:
        """Newton at ``delta``; None unless the result continues ``prev``."""
        try:
            pair = newton_solve(self.problem(delta), lam0, v0, self.opts.newton).eigenpair
        except ConvergenceError:
            return None
        v = align(pair.v, prev.v)
        if abs(pair.lam - prev.lam) > self.opts.max_lam_jump * (1 + abs(prev.lam)):
            return None
        if np.linalg.norm(v - prev.v) > self.opts.max_v_jump:
            return None
        return Eigenpair(pair.lam, v, pair.residual_norm)

    def covered(self, delta: float, pair: Eigenpair) -> bool:
        for br in self.branches:
            for p in br.points:
                if p.delta == delta and _same_pair(pair, Eigenpair(p.lam, p.v)):
                    return True
        return False

    # -- tracing

    def trace(self, branch: Branch, k: int, step: int):
        """March ``branch`` (last point at grid index ``k``) along the grid in direction ``step``."""
        grid = self.grid
        failures = 0
        k_next = k + step
        while 0 <= k_next < len(grid):
            last = branch.points[-1]
            delta = float(grid[k_next])
            pair = self.resolve(delta, *self._predict(branch, delta), last)
            if pair is None:
                pair = self.resolve(delta, last.lam, last.v, last)
            if pair is not None:
                branch.points.append(self.point(delta, pair))
                failures = 0
                k, k_next = k_next, k_next + step
                continue
            if failures == 0 and self._refine_fold(branch, k, k_next, step):
                return
            self.gaps.append((branch, delta))
            failures += 1
            if failures > self.opts.max_gap:
                branch.end = "failed"
                return
            k_next += step
        branch.end = "grid_end"

    def _predict(self, branch: Branch, delta: float):
        pts = branch.points
        if len(pts) < 2 or pts[-1].delta == pts[-2].delta:
            return pts[-1].lam, pts[-1].v
        a, b = pts[-2], pts[-1]
        t = (delta - b.delta) / (b.delta - a.delta)
        return b.lam + t * (b.lam - a.lam), b.v + t * (b.v - a.v)

    def _refine_fold(self, branch: Branch, k: int, k_fail: int, step: int) -> bool:
        """Bisection pass between the last good grid point and the failed one.

        Returns True if a turning point was found (and its partner branch traced).
        """
        opts = self.opts
        anchor = branch.points[-1]
        lo, hi = anchor.delta, float(self.grid[k_fail])
        cur = anchor
        inside = [anchor]
        for _ in range(opts.bisection_steps):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            pair = self.resolve(mid, cur.lam, cur.v, cur)
            if pair is None:
                hi = mid
            else:
                cur = self.point(mid, pair)
                inside.append(cur)
                lo = mid
        sigmas = np.array([p.sigma_min for p in branch.points if np.isfinite(p.sigma_min)])
        reference = float(np.median(sigmas)) if sigmas.size else 1.0
        if not (np.isfinite(cur.sigma_min) and cur.sigma_min < opts.fold_sigma_ratio * reference):
            return False
        d0 = 0.5 * (lo + hi)
        samples = self._approach(branch, anchor, d0, lo, step)
        l0 = _fold_lambda((samples or inside)[-6:], d0)
        branch.end = "turning_point"
        idx = self.branches.index(branch)
        partner = self._partner(samples, l0, k, step)
        self.turning_points.append(TurningPoint(float(d0), float(l0), idx,
                                                None if partner is None else self.branches.index(partner)))
        if partner is not None and len(self.branches) < opts.max_branches:
            self.trace(partner, k, -step)
        return True

    def _approach(self, branch: Branch, anchor: BranchPoint, d0: float, lo: float, step: int) -> list:
        """Geometric samples ``d0 - step * 10^s`` between the anchor and the fold."""
        o = self.opts
        lo_exp, hi_exp = o.approach_decades
        dists = np.logspace(hi_exp, lo_exp, int(round((hi_exp - lo_exp) * o.approach_per_decade)) + 1)
        limit = abs(d0 - anchor.delta)
        floor = abs(d0 - lo)
        cur = anchor
        out = []
        for dist in dists:
            if not floor < dist < limit:
                continue
            delta = float(d0 - step * dist)
            pair = self.resolve(delta, cur.lam, cur.v, cur)
            if pair is None:
                break
            cur = self.point(delta, pair)
            out.append(cur)
        branch.points.extend(out)
        return out

    def _partner(self, samples: list, l0: float, k: int, step: int) -> Branch | None:
        """Start the branch on the far side of the fold by reflecting the nearest sample."""
        if len(samples) < 2:
            return None
        a, b = samples[-2], samples[-1]
        lam_p = 2.0 * l0 - b.lam
        dv = (b.v - a.v) / (b.lam - a.lam)
        v_p = b.v + (lam_p - b.lam) * dv
        try:
            pair = newton_solve(self.problem(b.delta), lam_p, v_p, self.opts.newton).eigenpair
        except ConvergenceError:
            return None
        if _same_pair(pair, b, 1e-12) or abs(pair.lam - b.lam) < 0.25 * abs(lam_p - b.lam):
            return None  # fell back onto the incoming branch
        partner = Branch(origin="fold")
        partner.points.append(self.point(b.delta, Eigenpair(pair.lam, align(pair.v, v_p), pair.residual_norm)))
        self.branches.append(partner)
        # walk back out along the mirrored samples, then rejoin the grid
        for s in reversed(samples[:-1]):
            cur = partner.points[-1]
            got = self.resolve(s.delta, cur.lam, cur.v, cur)
            if got is None:
                break
            partner.points.append(self.point(s.delta, got))
        cur = partner.points[-1]
        got = self.resolve(float(self.grid[k]), cur.lam, cur.v, cur)
        if got is None:
            partner.end = "failed"
            return None
        partner.points.append(self.point(float(self.grid[k]), got))
        return partner

    def start(self, k: int, seed: Eigenpair, step: int):
        delta = float(self.grid[k])
        if self.covered(delta, seed) or len(self.branches) >= self.opts.max_branches:
            return
        br = Branch(origin="seed")
        br.points.append(self.point(delta, seed))
        self.branches.append(br)
        self.trace(br, k, step)


def _fold_lambda(points: Sequence[BranchPoint], d0: float) -> float:
    """Fold eigenvalue from ``lam = lam_0 + c_1 s + c_2 s^2``, ``s = sqrt|delta - d0|``."""
    pts = [p for p in points if p.delta != d0]
    if len(pts) < 3:
        return float(points[-1].lam)
    s = np.sqrt(np.abs(np.array([p.delta for p in pts]) - d0))
    lams = np.array([p.lam for p in pts])
    coef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(s), s, s * s]), lams, rcond=None)
    return float(coef[0])


def _zero_crossings(tracer: _Tracer, branches: list) -> list:
    out = []
    for bi, br in enumerate(branches):
        pts = br.sorted_points()
        for a, b in zip(pts, pts[1:]):
            if a.lam == 0.0:
                out.append(ZeroCrossing(a.delta, bi))
                continue
            if a.lam * b.lam >= 0:
                continue
            out.append(ZeroCrossing(_secant_root(tracer, a, b), bi))
    return out


def _secant_root(tracer: _Tracer, a: BranchPoint, b: BranchPoint, iters: int = 30) -> float:
    """``delta`` with ``lam(delta) = 0`` between two bracketing branch points."""
    x0, f0, x1, f1 = a.delta, a.lam, b.delta, b.lam
    ref = a
    for _ in range(iters):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not min(a.delta, b.delta) <= x2 <= max(a.delta, b.delta):
            break
        pair = tracer.resolve(x2, ref.lam, ref.v, ref)
        if pair is None:
            break
        x0, f0, x1, f1 = x1, f1, x2, pair.lam
        if abs(x1 - x0) <= 1e-13 * (1 + abs(x1)):
            break
    return float(x1)


def continuation(family: Callable[[float], SpmfProblem], delta_grid, seeds: Sequence[Eigenpair],
                 opts: ContinuationOptions | None = None, end_seeds: Sequence[Eigenpair] = ()) -> BranchData:
    """Follow eigenpair branches of ``family(delta)`` over a monotone grid.

    Every seed (an eigenpair at ``delta_grid[0]``) is advanced by warm-started
    Newton. When a step fails, a bisection pass brackets the failure; if
    ``sigma_min(J_F)`` has collapsed there, it is a turning point. The fold is
    then sampled geometrically, its eigenvalue estimated from a local fit in
    ``sqrt|delta - delta_0|``, and the partner branch on the other side is
    traced back along the grid. ``end_seeds`` at ``delta_grid[-1]`` are
    marched backwards to pick up branches not reachable from the first point.

    Branches are returned sorted by ``lam`` at their leftmost ``delta``.
    """
    opts = opts or ContinuationOptions()
    grid = np.asarray(delta_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise InputError("delta_grid needs at least two points")
    steps = np.diff(grid)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise InputError("delta_grid must be strictly monotone")
    tracer = _Tracer(family, grid, opts)
    for seed in seeds:
        tracer.start(0, seed, +1)
    for seed in end_seeds:
        tracer.start(grid.size - 1, seed, -1)

    def key(br: Branch):
        p = min(br.points, key=lambda q: q.delta)
        return (p.lam, p.delta)

    order = sorted(range(len(tracer.branches)), key=lambda i: key(tracer.branches[i]))
    remap = {old: new for new, old in enumerate(order)}
    branches = [tracer.branches[i] for i in order]
    for br in branches:
        br.points.sort(key=lambda p: p.delta)
    tps = [TurningPoint(t.delta, t.lam, remap[t.branch], None if t.partner is None else remap[t.partner])
           for t in tracer.turning_points]
    gaps = [(branches.index(b), d) for b, d in tracer.gaps]
    return BranchData(grid, branches, tps, _zero_crossings(tracer, branches), gaps)
