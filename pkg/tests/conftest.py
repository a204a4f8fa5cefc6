"""Shared fixtures: random SPMF instances with a planted eigenpair, reference problems."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

from nepvcond.experiments import bifurcation_sweep, build_bifurcation, build_wilkinson
from nepvcond.model import Constant, Eigenpair, RationalQuadratic, SpmfProblem, assemble_matrix


@dataclass
class Instance:
    name: str
    problem: SpmfProblem
    pair: Eigenpair


def sym(rng, n):
    G = rng.standard_normal((n, n))
    return 0.5 * (G + G.T)


def random_instance(seed: int, n: int | None = None, m: int | None = None) -> Instance:
    """Random problem ``A_0 + sum_{i>0} (v^T B_i v / v^T v) A_i`` with a planted eigenpair.

    ``A_0`` gets a symmetric rank-2 correction ``C = t v^T + v t^T - (v^T t) v v^T``
    (``v`` unit) so that ``C v = t = lam v - A(v) v``.
    """
    rng = np.random.default_rng([2024, seed])
    n = int(rng.integers(2, 13)) if n is None else n
    m = int(rng.integers(1, 5)) if m is None else m
    mats = [sym(rng, n) for _ in range(m)]
    funcs = [Constant(1.0)] + [RationalQuadratic(sym(rng, n)) for _ in range(m - 1)]
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = float(rng.uniform(0.5, 3.0) * rng.choice([-1, 1]))
    t = lam * v - assemble_matrix(SpmfProblem(mats, funcs, "unit"), v) @ v
    mats[0] = mats[0] + np.outer(t, v) + np.outer(v, t) - float(v @ t) * np.outer(v, v)
    problem = SpmfProblem(mats, funcs, "relative")
    return Instance(f"random-{seed}", problem, Eigenpair.from_vector(problem, lam, v))


def wilkinson_instance(n: int) -> Instance:
    problem = build_wilkinson(n)
    return Instance(f"wilkinson-{n}", problem, Eigenpair.from_vector(problem, float(n), np.eye(n)[0]))


def bifurcation_instances(data, delta: float) -> list[Instance]:
    """Every branch point of a sweep at the grid value nearest ``delta``."""
    d = float(data.deltas[np.argmin(np.abs(data.deltas - delta))])
    problem = build_bifurcation(d)
    pairs = [p for br in data.branches for p in br.points if p.delta == d]
    return [Instance(f"bifurcation({d:.3f})-{k}", problem, Eigenpair.from_vector(problem, p.lam, p.v))
            for k, p in enumerate(pairs)]


RANDOM_SEEDS = range(24)


@pytest.fixture(scope="session")
def random_instances() -> list[Instance]:
    return [random_instance(s) for s in RANDOM_SEEDS]


@pytest.fixture(scope="session")
def sweep():
    """Default bifurcation sweep with its wall-clock time."""
    t = time.perf_counter()
    data = bifurcation_sweep()
    return data, time.perf_counter() - t


@pytest.fixture(scope="session")
def reference_instances(sweep) -> list[Instance]:
    data = sweep[0]
    return [wilkinson_instance(3), wilkinson_instance(5)] + bifurcation_instances(data, 0.0) \
        + bifurcation_instances(data, -2.5)


@pytest.fixture(scope="session")
def corpus(random_instances, reference_instances) -> list[Instance]:
    return random_instances + reference_instances


# ---------------------------------------------------------------- acceptance reporting


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request, capsys):
    """``criterion(id, title, ok, detail)`` records a pass/fail line and asserts ``ok``."""

    def record(cid: str, title: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {title}" + (f" ({detail})" if detail else "")
        request.config._acceptance_lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return record
