import math

import numpy as np
import pytest

from nepvcond.conditioning import (
    PerturbationDirection,
    complement_resolvent,
    condition_report,
    eigenvalue_condition,
    eigenvalue_condition_symmetric,
    eigenvalue_sensitivity,
    eigenvector_condition,
    eigenvector_sensitivity,
    optimal_eigenvalue_perturbation,
    spectral_gap_condition,
)
from nepvcond.errors import InputError, NonSimpleError, NotApplicableError, ZeroEigenvalueError
from nepvcond.model import Constant, SpmfProblem, assemble_jacobian
from nepvcond.spectral import orthogonal_complement_basis

from conftest import random_instance, wilkinson_instance


def test_wilkinson_two_is_sqrt_five():
    # u = (1, 2)/sqrt(5), alpha = 2, lambda = 2
    inst = wilkinson_instance(2)
    assert eigenvalue_condition(inst.problem, 2.0, inst.pair.v) == pytest.approx(math.sqrt(5), rel=1e-14)


def test_linear_problem_matches_classical_theory():
    # m = 1 with a constant coefficient is a symmetric linear eigenproblem
    rng = np.random.default_rng(5)
    G = rng.standard_normal((5, 5))
    A = G + G.T
    mu, X = np.linalg.eigh(A)
    p = SpmfProblem([A], [Constant()], "unit")
    k = 2
    lam, v = mu[k], X[:, k]
    assert eigenvalue_condition(p, lam, v, mode="absolute") == pytest.approx(1.0, rel=1e-12)
    gap = np.min(np.abs(np.delete(mu, k) - lam))
    assert eigenvector_condition(p, lam, v) == pytest.approx(1 / gap, rel=1e-12)
    assert spectral_gap_condition(p, lam, v) == pytest.approx(1 / gap, rel=1e-12)


def test_spectral_gap_requires_symmetric_jacobian():
    inst = wilkinson_instance(3)
    with pytest.raises(NotApplicableError):
        spectral_gap_condition(inst.problem, 3.0, inst.pair.v)


def test_absolute_mode_and_zero_eigenvalue():
    inst = random_instance(6)
    p, lam, v = inst.problem, inst.pair.lam, inst.pair.v
    assert eigenvalue_condition(p, lam, v, mode="absolute") == pytest.approx(
        abs(lam) * eigenvalue_condition(p, lam, v), rel=1e-14)
    A = np.diag([0.0, 1.0])
    q = SpmfProblem([A], [Constant()])
    with pytest.raises(ZeroEigenvalueError):
        eigenvalue_condition(q, 0.0, np.array([1.0, 0.0]))
    assert math.isinf(condition_report(q, 0.0, np.array([1.0, 0.0])).kappa_lambda)
    with pytest.raises(InputError):
        eigenvalue_condition(p, lam, v, mode="logarithmic")


def test_non_simple_pair():
    p = SpmfProblem([np.eye(3)], [Constant()])
    with pytest.raises(NonSimpleError):
        eigenvalue_condition(p, 1.0, np.array([1.0, 0.0, 0.0]))


@pytest.mark.parametrize("seed", range(5))
def test_condition_numbers_do_not_depend_on_scale(seed):
    inst = random_instance(seed)
    p, lam, v = inst.problem, inst.pair.lam, inst.pair.v
    for f in (eigenvalue_condition, eigenvector_condition):
        assert f(p, lam, -7.5 * v) == pytest.approx(f(p, lam, v), rel=1e-12)


def test_complement_resolvent_basis_independent():
    inst = random_instance(9)
    J = assemble_jacobian(inst.problem, inst.pair.v)
    v = inst.pair.v
    V = orthogonal_complement_basis(v)
    Q = np.linalg.qr(np.random.default_rng(1).standard_normal((V.shape[1],) * 2))[0]
    assert np.allclose(complement_resolvent(J, inst.pair.lam, v, V @ Q),
                       complement_resolvent(J, inst.pair.lam, v), atol=1e-12)


def test_sensitivities_along_attaining_direction():
    inst = random_instance(10)
    p, lam, v = inst.problem, inst.pair.lam, inst.pair.v
    E = optimal_eigenvalue_perturbation(p, lam, v)
    assert abs(eigenvalue_sensitivity(p, lam, v, E)) == pytest.approx(
        eigenvalue_condition(p, lam, v) * abs(lam), rel=1e-12)
    # v' is orthogonal to v in the fixed-norm gauge
    assert abs(eigenvector_sensitivity(p, lam, v, E) @ v) < 1e-12


def test_report_fields_consistent():
    inst = wilkinson_instance(5)
    rep = condition_report(inst.problem, 5.0, inst.pair.v)
    assert rep.kappa_lambda == pytest.approx(67.74, rel=1e-3)
    assert rep.u_dot_v == pytest.approx(math.cos(rep.theta), rel=1e-12)
    assert rep.kappa_lambda_sym_F == pytest.approx(rep.beta * rep.kappa_lambda, rel=1e-15)
    assert rep.kappa_lambda_abs == pytest.approx(5 * rep.kappa_lambda, rel=1e-14)
    assert set(rep.attaining) == {k for k in rep.as_dict() if k.startswith("kappa") and k != "kappa_lambda_abs"}
    assert eigenvalue_condition_symmetric(inst.problem, 5.0, inst.pair.v, norm="frobenius") == rep.kappa_lambda_sym_F


def test_direction_validation():
    with pytest.raises(InputError):
        PerturbationDirection(np.ones((1, 2, 3)))
    with pytest.raises(InputError):
        PerturbationDirection(np.array([[0.0, 1.0], [0.0, 0.0]]), symmetric=True)
    with pytest.raises(InputError):
        PerturbationDirection(2 * np.eye(2), weights=[1.0])
    d = PerturbationDirection(np.eye(2), norm="fro", weights=[math.sqrt(2)])
    assert d.E.shape == (1, 2, 2)
    assert d.norms() == pytest.approx([math.sqrt(2)])
