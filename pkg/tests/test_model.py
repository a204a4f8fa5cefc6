import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nepvcond.errors import (
    InputError,
    InvalidDimensionError,
    MissingGradientError,
    ZeroAlphaError,
    ZeroVectorError,
)
from nepvcond.model import (
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
    resolve_weights,
)

from conftest import random_instance, sym

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vectors(n):
    return arrays(float, n, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def central_gradient(f, v, h=1e-6):
    return np.array([(f(v + h * e) - f(v - h * e)) / (2 * h) for e in np.eye(v.size)])


@settings(max_examples=50, deadline=None)
@given(vectors(5), st.integers(0, 2**32 - 1))
def test_rational_quadratic_gradient_matches_differences(v, seed):
    f = RationalQuadratic(sym(np.random.default_rng(seed), 5))
    g = f.gradient(v)
    fd = central_gradient(f, v)
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-6 * (1 + np.abs(fd).max()))


def test_rational_quadratic_basis_vector():
    B = np.arange(9.0).reshape(3, 3)
    f = RationalQuadratic(B + B.T)
    assert f(np.array([0.0, 0.0, 1.0])) == 16.0


@settings(max_examples=40, deadline=None)
@given(vectors(4), st.floats(0.1, 5) | st.floats(-5, -0.1))
def test_rational_quadratic_scale_invariant(v, alpha):
    f = RationalQuadratic(sym(np.random.default_rng(0), 4))
    assert f(alpha * v) == pytest.approx(f(v), rel=1e-12, abs=1e-12)
    # gradient is orthogonal to v and scales like 1/alpha
    assert abs(f.gradient(v) @ v) <= 1e-10 * np.linalg.norm(v) * (1 + np.linalg.norm(f.gradient(v)))


def test_constant_gradient_is_zero():
    assert np.array_equal(Constant(3.0).gradient(np.ones(4)), np.zeros(4))


def test_custom_without_gradient_raises():
    f = Custom(lambda v: v[0] ** 2)
    with pytest.raises(MissingGradientError):
        f.gradient(np.ones(2))


def test_normalized_gradient():
    inner = Custom(lambda v: v[0] ** 3 + v[1], lambda v: np.array([3 * v[0] ** 2, 1.0, 0.0]))
    f = Normalized(inner)
    v = np.array([0.3, -1.2, 2.0])
    assert np.allclose(f.gradient(v), central_gradient(f, v), rtol=1e-6, atol=1e-9)
    assert f(4 * v) == pytest.approx(f(v), rel=1e-14)


def test_symmetrizes_small_deviation_and_rejects_large():
    A = np.array([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
    p = SpmfProblem([A], [Constant()])
    assert np.array_equal(p.matrices[0], p.matrices[0].T)
    with pytest.raises(InputError):
        SpmfProblem([np.array([[1.0, 2.0], [2.1, 3.0]])], [Constant()])


def test_problem_validation():
    with pytest.raises(InputError):
        SpmfProblem([np.eye(3), np.eye(3)], [Constant()])
    with pytest.raises(InvalidDimensionError):
        SpmfProblem([np.eye(1)], [Constant()])
    with pytest.raises(InputError):
        SpmfProblem([np.eye(3)], [RationalQuadratic(np.eye(2))])
    with pytest.raises(InputError):
        SpmfProblem([np.eye(2)], [Constant()], weights=[-1.0])


def test_arrays_are_read_only():
    p = SpmfProblem([np.eye(2)], [Constant()])
    with pytest.raises(ValueError):
        p.matrices[0, 0, 0] = 5.0


def test_relative_weights_are_spectral_norms():
    A = np.array([[3.0, 1.0], [1.0, -4.0]])
    w = resolve_weights(np.stack([A, 2 * np.eye(2)]), "relative")
    assert w == pytest.approx([np.max(np.abs(np.linalg.eigvalsh(A))), 2.0], rel=1e-14)
    assert list(resolve_weights(np.stack([A]), "unit")) == [1.0]
    with pytest.raises(InputError):
        resolve_weights(np.stack([A]), "frobenius")


def test_zero_vector_rejected():
    p = random_instance(0).problem
    with pytest.raises(ZeroVectorError):
        assemble_matrix(p, np.zeros(p.n))


def test_eigenpair_from_vector_normalizes():
    inst = random_instance(3)
    pair = Eigenpair.from_vector(inst.problem, inst.pair.lam, 5 * inst.pair.v)
    assert np.linalg.norm(pair.v) == pytest.approx(1.0)
    assert pair.residual_norm < 1e-13


@pytest.mark.parametrize("seed", range(8))
def test_jacobian_identity_and_fd(seed):
    p = random_instance(seed).problem
    v = np.random.default_rng(seed).standard_normal(p.n)
    J = assemble_jacobian(p, v)
    A = assemble_matrix(p, v)
    assert np.linalg.norm(J @ v - A @ v) <= 1e-13 * np.linalg.norm(A @ v)
    fd = finite_difference_jacobian(p, v)
    assert np.linalg.norm(fd - J) <= 1e-6 * np.linalg.norm(J)


def test_scaling_invariance_check():
    inst = random_instance(2)
    v = inst.pair.v
    assert check_scaling_invariance(inst.problem, v).invariant
    not_inv = SpmfProblem([np.eye(2), np.diag([1.0, -1.0])],
                          [Constant(), Custom(lambda x: x @ x, lambda x: 2 * x)])
    x = np.array([1.0, 2.0])
    assert not check_scaling_invariance(not_inv, x).invariant
    fixed = rescale_to_invariant(not_inv)
    chk = check_scaling_invariance(fixed, x)
    assert chk.invariant and chk.identity_residual < 1e-12
    with pytest.raises(ZeroAlphaError):
        check_scaling_invariance(fixed, x, alphas=(0.0,))


def test_perturbed_keeps_weights():
    p = random_instance(1).problem
    E = np.stack([np.eye(p.n)] * p.m)
    q = p.perturbed(E, 0.5)
    assert np.array_equal(q.weights, p.weights)
    assert np.allclose(q.matrices, p.matrices + 0.5 * E)


def test_coefficients_vector():
    p = SpmfProblem([np.eye(2), np.eye(2)], [Constant(2.0), RationalQuadratic(np.diag([1.0, 3.0]))])
    assert list(evaluate_coefficients(p, np.array([0.0, 1.0]))) == [2.0, 3.0]
