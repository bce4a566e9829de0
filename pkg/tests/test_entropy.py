"""The log-determinant barrier: value, gradient, Hessian, convexity."""

import numpy as np
import pytest
import scipy.linalg

from qflow import entropy, tensor
from helpers import random_feasible, random_rotation


def test_minimum_at_isotropic_state():
    assert abs(entropy.q_value(np.zeros(5)) - 9.0 * np.log(3.0)) < 1e-12
    assert abs(entropy.Q_MIN - 9.0 * np.log(3.0)) < 1e-15
    rng = np.random.default_rng(0)
    q = random_feasible(rng, (500,))
    assert np.all(entropy.q_value(q) >= entropy.Q_MIN - 1e-12)


def test_value_matches_eigenvalue_formula():
    rng = np.random.default_rng(1)
    q = random_feasible(rng, (300,))
    lam = tensor.eigenvalues(q)
    ref = (-np.log(lam + 1.0 / 3.0) - 2.0 * np.log(1.0 / 3.0 - lam / 2.0)).sum(-1)
    val = entropy.q_value(q)
    assert np.allclose(val, ref, rtol=1e-10)


def test_value_infinite_outside_physical_set():
    q = tensor.uniaxial(np.asarray(1.2), [0.0, 0.0, 1.0])
    assert entropy.q_value(q) == np.inf
    assert np.isinf(entropy.q_value(np.array([5.0, 0.0, 0.0, 0.0, 0.0])))


def test_value_rotation_invariant():
    rng = np.random.default_rng(2)
    q = random_feasible(rng, (100,))
    r = random_rotation(rng, (100,))
    m = np.einsum("...ij,...jk,...lk->...il", r, tensor.to_matrix(q), r)
    rotated = tensor.from_matrix(m)
    assert np.allclose(entropy.q_value(rotated), entropy.q_value(q), atol=1e-10)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    eps = 1e-6
    for _ in range(30):
        c = random_feasible(rng, margin=0.2)
        grad = tensor.METRIC @ entropy.q_grad(c)  # chart gradient
        for a in range(5):
            e = np.zeros(5)
            e[a] = eps
            fd = (entropy.q_value(c + e) - entropy.q_value(c - e)) / (2.0 * eps)
            assert abs(grad[a] - fd) <= 1e-6 * max(1.0, abs(fd))


def test_gradient_rotation_equivariant():
    rng = np.random.default_rng(4)
    q = random_feasible(rng, (60,))
    r = random_rotation(rng, (60,))

    def rot(c):
        m = np.einsum("...ij,...jk,...lk->...il", r, tensor.to_matrix(c), r)
        return tensor.from_matrix(m)

    assert np.allclose(entropy.q_grad(rot(q)), rot(entropy.q_grad(q)), atol=1e-10)


def test_hessian_matches_finite_differences():
    rng = np.random.default_rng(5)
    eps = 1e-6
    for _ in range(10):
        c = random_feasible(rng, margin=0.2)
        hess = entropy.q_hess(c)
        for b in range(5):
            e = np.zeros(5)
            e[b] = eps
            fd = tensor.METRIC @ (
                entropy.q_grad(c + e) - entropy.q_grad(c - e)
            ) / (2.0 * eps)
            assert np.allclose(hess[:, b], fd, rtol=2e-6, atol=1e-6)


def test_hessian_positive_definite_on_physical_set():
    rng = np.random.default_rng(6)
    q = random_feasible(rng, (10_000,))
    h = entropy.q_hess(q)
    assert np.allclose(h, np.swapaxes(h, -1, -2), atol=1e-12)
    eigs = np.linalg.eigvalsh(h)
    assert np.all(eigs > 0.0)


def test_hessian_generalized_spectrum_rotation_invariant():
    # the chart is not orthonormal, so the invariant object is the
    # spectrum of the Hessian relative to the chart Gram matrix
    rng = np.random.default_rng(7)
    for _ in range(100):
        c = random_feasible(rng)
        r = random_rotation(rng)
        m = r @ tensor.to_matrix(c) @ r.T
        cr = tensor.from_matrix(m)
        s1 = scipy.linalg.eigh(entropy.q_hess(c), tensor.METRIC, eigvals_only=True)
        s2 = scipy.linalg.eigh(entropy.q_hess(cr), tensor.METRIC, eigvals_only=True)
        assert np.allclose(s1, s2, atol=1e-10 * max(1.0, np.abs(s1).max()))


def test_gradient_monotone_from_convexity():
    # (grad q(A) - grad q(B)) : (A - B) > 0 for A != B
    rng = np.random.default_rng(8)
    a = random_feasible(rng, (10_000,))
    b = random_feasible(rng, (10_000,))
    gap = tensor.dot(entropy.q_grad(a) - entropy.q_grad(b), a - b)
    assert np.all(gap > 0.0)


def test_midpoint_convexity():
    rng = np.random.default_rng(9)
    a = random_feasible(rng, (2000,))
    b = random_feasible(rng, (2000,))
    mid = entropy.q_value(0.5 * (a + b))
    assert np.all(mid <= 0.5 * (entropy.q_value(a) + entropy.q_value(b)) + 1e-10)


def test_derivatives_reject_unphysical_input():
    bad = tensor.uniaxial(np.asarray(0.99999999), [0.0, 0.0, 1.0]) * 1.1
    with pytest.raises(ValueError):
        entropy.q_grad(bad)
    with pytest.raises(ValueError):
        entropy.q_hess(bad)


def test_barrier_blows_up_at_the_edge():
    vals = [entropy.q_value(tensor.uniaxial(np.asarray(s), [0.0, 0.0, 1.0]))
            for s in (0.9, 0.99, 0.999, 0.9999)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 30.0
