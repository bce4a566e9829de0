"""Shared random samplers for the test suite."""

import numpy as np

from qflow import tensor


def random_rotation(rng, n=()):
    """Proper rotation matrices of shape n + (3, 3), Haar-ish via QR."""
    a = rng.standard_normal(tuple(n) + (3, 3))
    q, r = np.linalg.qr(a)
    # fix the sign convention so the distribution does not favor an octant
    d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    q = q * d[..., None, :]
    det = np.linalg.det(q)
    q[..., :, 0] *= det[..., None]
    return q


def random_feasible(rng, n=(), margin=0.0):
    """Physical tensors of shape n + (5,), eigenvalues in (-1/3, 2/3).

    Eigenvalues are a Dirichlet sample shifted by -1/3 (so they sum to
    zero and stay strictly inside), shrunk toward zero by ``margin`` to
    keep finite-difference probes away from the barrier.
    """
    shape = tuple(n)
    g = rng.gamma(1.0, size=shape + (3,))
    lam = g / g.sum(axis=-1, keepdims=True) - 1.0 / 3.0
    lam = (1.0 - margin) * lam
    rot = random_rotation(rng, shape)
    m = np.einsum("...ij,...j,...kj->...ik", rot, lam, rot)
    return tensor.from_matrix(m)
