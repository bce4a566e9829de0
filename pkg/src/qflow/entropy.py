"""The entropy barrier q(Q) = -ln det(Q + I/3) - 2 ln det(I/3 - Q/2).

Strictly convex on the physical set, +inf outside, minimum 9 ln 3 at
Q = 0.  In terms of eigenvalues, q(Q) = sum_i [-ln(1/3 + lam_i)
- 2 ln(1/3 - lam_i/2)], so it blows up as any eigenvalue approaches
-1/3 or 2/3.  Gradients and Hessians are expressed in the 5-component
chart of :mod:`qflow.tensor`.
"""

from __future__ import annotations

import numpy as np

from .tensor import BASIS, from_matrix, is_physical, to_matrix

Q_MIN = 9.0 * np.log(3.0)

_EYE3 = np.eye(3)


def _det3(m: np.ndarray) -> np.ndarray:
    a, b, c = m[..., 0, 0], m[..., 1, 1], m[..., 2, 2]
    d, e, f = m[..., 0, 1], m[..., 0, 2], m[..., 1, 2]
    return a * (b * c - f * f) - d * (d * c - f * e) + e * (d * f - b * e)


def _inv3_sym(m: np.ndarray, det: np.ndarray) -> np.ndarray:
    """Adjugate-based inverse of symmetric (..., 3, 3) matrices."""
    a, b, c = m[..., 0, 0], m[..., 1, 1], m[..., 2, 2]
    d, e, f = m[..., 0, 1], m[..., 0, 2], m[..., 1, 2]
    w = np.empty_like(m)
    w[..., 0, 0] = b * c - f * f
    w[..., 1, 1] = a * c - e * e
    w[..., 2, 2] = a * b - d * d
    w[..., 0, 1] = w[..., 1, 0] = e * f - d * c
    w[..., 0, 2] = w[..., 2, 0] = d * f - b * e
    w[..., 1, 2] = w[..., 2, 1] = d * e - a * f
    return w / det[..., None, None]


def _factors(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = to_matrix(q)
    return m + _EYE3 / 3.0, _EYE3 / 3.0 - 0.5 * m


def q_value(q: np.ndarray) -> np.ndarray:
    """Barrier value, broadcast over leading axes; +inf where unphysical."""
    q = np.asarray(q, dtype=float)
    v1, v2 = _factors(q)
    d1, d2 = _det3(v1), _det3(v2)
    ok = is_physical(q) & (d1 > 0.0) & (d2 > 0.0)
    d1 = np.where(ok, d1, 1.0)
    d2 = np.where(ok, d2, 1.0)
    val = -np.log(d1) - 2.0 * np.log(d2)
    return np.where(ok, val, np.inf)


def _check_physical(q: np.ndarray) -> None:
    if not np.all(is_physical(q)):
        raise ValueError("tensor outside the physical eigenvalue range")


def q_grad(q: np.ndarray) -> np.ndarray:
    """Projected matrix gradient P(-(Q+I/3)^-1 + (I/3-Q/2)^-1), as components.

    This is the tensor that enters the flow; the gradient of q in chart
    coordinates is ``METRIC @ q_grad(q)``.
    """
    q = np.asarray(q, dtype=float)
    _check_physical(q)
    v1, v2 = _factors(q)
    w1 = _inv3_sym(v1, _det3(v1))
    w2 = _inv3_sym(v2, _det3(v2))
    # d/dQ of -2 ln det(I/3 - Q/2) is +(I/3 - Q/2)^-1
    return _project_sym(-w1 + w2)


def _project_sym(g: np.ndarray) -> np.ndarray:
    tr = np.einsum("...ii->...", g) / 3.0
    return from_matrix(g - tr[..., None, None] * _EYE3)


def q_hess(q: np.ndarray) -> np.ndarray:
    """Hessian of q in the 5-component chart, shape (..., 5, 5).

    H_ab = tr(W1 E_a W1 E_b) + (1/2) tr(W2 E_a W2 E_b) with
    W1 = (Q+I/3)^-1, W2 = (I/3-Q/2)^-1 and E_a the chart basis.
    Symmetric positive definite on the physical set.
    """
    q = np.asarray(q, dtype=float)
    _check_physical(q)
    v1, v2 = _factors(q)
    w1 = _inv3_sym(v1, _det3(v1))
    w2 = _inv3_sym(v2, _det3(v2))
    h = _conj_form(w1) + 0.5 * _conj_form(w2)
    return 0.5 * (h + np.swapaxes(h, -1, -2))


def _conj_form(w: np.ndarray) -> np.ndarray:
    # form matrix F_ab = tr(W E_a W E_b)
    t = np.einsum("...ij,ajk,...kl->...ail", w, BASIS, w, optimize=True)
    return np.einsum("...ail,bli->...ab", t, BASIS, optimize=True)
