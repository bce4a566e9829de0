"""Symmetric traceless 3x3 tensors stored as 5-component arrays.

A tensor Q is stored as ``(Q11, Q22, Q12, Q13, Q23)``; the remaining
entries follow from symmetry and ``Q33 = -Q11 - Q22``.  All functions
broadcast over leading axes, so a field of tensors is just an array of
shape ``(..., 5)``.

The physical set keeps the eigenvalues of Q strictly inside
``(-1/3, 2/3)``, which is equivalent to positive definiteness of both
``Q + I/3`` and ``I/3 - Q/2``.
"""

from __future__ import annotations

import numpy as np

# Chart basis: to_matrix(c) == sum_a c[a] * BASIS[a].
BASIS = np.zeros((5, 3, 3))
BASIS[0, 0, 0] = 1.0
BASIS[0, 2, 2] = -1.0
BASIS[1, 1, 1] = 1.0
BASIS[1, 2, 2] = -1.0
BASIS[2, 0, 1] = BASIS[2, 1, 0] = 1.0
BASIS[3, 0, 2] = BASIS[3, 2, 0] = 1.0
BASIS[4, 1, 2] = BASIS[4, 2, 1] = 1.0

# Gram matrix of the chart basis under the full contraction A:B.
# dot(a, b) = a @ METRIC @ b.
METRIC = np.array(
    [
        [2.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 2.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 2.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 2.0],
    ]
)

_EYE3 = np.eye(3)


def to_matrix(q: np.ndarray) -> np.ndarray:
    """Expand (..., 5) components into full (..., 3, 3) matrices."""
    q = np.asarray(q, dtype=float)
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = q[..., 0]
    m[..., 1, 1] = q[..., 1]
    m[..., 2, 2] = -q[..., 0] - q[..., 1]
    m[..., 0, 1] = m[..., 1, 0] = q[..., 2]
    m[..., 0, 2] = m[..., 2, 0] = q[..., 3]
    m[..., 1, 2] = m[..., 2, 1] = q[..., 4]
    return m


def from_matrix(m: np.ndarray) -> np.ndarray:
    """Read (..., 5) components off matrices assumed symmetric traceless."""
    m = np.asarray(m, dtype=float)
    return np.stack(
        [m[..., 0, 0], m[..., 1, 1], m[..., 0, 1], m[..., 0, 2], m[..., 1, 2]],
        axis=-1,
    )


def project(a: np.ndarray) -> np.ndarray:
    """Project arbitrary (..., 3, 3) matrices onto symmetric traceless part."""
    a = np.asarray(a, dtype=float)
    sym = 0.5 * (a + np.swapaxes(a, -1, -2))
    tr = np.einsum("...ii->...", sym) / 3.0
    return from_matrix(sym - tr[..., None, None] * _EYE3)


def uniaxial(s, n) -> np.ndarray:
    """Uniaxial tensor s*(n n^T - I/3); n is normalized first."""
    s = np.asarray(s, dtype=float)
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    outer = n[..., :, None] * n[..., None, :]
    return from_matrix(s[..., None, None] * (outer - _EYE3 / 3.0))


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full contraction A:B = sum_ij A_ij B_ij."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diag = (
        2.0 * (a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1])
        + a[..., 0] * b[..., 1]
        + a[..., 1] * b[..., 0]
    )
    off = 2.0 * (
        a[..., 2] * b[..., 2] + a[..., 3] * b[..., 3] + a[..., 4] * b[..., 4]
    )
    return diag + off


def norm_sq(q: np.ndarray) -> np.ndarray:
    """|Q|^2 = Q:Q = tr(Q^2)."""
    return dot(q, q)


def det(q: np.ndarray) -> np.ndarray:
    """Determinant of the expanded matrix."""
    q = np.asarray(q, dtype=float)
    a, b, c, d, e = (q[..., k] for k in range(5))
    f = -a - b  # Q33
    return a * (b * f - e * e) - c * (c * f - e * d) + d * (c * e - b * d)


def _trace_cubed(q: np.ndarray) -> np.ndarray:
    # tr(Q^3) = 3 det(Q) for traceless Q (Cayley-Hamilton).
    return 3.0 * det(q)


def eigenvalues(q: np.ndarray) -> np.ndarray:
    """Eigenvalues of Q, shape (..., 3), sorted descending.

    Trigonometric closed form for the traceless symmetric case.  The
    arccos argument is clipped so nearly repeated eigenvalues (where it
    lands on +-1 up to roundoff) stay well defined.
    """
    q = np.asarray(q, dtype=float)
    j2 = norm_sq(q) / 6.0  # tr(Q^2)/6
    scale = np.sqrt(np.maximum(j2, 0.0))
    safe = np.where(scale > 0.0, scale, 1.0)
    # char poly: lam^3 - 3 j2 lam - det = 0; substitute lam = 2 scale cos(phi)
    r = 0.5 * det(q) / safe**3
    phi = np.arccos(np.clip(r, -1.0, 1.0)) / 3.0
    lam1 = 2.0 * scale * np.cos(phi)
    lam3 = 2.0 * scale * np.cos(phi + 2.0 * np.pi / 3.0)
    lam2 = -lam1 - lam3
    lam = np.stack([lam1, lam2, lam3], axis=-1)
    return np.where(scale[..., None] > 0.0, lam, 0.0)


def _orthogonal_fallback(v: np.ndarray) -> np.ndarray:
    # Unit vector orthogonal to v: cross with the axis least aligned with v.
    axis = np.argmin(np.abs(v), axis=-1)
    e = np.zeros_like(v)
    np.put_along_axis(e, axis[..., None], 1.0, axis=-1)
    w = np.cross(v, e)
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def _null_vector(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best cross product of row pairs of m: near-null vector + its norm."""
    r0, r1, r2 = m[..., 0, :], m[..., 1, :], m[..., 2, :]
    cands = np.stack([np.cross(r0, r1), np.cross(r0, r2), np.cross(r1, r2)], axis=-2)
    mags = np.einsum("...ki,...ki->...k", cands, cands)
    best = np.argmax(mags, axis=-1)
    v = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
    mag = np.sqrt(np.take_along_axis(mags, best[..., None], axis=-1)[..., 0])
    return v, mag


def eigen_frame(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and an orthonormal eigenvector frame.

    Returns ``(lam, vecs)`` with ``vecs[..., :, k]`` the unit eigenvector
    for ``lam[..., k]``.  The extreme eigenvalues get their vectors from
    row cross products of ``Q - lam I``; whichever of the two is better
    conditioned anchors the frame, the other is re-orthogonalized against
    it, and the middle vector closes the right-handed triple.  Repeated
    eigenvalues fall back to an arbitrary vector in the eigenplane, which
    is exact there.
    """
    q = np.asarray(q, dtype=float)
    lam = eigenvalues(q)
    m = to_matrix(q)
    v1, mag1 = _null_vector(m - lam[..., 0, None, None] * _EYE3)
    v3, mag3 = _null_vector(m - lam[..., 2, None, None] * _EYE3)

    scale = np.maximum(norm_sq(q), 1e-300)[..., None]
    good1 = (mag1 * mag1)[..., None] > 1e-24 * scale
    good3 = (mag3 * mag3)[..., None] > 1e-24 * scale
    n1 = np.where(good1, v1 / np.where(good1, np.linalg.norm(v1, axis=-1, keepdims=True), 1.0), 0.0)
    n3 = np.where(good3, v3 / np.where(good3, np.linalg.norm(v3, axis=-1, keepdims=True), 1.0), 0.0)

    anchor_is_1 = (mag1 >= mag3)[..., None]
    a = np.where(anchor_is_1, n1, n3)
    # isotropic (both degenerate): any frame works
    a_bad = np.einsum("...i,...i->...", a, a) < 0.5
    a = np.where(a_bad[..., None], np.array([1.0, 0.0, 0.0]), a)
    b = np.where(anchor_is_1, n3, n1)
    b = b - np.einsum("...i,...i->...", a, b)[..., None] * a
    b_norm = np.linalg.norm(b, axis=-1, keepdims=True)
    b_bad = b_norm[..., 0] < 1e-6
    b = np.where(b_bad[..., None], _orthogonal_fallback(a), b / np.where(b_norm > 0, b_norm, 1.0))

    first = np.where(anchor_is_1, a, b)
    third = np.where(anchor_is_1, b, a)
    mid = np.cross(third, first)
    return lam, np.stack([first, mid, third], axis=-1)


def normalize_sign(v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Flip vectors so the first component of magnitude > tol is positive."""
    v = np.asarray(v, dtype=float)
    big = np.abs(v) > tol
    idx = np.argmax(big, axis=-1)
    lead = np.take_along_axis(v, idx[..., None], axis=-1)[..., 0]
    sign = np.where(lead < 0.0, -1.0, 1.0)
    return v * sign[..., None]


def principal_axis(q: np.ndarray) -> np.ndarray:
    """Unit eigenvector of the largest eigenvalue, sign-normalized."""
    _, vecs = eigen_frame(q)
    return normalize_sign(vecs[..., :, 0])


def is_physical(q: np.ndarray) -> np.ndarray:
    """True where eigenvalues lie strictly in (-1/3, 2/3).

    Checks positive definiteness of Q + I/3 and I/3 - Q/2 through leading
    principal minors; no eigensolve.
    """
    q = np.asarray(q, dtype=float)
    ok = None
    for sgn, shift in ((1.0, 1.0 / 3.0), (-0.5, 1.0 / 3.0)):
        a = sgn * q[..., 0] + shift
        b = sgn * q[..., 1] + shift
        f = sgn * (-q[..., 0] - q[..., 1]) + shift
        c, d, e = sgn * q[..., 2], sgn * q[..., 3], sgn * q[..., 4]
        m1 = a
        m2 = a * b - c * c
        m3 = a * (b * f - e * e) - c * (c * f - e * d) + d * (c * e - b * d)
        cur = (m1 > 0.0) & (m2 > 0.0) & (m3 > 0.0)
        ok = cur if ok is None else (ok & cur)
    return ok


def biaxiality(q: np.ndarray) -> np.ndarray:
    """beta(Q) = 1 - 6 tr(Q^3)^2 / tr(Q^2)^3, clamped to [0, 1].

    Zero on uniaxial tensors, one where an eigenvalue vanishes with the
    other two opposite.  Returns 0 when tr(Q^2) < 1e-14.
    """
    q = np.asarray(q, dtype=float)
    t2 = norm_sq(q)
    t3 = _trace_cubed(q)
    safe = np.where(t2 > 1e-14, t2, 1.0)
    beta = 1.0 - 6.0 * t3 * t3 / safe**3
    beta = np.clip(beta, 0.0, 1.0)
    return np.where(t2 > 1e-14, beta, 0.0)
