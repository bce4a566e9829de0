"""Maximum-entropy (Bingham) closure on the sphere, as a reference point.

For a prescribed second-moment tensor Q (diagonal here, without loss of
generality), the density rho(m) = exp(B : (m m^T - I/3)) / Z with
diagonal B reproduces Q, and its entropy is

    psi(Q) = B : Q - ln Z.

psi is the function the barrier q(Q) stands in for: both are convex,
both diverge logarithmically as an eigenvalue of Q approaches -1/3 or
2/3.  This module evaluates Z and the moments by sphere quadrature
(Gauss-Legendre in cos(theta) times a uniform periodic rule in phi) and
inverts the moment map with a damped Newton iteration in the two free
diagonal entries of B.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LOG_4PI = np.log(4.0 * np.pi)


class NoConvergence(RuntimeError):
    """Moment inversion failed (eigenvalues too close to the boundary)."""


@lru_cache(maxsize=8)
def _quad(n_theta: int, n_phi: int):
    """Quadrature nodes: squared direction components and weights."""
    t, wt = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * np.pi / n_phi
    sin2 = 1.0 - t * t
    msq = np.empty((n_theta, n_phi, 3))
    msq[..., 0] = sin2[:, None] * np.cos(phi)[None, :] ** 2
    msq[..., 1] = sin2[:, None] * np.sin(phi)[None, :] ** 2
    msq[..., 2] = (t * t)[:, None]
    w = wt[:, None] * wphi * np.ones_like(phi)[None, :]
    return msq, w


def _log_partition_and_moments(mu: np.ndarray, n_theta: int, n_phi: int):
    """log Z, first moments M_i = <m_i^2 - 1/3>, and their covariance."""
    msq, w = _quad(n_theta, n_phi)
    g = msq @ mu - np.sum(mu) / 3.0
    gmax = g.max()
    e = np.exp(g - gmax)
    mass = float((w * e).sum())
    log_z = gmax + np.log(mass)
    dev = msq - 1.0 / 3.0
    we = (w * e) / mass
    m = np.einsum("tp,tpi->i", we, dev)
    c = np.einsum("tp,tpi,tpj->ij", we, dev, dev) - np.outer(m, m)
    return log_z, m, c


def partition_and_moments(
    mu, n_theta: int = 64, n_phi: int = 128
) -> tuple[float, np.ndarray]:
    """Partition function and moments <m_i^2 - 1/3> for diagonal exponent mu.

    Internally rescaled by the peak exponent, so the sum never overflows;
    Z itself is finite as a double for |mu| up to about 700.
    """
    mu = np.asarray(mu, dtype=float)
    log_z, m, _ = _log_partition_and_moments(mu, n_theta, n_phi)
    return float(np.exp(log_z)), m


@dataclass(frozen=True)
class BinghamState:
    """Solved closure: exponent mu (traceless diagonal), log Z, moments."""

    mu: np.ndarray
    log_z: float
    moments: np.ndarray

    @property
    def z(self) -> float:
        return float(np.exp(self.log_z))

    @property
    def psi(self) -> float:
        return float(self.mu @ self.moments - self.log_z)


def solve_b(
    lam,
    n_theta: int = 64,
    n_phi: int = 128,
    tol: float = 1e-10,
    max_iters: int = 200,
    mu0=None,
) -> BinghamState:
    """Invert the moment map: find diagonal traceless mu with moments lam.

    ``lam`` are the target eigenvalues of Q (summing to zero, each inside
    (-1/3, 2/3)).  Solved by a damped Newton iteration on the two free
    components; the axes are permuted internally so the largest target
    sits on the polar axis, where the Gauss-Legendre nodes cluster.
    The returned mu is ordered like lam.  Raises NoConvergence when the
    iteration stalls, which happens for eigenvalues within ~1e-6 of the
    physical boundary at reachable quadrature orders.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (3,):
        raise ValueError("lam must have shape (3,)")
    if abs(lam.sum()) > 1e-9:
        raise ValueError("eigenvalues must sum to zero")
    if np.any(lam <= -1.0 / 3.0) or np.any(lam >= 2.0 / 3.0):
        raise ValueError("eigenvalues outside the physical range")

    perm = np.argsort(lam)  # largest target on the polar axis
    target = lam[perm]
    mu = np.zeros(3) if mu0 is None else np.asarray(mu0, dtype=float)[perm]
    mu = mu - mu.sum() / 3.0

    log_z, m, c = _log_partition_and_moments(mu, n_theta, n_phi)
    res = m[:2] - target[:2]
    for _ in range(max_iters):
        if np.max(np.abs(res)) <= tol:
            inv = np.empty(3, dtype=int)
            inv[perm] = np.arange(3)
            return BinghamState(mu=mu[inv].copy(), log_z=float(log_z), moments=m[inv].copy())
        # reduce to the free components: d m_i / d mu_j - d m_i / d mu_3
        jac = c[:2, :2] - c[:2, 2][:, None]
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular moment Jacobian") from exc
        scale = 1.0
        best = None
        for _ in range(40):
            trial = mu.copy()
            trial[:2] += scale * step
            trial[2] -= scale * step.sum()
            lz_t, m_t, c_t = _log_partition_and_moments(trial, n_theta, n_phi)
            res_t = m_t[:2] - target[:2]
            if np.linalg.norm(res_t) < np.linalg.norm(res):
                best = (trial, lz_t, m_t, c_t, res_t)
                break
            scale *= 0.5
        if best is None:
            raise NoConvergence("line search stalled")
        mu, log_z, m, c, res = best
    raise NoConvergence(f"no convergence in {max_iters} iterations")


def psi(lam, n_theta: int = 64, n_phi: int = 128, mu0=None) -> float:
    """Entropy B : Q - ln Z of the moment-matched Bingham density.

    psi(0) = -ln(4 pi); psi diverges like -C ln(lam_min + 1/3) at the
    physical boundary, mirroring the barrier q up to a constant factor.
    """
    return solve_b(lam, n_theta=n_theta, n_phi=n_phi, mu0=mu0).psi
