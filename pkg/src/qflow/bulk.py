"""Bulk free energy: entropy barrier minus quadratic ordering term.

f_b(Q) = q(Q) - (c02/2) |Q|^2.  Restricted to uniaxial tensors
Q = s (n n^T - I/3) this is a scalar function of s on (-1/2, 1) whose
critical points organize the phase behavior: below a threshold chi_star
the isotropic state s = 0 is the only critical point; between chi_star
and 27/2 two ordered states appear at positive s; above 27/2 the
isotropic state turns unstable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .entropy import q_value
from .tensor import norm_sq

CHI_DOUBLE_STAR = 13.5  # = 27/2, where f_b''(0) = 9 - 2 c02 / 3 changes sign

_S_LO, _S_HI = -0.5, 1.0


@dataclass(frozen=True)
class ModelParams:
    """Physical coefficients and discretization scalars.

    c02 weights the ordering term, c21/c22 the elastic terms.  Elastic
    positivity requires c21 > 0 and c21 + c22 > 0.  N is the number of
    grid cells per side of the square [0, L]^2, dt the time step.
    """

    c02: float
    c21: float
    c22: float
    N: int
    dt: float
    L: float = 1.0

    def __post_init__(self):
        if not self.c02 > 0:
            raise ValueError("c02 must be positive")
        if not self.c21 > 0:
            raise ValueError("c21 must be positive")
        if not self.c21 + self.c22 > 0:
            raise ValueError("c21 + c22 must be positive")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise ValueError("N must be a positive integer")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / self.N


def f_bulk(q: np.ndarray, c02: float) -> np.ndarray:
    """Bulk density q(Q) - (c02/2)|Q|^2; +inf where unphysical."""
    return q_value(q) - 0.5 * c02 * norm_sq(q)


def _qu_derivs(s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # entropy along the uniaxial path, eigenvalues (2s/3, -s/3, -s/3)
    v = (
        -np.log((1.0 + 2.0 * s) / 3.0)
        - 4.0 * np.log((1.0 - s) / 3.0)
        - 4.0 * np.log((2.0 + s) / 6.0)
    )
    d1 = -2.0 / (1.0 + 2.0 * s) + 4.0 / (1.0 - s) - 4.0 / (2.0 + s)
    d2 = 4.0 / (1.0 + 2.0 * s) ** 2 + 4.0 / (1.0 - s) ** 2 + 4.0 / (2.0 + s) ** 2
    return v, d1, d2


def uniaxial_energy(s, c02: float):
    """Value and first two s-derivatives of f_b on the uniaxial slice.

    Valid for s in (-1/2, 1); outside, value is +inf and derivatives nan.
    """
    s = np.asarray(s, dtype=float)
    inside = (s > _S_LO) & (s < _S_HI)
    ss = np.where(inside, s, 0.0)
    v, d1, d2 = _qu_derivs(ss)
    v = v - (c02 / 3.0) * ss * ss
    d1 = d1 - (2.0 * c02 / 3.0) * ss
    d2 = d2 - 2.0 * c02 / 3.0
    v = np.where(inside, v, np.inf)
    d1 = np.where(inside, d1, np.nan)
    d2 = np.where(inside, d2, np.nan)
    if v.ndim == 0:
        return float(v), float(d1), float(d2)
    return v, d1, d2


def _bisect(f, lo: float, hi: float, tol: float = 1e-14, maxit: int = 200) -> float:
    flo = f(lo)
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if hi - lo < tol:
            return mid
        if fm == 0.0:
            return mid
        if (flo < 0) == (fm < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class StationaryReport:
    """Critical points of the uniaxial bulk energy for one c02."""

    c02: float
    roots: tuple[float, ...]  # ascending order
    kinds: tuple[str, ...]  # 'min' / 'max' / 'degenerate' per root
    regime: str  # 'isotropic', 'metastable', 'ordered'

    @property
    def ordered_min(self) -> float:
        """The largest local minimum (the nematic branch when present)."""
        mins = [s for s, k in zip(self.roots, self.kinds) if k == "min"]
        return max(mins)


def stationary_points(c02: float, scan: int = 4000) -> StationaryReport:
    """All roots of d f_b / ds in (-1/2, 1), with stability and regime.

    Found by bracketing sign changes of the derivative on a fine scan and
    bisecting each bracket.
    """
    lo, hi = _S_LO + 1e-9, _S_HI - 1e-9
    grid = np.linspace(lo, hi, scan + 1)
    _, d1, _ = uniaxial_energy(grid, c02)
    roots: list[float] = []
    for i in range(scan):
        a, b = d1[i], d1[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif (a < 0) != (b < 0):
            f = lambda s: uniaxial_energy(s, c02)[1]
            roots.append(_bisect(f, float(grid[i]), float(grid[i + 1])))
    # s = 0 is always a critical point; snap roundoff-sized roots to it
    roots = [0.0 if abs(r) < 1e-10 else r for r in roots]
    dedup: list[float] = []
    for r in sorted(roots):
        if not dedup or r - dedup[-1] > 1e-9:
            dedup.append(r)
    kinds = []
    for r in dedup:
        d2 = uniaxial_energy(r, c02)[2]
        kinds.append("min" if d2 > 1e-9 else ("max" if d2 < -1e-9 else "degenerate"))
    if c02 > CHI_DOUBLE_STAR:
        regime = "ordered"
    elif c02 > chi_star():
        regime = "metastable"
    else:
        regime = "isotropic"
    return StationaryReport(c02, tuple(dedup), tuple(kinds), regime)


@lru_cache(maxsize=1)
def saddle_point() -> tuple[float, float]:
    """(chi_star, s_star): threshold c02 and its positive double root.

    A double root at s needs f' = f'' = 0, i.e. c02 = (3/2) q''(s) and
    q'(s) = s q''(s); the second condition is solved for s > 0 by
    bisection and the first then yields the threshold.
    """

    def psi(s: float) -> float:
        _, d1, d2 = _qu_derivs(np.asarray(s))
        return float(d1 - s * d2)

    grid = np.linspace(1e-4, 0.9, 2000)
    vals = [psi(s) for s in grid]
    bracket = None
    for i in range(len(grid) - 1):
        if (vals[i] < 0) != (vals[i + 1] < 0):
            bracket = (float(grid[i]), float(grid[i + 1]))
            break
    if bracket is None:  # pragma: no cover - the sign change exists
        raise RuntimeError("no double-root bracket found")
    s_star = _bisect(psi, *bracket)
    return float(1.5 * _qu_derivs(np.asarray(s_star))[2]), float(s_star)


def chi_star() -> float:
    """Smallest c02 at which d f_b / ds acquires a positive double root."""
    return saddle_point()[0]
