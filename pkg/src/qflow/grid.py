"""Square-grid discretization: stencils, energies, and the elastic force.

Nodes (l, m), l, m = 0..N cover [0, L]^2 with spacing h = L/N; arrays are
indexed ``[l, m, ...]``.  First derivatives live on cell centers (average
of the two node differences along each cell edge pair); second
derivatives live on interior nodes and are built so that summation by
parts holds exactly against the cell-centered products: for u vanishing
on the boundary,

    -sum_P u D11 v = sum_cells (D1 u)(D1 v),
    -sum_P u D12 v = sum_cells (D2 u)(D1 v) = sum_cells (D1 u)(D2 v).

That identity is what makes the discrete elastic force ``l_h`` the exact
gradient of the discrete elastic energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor
from .bulk import ModelParams, f_bulk


@dataclass(frozen=True)
class Grid2D:
    """Uniform (N+1) x (N+1) node grid on [0, L]^2."""

    N: int
    L: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise ValueError("N must be a positive integer")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / self.N

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays x[l, m], y[l, m] over all nodes."""
        c = np.linspace(0.0, self.L, self.N + 1)
        return np.meshgrid(c, c, indexing="ij")


class QField:
    """Tensor field on a grid: values[l, m] is a 5-component tensor.

    Value semantics: the array is frozen at construction, and stepping
    produces new fields.  The boundary ring carries the Dirichlet data
    and is never modified.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid2D, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=float)
        if values.shape != (grid.N + 1, grid.N + 1, 5):
            raise ValueError(
                f"expected shape {(grid.N + 1, grid.N + 1, 5)}, got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("QField is immutable")

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def with_interior(self, interior: np.ndarray) -> "QField":
        """New field with the same boundary ring and replaced interior."""
        vals = self.values.copy()
        vals[1:-1, 1:-1] = interior
        return QField(self.grid, vals)

    def is_physical(self) -> bool:
        return bool(np.all(tensor.is_physical(self.values)))


def field_from_function(grid: Grid2D, fn) -> QField:
    """Sample fn(x, y) -> (..., 5) on all nodes; fn must broadcast."""
    x, y = grid.nodes()
    return QField(grid, np.asarray(fn(x, y), dtype=float))


# -- stencils ---------------------------------------------------------------
# All operators accept arrays with leading (node, node) axes and arbitrary
# trailing axes, so they apply per tensor component for free.


def d1_cell(u: np.ndarray, h: float) -> np.ndarray:
    """x-derivative on cell centers, shape (N, N, ...)."""
    return (u[1:, :-1] + u[1:, 1:] - u[:-1, :-1] - u[:-1, 1:]) / (2.0 * h)


def d2_cell(u: np.ndarray, h: float) -> np.ndarray:
    """y-derivative on cell centers, shape (N, N, ...)."""
    return (u[:-1, 1:] + u[1:, 1:] - u[:-1, :-1] - u[1:, :-1]) / (2.0 * h)


def d11_node(v: np.ndarray, h: float) -> np.ndarray:
    """Second x-derivative on interior nodes, adjoint to d1_cell pairs."""
    c = v[1:-1, 1:-1]
    return (
        -c
        - 0.5 * (v[1:-1, 2:] + v[1:-1, :-2])
        + 0.5 * (v[2:, 1:-1] + v[:-2, 1:-1])
        + 0.25 * (v[2:, 2:] + v[2:, :-2] + v[:-2, 2:] + v[:-2, :-2])
    ) / (h * h)


def d22_node(v: np.ndarray, h: float) -> np.ndarray:
    """Second y-derivative on interior nodes."""
    c = v[1:-1, 1:-1]
    return (
        -c
        - 0.5 * (v[2:, 1:-1] + v[:-2, 1:-1])
        + 0.5 * (v[1:-1, 2:] + v[1:-1, :-2])
        + 0.25 * (v[2:, 2:] + v[2:, :-2] + v[:-2, 2:] + v[:-2, :-2])
    ) / (h * h)


def d12_node(v: np.ndarray, h: float) -> np.ndarray:
    """Mixed derivative on interior nodes (cross stencil)."""
    return (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4.0 * h * h)


# -- energies and forces ----------------------------------------------------


def _cell_gradients(values: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    return d1_cell(values, h), d2_cell(values, h)


def _divergence(d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """Rows of (D_i Q_ij)_j for i in {1,2}: a 3-vector per cell."""
    div = np.empty(d1.shape[:-1] + (3,))
    div[..., 0] = d1[..., 0] + d2[..., 2]  # D1 Q11 + D2 Q21
    div[..., 1] = d1[..., 2] + d2[..., 1]  # D1 Q12 + D2 Q22
    div[..., 2] = d1[..., 3] + d2[..., 4]  # D1 Q13 + D2 Q23
    return div


def elastic_energy_values(values: np.ndarray, p: ModelParams, h: float) -> float:
    """Elastic energy from a raw (N+1, N+1, 5) array."""
    d1, d2 = _cell_gradients(values, h)
    dens = p.c21 * (tensor.norm_sq(d1) + tensor.norm_sq(d2))
    div = _divergence(d1, d2)
    dens = dens + p.c22 * np.einsum("...j,...j->...", div, div)
    return 0.5 * h * h * float(dens.sum())


def discrete_elastic_energy(field: QField, p: ModelParams) -> float:
    """(h^2/2) sum over cells of c21 |grad Q|^2 + c22 |div Q|^2."""
    return elastic_energy_values(field.values, p, field.grid.h)


def discrete_bulk_energy(field: QField, p: ModelParams) -> float:
    """h^2 sum over interior nodes of f_b; +inf if any node unphysical."""
    h = field.grid.h
    vals = f_bulk(field.interior, p.c02)
    return h * h * float(vals.sum())


def discrete_total_energy(field: QField, p: ModelParams) -> float:
    return discrete_bulk_energy(field, p) + discrete_elastic_energy(field, p)


def l_h(values: np.ndarray, p: ModelParams, h: float) -> np.ndarray:
    """Elastic force P(-c21 D_kk Q - c22 D_ik Q_kj) on interior nodes.

    ``values`` is the full (N+1, N+1, 5) array including the boundary
    ring; the result has shape (N-1, N-1, 5) and is the exact gradient of
    ``discrete_elastic_energy`` with respect to interior node components
    (up to the h^2 chart metric factors handled by the caller).
    """
    q = values
    lap = d11_node(q, h) + d22_node(q, h)
    out = -p.c21 * lap
    if p.c22 != 0.0:
        # A_ij = D_ik Q_kj for i in {1,2}, j in {1,2,3}
        d11q = d11_node(q, h)
        d22q = d22_node(q, h)
        d12q = d12_node(q, h)
        a11 = d11q[..., 0] + d12q[..., 2]
        a12 = d11q[..., 2] + d12q[..., 1]
        a13 = d11q[..., 3] + d12q[..., 4]
        a21 = d12q[..., 0] + d22q[..., 2]
        a22 = d12q[..., 2] + d22q[..., 1]
        a23 = d12q[..., 3] + d22q[..., 4]
        # project the matrix with rows (a1*; a2*; 0)
        tr3 = (a11 + a22) / 3.0
        corr = np.empty_like(out)
        corr[..., 0] = a11 - tr3
        corr[..., 1] = a22 - tr3
        corr[..., 2] = 0.5 * (a12 + a21)
        corr[..., 3] = 0.5 * a13
        corr[..., 4] = 0.5 * a23
        out = out - p.c22 * corr
    return out


def error_norm(qa: QField, qb: QField) -> float:
    """Weighted l2 distance sqrt(h^2 sum_P |Qa - Qb|^2) over interior nodes.

    Grids may differ dyadically: the finer field is restricted to the
    coarser one's nodes by subsampling.  Incompatible grids raise
    ValueError.
    """
    a, b = qa, qb
    if a.grid.L != b.grid.L:
        raise ValueError("grids cover different domains")
    if a.grid.N > b.grid.N:
        a, b = b, a
    if b.grid.N % a.grid.N != 0:
        raise ValueError("grid sizes are not nested")
    k = b.grid.N // a.grid.N
    fine = b.values[::k, ::k]
    diff = a.values[1:-1, 1:-1] - fine[1:-1, 1:-1]
    h = a.grid.h
    return float(np.sqrt(h * h * tensor.norm_sq(diff).sum()))


SNAPSHOT_COLUMNS = (
    "l,m,Q11,Q22,Q12,Q13,Q23,lambda_max,lambda_min,biaxiality,n1,n2,n3"
)


def write_snapshot(field: QField, path) -> None:
    """Dump nodes row-major as CSV with eigen data and director columns."""
    vals = field.values
    lam = tensor.eigenvalues(vals)
    beta = tensor.biaxiality(vals)
    n = tensor.principal_axis(vals)
    npts = vals.shape[0]
    with open(path, "w", newline="") as fh:
        fh.write(SNAPSHOT_COLUMNS + "\n")
        for l in range(npts):
            for m in range(npts):
                row = [str(l), str(m)]
                row += [repr(float(v)) for v in vals[l, m]]
                row += [repr(float(lam[l, m, 0])), repr(float(lam[l, m, 2]))]
                row.append(repr(float(beta[l, m])))
                row += [repr(float(v)) for v in n[l, m]]
                fh.write(",".join(row) + "\n")
