"""Grid fields, difference stencils, discrete energies, elastic force."""

import csv

import numpy as np
import pytest

from qflow import grid, tensor
from qflow.bulk import ModelParams
from helpers import random_feasible


def params(N=6, c21=6.0, c22=2.0, c02=20.0, dt=0.01, L=1.0):
    return ModelParams(c02=c02, c21=c21, c22=c22, N=N, dt=dt, L=L)


def zero_boundary(rng, N, trailing=()):
    u = rng.standard_normal((N + 1, N + 1) + trailing)
    u[0, :] = u[-1, :] = u[:, 0] = u[:, -1] = 0.0
    return u


def test_grid_nodes_and_spacing():
    g = grid.Grid2D(4, 2.0)
    assert g.h == 0.5
    x, y = g.nodes()
    assert x.shape == (5, 5)
    assert x[3, 1] == 1.5 and y[3, 1] == 0.5
    with pytest.raises(ValueError):
        grid.Grid2D(0)


def test_qfield_is_immutable():
    g = grid.Grid2D(3)
    f = grid.QField(g, np.zeros((4, 4, 5)))
    with pytest.raises(AttributeError):
        f.values = np.ones((4, 4, 5))
    with pytest.raises(ValueError):
        f.values[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        grid.QField(g, np.zeros((5, 5, 5)))


def test_with_interior_keeps_boundary_ring():
    rng = np.random.default_rng(0)
    g = grid.Grid2D(4)
    f = grid.QField(g, rng.standard_normal((5, 5, 5)))
    new = f.with_interior(np.zeros((3, 3, 5)))
    assert np.array_equal(new.values[0, :], f.values[0, :])
    assert np.array_equal(new.values[:, -1], f.values[:, -1])
    assert np.all(new.interior == 0.0)
    # the original is untouched
    assert not np.all(f.interior == 0.0)


def test_field_from_function_samples_nodes():
    g = grid.Grid2D(3)
    f = grid.field_from_function(
        g, lambda x, y: tensor.uniaxial(x * y, np.array([1.0, 0.0, 0.0]))
    )
    assert np.allclose(f.values[3, 3], tensor.uniaxial(np.asarray(1.0), [1, 0, 0]))
    assert np.allclose(f.values[0, :], 0.0)


def test_first_derivative_stencils_exact_on_bilinears():
    g = grid.Grid2D(5)
    x, y = g.nodes()
    u = 2.0 + 3.0 * x - 1.5 * y + 4.0 * x * y
    xc = 0.5 * (x[:-1, :-1] + x[1:, 1:])
    yc = 0.5 * (y[:-1, :-1] + y[1:, 1:])
    assert np.allclose(grid.d1_cell(u, g.h), 3.0 + 4.0 * yc, atol=1e-13)
    assert np.allclose(grid.d2_cell(u, g.h), -1.5 + 4.0 * xc, atol=1e-13)


def test_second_derivative_stencils_exact_on_low_degree_polynomials():
    g = grid.Grid2D(6)
    x, y = g.nodes()
    xi, yi = x[1:-1, 1:-1], y[1:-1, 1:-1]
    cases = [
        (np.ones_like(x), 0.0, 0.0, 0.0),
        (x, 0.0, 0.0, 0.0),
        (y, 0.0, 0.0, 0.0),
        (x * x, 2.0, 0.0, 0.0),
        (x * y, 0.0, 0.0, 1.0),
        (y * y, 0.0, 2.0, 0.0),
        (x * x * y, 2.0 * yi, 0.0, 2.0 * xi),
        (x * y * y, 0.0, 2.0 * xi, 2.0 * yi),
    ]
    for u, dxx, dyy, dxy in cases:
        assert np.allclose(grid.d11_node(u, g.h), dxx, atol=1e-12)
        assert np.allclose(grid.d22_node(u, g.h), dyy, atol=1e-12)
        assert np.allclose(grid.d12_node(u, g.h), dxy, atol=1e-12)


def test_second_derivative_truncation_is_second_order():
    errs = []
    for N in (16, 32, 64):
        g = grid.Grid2D(N)
        x, y = g.nodes()
        u = np.sin(2 * np.pi * x) * np.cos(np.pi * y)
        exact = -(2 * np.pi) ** 2 * u[1:-1, 1:-1]
        errs.append(np.max(np.abs(grid.d11_node(u, g.h) - exact)))
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert all(3.4 < r < 4.6 for r in ratios)


def test_summation_by_parts_identities():
    # the node-centered second differences are the exact negative adjoints
    # of the cell-centered first differences on zero-boundary data
    rng = np.random.default_rng(1)
    for trial in range(100):
        N = int(rng.integers(3, 13))
        h = 1.0 / N
        u = zero_boundary(rng, N)
        v = zero_boundary(rng, N)

        lhs = -(u[1:-1, 1:-1] * grid.d11_node(v, h)).sum()
        rhs = (grid.d1_cell(u, h) * grid.d1_cell(v, h)).sum()
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

        lhs = -(u[1:-1, 1:-1] * grid.d22_node(v, h)).sum()
        rhs = (grid.d2_cell(u, h) * grid.d2_cell(v, h)).sum()
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

        lhs = -(u[1:-1, 1:-1] * grid.d12_node(v, h)).sum()
        r1 = (grid.d1_cell(u, h) * grid.d2_cell(v, h)).sum()
        r2 = (grid.d2_cell(u, h) * grid.d1_cell(v, h)).sum()
        assert abs(lhs - r1) <= 1e-12 * max(1.0, abs(r1))
        assert abs(lhs - r2) <= 1e-12 * max(1.0, abs(r2))


def test_elastic_energy_of_uniform_field_is_zero():
    p = params()
    g = grid.Grid2D(p.N)
    q = tensor.uniaxial(np.asarray(0.5), [1.0, 0.0, 0.0])
    f = grid.QField(g, np.broadcast_to(q, (p.N + 1, p.N + 1, 5)).copy())
    assert grid.discrete_elastic_energy(f, p) == 0.0


def test_elastic_force_is_gradient_of_elastic_energy():
    rng = np.random.default_rng(2)
    p = params(N=5, c21=1.3, c22=0.7)
    g = grid.Grid2D(p.N)
    vals = 0.1 * rng.standard_normal((p.N + 1, p.N + 1, 5))
    eps = 1e-6

    force = grid.l_h(vals, p, g.h)
    chart_grad = force @ tensor.METRIC  # METRIC is symmetric
    for l in range(1, p.N):
        for m in range(1, p.N):
            for a in range(5):
                vp = vals.copy()
                vp[l, m, a] += eps
                vm = vals.copy()
                vm[l, m, a] -= eps
                fd = (
                    grid.elastic_energy_values(vp, p, g.h)
                    - grid.elastic_energy_values(vm, p, g.h)
                ) / (2 * eps)
                got = g.h**2 * chart_grad[l - 1, m - 1, a]
                assert abs(got - fd) <= 1e-6 * max(1.0, abs(fd))


def test_elastic_force_divergence_coupling_term():
    # c22 = 0 reduces the force to the plain (projected) Laplacian part
    rng = np.random.default_rng(3)
    p0 = params(N=6, c21=2.0, c22=0.0)
    vals = 0.1 * rng.standard_normal((7, 7, 5))
    h = 1.0 / 6
    lap = grid.d11_node(vals, h) + grid.d22_node(vals, h)
    assert np.allclose(grid.l_h(vals, p0, h), -2.0 * lap, atol=1e-13)


def test_elastic_quadratic_form_positive_for_negative_coupling():
    # c21 + c22 > 0 keeps the interior quadratic form positive definite
    # even when the divergence coupling is negative
    rng = np.random.default_rng(4)
    p = params(N=6, c21=0.04, c22=-0.039)
    base = 0.05 * rng.standard_normal((7, 7, 5))
    e0 = grid.elastic_energy_values(base, p, 1.0 / 6)
    for _ in range(50):
        v = zero_boundary(rng, 6, trailing=(5,))
        ep = grid.elastic_energy_values(base + v, p, 1.0 / 6)
        em = grid.elastic_energy_values(base - v, p, 1.0 / 6)
        quad = 0.5 * (ep + em) - e0
        assert quad > 0.0


def test_bulk_energy_infinite_for_unphysical_interior():
    p = params(N=4)
    g = grid.Grid2D(4)
    vals = np.zeros((5, 5, 5))
    f = grid.QField(g, vals)
    assert np.isfinite(grid.discrete_bulk_energy(f, p))
    vals2 = vals.copy()
    vals2[2, 2] = tensor.uniaxial(np.asarray(1.5), [0.0, 0.0, 1.0])
    assert grid.discrete_bulk_energy(grid.QField(g, vals2), p) == np.inf


def test_error_norm_restricts_nested_grids():
    fn = lambda x, y: tensor.uniaxial(
        0.1 + 0.2 * np.sin(np.pi * x) * np.sin(np.pi * y),
        np.array([1.0, 0.0, 0.0]),
    )
    coarse = grid.field_from_function(grid.Grid2D(4), fn)
    fine = grid.field_from_function(grid.Grid2D(8), fn)
    assert grid.error_norm(coarse, fine) < 1e-14
    assert grid.error_norm(fine, coarse) < 1e-14

    shifted = grid.QField(coarse.grid, coarse.values + 0.01)
    expected = np.sqrt(0.25**2 * tensor.norm_sq(np.full(5, 0.01)) * 9)
    assert abs(grid.error_norm(shifted, fine) - expected) < 1e-12

    with pytest.raises(ValueError):
        grid.error_norm(coarse, grid.field_from_function(grid.Grid2D(6), fn))
    with pytest.raises(ValueError):
        grid.error_norm(coarse, grid.field_from_function(grid.Grid2D(8, 2.0), fn))


def test_snapshot_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    g = grid.Grid2D(3)
    f = grid.QField(g, random_feasible(rng, (4, 4)))
    path = tmp_path / "snap.csv"
    grid.write_snapshot(f, path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 16
    comp = ("Q11", "Q22", "Q12", "Q13", "Q23")
    for row in rows:
        l, m = int(row["l"]), int(row["m"])
        # repr round trip is exact
        assert all(float(row[c]) == f.values[l, m, k] for k, c in enumerate(comp))
        lam = tensor.eigenvalues(f.values[l, m])
        assert float(row["lambda_max"]) == lam[0]
        assert float(row["lambda_min"]) == lam[2]
        n = np.array([float(row["n1"]), float(row["n2"]), float(row["n3"])])
        assert abs(np.linalg.norm(n) - 1.0) < 1e-9
