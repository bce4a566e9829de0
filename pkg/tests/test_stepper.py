"""Implicit steps: convex-solve correctness, energy laws, bookkeeping."""

import numpy as np
import pytest
import scipy.optimize

from qflow import grid, stepper, tensor
from qflow.bulk import ModelParams
from qflow.grid import Grid2D, QField
from qflow.stepper import (
    NewtonConfig,
    Stepper,
    energy_dissipation_ok,
    objective_first,
    objective_second,
    residual_first,
    residual_second,
    run,
    step_first,
    step_second,
)
from helpers import random_feasible


def params(N=5, dt=0.01, c02=20.0, c21=6.0, c22=2.0):
    return ModelParams(c02=c02, c21=c21, c22=c22, N=N, dt=dt)


def random_field(rng, N, margin=0.0):
    return QField(Grid2D(N), random_feasible(rng, (N + 1, N + 1), margin=margin))


def uniform_minimizer_field(N, c02, n=(1.0, 0.0, 0.0)):
    from qflow.bulk import stationary_points

    s = stationary_points(c02).ordered_min
    q = tensor.uniaxial(np.asarray(s), np.asarray(n))
    return QField(Grid2D(N), np.broadcast_to(q, (N + 1, N + 1, 5)).copy())


def test_uniform_bulk_minimizer_is_a_fixed_point():
    p = params(N=6, dt=0.05)
    f = uniform_minimizer_field(6, p.c02)
    assert np.max(np.abs(residual_first(f, f, p))) < 1e-10
    assert np.max(np.abs(residual_second(f, f, f, p))) < 1e-10

    new, diag = step_first(f, p)
    assert grid.error_norm(new, f) < 1e-10
    assert diag.increment_norm < 1e-10
    assert diag.newton_iters == 1  # converged at entry

    new2, diag2 = step_second(f, f, p)
    assert grid.error_norm(new2, f) < 1e-10
    assert diag2.increment_norm < 1e-10


def test_two_starts_reach_the_same_minimizer():
    rng = np.random.default_rng(0)
    p = params(N=5, dt=0.1)
    q_old = random_field(rng, 5, margin=0.3)
    iso_start = q_old.with_interior(np.zeros((4, 4, 5)))

    a, _ = step_first(q_old, p)
    b, _ = step_first(q_old, p, q_init=iso_start)
    assert grid.error_norm(a, b) < 1e-8

    q_older = random_field(rng, 5, margin=0.5)
    a2, _ = step_second(q_old, q_older, p)
    b2, _ = step_second(q_old, q_older, p, q_init=iso_start)
    assert grid.error_norm(a2, b2) < 1e-8


def test_first_order_step_never_raises_energy():
    # unconditional dissipation: arbitrary feasible states, tiny to huge steps
    rng = np.random.default_rng(1)
    for trial in range(20):
        f = random_field(rng, 5)
        e0 = grid.discrete_total_energy(f, params(N=5, dt=1.0))
        for dt in (1e-3, 1e-1, 10.0):
            p = params(N=5, dt=dt)
            new, diag = step_first(f, p)
            assert diag.energy <= e0 + 1e-9
            assert new.is_physical()


def test_bdf2_modified_energy_never_increases():
    rng = np.random.default_rng(2)
    p = params(N=6, dt=0.05)  # c02 dt = 1 <= 2
    f = random_field(rng, 6, margin=0.2)
    res = run(f, p, scheme="second", t_final=0.5)
    assert energy_dissipation_ok(res, "second", p)

    w = (1.0 + 2.0 * p.c02 * p.dt) / (4.0 * p.dt)
    e = res.energies
    inc = np.array([d.increment_norm for d in res.diagnostics])
    m = e[1:] + w * inc[1:] ** 2
    assert np.all(np.diff(m) <= 1e-9)
    assert e[1] <= e[0] + 1e-9  # startup step obeys the plain law


def test_energy_dissipation_check_distinguishes_schemes():
    def fake(energies, increments):
        diags = [
            stepper.StepDiagnostics(step=i, t=0.0, energy=e, newton_iters=1,
                                    max_eig=0.0, min_eig=0.0, increment_norm=c)
            for i, (e, c) in enumerate(zip(energies, increments))
        ]
        final = QField(Grid2D(2), np.zeros((3, 3, 5)))
        return stepper.RunResult(final=final, diagnostics=diags)

    p = params(N=2, dt=0.01)
    rising = fake([1.0, 1.1, 1.2], [0.0, 0.1, 0.1])
    assert not energy_dissipation_ok(rising, "first", p)
    falling = fake([1.0, 0.9, 0.8], [0.0, 0.1, 0.1])
    assert energy_dissipation_ok(falling, "first", p)

    # raw uptick with a shrinking increment: allowed for BDF2 only
    w = (1.0 + 2.0 * p.c02 * p.dt) / (4.0 * p.dt)
    up = fake([1.0, 0.5, 0.5 + 0.5 * w * 0.01], [0.0, 0.2, 0.1])
    assert not energy_dissipation_ok(up, "first", p)
    assert energy_dissipation_ok(up, "second", p)

    # a startup step that raises the raw energy fails either way
    bad_start = fake([1.0, 1.5, 1.0], [0.0, 0.1, 0.0])
    assert not energy_dissipation_ok(bad_start, "second", p)
    with pytest.raises(ValueError):
        energy_dissipation_ok(falling, "zzz", p)


def test_step_matches_brute_force_minimizer():
    # one interior node: minimize the five-variable objective directly
    rng = np.random.default_rng(3)
    p = params(N=2, dt=0.02, c21=1.0, c22=0.5)
    q_old = random_field(rng, 2, margin=0.3)

    def obj(c):
        trial = q_old.with_interior(c.reshape(1, 1, 5))
        return objective_first(trial, q_old, p)

    best = None
    for start in (np.zeros(5), q_old.interior.ravel().copy()):
        r = scipy.optimize.minimize(
            obj, start, method="Nelder-Mead",
            options=dict(xatol=1e-12, fatol=1e-15, maxiter=50_000, maxfev=50_000),
        )
        if best is None or r.fun < best.fun:
            best = r

    new, _ = step_first(q_old, p)
    assert np.max(np.abs(new.interior.ravel() - best.x)) < 1e-7
    assert obj(new.interior.ravel()) <= best.fun + 1e-12


def test_residuals_are_gradients_of_the_objectives():
    rng = np.random.default_rng(4)
    p = params(N=4, dt=0.03, c21=1.2, c22=-0.5)
    q_old = random_field(rng, 4, margin=0.3)
    q_older = random_field(rng, 4, margin=0.3)
    q_new = random_field(rng, 4, margin=0.3)
    h = q_new.grid.h
    eps = 1e-6

    for residual, objective in (
        (lambda f: residual_first(f, q_old, p),
         lambda f: objective_first(f, q_old, p)),
        (lambda f: residual_second(f, q_old, q_older, p),
         lambda f: objective_second(f, q_old, q_older, p)),
    ):
        chart_grad = h * h * (residual(q_new) @ tensor.METRIC)
        for l in range(3):
            for m in range(3):
                for a in range(5):
                    bump = np.zeros((3, 3, 5))
                    bump[l, m, a] = eps
                    fd = (
                        objective(q_new.with_interior(q_new.interior + bump))
                        - objective(q_new.with_interior(q_new.interior - bump))
                    ) / (2 * eps)
                    assert abs(chart_grad[l, m, a] - fd) <= 1e-6 * max(1.0, abs(fd))


def test_every_step_stays_physical():
    rng = np.random.default_rng(5)
    p = params(N=5, dt=0.05, c02=100.0)  # strong ordering pushes at the edge
    f = random_field(rng, 5)
    res = run(f, p, scheme="second", t_final=0.5)
    for d in res.diagnostics:
        assert d.max_eig < 2.0 / 3.0 and d.min_eig > -1.0 / 3.0
    assert res.final.is_physical()


def test_run_bookkeeping_and_snapshots(tmp_path):
    rng = np.random.default_rng(6)
    p = params(N=4, dt=0.01)
    f = random_field(rng, 4, margin=0.3)
    out = tmp_path / "run"
    res = run(f, p, scheme="first", t_final=0.05, snapshot_every=2, out_dir=str(out))
    assert len(res.diagnostics) == 6
    d0 = res.diagnostics[0]
    assert d0.newton_iters == 0 and d0.t == 0.0 and d0.increment_norm == 0.0
    assert np.allclose([d.t for d in res.diagnostics], np.arange(6) * 0.01)
    names = sorted(q.name for q in out.glob("snapshot_*.csv"))
    assert names == ["snapshot_000000.csv", "snapshot_000002.csv",
                     "snapshot_000004.csv", "snapshot_000005.csv"]
    lines = (out / "diagnostics.csv").read_text().strip().split("\n")
    assert lines[0] == stepper.DIAG_COLUMNS
    assert len(lines) == 7


def test_run_stops_at_steady_state():
    p = params(N=4, dt=0.05)
    f = uniform_minimizer_field(4, p.c02)
    # tiny interior perturbation decays quickly to the uniform state
    pert = f.interior.copy()
    pert[..., 0] += 1e-4
    res = run(f.with_interior(pert), p, scheme="first", t_final=50.0,
              steady_tol=1e-8)
    assert res.steady
    assert res.diagnostics[-1].t < 50.0
    assert grid.error_norm(res.final, f) < 1e-6


def test_run_input_validation():
    p = params(N=3, dt=0.03)
    f = uniform_minimizer_field(3, p.c02)
    with pytest.raises(ValueError):
        run(f, p, scheme="zzz", t_final=0.03)
    with pytest.raises(ValueError):
        run(f, p, scheme="first", t_final=0.05)  # not a multiple of dt
    bad = QField(f.grid, 10.0 * np.ones((4, 4, 5)))
    with pytest.raises(ValueError):
        run(bad, p, scheme="first", t_final=0.03)
    with pytest.raises(ValueError):
        Stepper(Grid2D(4), p)  # grid does not match params


def test_newton_iteration_cap_is_enforced():
    rng = np.random.default_rng(7)
    p = params(N=4, dt=10.0)
    f = random_field(rng, 4)
    with pytest.raises(stepper.MaxItersExceeded):
        step_first(f, p, newton=NewtonConfig(max_iters=1))


def test_newton_counts_are_reported():
    rng = np.random.default_rng(8)
    p = params(N=4, dt=0.05)
    f = random_field(rng, 4, margin=0.3)
    _, diag = step_first(f, p)
    assert diag.newton_iters >= 2  # a genuine solve from a far start
    _, diag2 = step_first(f, p, newton=NewtonConfig(tol_grad=1e-4))
    assert diag2.newton_iters <= diag.newton_iters


def test_diagnostics_distance_properties():
    d = stepper.StepDiagnostics(step=1, t=0.1, energy=0.0, newton_iters=1,
                                max_eig=0.5, min_eig=-0.25, increment_norm=0.0)
    assert abs(d.dist_to_upper - (2.0 / 3.0 - 0.5)) < 1e-15
    assert abs(d.dist_to_lower - (-0.25 + 1.0 / 3.0)) < 1e-15
