"""Configured experiments: runs, accuracy ladders, sweeps, comparisons.

Configuration is TOML; the package ships presets (see ``qflow/presets``)
for the standard experiments: a time/space accuracy study against a fine
reference, a strongly ordered square well developing order-reconstruction
walls, and an elastic-coefficient sweep of the diagonally anchored well.
Outputs are CSV files (deterministic, byte-stable for a fixed config and
seed) plus SVG plots for convenience.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field as dfield, replace

import numpy as np
import tomli

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "qflow"
import matplotlib.pyplot as plt

from . import tensor
from .bingham import solve_b
from .bulk import ModelParams, stationary_points, uniaxial_energy
from .grid import Grid2D, QField, error_norm
from .stepper import NewtonConfig, RunResult, energy_dissipation_ok, run


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    scheme: str = "first"
    t_final: float = 1.0
    snapshot_every: int = 0
    steady_tol: float = 0.0
    initial: dict = dfield(default_factory=dict)
    boundary: dict = dfield(default_factory=dict)
    newton: NewtonConfig = NewtonConfig()
    seed: int = 0
    label: str = ""
    accuracy: dict | None = None
    sweep: dict | None = None
    bingham: dict | None = None


def preset_path(name: str) -> str:
    """Filesystem path of a shipped preset (name without extension)."""
    from importlib.resources import files

    p = files("qflow").joinpath("presets", f"{name}.toml")
    return str(p)


def load_config(source, seed: int | None = None) -> RunConfig:
    """Parse a TOML config from a path, preset name, or dict."""
    if isinstance(source, dict):
        raw = source
    else:
        path = str(source)
        if not os.path.exists(path) and os.path.sep not in path:
            candidate = preset_path(path.removesuffix(".toml"))
            if os.path.exists(candidate):
                path = candidate
        try:
            with open(path, "rb") as fh:
                raw = tomli.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {source}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return _config_from_dict(raw, seed)


def _config_from_dict(raw: dict, seed: int | None) -> RunConfig:
    try:
        pd = dict(raw["params"])
        params = ModelParams(
            c02=float(pd["c02"]),
            c21=float(pd["c21"]),
            c22=float(pd["c22"]),
            N=int(pd["N"]),
            dt=float(pd["dt"]),
            L=float(pd.get("L", 1.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing required params key: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad params section: {exc}") from exc

    scheme = raw.get("scheme", "first")
    if scheme not in ("first", "second"):
        raise ConfigError(f"scheme must be 'first' or 'second', got {scheme!r}")
    nw = raw.get("newton", {})
    try:
        newton = NewtonConfig(
            tol_grad=float(nw.get("tol_grad", 1e-10)),
            max_iters=int(nw.get("max_iters", 50)),
            max_halvings=int(nw.get("max_halvings", 60)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad newton section: {exc}") from exc

    initial = dict(raw.get("initial", {}))
    boundary = dict(raw.get("boundary", {}))
    for name, spec, kinds in (
        ("initial", initial, ("uniform_n", "perturbed_uniform")),
        ("boundary", boundary, ("uniform_n", "wall_anchored")),
    ):
        if spec and spec.get("kind") not in kinds:
            raise ConfigError(f"{name}.kind must be one of {kinds}")

    return RunConfig(
        params=params,
        scheme=scheme,
        t_final=float(raw.get("t_final", 1.0)),
        snapshot_every=int(raw.get("snapshot_every", 0)),
        steady_tol=float(raw.get("steady_tol", 0.0)),
        initial=initial,
        boundary=boundary,
        newton=newton,
        seed=int(seed if seed is not None else raw.get("seed", 0)),
        label=str(raw.get("label", "")),
        accuracy=raw.get("accuracy"),
        sweep=raw.get("sweep"),
        bingham=raw.get("bingham"),
    )


# -- initial and boundary fields ---------------------------------------------


def ordered_s(c02: float) -> float:
    """Scalar order of the uniaxial bulk minimizer (the nematic branch)."""
    return stationary_points(c02).ordered_min


def _unit(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or not np.linalg.norm(n) > 0:
        raise ConfigError(f"director must be a nonzero 3-vector, got {n!r}")
    return n / np.linalg.norm(n)


def boundary_ring_values(grid: Grid2D, spec: dict, c02: float) -> np.ndarray:
    """Dirichlet data on all nodes (only the ring is used downstream)."""
    s2 = ordered_s(c02)
    x, y = grid.nodes()
    kind = spec.get("kind", "uniform_n")
    if kind == "uniform_n":
        n = _unit(spec.get("n", (1.0, 0.0, 0.0)))
        base = tensor.uniaxial(np.asarray(s2), n)
        return np.broadcast_to(base, x.shape + (5,)).copy()
    if kind == "wall_anchored":
        # director normal to the y-walls, along x on the x-walls;
        # the x-wall rule wins at the corners
        vals = np.empty(x.shape + (5,))
        vals[...] = tensor.uniaxial(np.asarray(s2), np.array([0.0, 1.0, 0.0]))
        on_x_wall = (x == 0.0) | (x == grid.L)
        vals[on_x_wall] = tensor.uniaxial(np.asarray(s2), np.array([1.0, 0.0, 0.0]))
        return vals
    raise ConfigError(f"unknown boundary kind {kind!r}")


def initial_interior_values(grid: Grid2D, spec: dict, c02: float) -> np.ndarray:
    s2 = ordered_s(c02)
    x, y = grid.nodes()
    kind = spec.get("kind", "uniform_n")
    n = _unit(spec.get("n", (1.0, 0.0, 0.0)))
    if kind == "uniform_n":
        s = np.full_like(x, float(spec.get("s", s2)))
        return tensor.uniaxial(s, n)
    if kind == "perturbed_uniform":
        eps = float(spec.get("epsilon", 0.0))
        s = s2 + eps * np.sin(2.0 * np.pi * x / grid.L) * np.sin(
            2.0 * np.pi * y / grid.L
        )
        return tensor.uniaxial(s, n)
    raise ConfigError(f"unknown initial kind {kind!r}")


def build_field(cfg: RunConfig) -> QField:
    """Initial state: interior from the initial section, ring from the boundary."""
    grid = Grid2D(cfg.params.N, cfg.params.L)
    vals = initial_interior_values(grid, cfg.initial, cfg.params.c02)
    ring = boundary_ring_values(grid, cfg.boundary, cfg.params.c02)
    vals[0, :], vals[-1, :] = ring[0, :], ring[-1, :]
    vals[:, 0], vals[:, -1] = ring[:, 0], ring[:, -1]
    field = QField(grid, vals)
    if not field.is_physical():
        raise ConfigError("configured initial state is not physical")
    return field


# -- single configured run ---------------------------------------------------


def run_experiment(cfg: RunConfig, out_dir: str | None = None) -> RunResult:
    """Run one configured flow; write CSVs and summary plots if out_dir."""
    field = build_field(cfg)
    result = run(
        field,
        cfg.params,
        scheme=cfg.scheme,
        t_final=cfg.t_final,
        newton=cfg.newton,
        snapshot_every=cfg.snapshot_every,
        steady_tol=cfg.steady_tol,
        out_dir=out_dir,
    )
    if out_dir is not None:
        _plot_run(result, cfg, out_dir)
    return result


def _save(fig, path):
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _plot_run(result: RunResult, cfg: RunConfig, out_dir: str) -> None:
    d = result.diagnostics
    t = np.array([x.t for x in d])

    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(t, [x.energy for x in d])
    ax.set_xlabel("t")
    ax.set_ylabel("discrete energy")
    ax.set_title(cfg.label or "energy decay")
    fig.tight_layout()
    _save(fig, os.path.join(out_dir, "energy.svg"))

    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.semilogy(t, [x.dist_to_upper for x in d], label="2/3 - max eig")
    ax.semilogy(t, [x.dist_to_lower for x in d], label="min eig + 1/3")
    ax.set_xlabel("t")
    ax.set_ylabel("distance to eigenvalue bounds")
    ax.legend()
    fig.tight_layout()
    _save(fig, os.path.join(out_dir, "distances.svg"))

    if len(d) > 1:
        fig, ax = plt.subplots(figsize=(5, 3.4))
        ax.step(t[1:], [x.newton_iters for x in d[1:]], where="post")
        ax.set_xlabel("t")
        ax.set_ylabel("Newton iterations per step")
        ax.set_ylim(bottom=0)
        fig.tight_layout()
        _save(fig, os.path.join(out_dir, "newton.svg"))

    _plot_director(result.final, os.path.join(out_dir, "director.svg"))
    _plot_biaxiality(result.final, os.path.join(out_dir, "biaxiality.svg"))


def _plot_biaxiality(field: QField, path: str) -> None:
    grid = field.grid
    x, y = grid.nodes()
    fig, ax = plt.subplots(figsize=(5, 4.4))
    pc = ax.pcolormesh(x, y, tensor.biaxiality(field.values),
                       shading="gouraud", vmin=0.0, vmax=1.0)
    fig.colorbar(pc, ax=ax, label="biaxiality")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    _save(fig, path)


def _plot_director(field: QField, path: str) -> None:
    """Principal axis quiver over a biaxiality map."""
    grid = field.grid
    x, y = grid.nodes()
    beta = tensor.biaxiality(field.values)
    n = tensor.principal_axis(field.values)
    lam = tensor.eigenvalues(field.values)
    fig, ax = plt.subplots(figsize=(5, 4.4))
    pc = ax.pcolormesh(x, y, beta, shading="gouraud", vmin=0.0, vmax=1.0)
    fig.colorbar(pc, ax=ax, label="biaxiality")
    stride = max(1, grid.N // 24)
    sl = (slice(None, None, stride), slice(None, None, stride))
    # unoriented director: headless segments scaled by the leading eigen gap
    mag = (lam[..., 0] - lam[..., 1])[sl]
    scale = 0.45 * grid.h * stride / max(float(mag.max()), 1e-12)
    ax.quiver(
        x[sl], y[sl], n[..., 0][sl] * mag * scale, n[..., 1][sl] * mag * scale,
        angles="xy", scale_units="xy", scale=1.0,
        headwidth=1, headlength=0, headaxislength=0, pivot="middle", color="w",
    )
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    _save(fig, path)


# -- pattern metrics ----------------------------------------------------------


def biaxial_area(field: QField, threshold: float) -> float:
    """Area h^2 * #(nodes with biaxiality >= threshold)."""
    beta = tensor.biaxiality(field.values)
    return field.grid.h ** 2 * float((beta >= threshold).sum())


def center_director_angle(field: QField, axis=(1.0, 1.0, 0.0)) -> float:
    """Angle (degrees) between the center-node principal axis and ``axis``."""
    N = field.grid.N
    n = tensor.principal_axis(field.values[N // 2, N // 2])
    a = _unit(axis)
    c = abs(float(n @ a))
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def classify_well(field: QField, margin: float = 0.05) -> dict:
    """Structure metrics for the wall-anchored square well.

    Splits the square into four triangles by its diagonals.  In each
    triangle reports the fraction of nodes (diagonal neighborhoods of
    width ``margin*L`` excluded) whose principal axis is horizontal
    (|n1| > |n2|), plus the biaxiality maximum and where it sits.
    """
    grid = field.grid
    L = grid.L
    x, y = grid.nodes()
    n = tensor.principal_axis(field.values)
    beta = tensor.biaxiality(field.values)
    horiz = np.abs(n[..., 0]) > np.abs(n[..., 1])
    near_diag = (np.abs(x - y) < margin * L) | (np.abs(x + y - L) < margin * L)

    regions = {
        "left": (x < y) & (x < L - y),
        "right": (x > y) & (x > L - y),
        "bottom": (y < x) & (y < L - x),
        "top": (y > x) & (y > L - x),
    }
    out: dict = {}
    for name, mask in regions.items():
        interior = mask & ~near_diag
        frac = float(horiz[interior].mean()) if interior.any() else np.nan
        bmask = np.where(mask, beta, -1.0)
        idx = np.unravel_index(np.argmax(bmask), bmask.shape)
        bx, by = x[idx], y[idx]
        out[name] = {
            "horizontal_fraction": frac,
            "beta_max": float(beta[idx]),
            "beta_argmax_xy": (float(bx), float(by)),
            "beta_argmax_edge_dist": float(min(bx, by, L - bx, L - by)),
            "beta_argmax_diag_dist": float(
                min(abs(bx - by), abs(bx + by - L)) / np.sqrt(2.0)
            ),
        }
    return out


# -- accuracy ladders ---------------------------------------------------------


def _cache_key(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _reference_field(cfg: RunConfig, ref_n: int, ref_dt: float, t_end: float,
                     out_dir: str | None) -> QField:
    """Fine second-order solution, cached on disk keyed by its config."""
    p = replace(cfg.params, N=ref_n, dt=ref_dt)
    ref_cfg = replace(cfg, params=p, scheme="second", t_final=t_end)
    key = _cache_key(
        {
            "params": [p.c02, p.c21, p.c22, p.N, p.dt, p.L],
            "t_end": t_end,
            "initial": cfg.initial,
            "boundary": cfg.boundary,
            "tol": cfg.newton.tol_grad,
        }
    )
    cache = None
    if out_dir is not None:
        cache = os.path.join(out_dir, "cache", f"ref_{key}.npz")
        if os.path.exists(cache):
            data = np.load(cache)
            return QField(Grid2D(ref_n, p.L), data["values"])
    result = run_experiment(ref_cfg)
    if cache is not None:
        os.makedirs(os.path.dirname(cache), exist_ok=True)
        np.savez_compressed(cache, values=result.final.values)
    return result.final


def _fit_slope(xs, errs) -> float:
    """Least-squares slope of log(err) vs log(x); NaN for a single rung."""
    if len(xs) < 2:
        warnings.warn("slope fit needs at least two ladder rungs; reporting NaN")
        return float("nan")
    return float(np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(errs)), 1)[0])


def _write_rows(path: str, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def accuracy_time(cfg: RunConfig, out_dir: str | None = None) -> dict:
    """Error at t_end versus time step, both schemes, fixed grid.

    Returns {'rows': [(scheme, dt, error), ...], 'slopes': {...},
    'energy_ok': {...}}; the expected slopes are 1 and 2.
    """
    acc = cfg.accuracy or {}
    if acc.get("mode") != "time":
        raise ConfigError("config has no [accuracy] section with mode='time'")
    dts = [float(v) for v in acc["dts"]]
    ref_dt = float(acc["ref_dt"])
    t_end = float(acc["t_end"])
    ref = _reference_field(cfg, cfg.params.N, ref_dt, t_end, out_dir)

    rows, energy_ok = [], {}
    for scheme in ("first", "second"):
        for dt in dts:
            rcfg = replace(
                cfg, params=replace(cfg.params, dt=dt), scheme=scheme,
                t_final=t_end, snapshot_every=0, steady_tol=0.0,
            )
            res = run_experiment(rcfg)
            err = error_norm(res.final, ref)
            rows.append((scheme, dt, err))
            energy_ok[(scheme, dt)] = energy_dissipation_ok(res, scheme, rcfg.params)
    slopes = {
        scheme: _fit_slope(dts, [r[2] for r in rows if r[0] == scheme])
        for scheme in ("first", "second")
    }
    if out_dir is not None:
        _write_rows(
            os.path.join(out_dir, "accuracy_time.csv"), "scheme,dt,error", rows
        )
        _plot_accuracy(rows, "dt", slopes, os.path.join(out_dir, "accuracy_time.svg"))
    return {"rows": rows, "slopes": slopes, "energy_ok": energy_ok}


def accuracy_space(cfg: RunConfig, out_dir: str | None = None) -> dict:
    """Error at t_end versus grid size, time step tied to h per scheme.

    First order pairs dt ~ h^2 with its O(dt + h^2) estimate; second
    order pairs dt ~ h.  Both should show slope 2 against h.
    """
    acc = cfg.accuracy or {}
    if acc.get("mode") != "space":
        raise ConfigError("config has no [accuracy] section with mode='space'")
    ns = [int(v) for v in acc["ns"]]
    ref_n = int(acc["ref_n"])
    ref_dt = float(acc["ref_dt"])
    t_end = float(acc["t_end"])
    fac1 = float(acc.get("dt_factor_first", 0.004))
    fac2 = float(acc.get("dt_factor_second", 0.004))
    ref = _reference_field(cfg, ref_n, ref_dt, t_end, out_dir)

    rows, energy_ok = [], {}
    for scheme, fac, power in (("first", fac1, 2), ("second", fac2, 1)):
        for n in ns:
            h = cfg.params.L / n
            dt = fac * h**power
            steps = round(t_end / dt)
            if abs(steps * dt - t_end) > 1e-12:
                raise ConfigError(
                    f"dt {dt} does not divide t_end {t_end} at N={n}"
                )
            rcfg = replace(
                cfg, params=replace(cfg.params, N=n, dt=dt), scheme=scheme,
                t_final=t_end, snapshot_every=0, steady_tol=0.0,
            )
            res = run_experiment(rcfg)
            rows.append((scheme, n, dt, error_norm(res.final, ref)))
            energy_ok[(scheme, n)] = energy_dissipation_ok(res, scheme, rcfg.params)
    hs = [cfg.params.L / n for n in ns]
    slopes = {
        scheme: _fit_slope(hs, [r[3] for r in rows if r[0] == scheme])
        for scheme in ("first", "second")
    }
    if out_dir is not None:
        _write_rows(
            os.path.join(out_dir, "accuracy_space.csv"), "scheme,N,dt,error", rows
        )
        plot_rows = [(s, cfg.params.L / n, e) for (s, n, _, e) in rows]
        _plot_accuracy(plot_rows, "h", slopes, os.path.join(out_dir, "accuracy_space.svg"))
    return {"rows": rows, "slopes": slopes, "energy_ok": energy_ok}


def _plot_accuracy(rows, xlabel: str, slopes: dict, path: str) -> None:
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    for scheme, marker in (("first", "o"), ("second", "s")):
        pts = [(r[1], r[-1]) for r in rows if r[0] == scheme]
        xs, es = zip(*pts)
        ax.loglog(xs, es, marker + "-", label=f"{scheme} (slope {slopes[scheme]:.2f})")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


# -- parameter sweep ----------------------------------------------------------


def sweep_c22(cfg: RunConfig, out_dir: str | None = None) -> dict:
    """Steady states across c22 values; biaxial interface area per member.

    The anchored walls fight the diagonal interior director; larger c22
    widens the biaxial transition region, so the reported area should
    increase along the sweep.
    """
    sw = cfg.sweep or {}
    if "c22_values" not in sw:
        raise ConfigError("config has no [sweep] section with c22_values")
    values = [float(v) for v in sw["c22_values"]]
    thr = float(sw.get("biaxiality_threshold", 0.2))

    rows = []
    finals = []
    for i, c22 in enumerate(values):
        rcfg = replace(cfg, params=replace(cfg.params, c22=c22))
        sub = None
        if out_dir is not None:
            sub = os.path.join(out_dir, f"c22_{i}")
            os.makedirs(sub, exist_ok=True)
        res = run_experiment(rcfg, sub)
        finals.append(res.final)
        rows.append(
            (
                c22,
                biaxial_area(res.final, thr),
                center_director_angle(res.final),
                res.diagnostics[-1].step,
                res.steady,
            )
        )
    if out_dir is not None:
        _write_rows(
            os.path.join(out_dir, "sweep_c22.csv"),
            "c22,biaxial_area,center_angle_deg,steps,steady",
            rows,
        )
        fig, ax = plt.subplots(figsize=(4.6, 3.4))
        ax.plot([r[0] for r in rows], [r[1] for r in rows], "o-")
        ax.set_xlabel("c22")
        ax.set_ylabel(f"area with biaxiality >= {thr}")
        fig.tight_layout()
        _save(fig, os.path.join(out_dir, "sweep_c22.svg"))
    return {"rows": rows, "threshold": thr, "finals": finals}


# -- barrier vs maximum-entropy comparison -------------------------------------


def bingham_compare(cfg: RunConfig, out_dir: str | None = None) -> dict:
    """Tabulate psi and q along a uniaxial path toward the eigenvalue edge.

    Both diverge like multiples of -ln(lam_min + 1/3); the rows list the
    distances, values, and exponents, and 'slopes' holds the fitted
    log-slopes (about 1 for psi, 4 for q on this path, two eigenvalues
    hitting the lower edge together).
    """
    bc = cfg.bingham or {}
    dists = [float(v) for v in bc.get("dists", (1e-2, 1e-3, 1e-4, 1e-5))]
    n_theta = int(bc.get("n_theta", 2048))
    n_phi = int(bc.get("n_phi", 64))

    rows = []
    mu0 = None
    for dist in dists:
        s = 1.0 - 3.0 * dist
        lam = np.array([2.0 * s / 3.0, -s / 3.0, -s / 3.0])
        state = solve_b(lam, n_theta=n_theta, n_phi=n_phi, mu0=mu0)
        mu0 = state.mu
        q_val = uniaxial_energy(s, c02=0.0)[0]  # pure entropy along the path
        rows.append((dist, s, state.psi, float(q_val), float(state.mu[0] - state.mu[2])))

    x = -np.log([r[0] for r in rows])
    slope_psi = float(np.polyfit(x, [r[2] for r in rows], 1)[0])
    slope_q = float(np.polyfit(x, [r[3] for r in rows], 1)[0])
    last_ratio = (rows[-1][3] - rows[-2][3]) / (rows[-1][2] - rows[-2][2])
    out = {
        "rows": rows,
        "slopes": {"psi": slope_psi, "q": slope_q},
        "ratio_fit": slope_q / slope_psi,
        "ratio_last": float(last_ratio),
    }
    if out_dir is not None:
        _write_rows(
            os.path.join(out_dir, "bingham_compare.csv"),
            "dist,s,psi,q,mu_spread",
            rows,
        )
        fig, ax = plt.subplots(figsize=(4.6, 3.4))
        ax.plot(x, [r[2] for r in rows], "o-", label=f"psi (slope {slope_psi:.3f})")
        ax.plot(x, [r[3] for r in rows], "s-", label=f"q (slope {slope_q:.3f})")
        ax.set_xlabel("-ln(lam_min + 1/3)")
        ax.set_ylabel("value")
        ax.legend()
        fig.tight_layout()
        _save(fig, os.path.join(out_dir, "bingham_compare.svg"))
    return out
