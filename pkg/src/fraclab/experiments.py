"""Solve, sweep, geometry and verify runs behind the command line.

Each ``run_*`` function takes a validated :class:`~fraclab.config.ExperimentConfig`
and an output directory, writes CSV files and returns the exit code
(0 success, 2 non-convergence, 3 failed checks).  Precondition failures
raise :class:`~fraclab.config.ConfigError` (exit code 1).
"""

import logging
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import betainc

from .config import (
    ConfigError,
    OmegaConfig,
    build_exterior,
    build_forcing,
    build_problem_grid,
    build_well,
    config_hash,
)
from .diagnostics import (
    cone_density_curve,
    density_theta_eps,
    level_set_convergence,
    potential_decay_fit,
    theta_ns_closed_form,
    transition_volume_scaling,
)
from .extension import build_extension_grid, dz2s_trace, extend, poisson_cell_weights, weighted_energy
from .fractional import d_s, energy_E, frac_laplacian, gamma_ns, make_params, sigma_ns
from .geometry import (
    IndicatorSet,
    boundary_nodes,
    bump_field,
    cross_set,
    half_space,
    make_set,
    mean_curvature_field,
    perimeter_P2s,
    phase_energy_identity_check,
    prescribed_curvature_residual,
    sharmonic_identity_check,
)
from .grid import Disc, FarField, Interval, ScalarField, build_grid
from .io import write_csv
from .potential import make_prototype_well, verify_structural_assumptions
from .solver import ProblemSpec, check_max_principle, el_defect, minimize

__all__ = ["run_solve", "run_sweep", "run_geometry", "run_verify", "Check", "VERIFY_GROUPS", "GEOMETRY_TASKS"]

log = logging.getLogger("fraclab")

GEOMETRY_TASKS = ("perimeter", "curvature", "variation", "cone-check")
VERIFY_GROUPS = ("constants", "potential", "kernel", "extension", "identities", "monotonicity", "symmetry")


def _coord_columns(n):
    return ["x"] if n == 1 else ["x1", "x2"]


def _problem_data(cfg):
    grid = build_problem_grid(cfg)
    return grid, build_exterior(cfg, grid), build_forcing(cfg, grid), build_well(cfg)


def _spec(cfg, eps, data=None):
    # sharing one grid and g across eps keeps the solver's operator cache warm
    grid, g, f, well = _problem_data(cfg) if data is None else data
    return ProblemSpec(grid, make_params(grid.dimension, cfg.physics.s, eps), well, g, f)


def _solution_rows(v, spec):
    grid = spec.grid
    m = grid.interior_mask
    pts = grid.points(m)
    vals = v.values[m]
    W = spec.well.W(vals)
    res = el_defect(v, spec)
    return [(*p, a, b, c) for p, a, b, c in zip(pts, vals, W, res)]


def _solve_one(cfg, eps, data=None):
    spec = _spec(cfg, eps, data)
    sc = cfg.solver
    v, rep = minimize(spec, init=sc.init, tol=sc.tol, max_iters=sc.max_iters)
    return spec, v, rep


def _write_solution(path, v, spec, h, extra=None):
    cols = _coord_columns(spec.grid.dimension) + ["v", "W", "residual"]
    write_csv(path, cols, _solution_rows(v, spec), h, extra)


# ---------------------------------------------------------------------------
# solve


def run_solve(cfg, out):
    """Single solve: ``solution.csv``, ``report.csv``, ``max_principle.csv``, ``history.csv``."""
    if cfg.physics.eps is None:
        raise ConfigError("physics.eps: solve needs a single eps")
    h = config_hash(cfg)
    spec, v, rep = _solve_one(cfg, cfg.physics.eps)
    _write_solution(os.path.join(out, "solution.csv"), v, spec, h)
    F = rep.F_history[-1] if rep.F_history else float("nan")
    rows = [
        ("status", rep.status),
        ("converged", rep.converged),
        ("iterations", rep.iterations),
        ("final_residual", rep.final_residual),
        ("tol", rep.tol),
        ("F", F),
        ("energy", rep.energy_terms["energy"]),
        ("potential", rep.energy_terms["potential"]),
        ("forcing", rep.energy_terms["forcing"]),
    ]
    write_csv(os.path.join(out, "report.csv"), ["key", "value"], rows, h)
    ok, margin, bound = check_max_principle(v, spec)
    write_csv(os.path.join(out, "max_principle.csv"), ["holds", "margin", "bound"], [(ok, margin, bound)], h)
    write_csv(os.path.join(out, "history.csv"), ["iteration", "F"], list(enumerate(rep.F_history)), h)
    log.info("solve: %s after %d iterations (residual %.3g, %.2fs)", rep.status, rep.iterations, rep.final_residual, rep.wall_time)
    return 0 if rep.converged else 2


# ---------------------------------------------------------------------------
# sweep


def _shrunk(omega_cfg, factor=0.5):
    om = omega_cfg.build()
    if isinstance(om, Disc):
        return OmegaConfig(kind="disc", center=list(om.center), radius=om.radius * factor)
    b = om.bounds
    c = b.mean(axis=1)
    lo = c - factor * (c - b[:, 0])
    hi = c + factor * (b[:, 1] - c)
    if omega_cfg.kind == "interval":
        return OmegaConfig(kind="interval", lo=float(lo[0]), hi=float(hi[0]))
    return OmegaConfig(kind="box", lo=lo.tolist(), hi=hi.tolist())


def _limit_set(cfg, grid, v_fine):
    ls = cfg.diagnostics.limit_set
    if ls is not None:
        return _make_set(ls, grid)
    # without a configured limit, the positive set of the finest solution stands in
    return IndicatorSet(grid, v_fine.values > 0, grid.tail)


def run_sweep(cfg, out):
    """Epsilon sweep: per-eps solutions, ``sweep.csv`` and ``slopes.csv``."""
    eps_list = cfg.physics.eps_list
    if not eps_list:
        raise ConfigError("physics.eps_list: sweep needs a nonempty eps list")
    if len(eps_list) < 4:
        raise ConfigError("physics.eps_list: sweep needs at least 4 eps values")
    h = config_hash(cfg)
    data = _problem_data(cfg)
    grid = data[0]
    warnings = []
    coarse = [e for e in eps_list if grid.h > e / 2]
    if coarse:
        warnings.append(f"interface under-resolved: h = {grid.h!r} > eps/2 for eps in {coarse}")
    for w in warnings:
        log.warning(w)
    extra = {"warning": "; ".join(warnings)} if warnings else {}
    dg = cfg.diagnostics
    op_cfg = dg.omega_prime or _shrunk(cfg.grid.omega)
    K_cfg = dg.K or op_cfg
    sweep, converged, specs = [], [], []
    for i, eps in enumerate(eps_list):
        spec, v, rep = _solve_one(cfg, eps, data)
        sweep.append((eps, v))
        specs.append(spec)
        converged.append(rep.converged)
        _write_solution(os.path.join(out, f"solution_{i:02d}.csv"), v, spec, h, {"eps": repr(float(eps)), **extra})
    op = op_cfg.build().contains(grid.coords)
    if np.any(op & ~grid.interior_mask):
        raise ConfigError("diagnostics.omega_prime: must lie inside omega")
    K = K_cfg.build()
    fine = int(np.argmin(eps_list))
    E_star = _limit_set(cfg, grid, sweep[fine][1])
    dists = {t: level_set_convergence(sweep, t, E_star, K) for t in dg.levels}
    hn = grid.h**grid.dimension
    rows = []
    for i, ((eps, v), spec) in enumerate(zip(sweep, specs)):
        en = energy_E(v, spec.params, op)
        pot = float(np.sum(spec.well.W(v.values[op])) * hn)
        rows.append((eps, en, pot, converged[i], *[dists[t][i].distance for t in dg.levels]))
    cols = ["eps", "energy_omega_prime", "potential_sum", "converged"] + [f"distance_t={t!r}" for t in dg.levels]
    write_csv(os.path.join(out, "sweep.csv"), cols, rows, h, extra)

    s = cfg.physics.s
    p0 = make_params(grid.dimension, s)
    target = 2 * p0.gamma_ns * perimeter_P2s(E_star, op, s)
    try:
        decay, _ = potential_decay_fit(sweep, op, specs[0])
    except ValueError as exc:
        log.warning("potential decay slope unavailable: %s", exc)
        decay = float("nan")
    e_min = float(min(eps_list))
    radii = dg.transition_radii
    if radii is None:
        r_hi = 0.5 * cfg.grid.omega.build().diameter
        radii = list(np.geomspace(6 * e_min, max(r_hi, 12 * e_min), 6))
    try:
        tv = transition_volume_scaling(sweep[fine][1], specs[fine], radii)
        tv_slope = float("nan") if tv.slope is None else tv.slope
    except ValueError as exc:
        log.warning("transition volume slope unavailable: %s", exc)
        tv_slope = float("nan")
    slopes = [
        ("potential_decay_slope", decay),
        ("transition_volume_slope", tv_slope),
        ("target_2gamma_P2s", target),
        ("s_prime_range", f"(0, {min(2 * s, 0.5)!r})"),
    ]
    write_csv(os.path.join(out, "slopes.csv"), ["quantity", "value"], slopes, h, extra)
    return 0 if all(converged) else 2


# ---------------------------------------------------------------------------
# geometry


def _make_set(sc, grid):
    if sc.csv is not None:
        data = np.atleast_2d(np.loadtxt(sc.csv, delimiter=",", comments="#", ndmin=2))
        if data.shape[1] != grid.dimension:
            raise ConfigError("diagnostics.set.csv: columns must match the grid dimension")
        mem = np.zeros(grid.shape, dtype=bool)
        k = np.rint(data / grid.h).astype(int) + grid.N
        if np.any(k < 0) or np.any(k > 2 * grid.N):
            raise ConfigError("diagnostics.set.csv: points outside the grid box")
        mem[tuple(k.T)] = True
        return IndicatorSet(grid, mem, FarField.constant(-1.0, grid.dimension))
    kw = {k: getattr(sc, k) for k in ("radius", "center", "normal") if getattr(sc, k) is not None}
    try:
        return make_set(sc.name, grid, **kw)
    except ValueError as exc:
        raise ConfigError(f"diagnostics.set: {exc}") from None


def _test_fields(E, omega_mask, count=4):
    """Off-symmetric bump fields centered near interface points well inside omega."""
    grid = E.grid
    n = grid.dimension
    from scipy import ndimage

    depth = ndimage.distance_transform_edt(omega_mask) * grid.h
    pts = grid.points(boundary_nodes(E) & (depth > 0.2 * depth.max()))
    if pts.shape[0] == 0:
        raise ConfigError("diagnostics.set: no interface inside omega for test fields")
    rng = np.random.default_rng(0)
    fields = []
    for j in rng.choice(pts.shape[0], size=min(count, pts.shape[0]), replace=False):
        c = pts[j] + rng.uniform(-2, 2, n) * grid.h
        k = tuple(np.clip(np.rint(c / grid.h).astype(int) + grid.N, 0, 2 * grid.N))
        radius = 0.6 * depth[k]
        d = rng.normal(size=n)
        fields.append(bump_field(grid, c, radius, d / np.linalg.norm(d)))
    return fields


def run_geometry(cfg, out, task):
    """Perimeter, curvature, first variation or cone check of the configured set."""
    if task not in GEOMETRY_TASKS:
        raise ConfigError(f"unknown geometry task {task!r}")
    h = config_hash(cfg)
    grid = build_problem_grid(cfg)
    E = _make_set(cfg.diagnostics.set, grid)
    s = cfg.physics.s
    params = make_params(grid.dimension, s)
    ok = True
    if task == "perimeter":
        P = perimeter_P2s(E, None, s)
        gap = phase_energy_identity_check(E, params)
        ok = gap <= 1e-10
        rows = [("perimeter_P2s", P), ("energy_identity_gap", gap), ("identity_ok", ok)]
        write_csv(os.path.join(out, "perimeter.csv"), ["quantity", "value"], rows, h)
    elif task == "curvature":
        at = boundary_nodes(E) & grid.interior_mask
        Hs = mean_curvature_field(E, s, at)
        pts = grid.points(at)
        cols = _coord_columns(grid.dimension) + ["H2s"]
        write_csv(os.path.join(out, "curvature.csv"), cols, [(*p, v) for p, v in zip(pts, Hs)], h)
        try:
            gap, _, _ = sharmonic_identity_check(E, params)
        except ValueError as exc:
            raise ConfigError(f"diagnostics.set: {exc}") from None
        ok = gap <= 1e-10
        write_csv(os.path.join(out, "curvature_identity.csv"), ["quantity", "value"], [("sharmonic_gap", gap), ("identity_ok", ok)], h)
    elif task == "variation":
        fields = _test_fields(E, grid.interior_mask)
        worst, res = prescribed_curvature_residual(E, params, fields)
        rows = [(i, r) for i, r in enumerate(res)]
        write_csv(os.path.join(out, "variation.csv"), ["field", "residual_per_unit_norm"], rows, h, {"max_residual": repr(worst)})
    else:
        ok = _cone_check(cfg, E, grid, params, out, h)
    return 0 if ok else 3


_CONES = {
    "half-space": (lambda g: half_space(g), lambda n: FarField.halfspace((1.0,) + (0.0,) * (n - 1)), lambda n, hh: (hh / 2,) + (0.0,) * (n - 1)),
    "half-line": (lambda g: half_space(g), lambda n: FarField.halfspace((1.0,) + (0.0,) * (n - 1)), lambda n, hh: (hh / 2,) + (0.0,) * (n - 1)),
    "cross": (cross_set, lambda n: FarField.cross(), lambda n, hh: (hh / 2, hh / 2)),
}


def _cone_check(cfg, E, grid, params, out, h):
    name = cfg.diagnostics.set.name
    if name not in _CONES or cfg.diagnostics.set.csv is not None:
        raise ConfigError("diagnostics.set: cone-check needs half-space, half-line or cross")
    n = grid.dimension
    set_fn, tail_fn, apex = _CONES[name]
    fields = _test_fields(E, grid.interior_mask)
    worst, res = prescribed_curvature_residual(E, params, fields)
    radii = [r for r in cfg.diagnostics.radii if r <= 0.45] or [0.125, 0.25, 0.45]
    # two-level extrapolation needs a fine lattice; 2D caps the spacing at 1/128
    hh = grid.h if n == 1 else min(grid.h, 1 / 128)
    curve = cone_density_curve(set_fn, n, params.s, hh, radii, lambda x: apex(n, x), tail_fn(n))
    vals = np.array([c.value for c in curve])
    spread = float((vals.max() - vals.min()) / vals.mean())
    theta = theta_ns_closed_form(n, params.s)
    ok = worst <= 0.1 and spread <= 0.02 and vals.min() >= 0.95 * theta
    rows = [(c.radius, c.value, c.fine, c.coarse) for c in curve]
    write_csv(os.path.join(out, "cone_density.csv"), ["radius", "theta", "theta_h", "theta_2h"], rows, h)
    summary = [
        ("stationarity_residual", worst),
        ("density_spread", spread),
        ("theta_ns", theta),
        ("min_density_over_theta_ns", float(vals.min() / theta)),
        ("passed", ok),
    ]
    write_csv(os.path.join(out, "cone_check.csv"), ["quantity", "value"], summary, h)
    return ok


# ---------------------------------------------------------------------------
# verify


@dataclass
class Check:
    group: str
    name: str
    value: float
    tolerance: float
    passed: bool


def _check(group, name, err, tol):
    err = float(err)
    return Check(group, name, err, tol, bool(np.isfinite(err) and err <= tol))


def _verify_constants(cfg):
    s = cfg.physics.s
    g_used = gamma_ns(1, s) if cfg.physics.gamma_override is None else cfg.physics.gamma_override
    # independent form: 4^s G(n/2 + s) / (pi^(n/2) |G(-s)|)
    g_ref = 4**s * math.gamma(0.5 + s) / (math.sqrt(math.pi) * abs(math.gamma(-s)))
    out = [_check("constants", "gamma_1s closed form", abs(g_used - g_ref) / g_ref, 1e-12)]
    g_q = gamma_ns(1, 0.25) if cfg.physics.gamma_override is None else cfg.physics.gamma_override
    if s == 0.25:
        out.append(_check("constants", "gamma_1,1/4 = sqrt2/(4 sqrt pi)", abs(g_q - math.sqrt(2) / (4 * math.sqrt(math.pi))), 1e-12))
    out.append(_check("constants", "d_s 2s sigma = gamma", abs(d_s(s) * 2 * s * sigma_ns(1, s) - g_used) / g_ref, 1e-12))
    out.append(_check("constants", "d_s -> 1 as s -> 1/2", abs(d_s(0.5 - 1e-10) - 1), 1e-8))
    sig = sigma_ns(1, s)
    mass = 2 * integrate.quad(lambda x: sig / (1 + x * x) ** (0.5 + s), 0, np.inf, epsabs=1e-13, epsrel=1e-13)[0]
    out.append(_check("constants", "Poisson kernel mass (quadrature)", abs(mass - 1), 1e-10))
    return out


def _verify_potential(cfg):
    rep = verify_structural_assumptions(build_well(cfg))
    out = []
    for k, (ok, margin) in rep.checks.items():
        # margins are signed; report the size of a violation
        viol = 0.0 if ok else max(-float(margin), np.finfo(float).tiny)
        out.append(Check("potential", k, viol, 0.0, bool(ok)))
    return out


def _verify_kernel(cfg):
    s = cfg.physics.s
    out = []
    for n in (1, 2):
        p = make_params(n, s)
        h = 2.0**-9 if n == 1 else 1 / 32
        K = 512 if n == 1 else 128
        k = np.arange(-K, K + 1)
        offs = [k] if n == 1 else list(np.meshgrid(k, k, indexing="ij"))
        X = (K + 0.5) * h
        worst = 0.0
        for z in (h / 64, h, 8 * h):
            w = poisson_cell_weights(offs, h, z, p).sum()
            if n == 1:
                tail = betainc(s, 0.5, z * z / (X * X + z * z))
                worst = max(worst, abs(w + tail - 1))
            else:
                far = lambda rho: math.pi * p.sigma_ns / s * (z * z / (rho * rho + z * z)) ** s
                lo, hi = far(X * math.sqrt(2)), far(X)
                miss = 1 - w
                worst = max(worst, max(lo - miss, miss - hi, 0.0))
        out.append(_check("kernel", f"Poisson cell weights unit mass ({n}D)", worst, 1e-4))
        R = 4.0 if n == 2 else 8.0
        om = Interval(-1, 1) if n == 1 else Disc((0.0, 0.0), 0.5)
        grid = build_grid(n, h, om, R, 1.0)
        lap = frac_laplacian(ScalarField.constant(grid, 1.0), p)
        out.append(_check("kernel", f"row sums: (-Delta)^s 1 = 0 ({n}D)", np.abs(lap).max(), 1e-10))
    return out


def _bump(x, w=0.4):
    t = np.clip(1 - (x / w) ** 2, 0, None)
    return np.where(t > 0, np.exp(-1 / np.maximum(t, 1e-300)), 0.0)


def _verify_extension(cfg):
    s = cfg.physics.s
    p = make_params(1, s)
    h = 2.0**-8
    grid = build_grid(1, h, Interval(-1, 1), 16, 0.0)
    v = ScalarField.from_function(grid, _bump, 0.0)
    eg = build_extension_grid(grid, s, footprint=(-4, 4), Z_max=4)
    u = extend(v, eg, p)
    E = energy_E(v, p)
    out = [_check("extension", "energy identity (bump)", abs(weighted_energy(u, None, p) / E - 1), 0.05)]
    eg2 = build_extension_grid(grid, s, footprint=(-2, 2))
    u2 = extend(v, eg2, p)
    xs = np.round(np.linspace(-0.6, 0.6, 10) / h) * h
    lhs = np.array([p.d_s * dz2s_trace(u2, x, p) for x in xs])
    rhs = np.array([frac_laplacian(v, p, at=x) for x in xs])
    out.append(_check("extension", "trace identity at 10 nodes", np.max(np.abs(lhs - rhs)) / np.abs(rhs).max(), 0.05))
    sup = max(float(np.abs(v.values).max()), v.tail.max_abs())
    out.append(_check("extension", "sup bound", max(np.abs(u.values).max() - sup, 0.0), 1e-8))
    one = extend(ScalarField.constant(grid, 1.0), eg2, p)
    out.append(_check("extension", "constants extend to constants", np.abs(one.values - 1).max(), 1e-10))
    return out


def _random_sets(rng):
    g1 = build_grid(1, 2.0**-8, Interval(-1, 1), 8, (-1.0, 1.0))
    g2 = build_grid(2, 1 / 32, Disc((0.0, 0.0), 0.5), 4, -1.0)
    sets = []
    for _ in range(3):
        m = rng.random(g1.shape) < 0.5
        m &= g1.interior_mask
        m |= ~g1.interior_mask & (g1.coords[0] > 0)
        sets.append(IndicatorSet(g1, m, g1.tail))
    for _ in range(2):
        m = (rng.random(g2.shape) < 0.5) & g2.interior_mask
        sets.append(IndicatorSet(g2, m, g2.tail))
    return sets


def _verify_identities(cfg):
    s = cfg.physics.s
    rng = np.random.default_rng(1)
    worst = 0.0
    for E in _random_sets(rng):
        worst = max(worst, phase_energy_identity_check(E, make_params(E.grid.dimension, s)))
    out = [_check("identities", "phase energy = 2 gamma P_2s (5 random sets)", worst, 1e-10)]
    g = build_grid(1, 2.0**-9, Interval(-1, 1), 8, -1.0)
    I = make_set("interval", g, radius=0.5)
    gap, _, _ = sharmonic_identity_check(I, make_params(1, s))
    out.append(_check("identities", "s-harmonic identity (interval)", gap, 1e-10))
    return out


def _verify_solution(cfg):
    s = cfg.physics.s
    grid = build_grid(1, 2.0**-9, Interval(-1, 1), 8, (-1.0, 1.0))
    g = ScalarField.from_function(grid, np.sign)
    spec = ProblemSpec(grid, make_params(1, s, 0.05), make_prototype_well(), g)
    v, rep = minimize(spec, tol=1e-8)
    return grid, spec, v, rep


def _verify_monotonicity(cfg, sol):
    grid, spec, v, rep = sol
    out = [_check("monotonicity", "solver converged", 0.0 if rep.converged else 1.0, 0.0)]
    inc = np.diff(rep.F_history)
    out.append(_check("monotonicity", "F non-increasing on accepted steps", max(float(inc.max()) if inc.size else 0.0, 0.0), 0.0))
    eg = build_extension_grid(grid, spec.params.s, footprint=(-1.2, 1.2))
    u = extend(v, eg, spec.params)
    worst = 0.0
    for c in (0.0, 0.2, -0.3):
        curve = density_theta_eps(v, None, c, [0.05, 0.1, 0.2, 0.3, 0.4, 0.5], spec, eg, u=u)
        worst = max(worst, curve.monotonicity_defect())
    out.append(_check("monotonicity", "density curves non-decreasing (3 centers x 6 radii)", worst, 1e-3))
    return out


def _verify_symmetry(cfg, sol):
    grid, spec, v, _ = sol
    out = [_check("symmetry", "odd data give odd solution", np.abs(v.values + v.values[::-1]).max(), 1e-6)]
    p = spec.params
    w = ScalarField.from_function(grid, lambda x: np.tanh(4 * x) + 0.3 * x * _bump(x, 0.8), (-1.0, 1.0))
    lap = frac_laplacian(w, p)
    out.append(_check("symmetry", "(-Delta)^s commutes with reflection", np.abs(lap + lap[::-1]).max() / np.abs(lap).max(), 1e-10))
    return out


def run_checks(cfg, only=None):
    groups = VERIFY_GROUPS if not only else tuple(only)
    bad = [g for g in groups if g not in VERIFY_GROUPS]
    if bad:
        raise ConfigError(f"--only: unknown check group(s) {bad}; choose from {list(VERIFY_GROUPS)}")
    checks = []
    sol = None
    for g in groups:
        if g == "constants":
            checks += _verify_constants(cfg)
        elif g == "potential":
            checks += _verify_potential(cfg)
        elif g == "kernel":
            checks += _verify_kernel(cfg)
        elif g == "extension":
            checks += _verify_extension(cfg)
        elif g == "identities":
            checks += _verify_identities(cfg)
        else:
            sol = _verify_solution(cfg) if sol is None else sol
            checks += _verify_monotonicity(cfg, sol) if g == "monotonicity" else _verify_symmetry(cfg, sol)
    return checks


def run_verify(cfg, out, only=None):
    """Run the invariant suite and write ``verify.csv``; exit 3 if any check fails."""
    checks = run_checks(cfg, only)
    rows = [(c.group, c.name, c.value, c.tolerance, c.passed) for c in checks]
    write_csv(os.path.join(out, "verify.csv"), ["group", "check", "value", "tolerance", "passed"], rows, config_hash(cfg))
    for c in checks:
        log.info("%s %-10s %s (%.3g <= %.3g)", "PASS" if c.passed else "FAIL", c.group, c.name, c.value, c.tolerance)
    return 0 if all(c.passed for c in checks) else 3
