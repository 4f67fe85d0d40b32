"""Density, clearing-out and scaling diagnostics for phase fields.

Densities are computed on the extension:

    Theta(r) = r^(2s-n) [ E(u, B_r^+(x0)) + eps^(-2s) sum_{D_r(x0)} W(v) h^n ] + drift(r),

with ``E(u, B) = (d_s/2) int_B z^a |grad u|^2``; the sharp variant drops the
potential term.  Both are non-decreasing in ``r`` for stationary data with
``f = 0``, and for the sharp variant the increment equals the radial
deficit ``d_s int z^a |X . grad u|^2 / |X|^(n+2-2s)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import beta as beta_fn

from .extension import HalfBall, build_extension_grid, extend, radial_deficit, weighted_energy, _RIM_SUB
from .fractional import make_params, omega_k
from .geometry import half_space, interface_points
from .grid import Disc, FarField, Interval, box_counting_dimension, build_grid, tubular_neighborhood

__all__ = [
    "DensityCurve",
    "theta_q",
    "omega_n_minus_2s",
    "density_theta_eps",
    "density_theta_sharp",
    "theta_ns_closed_form",
    "ThetaEstimate",
    "cone_density",
    "cone_density_curve",
    "theta_ns_constant",
    "richardson",
    "ClearingOutReport",
    "clearing_out_probe",
    "eta0_threshold",
    "potential_decay_fit",
    "potential_envelope_exponent",
    "TransitionVolume",
    "transition_volume_scaling",
    "level_set_points",
    "level_set_segments",
    "level_set_dimension",
    "LevelSetDistance",
    "level_set_convergence",
]


def theta_q(n, s, q):
    """Drift exponent ``1 + 2s - n/q``."""
    return 1 + 2 * s - n / q


def omega_n_minus_2s(n, s):
    """Density normalization ``omega_(n-2s) = pi^((n-2s)/2) / Gamma(1 + (n-2s)/2)``."""
    return omega_k(n - 2 * s)


@dataclass
class DensityCurve:
    """Density ``Theta(x0, r)`` sampled at increasing radii.

    Attributes
    ----------
    center : tuple
    radii : ndarray
    theta_values : ndarray
    drift_terms : ndarray
    variant : str
        ``"eps"`` or ``"sharp"``.
    deficits : ndarray or None
        Sharp variant: deficit integral between consecutive radii.
    """

    center: tuple
    radii: np.ndarray
    theta_values: np.ndarray
    drift_terms: np.ndarray
    variant: str
    deficits: np.ndarray = None

    def __post_init__(self):
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly increasing")

    @property
    def increments(self):
        return np.diff(self.theta_values)

    def monotonicity_defect(self):
        """Largest decrease between consecutive radii relative to ``Theta(max r)``."""
        scale = max(abs(float(self.theta_values[-1])), 1e-300)
        inc = self.increments
        return float(max(0.0, -inc.min() / scale)) if inc.size else 0.0

    def is_nondecreasing(self, slack=1e-3):
        return self.monotonicity_defect() <= slack

    def deficit_gap(self):
        """``max |increment - deficit| / max(|increment|, |deficit|)`` over consecutive radii."""
        if self.deficits is None:
            raise ValueError("deficits are only available for the sharp variant")
        inc = self.increments
        den = np.maximum(np.maximum(np.abs(inc), np.abs(self.deficits)), 1e-300)
        return float(np.max(np.abs(inc - self.deficits) / den))


def _disc_potential(v, well, center, r, egrid):
    """``sum_{D_r(x0)} W(v) h^n`` with sub-sampled cell coverage on the footprint."""
    grid = v.grid
    vals = well.W(v.values[egrid.footprint])
    mesh = egrid.coords()
    n = grid.dimension
    sub = (np.arange(_RIM_SUB) + 0.5) / _RIM_SUB - 0.5
    shifts = np.meshgrid(*([sub] * n), indexing="ij")
    cover = np.zeros(vals.shape)
    for off in zip(*(sh.ravel() for sh in shifts)):
        d2 = sum((m + o * grid.h - c) ** 2 for m, o, c in zip(mesh, off, center))
        cover += d2 < r * r
    cover /= shifts[0].size
    return float(np.sum(vals * cover) * grid.h**n)


def _drift(f, v, center, radii, s, q, constant):
    """``c ||v||_inf int_0^r t^(theta_q - 1) ||f||_{W^{1,q}(D_t)} dt`` by the trapezoid rule."""
    radii = np.asarray(radii, dtype=float)
    if f is None or constant == 0 or not np.any(f.values):
        return np.zeros_like(radii)
    grid = v.grid
    n = grid.dimension
    tq = theta_q(n, s, q)
    qstar = n * q / (n - q)
    grads = np.gradient(f.values, grid.h)
    grads = [grads] if n == 1 else grads
    gnorm = np.sqrt(sum(g * g for g in grads))
    d2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords, center))
    hn = grid.h**n
    sup = float(np.abs(v.values).max())

    def norm(t):
        m = d2 < t * t
        if not m.any():
            return 0.0
        return float((np.sum(np.abs(f.values[m]) ** qstar) * hn) ** (1 / qstar) + (np.sum(gnorm[m] ** q) * hn) ** (1 / q))

    out = []
    for r in radii:
        t = np.linspace(0, r, 65)[1:]
        vals = np.array([tk ** (tq - 1) * norm(tk) for tk in t])
        out.append(constant * sup * np.trapezoid(np.concatenate([[0.0], vals]), np.concatenate([[0.0], t])))
    return np.array(out)


def _check_center(center, n):
    c = tuple(float(x) for x in np.atleast_1d(center))
    if len(c) != n:
        raise ValueError("center has the wrong dimension")
    return c


def density_theta_eps(v, f, x0, radii, spec, egrid, u=None, drift_constant=0.0, q=None):
    """Density of the diffuse energy at ``x0``.

    Parameters
    ----------
    v : ScalarField
        Phase field (usually a solver output).
    f : ScalarField or None
    x0 : point in Omega
    radii : increasing sequence
    spec : ProblemSpec
        Supplies ``eps``, ``s`` and the well.
    egrid : ExtensionGrid
    u : ExtensionField, optional
        Precomputed extension of ``v``.
    drift_constant : float
        The unspecified constant in front of the forcing term; 0 by default.
    q : float, optional
        Integrability exponent of the forcing term, in ``(n/(1+2s), n)``.

    Returns
    -------
    DensityCurve
    """
    p = spec.params
    n = v.grid.dimension
    c = _check_center(x0, n)
    if not v.grid.omega.contains(tuple(np.array([[ci]]) for ci in c)).item():
        raise ValueError("x0 must lie in omega")
    u = extend(v, egrid, p) if u is None else u
    radii = np.asarray(radii, dtype=float)
    q = 0.5 * (n / (1 + 2 * p.s) + n) if q is None else q
    drift = _drift(f, v, c, radii, p.s, q, drift_constant)
    theta = []
    for r in radii:
        E = weighted_energy(u, HalfBall(c, r), p)
        P = _disc_potential(v, spec.well, c, r, egrid) / p.eps ** (2 * p.s)
        theta.append(r ** (2 * p.s - n) * (E + P))
    return DensityCurve(c, radii, np.array(theta) + drift, drift, "eps")


def density_theta_sharp(E, f, x0, radii, params, egrid, u=None, drift_constant=0.0, q=None):
    """Density of the extension of ``phase(E)`` at ``x0`` with the radial deficits.

    The deficit between consecutive radii is evaluated independently of the
    energies, so ``deficit_gap()`` measures how well the equality case holds.
    """
    n = E.grid.dimension
    c = _check_center(x0, n)
    v = E.phase()
    u = extend(v, egrid, params) if u is None else u
    radii = np.asarray(radii, dtype=float)
    q = 0.5 * (n / (1 + 2 * params.s) + n) if q is None else q
    drift = _drift(f, v, c, radii, params.s, q, drift_constant)
    theta = np.array([r ** (2 * params.s - n) * weighted_energy(u, HalfBall(c, r), params) for r in radii])
    deficits = np.array([radial_deficit(u, c, a, b, params) for a, b in zip(radii[:-1], radii[1:])])
    return DensityCurve(c, radii, theta + drift, drift, "sharp", deficits)


def theta_ns_closed_form(n, s):
    """Half-space cone density ``gamma_{1,s} / (s (1 - 2s))``, times ``B(1/2, 1 + a/2)`` in 2D.

    The 2D value follows from the 1D one because the extension of the
    half-plane phase does not depend on the tangential variable, so the
    half-ball slices at height ``t`` are 1D half-balls of radius ``sqrt(1 - t^2)``.
    """
    p = make_params(1, s)
    t1 = p.gamma_ns / (s * (1 - 2 * s))
    if n == 1:
        return t1
    if n == 2:
        return t1 * beta_fn(0.5, 1 + (1 - 2 * s) / 2)
    raise ValueError("n must be 1 or 2")


def richardson(fine, coarse, s, ratio=2.0):
    """Extrapolate ``Theta(h)`` and ``Theta(ratio h)`` assuming an ``h^(1-2s)`` error."""
    q = ratio ** (1 - 2 * s)
    return (q * fine - coarse) / (q - 1)


@dataclass
class ThetaEstimate:
    """Extrapolated cone density.

    Attributes
    ----------
    value : float
        Richardson value.
    fine, coarse : float
        Lattice densities at ``h`` and ``2h``.
    error : float
        ``|value - fine|``, the estimated discretization error of the fine level.
    h, radius : float
    """

    value: float
    fine: float
    coarse: float
    error: float
    h: float
    radius: float


def _cone_densities(set_fn, n, s, h, radii, center_fn, tail, footprint=0.5):
    params = make_params(n, s)
    omega = Interval(-footprint, footprint) if n == 1 else Disc((0.0, 0.0), footprint)
    grid = build_grid(n, h, omega, max(4.0, 8 * footprint), tail)
    eg = build_extension_grid(grid, s, footprint=(-footprint, footprint))
    u = extend(set_fn(grid).phase(), eg, params)
    c = center_fn(h)
    return [r ** (2 * s - n) * weighted_energy(u, HalfBall(c, r), params) for r in radii]


def cone_density_curve(set_fn, n, s, h, radii, center_fn, tail, footprint=0.5):
    """Richardson-extrapolated densities of a lattice cone at several radii.

    One extension per lattice (``h`` and ``2h``) serves all radii.

    Parameters
    ----------
    set_fn : callable
        ``grid -> IndicatorSet`` of the cone.
    n, s : dimension and order
    h : float
        Fine spacing.
    radii : sequence of float
        At most ``footprint``.
    center_fn : callable
        ``h -> apex`` of the lattice cone.
    tail : FarField
    footprint : float
        Half-width of the extension footprint.

    Returns
    -------
    list of ThetaEstimate
    """
    radii = [float(r) for r in np.atleast_1d(radii)]
    if max(radii) > footprint:
        raise ValueError("radii must not exceed the footprint half-width")
    fine = _cone_densities(set_fn, n, s, h, radii, center_fn, tail, footprint)
    coarse = _cone_densities(set_fn, n, s, 2 * h, radii, center_fn, tail, footprint)
    out = []
    for r, f, c in zip(radii, fine, coarse):
        value = richardson(f, c, s)
        out.append(ThetaEstimate(float(value), float(f), float(c), float(abs(value - f)), h, r))
    return out


def cone_density(set_fn, n, s, h, radius, center_fn, tail, footprint=0.5):
    """Richardson-extrapolated density of a lattice cone at one radius; see :func:`cone_density_curve`."""
    return cone_density_curve(set_fn, n, s, h, [radius], center_fn, tail, footprint)[0]


def theta_ns_constant(params, h=None, radius=0.45):
    """Half-space cone density from the extension of ``phase(P_1)``.

    Computed on lattices ``h`` and ``2h`` at one radius (the density of a
    cone is radius independent) and extrapolated.  The lattice half-space
    ``{x1 > 0}`` has its interface at ``x1 = h/2``, which is where the ball
    is centered.

    Returns
    -------
    ThetaEstimate
    """
    n, s = params.n, params.s
    h = (2.0**-10 if n == 1 else 1 / 128) if h is None else h
    far = FarField.halfspace((1.0,) + (0.0,) * (n - 1))
    center = (lambda hh: (hh / 2,)) if n == 1 else (lambda hh: (hh / 2, 0.0))
    return cone_density(lambda g: half_space(g), n, s, h, radius, center, far)


def eta0_threshold(n, s, lam):
    """Sharp clearing-out threshold ``9 omega_n^2 / (2^(n+4-2s) lambda^2)``."""
    if lam <= 0:
        raise ValueError("the Poincare constant must be positive")
    return 9 * omega_k(n) ** 2 / (2 ** (n + 4 - 2 * s) * lam**2)


@dataclass
class ClearingOutReport:
    """Outcome of :func:`clearing_out_probe`.

    Attributes
    ----------
    theta : float
        ``Theta(x0, r)``.
    deviation : float
        ``max_{D_{r/2}(x0)} ||v| - 1|``.
    flag : bool
        True when ``theta <= threshold`` and ``deviation <= delta_W``.
    threshold : float
        Density threshold used for the flag.
    eta0 : float
        Explicit sharp threshold for the configured Poincare constant.
    """

    theta: float
    deviation: float
    flag: bool
    threshold: float
    eta0: float


def clearing_out_probe(v, spec, x0, r, egrid, u=None, lam=1.0, threshold=None):
    """Check whether small density at ``(x0, r)`` comes with ``|v| ~ 1`` on ``D_{r/2}``.

    ``threshold`` defaults to half the half-space cone density, the smallest
    density of a nontrivial cone.
    """
    p = spec.params
    n = v.grid.dimension
    c = _check_center(x0, n)
    curve = density_theta_eps(v, None, c, [r], spec, egrid, u=u)
    theta = float(curve.theta_values[0])
    d2 = sum((co - ci) ** 2 for co, ci in zip(v.grid.coords, c))
    inner = d2 < (r / 2) ** 2
    dev = float(np.abs(np.abs(v.values[inner]) - 1).max()) if inner.any() else 0.0
    thr = 0.5 * theta_ns_closed_form(n, p.s) if threshold is None else threshold
    flag = theta <= thr and dev <= spec.well.delta_W
    return ClearingOutReport(theta, dev, bool(flag), thr, eta0_threshold(n, p.s, lam))


def _region_mask(grid, region):
    if isinstance(region, np.ndarray):
        return region
    return region.contains(grid.coords)


def potential_decay_fit(sweep, omega_prime, spec):
    """Slope of ``log sum_{Omega'} W(v_eps) h^n`` against ``log eps``.

    Parameters
    ----------
    sweep : list of (eps, ScalarField)
        At least 4 values spanning at least one decade.
    omega_prime : Interval, Box, Disc or mask
        Compactly inside Omega.
    spec : ProblemSpec
        Supplies the well.

    Returns
    -------
    slope : float
    values : ndarray
    """
    eps = np.array([e for e, _ in sweep], dtype=float)
    if eps.size < 4 or len(set(eps)) < 4:
        raise ValueError("need at least 4 distinct eps values")
    if eps.max() / eps.min() < 10 * (1 - 1e-9):
        raise ValueError("eps values must span at least one decade")
    vals = []
    for _, v in sweep:
        m = _region_mask(v.grid, omega_prime)
        if np.any(m & ~v.grid.interior_mask):
            raise ValueError("omega_prime must lie inside omega")
        vals.append(float(np.sum(spec.well.W(v.values[m])) * v.grid.h**v.grid.dimension))
    vals = np.array(vals)
    if np.any(vals <= 0):
        raise ValueError("potential vanishes; slope undefined")
    slope = float(np.polyfit(np.log(eps), np.log(vals), 1)[0])
    return slope, vals


def potential_envelope_exponent(v, spec, interface, lo, hi):
    """Fitted exponent of ``W(v(x))`` against ``dist(x, interface)`` on ``lo < dist < hi``.

    Returns the negated log-log slope, to be compared with ``4s``.
    """
    grid = v.grid
    pts = grid.points(grid.interior_mask)
    tree = cKDTree(np.atleast_2d(interface))
    d, _ = tree.query(pts)
    w = spec.well.W(v.values[grid.interior_mask])
    sel = (d > lo) & (d < hi) & (w > 0)
    if sel.sum() < 5:
        raise ValueError("too few nodes in the distance window")
    return float(-np.polyfit(np.log(d[sel]), np.log(w[sel]), 1)[0])


@dataclass
class TransitionVolume:
    """Tube volumes of the transition set ``{|v| < 1 - delta}``.

    ``slope`` is None when the transition set is empty.
    """

    radii: np.ndarray
    volumes: np.ndarray
    slope: float = None
    empty: bool = False


def transition_volume_scaling(v, spec, radii, delta=None):
    """Log-log slope of ``h^n |T_r({|v| < 1 - delta} in Omega)|`` against ``r``.

    Radii must exceed ``5 eps``.
    """
    grid = v.grid
    radii = np.asarray(radii, dtype=float)
    eps = spec.params.eps
    if radii.min() <= 5 * eps:
        raise ValueError("radii must exceed 5 eps")
    delta = spec.well.delta_W if delta is None else delta
    trans = (np.abs(v.values) < 1 - delta) & grid.interior_mask
    hn = grid.h**grid.dimension
    if not trans.any():
        return TransitionVolume(radii, np.zeros_like(radii), None, True)
    vols = np.array([tubular_neighborhood(trans, r, grid).sum() * hn for r in radii])
    slope = float(np.polyfit(np.log(radii), np.log(vols), 1)[0])
    return TransitionVolume(radii, vols, slope, False)


def level_set_points(v, t, K=None):
    """Points where ``v`` crosses ``t`` between neighbouring nodes (linear interpolation).

    Nodes with ``v == t`` count as crossing points.  ``K`` is a region or mask
    restricting the result.
    """
    grid = v.grid
    vals = v.values - t
    pts = [grid.points(vals == 0)]
    coords = grid.coords
    for ax in range(grid.dimension):
        lo = [slice(None)] * grid.dimension
        hi = [slice(None)] * grid.dimension
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        a, b = vals[tuple(lo)], vals[tuple(hi)]
        cross = a * b < 0
        lam = a[cross] / (a[cross] - b[cross])
        p = []
        for k in range(grid.dimension):
            ca = coords[k][tuple(lo)][cross]
            cb = coords[k][tuple(hi)][cross]
            p.append(ca + lam * (cb - ca))
        pts.append(np.stack(p, axis=-1))
    pts = np.concatenate(pts, axis=0)
    if K is not None:
        pts = pts[_points_in(K, pts, grid)]
    return pts


def level_set_segments(v, t):
    """Marching-squares segments of ``{v = t}`` on a 2D lattice.

    Each lattice cell with two edge crossings contributes one segment; saddle
    cells with four crossings are split by the sign of the cell average.

    Returns
    -------
    ndarray of shape (m, 2, 2)
        Segment endpoints.
    """
    grid = v.grid
    if grid.dimension != 2:
        raise ValueError("level_set_segments needs a 2D grid")
    f = v.values - t
    X1, X2 = grid.coords
    h = grid.h
    a, b, c, d = f[:-1, :-1], f[1:, :-1], f[:-1, 1:], f[1:, 1:]
    x0, y0 = X1[:-1, :-1], X2[:-1, :-1]
    # edges: bottom (a-b), top (c-d), left (a-c), right (b-d)
    spec = [(a, b, 1, 0, 0, 0), (c, d, 1, 0, 0, 1), (a, c, 0, 1, 0, 0), (b, d, 0, 1, 1, 0)]
    hit, pts = [], []
    for p, q, dx, dy, ox, oy in spec:
        # nodes with f == 0 count as inside, so every cell has 0, 2 or 4 crossings
        m = (p >= 0) != (q >= 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.where(m, p / (p - q), 0.0)
        hit.append(m)
        pts.append(np.stack([x0 + h * (ox + dx * lam), y0 + h * (oy + dy * lam)], axis=-1))
    hit = np.stack(hit, axis=-1)
    pts = np.stack(pts, axis=-2)
    cnt = hit.sum(-1)
    two = cnt == 2
    P = pts[two][hit[two]].reshape(-1, 2, 2)
    four = cnt == 4
    if four.any():
        P4 = pts[four]
        # center on the side of corner a: a is cut off by (bottom, left)
        same = ((a + b + c + d)[four] * a[four]) > 0
        s1 = np.where(same[:, None, None], P4[:, [0, 2]], P4[:, [0, 3]])
        s2 = np.where(same[:, None, None], P4[:, [1, 3]], P4[:, [1, 2]])
        P = np.concatenate([P, s1, s2], axis=0)
    return P


def level_set_dimension(v, t, K=None, scales=None, samples=8):
    """Box-counting dimension of ``{v = t}`` inside ``K`` for a 2D field.

    The level set is the marching-squares polyline, sampled at ``h / samples``
    so that box counts at scales near ``h`` are not limited by the spacing of
    lattice crossings.  Default scales span ``[2h, 20h]``.
    """
    grid = v.grid
    segs = level_set_segments(v, t)
    if segs.shape[0] == 0:
        raise ValueError("level set is empty")
    w = np.linspace(0.0, 1.0, samples + 1)[:, None, None]
    pts = (segs[None, :, 0] * (1 - w) + segs[None, :, 1] * w).reshape(-1, 2)
    if K is not None:
        pts = pts[_points_in(K, pts, grid)]
    if scales is None:
        scales = np.geomspace(2 * grid.h, 20 * grid.h, 5)
    return box_counting_dimension(pts, scales)


def _points_in(K, pts, grid):
    if isinstance(K, np.ndarray) and K.dtype == bool:
        k = np.clip(np.rint(pts / grid.h).astype(int) + grid.N, 0, 2 * grid.N)
        return K[tuple(k.T)]
    return K.contains(tuple(pts[:, i] for i in range(pts.shape[1])))


@dataclass
class LevelSetDistance:
    """Two-sided inclusion distances for one ``eps``.

    ``d1``: level set inside the tube around the limit boundary;
    ``d2``: limit boundary inside the tube around the level set.
    """

    eps: float
    d1: float
    d2: float

    @property
    def distance(self):
        return max(self.d1, self.d2)


def level_set_convergence(sweep, t, E_star, K, spec=None):
    """Two-sided distances between ``{v_eps = t}`` and ``boundary(E_*)`` inside ``K``.

    Parameters
    ----------
    sweep : list of (eps, ScalarField)
    t : float in (-1, 1)
    E_star : IndicatorSet or ndarray of shape (m, n)
        The limit set, or exact points of its boundary.
    K : Interval, Box, Disc or mask
        Compact region inside Omega.

    Returns
    -------
    list of LevelSetDistance
        An empty side is reported as ``inf``.
    """
    if not -1 < t < 1:
        raise ValueError("t must lie in (-1, 1)")
    out = []
    for eps, v in sweep:
        grid = v.grid
        if isinstance(E_star, np.ndarray):
            bd = np.atleast_2d(E_star).astype(float)
            bd = bd[_points_in(K, bd, grid)]
        else:
            bd = interface_points(E_star)
            bd = bd[_points_in(K, bd, grid)]
        L = level_set_points(v, t, K)
        if L.shape[0] == 0 or bd.shape[0] == 0:
            out.append(LevelSetDistance(eps, np.inf, np.inf))
            continue
        d1 = float(cKDTree(bd).query(L)[0].max())
        d2 = float(cKDTree(L).query(bd)[0].max())
        out.append(LevelSetDistance(eps, d1, d2))
    return out
