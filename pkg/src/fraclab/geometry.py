"""Nonlocal geometry of lattice sets.

Sets are node masks (a node belongs to an open set iff its center does)
with a far-field phase map beyond the box.  The fractional perimeter,
nonlocal mean curvature, first inner variations and the phase identities
all use the same point kernel as :mod:`fraclab.fractional`, so identities
that hold algebraically hold here to rounding.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .fractional import _kernel_on_offsets, exterior_terms, frac_laplacian, energy_E, _sums
from .grid import FarField, ScalarField

__all__ = [
    "IndicatorSet",
    "half_space",
    "interval_set",
    "disc_set",
    "square_set",
    "cross_set",
    "empty_set",
    "full_set",
    "make_set",
    "boundary_nodes",
    "interface_points",
    "perimeter_P2s",
    "phase_energy_identity_check",
    "mean_curvature_H2s",
    "mean_curvature_field",
    "VectorFieldX",
    "bump_field",
    "flow_set",
    "first_variation_P2s",
    "prescribed_curvature_residual",
    "sharmonic_identity_check",
    "curvature_blowup_profile",
]


class IndicatorSet:
    """A set of lattice nodes with a far-field phase map.

    Parameters
    ----------
    grid : GridSpec
    membership : ndarray of bool
        Node membership, shape ``grid.shape``.
    tail : FarField
        Phase (+1 inside, -1 outside) of the set beyond the box.
    """

    def __init__(self, grid, membership, tail):
        membership = np.asarray(membership)
        if membership.shape != grid.shape:
            raise ValueError("membership shape mismatch")
        if membership.dtype != bool:
            if not np.all((membership == 0) | (membership == 1)):
                raise ValueError("membership values must be 0 or 1")
            membership = membership.astype(bool)
        self.grid = grid
        self.membership = membership
        self.tail = tail

    def phase(self):
        """Phase field ``chi_E - chi_{E^c}`` with values in {-1, +1}."""
        return ScalarField(self.grid, np.where(self.membership, 1.0, -1.0), self.tail)

    def complement(self):
        return IndicatorSet(self.grid, ~self.membership, -self.tail)

    def contains_points(self, points):
        """Membership of arbitrary points: nearest node inside the box, far field outside."""
        grid = self.grid
        points = np.atleast_2d(points)
        k = np.rint(points / grid.h).astype(int) + grid.N
        inside = np.all((k >= 0) & (k < 2 * grid.N + 1), axis=1)
        out = self.tail(points) > 0
        kk = np.clip(k[inside], 0, 2 * grid.N)
        out[inside] = self.membership[tuple(kk.T)]
        return out


def half_space(grid, normal=None):
    """``{x . normal > 0}``; the default normal is the first axis.

    For an axis normal the lattice interface sits halfway between nodes, at
    ``x . normal = h/2``.
    """
    normal = np.eye(grid.dimension)[0] if normal is None else np.atleast_1d(np.asarray(normal, dtype=float))
    dot = sum(c * a for c, a in zip(grid.coords, normal))
    return IndicatorSet(grid, dot > 0, FarField.halfspace(tuple(normal)))


def interval_set(grid, a, b):
    """The open interval ``(a, b)`` on a 1D grid."""
    if grid.dimension != 1:
        raise ValueError("interval_set needs a 1D grid")
    (x,) = grid.coords
    return IndicatorSet(grid, (x > a) & (x < b), FarField.constant(-1.0, 1))


def disc_set(grid, center, radius):
    """Open disc on a 2D grid (an interval in 1D)."""
    r2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords, np.atleast_1d(center)))
    return IndicatorSet(grid, r2 < radius**2, FarField.constant(-1.0, grid.dimension))


def square_set(grid, lo, hi):
    """Open axis-aligned box."""
    m = np.ones(grid.shape, dtype=bool)
    for c, a, b in zip(grid.coords, np.atleast_1d(lo), np.atleast_1d(hi)):
        m &= (c > a) & (c < b)
    return IndicatorSet(grid, m, FarField.constant(-1.0, grid.dimension))


def cross_set(grid):
    """The cross ``{x1 x2 > 0}`` on a 2D grid, with apex at the dual corner ``(h/2, h/2)``."""
    if grid.dimension != 2:
        raise ValueError("cross_set needs a 2D grid")
    x1, x2 = grid.coords
    # half-open quadrants: the lattice set is the cross translated by (h/2, h/2)
    member = ((x1 > 0) & (x2 > 0)) | ((x1 <= 0) & (x2 <= 0))
    return IndicatorSet(grid, member, FarField.cross())


def empty_set(grid):
    return IndicatorSet(grid, np.zeros(grid.shape, dtype=bool), FarField.constant(-1.0, grid.dimension))


def full_set(grid):
    return IndicatorSet(grid, np.ones(grid.shape, dtype=bool), FarField.constant(1.0, grid.dimension))


_CONSTRUCTORS = {
    "half-space": lambda g, **kw: half_space(g, kw.get("normal")),
    "half-line": lambda g, **kw: half_space(g, kw.get("normal")),
    "interval": lambda g, **kw: interval_set(g, -kw.get("radius", 1.0), kw.get("radius", 1.0)),
    "disc": lambda g, **kw: disc_set(g, kw.get("center", (0.0,) * g.dimension), kw.get("radius", 1.0)),
    "square": lambda g, **kw: square_set(g, kw.get("lo", (-1.0,) * g.dimension), kw.get("hi", (1.0,) * g.dimension)),
    "cross": lambda g, **kw: cross_set(g),
    "empty": lambda g, **kw: empty_set(g),
    "full": lambda g, **kw: full_set(g),
}


def make_set(name, grid, **kwargs):
    """Named constructor: half-space, half-line, interval, disc, square, cross, empty, full."""
    if name not in _CONSTRUCTORS:
        raise ValueError(f"unknown set name {name!r}")
    return _CONSTRUCTORS[name](grid, **kwargs)


def _order(s):
    return s.s if hasattr(s, "s") else float(s)


# ---------------------------------------------------------------------------
# Discrete boundary


def boundary_nodes(E):
    """Nodes with at least one opposite-membership 2-neighbour (1D) or 4-neighbour (2D)."""
    m = E.membership
    out = np.zeros(m.shape, dtype=bool)
    for ax in range(m.ndim):
        a = [slice(None)] * m.ndim
        b = [slice(None)] * m.ndim
        a[ax] = slice(1, None)
        b[ax] = slice(None, -1)
        diff = m[tuple(a)] != m[tuple(b)]
        out[tuple(a)] |= diff
        out[tuple(b)] |= diff
    return out


def interface_points(E, mask=None):
    """Midpoints between opposite-membership neighbours, as an ``(m, n)`` array.

    Parameters
    ----------
    mask : ndarray of bool, optional
        Keep only midpoints whose two nodes both lie in ``mask``.
    """
    grid = E.grid
    m = E.membership
    pts = []
    for ax in range(m.ndim):
        a = [slice(None)] * m.ndim
        b = [slice(None)] * m.ndim
        a[ax] = slice(1, None)
        b[ax] = slice(None, -1)
        diff = m[tuple(a)] != m[tuple(b)]
        if mask is not None:
            diff &= mask[tuple(a)] & mask[tuple(b)]
        idx = np.argwhere(diff).astype(float)
        idx[:, ax] += 0.5
        pts.append((idx - grid.N) * grid.h)
    return np.concatenate(pts, axis=0) if pts else np.zeros((0, grid.dimension))


# ---------------------------------------------------------------------------
# Perimeter and curvature


def perimeter_P2s(E, omega=None, s=0.25, method="fft"):
    """Fractional 2s-perimeter of ``E`` relative to ``omega``.

    Sum of the three interactions ``(E cap omega, E^c cap omega)``,
    ``(E cap omega, E^c minus omega)`` and ``(E minus omega, E^c cap omega)``
    with kernel ``|x - y|^(-n-2s)``, including the exact exterior tail.

    Parameters
    ----------
    E : IndicatorSet
    omega : ndarray of bool, optional
        Defaults to the grid interior.
    s : float or FractionalParams
        Order ``s'`` in (0, 1/2).
    method : {"fft", "direct"}

    Returns
    -------
    float
    """
    s = _order(s)
    if not 0 < s < 0.5:
        raise ValueError("s must lie in (0, 1/2)")
    grid = E.grid
    omega = grid.interior_mask if omega is None else np.asarray(omega, dtype=bool)
    if not omega.any():
        return 0.0
    chi = E.membership.astype(float)
    w = omega.astype(float)
    Sa, Sb, Sc = _sums(grid, s, [(1 - chi) * w, (1 - chi) * (1 - w), chi * (1 - w)], omega, method)
    M, T, _ = exterior_terms(grid, s, grid.points(omega), E.tail)
    c = chi[omega]
    t1 = np.sum(c * Sa)
    t2 = np.sum(c * (Sb + 0.5 * (M - T)))
    t3 = np.sum((1 - c) * (Sc + 0.5 * (M + T)))
    return float(grid.h**grid.dimension * (t1 + t2 + t3))


def phase_energy_identity_check(E, params, omega=None, method="fft"):
    """Relative gap between ``energy_E(phase(E))`` and ``2 gamma P_2s(E)``."""
    lhs = energy_E(E.phase(), params, omega, method)
    rhs = 2 * params.gamma_ns * perimeter_P2s(E, omega, params.s, method)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)


def mean_curvature_H2s(E, x, s=0.25):
    """Nonlocal 2s-mean curvature at a discrete boundary node.

    The lattice sum of ``(chi_{E^c} - chi_E)(y) |x - y|^(-n-2s) h^n`` is
    accumulated in reflection pairs ``(y, 2x - y)`` so that the opposite-sign
    singular contributions cancel pairwise; nodes without a reflected partner
    in the box and the exterior tail are added afterwards.

    Parameters
    ----------
    E : IndicatorSet
    x : float or array_like
        Coordinates of a boundary node.
    s : float or FractionalParams

    Returns
    -------
    float
    """
    s = _order(s)
    grid = E.grid
    idx = grid.index_of(x)
    if not boundary_nodes(E)[idx]:
        raise ValueError("x is not a discrete boundary node of E")
    L = 2 * grid.N + 1
    ph = np.where(E.membership, 1.0, -1.0)
    offs = np.meshgrid(*[np.arange(L) - i for i in idx], indexing="ij")
    contrib = -ph * _kernel_on_offsets(offs, grid.h, s)
    R = min(min(i, L - 1 - i) for i in idx)
    sub = tuple(slice(i - R, i + R + 1) for i in idx)
    block = contrib[sub]
    paired = block + block[(slice(None, None, -1),) * grid.dimension]
    rest = contrib.copy()
    rest[sub] = 0.0
    point = (np.asarray(idx, dtype=float) - grid.N)[None, :] * grid.h
    _, T, _ = exterior_terms(grid, s, point, E.tail)
    return float(0.5 * paired.sum() + rest.sum() - T[0])


def mean_curvature_field(E, s=0.25, at=None):
    """Curvature at every node of ``at`` (default: all discrete boundary nodes) by FFT."""
    s = _order(s)
    grid = E.grid
    at = boundary_nodes(E) if at is None else at
    ph = np.where(E.membership, 1.0, -1.0)
    (Sp,) = _sums(grid, s, [ph], at, "fft")
    _, T, _ = exterior_terms(grid, s, grid.points(at), E.tail)
    return -Sp - T


# ---------------------------------------------------------------------------
# Flows and first variation


@dataclass
class VectorFieldX:
    """Compactly supported vector field on a grid.

    Attributes
    ----------
    grid : GridSpec
    fn : callable
        Maps points ``(m, n)`` to vectors ``(m, n)``; used to advect points.
    values : ndarray
        Node values, shape ``(n,) + grid.shape``.
    support : ndarray of bool
        Nodes where the field is nonzero.
    """

    grid: object
    fn: object
    values: np.ndarray
    support: np.ndarray

    @classmethod
    def from_function(cls, grid, fn):
        pts = grid.points()
        vals = np.asarray(fn(pts), dtype=float).T.reshape((grid.dimension,) + grid.shape)
        support = np.any(vals != 0, axis=0)
        return cls(grid, fn, vals, support)

    @property
    def sup_norm(self):
        return float(np.sqrt(np.sum(self.values**2, axis=0)).max())

    def __add__(self, other):
        return VectorFieldX.from_function(self.grid, lambda p: self.fn(p) + other.fn(p))


def bump_field(grid, center, radius, direction, amplitude=1.0):
    """Smooth bump ``amplitude * exp(1 - 1/(1 - r^2)) * direction`` with ``r = |x - center| / radius``."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    direction = np.atleast_1d(np.asarray(direction, dtype=float))

    def fn(p):
        p = np.atleast_2d(p)
        r2 = np.sum((p - center) ** 2, axis=1) / radius**2
        with np.errstate(divide="ignore", over="ignore"):
            phi = np.where(r2 < 1, np.exp(1 - 1 / (1 - np.minimum(r2, 1 - 1e-300))), 0.0)
        return amplitude * phi[:, None] * direction[None, :]

    return VectorFieldX.from_function(grid, fn)


def _check_support(X, omega):
    inner = ndimage.binary_erosion(omega, border_value=0)
    if np.any(X.support & ~inner):
        raise ValueError("test field support touches the boundary of omega")


def flow_set(E, X, t):
    """One explicit Euler flow step ``x -> x + t X(x)`` applied to ``E``.

    A node ``y`` belongs to the image iff its preimage (found by fixed-point
    iteration of ``x = y - t X(x)``) belongs to ``E``, the membership of an
    arbitrary point being that of its nearest node.
    """
    grid = E.grid
    if not X.support.any() or t == 0:
        return IndicatorSet(grid, E.membership.copy(), E.tail)
    pad = int(np.ceil(abs(t) * X.sup_norm / grid.h)) + 2
    sl = grid.mask_bbox(X.support)
    sl = tuple(slice(max(0, a.start - pad), min(2 * grid.N + 1, a.stop + pad)) for a in sl)
    region = np.zeros(grid.shape, dtype=bool)
    region[sl] = True
    y = grid.points(region)
    x = y.copy()
    for _ in range(60):
        x_new = y - t * X.fn(x)
        if np.max(np.abs(x_new - x)) < 1e-13:
            x = x_new
            break
        x = x_new
    mem = E.membership.copy()
    mem[region] = E.contains_points(x)
    return IndicatorSet(grid, mem, E.tail)


def first_variation_P2s(E, X, s=0.25, t_step=None, omega=None):
    """Central difference of the perimeter along the flow of ``X``.

    ``[P(phi_t(E)) - P(phi_{-t}(E))] / (2t)``.  With nearest-node resampling
    the step must move the set by a few lattice spacings; the default is
    ``t_step = 3 h / |X|_inf``.
    """
    grid = E.grid
    omega = grid.interior_mask if omega is None else np.asarray(omega, dtype=bool)
    _check_support(X, omega)
    if not X.support.any():
        return 0.0
    t = 3 * grid.h / X.sup_norm if t_step is None else float(t_step)
    if t <= 0:
        raise ValueError("t_step must be positive")
    plus = perimeter_P2s(flow_set(E, X, t), omega, s)
    minus = perimeter_P2s(flow_set(E, X, -t), omega, s)
    return (plus - minus) / (2 * t)


def prescribed_curvature_residual(E, params, X_list, f=None, t_step=None, omega=None):
    """Weak residual of the prescribed curvature equation per unit test-field norm.

    For each field ``X``: ``|dP[X] - (1/gamma) sum_{E cap omega} div(f X) h^n| / |X|_inf``,
    with ``div`` by central differences.

    Returns
    -------
    max_residual : float
    residuals : list of float
    """
    grid = E.grid
    omega = grid.interior_mask if omega is None else np.asarray(omega, dtype=bool)
    res = []
    for X in X_list:
        dP = first_variation_P2s(E, X, params.s, t_step, omega)
        rhs = 0.0
        if f is not None and np.any(f.values != 0):
            div = sum(np.gradient(f.values * X.values[a], grid.h, axis=a) for a in range(grid.dimension))
            rhs = np.sum(div[E.membership & omega]) * grid.h**grid.dimension / params.gamma_ns
        res.append(abs(dP - rhs) / max(X.sup_norm, 1e-300))
    return (max(res) if res else 0.0), res


# ---------------------------------------------------------------------------
# Identities for phase functions


def sharmonic_identity_check(E, params, omega=None, min_dist=10):
    """Worst relative gap in ``(-Delta)^s v = (gamma/2) (int |v(x) - v(y)|^2 K dy) v(x)``.

    Evaluated for the phase ``v`` of ``E`` at nodes of ``omega`` at distance at
    least ``min_dist`` lattice spacings from the discrete boundary.

    Returns
    -------
    worst : float
    lhs, rhs : ndarray
        Both sides at the tested nodes.
    """
    grid = E.grid
    omega = grid.interior_mask if omega is None else np.asarray(omega, dtype=bool)
    bnd = boundary_nodes(E)
    if bnd.any():
        far = ndimage.distance_transform_edt(~bnd) >= min_dist
    else:
        far = np.ones(grid.shape, dtype=bool)
    at = omega & far
    if not at.any():
        raise ValueError("no node of omega is far enough from the boundary")
    v = E.phase()
    lhs = frac_laplacian(v, params, at=at)
    u = v.values
    S1, Sv, Sv2 = _sums(grid, params.s, [np.ones(grid.shape), u, u * u], at, "fft")
    M, T, Q = exterior_terms(grid, params.s, grid.points(at), v.tail)
    x = u[at]
    sq = x * x * (S1 + M) - 2 * x * (Sv + T) + (Sv2 + Q)
    rhs = 0.5 * params.gamma_ns * sq * x
    scale = np.maximum(np.abs(lhs), 1e-300)
    gap = np.where((lhs == 0) & (rhs == 0), 0.0, np.abs(lhs - rhs) / scale)
    return float(gap.max()), lhs, rhs


def curvature_blowup_profile(E, params, points):
    """``|(-Delta)^s v_E(x)| dist(x, dE)^(2s)`` at the given nodes.

    Bounded values as ``x`` approaches the boundary are the integrability
    estimate for phases of stationary sets.

    Returns
    -------
    dist, product : ndarray
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, E.grid.dimension)
    ip = interface_points(E)
    dist = cKDTree(ip).query(pts)[0]
    lap = np.atleast_1d(frac_laplacian(E.phase(), params, at=pts))
    return dist, np.abs(lap) * dist ** (2 * params.s)
