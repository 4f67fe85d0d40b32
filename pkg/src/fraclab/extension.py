"""Harmonic extension to the upper half-space with the weight ``z^(1-2s)``.

The extension of a lattice field is the Poisson-kernel average

    u(x, z) = int P(x - y, z) v(y) dy,   P(x, z) = sigma z^(2s) / (|x|^2 + z^2)^((n+2s)/2),

evaluated on a graded set of heights ``0 = z_0 < z_min = z_1 < ... <= Z_max``.
Because ``P(., z)`` concentrates on the scale ``z``, which drops far below
the lattice spacing, the kernel is integrated over each lattice cell: exactly
in 1D (incomplete beta function), and in 2D analytically in one variable
plus Gauss-Legendre in the other for the nearest cells, with a corrected
midpoint rule elsewhere.  The part of the source beyond a square window is
integrated exactly against the far-field map.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.signal import fftconvolve
from scipy.special import beta as beta_fn
from scipy.special import betainc

from .grid import FarField
from .tails import far_field_tail, poisson_tail_G

__all__ = [
    "ExtensionGrid",
    "ExtensionField",
    "HalfBall",
    "build_extension_grid",
    "poisson_kernel",
    "poisson_cell_weights",
    "extend",
    "weighted_energy",
    "radial_deficit",
    "dz2s_trace",
]

_NEAR = 16
_GL_NODES = 32
_RIM_SUB = 4


@dataclass(frozen=True)
class HalfBall:
    """The region ``{(x, z): |x - center|^2 + z^2 < radius^2, z > 0}``."""

    center: tuple
    radius: float


@dataclass(frozen=True)
class ExtensionGrid:
    """Graded half-space mesh over a rectangular footprint of a base grid.

    Attributes
    ----------
    base : GridSpec
    s : float
    z_levels : ndarray
        Heights, starting with 0.
    cell_weights : ndarray
        ``int z^a dz`` over each z-cell, ``a = 1 - 2s``.
    footprint : tuple of slice
        Index box of the base grid carried by the mesh.
    """

    base: object
    s: float
    z_levels: np.ndarray
    cell_weights: np.ndarray
    footprint: tuple

    @property
    def a(self):
        return 1 - 2 * self.s

    @property
    def shape(self):
        return (self.z_levels.size,) + tuple(sl.stop - sl.start for sl in self.footprint)

    @property
    def axes(self):
        return tuple(self.base.axis[sl] for sl in self.footprint)

    def coords(self):
        """Footprint coordinate arrays (``ij`` indexing)."""
        return tuple(np.meshgrid(*self.axes, indexing="ij")) if len(self.axes) > 1 else self.axes


def build_extension_grid(base, s, z_min=None, ratio=1.1, Z_max=None, footprint=None):
    """Build an :class:`ExtensionGrid`.

    Parameters
    ----------
    base : GridSpec
    s : float
    z_min : float, optional
        Lowest positive level; default ``h / 64``.
    ratio : float
        Geometric ratio of the levels, in (1, 2].
    Z_max : float, optional
        Top level; default ``max(diam(Omega), footprint width)``.
    footprint : (lo, hi), optional
        Coordinate box of the footprint; default the bounding box of Omega.
    """
    if not 1 < ratio <= 2:
        raise ValueError("ratio must lie in (1, 2]")
    h = base.h
    z_min = h / 64 if z_min is None else z_min
    if z_min <= 0:
        raise ValueError("z_min must be positive")
    if footprint is None:
        fp = base.mask_bbox(base.interior_mask)
        fp = tuple(slice(max(sl.start - 1, 0), min(sl.stop + 1, base.shape[0])) for sl in fp)
    else:
        lo = np.broadcast_to(np.asarray(footprint[0], dtype=float), (base.dimension,))
        hi = np.broadcast_to(np.asarray(footprint[1], dtype=float), (base.dimension,))
        i0 = np.floor(lo / h + 1e-9).astype(int) + base.N
        i1 = np.ceil(hi / h - 1e-9).astype(int) + base.N + 1
        if np.any(i0 < 0) or np.any(i1 > base.shape[0]) or np.any(i1 - i0 < 3):
            raise ValueError("footprint must lie inside the box and span at least 3 nodes")
        fp = tuple(slice(int(a), int(b)) for a, b in zip(i0, i1))
    width = max((sl.stop - sl.start - 1) * h for sl in fp)
    if Z_max is None:
        Z_max = max(base.omega.diameter, width)
    if Z_max < base.omega.diameter:
        raise ValueError("Z_max must be at least diam(omega)")
    k = int(np.ceil(np.log(Z_max / z_min) / np.log(ratio) - 1e-9))
    z = z_min * ratio ** np.arange(k)
    z = np.concatenate([[0.0], z[z < Z_max * (1 - 1e-12)], [Z_max]])
    a = 1 - 2 * s
    w = (z[1:] ** (1 + a) - z[:-1] ** (1 + a)) / (1 + a)
    return ExtensionGrid(base, s, z, w, fp)


def poisson_kernel(x_offset, z, params):
    """Pointwise Poisson kernel ``sigma z^(2s) / (|x|^2 + z^2)^((n+2s)/2)``.

    ``x_offset`` has shape ``(..., n)``; a scalar is read as a 1D offset.
    """
    if not np.all(np.asarray(z) > 0):
        raise ValueError("z must be positive")
    x = np.asarray(x_offset, dtype=float)
    n = params.n
    r2 = x * x if (n == 1 and (x.ndim == 0 or x.shape[-1] != 1)) else np.sum(x * x, axis=-1)
    s = params.s
    return params.sigma_ns * z ** (2 * s) / (r2 + z * z) ** ((n + 2 * s) / 2)


def _gl(n):
    return np.polynomial.legendre.leggauss(n)


def _psi(U, s):
    """``int_U^inf (1 + t^2)^(-1-s) dt`` for ``U >= 0``."""
    return 0.5 * beta_fn(0.5, 0.5 + s) * betainc(0.5 + s, 0.5, 1.0 / (1.0 + U * U))


def _phi_diff(lo, hi, s):
    """``int_lo^hi (1 + t^2)^(-1-s) dt``, accurate for same-sign endpoints."""
    half = 0.5 * beta_fn(0.5, 0.5 + s)
    pos = lo >= 0
    neg = hi <= 0
    out = 2 * half - _psi(np.abs(lo), s) - _psi(np.abs(hi), s)
    out = np.where(pos, _psi(np.abs(lo), s) - _psi(np.abs(hi), s), out)
    return np.where(neg, _psi(np.abs(hi), s) - _psi(np.abs(lo), s), out)


def poisson_cell_weights(offsets, h, z, params):
    """Integrals of ``P(., z)`` over lattice cells centered at the given offsets.

    Parameters
    ----------
    offsets : list of ndarray
        Integer offsets per axis (broadcast together).
    h, z : float
    params : FractionalParams

    Returns
    -------
    ndarray
    """
    s = params.s
    if params.n == 1:
        k = np.asarray(offsets[0], dtype=float)
        lo, hi = (k - 0.5) * h, (k + 0.5) * h
        G = lambda X: 0.5 * betainc(s, 0.5, z * z / (X * X + z * z))
        out = 1.0 - G(np.abs(lo)) - G(np.abs(hi))
        out = np.where(lo >= 0, G(np.abs(lo)) - G(np.abs(hi)), out)
        return np.where(hi <= 0, G(np.abs(hi)) - G(np.abs(lo)), out)
    k1, k2 = np.broadcast_arrays(*(np.asarray(o, dtype=float) for o in offsets))
    x1, x2 = k1 * h, k2 * h
    q = x1 * x1 + x2 * x2 + z * z
    b = 1 + s
    P = params.sigma_ns * z ** (2 * s) * q ** (-b)
    lap = params.sigma_ns * z ** (2 * s) * (-4 * b * q ** (-b - 1) + 4 * b * (b + 1) * (q - z * z) * q ** (-b - 2))
    out = h * h * (P + h * h * lap / 24)
    near = (np.abs(k1) <= _NEAR) & (np.abs(k2) <= _NEAR)
    if near.any():
        out = out.copy()
        out[near] = _near_cells_2d(k1[near], k2[near], h, z, params)
    return out


def _near_cells_2d(k1, k2, h, z, params):
    s = params.s
    xi, wi = _gl(_GL_NODES)
    ta = np.arcsinh((k1 - 0.5) * h / z)
    tb = np.arcsinh((k1 + 0.5) * h / z)
    t = 0.5 * (ta + tb)[:, None] + 0.5 * (tb - ta)[:, None] * xi
    c = z * np.cosh(t)
    inner = _phi_diff((k2[:, None] - 0.5) * h / c, (k2[:, None] + 0.5) * h / c, s)
    f = np.cosh(t) ** (-2 * s) * inner
    return params.sigma_ns * 0.5 * (tb - ta) * np.sum(f * wi, axis=1)


class ExtensionField:
    """Extension values on an :class:`ExtensionGrid`.

    Attributes
    ----------
    grid : ExtensionGrid
    values : ndarray
        Shape ``grid.shape``; ``values[0]`` is the trace.
    boundary_trace : ScalarField
    """

    def __init__(self, grid, values, boundary_trace, check=True):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError("values do not match the extension grid")
        self.grid = grid
        self.values = values
        self.boundary_trace = boundary_trace
        if check:
            bound = max(float(np.abs(boundary_trace.values).max()), boundary_trace.tail.max_abs())
            if np.abs(values).max() > bound + 1e-8:
                raise ValueError("extension violates the sup bound of its trace")

    def slice_rows(self, index=None):
        """Rows ``(x, z, value)`` along the first footprint axis (other axes at ``index``)."""
        g = self.grid
        ax = g.axes[0]
        vals = self.values if g.base.dimension == 1 else self.values[:, :, index]
        X, Z = np.meshgrid(ax, g.z_levels)
        return np.stack([X.ravel(), Z.ravel(), vals.ravel()], axis=1)


def _source_window(v, egrid, margin):
    """Symmetric index half-width outside which ``v`` equals its far field."""
    base = v.grid
    pts = np.stack(base.coords, axis=-1)
    far = v.tail(pts)
    differs = v.values != far
    # nodes on a sign line carry either side's value; the far field averages them
    for _, normals in v.tail.terms:
        for a in normals:
            differs &= np.abs(pts @ np.asarray(a, dtype=float)) > 1e-12 * max(base.h, 1.0)
    N = base.N
    need = 0
    for sl in egrid.footprint:
        need = max(need, abs(sl.start - N), abs(sl.stop - 1 - N))
    if differs.any():
        for ax in range(base.dimension):
            other = tuple(a for a in range(base.dimension) if a != ax)
            hit = np.flatnonzero(differs.any(axis=other) if other else differs)
            need = max(need, abs(hit[0] - N), abs(hit[-1] - N))
    return min(N, need + margin)


def extend(v, egrid, params, margin=None, tail_stride=None):
    """Poisson extension of ``v`` on ``egrid``.

    Parameters
    ----------
    v : ScalarField
    egrid : ExtensionGrid
    params : FractionalParams
    margin : int, optional
        Extra nodes around the footprint in the source window; default the
        footprint half-width.  The window is widened to cover every node where
        ``v`` differs from its far field.
    tail_stride : int, optional
        2D only: the exterior contribution is evaluated on every
        ``tail_stride``-th footprint node and interpolated (bicubic).

    Returns
    -------
    ExtensionField
    """
    base = v.grid
    if base is not egrid.base:
        raise ValueError("v must live on the base grid of the extension grid")
    n = base.dimension
    N = base.N
    h = base.h
    T = tuple(sl.stop - sl.start for sl in egrid.footprint)
    if margin is None:
        margin = max(T) // 2 + 1
    Wn = _source_window(v, egrid, margin)
    win = tuple(slice(N - Wn, N + Wn + 1) for _ in range(n))
    src = v.values[win]
    L = src.shape[0]
    edge = (Wn + 0.5) * h
    ranges = [np.arange(sl.start - (N - Wn) - (L - 1), sl.start - (N - Wn) + Tk) for sl, Tk in zip(egrid.footprint, T)]
    offs = np.meshgrid(*ranges, indexing="ij")
    pts_axes = egrid.axes
    if n == 1:
        tail_pts = pts_axes[0][:, None]
    else:
        # coarse nodes overhang the footprint so the spline ends are not used
        stride = tail_stride or max(1, (max(T) - 1) // 16)
        coarse = []
        for sl in egrid.footprint:
            lo = max(sl.start - N - 2 * stride, -Wn + 1)
            hi = min(sl.stop - 1 - N + 2 * stride, Wn - 1)
            k = np.arange(lo, hi + 1, stride)
            coarse.append(np.unique(np.concatenate([k, [sl.start - N, sl.stop - 1 - N, hi]])) * h)
        tail_pts = np.stack(np.meshgrid(*coarse, indexing="ij"), -1).reshape(-1, 2)
    one = FarField.constant(1.0, n)
    ones = np.ones_like(src)

    def tail_of(far, G):
        t = far_field_tail(tail_pts, edge, far, G)
        if n == 1:
            return t
        t = t.reshape(len(coarse[0]), len(coarse[1]))
        spl = RectBivariateSpline(coarse[0], coarse[1], t, kx=min(3, len(coarse[0]) - 1), ky=min(3, len(coarse[1]) - 1))
        return spl(pts_axes[0], pts_axes[1])

    out = np.empty(egrid.shape)
    out[0] = v.values[egrid.footprint]
    for j, z in enumerate(egrid.z_levels[1:], start=1):
        kern = poisson_cell_weights(offs, h, z, params)
        G = poisson_tail_G(n, params.s, params.sigma_ns, z)
        num = fftconvolve(kern, src, mode="valid") + tail_of(v.tail, G)
        # unit-mass normalization: the discrete average reproduces constants exactly
        mass = fftconvolve(kern, ones, mode="valid") + tail_of(one, G)
        out[j] = num / mass
    return ExtensionField(egrid, out, v)


def _region_weights(egrid, region):
    """Per-cell ``int z^a dz`` restricted to ``region``, on interior footprint nodes."""
    a = egrid.a
    z = egrid.z_levels
    inner_axes = [ax[1:-1] for ax in egrid.axes]
    full = egrid.cell_weights
    if region is None:
        shape = tuple(len(ax) for ax in inner_axes)
        return np.broadcast_to(full.reshape((-1,) + (1,) * len(shape)), (full.size,) + shape)
    c = np.broadcast_to(np.asarray(region.center, dtype=float), (len(inner_axes),))
    r = float(region.radius)
    h = egrid.base.h
    for ax, ck in zip(inner_axes, c):
        if ck - r < ax[0] - 0.5 * h - 1e-12 or ck + r > ax[-1] + 0.5 * h + 1e-12:
            raise ValueError("region outside the extension grid footprint")
    if r > z[-1]:
        raise ValueError("region outside the extension grid (radius above Z_max)")
    # average the capped column integral over sub-points of each x-cell, so
    # the weights vary smoothly as the rim crosses the lattice
    mesh = np.meshgrid(*inner_axes, indexing="ij")
    sub = (np.arange(_RIM_SUB) + 0.5) / _RIM_SUB - 0.5
    lo = z[:-1].reshape((-1,) + (1,) * len(mesh))
    hi = z[1:].reshape((-1,) + (1,) * len(mesh))
    acc = np.zeros((z.size - 1,) + mesh[0].shape)
    shifts = np.meshgrid(*([sub] * len(mesh)), indexing="ij")
    for off in zip(*(sh.ravel() for sh in shifts)):
        d2 = sum((m + o * h - ck) ** 2 for m, o, ck in zip(mesh, off, c))
        cap = np.sqrt(np.clip(r * r - d2, 0.0, None))[None]
        top = np.minimum(hi, cap)
        acc += np.where(top > lo, (top ** (1 + a) - lo ** (1 + a)) / (1 + a), 0.0)
    return acc / len(shifts[0].ravel())


def _cell_gradients(u):
    """Squared gradient components per z-cell on interior footprint nodes.

    Returns ``(dz, dx)`` where ``dz`` has the z-difference per cell and ``dx``
    is the list of central x-differences averaged (trapezoid) over the two
    levels bounding the cell.
    """
    v = u.values
    n = v.ndim - 1
    h = u.grid.base.h
    dzs = np.diff(u.grid.z_levels).reshape((-1,) + (1,) * n)
    inner = (slice(None),) + (slice(1, -1),) * n
    dz = (np.diff(v, axis=0) / dzs)[inner]
    dx = []
    for ax in range(n):
        sl_p = [slice(1, -1)] * n
        sl_m = [slice(1, -1)] * n
        sl_p[ax] = slice(2, None)
        sl_m[ax] = slice(None, -2)
        g = (v[(slice(None),) + tuple(sl_p)] - v[(slice(None),) + tuple(sl_m)]) / (2 * h)
        dx.append(g)
    return dz, dx


def weighted_energy(u, region=None, params=None):
    """Weighted Dirichlet energy ``(d_s / 2) int z^a |grad u|^2`` over a region.

    Parameters
    ----------
    u : ExtensionField
    region : HalfBall or None
        ``None`` integrates over the whole footprint half-box.  For a half-ball
        the z-extent of every column is clipped to the ball, so the energy is
        continuous in the radius.
    params : FractionalParams, optional
        Only ``d_s`` is used; defaults to the value for the grid order.

    Returns
    -------
    float
    """
    from .fractional import d_s as _d_s

    ds = _d_s(u.grid.s) if params is None else params.d_s
    w = _region_weights(u.grid, region)
    dz, dx = _cell_gradients(u)
    grad2 = dz * dz
    for g in dx:
        grad2 = grad2 + 0.5 * (g[1:] ** 2 + g[:-1] ** 2)
    hn = u.grid.base.h ** u.grid.base.dimension
    return float(max(0.5 * ds * hn * np.sum(w * grad2), 0.0))


def radial_deficit(u, center, r_inner, r_outer, params=None):
    """``d_s int z^a |X . grad u|^2 / |X|^(n+2-2s)`` over ``B_outer^+ minus B_inner^+``.

    ``X = (x - center, z)`` is taken at the cell z-midpoint.
    """
    from .fractional import d_s as _d_s

    g = u.grid
    s = g.s
    ds = _d_s(s) if params is None else params.d_s
    n = g.base.dimension
    w = _region_weights(g, HalfBall(center, r_outer)) - _region_weights(g, HalfBall(center, r_inner))
    dz, dx = _cell_gradients(u)
    c = np.broadcast_to(np.asarray(center, dtype=float), (n,))
    inner_axes = [ax[1:-1] for ax in g.axes]
    mesh = np.meshgrid(*inner_axes, indexing="ij")
    zm = 0.5 * (g.z_levels[1:] + g.z_levels[:-1]).reshape((-1,) + (1,) * n)
    radial = dz * zm
    r2 = zm * zm
    for k in range(n):
        xk = (mesh[k] - c[k])[None]
        radial = radial + xk * 0.5 * (dx[k][1:] + dx[k][:-1])
        r2 = r2 + xk * xk
    dens = radial**2 / r2 ** ((n + 2 - 2 * s) / 2)
    hn = g.base.h**n
    return float(ds * hn * np.sum(w * dens))


def dz2s_trace(u, x, params=None, levels=3):
    """Weighted normal trace ``2s lim (u(x,0) - u(x,z)) / z^(2s)``.

    The quotient is formed on the lowest positive levels and extrapolated to
    ``z = 0`` assuming a ``z^2`` correction, which is the leading error once
    ``z`` is far below the lattice spacing.

    Parameters
    ----------
    u : ExtensionField
    x : coordinate of a footprint node
    levels : int
        Number of low levels that must lie below ``diam(Omega) / 100``.
    """
    g = u.grid
    s = g.s
    z = g.z_levels
    cap = 1e-2 * g.base.omega.diameter
    if np.sum((z > 0) & (z < cap)) < levels:
        raise ValueError("insufficient z-levels below diam(omega)/100 for the trace")
    idx = g.base.index_of(x)
    loc = tuple(i - sl.start for i, sl in zip(idx, g.footprint))
    if any(k < 0 or k >= sl.stop - sl.start for k, sl in zip(loc, g.footprint)):
        raise ValueError("x is outside the extension footprint")
    col = u.values[(slice(None),) + loc]
    q = 2 * s * (col[0] - col[1:3]) / z[1:3] ** (2 * s)
    rho2 = (z[2] / z[1]) ** 2
    return float((rho2 * q[0] - q[1]) / (rho2 - 1))
