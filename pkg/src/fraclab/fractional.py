"""Fractional Laplacian, fractional Dirichlet energy and pairing on a lattice.

Everything here is built from one translation-invariant stencil, the point
kernel ``K(x - y) = |x - y|^(-n-2s) h^n`` with the diagonal dropped, summed
over the truncation box and completed by the analytic exterior tail of the
field's far-field map.  Two evaluation paths are provided: ``"fft"``
(convolution on the lattice) and ``"direct"`` (explicit double sums); they
agree to rounding.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.special import gamma as _G
from scipy.special import zeta

from .grid import FarField
from .tails import far_field_tail, fractional_tail_G

__all__ = [
    "gamma_ns",
    "sigma_ns",
    "d_s",
    "omega_k",
    "FractionalParams",
    "make_params",
    "LatticeConvolver",
    "exterior_terms",
    "frac_laplacian",
    "periodic_frac_laplacian",
    "energy_E",
    "pairing",
]


def gamma_ns(n, s):
    """Normalization constant of the fractional Laplacian, ``s 2^(2s) pi^(-n/2) G((n+2s)/2) / G(1-s)``."""
    return s * 2 ** (2 * s) * np.pi ** (-n / 2) * _G((n + 2 * s) / 2) / _G(1 - s)


def sigma_ns(n, s):
    """Poisson kernel constant, ``pi^(-n/2) G((n+2s)/2) / G(s)``."""
    return np.pi ** (-n / 2) * _G((n + 2 * s) / 2) / _G(s)


def d_s(s):
    """Extension constant ``2^(2s-1) G(s) / G(1-s)``."""
    return 2 ** (2 * s - 1) * _G(s) / _G(1 - s)


def omega_k(k):
    """Volume of the unit ball in dimension ``k`` (``k`` may be fractional)."""
    return np.pi ** (k / 2) / _G(1 + k / 2)


@dataclass(frozen=True)
class FractionalParams:
    """Order, interface width and normalization constants.

    Attributes
    ----------
    n : int
        Dimension.
    s : float
        Order, in (0, 1/2).
    eps : float
        Interface width.
    a : float
        Extension weight exponent ``1 - 2s``.
    gamma_ns, sigma_ns, d_s : float
        Normalization constants.
    """

    n: int
    s: float
    eps: float
    a: float
    gamma_ns: float
    sigma_ns: float
    d_s: float


def make_params(n, s, eps=1.0):
    """Validated :class:`FractionalParams`.

    Examples
    --------
    >>> p = make_params(1, 0.25, 0.1)
    >>> round(p.gamma_ns, 6)
    0.199471
    """
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if not 0 < s < 0.5:
        raise ValueError("s must lie in (0, 1/2)")
    if not eps > 0:
        raise ValueError("eps must be positive")
    return FractionalParams(
        n=int(n),
        s=float(s),
        eps=float(eps),
        a=1.0 - 2.0 * s,
        gamma_ns=float(gamma_ns(n, s)),
        sigma_ns=float(sigma_ns(n, s)),
        d_s=float(d_s(s)),
    )


# ---------------------------------------------------------------------------
# Lattice sums


def _kernel_on_offsets(offsets, h, s):
    """Point kernel ``|k h|^(-n-2s) h^n`` on integer offset arrays, zero at the origin."""
    n = len(offsets)
    r2 = sum(o.astype(float) ** 2 for o in offsets)
    out = np.zeros(r2.shape)
    nz = r2 > 0
    out[nz] = r2[nz] ** (-(n + 2 * s) / 2) * h ** (-2 * s)
    return out


class LatticeConvolver:
    """Sums ``S(x) = sum_{y in box, y != x} u(y) K(x - y)`` for ``x`` in a target index box.

    The kernel spectrum is computed once, so several fields can be summed at
    the cost of one forward and one inverse FFT each.

    Parameters
    ----------
    source_shape : tuple of int
        Shape of the source array (usually the full grid).
    targets : tuple of slice
        Target index box, in source coordinates.
    h, s : float
        Spacing and order.
    source_offset : tuple of int, optional
        Index of the source array origin in grid coordinates.
    """

    def __init__(self, source_shape, targets, h, s, source_offset=None):
        n = len(source_shape)
        source_offset = (0,) * n if source_offset is None else source_offset
        self.source_shape = tuple(source_shape)
        self.target_shape = tuple(t.stop - t.start for t in targets)
        klen = [T + L - 1 for T, L in zip(self.target_shape, source_shape)]
        ranges = [
            np.arange(t.start - o - (L - 1), t.start - o - (L - 1) + k)
            for t, o, L, k in zip(targets, source_offset, source_shape, klen)
        ]
        offs = np.meshgrid(*ranges, indexing="ij")
        kern = _kernel_on_offsets(offs, h, s)
        self.fshape = [sfft.next_fast_len(k + L - 1, real=True) for k, L in zip(klen, source_shape)]
        self.kspec = sfft.rfftn(kern, self.fshape)
        self.slices = tuple(slice(L - 1, L - 1 + T) for L, T in zip(source_shape, self.target_shape))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != self.source_shape:
            raise ValueError("source shape mismatch")
        out = sfft.irfftn(sfft.rfftn(u, self.fshape) * self.kspec, self.fshape)
        return out[self.slices]


def _direct_sum(values, grid_shape, target_idx, h, s, chunk_bytes=4e7):
    """Explicit ``sum_{y != x} u(y) K(x - y)`` at integer target indices ``(m, n)``."""
    n = len(grid_shape)
    src = np.stack([np.ravel(a) for a in np.indices(grid_shape)], axis=-1)
    flat = np.ravel(values)
    m = target_idx.shape[0]
    step = max(1, int(chunk_bytes / (8 * src.shape[0] * (n + 1))))
    out = np.empty(m)
    for i in range(0, m, step):
        t = target_idx[i:i + step]
        offs = [t[:, None, a] - src[None, :, a] for a in range(n)]
        out[i:i + step] = _kernel_on_offsets(offs, h, s) @ flat
    return out


def exterior_terms(grid, s, points, tail):
    """Tail masses beyond the box at target points.

    Returns ``(M, T, Q)`` with ``M = int K``, ``T = int g K`` and ``Q = int g^2 K``
    over the exterior of the box, where ``g`` is the far-field map ``tail``.
    """
    G = fractional_tail_G(s)
    one = FarField.constant(1.0, grid.dimension)
    M = far_field_tail(points, grid.edge, one, G)
    T = far_field_tail(points, grid.edge, tail, G)
    Q = far_field_tail(points, grid.edge, tail * tail, G)
    return M, T, Q


def _resolve_targets(grid, at):
    """Turn ``at`` into a boolean mask; also report whether a scalar was requested."""
    if at is None:
        return grid.interior_mask, False
    at_arr = np.asarray(at)
    if at_arr.dtype == bool:
        if at_arr.shape != grid.shape:
            raise ValueError("mask shape mismatch")
        return at_arr, False
    pts = np.atleast_1d(at_arr.astype(float))
    scalar = pts.ndim == 1 and (grid.dimension == 1 and pts.size == 1 or grid.dimension == 2 and pts.size == 2)
    pts = pts.reshape(-1, grid.dimension)
    mask = np.zeros(grid.shape, dtype=bool)
    for p in pts:
        mask[grid.index_of(p)] = True
    if mask.sum() != pts.shape[0]:
        raise ValueError("duplicate target nodes")
    return mask, scalar


def _sums(grid, s, fields, mask, method):
    """Box lattice sums of each field at the nodes of ``mask`` (C order)."""
    if method == "fft":
        sl = grid.mask_bbox(mask)
        conv = LatticeConvolver(grid.shape, sl, grid.h, s)
        sub = mask[sl]
        return [conv(f)[sub] for f in fields]
    if method == "direct":
        idx = np.argwhere(mask)
        return [_direct_sum(f, grid.shape, idx, grid.h, s) for f in fields]
    raise ValueError("method must be 'fft' or 'direct'")


def frac_laplacian(v, params, at=None, method="fft"):
    """Fractional Laplacian of a field at grid nodes.

    ``gamma [ sum_{y != x} (v(x) - v(y)) K(x - y) + tail ]``, where the tail is
    the exact exterior integral of ``v(x) - g(y)`` for the far-field map ``g``.

    Parameters
    ----------
    v : ScalarField
    params : FractionalParams
    at : ndarray of bool, float or ndarray of float, optional
        Target nodes: a mask, one coordinate, or an ``(m, n)`` array of
        coordinates.  Defaults to the interior nodes.
    method : {"fft", "direct"}

    Returns
    -------
    float or ndarray
        Values in C order of the target mask.
    """
    grid = v.grid
    mask, scalar = _resolve_targets(grid, at)
    ones = np.ones(grid.shape)
    S1, Sv = _sums(grid, params.s, [ones, v.values], mask, method)
    M, T, _ = exterior_terms(grid, params.s, grid.points(mask), v.tail)
    vx = v.values[mask]
    out = params.gamma_ns * (vx * (S1 + M) - Sv - T)
    return float(out[0]) if scalar else out


def periodic_frac_laplacian(values, h, params):
    """Fractional Laplacian of a 1D periodic sample ``values`` (period ``len(values) h``).

    The point kernel is summed over all periodic images in closed form via
    the Hurwitz zeta function, then applied by circular convolution.
    """
    values = np.asarray(values, dtype=float)
    M = values.size
    s = params.s
    j = np.arange(M, dtype=float)
    q = 1 + 2 * s
    kper = np.empty(M)
    kper[0] = 2 * zeta(q)
    kper[1:] = zeta(q, j[1:] / M) + zeta(q, 1 - j[1:] / M)
    kper[1:] *= M ** (-q)
    kper[0] *= M ** (-q)
    kper *= h ** (-2 * s)
    mass = kper.sum()
    conv = np.real(np.fft.ifft(np.fft.fft(values) * np.fft.fft(kper)))
    return params.gamma_ns * (mass * values - conv)


def _energy_parts(v, params, omega, method):
    """Per-node interaction sums ``(A_inside, A_outside)`` over ``x in omega``."""
    grid = v.grid
    s = params.s
    u = v.values
    w = omega.astype(float)
    ones = np.ones(grid.shape)
    S = _sums(grid, s, [ones, u, u * u, w, u * w, u * u * w], omega, method)
    S1, Sv, Sv2, Sw1, Swv, Swv2 = S
    M, T, Q = exterior_terms(grid, s, grid.points(omega), v.tail)
    x = u[omega]
    inside = x * x * Sw1 - 2 * x * Swv + Swv2
    outside = x * x * (S1 - Sw1 + M) - 2 * x * (Sv - Swv + T) + (Sv2 - Swv2 + Q)
    return inside, outside


def energy_E(v, params, omega=None, method="fft"):
    """Fractional Dirichlet energy of ``v`` localized to ``omega``.

    ``(gamma/4) sum_{omega x omega} + (gamma/2) sum_{omega x omega^c}`` of
    ``|v(x) - v(y)|^2 |x - y|^(-n-2s) h^(2n)`` with the diagonal omitted and the
    exterior of the box treated analytically.

    Parameters
    ----------
    v : ScalarField
    params : FractionalParams
    omega : ndarray of bool, optional
        Localization set; defaults to the grid interior.
    method : {"fft", "direct"}

    Returns
    -------
    float
        Nonnegative energy (rounding below zero is clipped).
    """
    omega = v.grid.interior_mask if omega is None else np.asarray(omega, dtype=bool)
    if not omega.any():
        return 0.0
    inside, outside = _energy_parts(v, params, omega, method)
    hn = v.grid.h ** v.grid.dimension
    val = params.gamma_ns * hn * (0.25 * inside.sum() + 0.5 * outside.sum())
    return max(float(val), 0.0)


def pairing(v, phi, params, omega=None, method="fft"):
    """Symmetric bilinear form of the fractional Laplacian on ``omega``.

    ``(gamma/2) [sum_{omega x omega} + 2 sum_{omega x omega^c}] (v(x) - v(y)) (phi(x) - phi(y)) K``.
    The test field ``phi`` must vanish outside ``omega`` (including its far field).
    """
    grid = v.grid
    omega = grid.interior_mask if omega is None else np.asarray(omega, dtype=bool)
    if np.any(phi.values[~omega] != 0) or phi.tail.max_abs() != 0:
        raise ValueError("phi must vanish outside omega")
    s = params.s
    u, p = v.values, phi.values
    w = omega.astype(float)
    ones = np.ones(grid.shape)
    S1, Sv, Sw1, Swv, Swp = _sums(grid, s, [ones, u, w, u * w, p * w], omega, method)
    M, T, _ = exterior_terms(grid, s, grid.points(omega), v.tail)
    x, y = u[omega], p[omega]
    A = 2 * np.sum(x * y * Sw1) - np.sum(x * Swp) - np.sum(y * Swv)
    B = np.sum(y * (x * (S1 - Sw1 + M) - (Sv - Swv + T)))
    hn = grid.h ** grid.dimension
    return float(params.gamma_ns * hn * (0.5 * A + B))
