"""Exterior integrals beyond the truncation box.

For a radial kernel ``k(|x - y|)`` the only ingredient needed is the radial
tail ``G(rho) = int_rho^inf k(r) r^(n-1) dr`` in closed form.  In 1D the
exterior of the box is two half-lines and the integral is exact.  In 2D we
integrate in polar coordinates around the target: exactly in the radius
(a far-field term changes sign at most once per normal along a ray), and by
tanh-sinh quadrature in the angle on arcs split at every kink or cusp of the
integrand (box corners, sign lines meeting the box, rays parallel to a sign
line).
"""

import numpy as np
from scipy.special import betainc

__all__ = [
    "fractional_tail_G",
    "poisson_tail_G",
    "far_field_tail",
]

_TS_CACHE = {}


def _tanh_sinh(n):
    """Tanh-sinh nodes and weights on [-1, 1]; robust to endpoint singularities."""
    if n not in _TS_CACHE:
        t = np.linspace(-3.2, 3.2, n)
        step = t[1] - t[0]
        u = 0.5 * np.pi * np.sinh(t)
        x = np.tanh(u)
        w = step * 0.5 * np.pi * np.cosh(t) / np.cosh(u) ** 2
        _TS_CACHE[n] = (x, w)
    return _TS_CACHE[n]


def fractional_tail_G(s):
    """Radial tail of ``|y|^(-n-2s)``: ``G(rho) = rho^(-2s) / (2s)`` for n = 1, 2."""

    def G(rho):
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(rho), 0.0, np.power(rho, -2 * s) / (2 * s))

    return G


def poisson_tail_G(n, s, sigma, z):
    """Radial tail of the Poisson kernel at height ``z``.

    In 1D this is ``I_T(s, 1/2) / 2`` with ``T = z^2 / (rho^2 + z^2)``, in 2D it is
    ``sigma z^(2s) (rho^2 + z^2)^(-s) / (2s)``.
    """
    if n == 1:

        def G(rho):
            T = z * z / (np.square(np.where(np.isinf(rho), 0.0, rho)) + z * z)
            return np.where(np.isinf(rho), 0.0, 0.5 * betainc(s, 0.5, T))

    else:

        def G(rho):
            r2 = np.square(np.where(np.isinf(rho), 1.0, rho))
            return np.where(np.isinf(rho), 0.0, sigma * z ** (2 * s) * (r2 + z * z) ** (-s) / (2 * s))

    return G


def far_field_tail(points, edge, far, G, n_quad=41):
    """Integral of ``far(y) k(|x - y|)`` over ``y`` outside ``[-edge, edge]^n``.

    Parameters
    ----------
    points : ndarray of shape (m, n)
        Targets inside the box.
    edge : float
        Half-width of the box.
    far : FarField
        Far-field map.
    G : callable
        Radial tail of the kernel (see :func:`fractional_tail_G`).
    n_quad : int
        Angular quadrature nodes per arc (2D only).

    Returns
    -------
    ndarray of shape (m,)
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if far.dimension == 1:
        x = points[:, 0]
        right = G(edge - x)
        left = G(edge + x)
        out = np.zeros_like(x)
        for c, normals in far.terms:
            sr = np.prod([np.sign(a[0]) for a in normals]) if normals else 1.0
            sl = np.prod([np.sign(-a[0]) for a in normals]) if normals else 1.0
            out += c * (sr * right + sl * left)
        return out
    return _tail_2d(points, edge, far, G, n_quad)


def _break_angles(points, edge, far):
    e = edge
    anchors = [(e, e), (-e, e), (-e, -e), (e, -e)]
    for _, normals in far.terms:
        for a in normals:
            t = np.array([-a[1], a[0]])
            t = e * t / np.abs(t).max()
            anchors += [tuple(t), tuple(-t)]
    anchors = np.unique(np.round(np.array(anchors), 14), axis=0)
    ang = np.arctan2(anchors[None, :, 1] - points[:, None, 1], anchors[None, :, 0] - points[:, None, 0])
    fixed = [np.arctan2(a[0], -a[1]) + k * np.pi for _, nm in far.terms for a in nm for k in (0, 1)]
    if fixed:
        ang = np.concatenate([ang, np.broadcast_to(np.array(fixed), (points.shape[0], len(fixed)))], axis=1)
    ang = np.sort(np.mod(ang, 2 * np.pi), axis=1)
    return np.concatenate([ang, ang[:, :1] + 2 * np.pi], axis=1)


def _tail_2d(points, edge, far, G, n_quad, chunk=2048):
    xi, wi = _tanh_sinh(n_quad)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], chunk):
        p = points[start:start + chunk]
        brk = _break_angles(p, edge, far)
        lo, hi = brk[:, :-1], brk[:, 1:]
        half = 0.5 * (hi - lo)
        theta = (0.5 * (hi + lo))[..., None] + half[..., None] * xi
        weight = half[..., None] * wi
        ex, ey = np.cos(theta), np.sin(theta)
        px = p[:, 0][:, None, None]
        py = p[:, 1][:, None, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            tx = np.where(ex > 0, (edge - px) / ex, np.where(ex < 0, (-edge - px) / ex, np.inf))
            ty = np.where(ey > 0, (edge - py) / ey, np.where(ey < 0, (-edge - py) / ey, np.inf))
        rb = np.minimum(tx, ty)
        Gb = G(rb)
        total = np.zeros_like(rb)
        for c, normals in far.terms:
            if not normals:
                total += c * Gb
                continue
            cuts = []
            for a in normals:
                dot_p = a[0] * px + a[1] * py
                dot_e = a[0] * ex + a[1] * ey
                with np.errstate(divide="ignore", invalid="ignore"):
                    r = -dot_p / dot_e
                cuts.append(np.where((r > rb) & np.isfinite(r), r, np.inf))
            cuts = np.sort(np.stack(cuts, axis=-1), axis=-1)
            bounds = np.concatenate([rb[..., None], cuts, np.full(rb.shape + (1,), np.inf)], axis=-1)
            acc = np.zeros_like(rb)
            for k in range(bounds.shape[-1] - 1):
                a_, b_ = bounds[..., k], bounds[..., k + 1]
                valid = a_ < b_
                a_safe = np.where(np.isinf(a_), 0.0, a_)
                mid = np.where(np.isinf(b_), 2 * a_safe + 1.0, 0.5 * (a_safe + np.where(np.isinf(b_), 0.0, b_)))
                sgn = np.ones_like(rb)
                for a in normals:
                    sgn = sgn * np.sign(a[0] * (px + mid * ex) + a[1] * (py + mid * ey))
                piece = G(np.where(valid, a_, np.inf)) - G(np.where(valid, b_, np.inf))
                acc += np.where(valid, sgn * piece, 0.0)
            total += c * acc
        out[start:start + chunk] = np.sum(total * weight, axis=(1, 2))
    return out
