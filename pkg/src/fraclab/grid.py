"""Uniform truncated lattices with an explicit exterior model.

A grid covers the box ``[-R, R]^n`` with nodes ``x = k h``.  Beyond the box a
field is replaced by a 0-homogeneous far-field map (:class:`FarField`), so
every nonlocal integral over the exterior can be evaluated analytically or by
a one-dimensional radial quadrature.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

__all__ = [
    "Interval",
    "Box",
    "Disc",
    "FarField",
    "GridSpec",
    "ScalarField",
    "build_grid",
    "tubular_neighborhood",
    "box_counting_dimension",
]


# ---------------------------------------------------------------------------
# Omega descriptors


@dataclass(frozen=True)
class Interval:
    """Open interval ``(a, b)`` of the real line."""

    a: float
    b: float
    dimension: int = field(default=1, init=False)

    def contains(self, coords):
        (x,) = coords
        return (x > self.a) & (x < self.b)

    @property
    def diameter(self):
        return self.b - self.a

    @property
    def bounds(self):
        return np.array([[self.a, self.b]])


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box ``prod_i (lo_i, hi_i)`` in the plane."""

    lo: tuple
    hi: tuple
    dimension: int = field(default=2, init=False)

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(t) for t in self.lo))
        object.__setattr__(self, "hi", tuple(float(t) for t in self.hi))

    def contains(self, coords):
        x1, x2 = coords
        return (
            (x1 > self.lo[0]) & (x1 < self.hi[0]) & (x2 > self.lo[1]) & (x2 < self.hi[1])
        )

    @property
    def diameter(self):
        return float(np.hypot(self.hi[0] - self.lo[0], self.hi[1] - self.lo[1]))

    @property
    def bounds(self):
        return np.array([[self.lo[0], self.hi[0]], [self.lo[1], self.hi[1]]])


@dataclass(frozen=True)
class Disc:
    """Open disc of given center and radius in the plane."""

    center: tuple
    radius: float
    dimension: int = field(default=2, init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(t) for t in self.center))

    def contains(self, coords):
        x1, x2 = coords
        return (x1 - self.center[0]) ** 2 + (x2 - self.center[1]) ** 2 < self.radius**2

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def bounds(self):
        c, r = self.center, self.radius
        return np.array([[c[0] - r, c[0] + r], [c[1] - r, c[1] + r]])


# ---------------------------------------------------------------------------
# Far-field maps


@dataclass(frozen=True)
class FarField:
    """A 0-homogeneous exterior map ``g(y) = sum_j c_j prod_i sign(a_ij . y)``.

    Each term is a pair ``(c, normals)`` with ``normals`` a tuple of vectors.
    A term with no normals is a constant.  Constants, two-sided 1D tails,
    half-spaces and the cross ``{x1 x2 > 0}`` are all of this form, and the
    class is closed under products, which is what the energy tails need.

    Parameters
    ----------
    dimension : int
        Ambient dimension, 1 or 2.
    terms : tuple
        Tuple of ``(coefficient, normals)`` pairs.
    """

    dimension: int
    terms: tuple

    def __post_init__(self):
        clean = []
        for c, normals in self.terms:
            normals = tuple(tuple(float(t) for t in a) for a in normals)
            for a in normals:
                if len(a) != self.dimension or not any(a):
                    raise ValueError("normals must be nonzero vectors of the grid dimension")
            clean.append((float(c), normals))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def constant(cls, value, dimension):
        return cls(dimension, ((value, ()),))

    @classmethod
    def sides(cls, left, right):
        """1D tail equal to ``left`` on the negative and ``right`` on the positive side."""
        return cls(1, ((0.5 * (left + right), ()), (0.5 * (right - left), ((1.0,),))))

    @classmethod
    def halfspace(cls, normal, inside=1.0, outside=-1.0):
        normal = tuple(np.atleast_1d(np.asarray(normal, dtype=float)))
        return cls(
            len(normal),
            ((0.5 * (inside + outside), ()), (0.5 * (inside - outside), (normal,))),
        )

    @classmethod
    def cross(cls, inside=1.0, outside=-1.0):
        """Map of the cross ``{x1 x2 > 0}`` with the given phase values."""
        return cls(
            2,
            (
                (0.5 * (inside + outside), ()),
                (0.5 * (inside - outside), ((1.0, 0.0), (0.0, 1.0))),
            ),
        )

    def __call__(self, points):
        """Evaluate at points of shape ``(..., n)``."""
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1])
        for c, normals in self.terms:
            val = np.full(points.shape[:-1], c)
            for a in normals:
                val = val * np.sign(points @ np.asarray(a))
            out = out + val
        return out

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return FarField(self.dimension, tuple((c * other, nm) for c, nm in self.terms))
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        terms = {}
        for c1, n1 in self.terms:
            for c2, n2 in other.terms:
                # sign(a.y)^2 = 1 away from a null set, so repeated normals cancel
                nm = list(n1)
                for a in n2:
                    if a in nm:
                        nm.remove(a)
                    else:
                        nm.append(a)
                key = tuple(sorted(nm))
                terms[key] = terms.get(key, 0.0) + c1 * c2
        return FarField(self.dimension, tuple((c, k) for k, c in terms.items() if c != 0.0))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @property
    def is_constant(self):
        return all(len(nm) == 0 for _, nm in self.terms)

    def max_abs(self):
        return float(sum(abs(c) for c, _ in self.terms))


def _as_far_field(tail_values, dimension):
    if isinstance(tail_values, FarField):
        if tail_values.dimension != dimension:
            raise ValueError("tail dimension does not match grid dimension")
        return tail_values
    if tail_values is None:
        return FarField.constant(0.0, dimension)
    if np.isscalar(tail_values):
        return FarField.constant(float(tail_values), dimension)
    vals = tuple(float(t) for t in tail_values)
    if dimension == 1 and len(vals) == 2:
        return FarField.sides(*vals)
    raise ValueError("tail_values must be a number, a (left, right) pair in 1D, or a FarField")


# ---------------------------------------------------------------------------
# Grid


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice on ``[-R, R]^n`` with an interior set Omega and a far field.

    Use :func:`build_grid` to construct validated instances.

    Attributes
    ----------
    dimension : int
    h : float
        Lattice spacing.
    omega : Interval, Box or Disc
        The open set Omega; a node is interior iff its center lies in Omega.
    R_trunc : float
        Truncation radius.
    tail : FarField
        Exterior values beyond the box.
    """

    dimension: int
    h: float
    omega: object
    R_trunc: float
    tail: FarField

    @cached_property
    def N(self):
        return int(np.floor(self.R_trunc / self.h + 1e-9))

    @property
    def shape(self):
        return (2 * self.N + 1,) * self.dimension

    @property
    def n_nodes(self):
        return (2 * self.N + 1) ** self.dimension

    @property
    def edge(self):
        """Half-width of the box covered by the node cells."""
        return (self.N + 0.5) * self.h

    @cached_property
    def axis(self):
        return np.arange(-self.N, self.N + 1) * self.h

    @cached_property
    def coords(self):
        """Tuple of coordinate arrays of shape :attr:`shape` (``ij`` indexing)."""
        if self.dimension == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    def points(self, mask=None):
        """Node coordinates as an ``(m, n)`` array, optionally restricted to ``mask``."""
        cols = [c if mask is None else c[mask] for c in self.coords]
        return np.stack([np.ravel(c) for c in cols], axis=-1)

    @cached_property
    def interior_mask(self):
        return self.omega.contains(self.coords)

    @property
    def n_interior(self):
        return int(self.interior_mask.sum())

    def index_of(self, x):
        """Lattice index tuple of the node at coordinate ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.rint(x / self.h).astype(int)
        if np.any(np.abs(k * self.h - x) > 1e-9 * max(self.h, 1.0)) or np.any(np.abs(k) > self.N):
            raise ValueError(f"{x} is not a grid node")
        return tuple(k + self.N)

    def mask_bbox(self, mask):
        """Slices of the smallest index box containing ``mask``."""
        sl = []
        for ax in range(self.dimension):
            other = tuple(a for a in range(self.dimension) if a != ax)
            hit = np.flatnonzero(mask.any(axis=other) if other else mask)
            if hit.size == 0:
                raise ValueError("empty mask")
            sl.append(slice(int(hit[0]), int(hit[-1]) + 1))
        return tuple(sl)


def build_grid(dimension, h, omega, R_trunc, tail_values=None):
    """Build a validated :class:`GridSpec`.

    Parameters
    ----------
    dimension : {1, 2}
    h : float
        Spacing, must be positive.
    omega : Interval, Box or Disc
    R_trunc : float
        Truncation radius, at least four times the diameter of Omega.
    tail_values : float, pair or FarField, optional
        Exterior values: a constant, a ``(left, right)`` pair in 1D or a far-field map.

    Returns
    -------
    GridSpec

    Examples
    --------
    >>> g = build_grid(1, 0.01, Interval(-1, 1), 8, (-1, 1))
    >>> g.n_nodes, g.n_interior
    (1601, 199)
    """
    if dimension not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    if not h > 0:
        raise ValueError("nonpositive spacing")
    if getattr(omega, "dimension", None) != dimension:
        raise ValueError("omega descriptor does not match the grid dimension")
    if not np.isfinite(R_trunc) or R_trunc <= 0:
        raise ValueError("truncation radius must be positive")
    if R_trunc < 4 * omega.diameter - 1e-12:
        raise ValueError("truncation radius must be at least 4 x diam(omega)")
    if np.abs(omega.bounds).max() >= R_trunc - h:
        raise ValueError("omega touches the truncation boundary")
    grid = GridSpec(dimension, float(h), omega, float(R_trunc), _as_far_field(tail_values, dimension))
    mask = grid.interior_mask
    if not mask.any():
        raise ValueError("omega contains no grid node")
    _, ncomp = ndimage.label(mask)
    if ncomp != 1:
        raise ValueError("interior nodes are not connected")
    return grid


# ---------------------------------------------------------------------------
# Fields


class ScalarField:
    """Real values on every node of a grid, with a far-field map beyond the box.

    Parameters
    ----------
    grid : GridSpec
    values : array_like
        Array of shape ``grid.shape``.
    tail : FarField, optional
        Far-field map; defaults to ``grid.tail``.
    """

    def __init__(self, grid, values, tail=None):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"expected values of shape {grid.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values
        self.tail = grid.tail if tail is None else _as_far_field(tail, grid.dimension)

    @classmethod
    def from_function(cls, grid, fn, tail=None):
        """Sample ``fn(*coords)`` on the grid."""
        return cls(grid, np.broadcast_to(fn(*grid.coords), grid.shape), tail)

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, float(value)), FarField.constant(value, grid.dimension))

    def with_values(self, values):
        return ScalarField(self.grid, values, self.tail)

    def __repr__(self):
        return f"ScalarField(shape={self.values.shape}, min={self.values.min():.4g}, max={self.values.max():.4g})"


# ---------------------------------------------------------------------------
# Node-set utilities


def tubular_neighborhood(points, r, grid):
    """Nodes within Euclidean distance ``< r`` of a node set.

    Parameters
    ----------
    points : ndarray of bool
        Node set as a mask of shape ``grid.shape``.
    r : float
        Radius, nonnegative.
    grid : GridSpec

    Returns
    -------
    ndarray of bool
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    points = np.asarray(points, dtype=bool)
    if not points.any() or r == 0:
        return np.zeros(grid.shape, dtype=bool)
    dist = ndimage.distance_transform_edt(~points)
    return dist < (r / grid.h) * (1 - 1e-12)


def box_counting_dimension(points, scales):
    """Box-counting dimension of a finite point set.

    Parameters
    ----------
    points : ndarray of shape (m, n)
        Point coordinates.
    scales : sequence of float
        Box sizes; at least 3, spanning at least one decade.

    Returns
    -------
    float
        Least-squares slope of ``log N(r)`` against ``log(1/r)``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("point set is empty")
    scales = np.asarray(scales, dtype=float)
    if scales.size < 3 or np.any(scales <= 0) or scales.max() / scales.min() < 10 - 1e-9:
        raise ValueError("need at least 3 positive scales spanning one decade")
    # minimal cover over shifted box grids; a single anchored grid miscounts
    # lines that run through box corners
    n = points.shape[1]
    shifts = np.stack(np.meshgrid(*([np.arange(4) / 4] * n), indexing="ij"), -1).reshape(-1, n)
    counts = []
    for r in scales:
        best = None
        for sh in shifts:
            idx = np.floor(points / r + sh).astype(np.int64)
            idx -= idx.min(axis=0)
            key = np.ravel_multi_index(idx.T, tuple(idx.max(axis=0) + 1))
            c = np.unique(key).size
            best = c if best is None else min(best, c)
        counts.append(best)
    slope = np.polyfit(np.log(1.0 / scales), np.log(counts), 1)[0]
    return float(slope)
