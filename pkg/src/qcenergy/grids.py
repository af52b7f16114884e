"""Uniform Cartesian grids with an inside-mask.

Nodes are cell-centered: axis i hosts n cells of width h and the node sits
at the cell midpoint, so a rectangle's masked area is exact and the disk
mask never contains the origin or points exactly on the unit circle (for
even n). Node ordering is row-major (y-major), fixed once at construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

DISK = "disk"
HALF_PLANE = "half-plane"
RECTANGLE = "rectangle"

_KINDS = (DISK, HALF_PLANE, RECTANGLE)


@dataclass(frozen=True)
class DomainGrid:
    """Discretized integration domain.

    Attributes
    ----------
    kind : one of "disk", "half-plane", "rectangle"
    n : nodes per axis (nx = ny = n)
    extents : (x0, x1, y0, y1) of the covered rectangle
    zz : complex node coordinates, shape (n, n), row j = y index
    inside : boolean mask of nodes belonging to the domain
    cell_area : hx * hy
    """

    kind: str
    n: int
    extents: tuple
    zz: np.ndarray = field(repr=False)
    inside: np.ndarray = field(repr=False)
    hx: float
    hy: float

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def area(self):
        return float(self.inside.sum()) * self.cell_area

    @property
    def x(self):
        return self.zz.real

    @property
    def y(self):
        return self.zz.imag

    def interior_mask(self, order=4):
        """Inside nodes whose full centered stencil of the given order is inside.

        Nodes that are inside but fail this are the boundary-adjacent ones.
        """
        reach = order // 2
        m = self.inside
        ok = m.copy()
        for ax in (0, 1):
            for k in range(1, reach + 1):
                ok &= _shift_mask(m, k, ax) & _shift_mask(m, -k, ax)
        return ok

    def boundary_mask(self):
        """Inside nodes with at least one 4-neighbor outside (or off the array)."""
        m = self.inside
        nb = _shift_mask(m, 1, 0) & _shift_mask(m, -1, 0) & _shift_mask(m, 1, 1) & _shift_mask(m, -1, 1)
        return m & ~nb

    def boundary_nodes(self):
        """Complex coordinates of the boundary-mask nodes, row-major order."""
        return self.zz[self.boundary_mask()]

    def with_mask(self, new_inside):
        """Derived grid with the inside-mask intersected by ``new_inside``."""
        return DomainGrid(self.kind, self.n, self.extents,
                          self.zz, self.inside & new_inside, self.hx, self.hy)


def _shift_mask(m, k, axis):
    out = np.zeros_like(m)
    if k > 0:
        if axis == 0:
            out[:-k, :] = m[k:, :]
        else:
            out[:, :-k] = m[:, k:]
    else:
        k = -k
        if axis == 0:
            out[k:, :] = m[:-k, :]
        else:
            out[:, k:] = m[:, :-k]
    return out


def build_grid(kind, n, extents=None):
    """Build a DomainGrid.

    kind="disk": the unit disk masked out of [-1,1]^2 (extents ignored).
    kind="rectangle": extents (x0, x1, y0, y1), default the unit square.
    kind="half-plane": extents (X, y_min, Y) covering [-X,X] x [y_min,Y];
    y_min > 0 keeps singular weights like Im^-2 finite on the grid.
    """
    if kind not in _KINDS:
        raise ConfigurationError(f"unknown domain kind {kind!r}")
    if n < 8:
        raise ConfigurationError(f"resolution {n} < 8")

    if kind == DISK:
        x0, x1, y0, y1 = -1.0, 1.0, -1.0, 1.0
    elif kind == RECTANGLE:
        x0, x1, y0, y1 = extents if extents is not None else (0.0, 1.0, 0.0, 1.0)
        if not (x1 > x0 and y1 > y0):
            raise ConfigurationError(f"rectangle extents {extents} are empty")
    else:
        X, y_min, Y = extents if extents is not None else (20.0, 1e-3, 20.0)
        if X <= 0:
            raise ConfigurationError(f"half-plane half-width X={X} must be positive")
        if y_min < 0 or y_min >= Y:
            raise ConfigurationError(f"half-plane band [{y_min}, {Y}] is empty or below the axis")
        x0, x1, y0, y1 = -X, X, y_min, Y

    hx = (x1 - x0) / n
    hy = (y1 - y0) / n
    xs = x0 + (np.arange(n) + 0.5) * hx
    ys = y0 + (np.arange(n) + 0.5) * hy
    X_, Y_ = np.meshgrid(xs, ys)      # shape (n, n), row index = y
    zz = X_ + 1j * Y_

    if kind == DISK:
        inside = np.abs(zz) < 1.0
    else:
        inside = np.ones_like(X_, dtype=bool)

    zz.setflags(write=False)
    inside.setflags(write=False)
    return DomainGrid(kind, n, (x0, x1, y0, y1), zz, inside, hx, hy)


def disk_grid(n):
    return build_grid(DISK, n)


def rectangle_grid(n, extents=(0.0, 1.0, 0.0, 1.0)):
    return build_grid(RECTANGLE, n, extents)


def half_plane_grid(n, X=20.0, y_min=1e-3, Y=20.0):
    return build_grid(HALF_PLANE, n, (X, y_min, Y))
