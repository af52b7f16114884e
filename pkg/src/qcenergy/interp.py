"""Bicubic resampling of complex fields on grids, and map inversion.

Splines interpolate exactly at the grid nodes, so compositions that move
nothing (g = id on the boundary ring) reproduce node values bit for bit.
Masked grids (the disk) are filled outside the mask by repeated
nearest-inside averaging before spline construction; evaluation is only
meaningful at points whose 4x4 spline patch is dominated by inside nodes,
which holds for all compositions used here (images stay inside the domain).
"""

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.spatial import cKDTree

from .errors import InvertibilityError


def _shift2(a, k, axis, fill=0.0):
    out = np.full_like(a, fill)
    if k > 0:
        if axis == 0:
            out[:-k, :] = a[k:, :]
        else:
            out[:, :-k] = a[:, k:]
    else:
        k = -k
        if axis == 0:
            out[k:, :] = a[:-k, :]
        else:
            out[:, k:] = a[:, :-k]
    return out


def fill_outside(values, inside, passes=None):
    """Extend a field past its mask by linear ghost-node extrapolation.

    Each unknown node with two consecutive known neighbors along an axis
    gets 2 v1 - v2 (averaged over the available axes), so a smooth field's
    continuation is reproduced to O(h^2) near the mask edge; remaining
    holes fall back to nearest-neighbor copies.
    """
    if inside.all():
        return values
    v = values.copy()
    known = inside.copy()
    passes = passes if passes is not None else values.shape[0]
    for _ in range(passes):
        if known.all():
            break
        acc = np.zeros_like(v)
        cnt = np.zeros(v.shape, dtype=float)
        acc_lin = np.zeros_like(v)
        cnt_lin = np.zeros(v.shape, dtype=float)
        near = np.zeros_like(v)
        near_cnt = np.zeros(v.shape, dtype=float)
        for ax in (0, 1):
            for k in (1, -1):
                v1, m1 = _shift2(v, k, ax), _shift2(known, k, ax, fill=False)
                v2, m2 = _shift2(v, 2 * k, ax), _shift2(known, 2 * k, ax, fill=False)
                v3, m3 = _shift2(v, 3 * k, ax), _shift2(known, 3 * k, ax, fill=False)
                quad = m1 & m2 & m3
                acc[quad] = acc[quad] + 3 * v1[quad] - 3 * v2[quad] + v3[quad]
                cnt += quad
                lin = m1 & m2
                acc_lin[lin] = acc_lin[lin] + 2 * v1[lin] - v2[lin]
                cnt_lin += lin
                near[m1] = near[m1] + v1[m1]
                near_cnt += m1
        new = ~known & (cnt > 0)
        v[new] = acc[new] / cnt[new]
        new_lin = ~known & (cnt == 0) & (cnt_lin > 0)
        v[new_lin] = acc_lin[new_lin] / cnt_lin[new_lin]
        fallback = ~known & (cnt == 0) & (cnt_lin == 0) & (near_cnt > 0)
        v[fallback] = near[fallback] / near_cnt[fallback]
        known |= new | new_lin | fallback
    v[~known] = 0
    return v


class ComplexBicubic:
    """Bicubic interpolant of a complex field given on a DomainGrid.

    The node array is padded by ghost layers (filled by extrapolation) so
    evaluation slightly past the outermost nodes, e.g. in the annulus
    between the last disk node ring and the unit circle, stays reliable.
    """

    PAD = 3

    def __init__(self, grid, values, fill=True, degree=3):
        v = np.asarray(values, dtype=complex)
        n = grid.n
        p = self.PAD
        vp = np.full((n + 2 * p, n + 2 * p), np.nan + 0j)
        vp[p:-p, p:-p] = v
        mask = np.zeros(vp.shape, dtype=bool)
        mask[p:-p, p:-p] = grid.inside & np.isfinite(v)
        if fill or not mask.all():
            vp = fill_outside(vp, mask)
        xs = grid.zz.real[0, :]
        ys = grid.zz.imag[:, 0]
        xs = np.concatenate([xs[0] + grid.hx * np.arange(-p, 0), xs,
                             xs[-1] + grid.hx * np.arange(1, p + 1)])
        ys = np.concatenate([ys[0] + grid.hy * np.arange(-p, 0), ys,
                             ys[-1] + grid.hy * np.arange(1, p + 1)])
        self.grid = grid
        self._re = RectBivariateSpline(ys, xs, vp.real, kx=degree, ky=degree)
        self._im = RectBivariateSpline(ys, xs, vp.imag, kx=degree, ky=degree)

    def __call__(self, pts):
        pts = np.asarray(pts)
        x, y = pts.real.ravel(), pts.imag.ravel()
        out = self._re(y, x, grid=False) + 1j * self._im(y, x, grid=False)
        return out.reshape(pts.shape)

    def derivative(self, pts, dx=0, dy=0):
        pts = np.asarray(pts)
        x, y = pts.real.ravel(), pts.imag.ravel()
        out = (self._re(y, x, dx=dy, dy=dx, grid=False)
               + 1j * self._im(y, x, dx=dy, dy=dx, grid=False))
        return out.reshape(pts.shape)

    def wirtinger(self, pts):
        fx = self.derivative(pts, dx=1)
        fy = self.derivative(pts, dy=1)
        return (fx - 1j * fy) / 2, (fx + 1j * fy) / 2


def _domain_projector(grid):
    """Project points into the closed domain: preimages of a self-map live there."""
    if grid.kind == "disk":
        def proj(pts):
            r = np.abs(pts)
            over = r > 1.0
            pts[over] = pts[over] / r[over]
            return pts
    else:
        x0, x1, y0, y1 = grid.extents
        def proj(pts):
            return (np.clip(pts.real, x0, x1) + 1j * np.clip(pts.imag, y0, y1))
    return proj


def invert_map(H, targets, newton_iters=40, tol=1e-12):
    """Solve H(xi) = target for each target by damped Newton on a bicubic model.

    Seeds come from the nearest grid node in image space; iterates are
    projected into the closed domain (a self-homeomorphism's preimages
    cannot leave it, and the extrapolated spline is only trustworthy
    there). Returns (xi, residual_sup). Raises InvertibilityError when
    Newton fails to reach a 1e-6-level residual on some node.
    """
    grid = H.grid
    inside = grid.inside
    spline = ComplexBicubic(grid, H.values)
    proj = _domain_projector(grid)
    nodes = grid.zz[inside]
    images = H.values[inside]
    tree = cKDTree(np.column_stack([images.real, images.imag]))

    t = np.asarray(targets)
    shape = t.shape
    t = t.ravel()
    _, idx = tree.query(np.column_stack([t.real, t.imag]))
    xi = nodes[idx].astype(complex)

    for _ in range(newton_iters):
        val = spline(xi)
        res = val - t
        if np.max(np.abs(res)) <= tol:
            break
        hz, hzb = spline.wirtinger(xi)
        # solve hz*d + hzb*conj(d) = -res for the update d
        det = np.abs(hz) ** 2 - np.abs(hzb) ** 2
        det = np.where(np.abs(det) < 1e-300, np.nan, det)
        d = (-np.conj(hz) * res + hzb * np.conj(res)) / det
        bad = ~np.isfinite(d)
        d[bad] = 0
        step = np.abs(d)
        cap = 4 * max(grid.hx, grid.hy)
        scale = np.where(step > cap, cap / np.where(step == 0, 1, step), 1.0)
        xi = proj(xi + scale * d)

    residual = np.max(np.abs(spline(xi) - t))
    if not np.isfinite(residual) or residual > 1e-6:
        raise InvertibilityError(f"map inversion stalled at residual {residual:.3e}")
    return xi.reshape(shape), float(residual)
