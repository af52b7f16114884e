"""The Cayley map between the unit disk and the upper half-plane.

psi(z) = -i (z-1)/(z+1),   psi(1) = 0, psi(0) = i, psi(-1) = infinity
psi^{-1}(w) = (i - w)/(i + w)
psi'(z) = -2i/(z+1)^2

Weight pullback, conjugation of half-plane mappings to the disk, and
transport of quadratic differentials Phi -> Phi(psi) (psi')^2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PoleError, TruncationError
from .fields import MappingField
from .hopf import QuadraticDifferentialField
from .interp import ComplexBicubic
from .weights import WeightField

_POLE_EPS = 1e-12


def cayley(z):
    """Forward Cayley map, disk -> upper half-plane."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z + 1) < _POLE_EPS):
        raise PoleError("cayley evaluated at the pole z = -1")
    out = -1j * (z - 1) / (z + 1)
    return complex(out) if out.ndim == 0 else out


def cayley_inv(w):
    """Inverse Cayley map, upper half-plane -> disk."""
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w + 1j) < _POLE_EPS):
        raise PoleError("cayley_inv evaluated at the pole w = -i")
    out = (1j - w) / (1j + w)
    return complex(out) if out.ndim == 0 else out


def cayley_derivative(z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z + 1) < _POLE_EPS):
        raise PoleError("cayley' evaluated at the pole z = -1")
    out = -2j / (z + 1) ** 2
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CayleyMap:
    """Bundled forward/inverse/derivative, convenient for passing around."""

    def __call__(self, z):
        return cayley(z)

    def inverse(self, w):
        return cayley_inv(w)

    def derivative(self, z):
        return cayley_derivative(z)


def pullback_weight(eta):
    """Pull a half-plane weight back to the disk: lambda(w) = eta(psi(w)) |psi'(w)|^2.

    eta = 1 gives 4/|w+1|^4; eta = Im^-2 gives 4 (1-|w|^2)^-2, four times
    the disk hyperbolic element (the factor is the curvature-convention
    mismatch between Im^-2 and (1-|w|^2)^-2).
    """
    def fn(w):
        w = np.asarray(w, dtype=complex)
        return eta.fn(cayley(w)) * np.abs(cayley_derivative(w)) ** 2

    def domain(w):
        w = np.asarray(w, dtype=complex)
        ok = np.abs(w + 1) > _POLE_EPS
        out = np.zeros(np.shape(w), dtype=bool)
        if ok.any():
            out[ok] = eta.domain(-1j * (w[ok] - 1) / (w[ok] + 1))
        return out

    return WeightField(f"cayley-pullback({eta.kind})", fn, domain)


@dataclass(frozen=True)
class ConjugationResult:
    field: MappingField
    masked_fraction: float


def conjugate_map(h, disk_grid, max_masked_fraction=0.10):
    """g = psi^{-1} o h o psi on the disk grid, resampling h bicubically.

    Disk nodes whose psi-image leaves the half-plane truncation (minus a
    two-cell spline margin) are masked out of the result's grid and
    counted; a masked fraction above the threshold raises TruncationError
    advising larger extents.
    """
    hp = h.grid
    x0, x1, y0, y1 = hp.extents
    mx, my = 2 * hp.hx, 2 * hp.hy
    w = disk_grid.zz
    ok = disk_grid.inside & (np.abs(w + 1) > _POLE_EPS)
    zeta = np.full(w.shape, np.nan + 0j)
    zeta[ok] = -1j * (w[ok] - 1) / (w[ok] + 1)
    fits = ok & (zeta.real >= x0 + mx) & (zeta.real <= x1 - mx) \
              & (zeta.imag >= y0 + my) & (zeta.imag <= y1 - my)
    frac = 1.0 - int(fits.sum()) / int(disk_grid.inside.sum())
    if frac > max_masked_fraction:
        raise TruncationError(
            f"{frac:.1%} of disk nodes map outside the truncation "
            f"[-{abs(x0):g},{x1:g}]x[{y0:g},{y1:g}]; enlarge the half-plane extents")
    spline = ComplexBicubic(hp, h.values)
    vals = np.full(w.shape, np.nan + 0j)
    hz = spline(zeta[fits])
    vals[fits] = (1j - hz) / (1j + hz)
    g = MappingField.from_values(disk_grid.with_mask(fits), vals)
    return ConjugationResult(g, float(frac))


def transport_differential(phi, disk_grid):
    """Transport a half-plane differential to the disk: Phi(psi(w)) (psi'(w))^2.

    ``phi`` may be a QuadraticDifferentialField on a half-plane grid
    (resampled bicubically, out-of-truncation nodes masked) or a callable
    closed form (evaluated exactly).
    """
    w = disk_grid.zz
    ok = disk_grid.inside & (np.abs(w + 1) > _POLE_EPS)
    zeta = np.full(w.shape, np.nan + 0j)
    zeta[ok] = -1j * (w[ok] - 1) / (w[ok] + 1)
    dpsi2 = np.full(w.shape, np.nan + 0j)
    dpsi2[ok] = (-2j / (w[ok] + 1) ** 2) ** 2

    out = np.full(w.shape, np.nan + 0j)
    if callable(phi):
        out[ok] = phi(zeta[ok]) * dpsi2[ok]
        valid = ok
    else:
        hp = phi.grid
        x0, x1, y0, y1 = hp.extents
        mx, my = 2 * hp.hx, 2 * hp.hy
        fits = ok & (zeta.real >= x0 + mx) & (zeta.real <= x1 - mx) \
                  & (zeta.imag >= y0 + my) & (zeta.imag <= y1 - my)
        spline = ComplexBicubic(hp, phi.phi)
        out[fits] = spline(zeta[fits]) * dpsi2[fits]
        valid = fits
    return QuadraticDifferentialField(disk_grid, out, valid,
                                      disk_grid.interior_mask(4) & valid,
                                      weight_kind="transported")
