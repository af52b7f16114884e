"""The weighted distortion energy in direct and change-of-variables form.

Direct form:   E(f)  = integral Psi(K(z,f)) lambda(z) dz
Inverse form:  E*(h) = integral Psi(K(w,h)) lambda(h(w)) J(w,h) dw

For mutually inverse diffeomorphisms the two agree (change of variables);
cov_gap measures the discrete mismatch, expected O(h^2) from the midpoint
quadrature.

Quadrature is the midpoint rule over grid cells. Nodes where a singular
weight exceeds ``weight_cap`` are excluded and their area reported, so a
genuinely divergent hyperbolic energy shows up as excluded mass rather
than being averaged away.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, PairingError, RangeError
from .fields import distortion, wirtinger_derivatives
from .interp import ComplexBicubic

DEFAULT_WEIGHT_CAP = 1e12
DEFAULT_DEGENERATE_TOL = 0.01


@dataclass(frozen=True)
class EnergyResult:
    value: float
    degenerate_fraction: float
    included_area: float
    excluded_area: float     # area dropped by the weight cap
    n_included: int

    def __float__(self):
        return self.value


def _distortion_or_raise(f, stencil_order, degenerate_tol, wirtinger=None):
    W = wirtinger if wirtinger is not None else wirtinger_derivatives(f, stencil_order)
    D = distortion(W)
    frac = D.degenerate_fraction
    if frac > degenerate_tol:
        raise DegeneracyError(frac)
    return W, D, frac


def energy_direct(f, psi, weight, stencil_order=4,
                  weight_cap=DEFAULT_WEIGHT_CAP, degenerate_tol=DEFAULT_DEGENERATE_TOL,
                  wirtinger=None):
    """Midpoint-rule quadrature of Psi(K(z,f)) lambda(z) over nondegenerate nodes."""
    W, D, frac = _distortion_or_raise(f, stencil_order, degenerate_tol, wirtinger)
    grid = f.grid
    ok = D.valid
    lam = np.full(grid.zz.shape, np.nan)
    lam[ok] = weight.fn(grid.zz[ok])
    include = ok & (lam <= weight_cap)
    dA = grid.cell_area
    value = float(np.sum(psi.psi(D.K[include]) * lam[include])) * dA
    return EnergyResult(value, frac,
                        float(include.sum()) * dA,
                        float((ok & ~include).sum()) * dA,
                        int(include.sum()))


def energy_inverse(h, psi, weight, stencil_order=4,
                   weight_cap=DEFAULT_WEIGHT_CAP, degenerate_tol=DEFAULT_DEGENERATE_TOL,
                   wirtinger=None):
    """Quadrature of Psi(K(w,h)) lambda(h(w)) J(w,h): the change-of-variables form.

    The weight is evaluated analytically at the image points h(w); image
    points outside the weight's domain raise a RangeError listing offenders.
    """
    W, D, frac = _distortion_or_raise(h, stencil_order, degenerate_tol, wirtinger)
    grid = h.grid
    ok = D.valid
    imgs = h.values[ok]
    good = weight.domain(imgs)
    if not np.all(good):
        offenders = imgs[~good][:8]
        raise RangeError(f"{int((~good).sum())} image points outside the weight domain",
                         detail=offenders)
    lam = np.full(grid.zz.shape, np.nan)
    lam[ok] = weight.fn(imgs)
    include = ok & (lam <= weight_cap)
    dA = grid.cell_area
    value = float(np.sum(psi.psi(D.K[include]) * lam[include] * W.J[include])) * dA
    return EnergyResult(value, frac,
                        float(include.sum()) * dA,
                        float((ok & ~include).sum()) * dA,
                        int(include.sum()))


@dataclass(frozen=True)
class CovGapResult:
    gap: float
    direct: EnergyResult
    inverse: EnergyResult
    inverse_consistency: float     # sup |f(f^{-1}(w)) - w|

    def __float__(self):
        return self.gap


def cov_gap(f, f_inverse, psi, weight, stencil_order=4, inverse_tol=1e-2,
            weight_cap=DEFAULT_WEIGHT_CAP):
    """Relative gap between the direct energy of f and the inverse energy of f^{-1}.

    The pairing is validated first: f resampled at the values of f_inverse
    must return the f_inverse grid nodes to within ``inverse_tol`` sup-norm.
    """
    spline_f = ComplexBicubic(f.grid, f.values)
    m = f_inverse.grid.inside
    back = spline_f(f_inverse.values[m])
    consistency = float(np.max(np.abs(back - f_inverse.grid.zz[m])))
    if consistency > inverse_tol:
        raise PairingError(
            f"inverse-consistency sup |f(f^-1) - id| = {consistency:.3e} > {inverse_tol:g}")
    e_dir = energy_direct(f, psi, weight, stencil_order, weight_cap=weight_cap)
    e_inv = energy_inverse(f_inverse, psi, weight, stencil_order, weight_cap=weight_cap)
    gap = abs(e_dir.value - e_inv.value) / abs(e_dir.value)
    return CovGapResult(gap, e_dir, e_inv, consistency)
