"""Pointwise complex-analytic primitives on grids.

Wirtinger derivatives f_z = (f_x - i f_y)/2, f_zbar = (f_x + i f_y)/2 are
computed with centered stencils (order 2 or 4) where the full stencil fits
inside the mask and 2nd-order one-sided stencils at boundary-adjacent
nodes. J = |f_z|^2 - |f_zbar|^2 holds identically by construction.

Degenerate nodes (J <= 0, or f_z = 0 for the Beltrami quotient) are masked
and reported, never clamped.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainValidationError
from .grids import DomainGrid


@dataclass(frozen=True)
class MappingField:
    """A discretized mapping: complex values on the inside nodes of a grid.

    ``boundary_trace`` is the restriction of ``values`` to the grid's
    boundary-mask nodes (row-major order) and must agree with them exactly.
    """

    grid: DomainGrid
    values: np.ndarray = field(repr=False)
    boundary_trace: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = self.values[self.grid.inside]
        if not np.all(np.isfinite(v)):
            raise DataError("mapping has non-finite values at inside nodes")
        tr = self.values[self.grid.boundary_mask()]
        if self.boundary_trace.shape != tr.shape or not np.array_equal(self.boundary_trace, tr):
            raise DataError("boundary_trace inconsistent with values at boundary nodes")

    @classmethod
    def from_values(cls, grid, values):
        values = np.asarray(values, dtype=complex)
        values = values.copy()
        values[~grid.inside] = np.nan
        values.setflags(write=False)
        return cls(grid, values, values[grid.boundary_mask()])

    @classmethod
    def from_function(cls, grid, fn):
        vals = np.full(grid.zz.shape, np.nan + 0j)
        m = grid.inside
        vals[m] = fn(grid.zz[m])
        return cls.from_values(grid, vals)

    @classmethod
    def identity(cls, grid):
        return cls.from_function(grid, lambda z: z)


@dataclass(frozen=True)
class WirtingerField:
    """Per-node f_z, f_zbar and J = |f_z|^2 - |f_zbar|^2.

    ``defined`` marks nodes where both axis derivatives exist;
    ``interior`` marks the full-centered-stencil subset at the chosen order.
    """

    grid: DomainGrid
    fz: np.ndarray = field(repr=False)
    fzb: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)
    defined: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    order: int = 4

    @classmethod
    def from_derivatives(cls, grid, fz, fzb, defined=None, interior=None, order=4):
        """Assemble from analytically known derivatives; J is derived, not taken."""
        fz = np.asarray(fz, dtype=complex)
        fzb = np.asarray(fzb, dtype=complex)
        if defined is None:
            defined = grid.inside.copy()
        if interior is None:
            interior = grid.interior_mask(order)
        J = np.abs(fz) ** 2 - np.abs(fzb) ** 2
        return cls(grid, fz, fzb, J, defined, interior, order)


@dataclass(frozen=True)
class BeltramiField:
    """mu = f_zbar / f_z on the validity mask (f_z != 0)."""

    grid: DomainGrid
    mu: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DistortionField:
    """K = (|f_z|^2+|f_zbar|^2)/J where J > 0; K >= 1 there.

    ``degenerate`` marks nodes with J <= 0; K is NaN on them.
    """

    grid: DomainGrid
    K: np.ndarray = field(repr=False)
    degenerate: np.ndarray = field(repr=False)
    defined: np.ndarray = field(repr=False)

    @property
    def valid(self):
        return self.defined & ~self.degenerate

    @property
    def degenerate_fraction(self):
        nd = int(self.defined.sum())
        return float(self.degenerate.sum()) / nd if nd else 0.0


def _shift(a, k, axis, fill=np.nan):
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


def _axis_derivative(vals, inside, h, axis, order):
    """Per-axis first derivative with centered / one-sided stencil fallback.

    Returns (deriv, defined). Priority per node: centered at the requested
    order, then centered 2nd order, then one-sided 3-point 2nd order.
    """
    sh = lambda k: _shift(vals, k, axis)
    msk = lambda k: _shift(inside.astype(float), k, axis, fill=0.0) > 0.5

    d = np.full(vals.shape, np.nan + 0j)
    got = np.zeros(vals.shape, dtype=bool)

    if order == 4:
        ok = inside & msk(1) & msk(-1) & msk(2) & msk(-2)
        d4 = (sh(-2) - 8 * sh(-1) + 8 * sh(1) - sh(2)) / (12 * h)
        d[ok] = d4[ok]
        got |= ok

    ok = inside & msk(1) & msk(-1) & ~got
    d2 = (sh(1) - sh(-1)) / (2 * h)
    d[ok] = d2[ok]
    got |= ok

    ok = inside & msk(1) & msk(2) & ~got
    df = (-3 * vals + 4 * sh(1) - sh(2)) / (2 * h)
    d[ok] = df[ok]
    got |= ok

    ok = inside & msk(-1) & msk(-2) & ~got
    db = (3 * vals - 4 * sh(-1) + sh(-2)) / (2 * h)
    d[ok] = db[ok]
    got |= ok

    return d, got


def wirtinger_derivatives(f, stencil_order=4):
    """Discrete Wirtinger derivatives of a MappingField.

    Exact to rounding for polynomials p(z) + q(zbar) of total degree <= 2
    everywhere derivatives are defined, and of degree <= stencil_order on
    the full-stencil interior.
    """
    if stencil_order not in (2, 4):
        raise DataError(f"stencil_order must be 2 or 4, got {stencil_order}")
    grid = f.grid
    v = f.values
    if not np.all(np.isfinite(v[grid.inside])):
        raise DataError("non-finite values in mapping")
    # axis 1 is x, axis 0 is y
    fx, okx = _axis_derivative(v, grid.inside, grid.hx, 1, stencil_order)
    fy, oky = _axis_derivative(v, grid.inside, grid.hy, 0, stencil_order)
    defined = okx & oky
    fz = np.full(v.shape, np.nan + 0j)
    fzb = np.full(v.shape, np.nan + 0j)
    fz[defined] = (fx[defined] - 1j * fy[defined]) / 2
    fzb[defined] = (fx[defined] + 1j * fy[defined]) / 2
    J = np.abs(fz) ** 2 - np.abs(fzb) ** 2
    return WirtingerField(grid, fz, fzb, J, defined, grid.interior_mask(stencil_order), stencil_order)


def distortion(W):
    """Distortion K = (|f_z|^2 + |f_zbar|^2) / (|f_z|^2 - |f_zbar|^2).

    Nodes with J <= 0 are flagged degenerate and K left undefined there.
    """
    num = np.abs(W.fz) ** 2 + np.abs(W.fzb) ** 2
    degenerate = W.defined & (W.J <= 0)
    K = np.full(W.J.shape, np.nan)
    ok = W.defined & (W.J > 0)
    K[ok] = num[ok] / W.J[ok]
    return DistortionField(W.grid, K, degenerate, W.defined)


def beltrami(W):
    """Beltrami coefficient mu = f_zbar / f_z where f_z != 0."""
    valid = W.defined & (np.abs(W.fz) > 0)
    mu = np.full(W.fz.shape, np.nan + 0j)
    mu[valid] = W.fzb[valid] / W.fz[valid]
    return BeltramiField(W.grid, mu, valid)


def distortion_from_beltrami(B):
    """K = (1 + |mu|^2) / (1 - |mu|^2); nodes with |mu| >= 1 flagged degenerate."""
    m2 = np.abs(B.mu) ** 2
    degenerate = B.valid & (m2 >= 1)
    K = np.full(m2.shape, np.nan)
    ok = B.valid & (m2 < 1)
    K[ok] = (1 + m2[ok]) / (1 - m2[ok])
    return DistortionField(B.grid, K, degenerate, B.valid)


@dataclass(frozen=True)
class FiniteDistortionReport:
    degenerate_fraction: float
    jacobian_l1: float
    distortion_sup: float
    n_defined: int
    n_degenerate: int
    verdict: str

    @property
    def finite_distortion(self):
        return self.n_degenerate == 0


def finite_distortion_report(f, stencil_order=4):
    """Discrete finite-distortion check of a mapping.

    Reports the fraction of nodes with J <= 0, the discrete L1 norm of J,
    an essential-sup proxy for K (the max over nondegenerate nodes), and a
    verdict that is positive iff no degenerate node was found.
    """
    W = wirtinger_derivatives(f, stencil_order)
    D = distortion(W)
    n_def = int(W.defined.sum())
    n_deg = int(D.degenerate.sum())
    frac = n_deg / n_def if n_def else 0.0
    jl1 = float(np.sum(np.abs(W.J[W.defined]))) * f.grid.cell_area
    ok = D.valid
    ksup = float(np.max(D.K[ok])) if ok.any() else np.nan
    verdict = "finite distortion (discrete)" if n_deg == 0 else "not finite distortion (discrete)"
    return FiniteDistortionReport(frac, jl1, ksup, n_def, n_deg, verdict)


def compose_distortion(mu_xi, mu_h):
    """Distortion K(xi, H) of H = h o xi^{-1} from the two Beltrami coefficients.

    K(xi,H) = K(z,xi) K(z,h) [1 - 4 Re(mu_xi conj(mu_h)) /
                                  ((1+|mu_xi|^2)(1+|mu_h|^2))]
    Accepts scalars or arrays; requires |mu| < 1 on both arguments.
    """
    mu_xi = np.asarray(mu_xi, dtype=complex)
    mu_h = np.asarray(mu_h, dtype=complex)
    a2 = np.abs(mu_xi) ** 2
    b2 = np.abs(mu_h) ** 2
    if np.any(a2 >= 1) or np.any(b2 >= 1):
        raise DomainValidationError("compose_distortion requires |mu| < 1")
    K_xi = (1 + a2) / (1 - a2)
    K_h = (1 + b2) / (1 - b2)
    bracket = 1 - 4 * np.real(mu_xi * np.conj(mu_h)) / ((1 + a2) * (1 + b2))
    out = K_xi * K_h * bracket
    if out.ndim == 0:
        return float(out)
    return out
