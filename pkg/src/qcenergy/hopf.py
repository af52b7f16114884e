"""The Ahlfors-Hopf field of a mapping and its holomorphy diagnostics.

Phi_h = Psi'(K(w,h)) h_w conj(h_wbar) lambda(h)

The conjugated second factor is the default; the unconjugated product
h_w h_wbar is available behind ``conjugate_second=False``. Only the
conjugated form is invariant under post-composition with disk Moebius
maps for the hyperbolic weight, which is what the invariance verifier
exercises.

Holomorphy is measured two ways: the max interior |dPhi/dwbar| under the
same stencils used for mappings, and a discrete mean-value gap on the
four-neighbor circle (zero for harmonic fields up to O(h^4)).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, RangeError
from .fields import distortion, wirtinger_derivatives
from .weights import hyperbolic_disk_weight


@dataclass(frozen=True)
class QuadraticDifferentialField:
    grid: object
    phi: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    weight_kind: str = "unit"
    analytic: callable = None     # optional closed form, used for exact resampling

    @classmethod
    def from_function(cls, grid, fn, weight_kind="unit"):
        phi = np.full(grid.zz.shape, np.nan + 0j)
        m = grid.inside
        phi[m] = fn(grid.zz[m])
        return cls(grid, phi, m.copy(), grid.interior_mask(4), weight_kind, analytic=fn)


def hopf_differential(h, psi, weight, stencil_order=4, wirtinger=None,
                      conjugate_second=True, degenerate_tol=0.01):
    """Compute Phi_h per node. Requires h discretely nondegenerate a.e."""
    from .energy import _distortion_or_raise
    W, D, _ = _distortion_or_raise(h, stencil_order, degenerate_tol, wirtinger)
    grid = h.grid
    ok = D.valid
    lam = np.full(grid.zz.shape, np.nan)
    imgs = h.values[ok]
    in_dom = weight.domain(imgs)
    lam_ok = np.zeros(grid.zz.shape, dtype=bool)
    lam_ok[ok] = in_dom
    lam[lam_ok] = weight.fn(h.values[lam_ok])
    second = np.conj(W.fzb) if conjugate_second else W.fzb
    phi = np.full(grid.zz.shape, np.nan + 0j)
    use = lam_ok & np.isfinite(lam)
    phi[use] = psi.dpsi(D.K[use]) * W.fz[use] * second[use] * lam[use]
    return QuadraticDifferentialField(grid, phi, use, W.interior & use,
                                      weight_kind=weight.kind)


@dataclass(frozen=True)
class DbarReport:
    max_dbar: float
    mean_value_gap: float
    n_interior: int
    coverage: float

    def __float__(self):
        return self.max_dbar


def dbar_residual(Phi, stencil_order=4, min_coverage=0.99):
    """Max interior |dPhi/dwbar| plus a discrete mean-value holomorphy test."""
    grid = Phi.grid
    interior = grid.interior_mask(stencil_order)
    n_int = int(interior.sum())
    have = interior & Phi.valid & np.isfinite(Phi.phi)
    coverage = int(have.sum()) / n_int if n_int else 0.0
    if coverage < min_coverage:
        raise CoverageError(f"Phi defined on {coverage:.1%} of interior nodes (< {min_coverage:.0%})")

    from .fields import MappingField, _shift
    carrier = MappingField.from_values(grid.with_mask(Phi.valid & np.isfinite(Phi.phi)), Phi.phi)
    W = wirtinger_derivatives(carrier, stencil_order)
    use = have & W.defined
    max_dbar = float(np.max(np.abs(W.fzb[use]))) if use.any() else np.nan

    # weighted 4-neighbor mean equals the center for discretely harmonic fields
    hx2, hy2 = grid.hx ** 2, grid.hy ** 2
    p = Phi.phi
    e, w = _shift(p, -1, 1), _shift(p, 1, 1)
    n_, s = _shift(p, -1, 0), _shift(p, 1, 0)
    mean = (hy2 * (e + w) + hx2 * (n_ + s)) / (2 * (hx2 + hy2))
    ring_ok = have & np.isfinite(mean)
    mv = float(np.max(np.abs(mean[ring_ok] - p[ring_ok]))) if ring_ok.any() else np.nan
    return DbarReport(max_dbar, mv, n_int, coverage)


def holomorphy_threshold(Phi, stencil_order=4, safety=10.0):
    """Scale-aware classification threshold: safety x (stencil truncation estimate).

    The truncation estimate is h^order times the magnitude scale of Phi per
    unit length, a refinement-consistent proxy for the stencil error.
    """
    grid = Phi.grid
    h = max(grid.hx, grid.hy)
    scale = np.nanmax(np.abs(Phi.phi)) if np.isfinite(Phi.phi).any() else 1.0
    return safety * (h ** stencil_order) * max(scale, 1.0)


@dataclass(frozen=True)
class L1MassReport:
    resolutions: tuple
    masses: tuple
    mass_ratio: float           # last / first
    concentration_point: complex
    boundary_distance: float
    verdict: str                # "divergent" | "stable"

    @property
    def divergent(self):
        return self.verdict == "divergent"


def l1_mass(fields):
    """Quadrature of |Phi| on each refinement level plus a divergence verdict.

    Divergent means: last-level mass exceeds the first by a factor > 2
    while the dominating node sits within a few cells of the domain
    boundary (mass escaping through a boundary point).
    """
    fields = list(fields)
    if len(fields) < 2:
        raise CoverageError("l1_mass needs at least 2 refinement levels")
    masses = []
    for F in fields:
        m = F.valid & np.isfinite(F.phi)
        masses.append(float(np.sum(np.abs(F.phi[m]))) * F.grid.cell_area)
    last = fields[-1]
    m = last.valid & np.isfinite(last.phi)
    absphi = np.where(m, np.abs(last.phi), -np.inf)
    j, i = np.unravel_index(np.argmax(absphi), absphi.shape)
    peak = complex(last.grid.zz[j, i])
    interior = last.grid.interior_mask(4)
    h = max(last.grid.hx, last.grid.hy)
    if last.grid.kind == "disk":
        bdist = 1.0 - abs(peak)
    else:
        x0, x1, y0, y1 = last.grid.extents
        bdist = min(peak.real - x0, x1 - peak.real, peak.imag - y0, y1 - peak.imag)
    ratio = masses[-1] / masses[0] if masses[0] > 0 else np.inf if masses[-1] > 0 else 1.0
    divergent = ratio > 2.0 and bdist <= 4 * h and not interior[j, i]
    return L1MassReport(tuple(F.grid.n for F in fields), tuple(masses), float(ratio),
                        peak, float(bdist), "divergent" if divergent else "stable")


def mobius_invariance_gap(h, a=0.3, theta=1.0, psi=None, stencil_order=4):
    """Sup gap between Phi_h and Phi_{psi o h}, both with the hyperbolic-disk weight.

    psi(w) = e^{i theta} (w - a)/(1 - conj(a) w) is a disk Moebius map; the
    conjugated Hopf form is exactly invariant under this post-composition,
    so the reported gap is pure discretization error, measured over the
    full-stencil interior where the singular weight stays controlled.
    """
    from .fields import MappingField
    from .profiles import linear_profile
    psi = psi or linear_profile()
    if abs(a) >= 1:
        raise RangeError(f"Moebius parameter |a| = {abs(a)} >= 1")
    w = hyperbolic_disk_weight()
    grid = h.grid

    phase = np.exp(1j * theta)
    moved_vals = phase * (h.values - a) / (1 - np.conj(a) * h.values)
    m = grid.inside
    if np.any(np.abs(moved_vals[m]) >= 1):
        raise RangeError("post-composed image escapes the closed disk")
    moved = MappingField.from_values(grid, moved_vals)

    Phi1 = hopf_differential(h, psi, w, stencil_order)
    Phi2 = hopf_differential(moved, psi, w, stencil_order)
    common = Phi1.interior & Phi2.interior
    if not common.any():
        raise CoverageError("no common interior nodes for the invariance gap")
    return float(np.max(np.abs(Phi1.phi[common] - Phi2.phi[common])))
