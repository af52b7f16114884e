"""Numerical verification of the Reich-Strebel inequality family.

All verifiers work on boundary-identity finite-distortion maps of the
disk against a holomorphic quadratic differential phi, reporting both
integrals, the slack, and the hypothesis diagnostics (boundary-identity
gap, holomorphy residual of phi, L1 mass). Slacks are judged against
tol = max(1e-8, TOL_C h^2), calibrated once on the identity family.

phi may be passed as a callable closed form (evaluated exactly, also at
image points) or as a QuadraticDifferentialField (resampled bicubically).
Nodes where |phi| < 1e-12 max|phi| are excluded from the phi/|phi|
direction factor and their measure reported; they contribute nothing to
either side of the inequalities.
"""

from dataclasses import dataclass, field as dfield

import numpy as np

from .energy import energy_inverse
from .errors import CoverageError, DegeneracyError, PairingError
from .fields import beltrami, distortion, wirtinger_derivatives
from .hopf import QuadraticDifferentialField, dbar_residual, holomorphy_threshold, hopf_differential
from .interp import ComplexBicubic, invert_map

EPS_PHI_REL = 1e-12

# slack tolerance tol = max(1e-8, TOL_C h^2); TOL_C calibrated on the
# identity family at n in {64,128,256} (worst observed slack ~1e-13, so
# the quadratic term only guards genuinely coarse grids)
TOL_C = 0.5


def slack_tolerance(grid):
    h = max(grid.hx, grid.hy)
    return max(1e-8, TOL_C * h * h)


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    worst_node_slack: float
    verdict: str                    # "holds" | "fails"
    diagnostics: dict = dfield(default_factory=dict)

    @property
    def holds(self):
        return self.verdict == "holds"


def _verdict(slack, lhs, tol):
    return "holds" if slack >= -tol * max(abs(lhs), 1.0) else "fails"


class _Phi:
    """Uniform access to phi as (node samples, image evaluation, diagnostics)."""

    def __init__(self, phi, grid):
        self.grid = grid
        if callable(phi):
            self.fn = phi
            self.field = QuadraticDifferentialField.from_function(grid, phi)
        else:
            self.field = phi
            if phi.analytic is not None:
                self.fn = phi.analytic
            else:
                spline = ComplexBicubic(phi.grid, phi.phi)
                self.fn = spline
        self.samples = np.where(self.field.valid, self.field.phi, np.nan + 0j)

    def at(self, pts):
        return self.fn(pts)

    def diagnostics(self):
        d = dbar_residual(self.field)
        m = self.field.valid & np.isfinite(self.field.phi)
        mass = float(np.sum(np.abs(self.field.phi[m]))) * self.grid.cell_area
        return {"phi_dbar_residual": d.max_dbar,
                "phi_mean_value_gap": d.mean_value_gap,
                "phi_l1_mass": mass,
                "phi_holomorphic": d.max_dbar <= holomorphy_threshold(self.field)}


def _boundary_gap(f):
    b = f.grid.boundary_mask()
    return float(np.max(np.abs(f.values[b] - f.grid.zz[b]))) if b.any() else 0.0


def _direction_factor(phi_s, eps):
    """phi/|phi| with near-zero nodes zeroed; returns (factor, excluded mask)."""
    a = np.abs(phi_s)
    small = ~np.isfinite(a) | (a < eps)
    fac = np.zeros_like(phi_s)
    ok = ~small
    fac[ok] = phi_s[ok] / a[ok]
    return fac, small


def rs_sides(f, phi, stencil_order=4, degenerate_tol=0.01):
    """Both sides of the Reich-Strebel / Iwaniec-Onninen inequality:

        int |phi|  <=  int sqrt|phi(f)| sqrt|phi| |f_z - (phi/|phi|) f_zbar|

    for boundary-identity finite-distortion f and holomorphic phi in L1.
    Hypothesis violations (boundary gap, non-holomorphic phi) are reported
    in the diagnostics, not fatal.
    """
    grid = f.grid
    W = wirtinger_derivatives(f, stencil_order)
    D = distortion(W)
    if D.degenerate_fraction > degenerate_tol:
        raise DegeneracyError(D.degenerate_fraction)
    P = _Phi(phi, grid)
    phis = P.samples
    finite = np.isfinite(phis)
    eps = EPS_PHI_REL * np.nanmax(np.abs(phis)) if finite.any() else 0.0
    fac, small = _direction_factor(phis, eps)

    use = D.valid & finite
    dA = grid.cell_area
    lhs = float(np.sum(np.abs(phis[use & ~small]))) * dA
    phif = P.at(f.values[use & ~small])
    integrand = (np.sqrt(np.abs(phif)) * np.sqrt(np.abs(phis[use & ~small]))
                 * np.abs(W.fz[use & ~small] - fac[use & ~small] * W.fzb[use & ~small]))
    rhs = float(np.sum(integrand)) * dA
    slack = rhs - lhs
    tol = slack_tolerance(grid)
    diag = {"boundary_identity_gap": _boundary_gap(f),
            "degenerate_fraction": D.degenerate_fraction,
            "excluded_phi_area": float(np.sum(use & small)) * dA,
            "tolerance": tol}
    diag.update(P.diagnostics())
    return InequalityReport("reich-strebel", lhs, rhs, slack, slack,
                            _verdict(slack, lhs, tol), diag)


def rs_lower_bounds(f, phi, stencil_order=4, degenerate_tol=0.01):
    """The two Cauchy-Schwarz consequences of the Reich-Strebel inequality:

    (2)  int |phi(f)| |f_z - (phi/|phi|) f_zbar|^2          >= int |phi|
    (3)  int |phi|    |f_z - (phi/|phi|) f_zbar|^2 / J(z,f) >= int |phi|

    Returns (bound2, bound3); the middle Cauchy-Schwarz quotients are in
    the diagnostics.
    """
    grid = f.grid
    W = wirtinger_derivatives(f, stencil_order)
    D = distortion(W)
    if D.degenerate_fraction > degenerate_tol:
        raise DegeneracyError(D.degenerate_fraction)
    P = _Phi(phi, grid)
    phis = P.samples
    finite = np.isfinite(phis)
    eps = EPS_PHI_REL * np.nanmax(np.abs(phis)) if finite.any() else 0.0
    fac, small = _direction_factor(phis, eps)

    use = D.valid & finite & ~small
    dA = grid.cell_area
    absphi = np.abs(phis[use])
    phif = np.abs(P.at(f.values[use]))
    dev = np.abs(W.fz[use] - fac[use] * W.fzb[use])
    J = W.J[use]

    target = float(np.sum(absphi)) * dA
    cross = float(np.sum(np.sqrt(phif) * np.sqrt(absphi) * dev)) * dA

    lhs2 = float(np.sum(phif * dev ** 2)) * dA
    mid2 = cross ** 2 / target if target > 0 else 0.0
    lhs3 = float(np.sum(absphi * dev ** 2 / J)) * dA
    denom3 = float(np.sum(phif * J)) * dA
    mid3 = cross ** 2 / denom3 if denom3 > 0 else 0.0

    tol = slack_tolerance(grid)
    base_diag = {"boundary_identity_gap": _boundary_gap(f),
                 "degenerate_fraction": D.degenerate_fraction,
                 "excluded_phi_area": float(np.sum(D.valid & finite & small)) * dA,
                 "tolerance": tol}
    base_diag.update(P.diagnostics())
    b2 = InequalityReport("cauchy-schwarz-2", target, lhs2, lhs2 - target, lhs2 - target,
                          _verdict(lhs2 - target, target, tol),
                          dict(base_diag, middle_quotient=mid2))
    b3 = InequalityReport("cauchy-schwarz-3", target, lhs3, lhs3 - target, lhs3 - target,
                          _verdict(lhs3 - target, target, tol),
                          dict(base_diag, middle_quotient=mid3))
    return b2, b3


def alignment_residual(h, phi, stencil_order=4, min_coverage=0.99):
    """max |mu_h - |mu_h| conj(phi)/|phi|| over nodes where phi != 0.

    ``h`` may be a MappingField or a WirtingerField (for synthesized
    Beltrami data). phi must be nonvanishing on >= 99% of the valid nodes.
    """
    from .fields import WirtingerField
    W = h if isinstance(h, WirtingerField) else wirtinger_derivatives(h, stencil_order)
    B = beltrami(W)
    P = _Phi(phi, W.grid)
    phis = P.samples
    finite = np.isfinite(phis) & B.valid
    eps = EPS_PHI_REL * np.nanmax(np.abs(phis)) if finite.any() else 0.0
    ok = finite & (np.abs(phis) >= eps)
    if finite.sum() == 0 or ok.sum() < min_coverage * finite.sum():
        raise CoverageError("phi vanishes on too many nodes for the alignment test")
    mu = B.mu[ok]
    direction = np.conj(phis[ok]) / np.abs(phis[ok])
    return float(np.max(np.abs(mu - np.abs(mu) * direction)))


def pointwise_teich(f, g, phi, stencil_order=4, degenerate_tol=0.01, mu_tol=1e-9):
    """Worst-node slack of the pointwise Teichmueller chain

        (1-|mu_f|)^2 (|g_z|+|g_zbar|)^2 |f_z|^2 / J(z,f)^2  <=  J(z,g)/J(z,f)

    valid wherever |mu_g| <= |mu_f|; nodes violating that hypothesis are
    counted, as is the pullback alignment residual of mu_{f^{-1}} against
    phi (evaluated without discrete inversion). The equality locus is the
    set of nodes with |mu_f - mu_g| below tolerance.
    """
    grid = f.grid
    Wf = wirtinger_derivatives(f, stencil_order)
    Wg = wirtinger_derivatives(g, stencil_order)
    Df, Dg = distortion(Wf), distortion(Wg)
    if Df.degenerate_fraction > degenerate_tol:
        raise DegeneracyError(Df.degenerate_fraction)
    if Dg.degenerate_fraction > degenerate_tol:
        raise DegeneracyError(Dg.degenerate_fraction)
    use = Df.valid & Dg.valid
    muf = np.abs(Wf.fzb[use] / Wf.fz[use])
    mug = np.abs(Wg.fzb[use] / Wg.fz[use])
    hyp_violations = int(np.sum(mug > muf + mu_tol))

    lhs = ((1 - muf) ** 2 * (np.abs(Wg.fz[use]) + np.abs(Wg.fzb[use])) ** 2
           * np.abs(Wf.fz[use]) ** 2 / Wf.J[use] ** 2)
    rhs = Wg.J[use] / Wf.J[use]
    node_slack = rhs - lhs
    worst = float(np.min(node_slack)) if node_slack.size else np.nan

    # alignment hypothesis on mu_{f^{-1}}, pulled back to the domain:
    # mu_{f^{-1}}(f(z)) = -mu_f(z) f_z/conj(f_z) must equal |mu_f| conj(phi(f))/|phi(f)|
    P = _Phi(phi, grid)
    phif = P.at(f.values[use])
    okp = np.abs(phif) > EPS_PHI_REL * max(np.nanmax(np.abs(phif)), 1e-300)
    mu_inv = -(Wf.fzb[use] / Wf.fz[use]) * (Wf.fz[use] / np.conj(Wf.fz[use]))
    align = np.abs(mu_inv[okp] - np.abs(mu_inv[okp]) * np.conj(phif[okp]) / np.abs(phif[okp]))
    align_res = float(np.max(align)) if align.size else np.nan

    eq_locus = int(np.sum(np.abs(Wf.fzb[use] / Wf.fz[use] - Wg.fzb[use] / Wg.fz[use]) <= 1e-9))
    tol = slack_tolerance(grid)
    verdict = "holds" if (worst >= -tol and hyp_violations == 0) else (
        "fails" if worst < -tol else "hypotheses unmet")
    diag = {"hypothesis_violations": hyp_violations,
            "alignment_residual_pullback": align_res,
            "equality_locus_nodes": eq_locus,
            "n_nodes": int(use.sum()),
            "tolerance": tol}
    diag.update(P.diagnostics())
    lhs_tot = float(np.sum(lhs)) * grid.cell_area
    rhs_tot = float(np.sum(rhs)) * grid.cell_area
    return InequalityReport("pointwise-teichmueller", lhs_tot, rhs_tot,
                            rhs_tot - lhs_tot, worst, verdict, diag)


@dataclass(frozen=True)
class GapResult:
    gap: float
    term1: float
    term2: float
    certified: bool
    report: dict

    def __iter__(self):
        return iter((self.gap, self.term1, self.term2, self.report))


def energy_gap(h, H, psi, weight, stencil_order=4, boundary_tol=None):
    """The Theorem-style energy-gap decomposition between two candidates.

    gap   = E*(H) - E*(h)     (inverse-form energies)
    term1 = 2 int (|h_z|-|h_zbar|)^2 |xi_zbar|^2 / J(z,xi) Psi'(K(z,h)) lambda(h)
    term2 = 2 int (|xi_z - (phi/|phi|) xi_zbar|^2 / J(z,xi) - 1) |phi|

    with xi = H^{-1} o h (discrete Newton inversion) and phi = Phi_h.
    When h's Hopf field is numerically holomorphic with finite mass and
    the hypotheses hold ("certified"), gap >= term1 + term2 - tol and
    gap >= -tol, with equality iff h = H. The convexity step
    Psi(y)-Psi(x) >= (y-x) Psi'(x) is asserted nodewise.
    """
    grid = h.grid
    if boundary_tol is None:
        # ring nodes sit up to one cell inside the circle, so two maps that
        # agree on the true boundary differ at the ring by O(h)
        boundary_tol = max(1e-8, max(grid.hx, grid.hy))
    btr = np.abs(h.boundary_trace - H.boundary_trace)
    bgap = float(np.max(btr)) if btr.size else 0.0
    if bgap > boundary_tol:
        raise PairingError(f"boundary traces differ by {bgap:.3e} > {boundary_tol:g}")

    Wh = wirtinger_derivatives(h, stencil_order)
    Dh = distortion(Wh)
    WH = wirtinger_derivatives(H, stencil_order)
    DH = distortion(WH)
    if Dh.degenerate_fraction > 0.01:
        raise DegeneracyError(Dh.degenerate_fraction)
    if DH.degenerate_fraction > 0.01:
        raise DegeneracyError(DH.degenerate_fraction)

    e_h = energy_inverse(h, psi, weight, stencil_order, wirtinger=Wh)
    e_H = energy_inverse(H, psi, weight, stencil_order, wirtinger=WH)
    gap = e_H.value - e_h.value

    # xi = H^{-1} o h, then its derivatives on the grid
    from .fields import MappingField
    m = grid.inside
    xi_vals = np.full(grid.zz.shape, np.nan + 0j)
    xi_vals[m], inv_residual = invert_map(H, h.values[m])
    xi = MappingField.from_values(grid, xi_vals)
    Wxi = wirtinger_derivatives(xi, stencil_order)
    Dxi = distortion(Wxi)

    Phi_h = hopf_differential(h, psi, weight, stencil_order, wirtinger=Wh)
    dbar = dbar_residual(Phi_h)
    holo_thresh = holomorphy_threshold(Phi_h, stencil_order)
    mass = float(np.nansum(np.abs(Phi_h.phi[Phi_h.valid]))) * grid.cell_area

    use = Dh.valid & Dxi.valid & Phi_h.valid
    lam = weight.fn(h.values[use])
    Pp = psi.dpsi(Dh.K[use])
    dA = grid.cell_area

    t1_nodes = (2 * (np.abs(Wh.fz[use]) - np.abs(Wh.fzb[use])) ** 2
                * np.abs(Wxi.fzb[use]) ** 2 / Wxi.J[use] * Pp * lam)
    term1 = float(np.sum(t1_nodes)) * dA
    t1_negative_nodes = int(np.sum(t1_nodes < 0))

    phis = Phi_h.phi[use]
    eps = EPS_PHI_REL * max(float(np.nanmax(np.abs(Phi_h.phi[Phi_h.valid]))), 1e-300)
    nz = np.abs(phis) >= eps
    fac = np.zeros_like(phis)
    fac[nz] = phis[nz] / np.abs(phis[nz])
    t2_nodes = 2 * (np.abs(Wxi.fz[use] - fac * Wxi.fzb[use]) ** 2 / Wxi.J[use] - 1) * np.abs(phis)
    t2_nodes[~nz] = 0.0
    term2 = float(np.sum(t2_nodes)) * dA

    # composed distortion y = K(z,xi) K(z,h) [bracket] and the convexity step
    mu_h = Wh.fzb[use] / Wh.fz[use]
    mu_xi = Wxi.fzb[use] / Wxi.fz[use]
    bracket = 1 - 4 * np.real(mu_xi * np.conj(mu_h)) / ((1 + np.abs(mu_xi) ** 2) * (1 + np.abs(mu_h) ** 2))
    y_comp = Dxi.K[use] * Dh.K[use] * bracket
    x_comp = Dh.K[use]
    conv = psi.psi(y_comp) - psi.psi(x_comp) - (y_comp - x_comp) * psi.dpsi(x_comp)
    conv_scale = np.maximum(np.abs(psi.psi(y_comp)), 1.0)
    convexity_violations = int(np.sum(conv < -1e-12 * conv_scale))
    middle = float(np.sum((y_comp - x_comp) * psi.dpsi(x_comp) * Wh.J[use] * lam)) * dA
    decomposition_residual = abs(middle - (term1 + term2))

    tol = slack_tolerance(grid) * max(abs(e_h.value), 1.0)
    certified = (bgap <= boundary_tol
                 and Dh.degenerate_fraction == 0.0 and DH.degenerate_fraction == 0.0
                 and dbar.max_dbar <= holo_thresh and np.isfinite(mass))
    report = {
        "certified": certified,
        "verdict": "certified" if certified else "hypotheses unmet",
        "boundary_gap": bgap,
        "inversion_residual": inv_residual,
        "phi_dbar_residual": dbar.max_dbar,
        "phi_holomorphy_threshold": holo_thresh,
        "phi_l1_mass": mass,
        "term1_negative_nodes": t1_negative_nodes,
        "convexity_violations": convexity_violations,
        "decomposition_residual": decomposition_residual,
        "excluded_phi_area": float(np.sum(use & ~np.isfinite(Phi_h.phi))) * dA
                             + float(np.sum(~nz)) * dA,
        "energy_h": e_h.value,
        "energy_H": e_H.value,
        "tolerance": tol,
        "gap_geq_terms": gap >= term1 + term2 - tol,
        "gap_nonnegative": gap >= -tol,
    }
    return GapResult(gap, term1, term2, certified, report)


@dataclass(frozen=True)
class UniquenessReport:
    verdict: str          # "maps coincide (discrete)" | "distinct"
    gap: float
    term1: float
    sup_xi_zbar: float
    sup_xi_dist: float
    details: dict


def uniqueness_verdict(h, H, psi, weight, stencil_order=4):
    """Equality analysis of the gap theorem: zero gap forces xi conformal, hence identity."""
    res = energy_gap(h, H, psi, weight, stencil_order)
    grid = h.grid
    m = grid.inside
    xi_vals = np.full(grid.zz.shape, np.nan + 0j)
    xi_vals[m], _ = invert_map(H, h.values[m])
    sup_dist = float(np.max(np.abs(xi_vals[m] - grid.zz[m])))
    from .fields import MappingField
    Wxi = wirtinger_derivatives(MappingField.from_values(grid, xi_vals), stencil_order)
    sup_zbar = float(np.nanmax(np.abs(Wxi.fzb[Wxi.defined])))
    tol = res.report["tolerance"]
    if res.gap <= tol:
        ok = res.term1 <= tol and sup_zbar <= np.sqrt(tol) and sup_dist <= 10 * np.sqrt(tol)
        verdict = "maps coincide (discrete)" if ok else "distinct"
    else:
        verdict = "distinct"
    return UniquenessReport(verdict, res.gap, res.term1, sup_zbar, sup_dist, res.report)
