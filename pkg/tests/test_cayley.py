import numpy as np
import pytest

from qcenergy.cayley import (cayley, cayley_derivative, cayley_inv, conjugate_map,
                             pullback_weight, transport_differential)
from qcenergy.errors import PoleError, TruncationError
from qcenergy.fields import MappingField, wirtinger_derivatives
from qcenergy.grids import disk_grid, half_plane_grid
from qcenergy.hopf import QuadraticDifferentialField, dbar_residual, hopf_differential
from qcenergy.maps import alpha_map, as_field, g_alpha
from qcenergy.profiles import linear_profile
from qcenergy.weights import (hyperbolic_half_plane_weight, unit_weight)

LIN = linear_profile()


def test_cayley_special_values():
    assert np.isclose(cayley(0.0), 1j)
    assert abs(cayley(1.0)) < 1e-15
    assert np.isclose(cayley(1j), 1.0)


def test_cayley_roundtrip_and_range():
    rng = np.random.default_rng(2)
    z = 0.97 * (rng.uniform(-1, 1, 500) + 1j * rng.uniform(-1, 1, 500))
    z = z[np.abs(z) < 0.97]
    w = cayley(z)
    assert np.all(w.imag > 0)
    assert np.max(np.abs(cayley_inv(w) - z)) < 1e-14


def test_cayley_poles():
    with pytest.raises(PoleError):
        cayley(-1.0)
    with pytest.raises(PoleError):
        cayley_inv(-1j)


def test_cayley_derivative():
    z = np.array([0.0 + 0j, 0.3 + 0.2j])
    assert np.allclose(cayley_derivative(z), -2j / (z + 1) ** 2)
    h = 1e-7
    fd = (cayley(0.2 + h) - cayley(0.2 - h)) / (2 * h)
    assert abs(fd - cayley_derivative(0.2)) < 1e-7


def test_pullback_unit_weight():
    lam = pullback_weight(unit_weight())
    w = np.array([0.0 + 0j, 0.3 + 0.1j, -0.2 + 0.4j])
    assert np.allclose(lam(w), 4.0 / np.abs(w + 1) ** 4)
    assert np.isclose(lam(np.array(0j)), 4.0)


def test_pullback_hyperbolic_weight():
    # the formula gives 4 (1-|w|^2)^-2: proportional to the disk hyperbolic
    # element, with the curvature-convention factor 4
    lam = pullback_weight(hyperbolic_half_plane_weight())
    rng = np.random.default_rng(4)
    w = 0.9 * (rng.uniform(-1, 1, 100) + 1j * rng.uniform(-1, 1, 100))
    w = w[np.abs(w) < 0.9]
    expected = 4.0 * (1 - np.abs(w) ** 2) ** -2.0
    assert np.max(np.abs(lam(w) - expected) / expected) < 1e-12


def test_conjugate_identity():
    hp = half_plane_grid(128)
    disk = disk_grid(64)
    res = conjugate_map(MappingField.identity(hp), disk)
    g = res.field
    m = g.grid.inside
    assert np.max(np.abs(g.values[m] - g.grid.zz[m])) < 1e-9
    assert res.masked_fraction < 0.10


def test_conjugate_alpha_has_identity_boundary():
    hp = half_plane_grid(192)
    disk = disk_grid(64)
    res = conjugate_map(as_field(alpha_map(2.0), hp), disk)
    g = res.field
    ring = g.grid.boundary_mask()
    gap = np.abs(g.values[ring] - g.grid.zz[ring])
    # identity on the boundary circle, approached to O(h) at ring nodes
    assert np.max(gap) < 5 * max(g.grid.hx, g.grid.hy)
    # matches the closed form of the conjugated family where defined
    exact = g_alpha(2.0)(g.grid.zz[g.grid.inside])
    err = np.abs(g.values[g.grid.inside] - exact)
    assert np.nanmax(err) < 1e-6


def test_conjugate_roundtrip():
    hp = half_plane_grid(256)
    disk = disk_grid(96)
    h = as_field(alpha_map(1.5), hp)
    g1 = conjugate_map(h, disk).field
    # conjugate back: psi o g o psi^{-1} evaluated on the half-plane grid
    from qcenergy.interp import ComplexBicubic
    spline = ComplexBicubic(g1.grid, g1.values)
    zeta = hp.zz[hp.inside]
    wdisk = cayley_inv(zeta)
    ok = np.abs(wdisk + 1) > 0.05
    ok &= np.abs(wdisk) < 1 - 4 * disk.hx
    back = cayley(spline(wdisk[ok]))
    exact = alpha_map(1.5)(zeta[ok])
    assert np.max(np.abs(back - exact)) < 1e-6


def test_conjugate_truncation_error():
    hp = half_plane_grid(64, X=0.5, y_min=0.4, Y=2.0)   # tiny truncation
    disk = disk_grid(64)
    with pytest.raises(TruncationError):
        conjugate_map(MappingField.identity(hp), disk)


def test_transport_constant_and_zero():
    disk = disk_grid(96)
    zero = transport_differential(lambda z: np.zeros(np.shape(z), dtype=complex), disk)
    assert np.nanmax(np.abs(zero.phi[zero.valid])) == 0.0
    beta = -0.75
    tr = transport_differential(lambda z: np.full(np.shape(z), beta + 0j), disk)
    w = disk.zz[tr.valid]
    expected = beta * (-2j / (w + 1) ** 2) ** 2
    assert np.max(np.abs(tr.phi[tr.valid] - expected)) < 1e-12


def test_transport_preserves_holomorphy():
    disk = disk_grid(128)
    tr = transport_differential(lambda z: np.full(np.shape(z), 1.0 + 0j), disk)
    sub = tr.valid & (np.abs(disk.zz + 1) > 0.25)
    P = QuadraticDifferentialField(disk, tr.phi, sub, disk.interior_mask(4) & sub)
    rep = dbar_residual(P)
    assert rep.max_dbar < 1e-6     # 4/(w+1)^4 has large derivatives near the pole


def test_commuting_square():
    # hopf(conjugate(h), pullback(eta)) == transport(hopf-constant) for the
    # alpha family: both equal beta (psi')^2
    alpha = 2.0
    beta = (1 - alpha ** 2) / 4.0
    disk = disk_grid(256)
    fld = as_field(g_alpha(alpha), disk)
    Phi = hopf_differential(fld, LIN, pullback_weight(unit_weight()))
    tr = transport_differential(lambda z: np.full(np.shape(z), beta + 0j), disk)
    both = Phi.interior & tr.valid & (np.abs(disk.zz + 1) > 0.3)
    gap = np.max(np.abs(Phi.phi[both] - tr.phi[both]))
    assert gap <= 1e-4
