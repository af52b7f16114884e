import numpy as np
import pytest

from qcenergy.energy import cov_gap, energy_direct, energy_inverse
from qcenergy.errors import DegeneracyError, PairingError, RangeError
from qcenergy.fields import MappingField
from qcenergy.grids import disk_grid, rectangle_grid
from qcenergy.maps import (alpha_map, as_field, disk_mobius, radial_stretch,
                           radial_stretch_inverse)
from qcenergy.profiles import linear_profile, power_profile
from qcenergy.weights import custom_weight, hyperbolic_disk_weight, unit_weight

LIN = linear_profile()
POW2 = power_profile(2)
UNIT = unit_weight()


def test_energy_identity_is_area():
    g = disk_grid(64)
    e = energy_direct(MappingField.identity(g), LIN, UNIT)
    assert abs(e.value - np.pi) < 0.02
    e2 = energy_direct(MappingField.identity(g), POW2, UNIT)
    assert np.isclose(e2.value, e.value)       # Psi(1) = 1 either way
    assert e.degenerate_fraction == 0.0


def test_energy_alpha_on_unit_square():
    # constant integrand: midpoint rule is exact
    g = rectangle_grid(32)
    e = energy_direct(as_field(alpha_map(2.0), g), LIN, UNIT)
    assert abs(e.value - 1.25) < 1e-12


def test_energy_degenerate_error():
    g = disk_grid(32)
    with pytest.raises(DegeneracyError) as exc:
        energy_direct(MappingField.from_function(g, np.conj), LIN, UNIT)
    assert exc.value.fraction == 1.0


def test_energy_inverse_identity_matches_direct():
    g = disk_grid(64)
    f = MappingField.identity(g)
    assert np.isclose(energy_inverse(f, LIN, UNIT).value,
                      energy_direct(f, LIN, UNIT).value)


def test_energy_inverse_alpha_pair_closed_form():
    # f = x + 2iy on [0,1]^2; h = f^{-1} = x + iy/2 on [0,1]x[0,2]
    gf = rectangle_grid(64)
    gh = rectangle_grid(64, (0.0, 1.0, 0.0, 2.0))
    f = as_field(alpha_map(2.0), gf)
    h = as_field(alpha_map(0.5), gh)
    e_dir = energy_direct(f, LIN, UNIT)
    e_inv = energy_inverse(h, LIN, UNIT)
    assert abs(e_dir.value - 1.25) < 1e-12
    assert abs(e_inv.value - 1.25) < 1e-12


def test_energy_inverse_range_error():
    # hyperbolic disk weight undefined at image points outside the disk
    g = rectangle_grid(32, (0.0, 2.0, 0.0, 2.0))
    f = MappingField.identity(g)
    with pytest.raises(RangeError):
        energy_inverse(f, LIN, hyperbolic_disk_weight())


def test_energy_monotonicity():
    g = disk_grid(48)
    f = as_field(radial_stretch(0.2), g)
    small = energy_direct(f, LIN, UNIT).value
    big_w = custom_weight(lambda z: 1.0 + np.abs(z) ** 2, "bigger")
    assert energy_direct(f, LIN, big_w).value >= small
    assert energy_direct(f, POW2, UNIT).value >= small


def test_energy_lower_bound():
    g = disk_grid(48)
    base = energy_direct(MappingField.identity(g), LIN, UNIT).value
    for fn in (radial_stretch(0.2), alpha_map(1.5), disk_mobius(0.2)):
        e = energy_direct(as_field(fn, g), LIN, UNIT)
        assert e.value >= base * (1 - 1e-12)


def test_singular_weight_exclusion_reported():
    g = disk_grid(64)
    e = energy_direct(MappingField.identity(g), LIN, hyperbolic_disk_weight(),
                      weight_cap=1e4)
    assert e.excluded_area > 0


def _cov_pair(n, smooth=True):
    g = disk_grid(n)
    f = as_field(radial_stretch(0.2), g)
    fi = as_field(radial_stretch_inverse(0.2), g)
    return f, fi


# smooth weight whose quadrature errors don't cancel between the two forms
W_SMOOTH = custom_weight(lambda z: 1.0 + 0.5 * np.real(z) + 0.3 * np.exp(np.imag(z)),
                         "smooth")


def test_cov_gap_identity_zero():
    g = disk_grid(64)
    f = MappingField.identity(g)
    r = cov_gap(f, f, LIN, W_SMOOTH)
    assert r.gap < 1e-14
    assert r.inverse_consistency < 1e-12


def test_cov_gap_radial_and_refinement():
    gaps = {}
    for n in (128, 256):
        f, fi = _cov_pair(n)
        r = cov_gap(f, fi, LIN, W_SMOOTH)
        gaps[n] = r.gap
    assert gaps[256] <= 1e-3
    assert gaps[128] / gaps[256] >= 2.0


def test_cov_gap_linear_pair_matched_grids_exact():
    # cell-centered lattices of equal n map onto each other exactly under
    # the alpha map, so both quadratures sample the weight at identical
    # points and the gap vanishes to rounding
    gf = rectangle_grid(128)
    gh = rectangle_grid(128, (0.0, 1.0, 0.0, 2.0))
    r = cov_gap(as_field(alpha_map(2.0), gf), as_field(alpha_map(0.5), gh),
                LIN, W_SMOOTH)
    assert r.gap < 1e-13


def test_cov_gap_linear_pair_refinement():
    # unmatched resolutions expose the genuine O(h^2) quadrature gap
    gaps = {}
    for n in (64, 128):
        gf = rectangle_grid(2 * n)
        gh = rectangle_grid(int(1.5 * n), (0.0, 1.0, 0.0, 2.0))
        r = cov_gap(as_field(alpha_map(2.0), gf), as_field(alpha_map(0.5), gh),
                    LIN, W_SMOOTH)
        gaps[n] = r.gap
    assert gaps[128] <= 1e-3
    assert gaps[64] / gaps[128] >= 2.0


def test_cov_gap_mobius_pair():
    g = disk_grid(256)
    a = 0.3
    f = as_field(disk_mobius(a), g)
    fi = as_field(lambda z: (np.asarray(z) + a) / (1 + a * np.asarray(z)), g)
    r = cov_gap(f, fi, LIN, W_SMOOTH)
    assert r.inverse_consistency < 1e-6
    assert r.gap <= 1e-3


def test_cov_gap_pairing_error():
    g = disk_grid(64)
    f = MappingField.identity(g)
    not_inverse = as_field(radial_stretch(0.4), g)
    with pytest.raises(PairingError):
        cov_gap(f, not_inverse, LIN, UNIT, inverse_tol=1e-3)
