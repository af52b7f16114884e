import numpy as np
import pytest

from qcenergy.errors import ConfigurationError
from qcenergy.profiles import (exp_profile, growth_diagnostic, linear_profile,
                               parse_profile, power_profile, validate_profile)
from qcenergy.weights import (cayley_weight, hyperbolic_disk_weight,
                              hyperbolic_half_plane_weight, parse_weight, unit_weight,
                              weight_monotone_along_rays)


@pytest.mark.parametrize("profile", [linear_profile(), power_profile(2),
                                     power_profile(3.5), exp_profile(1.0)])
def test_profile_contract(profile):
    checks = validate_profile(profile, np.random.default_rng(1))
    assert all(checks.values()), checks


def test_profile_parsing():
    assert parse_profile("linear").name == "linear"
    assert parse_profile("power:2").name == "power:2"
    assert parse_profile("exp:0.5").name == "exp:0.5"
    for bad in ("power", "power:0.5", "exp:-1", "cubic", "linear:2", "power:x"):
        with pytest.raises(ConfigurationError):
            parse_profile(bad)


def test_growth_diagnostic_trends():
    rep = growth_diagnostic(power_profile(2), t_max=1e3)
    assert rep.trend == "bounded"
    assert abs(rep.limit_estimate - 2.0) < 0.01

    rep_lin = growth_diagnostic(linear_profile())
    assert rep_lin.trend == "bounded"
    assert np.allclose(rep_lin.ratios, 1.0)

    rep_exp = growth_diagnostic(exp_profile(1.0), t_max=100)
    assert rep_exp.trend == "unbounded"
    assert abs(rep_exp.limit_estimate - 100.0) < 1.0

    with pytest.raises(ConfigurationError):
        growth_diagnostic(linear_profile(), t_max=5)


def test_weight_values():
    z = np.array([0.0 + 0.0j, 0.5j, 0.3 + 0.1j])
    assert np.allclose(unit_weight()(z), 1.0)
    assert np.allclose(hyperbolic_disk_weight()(z), (1 - np.abs(z) ** 2) ** -2.0)
    w = np.array([1j, 0.5 + 2j])
    assert np.allclose(hyperbolic_half_plane_weight()(w), np.imag(w) ** -2.0)
    assert np.allclose(cayley_weight()(z), 4.0 / np.abs(z + 1) ** 4)


def test_weight_positive_and_monotone():
    rng = np.random.default_rng(3)
    pts = 0.9 * (rng.uniform(-1, 1, 200) + 1j * rng.uniform(-1, 1, 200))
    pts = pts[np.abs(pts) < 0.95]
    for w in (unit_weight(), hyperbolic_disk_weight()):
        assert np.all(w(pts) > 0)
    assert weight_monotone_along_rays(hyperbolic_disk_weight())


def test_weight_parsing():
    for kind in ("unit", "hyp-disk", "hyp-half", "cayley"):
        assert parse_weight(kind).kind == kind
    with pytest.raises(ConfigurationError):
        parse_weight("euclidean")


def test_weight_domains():
    wd = hyperbolic_disk_weight()
    assert wd.domain(np.array([0.5j]))[0]
    assert not wd.domain(np.array([1.2 + 0j]))[0]
    wh = hyperbolic_half_plane_weight()
    assert wh.domain(np.array([1j]))[0]
    assert not wh.domain(np.array([-1j]))[0]


def test_on_imag_profile():
    wh = hyperbolic_half_plane_weight()
    s = np.array([0.5, 1.0, 2.0])
    assert np.allclose(wh.on_imag(s), s ** -2.0)
    assert np.allclose(unit_weight().on_imag(s), 1.0)
