import numpy as np
import pytest

from qcenergy.errors import (DomainValidationError, RangeError,
                             UnsupportedBranchError)
from qcenergy.grids import half_plane_grid
from qcenergy.ode import (CONTRACTING, EXPANDING, F_eval, F_inverse, M_limit,
                          ah_residual, build_half_plane_map, harmonic_closed_form,
                          linear_alpha_profile, power2_exponent, solve_profile,
                          surjectivity_diagnosis)
from qcenergy.profiles import exp_profile, linear_profile, power_profile
from qcenergy.weights import hyperbolic_half_plane_weight, unit_weight

LIN = linear_profile()
POW2 = power_profile(2)
ETA = hyperbolic_half_plane_weight()


def test_F_values():
    assert F_eval(POW2, 1.0) == 0.0
    assert np.isclose(F_eval(POW2, 2.0), -7.5)       # (1-t^4)/t at t=2
    assert np.isclose(F_eval(LIN, 0.5), 0.75)        # 1-t^2
    with pytest.raises(DomainValidationError):
        F_eval(LIN, -1.0)


def test_F_strictly_decreasing():
    rng = np.random.default_rng(0)
    for psi in (LIN, POW2, power_profile(3), exp_profile(0.7)):
        t = np.sort(rng.uniform(0.05, 5.0, 1000))
        vals = F_eval(psi, t)
        assert np.all(np.diff(vals) < 0)


def test_M_limits():
    assert np.isclose(M_limit(LIN), 1.0, atol=1e-10)
    assert M_limit(POW2) == np.inf
    assert M_limit(exp_profile(1.0)) == np.inf


def test_F_inverse_basics():
    assert F_inverse(LIN, 0.0, CONTRACTING) == 1.0
    assert np.isclose(F_inverse(LIN, 0.75, CONTRACTING), 0.5, atol=1e-13)
    # psi = t^2 asymptotics: F^{-1}(y) ~ 1/y on the contracting branch
    y = 1e4
    assert abs(F_inverse(POW2, y, CONTRACTING) - 1.0 / y) < 1e-7 / y
    # residual contract
    for y in (0.3, 0.9, 0.999):
        t = F_inverse(LIN, y, CONTRACTING)
        assert abs(F_eval(LIN, t) - y) <= 1e-13 * (1 + y)
    t = F_inverse(POW2, -123.0, EXPANDING)
    assert abs(F_eval(POW2, t) + 123.0) <= 1e-13 * 124


def test_F_inverse_range_errors():
    with pytest.raises(RangeError):
        F_inverse(LIN, 1.5, CONTRACTING)    # above M = 1
    with pytest.raises(RangeError):
        F_inverse(LIN, -0.5, CONTRACTING)
    with pytest.raises(RangeError):
        F_inverse(LIN, 0.5, EXPANDING)


def test_lambda_zero_identity():
    p = solve_profile(LIN, ETA, 0.0, 50.0)
    ys = np.linspace(0, 50, 11)
    assert np.array_equal(p.u(ys), ys)
    assert p.branch == "identity"
    assert np.all(p.ups == 1.0)


def test_harmonic_profile_matches_closed_form():
    p = solve_profile(LIN, ETA, -1.0, 10.0)
    cf = harmonic_closed_form(-1.0)
    ys = np.linspace(0.0, 10.0, 201)
    rel = np.abs(p.u(ys) - cf.u(ys)) / (1 + np.abs(cf.u(ys)))
    assert rel.max() <= 1e-8
    # branch and residual invariants
    assert p.branch == EXPANDING
    assert np.all(p.ups >= 1.0 - 1e-12)
    eta_vals = ETA.on_imag(p.us)
    tol = np.maximum(1e-9, 2e-13 * np.where(np.isfinite(eta_vals), eta_vals, 0.0))
    assert np.all(p.residuals() <= tol)


def test_harmonic_closed_form_against_ivp_oracle():
    # independent high-precision IVP integration of u' = sqrt(1 - 4 lam u^2)
    from scipy.integrate import solve_ivp
    for lam in (-1.0, -0.37):
        cf = harmonic_closed_form(lam)
        sol = solve_ivp(lambda y, u: np.sqrt(1 - 4 * lam * u[0] ** 2), (0, 10), [0.0],
                        rtol=1e-12, atol=1e-14, dense_output=True)
        ys = np.linspace(0, 10, 41)
        rel = np.abs(sol.sol(ys)[0] - cf.u(ys)) / (1 + np.abs(cf.u(ys)))
        assert rel.max() < 1e-10
    # K in the image coordinate agrees with K from u'
    cf = harmonic_closed_form(-1.0)
    ys = np.linspace(0, 5, 21)
    assert np.allclose(cf.K_of_y(ys), cf.K_of_s(cf.u(ys)), rtol=1e-13)


def test_harmonic_sup_K_unbounded():
    cf = harmonic_closed_form(-1.0)
    sups = [cf.K_of_y(Y) for Y in (5.0, 10.0, 20.0)]
    assert sups[0] < sups[1] < sups[2]
    assert sups[2] > 1e3
    with pytest.raises(UnsupportedBranchError):
        harmonic_closed_form(0.5)
    cf0 = harmonic_closed_form(0.0)
    assert np.allclose(cf0.u(np.array([1.0, 2.0])), [1.0, 2.0])
    assert np.allclose(cf0.K_of_y(np.array([3.0])), 1.0)


def test_power2_exponents():
    pp = solve_profile(POW2, ETA, 1.0, 1.2e4)
    assert abs(power2_exponent(pp, (1e2, 1e4)) - 1.0 / 3.0) <= 0.02
    pm = solve_profile(POW2, ETA, -1.0, 1.2e4)
    assert abs(power2_exponent(pm, (1e2, 1e4)) - 3.0) <= 0.05
    p0 = solve_profile(POW2, ETA, 0.0, 1.2e4)
    assert abs(power2_exponent(p0, (1e2, 1e4)) - 1.0) < 1e-12
    with pytest.raises(RangeError):
        power2_exponent(pp, (1e5, 1e6))


@pytest.mark.parametrize("psi,lam,expected", [
    (power_profile(3), 1.0, "surjective"),
    (power_profile(4), 1.0, "surjective"),
    (POW2, 1.0, "not surjective"),
    (POW2, -1.0, "surjective"),
])
def test_surjectivity_verdicts(psi, lam, expected):
    p = solve_profile(psi, ETA, lam, 1100.0)
    assert surjectivity_diagnosis(p).verdict == expected


def test_no_solution_case():
    # M = 1 finite for Psi = t; lambda > 0 with decaying hyperbolic eta
    p = solve_profile(LIN, ETA, 1.0, 1000.0)
    assert p.no_solution
    assert not p.complete
    assert abs(p.us[-1] - 0.5) < 1e-6       # exhaustion at u* = 1/(2 sqrt(lam))
    d = surjectivity_diagnosis(p)
    assert d.verdict == "not surjective"
    assert d.no_solution


def test_overflow_expanding_branch():
    # exponential growth leaves double range; verdict stays surjective
    p = solve_profile(LIN, ETA, -0.5, 1100.0)
    assert p.overflow
    d = surjectivity_diagnosis(p)
    assert d.verdict == "surjective"


def test_linear_alpha_profile_and_map():
    psi = LIN
    for alpha in (0.5, 2.0):
        prof = linear_alpha_profile(psi, alpha, y_max=6.0)
        grid = half_plane_grid(64, X=3, y_min=0.05, Y=5)
        h, W = build_half_plane_map(prof, grid)
        assert np.allclose(h.values[grid.inside].real, grid.zz[grid.inside].real)
        assert np.allclose(h.values[grid.inside].imag, alpha * grid.zz[grid.inside].imag)
        res = ah_residual(h, psi, unit_weight(), prof.lam, wirtinger=W)
        assert res <= 1e-12


def test_solved_profile_map_and_residual():
    prof = solve_profile(LIN, ETA, -1.0, 6.0)
    grid = half_plane_grid(96, X=3, y_min=0.1, Y=5)
    h, W = build_half_plane_map(prof, grid)
    # analytic derivatives: residual only limited by bisection + eta scale
    res = ah_residual(h, LIN, ETA, -1.0, wirtinger=W)
    assert res <= 1e-10
    # finite-difference derivatives see the discretization instead
    res_fd = ah_residual(h, LIN, ETA, -1.0, stencil_order=4)
    assert res_fd <= 1e-4
    with pytest.raises(RangeError):
        build_half_plane_map(prof, half_plane_grid(64, X=3, y_min=0.1, Y=8.0))


def test_branch_invariants_contracting():
    p = solve_profile(power_profile(3), ETA, 1.0, 100.0)
    assert np.all((p.ups > 0) & (p.ups < 1 + 1e-12))
    assert np.all(np.diff(p.us) >= 0)
    assert p.complete
