import numpy as np
import pytest

from qcenergy.errors import DataError, DomainValidationError
from qcenergy.fields import (MappingField, beltrami, compose_distortion, distortion,
                             distortion_from_beltrami, finite_distortion_report,
                             wirtinger_derivatives)
from qcenergy.grids import disk_grid, rectangle_grid
from qcenergy.maps import alpha_map, as_field


@pytest.fixture(scope="module")
def disk64():
    return disk_grid(64)


def test_identity_derivatives(disk64):
    W = wirtinger_derivatives(MappingField.identity(disk64))
    d = W.defined
    assert np.allclose(W.fz[d], 1.0)
    assert np.allclose(W.fzb[d], 0.0)
    assert np.allclose(W.J[d], 1.0)


def test_conjugation_derivatives(disk64):
    f = MappingField.from_function(disk64, np.conj)
    W = wirtinger_derivatives(f)
    d = W.defined
    assert np.allclose(W.fz[d], 0.0)
    assert np.allclose(W.fzb[d], 1.0)
    assert np.all(W.J[d] < 0)


def test_linear_alpha_derivatives(disk64):
    # x + 2iy has f_z = 3/2, f_zbar = -1/2
    W = wirtinger_derivatives(as_field(alpha_map(2.0), disk64))
    d = W.defined
    assert np.allclose(W.fz[d], 1.5, atol=1e-12)
    assert np.allclose(W.fzb[d], -0.5, atol=1e-12)


@pytest.mark.parametrize("order", [2, 4])
def test_polynomial_exactness(order, disk64):
    # p(z) + q(zbar) of total degree <= order: exact on the interior
    rng = np.random.default_rng(7)
    cp = rng.normal(size=order + 1) + 1j * rng.normal(size=order + 1)
    cq = rng.normal(size=order + 1) + 1j * rng.normal(size=order + 1)
    fn = lambda z: sum(c * z ** k for k, c in enumerate(cp)) \
        + sum(c * np.conj(z) ** k for k, c in enumerate(cq))
    dfz = lambda z: sum(k * c * z ** (k - 1) for k, c in enumerate(cp) if k)
    dfzb = lambda z: sum(k * c * np.conj(z) ** (k - 1) for k, c in enumerate(cq) if k)
    W = wirtinger_derivatives(MappingField.from_function(disk64, fn), order)
    i = W.interior & W.defined
    zz = disk64.zz
    relz = np.abs(W.fz[i] - dfz(zz[i])) / (1 + np.abs(dfz(zz[i])))
    relzb = np.abs(W.fzb[i] - dfzb(zz[i])) / (1 + np.abs(dfzb(zz[i])))
    assert relz.max() < 1e-12
    assert relzb.max() < 1e-12


def test_degree2_exact_everywhere(disk64):
    fn = lambda z: (1 + 2j) * z ** 2 - z + 0.3 * np.conj(z) ** 2
    W = wirtinger_derivatives(MappingField.from_function(disk64, fn), 4)
    d = W.defined
    zz = disk64.zz
    assert np.max(np.abs(W.fz[d] - (2 * (1 + 2j) * zz[d] - 1))) < 1e-11
    assert np.max(np.abs(W.fzb[d] - 0.6 * np.conj(zz[d]))) < 1e-11


def test_nonfinite_values_raise(disk64):
    vals = disk64.zz.copy()
    j, i = np.argwhere(disk64.inside)[0]
    vals[j, i] = np.nan
    with pytest.raises(DataError):
        MappingField.from_values(disk64, vals)


def test_distortion_basics(disk64):
    W = wirtinger_derivatives(MappingField.identity(disk64))
    D = distortion(W)
    assert np.allclose(D.K[D.valid], 1.0)
    # x+2iy: K = (1+alpha^2)/(2 alpha) = 1.25
    W2 = wirtinger_derivatives(as_field(alpha_map(2.0), disk64))
    D2 = distortion(W2)
    assert np.allclose(D2.K[D2.valid], 1.25, atol=1e-10)
    # z + 0.5 zbar: |mu| = 0.5 so K = 5/3
    f = MappingField.from_function(disk64, lambda z: z + 0.5 * np.conj(z))
    D3 = distortion(wirtinger_derivatives(f))
    assert np.allclose(D3.K[D3.valid], 5.0 / 3.0, atol=1e-10)


def test_beltrami_and_consistency(disk64):
    W = wirtinger_derivatives(MappingField.identity(disk64))
    B = beltrami(W)
    assert np.allclose(B.mu[B.valid], 0.0)
    f = MappingField.from_function(disk64, lambda z: z + (0.2 + 0.4j) * np.conj(z))
    Wf = wirtinger_derivatives(f)
    Bf = beltrami(Wf)
    assert np.allclose(Bf.mu[Bf.valid], 0.2 + 0.4j, atol=1e-11)
    # alpha map: mu = (1-alpha)/(1+alpha) = -1/3
    Wa = wirtinger_derivatives(as_field(alpha_map(2.0), disk64))
    Ba = beltrami(Wa)
    assert np.allclose(Ba.mu[Ba.valid], -1.0 / 3.0, atol=1e-11)
    # K-consistency between the two routes
    D_direct = distortion(Wf)
    D_mu = distortion_from_beltrami(Bf)
    both = D_direct.valid & D_mu.valid
    rel = np.abs(D_direct.K[both] - D_mu.K[both]) / D_direct.K[both]
    assert rel.max() < 1e-12


def test_distortion_from_beltrami_values(disk64):
    zz = disk64.zz
    from qcenergy.fields import BeltramiField
    for mu, K in ((0.0, 1.0), (1.0 / 3.0, 1.25), (0.5, 5.0 / 3.0)):
        B = BeltramiField(disk64, np.full(zz.shape, mu + 0j), disk64.inside.copy())
        D = distortion_from_beltrami(B)
        assert np.allclose(D.K[D.valid], K)
    B = BeltramiField(disk64, np.full(zz.shape, 1.0 + 0j), disk64.inside.copy())
    D = distortion_from_beltrami(B)
    assert D.degenerate[D.defined].all()


def test_finite_distortion_report(disk64):
    rep = finite_distortion_report(MappingField.identity(disk64))
    assert rep.degenerate_fraction == 0.0
    assert rep.verdict == "finite distortion (discrete)"
    assert np.isclose(rep.distortion_sup, 1.0)

    rep2 = finite_distortion_report(MappingField.from_function(disk64, np.conj))
    assert rep2.verdict == "not finite distortion (discrete)"
    assert rep2.degenerate_fraction == 1.0

    # z^2 degenerates only at the origin, which cell-centered grids avoid
    rep3 = finite_distortion_report(MappingField.from_function(disk64, lambda z: z ** 2))
    n_def = rep3.n_defined
    assert rep3.degenerate_fraction <= 1.0 / n_def


def test_compose_distortion_identities():
    assert np.isclose(compose_distortion(0.3 + 0.1j, 0.3 + 0.1j), 1.0)
    mu_h = 0.25 - 0.35j
    K_h = (1 + abs(mu_h) ** 2) / (1 - abs(mu_h) ** 2)
    assert np.isclose(compose_distortion(0.0, mu_h), K_h)
    with pytest.raises(DomainValidationError):
        compose_distortion(1.0, 0.2)
    with pytest.raises(DomainValidationError):
        compose_distortion(0.2, 1.2 + 0.1j)


def _linear_map_matrix(mu):
    # real-linear z + mu zbar as a 2x2 matrix
    a, b = 1.0, mu
    return np.array([[np.real(a + b), -np.imag(a - b)],
                     [np.imag(a + b), np.real(a - b)]])


def test_compose_distortion_against_linear_oracle():
    # brute force: compose constant-derivative linear maps and take K of H
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(1000):
        mu_xi = (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)) * 0.7
        mu_h = (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)) * 0.7
        if abs(mu_xi) >= 0.95 or abs(mu_h) >= 0.95:
            continue
        A_xi = _linear_map_matrix(mu_xi)
        A_h = _linear_map_matrix(mu_h)
        A_H = A_h @ np.linalg.inv(A_xi)
        K_oracle = (A_H ** 2).sum() / (2 * np.linalg.det(A_H))
        K = compose_distortion(mu_xi, mu_h)
        worst = max(worst, abs(K - K_oracle) / K_oracle)
        assert K >= 1.0 - 1e-12
    assert worst < 1e-12
