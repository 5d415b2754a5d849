import numpy as np
import pytest

from beltlab.domains import RoundAnnulus, exp_cover
from beltlab.fields import (
    LambdaParam,
    annulus_family,
    annulus_patch,
    annulus_shear_map,
    example1_field,
    fd_beltrami,
    glue,
    piece_constants,
    piece_moduli,
    pullback,
    radial_stretch,
    radial_stretch_map,
    strip_family,
    strip_shear_map,
)


def test_lambda_param_validation():
    LambdaParam(0.5 + 0.9j)
    with pytest.raises(ValueError):
        LambdaParam(-0.1)
    with pytest.raises(ValueError):
        LambdaParam(0.5 + 1.0j)


def test_piece_constant_identities():
    lam = 0.7 + 0.2j
    lo, up = piece_constants(lam)
    np.testing.assert_allclose(lo, 1j * lam / (2 - 1j * lam), rtol=1e-14)
    np.testing.assert_allclose(up, -1j * lam / (2 + 1j * lam), rtol=1e-14)
    # the two constants sum to -2 lam^2 / (4 + lam^2)
    np.testing.assert_allclose(lo + up, -2 * lam**2 / (4 + lam**2),
                               rtol=1e-13)


def test_strip_family_matches_its_map():
    R = 2.0
    rng = np.random.default_rng(1)
    for lam in (0.5, 1.0, 1.0 + 0.5j):
        mu = strip_family(lam, R)
        F = strip_shear_map(lam, R)
        # stay away from the interface and the edges
        z = rng.uniform(-5, 5, 40) + 1j * np.concatenate(
            [rng.uniform(0.05, 0.9, 20), rng.uniform(1.1, 1.95, 20)])
        got = fd_beltrami(F, z, h=1e-4)
        np.testing.assert_allclose(got, mu(z), atol=1e-6)


def test_annulus_family_matches_its_map():
    inner = 0.2
    rng = np.random.default_rng(2)
    for lam in (0.5, 1.0, 1.0 + 0.5j):
        mu = annulus_family(lam, inner)
        F = annulus_shear_map(lam, inner)
        r_mid = np.sqrt(inner)
        r = np.concatenate([rng.uniform(inner + 0.02, r_mid - 0.02, 20),
                            rng.uniform(r_mid + 0.02, 0.98, 20)])
        th = rng.uniform(0, 2 * np.pi, 40)
        z = r * np.exp(1j * th)
        got = fd_beltrami(F, z, h=1e-4)
        np.testing.assert_allclose(got, mu(z), atol=1e-6)


def test_radial_stretch_matches_its_map():
    K = 2.0
    mu = radial_stretch(K)
    F = radial_stretch_map(K)
    rng = np.random.default_rng(3)
    z = rng.uniform(0.1, 0.9, 30) * np.exp(2j * np.pi * rng.uniform(0, 1, 30))
    got = fd_beltrami(F, z, h=1e-5)
    np.testing.assert_allclose(got, mu(z), atol=1e-6)
    assert mu.sup_norm() == (K - 1.0) / (K + 1.0)


def test_pullback_preserves_modulus_pointwise():
    lam = 0.8
    inner = np.exp(-1.5)
    mu = annulus_family(lam, inner)
    cov = exp_cover(1.5)
    mu_hat = pullback(mu, cov)
    rng = np.random.default_rng(4)
    zeta = rng.uniform(-8, 8, 500) + 1j * rng.uniform(0.01, 1.49, 500)
    np.testing.assert_allclose(np.abs(mu_hat(zeta)), np.abs(mu(cov(zeta))),
                               atol=1e-14)


def test_annulus_patch_modulus_profile():
    lam = 0.9 + 0.4j
    patch = annulus_patch(lam, 1.5, 0.5, 1.0)
    m_in, m_out = piece_moduli(lam)
    r_mid = np.sqrt(0.5)
    th = np.linspace(0, 2 * np.pi, 7)[:-1]
    z_in = 1.5 + 0.6 * np.exp(1j * th)
    z_out = 1.5 + 0.9 * np.exp(1j * th)
    # inner ring takes the constant -up, outer ring -lo
    np.testing.assert_allclose(np.abs(patch(z_in)), m_out, atol=1e-14)
    np.testing.assert_allclose(np.abs(patch(z_out)), m_in, atol=1e-14)
    assert np.all(np.abs(patch(np.array([1.5 + 1.2j, 1.5]))) == 0)


def test_glue_switches_on_region():
    base = example1_field(0.3)
    U = RoundAnnulus(1.5, 0.7, 0.95)
    patch = annulus_patch(0.5, 1.5, 0.7, 0.95)
    g = glue(base, patch, U)
    z_in = np.array([1.5 + 0.8j])
    z_out = np.array([0.4 + 0.2j])
    np.testing.assert_allclose(g(z_in), patch(z_in))
    np.testing.assert_allclose(g(z_out), base(z_out))


def test_example1_constant_modulus():
    k = 0.3
    mu = example1_field(k)
    rng = np.random.default_rng(6)
    z = rng.uniform(-10, 10, 2000) + 1j * rng.uniform(-3, 3, 2000)
    vals = np.abs(mu(z))
    np.testing.assert_allclose(vals, k, atol=1e-12)
    assert mu.sup_norm() == k
