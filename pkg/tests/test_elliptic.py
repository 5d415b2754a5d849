import numpy as np
import pytest

from beltlab.elliptic import (
    elliptic_cover,
    height_identity_defect,
    slit_modulus_R,
    slit_t_of_R,
)
from beltlab.quadrature import contour_fourier

COVER = elliptic_cover(0.5)


def test_modulus_roundtrip():
    for R in (1.0, 2.0, 4.0):
        t = slit_t_of_R(R)
        np.testing.assert_allclose(slit_modulus_R(t), R, atol=1e-8)


def test_modulus_monotone():
    ts = np.array([0.2, 0.4, 0.6, 0.8])
    Rs = np.array([slit_modulus_R(t) for t in ts])
    assert np.all(np.diff(Rs) < 0)


def test_cover_periodic_horizontally():
    eta = COVER.R / 2.0
    zeta = np.array([0.3 + 1j * eta, 2.1 + 1j * eta])
    a, _ = COVER.rho_and_deriv(zeta)
    b, _ = COVER.rho_and_deriv(zeta + 2 * np.pi)
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_cover_height_identity():
    assert height_identity_defect(0.5) < 1e-7


def test_invert_roundtrip():
    rng = np.random.default_rng(8)
    zeta = rng.uniform(0, 2 * np.pi, 12) + 1j * rng.uniform(
        0.1 * COVER.R, 0.9 * COVER.R, 12)
    w, _ = COVER.rho_and_deriv(zeta)
    back = COVER.invert(w)
    w2, _ = COVER.rho_and_deriv(back)
    np.testing.assert_allclose(w2, w, atol=1e-9)


def test_slit_mean_positive_for_ones():
    val = COVER.slit_mean(lambda x: np.ones(np.shape(x)))
    assert abs(np.imag(val)) < 1e-12
    assert np.real(val) > 0


def test_slit_mean_against_period_integral():
    phi_star = lambda x: 1.0 + 0.3 * np.asarray(x) ** 2
    direct = COVER.slit_mean(phi_star)
    via_rho = COVER.period_integral_via_rho(phi_star)
    np.testing.assert_allclose(via_rho, direct, atol=2e-6)


def test_lift_period_integral_matches_contour():
    phi_star = lambda x: np.ones(np.shape(x))
    lifted = COVER.lift(phi_star)
    got = contour_fourier(lifted, mode="horizontal", height=COVER.R / 2.0,
                          period=2 * np.pi, m=64)
    want = COVER.slit_mean(phi_star)
    np.testing.assert_allclose(got, want, atol=1e-4)


def test_outside_strip_rejected():
    with pytest.raises(ValueError):
        COVER.rho_and_deriv(np.array([1.0 - 0.2j]))
