import numpy as np
import pytest

from beltlab.domains import CellDecomposition, Disk, RoundAnnulus
from beltlab.extremal import four_limits, hamilton_preimage, teich_distance
from beltlab.fields import example1_field
from beltlab.geodesics import (
    SeparationCertificate,
    annulus_pairing_quadrature,
    build_family,
    build_infinite_family,
    default_dictionary,
    distinguished_parameter,
    forward_pairings,
    holomorphy_check,
    lambda_prime_contains,
    pairing_observable,
    patch_pairing,
    recover_parameters,
    recovery_calibration,
    sample_lambda_prime,
    separate,
    shear_response,
)
from beltlab.qdiff import dictionary_differential, qs_basis


def annulus_family(t0=0.3):
    return build_family("annulus", RoundAnnulus(1.5, 0.7, 0.95),
                        example1_field(t0), t0)


def test_shear_response_values():
    np.testing.assert_allclose(shear_response(1.0), 0.2)
    assert shear_response(0.0) == 0.0
    a = shear_response(0.3 + 0.2j)
    np.testing.assert_allclose(shear_response(0.3 - 0.2j), np.conj(a))


def test_distinguished_parameter_solves_modulus_equation():
    for t0 in (0.2, 0.46, 0.7):
        lam0 = distinguished_parameter(t0)
        m = abs(-0.5j * lam0 / (1.0 + 0.5j * lam0))
        np.testing.assert_allclose(m, t0, atol=1e-14)
        assert lambda_prime_contains(0.999 * lam0, t0)
        assert not lambda_prime_contains(1.001 * lam0, t0)
    with pytest.raises(ValueError):
        distinguished_parameter(1.0)
    with pytest.raises(ValueError):
        lambda_prime_contains(0.5, 0.0)


def test_member_admissibility():
    fam = annulus_family()
    assert fam.admissible(0.2)
    assert not fam.admissible(5.0)
    assert not fam.admissible(-0.5)
    with pytest.raises(ValueError):
        fam.member(5.0)
    with pytest.raises(ValueError):
        fam.member()


def test_zero_parameter_member_removes_patch():
    fam = annulus_family()
    mu = fam.member(0.0)
    inside = np.array([1.5 + 0.8j, 2.3 + 0.1j])
    outside = np.array([0.4 + 0.2j, 1.5 + 0.1j, 3.7 - 0.6j])
    np.testing.assert_array_equal(mu(inside), 0.0)
    np.testing.assert_array_equal(mu(outside), fam.base(outside))


def test_distinguished_member_has_constant_modulus():
    fam = annulus_family()
    mu = fam.distinguished_member()
    rng = np.random.default_rng(5)
    z = rng.uniform(-1, 4, 1000) + 1j * rng.uniform(-2, 2, 1000)
    z = z[fam.domain.contains(z)]
    assert np.max(np.abs(np.abs(mu(z)) - fam.t0)) < 1e-10
    # every member realizes the same extremal distance
    dists = {teich_distance(1.0, fam.member(lam).sup_norm())
             for lam in (0.05, 0.2, fam.lambda0)}
    assert len(dists) == 1


def test_build_family_validation():
    base = example1_field(0.3)
    with pytest.raises(ValueError):
        build_family("annulus", RoundAnnulus(1.5, 0.3, 0.95), base, 0.3)
    with pytest.raises(ValueError):
        build_family("disk", Disk(2.0, 0.4), base, 0.3)
    with pytest.raises(ValueError):
        build_family("punctured_disk", Disk(1.5, 0.2), base, 0.3)
    with pytest.raises(ValueError):
        build_family("torus", RoundAnnulus(1.5, 0.7, 0.95), base, 0.3)
    with pytest.raises(ValueError):
        build_family("annulus", RoundAnnulus(1.5, 0.7, 0.95), base, 0.25)


def test_random_pairs_are_separated():
    fam = annulus_family()
    rng = np.random.default_rng(17)
    lams = sample_lambda_prime(fam.t0, 40, rng)
    for lam1, lam2 in lams.reshape(20, 2):
        cert = separate(fam, lam1, lam2)
        assert cert is not None
        assert cert.valid
        assert abs(cert.pairing) > cert.threshold


def test_equal_parameters_are_not_separated():
    fam = annulus_family()
    assert separate(fam, 0.37, 0.37) is None
    for phi in default_dictionary(2):
        d = patch_pairing(fam, 0.37, phi) - patch_pairing(fam, 0.37, phi)
        assert abs(d) < 1e-10
    bogus = SeparationCertificate(lambda1=0.1, lambda2=0.2, phi=None,
                                  pairing=1e-12, threshold=1e-9,
                                  dictionary_index=0)
    assert not bogus.valid


def test_punctured_disk_family_never_separates():
    fam = build_family("punctured_disk", Disk(2.0, 0.4),
                       example1_field(0.3), 0.3)
    assert fam.closure_meets_punctures
    assert separate(fam, 0.2, 0.5) is None


def test_disk_family_separates():
    fam = build_family("disk", Disk(0.5 + 0.7j, 0.25),
                       example1_field(0.3), 0.3)
    cert = separate(fam, 0.2, 0.6)
    assert cert is not None and cert.valid


def test_closed_form_matches_quadrature():
    fam = annulus_family()
    phi = dictionary_differential(0, 2, "alpha")
    cf = patch_pairing(fam, 0.9, phi) - patch_pairing(fam, 0.4, phi)
    q = (annulus_pairing_quadrature(0.9, 1.5, 0.7, 0.95, phi)
         - annulus_pairing_quadrature(0.4, 1.5, 0.7, 0.95, phi))
    assert abs(cf - q) < 1e-12


def test_sampled_parameters_lie_in_the_region():
    fam = annulus_family()
    rng = np.random.default_rng(23)
    lams = sample_lambda_prime(0.3, 50, rng)
    assert all(lambda_prime_contains(lam, 0.3) for lam in lams)
    assert np.all(np.imag(lams) >= 0.0)
    assert np.all(np.real(lams) > 0.0)
    for lam in lams[:20]:
        assert fam.member(lam).sup_norm() <= fam.t0 + 1e-12


def test_string_family_structure():
    t0 = 0.3
    K = distinguished_parameter(t0)
    seq = np.array([0.1, 0.2, 0.0, 0.25, 0.05])
    fam = build_infinite_family(seq, K, t0)
    assert fam.L == 2
    assert len(fam.member_field.pieces) == 2 * fam.L + 2
    np.testing.assert_array_equal(fam.lambda_seq, seq)
    mu = fam.distinguished_member()
    z = np.array([1.5 + 0.8j, -4.5 + 0.9j, 0.3 + 0.2j])
    np.testing.assert_allclose(np.abs(mu(z)), t0, atol=1e-12)

    with pytest.raises(ValueError):
        build_infinite_family(seq[:4], K, t0)
    with pytest.raises(ValueError):
        build_infinite_family(seq, K + 0.1, t0)
    bad = seq.copy()
    bad[1] = 2.0 * K
    with pytest.raises(ValueError, match="admissible set"):
        build_infinite_family(bad, K, t0)


def test_double_difference_is_local():
    t0 = 0.3
    K = distinguished_parameter(t0)
    seq = np.zeros(5, dtype=complex)
    seq[3] = 0.3  # slot j = +1
    fam = build_infinite_family(seq, K, t0)
    M = forward_pairings(fam, 2)
    d = (M[0, 1:] - M[0, 0]) - (M[1, 1:] - M[1, 0])
    assert abs(d[3]) > 1e-8
    others = np.delete(np.abs(d), 3)
    assert np.max(others) < 1e-12


def test_recovery_roundtrip():
    t0 = 0.3
    K = distinguished_parameter(t0)
    seq = np.array([0.1, 0.25 + 0.1j, 0.0, 0.3, 0.15j])
    fam = build_infinite_family(seq, K, t0)
    M = forward_pairings(fam, 2)
    rec = recover_parameters(M, 2, fam)
    assert np.max(np.abs(rec - seq)) < 1e-6
    with pytest.raises(ValueError):
        recover_parameters(M[:, :4], 2, fam)
    single = annulus_family()
    with pytest.raises(ValueError):
        recover_parameters(M, 2, single)


def test_calibration_scalar():
    np.testing.assert_allclose(recovery_calibration(), -1.0, atol=1e-9)


def test_pairing_observable_is_holomorphic():
    fam = build_family("annulus", RoundAnnulus(1.5, 0.7, 0.95),
                       example1_field(0.5), 0.5)
    obs = pairing_observable(fam, dictionary_differential(0, 3, "alpha"))
    for c in (0.5, 0.8, 1.0):
        rep = holomorphy_check(obs, c, 0.1)
        assert rep.passed, (c, rep.cr_residual, rep.circle_defect)
    conj = holomorphy_check(lambda lam: np.conj(obs(lam)), 0.8, 0.1)
    assert not conj.passed
    assert abs(conj.cr_residual - 2.0) < 1e-6
    assert holomorphy_check(shear_response, 0.8, 0.1).passed


def test_member_diagnostics_stay_near_base():
    """Patching one annulus moves the translation-average pairings only a
    little; the family shares the base's asymptotics."""
    fam = annulus_family()
    decomp = CellDecomposition()
    qs_r, _ = qs_basis()
    f = hamilton_preimage(qs_r, decomp.step)
    d1 = four_limits(fam.member(0.5), qs_r, f, decomp, 4)
    d0 = four_limits(fam.base, qs_r, f, decomp, 4)
    assert np.max(np.abs(d1.pairings - d0.pairings)) < 0.05
