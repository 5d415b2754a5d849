import numpy as np

from beltlab.domains import Cell, CellDecomposition
from beltlab.extremal import (
    build_hamilton_term,
    certify_extremal,
    four_limits,
    hamilton_preimage,
    hypothesis_check,
    pairing,
    teich_distance,
)
from beltlab.fields import BeltramiField, Piece, example1_field
from beltlab.qdiff import poincare_series, qs_basis


def test_teich_distance_formula():
    np.testing.assert_allclose(teich_distance(1.0, 0.3), np.arctanh(0.3))
    np.testing.assert_allclose(teich_distance(0.5, 0.6), np.arctanh(0.3))
    assert teich_distance(0.0, 0.9) == 0.0


def test_preimage_sums_back_to_basis():
    """The deck average of the preimage returns the periodic element."""
    qs_r, _ = qs_basis()
    f = hamilton_preimage(qs_r, 3.0)
    theta = poincare_series(f, N=600)
    assert np.isfinite(theta.tail_bound)
    z = np.array([0.6 + 0.4j, 1.9 - 0.7j, 2.4 + 1.1j])
    np.testing.assert_allclose(theta(z), qs_r(z),
                               atol=max(50 * theta.tail_bound, 1e-9))


def test_pairing_against_cell():
    mu = example1_field(0.3)
    qs_r, _ = qs_basis()
    val = pairing(mu, qs_r, region=Cell(3.0, 0),
                  window=(0.0, 3.0, -12.0, 12.0), tol=1e-6)
    # the cell norm of qs_r is one, so the pairing modulus is bounded by
    # the sup norm of the field
    assert abs(val) <= 0.3 + 1e-6
    assert np.real(val) > 0.0


def test_hamilton_term_shift_structure():
    """Successive terms differ by one extra translate of the preimage."""
    qs_r, _ = qs_basis()
    decomp = CellDecomposition()
    f = hamilton_preimage(qs_r, decomp.step)
    f0 = build_hamilton_term(f, decomp, 0)
    f1 = build_hamilton_term(f, decomp, 1)
    f2 = build_hamilton_term(f, decomp, 2)
    z = np.array([0.7 + 0.3j, 1.4 - 0.8j, 2.2 + 1.0j])
    lhs = (f2(z) - f1(z)) / (f1(z) - f0(z))
    rhs = f(z - 2 * decomp.step) / f(z - decomp.step)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10)


def test_teich_lift_gap_closes_immediately():
    """The lifted extremal coefficient k|f|/f pairs back its own constant
    within a handful of terms."""
    k = 0.25
    decomp = CellDecomposition()
    qs_r, _ = qs_basis()
    f = hamilton_preimage(qs_r, decomp.step)

    def lift_fun(z):
        v = f(np.asarray(z, complex))
        return k * np.abs(v) / v

    mu = BeltramiField(
        pieces=[Piece(lambda z: np.ones(np.shape(z), dtype=bool), lift_fun, k)],
        sup_override=k,
    )
    diag = four_limits(mu, qs_r, f, decomp, 5)
    gap = k - np.max(np.real(diag.pairings))
    assert abs(gap) < 1e-3


def test_four_limits_trends_for_reference_field():
    k = 0.3
    mu = example1_field(k)
    decomp = CellDecomposition()
    qs_r, _ = qs_basis()
    f = hamilton_preimage(qs_r, decomp.step)
    diag = four_limits(mu, qs_r, f, decomp, 12)
    # L1 climbs toward k, L2/L3 decay, L4 approaches 1
    assert abs(diag.L1[-1] - k) < abs(diag.L1[2] - k)
    assert diag.L2[-1] < diag.L2[2]
    assert diag.L3[-1] < diag.L3[2]
    assert abs(diag.L4[-1] - 1.0) < 0.05
    assert diag.tail_estimate < 1e-3


def test_hypothesis_residuals_decrease():
    mu = example1_field(0.3)
    qs_r, _ = qs_basis()
    rep = hypothesis_check(mu, qs_r, 0.3, CellDecomposition(), n_max=30)
    assert rep.decreasing
    assert not rep.flagged


def test_certificate_small_truncation_reports_gap():
    cert = certify_extremal(example1_field(0.3), (qs_basis()[0], 0.3), N=6)
    assert cert.gap > 0
    assert len(cert.pairing_trace) == 7
    rows = cert.trace_rows()
    assert len(rows) == 7 and rows[-1][0] == 6
    # a deeper truncation never loses ground
    cert2 = certify_extremal(example1_field(0.3), (qs_basis()[0], 0.3), N=12)
    assert cert2.gap <= cert.gap + 1e-12


def test_certificate_rejects_bad_hypothesis_constant():
    mu = example1_field(0.3)
    with np.testing.assert_raises(ValueError):
        certify_extremal(mu, (qs_basis()[0], 0.2), N=4)
