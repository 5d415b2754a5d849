"""End-to-end acceptance checks, one per advertised guarantee.

Each test prints a single summary line with the measured quantities next to
the tolerance it must meet, then asserts.  Run with -s to see the lines for
passing tests as well.
"""

import json
import os
import time

import numpy as np

from beltlab.beltsolve import solve, verify_triviality
from beltlab.cli import audit_constants_report
from beltlab.domains import (
    CellDecomposition,
    Disk,
    RoundAnnulus,
    exp_cover,
)
from beltlab.elliptic import elliptic_cover, slit_modulus_R, slit_t_of_R
from beltlab.extremal import certify_extremal, four_limits, hamilton_preimage
from beltlab.fields import (
    BeltramiField,
    Piece,
    annulus_family,
    annulus_patch,
    annulus_shear_map,
    example1_field,
    fd_beltrami,
    glue,
    pullback,
    radial_stretch,
    radial_stretch_map,
    strip_family,
    strip_shear_map,
)
from beltlab.geodesics import (
    build_family,
    build_infinite_family,
    default_dictionary,
    distinguished_parameter,
    forward_pairings,
    holomorphy_check,
    pairing_observable,
    patch_pairing,
    recover_parameters,
    sample_lambda_prime,
    separate,
)
from beltlab.qdiff import dictionary_differential, qs_basis
from beltlab.quadrature import contour_fourier

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
LAMBDAS = (0.5, 1.0, 1.0 + 0.5j)


def report(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def test_criterion_1_coefficient_closed_forms():
    t0 = time.time()
    rng = np.random.default_rng(1)
    worst = 0.0
    R = 2.0
    for lam in LAMBDAS:
        z = rng.uniform(-5, 5, 40) + 1j * np.concatenate(
            [rng.uniform(0.05, 0.9, 20), rng.uniform(1.1, 1.95, 20)])
        got = fd_beltrami(strip_shear_map(lam, R), z, h=1e-4)
        worst = max(worst, float(np.max(np.abs(got - strip_family(lam, R)(z)))))
    inner = 0.2
    r_mid = np.sqrt(inner)
    for lam in LAMBDAS:
        rr = np.concatenate([rng.uniform(inner + 0.01, r_mid - 0.01, 20),
                             rng.uniform(r_mid + 0.01, 0.99, 20)])
        z = rr * np.exp(2j * np.pi * rng.uniform(0, 1, 40))
        got = fd_beltrami(annulus_shear_map(lam, inner), z, h=1e-4)
        worst = max(worst, float(np.max(np.abs(got - annulus_family(lam, inner)(z)))))
    dt = time.time() - t0
    report(1, worst < 1e-6 and dt < 5.0,
           f"max fd deviation {worst:.3e} (tol 1e-6), runtime {dt:.1f}s (< 5s)")


def test_criterion_2_pullback_isometry():
    mu = annulus_family(1.0, 0.2)
    height = np.log(1.0 / 0.2)
    cover = exp_cover(height)
    mu_hat = pullback(mu, cover)
    rng = np.random.default_rng(2)
    zeta = (rng.uniform(-np.pi, np.pi, 10_000)
            + 1j * rng.uniform(0.05, height - 0.05, 10_000))
    sup_down = float(np.max(np.abs(mu(cover.fun(zeta)))))
    sup_up = float(np.max(np.abs(mu_hat(zeta))))
    diff = abs(sup_down - sup_up)
    report(2, diff < 1e-12,
           f"sup-norm disagreement {diff:.3e} on 10^4 samples (tol 1e-12)")


def test_criterion_3_constants_audit():
    t0 = time.time()
    code, rep = audit_constants_report({})
    ratios = np.asarray(rep["strip_cell"]["ratios"], dtype=complex)
    if ratios.ndim == 2:
        ratios = ratios[:, 0] + 1j * ratios[:, 1]
    spread = float(np.max(np.abs(ratios - ratios.mean())) / np.abs(ratios.mean()))
    lin_res = abs(complex(rep["annulus_pole"]["fit_residual"]))
    ref = json.load(open(os.path.join(FIXTURES, "constants_audit.json")))
    pref = complex(*ref["strip_cell"]["fitted_prefactor"])
    got_pref = complex(rep["strip_cell"]["fitted_prefactor"])
    recorded = abs(pref - got_pref) < 1e-12
    dt = time.time() - t0
    ok = (code == 0 and spread < 1e-6 and lin_res < 1e-6 and recorded
          and dt < 30.0)
    report(3, ok,
           f"lambda-panel spread {spread:.3e}, pole-shift linearity residual "
           f"{lin_res:.3e} (tol 1e-6), prefactor {got_pref.real:+.12f} "
           f"recorded in fixtures, runtime {dt:.1f}s (< 30s)")


def test_criterion_4_certificate_with_oracle_thresholds():
    t0 = time.time()
    k = 0.3
    cert = certify_extremal(example1_field(k), (qs_basis()[0], k), N=40)
    d = cert.diagnostics
    vals = {
        "L1": abs(d.L1[40] - k),
        "L2": d.L2[40],
        "L3": d.L3[40],
        "L4": abs(d.L4[40] - 1.0),
    }
    fix = json.load(open(os.path.join(FIXTURES, "thm_certificate_oracle.json")))
    ck = fix["checkpoints"]["40"]
    # the deep oracle run integrates over a wider truncated surface, so its
    # checkpoint values differ from a depth-40 run at the tail scale only
    consistent = max(
        abs(ck["L1"] - d.L1[40]), abs(ck["L2"] - d.L2[40]),
        abs(ck["L3"] - d.L3[40]), abs(ck["L4"] - d.L4[40]),
    ) < 1e-5
    calibrated = (abs(ck["L1"] - k) <= 0.02 and ck["L2"] <= 0.05
                  and ck["L3"] <= 0.05 and abs(ck["L4"] - 1.0) <= 0.05)

    decomp = CellDecomposition()
    qs_r, _ = qs_basis()
    f = hamilton_preimage(qs_r, decomp.step)

    def lift_fun(z):
        v = f(np.asarray(z, complex))
        return k * np.abs(v) / v

    lift = BeltramiField(
        pieces=[Piece(lambda z: np.ones(np.shape(z), dtype=bool), lift_fun, k)],
        sup_override=k,
    )
    dl = four_limits(lift, qs_r, f, decomp, 5)
    lift_gap = k - float(np.max(np.real(dl.pairings)))
    dt = time.time() - t0
    ok = (vals["L1"] <= 0.02 and vals["L2"] <= 0.05 and vals["L3"] <= 0.05
          and vals["L4"] <= 0.05 and cert.gap <= 0.02
          and cert.verdict == "certified" and consistent and calibrated
          and lift_gap <= 1e-3 and dt < 300.0)
    report(4, ok,
           f"|L1-k|={vals['L1']:.4f} (<=0.02), L2={vals['L2']:.4f} "
           f"L3={vals['L3']:.4f} |L4-1|={vals['L4']:.4f} (<=0.05), "
           f"gap={cert.gap:.4f} (<=0.02), oracle-consistent={consistent}, "
           f"lift gap={lift_gap:.2e} (<=1e-3), runtime {dt:.0f}s (< 300s)")


def test_criterion_5_solver_oracles():
    times = []
    errs = {}
    ratio_ok = True
    for name, field, oracle in (
        ("stretch", radial_stretch(2.0), radial_stretch_map(2.0)),
        ("shear", annulus_family(1.0, 0.2), annulus_shear_map(1.0, 0.2)),
    ):
        t0 = time.time()
        grid = solve(field, n=1024, box=(-2.0, 2.0, -2.0, 2.0))
        times.append(time.time() - t0)
        z = grid.nodes()
        keep = (np.abs(np.real(z)) < 1.6) & (np.abs(np.imag(z)) < 1.6)
        errs[name] = float(np.max(np.abs(grid.f[keep] - oracle(z[keep]))))
        res = grid.residuals
        bound = field.sup_norm() + 0.05
        ratio_ok &= all(res[i + 1] / res[i] <= bound
                        for i in range(len(res) - 1))
    t0 = time.time()
    patch = annulus_patch(0.9, 1.5, 0.7, 0.95)
    grid = solve(patch, n=512, box=(-1.5, 4.5, -3.0, 3.0))
    times.append(time.time() - t0)
    triv = verify_triviality(patch, np.arange(-1, 5), grid, tol=1e-3)
    ok = (errs["stretch"] < 1e-3 and errs["shear"] < 1e-3 and ratio_ok
          and triv.passed and max(times) < 120.0)
    report(5, ok,
           f"stretch err {errs['stretch']:.2e}, shear err {errs['shear']:.2e}"
           f" (tol 1e-3), residual ratios bounded={ratio_ok}, puncture fix "
           f"{triv.puncture_max:.2e} (tol 1e-3), slowest solve "
           f"{max(times):.0f}s (< 120s)")


def test_criterion_6_patch_independence_at_punctures():
    base = example1_field(0.3)
    U = RoundAnnulus(1.5, 0.7, 0.95)
    punctures = np.arange(-2, 6, dtype=float)
    images = []
    for lam in (0.9, 0.4 + 0.5j):
        mu = glue(base, annulus_patch(lam, 1.5, 0.7, 0.95), U)
        grid = solve(mu, n=1024, box=(-2.5, 5.5, -4.0, 4.0))
        images.append(grid.interp(punctures))
    dis = float(np.max(np.abs(images[0] - images[1])))
    report(6, dis < 1e-3,
           f"max puncture disagreement between the two patched solutions "
           f"{dis:.2e} (tol 1e-3)")


def test_criterion_7_separation_certificates():
    fam = build_family("annulus", RoundAnnulus(1.5, 0.7, 0.95),
                       example1_field(0.3), 0.3)
    rng = np.random.default_rng(17)
    lams = sample_lambda_prime(fam.t0, 40, rng)
    separated = 0
    for lam1, lam2 in lams.reshape(20, 2):
        cert = separate(fam, lam1, lam2)
        if cert is not None and abs(cert.pairing) > cert.threshold:
            separated += 1
    worst_equal = max(
        abs(patch_pairing(fam, 0.37, phi) - patch_pairing(fam, 0.37, phi))
        for phi in default_dictionary(4))
    none_for_equal = separate(fam, 0.37, 0.37) is None
    ok = separated == 20 and none_for_equal and worst_equal < 1e-10
    report(7, ok,
           f"{separated}/20 random pairs separated above 1e-8*t0*q_norm; "
           f"equal pair -> none with max pairing {worst_equal:.1e} (< 1e-10)")


def test_criterion_8_absolutely_constant_member():
    fam = build_family("annulus", RoundAnnulus(1.5, 0.7, 0.95),
                       example1_field(0.3), 0.3)
    mu = fam.distinguished_member()
    rng = np.random.default_rng(8)
    z = rng.uniform(-1, 4, 1400) + 1j * rng.uniform(-2, 2, 1400)
    z = z[fam.domain.contains(z)][:1000]
    assert z.size == 1000
    dev = float(np.max(np.abs(np.abs(mu(z)) - fam.t0)))
    sups = [fam.member(lam).sup_norm()
            for lam in sample_lambda_prime(fam.t0, 20, rng)]
    sup_ok = max(sups) <= fam.t0 + 1e-12
    report(8, dev < 1e-10 and sup_ok,
           f"distinguished-member modulus deviation {dev:.1e} at 10^3 "
           f"samples (tol 1e-10); sampled member sup max {max(sups):.12f} "
           f"<= t0 + 1e-12")


def test_criterion_9_recovery_roundtrip():
    t0 = time.time()
    L = 4
    js = np.arange(-L, L + 1)
    seq = 0.3 + 0.1 * js / L + 0j
    K = distinguished_parameter(0.3)
    fam = build_infinite_family(seq, K, 0.3)
    rec = recover_parameters(forward_pairings(fam, L), L, fam)
    err = float(np.max(np.abs(rec - seq)))
    dt = time.time() - t0
    report(9, err < 1e-6 and dt < 120.0,
           f"max recovery error {err:.2e} over 9 annuli (tol 1e-6), "
           f"runtime {dt:.0f}s (< 120s)")


def test_criterion_10_parameter_holomorphy():
    fam = build_family("annulus", RoundAnnulus(1.5, 0.7, 0.95),
                       example1_field(0.5), 0.5)
    obs = pairing_observable(fam, dictionary_differential(0, 3, "alpha"))
    worst_cr = worst_circ = 0.0
    for c in (0.5, 0.8, 1.0):
        rep = holomorphy_check(obs, c, 0.1)
        worst_cr = max(worst_cr, rep.cr_residual)
        worst_circ = max(worst_circ, rep.circle_defect)
    report(10, worst_cr < 1e-6 and worst_circ < 1e-8,
           f"CR residual {worst_cr:.2e} (tol 1e-6), circle-mean defect "
           f"{worst_circ:.2e} (tol 1e-8) at centers 0.5, 0.8, 1.0")


def test_criterion_11_elliptic_cover():
    worst = max(abs(slit_modulus_R(slit_t_of_R(R)) - R) for R in (1.0, 2.0, 4.0))
    cover = elliptic_cover(0.5)
    ones = lambda x: np.ones(np.shape(x))
    mean = cover.slit_mean(ones)
    positive = float(np.real(mean)) > 0.0 and abs(np.imag(mean)) < 1e-10
    got = contour_fourier(cover.lift(ones), mode="horizontal",
                          height=cover.R / 2.0, period=2 * np.pi, m=64)
    cross = abs(got - mean)
    report(11, worst < 1e-6 and positive and cross < 1e-4,
           f"modulus roundtrip {worst:.2e} (tol 1e-6), slit mean "
           f"{float(np.real(mean)):.6f} > 0, contour cross-check {cross:.2e} "
           f"(tol 1e-4)")
