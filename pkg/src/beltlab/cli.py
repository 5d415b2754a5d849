"""Batch front-end: JSON-configured runs with JSON/CSV artifacts.

Subcommands: certify, audit-constants, solve, family, separate, recover,
rho.  Every run reads one JSON config, writes its artifacts atomically
into the output directory, and reports through the exit code:

    0  success (certified / checks passed)
    1  inconclusive (a check did not close)
    2  configuration or precondition error
    3  numerical failure

Identical configs produce byte-identical artifacts: all summation orders
are fixed, any sampling is driven by the --seed flag, and no wall-clock
content enters the files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np
from scipy.special import roots_legendre

from . import geodesics
from .beltsolve import maximal_dilatation, solve, verify_triviality
from .domains import CellDecomposition, Disk, RoundAnnulus
from .elliptic import slit_modulus_R, slit_t_of_R
from .extremal import certify_extremal, four_limits, hamilton_preimage
from .fields import (
    BeltramiField,
    Piece,
    annulus_family,
    annulus_patch,
    annulus_shear_map,
    example1_field,
    piece_constants,
    radial_stretch,
    radial_stretch_map,
)
from .qdiff import qs_basis

EXIT_OK = 0
EXIT_INCONCLUSIVE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# serialization helpers


def _jsonify(obj):
    """Recursively convert numpy scalars/arrays and complex numbers into
    plain JSON values; complex numbers become [re, im] pairs."""
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return [c.real, c.imag]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: str, obj) -> None:
    """Atomic JSON write: temp file in the same directory, then rename."""
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(_jsonify(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def write_csv(path: str, header: list[str], rows) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    os.replace(tmp, path)


def load_config(path: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    return complex(v)


# ---------------------------------------------------------------------------
# field construction from JSON subtrees


def field_from_spec(spec: dict) -> BeltramiField:
    kind = spec.get("type")
    if kind == "radial_stretch":
        return radial_stretch(float(spec["K"]))
    if kind == "annulus_shear":
        return annulus_family(_as_complex(spec["lam"]), float(spec["inner"]))
    if kind == "annulus_patch":
        return annulus_patch(
            _as_complex(spec["lam"]),
            _as_complex(spec.get("center", 0.0)),
            float(spec.get("r_in", 0.0)),
            float(spec.get("r_out", 1.0)),
        )
    if kind == "example1":
        return example1_field(float(spec["k"]))
    raise ValueError(f"unknown field type {spec.get('type')!r}")


def region_from_spec(spec: dict):
    kind = spec.get("type")
    if kind == "disk":
        return Disk(_as_complex(spec["center"]), float(spec["radius"]))
    if kind == "round_annulus":
        return RoundAnnulus(_as_complex(spec["center"]), float(spec["r_in"]),
                            float(spec["r_out"]))
    raise ValueError(f"unknown region type {spec.get('type')!r}")


def _oracle_map(spec: dict):
    kind = spec.get("type")
    if kind == "radial_stretch":
        return radial_stretch_map(float(spec["K"]))
    if kind == "annulus_shear":
        return annulus_shear_map(_as_complex(spec["lam"]),
                                 float(spec["inner"]))
    return None


# ---------------------------------------------------------------------------
# certify


def _teich_lift_report(cfg: dict) -> tuple[int, dict, list]:
    k = float(cfg.get("k", 0.3))
    n = int(cfg.get("n", 5))
    tol = float(cfg.get("tol", 1e-3))
    if not 0.0 <= k < 1.0:
        raise ValueError("need 0 <= k < 1")
    decomp = CellDecomposition()
    phi = qs_basis()[0]
    f = hamilton_preimage(phi, decomp.step)

    def lift_fun(z, f=f, k=k):
        v = f(np.asarray(z, complex))
        return k * np.abs(v) / v

    mu = BeltramiField(
        pieces=[Piece(lambda z: np.ones(np.shape(z), dtype=bool), lift_fun, k)],
        label=f"teich_lift(k={k:g})",
        sup_override=k,
    )
    diag = four_limits(mu, phi, f, decomp, n)
    trace = [(m, float(np.real(diag.pairings[m])),
              float(np.imag(diag.pairings[m]))) for m in range(n + 1)]
    gap = k - max(t[1] for t in trace)
    report = {
        "mode": "teich_lift",
        "k": k,
        "n": n,
        "gap": gap,
        "tol": tol,
        "diagnostics": diag.trend_summary(),
        "verdict": "certified" if gap <= tol else "inconclusive",
    }
    code = EXIT_OK if gap <= tol else EXIT_INCONCLUSIVE
    return code, report, trace


def cmd_certify(cfg: dict, out_dir: str, seed: int) -> int:
    mode = cfg.get("mode", "example1")
    if mode == "teich_lift":
        code, report, trace = _teich_lift_report(cfg)
    elif mode == "example1":
        k = float(cfg.get("k", 0.3))
        N = int(cfg.get("N", 40))
        tol = float(cfg.get("tol", 0.02))
        mu = example1_field(float(cfg.get("field_k", k)))
        phi = qs_basis()[0]
        cert = certify_extremal(mu, (phi, k), N=N, tol=tol, seed=seed)
        trace = [(n, p.real, p.imag) for n, p in cert.pairing_trace]
        report = {
            "mode": "example1",
            "k": k,
            "N": N,
            "gap": cert.gap,
            "tol": tol,
            "verdict": cert.verdict,
            "quadrature_error": cert.quadrature_error,
            "diagnostics": cert.diagnostics.trend_summary(),
            "hypothesis_decreasing": cert.hypothesis.decreasing,
        }
        code = EXIT_OK if cert.verdict == "certified" else EXIT_INCONCLUSIVE
    else:
        raise ValueError(f"unknown certify mode {mode!r}")
    write_json(os.path.join(out_dir, "certificate.json"), report)
    write_csv(os.path.join(out_dir, "pairing_trace.csv"),
              ["n", "re_pairing", "im_pairing"], trace)
    return code


# ---------------------------------------------------------------------------
# constants audit


def _strip_cell_pairing(lam, height: float, c0: float, order: int = 48) -> complex:
    """Quadrature of the two-band shear coefficient against
    e^{i zeta} + c0 over one period cell of the strip."""
    lo, up = piece_constants(lam)
    R = float(height)
    x, w = roots_legendre(order)
    xi = np.pi * (x + 1.0)
    wxi = np.pi * w
    total = 0.0j
    for (a, b, c) in ((0.0, R / 2.0, lo), (R / 2.0, R, up)):
        eta = a + 0.5 * (b - a) * (x + 1.0)
        weta = 0.5 * (b - a) * w
        vals = np.exp(1j * xi[:, None] - eta[None, :]) + c0
        total += c * np.sum(wxi[:, None] * weta[None, :] * vals)
    return total


def audit_constants_report(cfg: dict) -> tuple[int, dict]:
    """Fit the scalar prefactors of the two pairing identities from
    quadrature and report them next to the displayed reference constants."""
    zero_field = bool(cfg.get("zero_field", False))
    height = float(cfg.get("height", 1.5))
    c0 = float(cfg.get("c0", 0.3))
    r = float(cfg.get("r", 0.5))
    panel = [_as_complex(v) for v in cfg.get(
        "lambda_panel", [0.4, 0.7, 1.0, 1.3, [0.6, 0.4]])]
    alphas_rel = [float(a) for a in cfg.get("alphas_rel", [0.02, 0.05, 0.1])]
    lam_annulus = _as_complex(cfg.get("lambda_annulus", 0.8))
    area = 2.0 * np.pi * height

    # lambda panel on the period cell: pairing / response should not move
    ratios = []
    for lam in panel:
        pair = 0.0j if zero_field else _strip_cell_pairing(lam, height, c0)
        ratios.append(pair / geodesics.shear_response(lam))
    ratios = np.array(ratios)
    mean_ratio = complex(np.mean(ratios))
    if zero_field:
        lam_residual = 0.0
        lam_prefactor = 0.0j
    else:
        lam_residual = float(np.max(np.abs(ratios - mean_ratio))
                             / max(np.abs(ratios)))
        lam_prefactor = mean_ratio / (c0 * area)

    # annulus pairings with moving simple pole: linear in the pole position
    alphas = np.array([a * r for a in alphas_rel])
    pairs = []
    for alpha in alphas:
        if zero_field:
            pairs.append(0.0j)
            continue
        pairs.append(geodesics.annulus_pairing_quadrature(
            lam_annulus, 0.0, r, 1.0, lambda z: 1.0 / (z - alpha)))
    pairs = np.array(pairs)
    A = np.column_stack([alphas, np.ones_like(alphas)])
    coef, *_ = np.linalg.lstsq(A, pairs, rcond=None)
    slope, intercept = complex(coef[0]), complex(coef[1])
    fit = A @ coef
    if zero_field:
        alpha_residual = 0.0
        slope_unit = 0.0j
    else:
        alpha_residual = float(np.max(np.abs(fit - pairs))
                               / max(np.abs(pairs)))
        slope_unit = slope / (2.0 * np.pi * math.log(1.0 / r)
                              * geodesics.shear_response(lam_annulus))

    sigma = geodesics.recovery_calibration()
    residual = max(lam_residual, alpha_residual)
    report = {
        "strip_cell": {
            "height": height,
            "zero_coefficient": c0,
            "area": area,
            "lambda_panel": panel,
            "ratios": ratios,
            "fitted_prefactor": lam_prefactor,
            "displayed_prefactor": 1.0,
            "fit_residual": lam_residual,
        },
        "annulus_pole": {
            "r": r,
            "lambda": lam_annulus,
            "alphas": alphas,
            "pairings": pairs,
            "fitted_slope": slope,
            "fitted_intercept": intercept,
            "fitted_slope_per_unit_response": slope_unit,
            "displayed_slope": -2j * np.pi * np.pi * (1.0 - r * r)
            * geodesics.shear_response(lam_annulus),
            "fit_residual": alpha_residual,
        },
        "recovery_calibration": sigma,
        "max_residual": residual,
        "passed": bool(residual <= 1e-6),
    }
    code = EXIT_OK if residual <= 1e-6 else EXIT_NUMERICAL
    return code, report


def cmd_audit_constants(cfg: dict, out_dir: str, seed: int) -> int:
    code, report = audit_constants_report(cfg)
    write_json(os.path.join(out_dir, "constants_audit.json"), report)
    return code


# ---------------------------------------------------------------------------
# solve


def cmd_solve(cfg: dict, out_dir: str, seed: int) -> int:
    field = field_from_spec(cfg["field"])
    n = int(cfg.get("n", 512))
    box = tuple(cfg["box"]) if "box" in cfg else None
    tol = float(cfg.get("tol", 1e-10))
    grid = solve(field, n=n, box=box, tol=tol)
    grid.save(os.path.join(out_dir, "solution.qcgrid"))
    write_csv(os.path.join(out_dir, "residuals.csv"), ["iteration", "residual"],
              [(i, r) for i, r in enumerate(grid.residuals)])

    report = {
        "n": n,
        "box": list(grid.box),
        "iterations": len(grid.residuals),
        "dilatation": maximal_dilatation(grid),
        "sup_norm": field.sup_norm(),
    }
    code = EXIT_OK
    oracle = _oracle_map(cfg["field"])
    if oracle is not None:
        rng = np.random.default_rng(seed)
        x0, x1, y0, y1 = grid.box
        pad = 0.1 * (x1 - x0)
        z = (rng.uniform(x0 + pad, x1 - pad, 4000)
             + 1j * rng.uniform(y0 + pad, y1 - pad, 4000))
        err = float(np.max(np.abs(grid.interp(z) - oracle(z))))
        otol = float(cfg.get("oracle_tol", 1e-3))
        report["oracle_error"] = err
        report["oracle_tol"] = otol
        if err > otol:
            code = EXIT_INCONCLUSIVE
    if "punctures" in cfg:
        pts = [_as_complex(p) for p in cfg["punctures"]]
        triv = verify_triviality(field, pts, grid,
                                 tol=float(cfg.get("triviality_tol", 1e-3)))
        report["triviality"] = triv.as_dict()
        if not triv.passed:
            code = max(code, EXIT_INCONCLUSIVE)
    write_json(os.path.join(out_dir, "solve_report.json"), report)
    return code


# ---------------------------------------------------------------------------
# family / separate / recover


def family_from_config(cfg: dict) -> geodesics.GeodesicFamily:
    kind = cfg.get("kind", "annulus")
    t0 = float(cfg.get("t0", 0.3))
    if kind == geodesics.STRING_KIND:
        seq = [_as_complex(v) for v in cfg["lambda_seq"]]
        K = float(cfg.get("K", geodesics.distinguished_parameter(t0)))
        return geodesics.build_infinite_family(seq, K, t0)
    U = region_from_spec(cfg["U"])
    base = example1_field(t0)
    return geodesics.build_family(kind, U, base, t0)


def cmd_family(cfg: dict, out_dir: str, seed: int) -> int:
    fam = family_from_config(cfg.get("family", cfg))
    report = {
        "kind": fam.kind,
        "t0": fam.t0,
        "lambda0": fam.lambda0,
        "closure_meets_punctures": fam.closure_meets_punctures,
        "lambda0_on_boundary": fam.lambda0_on_boundary,
    }
    if fam.kind == geodesics.STRING_KIND:
        report["L"] = fam.L
        report["K"] = fam.K
        report["pieces"] = len(fam.member_field.pieces)
        report["sup_norm"] = fam.member_field.sup_norm()
    else:
        rng = np.random.default_rng(seed)
        lams = geodesics.sample_lambda_prime(fam.t0, int(cfg.get("samples", 8)),
                                             rng)
        sups = [fam.member(lam).sup_norm() for lam in lams]
        report["sampled_parameters"] = lams
        report["sampled_sup_norms"] = sups
        report["max_sup_norm"] = max(sups)
        dev = abs(fam.member(fam.lambda0).sup_norm() - fam.t0)
        report["lambda0_sup_deviation"] = dev
    write_json(os.path.join(out_dir, "family_report.json"), report)
    return EXIT_OK


def cmd_separate(cfg: dict, out_dir: str, seed: int) -> int:
    fam = family_from_config(cfg["family"])
    lam1 = _as_complex(cfg["lambda1"])
    lam2 = _as_complex(cfg["lambda2"])
    thr = cfg.get("threshold")
    cert = geodesics.separate(fam, lam1, lam2,
                              threshold=None if thr is None else float(thr))
    if cert is None:
        report = {"certificate": None, "lambda1": lam1, "lambda2": lam2}
        code = EXIT_INCONCLUSIVE
    else:
        report = {
            "certificate": {
                "witness": cert.phi.label,
                "dictionary_index": cert.dictionary_index,
                "pairing": cert.pairing,
                "threshold": cert.threshold,
            },
            "lambda1": lam1,
            "lambda2": lam2,
        }
        code = EXIT_OK
    write_json(os.path.join(out_dir, "separation.json"), report)
    return code


def cmd_recover(cfg: dict, out_dir: str, seed: int) -> int:
    t0 = float(cfg.get("t0", 0.3))
    L = int(cfg.get("L", 4))
    if "lambda_seq" in cfg:
        seq = np.array([_as_complex(v) for v in cfg["lambda_seq"]])
    else:
        js = np.arange(-L, L + 1)
        seq = 0.3 + 0.1 * js / L + 0j
    K = geodesics.distinguished_parameter(t0)
    fam = geodesics.build_infinite_family(seq, K, t0)
    pairings = geodesics.forward_pairings(fam, L)
    recovered = geodesics.recover_parameters(pairings, L, fam)
    err = float(np.max(np.abs(recovered - seq)))
    tol = float(cfg.get("tol", 1e-6))
    report = {
        "L": L,
        "t0": t0,
        "true_parameters": seq,
        "recovered_parameters": recovered,
        "max_error": err,
        "tol": tol,
        "pairings": pairings,
        "calibration": geodesics.recovery_calibration(),
    }
    write_json(os.path.join(out_dir, "recovery.json"), report)
    return EXIT_OK if err <= tol else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# rho


def cmd_rho(cfg: dict, out_dir: str, seed: int) -> int:
    t = float(cfg.get("t", 0.5))
    R_values = [float(v) for v in cfg.get("R_values", [1.0, 2.0, 4.0])]
    tol = float(cfg.get("tol", 1e-6))
    rows = []
    worst = 0.0
    for R in R_values:
        t_R = slit_t_of_R(R)
        R_back = slit_modulus_R(t_R)
        delta = abs(R_back - R)
        worst = max(worst, delta)
        rows.append((R, t_R, R_back, delta))
    write_csv(os.path.join(out_dir, "modulus_roundtrip.csv"),
              ["R", "t", "R_back", "abs_delta"], rows)

    from .elliptic import elliptic_cover

    cover = elliptic_cover(t)
    etas = np.linspace(cover.R / 16.0, cover.R * 15.0 / 16.0,
                       int(cfg.get("n_axis", 33)))
    rho_axis, _ = cover.rho_and_deriv(1j * etas)
    write_csv(os.path.join(out_dir, "rho_axis.csv"),
              ["eta", "re_rho", "im_rho"],
              [(e, v.real, v.imag) for e, v in zip(etas, rho_axis)])
    report = {"t": t, "R": cover.R, "max_roundtrip_delta": worst, "tol": tol}
    write_json(os.path.join(out_dir, "rho_report.json"), report)
    return EXIT_OK if worst <= tol else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# driver


_COMMANDS = {
    "certify": cmd_certify,
    "audit-constants": cmd_audit_constants,
    "solve": cmd_solve,
    "family": cmd_family,
    "separate": cmd_separate,
    "recover": cmd_recover,
    "rho": cmd_rho,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="beltlab",
        description="Batch numerical laboratory for piecewise shear "
                    "coefficients on the integer-punctured plane.",
    )
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument("--threads", type=int, default=0,
                   help="worker thread cap (0 leaves the environment alone)")
    p.add_argument("--tol", type=float, default=None,
                   help="override the config tolerance")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads > 0:
        os.environ["OMP_NUM_THREADS"] = str(args.threads)
    try:
        cfg = load_config(args.config)
        if args.tol is not None:
            cfg["tol"] = args.tol
        os.makedirs(args.out, exist_ok=True)
        handler = _COMMANDS[args.command]
        return handler(cfg, args.out, args.seed)
    except (KeyError, TypeError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
