"""Regenerate the frozen test fixtures.

Run from the repository root with the package installed:

    python3 tools/make_fixtures.py

Two files are produced under tests/fixtures/: a long-truncation oracle
run of the four extremality diagnostics for the reference field, and the
constants audit report with the recovery calibration scalar.  Both are
deterministic, so reruns must reproduce the committed files byte for
byte.
"""

import os

import numpy as np

from beltlab.cli import audit_constants_report, write_json
from beltlab.domains import CellDecomposition
from beltlab.extremal import four_limits, hamilton_preimage
from beltlab.fields import example1_field
from beltlab.qdiff import qs_basis

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")


def calibration_fixture(k: float = 0.3, N: int = 200) -> dict:
    mu = example1_field(k)
    phi = qs_basis()[0]
    decomp = CellDecomposition()
    f = hamilton_preimage(phi, decomp.step)
    diag = four_limits(mu, phi, f, decomp, N)
    re_pairs = np.real(diag.pairings)
    return {
        "k": k,
        "N": N,
        "diagnostics": diag.trend_summary(),
        "gap": float(k - np.max(re_pairs)),
        "theta_norm": diag.theta_norm,
        "tail_estimate": diag.tail_estimate,
        "checkpoints": {
            str(n): {
                "L1": float(diag.L1[n]),
                "L2": float(diag.L2[n]),
                "L3": float(diag.L3[n]),
                "L4": float(diag.L4[n]),
                "re_pairing": float(re_pairs[n]),
            }
            for n in (5, 10, 20, 40, 100, 200)
        },
    }


def main() -> None:
    os.makedirs(FIXTURE_DIR, exist_ok=True)
    write_json(os.path.join(FIXTURE_DIR, "thm_certificate_oracle.json"),
               calibration_fixture())
    code, audit = audit_constants_report({})
    if code != 0:
        raise RuntimeError("constants audit failed while making fixtures")
    write_json(os.path.join(FIXTURE_DIR, "constants_audit.json"), audit)
    print(f"fixtures written to {os.path.abspath(FIXTURE_DIR)}")


if __name__ == "__main__":
    main()
