"""Write the example run configurations into configs/.

paper_regime.json: |alpha(sel)|^2 ~ 1e-11 and n0 chosen so that
n0 |alpha(sel)|^2 = 250 1/s, i.e. an enhanced rate of 1000 1/s and
T = 1 ms.  demo.json: strong coupling, useful for Monte Carlo runs.
"""

import argparse
import json
import math
from pathlib import Path

from twocrystal import build_coupling_table, dc_coefficients

PAPER_SELECTED_ETA = math.sqrt(1e-11)
PAPER_OTHER_ETAS = [(2.0e-6, 0.0), (0.0, 1.5e-6), (-1.0e-6, 0.5e-6)]


def paper_regime() -> dict:
    etas = [(PAPER_SELECTED_ETA, 0.0), *PAPER_OTHER_ETAS]
    coeffs = dc_coefficients(build_coupling_table([complex(*e) for e in etas], 0))
    n0 = 250.0 / abs(coeffs.alpha_sel) ** 2
    return {
        "schema_version": 1,
        "crystal": {"etas": [list(e) for e in etas], "selected_index": 0},
        "experiment": {"n0": n0, "sigma": 0.0, "phi": 0.0},
        "timeline": {"tau_pcoh": 1e-13, "n_refr": 1.9, "d_max": 1.5e-2, "duration": 100.0, "seed": 12345},
        "scan": {"delta_min": 0.0, "delta_max": 2 * math.pi, "steps": 32},
        "output": {"format": "json"},
    }


def demo() -> dict:
    return {
        "schema_version": 1,
        "crystal": {"etas": [[0.1, 0.0], [0.0, 0.2], [-0.05, 0.0]], "selected_index": 0},
        "experiment": {"n0": 1e6, "sigma": 0.0, "phi": 0.0},
        "timeline": {"tau_pcoh": 1e-13, "n_refr": 1.9, "d_max": 1.5e-2, "duration": 1.0, "seed": 7},
        "scan": {"delta_min": 0.0, "delta_max": 2 * math.pi, "steps": 64},
        "output": {"format": "json"},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default=Path(__file__).resolve().parent.parent / "configs", type=Path)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, doc in [("paper_regime", paper_regime()), ("demo", demo())]:
        path = args.outdir / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
