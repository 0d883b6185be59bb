"""Default cutoff decay studies with the collar / interior split.

    python3 scripts/cutoff_sweep.py --out runs/cutoff
"""

import argparse
from pathlib import Path

import numpy as np

from cayley_sobolev.cutoff import DEFAULT_FIRST, DEFAULT_SECOND, decay_study, fit_slope
from cayley_sobolev.io import decay_table_to_csv, write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/cutoff")
    ap.add_argument("--skip-second", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    studies = {"first": DEFAULT_FIRST} if args.skip_second else {
        "first": DEFAULT_FIRST, "second": DEFAULT_SECOND}
    for kind, params in studies.items():
        t = decay_study(kind, **params)
        decay_table_to_csv(t, out / f"{kind}_decay.csv")
        write_json(out / f"{kind}_decay.json", t.summary())
        print(f"{kind}-order, N={t.N}, r={t.r:g}")
        for name in t.records:
            print(f"  {name:9s} slope {t.slopes[name]:+.3f} (expected "
                  f"{t.expected_slopes[name]:+g}); interior slope "
                  f"{t.interior_slopes.get(name, np.nan):+.3f}")
        if kind == "second":
            L = np.log(np.asarray(t.R_list) / (3 * t.r))
            col, inn = np.asarray(t.collar["laplacian"]), np.asarray(t.interior["laplacian"])
            print("  R, log(R/3r), total, collar, interior, pointwise bound")
            for row in zip(t.R_list, L, t.records["laplacian"], col, inn, t.pointwise_bound):
                print("  " + "  ".join(f"{v:10.4g}" for v in row))
            print(f"  collar * L^2 ~ {np.round(col * L**2, 1)}; interior * L ~ "
                  f"{np.round(inn * L, 1)}")
            print(f"  collar slope vs log log: {fit_slope(t.loglog, col, 4):+.3f}")


if __name__ == "__main__":
    main()
