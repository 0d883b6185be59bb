"""Positive p-biharmonic ground state and Lane-Emden pair with a radial profile dump.

    python3 scripts/ground_state.py configs/z3_default.yaml --out runs/ground_state
"""

import argparse
from pathlib import Path

import numpy as np

from cayley_sobolev.cli import load_config, minimization_config
from cayley_sobolev.io import two_column, write_json
from cayley_sobolev.pde import ground_state_biharmonic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", default="runs/ground_state")
    args = ap.parse_args()
    gs = ground_state_biharmonic(minimization_config(load_config(args.config)))
    out = Path(args.out)
    write_json(out / "summary.json", gs.summary())
    d = gs.ball.distance
    radii = np.arange(d.max() + 1)
    two_column(out / "w_max_by_distance.dat", radii, [gs.w[d == k].max() for k in radii])
    two_column(out / "v_max_by_distance.dat", radii, [gs.v[d == k].max() for k in radii])
    for k, v in gs.summary().items():
        print(f"{k:26s} {v}")


if __name__ == "__main__":
    main()
