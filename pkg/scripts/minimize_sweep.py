"""K_est, residual and runtime against the truncation radius for both feasible sets.

    python3 scripts/minimize_sweep.py --radii 6 8 10 12 14 --out runs/sweep.csv
"""

import argparse
import time

import numpy as np

from cayley_sobolev.io import _write_rows
from cayley_sobolev.pde import lane_emden_pair
from cayley_sobolev.variational import MinimizationConfig, minimize_best_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radii", type=int, nargs="+", default=[6, 8, 10, 12, 14])
    ap.add_argument("--models", nargs="+", default=["green", "dirichlet"])
    ap.add_argument("--restarts", type=int, default=2)
    ap.add_argument("--out", default="runs/minimize_sweep.csv")
    args = ap.parse_args()
    rows = []
    for model in args.models:
        for R in args.radii:
            t = time.perf_counter()
            res = minimize_best_constant(MinimizationConfig(domain_radius=R, model=model,
                                                            restarts=args.restarts))
            secs = time.perf_counter() - t
            _, v = lane_emden_pair(res.ball, res.u_star, res.p)
            vmin = float(v[res.interior].min())
            rows.append([model, R, res.K_est, res.el_residual_normalized, vmin, secs])
            print(f"{model:9s} R={R:2d} K={res.K_est:.10f} residual={rows[-1][3]:.1e} "
                  f"min v={vmin:+.3e} {secs:6.1f} s", flush=True)
    _write_rows(args.out, ["model", "R", "K_est", "residual", "min_v_interior", "seconds"],
                rows)
    for model in args.models:
        K = np.array([r[2] for r in rows if r[0] == model])
        if len(K) > 1:
            print(f"{model}: relative change over the sweep {abs(K[-1] - K[0]) / K[0]:.2e}")


if __name__ == "__main__":
    main()
