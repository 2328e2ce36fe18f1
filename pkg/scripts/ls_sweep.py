"""Lopatinskii-Shapiro sweep: smallest singular value and reduced determinant.

    python3 scripts/ls_sweep.py --points 9
"""

import argparse

import numpy as np

from osmoflow.stokes import verify_lopatinskii


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=7, help="grid points per viscosity axis")
    ap.add_argument("--dim", type=int, default=1, choices=(1, 2), help="tangential dimension")
    args = ap.parse_args()

    nus = np.geomspace(0.1, 10, args.points)
    xi = [1.0] if args.dim == 1 else [0.6, 0.8]
    worst_det, worst_s = 0.0, np.inf
    print(f"{'nu+':>8} {'nu-':>8} {'min sv':>10} {'det M':>12} {'rel err':>9}")
    for a in nus:
        for b in nus:
            rep = verify_lopatinskii(a, b, xi)
            exact = -2 * (a + b) ** 2
            err = abs(rep.det_M / exact - 1)
            worst_det, worst_s = max(worst_det, err), min(worst_s, rep.min_singular_value)
            print(f"{a:8.3f} {b:8.3f} {rep.min_singular_value:10.4e} {rep.det_M:12.5f} {err:9.1e}")
    print(f"smallest singular value {worst_s:.4e}; largest relative det error {worst_det:.1e}")


if __name__ == "__main__":
    main()
